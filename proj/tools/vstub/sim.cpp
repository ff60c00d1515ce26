#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <deque>
#include <cctype>
#include <cstring>
#include <map>
#include <optional>
#include <set>

#include "vstub.hpp"

namespace vstub {

namespace {

using u64 = std::uint64_t;
using i64 = std::int64_t;

u64 mask_of(int w) { return w >= 64 ? ~0ULL : (1ULL << w) - 1; }

i64 sext(u64 v, int w) {
  if (w >= 64) return static_cast<i64>(v);
  const u64 sign = 1ULL << (w - 1);
  v &= mask_of(w);
  return static_cast<i64>((v ^ sign) - sign);
}

u64 extend(u64 v, int from, int to, bool sgn) {
  if (sgn && from < to) return static_cast<u64>(sext(v, from)) & mask_of(to);
  return v & mask_of(std::min(from, to));
}

// Runtime failure inside the simulation.
struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Finish {
  int code;
};

// ---- elaborated model ----

struct Waiter {
  int proc;
  u64 gen;
  EventTerm::Edge edge;
};

struct Signal {
  std::string name;
  int width = 1;
  int msb = 0, lsb = 0;
  bool is_signed = false;
  u64 val = 0;
  bool is_mem = false;
  i64 mem_lo = 0, mem_hi = 0;
  std::vector<u64> mem;
  std::vector<Waiter> waiters;
  std::vector<int> fanout;  // continuous-assign processes reading this signal
};

struct RE {
  enum class K { Const, Str, Sig, MemRd, Bit, Part, IdxPart, Concat, Repl, Un, Bin, Tern, Func, Sys } k = K::Const;
  int w = 32;
  bool sgn = false;
  u64 c = 0;
  u64 dontcare = 0;  // Const: z/? digits
  u64 xmask = 0;
  std::string op;  // Un/Bin/Sys name
  std::string str;
  int sig = -1;
  int fn = -1;
  int msb = 0, lsb = 0;  // index mapping for Bit / IdxPart
  int lo = 0;            // Part: constant low position
  bool down = false;
  std::vector<RE*> a;
};

struct LVPart {
  int sig = -1;
  RE* mem_idx = nullptr;
  enum class K { Whole, Bit, Part, IdxPart } k = K::Whole;
  RE* idx = nullptr;
  int lo = 0;
  int w = 1;
  int msb = 0, lsb = 0;
  bool down = false;
};

struct LV {
  std::vector<LVPart> parts;  // most significant first
  int w = 0;
};

struct Target {
  int sig;
  i64 mem_index;  // -1: not a memory
  int lo;
  int w;
};

struct Op {
  enum class K { Assign, Nba, Jmp, Jz, Case, Delay, Wait, Sys, RepInit, RepDec, Halt } k = K::Halt;
  int line = 0;
  LV* lv = nullptr;
  RE* e = nullptr;
  int target = 0;
  int slot = 0;
  int case_kind = 0;
  std::vector<RE*> labels;
  std::vector<std::pair<int, EventTerm::Edge>> terms;
  std::string name;
  std::vector<RE*> args;
  std::string scope;
};

struct Code {
  std::vector<Op> ops;
  int slots = 0;
  std::string file;
};

struct Proc {
  Code* code = nullptr;
  int pc = 0;
  std::vector<i64> slots;
  u64 gen = 0;
  bool queued = false;
  bool done = false;
  // continuous assignment
  LV* lv = nullptr;
  RE* rhs = nullptr;
};

struct Func {
  std::string name;
  int ret = -1;
  std::vector<int> args;
  Code code;
  bool compiled = false;
  int depth = 0;
};

struct Scope {
  std::string path;
  const Module* mod = nullptr;
  std::map<std::string, int> sigs;
  std::map<std::string, Value> params;
  std::map<std::string, int> funcs;
  const Scope* parent = nullptr;
  std::map<std::string, const Decl*> decls;
};

const std::set<std::string> kSysTasks = {"$display", "$write",    "$strobe",   "$finish",   "$stop",
                                         "$fatal",   "$error",    "$warning",  "$info",     "$dumpfile",
                                         "$dumpvars", "$timeformat", "$displayb", "$displayh", "$monitor"};
const std::set<std::string> kSysFuncs = {"$time", "$stime", "$realtime", "$random", "$urandom",
                                         "$signed", "$unsigned", "$clog2"};

class Sim {
 public:
  explicit Sim(const std::vector<Module>& modules) {
    for (const auto& m : modules) {
      if (!modules_.emplace(m.name, &m).second) throw Diag(m.file, m.line, "module " + m.name + " redefined");
    }
  }

  void elaborate() {
    std::set<std::string> used;
    for (const auto& [name, m] : modules_) {
      for (const auto& inst : m->insts) used.insert(inst.module);
    }
    std::vector<const Module*> tops;
    for (const auto& [name, m] : modules_) {
      if (!used.count(name)) tops.push_back(m);
    }
    if (tops.empty()) throw Diag("<input>", 0, "no top-level module");
    for (const Module* m : tops) instantiate(*m, m->name, {}, 0);
  }

  int run() {
    for (std::size_t i = 0; i < procs_.size(); ++i) {
      procs_[i].queued = true;
      active_.push_back(static_cast<int>(i));
    }
    try {
      while (true) {
        while (true) {
          while (!active_.empty()) {
            const int p = active_.front();
            active_.pop_front();
            procs_[p].queued = false;
            step(p);
          }
          if (!nba_.empty()) {
            auto pending = std::move(nba_);
            nba_.clear();
            for (const auto& [t, v] : pending) write_target(t, v);
            continue;
          }
          if (!inactive_.empty()) {
            for (const int p : inactive_) activate(p);
            inactive_.clear();
            continue;
          }
          break;
        }
        if (future_.empty()) break;
        auto it = future_.begin();
        now_ = it->first;
        for (const int p : it->second) activate(p);
        future_.erase(it);
      }
    } catch (const Finish& f) {
      flush();
      return f.code;
    } catch (const SimError& e) {
      flush();
      std::fprintf(stderr, "vstub: runtime error: %s\n", e.what());
      return 2;
    }
    flush();
    return 0;
  }

 private:
  // ---- arenas ----
  RE* new_re(RE::K k) {
    res_.push_back(std::make_unique<RE>());
    res_.back()->k = k;
    return res_.back().get();
  }
  LV* new_lv() {
    lvs_.push_back(std::make_unique<LV>());
    return lvs_.back().get();
  }

  // ---- elaboration ----
  [[noreturn]] static void fail(const Scope& s, int line, const std::string& msg) {
    throw Diag(s.mod->file, line, msg);
  }

  Value const_eval(const Expr& e, Scope& s) {
    const RE* r = resolve(e, s, nullptr, true);
    Value v;
    v.bits = eval(*r, r->w, r->sgn);
    v.width = r->w;
    v.is_signed = r->sgn;
    v.sized = true;
    return v;
  }

  i64 const_int(const Expr& e, Scope& s) {
    const Value v = const_eval(e, s);
    return v.is_signed ? sext(v.bits, v.width) : static_cast<i64>(v.bits);
  }

  int add_signal(Scope& s, const std::string& name, int width, int msb, int lsb, bool sgn, int line) {
    if (width < 1 || width > 64) fail(s, line, "signal " + name + " has unsupported width " + std::to_string(width));
    Signal sig;
    sig.name = s.path + "." + name;
    sig.width = width;
    sig.msb = msb;
    sig.lsb = lsb;
    sig.is_signed = sgn;
    sigs_.push_back(std::move(sig));
    const int id = static_cast<int>(sigs_.size()) - 1;
    s.sigs[name] = id;
    return id;
  }

  int declare(Scope& s, const Decl& d) {
    int msb = 0, lsb = 0;
    if (d.is_integer) {
      msb = 31;
    } else if (d.msb) {
      msb = static_cast<int>(const_int(*d.msb, s));
      lsb = static_cast<int>(const_int(*d.lsb, s));
    }
    const int width = std::abs(msb - lsb) + 1;
    const int id = add_signal(s, d.name, width, msb, lsb, d.is_signed, d.line);
    if (d.mem_a) {
      Signal& sig = sigs_[id];
      const i64 a = const_int(*d.mem_a, s);
      const i64 b = const_int(*d.mem_b, s);
      sig.is_mem = true;
      sig.mem_lo = std::min(a, b);
      sig.mem_hi = std::max(a, b);
      if (sig.mem_hi - sig.mem_lo >= (1 << 24)) fail(s, d.line, "memory " + d.name + " is too large");
      sig.mem.assign(static_cast<std::size_t>(sig.mem_hi - sig.mem_lo + 1), 0);
    }
    return id;
  }

  Scope& instantiate(const Module& m, const std::string& path, const std::map<std::string, Value>& overrides,
                     int depth) {
    scopes_.push_back(std::make_unique<Scope>());
    Scope& s = *scopes_.back();
    s.path = path;
    s.mod = &m;
    if (depth > 64) fail(s, m.line, "instantiation too deep (recursive module?)");

    for (const auto& p : m.params) {
      const auto ov = overrides.find(p.name);
      s.params[p.name] = (!p.local && ov != overrides.end()) ? ov->second : const_eval(*p.value, s);
    }
    for (const auto& [name, v] : overrides) {
      if (!s.params.count(name)) fail(s, m.line, "module " + m.name + " has no parameter " + name);
    }

    // merge split declarations such as "output q; reg q;"
    std::map<std::string, Decl> merged;
    std::vector<std::string> order;
    for (const auto& d : m.decls) {
      auto it = merged.find(d.name);
      if (it == merged.end()) {
        Decl copy;
        copy.name = d.name;
        copy.line = d.line;
        copy.dir = d.dir;
        copy.is_var = d.is_var;
        copy.is_integer = d.is_integer;
        copy.is_signed = d.is_signed;
        merged.emplace(d.name, std::move(copy));
        order.push_back(d.name);
        it = merged.find(d.name);
      } else {
        if (d.dir != Dir::None && it->second.dir != Dir::None) fail(s, d.line, "port " + d.name + " redeclared");
        if (d.dir == Dir::None && it->second.dir == Dir::None) fail(s, d.line, d.name + " redeclared");
        if (d.dir != Dir::None) it->second.dir = d.dir;
        it->second.is_var = it->second.is_var || d.is_var;
        it->second.is_integer = it->second.is_integer || d.is_integer;
        it->second.is_signed = it->second.is_signed || d.is_signed;
      }
      s.decls[d.name] = &d;
    }
    for (const auto& name : order) {
      // take range/memory/init from whichever declaration carries them
      Decl& md = merged[name];
      for (const auto& d : m.decls) {
        if (d.name != name) continue;
        if (d.msb && !md.msb) {
          md.msb = clone_expr(*d.msb);
          md.lsb = clone_expr(*d.lsb);
        }
        if (d.mem_a && !md.mem_a) {
          md.mem_a = clone_expr(*d.mem_a);
          md.mem_b = clone_expr(*d.mem_b);
        }
      }
      if (s.params.count(name)) fail(s, md.line, name + " is already a parameter");
      declare(s, md);
    }
    for (const auto& port : m.port_order) {
      const auto it = merged.find(port);
      if (it == merged.end() || it->second.dir == Dir::None) {
        fail(s, m.line, "port " + port + " of module " + m.name + " has no direction declaration");
      }
    }
    dirs_[&s] = {};
    for (const auto& [name, d] : merged) dirs_[&s][name] = d.dir;

    for (const auto& f : m.funcs) declare_function(s, f);
    for (const auto& f : m.funcs) compile_function(s, f);

    for (const auto& d : m.decls) {
      if (!d.init) continue;
      const int id = s.sigs.at(d.name);
      if (merged[d.name].is_var) {
        const Value v = const_eval(*d.init, s);
        sigs_[id].val = extend(v.bits, v.width, sigs_[id].width, v.is_signed) & mask_of(sigs_[id].width);
      } else {
        Expr ref;
        ref.k = Expr::K::Ref;
        ref.line = d.line;
        ref.name = d.name;
        add_cont(s, ref, *d.init, s, d.line);
      }
    }
    for (const auto& a : m.assigns) add_cont(s, *a.lhs, *a.rhs, s, a.line);
    for (const auto& p : m.procs) add_process(s, p);
    for (const auto& inst : m.insts) add_instance(s, inst, depth);
    return s;
  }

  static ExprP clone_expr(const Expr& e) {
    auto c = std::make_unique<Expr>();
    c->k = e.k;
    c->line = e.line;
    c->name = e.name;
    c->num = e.num;
    c->str = e.str;
    for (const auto& sel : e.sels) {
      c->sels.push_back(Selector{sel.kind, sel.e1 ? clone_expr(*sel.e1) : nullptr,
                                 sel.e2 ? clone_expr(*sel.e2) : nullptr});
    }
    for (const auto& a : e.a) c->a.push_back(a ? clone_expr(*a) : nullptr);
    return c;
  }

  void add_instance(Scope& parent, const Instance& inst, int depth) {
    const auto mit = modules_.find(inst.module);
    if (mit == modules_.end()) fail(parent, inst.line, "unknown module '" + inst.module + "'");
    const Module& child = *mit->second;

    std::map<std::string, Value> overrides;
    std::vector<const Param*> overridable;
    for (const auto& p : child.params) {
      if (!p.local) overridable.push_back(&p);
    }
    std::size_t positional = 0;
    for (const auto& [name, e] : inst.params) {
      if (name.empty()) {
        if (positional >= overridable.size()) fail(parent, inst.line, "too many parameter overrides");
        overrides[overridable[positional++]->name] = const_eval(*e, parent);
      } else {
        overrides[name] = const_eval(*e, parent);
      }
    }
    Scope& cs = instantiate(child, parent.path + "." + inst.name, overrides, depth + 1);

    const bool named = !inst.conns.empty() && !inst.conns.front().port.empty();
    if (!named && inst.conns.size() > child.port_order.size() &&
        !(inst.conns.size() == 1 && !inst.conns[0].expr)) {
      fail(parent, inst.line, "too many port connections for " + inst.module);
    }
    for (std::size_t i = 0; i < inst.conns.size(); ++i) {
      const Connection& c = inst.conns[i];
      if (!c.expr) continue;
      if (named == c.port.empty()) fail(parent, inst.line, "cannot mix named and positional connections");
      const std::string port = named ? c.port : child.port_order[i];
      if (std::find(child.port_order.begin(), child.port_order.end(), port) == child.port_order.end()) {
        fail(parent, inst.line, "module " + inst.module + " has no port " + port);
      }
      const int child_sig = cs.sigs.at(port);
      const Dir dir = dirs_[&cs][port];
      Expr port_ref;
      port_ref.k = Expr::K::Ref;
      port_ref.line = inst.line;
      port_ref.name = port;
      if (dir == Dir::In) {
        add_cont(cs, port_ref, *c.expr, parent, inst.line);
      } else {
        if (c.expr->k == Expr::K::Ref && c.expr->sels.empty() && !lookup_sig(parent, c.expr->name) &&
            !lookup_param(parent, c.expr->name)) {
          // implicit net
          add_signal(parent, c.expr->name, sigs_[child_sig].width, sigs_[child_sig].width - 1, 0, false,
                     inst.line);
        }
        add_cont(parent, *c.expr, port_ref, cs, inst.line);
      }
    }
  }

  std::optional<int> lookup_sig(const Scope& s, const std::string& name) const {
    for (const Scope* p = &s; p; p = p->parent) {
      if (const auto it = p->sigs.find(name); it != p->sigs.end()) return it->second;
      if (p->params.count(name)) return std::nullopt;
    }
    return std::nullopt;
  }

  const Value* lookup_param(const Scope& s, const std::string& name) const {
    for (const Scope* p = &s; p; p = p->parent) {
      if (p->sigs.count(name)) return nullptr;
      if (const auto it = p->params.find(name); it != p->params.end()) return &it->second;
    }
    return nullptr;
  }

  std::optional<int> lookup_func(const Scope& s, const std::string& name) const {
    for (const Scope* p = &s; p; p = p->parent) {
      if (const auto it = p->funcs.find(name); it != p->funcs.end()) return it->second;
    }
    return std::nullopt;
  }

  void declare_function(Scope& s, const Function& f) {
    if (s.funcs.count(f.name)) fail(s, f.line, "function " + f.name + " redefined");
    funcs_.push_back(std::make_unique<Func>());
    Func& fn = *funcs_.back();
    fn.name = f.name;
    fn.code.file = s.mod->file;
    s.funcs[f.name] = static_cast<int>(funcs_.size()) - 1;

    scopes_.push_back(std::make_unique<Scope>());
    Scope& fs = *scopes_.back();
    fs.path = s.path + "." + f.name;
    fs.mod = s.mod;
    fs.parent = &s;
    int msb = 0, lsb = 0;
    if (f.is_integer) {
      msb = 31;
    } else if (f.msb) {
      msb = static_cast<int>(const_int(*f.msb, s));
      lsb = static_cast<int>(const_int(*f.lsb, s));
    }
    fn.ret = add_signal(fs, f.name, std::abs(msb - lsb) + 1, msb, lsb, f.is_signed, f.line);
    for (const auto& d : f.decls) declare(fs, d);
    for (const auto& in : f.inputs) fn.args.push_back(fs.sigs.at(in));
    func_scopes_[&f] = &fs;
  }

  void compile_function(Scope&, const Function& f) {
    Scope& fs = *func_scopes_.at(&f);
    Func& fn = *funcs_[static_cast<std::size_t>(fs.parent->funcs.at(f.name))];
    Compiler c{*this, fn.code, fs, true};
    c.stmt(f.body.get());
    c.emit(Op::K::Halt, f.line);
    fn.compiled = true;
  }

  void add_cont(Scope& lscope, const Expr& lhs, const Expr& rhs, Scope& rscope, int line) {
    Proc p;
    std::set<int> reads;
    p.lv = resolve_lv(lhs, lscope);
    p.rhs = resolve(rhs, rscope, &reads, false);
    (void)line;
    procs_.push_back(std::move(p));
    const int id = static_cast<int>(procs_.size()) - 1;
    for (const int r : reads) sigs_[r].fanout.push_back(id);
  }

  void add_process(Scope& s, const Process& p) {
    codes_.push_back(std::make_unique<Code>());
    Code& code = *codes_.back();
    code.file = s.mod->file;
    Compiler c{*this, code, s, false};
    int start = 0;
    if (p.initial) {
      c.stmt(p.body.get());
      c.emit(Op::K::Halt, p.line);
    } else if (p.comb) {
      Stmt wrapper;
      wrapper.k = Stmt::K::Event;
      wrapper.line = p.line;
      wrapper.star = true;
      c.event(wrapper, p.body.get());
      c.jump_to(0, p.line);
      start = 1;
    } else {
      c.stmt(p.body.get());
      c.jump_to(0, p.line);
      const Stmt* b = p.body.get();
      if (b && b->k == Stmt::K::Event) {
        bool edgeless = true;
        for (const auto& t : b->events) edgeless = edgeless && t.edge == EventTerm::Edge::Any;
        if (edgeless) start = 1;
      }
    }
    Proc proc;
    proc.code = &code;
    proc.pc = start;
    proc.slots.assign(static_cast<std::size_t>(code.slots), 0);
    procs_.push_back(std::move(proc));
  }

  // Resolves an expression in scope. reads collects signals read; in
  // constant mode only parameters and literals are allowed.
  RE* resolve(const Expr& e, Scope& s, std::set<int>* reads, bool constant) {
    switch (e.k) {
      case Expr::K::Num: {
        RE* r = new_re(RE::K::Const);
        r->c = e.num.bits;
        r->w = e.num.width;
        r->sgn = e.num.is_signed;
        r->dontcare = e.num.dontcare;
        r->xmask = e.num.xmask;
        return r;
      }
      case Expr::K::Str: {
        RE* r = new_re(RE::K::Str);
        r->str = e.str;
        r->w = std::max<int>(8, static_cast<int>(std::min<std::size_t>(8, e.str.size())) * 8);
        for (const char ch : e.str) r->c = (r->c << 8) | static_cast<unsigned char>(ch);
        return r;
      }
      case Expr::K::Ref: return resolve_ref(e, s, reads, constant);
      case Expr::K::Concat: {
        RE* r = new_re(RE::K::Concat);
        r->w = 0;
        for (const auto& a : e.a) {
          r->a.push_back(resolve(*a, s, reads, constant));
          r->w += r->a.back()->w;
        }
        if (r->w > 64) fail(s, e.line, "concatenation wider than 64 bits");
        return r;
      }
      case Expr::K::Repl: {
        RE* r = new_re(RE::K::Repl);
        const i64 n = const_int(*e.a[0], s);
        if (n < 1) fail(s, e.line, "replication count must be positive");
        RE* inner = resolve(*e.a[1], s, reads, constant);
        r->a.push_back(inner);
        r->c = static_cast<u64>(n);
        if (n * inner->w > 64) fail(s, e.line, "replication wider than 64 bits");
        r->w = static_cast<int>(n * inner->w);
        return r;
      }
      case Expr::K::Unary: {
        RE* r = new_re(RE::K::Un);
        r->op = e.name;
        r->a.push_back(resolve(*e.a[0], s, reads, constant));
        if (e.name == "~" || e.name == "-" || e.name == "+") {
          r->w = r->a[0]->w;
          r->sgn = r->a[0]->sgn;
        } else {
          r->w = 1;
        }
        return r;
      }
      case Expr::K::Binary: {
        RE* r = new_re(RE::K::Bin);
        r->op = e.name;
        r->a.push_back(resolve(*e.a[0], s, reads, constant));
        r->a.push_back(resolve(*e.a[1], s, reads, constant));
        const RE& x = *r->a[0];
        const RE& y = *r->a[1];
        static const std::set<std::string> kArith = {"+", "-", "*", "/", "%", "&", "|", "^", "^~", "~^"};
        static const std::set<std::string> kShift = {"<<", ">>", "<<<", ">>>", "**"};
        if (kArith.count(e.name)) {
          r->w = std::max(x.w, y.w);
          r->sgn = x.sgn && y.sgn;
        } else if (kShift.count(e.name)) {
          r->w = x.w;
          r->sgn = x.sgn;
        } else {
          r->w = 1;
        }
        return r;
      }
      case Expr::K::Ternary: {
        RE* r = new_re(RE::K::Tern);
        for (const auto& a : e.a) r->a.push_back(resolve(*a, s, reads, constant));
        r->w = std::max(r->a[1]->w, r->a[2]->w);
        r->sgn = r->a[1]->sgn && r->a[2]->sgn;
        return r;
      }
      case Expr::K::Call: {
        if (constant) fail(s, e.line, "function call in constant expression");
        const auto fid = lookup_func(s, e.name);
        if (!fid) fail(s, e.line, "unknown function '" + e.name + "'");
        Func& fn = *funcs_[static_cast<std::size_t>(*fid)];
        if (e.a.size() != fn.args.size()) {
          fail(s, e.line, "function " + e.name + " expects " + std::to_string(fn.args.size()) + " arguments");
        }
        RE* r = new_re(RE::K::Func);
        r->fn = *fid;
        for (const auto& a : e.a) r->a.push_back(resolve(*a, s, reads, constant));
        r->w = sigs_[fn.ret].width;
        r->sgn = sigs_[fn.ret].is_signed;
        return r;
      }
      case Expr::K::SysCall: {
        if (!kSysFuncs.count(e.name)) fail(s, e.line, "unsupported system function " + e.name);
        RE* r = new_re(RE::K::Sys);
        r->op = e.name;
        for (const auto& a : e.a) r->a.push_back(resolve(*a, s, reads, constant));
        if (e.name == "$signed" || e.name == "$unsigned") {
          if (r->a.size() != 1) fail(s, e.line, e.name + " takes one argument");
          r->w = r->a[0]->w;
          r->sgn = e.name == "$signed";
        } else if (e.name == "$clog2") {
          if (r->a.size() != 1) fail(s, e.line, "$clog2 takes one argument");
          r->w = 32;
          r->sgn = true;
        } else if (constant) {
          fail(s, e.line, e.name + " in constant expression");
        } else if (e.name == "$random") {
          r->w = 32;
          r->sgn = true;
        } else if (e.name == "$urandom") {
          r->w = 32;
        } else {
          r->w = 64;
        }
        return r;
      }
    }
    fail(s, e.line, "unsupported expression");
  }

  RE* resolve_ref(const Expr& e, Scope& s, std::set<int>* reads, bool constant) {
    if (const Value* pv = lookup_param(s, e.name)) {
      RE* r = new_re(RE::K::Const);
      r->c = pv->bits;
      r->w = pv->width;
      r->sgn = pv->is_signed;
      if (e.sels.empty()) return r;
      // bit/part select of a parameter
      return apply_selects(r, e, 0, s, reads, constant, r->w - 1, 0);
    }
    const auto id = lookup_sig(s, e.name);
    if (!id) fail(s, e.line, "undeclared identifier '" + e.name + "'");
    if (constant) fail(s, e.line, "'" + e.name + "' is not a constant");
    if (reads) reads->insert(*id);
    const Signal& sig = sigs_[*id];
    std::size_t first = 0;
    RE* base;
    if (sig.is_mem) {
      if (e.sels.empty() || e.sels[0].kind != Selector::Kind::Bit) {
        fail(s, e.line, "memory '" + e.name + "' must be indexed");
      }
      base = new_re(RE::K::MemRd);
      base->sig = *id;
      base->a.push_back(resolve(*e.sels[0].e1, s, reads, constant));
      first = 1;
    } else {
      base = new_re(RE::K::Sig);
      base->sig = *id;
    }
    base->w = sig.width;
    base->sgn = sig.is_signed;
    return apply_selects(base, e, first, s, reads, constant, sig.msb, sig.lsb);
  }

  RE* apply_selects(RE* base, const Expr& e, std::size_t first, Scope& s, std::set<int>* reads, bool constant,
                    int msb, int lsb) {
    if (e.sels.size() > first + 1) fail(s, e.line, "multiple selects are not supported");
    if (e.sels.size() == first) return base;
    const Selector& sel = e.sels[first];
    switch (sel.kind) {
      case Selector::Kind::Bit: {
        RE* r = new_re(RE::K::Bit);
        r->a = {base, resolve(*sel.e1, s, reads, constant)};
        r->msb = msb;
        r->lsb = lsb;
        r->w = 1;
        return r;
      }
      case Selector::Kind::Part: {
        const i64 m = const_int(*sel.e1, s);
        const i64 l = const_int(*sel.e2, s);
        const i64 pm = msb >= lsb ? m - lsb : lsb - m;
        const i64 pl = msb >= lsb ? l - lsb : lsb - l;
        if (pm < pl) fail(s, e.line, "part select direction does not match declaration");
        RE* r = new_re(RE::K::Part);
        r->a = {base};
        r->lo = static_cast<int>(pl);
        r->w = static_cast<int>(pm - pl + 1);
        if (r->w > 64) fail(s, e.line, "part select too wide");
        return r;
      }
      case Selector::Kind::Up:
      case Selector::Kind::Down: {
        RE* r = new_re(RE::K::IdxPart);
        r->a = {base, resolve(*sel.e1, s, reads, constant)};
        const i64 w = const_int(*sel.e2, s);
        if (w < 1 || w > 64) fail(s, e.line, "indexed part select width must be 1..64");
        r->w = static_cast<int>(w);
        r->msb = msb;
        r->lsb = lsb;
        r->down = sel.kind == Selector::Kind::Down;
        return r;
      }
    }
    return base;
  }

  LV* resolve_lv(const Expr& e, Scope& s) {
    LV* lv = new_lv();
    auto add = [&](const Expr& x, auto&& self) -> void {
      if (x.k == Expr::K::Concat) {
        for (const auto& a : x.a) self(*a, self);
        return;
      }
      if (x.k != Expr::K::Ref) fail(s, x.line, "invalid assignment target");
      const auto id = lookup_sig(s, x.name);
      if (!id) fail(s, x.line, "undeclared identifier '" + x.name + "'");
      const Signal& sig = sigs_[*id];
      LVPart p;
      p.sig = *id;
      p.msb = sig.msb;
      p.lsb = sig.lsb;
      p.w = sig.width;
      std::size_t first = 0;
      if (sig.is_mem) {
        if (x.sels.empty() || x.sels[0].kind != Selector::Kind::Bit) {
          fail(s, x.line, "memory '" + x.name + "' must be indexed");
        }
        p.mem_idx = resolve(*x.sels[0].e1, s, nullptr, false);
        first = 1;
      }
      if (x.sels.size() > first + 1) fail(s, x.line, "multiple selects are not supported");
      if (x.sels.size() == first + 1) {
        const Selector& sel = x.sels[first];
        if (sel.kind == Selector::Kind::Bit) {
          p.k = LVPart::K::Bit;
          p.idx = resolve(*sel.e1, s, nullptr, false);
          p.w = 1;
        } else if (sel.kind == Selector::Kind::Part) {
          const i64 m = const_int(*sel.e1, s);
          const i64 l = const_int(*sel.e2, s);
          const i64 pm = sig.msb >= sig.lsb ? m - sig.lsb : sig.lsb - m;
          const i64 pl = sig.msb >= sig.lsb ? l - sig.lsb : sig.lsb - l;
          if (pm < pl) fail(s, x.line, "part select direction does not match declaration");
          p.k = LVPart::K::Part;
          p.lo = static_cast<int>(pl);
          p.w = static_cast<int>(pm - pl + 1);
        } else {
          p.k = LVPart::K::IdxPart;
          p.idx = resolve(*sel.e1, s, nullptr, false);
          p.w = static_cast<int>(const_int(*sel.e2, s));
          p.down = sel.kind == Selector::Kind::Down;
          if (p.w < 1 || p.w > 64) fail(s, x.line, "indexed part select width must be 1..64");
        }
      }
      lv->parts.push_back(p);
      lv->w += p.w;
    };
    add(e, add);
    if (lv->w > 64) fail(s, e.line, "assignment target wider than 64 bits");
    return lv;
  }

  // ---- statement compiler ----
  struct Compiler {
    Sim& sim;
    Code& code;
    Scope& scope;
    bool in_function;
    std::vector<std::set<int>*> read_sets = {};

    int here() const { return static_cast<int>(code.ops.size()); }

    Op& emit(Op::K k, int line) {
      Op op;
      op.k = k;
      op.line = line;
      code.ops.push_back(std::move(op));
      return code.ops.back();
    }

    void jump_to(int target, int line) { emit(Op::K::Jmp, line).target = target; }

    RE* expr(const Expr& e) {
      std::set<int> reads;
      RE* r = sim.resolve(e, scope, &reads, false);
      for (auto* set : read_sets) set->insert(reads.begin(), reads.end());
      return r;
    }

    LV* lvalue(const Expr& e) {
      LV* lv = sim.resolve_lv(e, scope);
      // index expressions of the target are reads too
      std::set<int> reads;
      collect_index_reads(e, reads);
      for (auto* set : read_sets) set->insert(reads.begin(), reads.end());
      return lv;
    }

    void collect_index_reads(const Expr& e, std::set<int>& reads) {
      if (e.k == Expr::K::Concat) {
        for (const auto& a : e.a) collect_index_reads(*a, reads);
        return;
      }
      for (const auto& sel : e.sels) {
        if (sel.e1) sim.resolve(*sel.e1, scope, &reads, false);
      }
    }

    [[noreturn]] void fail(int line, const std::string& msg) const { throw Diag(scope.mod->file, line, msg); }

    void event(const Stmt& s, const Stmt* body) {
      const int wait_at = here();
      emit(Op::K::Wait, s.line);
      std::vector<std::pair<int, EventTerm::Edge>> terms;
      if (s.star) {
        std::set<int> reads;
        read_sets.push_back(&reads);
        stmt(body);
        read_sets.pop_back();
        for (const int r : reads) terms.emplace_back(r, EventTerm::Edge::Any);
      } else {
        for (const auto& t : s.events) {
          const Expr& te = *t.e;
          if (te.k == Expr::K::Ref && te.sels.empty()) {
            const auto id = sim.lookup_sig(scope, te.name);
            if (!id) fail(te.line, "undeclared identifier '" + te.name + "' in event control");
            terms.emplace_back(*id, t.edge);
          } else {
            std::set<int> reads;
            sim.resolve(te, scope, &reads, false);
            for (const int r : reads) terms.emplace_back(r, EventTerm::Edge::Any);
          }
        }
        stmt(body);
      }
      code.ops[static_cast<std::size_t>(wait_at)].terms = std::move(terms);
    }

    void stmt(const Stmt* s) {
      if (!s) return;
      switch (s->k) {
        case Stmt::K::Null: return;
        case Stmt::K::Block:
          for (const auto& c : s->body) stmt(c.get());
          return;
        case Stmt::K::If: {
          const int jz = here();
          emit(Op::K::Jz, s->line).e = expr(*s->e);
          stmt(s->body[0].get());
          if (s->body[1]) {
            const int jmp = here();
            emit(Op::K::Jmp, s->line);
            code.ops[static_cast<std::size_t>(jz)].target = here();
            stmt(s->body[1].get());
            code.ops[static_cast<std::size_t>(jmp)].target = here();
          } else {
            code.ops[static_cast<std::size_t>(jz)].target = here();
          }
          return;
        }
        case Stmt::K::Case: {
          RE* sel = expr(*s->e);
          std::vector<int> to_end;
          const CaseItem* deflt = nullptr;
          for (const auto& item : s->items) {
            if (item.labels.empty()) {
              if (deflt) fail(s->line, "multiple default items");
              deflt = &item;
              continue;
            }
            const int test = here();
            Op& op = emit(Op::K::Case, s->line);
            op.e = sel;
            op.case_kind = s->case_kind;
            std::vector<RE*> labels;
            for (const auto& l : item.labels) labels.push_back(expr(*l));
            code.ops[static_cast<std::size_t>(test)].labels = std::move(labels);
            stmt(item.body.get());
            to_end.push_back(here());
            emit(Op::K::Jmp, s->line);
            code.ops[static_cast<std::size_t>(test)].target = here();
          }
          if (deflt) stmt(deflt->body.get());
          for (const int j : to_end) code.ops[static_cast<std::size_t>(j)].target = here();
          return;
        }
        case Stmt::K::For: {
          stmt(s->init.get());
          const int top = here();
          const int jz = here();
          emit(Op::K::Jz, s->line).e = expr(*s->e);
          stmt(s->body[0].get());
          stmt(s->step.get());
          jump_to(top, s->line);
          code.ops[static_cast<std::size_t>(jz)].target = here();
          return;
        }
        case Stmt::K::While: {
          const int top = here();
          emit(Op::K::Jz, s->line).e = expr(*s->e);
          stmt(s->body[0].get());
          jump_to(top, s->line);
          code.ops[static_cast<std::size_t>(top)].target = here();
          return;
        }
        case Stmt::K::Repeat: {
          const int slot = code.slots++;
          Op& init = emit(Op::K::RepInit, s->line);
          init.slot = slot;
          init.e = expr(*s->e);
          const int top = here();
          Op& dec = emit(Op::K::RepDec, s->line);
          dec.slot = slot;
          stmt(s->body[0].get());
          jump_to(top, s->line);
          code.ops[static_cast<std::size_t>(top)].target = here();
          return;
        }
        case Stmt::K::Forever: {
          if (in_function) fail(s->line, "forever in a function");
          const int top = here();
          stmt(s->body[0].get());
          jump_to(top, s->line);
          return;
        }
        case Stmt::K::Delay: {
          if (in_function) fail(s->line, "delay in a function");
          emit(Op::K::Delay, s->line).e = expr(*s->e);
          stmt(s->body[0].get());
          return;
        }
        case Stmt::K::Event: {
          if (in_function) fail(s->line, "event control in a function");
          event(*s, s->body[0].get());
          return;
        }
        case Stmt::K::Wait: {
          if (in_function) fail(s->line, "wait in a function");
          const int top = here();
          std::set<int> reads;
          RE* cond = sim.resolve(*s->e, scope, &reads, false);
          for (auto* set : read_sets) set->insert(reads.begin(), reads.end());
          emit(Op::K::Jz, s->line).e = cond;
          const int skip = here();
          emit(Op::K::Jmp, s->line);
          code.ops[static_cast<std::size_t>(top)].target = here();
          Op& w = emit(Op::K::Wait, s->line);
          for (const int r : reads) w.terms.emplace_back(r, EventTerm::Edge::Any);
          jump_to(top, s->line);
          code.ops[static_cast<std::size_t>(skip)].target = here();
          stmt(s->body[0].get());
          return;
        }
        case Stmt::K::Assign:
        case Stmt::K::Nba: {
          if (in_function && s->k == Stmt::K::Nba) fail(s->line, "nonblocking assignment in a function");
          LV* lv = lvalue(*s->lhs);
          RE* rhs = expr(*s->e);
          Op& op = emit(s->k == Stmt::K::Assign ? Op::K::Assign : Op::K::Nba, s->line);
          op.lv = lv;
          op.e = rhs;
          return;
        }
        case Stmt::K::SysTask: {
          if (!kSysTasks.count(s->name)) fail(s->line, "unsupported system task " + s->name);
          if (s->name == "$monitor") fail(s->line, "$monitor is not supported");
          std::vector<RE*> args;
          for (const auto& a : s->args) args.push_back(a ? expr(*a) : nullptr);
          Op& op = emit(Op::K::Sys, s->line);
          op.name = s->name;
          op.args = std::move(args);
          op.scope = scope.path;
          return;
        }
      }
    }
  };

  // ---- evaluation ----
  u64 truthy(const RE& e) { return eval(e, e.w, e.sgn) != 0; }

  i64 as_index(const RE& e) {
    const u64 v = eval(e, e.w, e.sgn);
    return e.sgn ? sext(v, e.w) : static_cast<i64>(v);
  }

  static u64 slice(u64 v, int width, i64 lo, int w) {
    u64 out = 0;
    for (int i = 0; i < w; ++i) {
      const i64 p = lo + i;
      if (p >= 0 && p < width && ((v >> p) & 1)) out |= 1ULL << i;
    }
    return out;
  }

  i64 idx_part_lo(const RE& e, i64 start) const {
    const bool desc = e.msb >= e.lsb;
    if (!e.down) return desc ? start - e.lsb : e.lsb - (start + e.w - 1);
    return desc ? start - e.w + 1 - e.lsb : e.lsb - start;
  }

  u64 self_value(const RE& e) {
    switch (e.k) {
      case RE::K::Const:
      case RE::K::Str: return e.c & mask_of(e.w);
      case RE::K::Sig: return sigs_[e.sig].val;
      case RE::K::MemRd: {
        const Signal& s = sigs_[e.sig];
        const i64 i = as_index(*e.a[0]);
        if (i < s.mem_lo || i > s.mem_hi) return 0;
        return s.mem[static_cast<std::size_t>(i - s.mem_lo)];
      }
      case RE::K::Bit: {
        const RE& base = *e.a[0];
        const u64 v = eval(base, base.w, false);
        const i64 i = as_index(*e.a[1]);
        const i64 pos = e.msb >= e.lsb ? i - e.lsb : e.lsb - i;
        return slice(v, base.w, pos, 1);
      }
      case RE::K::Part: {
        const RE& base = *e.a[0];
        return slice(eval(base, base.w, false), base.w, e.lo, e.w);
      }
      case RE::K::IdxPart: {
        const RE& base = *e.a[0];
        return slice(eval(base, base.w, false), base.w, idx_part_lo(e, as_index(*e.a[1])), e.w);
      }
      case RE::K::Concat: {
        u64 v = 0;
        for (const RE* a : e.a) v = (a->w >= 64 ? 0 : v << a->w) | eval(*a, a->w, false);
        return v;
      }
      case RE::K::Repl: {
        const RE& a = *e.a[0];
        const u64 part = eval(a, a.w, false);
        u64 v = 0;
        for (u64 i = 0; i < e.c; ++i) v = (a.w >= 64 ? 0 : v << a.w) | part;
        return v;
      }
      case RE::K::Func: return call(e);
      case RE::K::Sys: {
        if (e.op == "$time" || e.op == "$stime" || e.op == "$realtime") return now_;
        if (e.op == "$random" || e.op == "$urandom") {
          rng_ = rng_ * 6364136223846793005ULL + 1442695040888963407ULL;
          return (rng_ >> 32) & mask_of(32);
        }
        if (e.op == "$clog2") {
          const u64 v = eval(*e.a[0], e.a[0]->w, e.a[0]->sgn);
          u64 r = 0;
          while ((r < 64) && (1ULL << r) < v) ++r;
          return r;
        }
        return eval(*e.a[0], e.a[0]->w, e.a[0]->sgn);  // $signed / $unsigned
      }
      default: break;
    }
    throw SimError("bad leaf expression");
  }

  // Value of e in a context of width w; sgn is the context signedness.
  u64 eval(const RE& e, int w, bool sgn) {
    const u64 m = mask_of(w);
    switch (e.k) {
      case RE::K::Un: {
        const RE& a = *e.a[0];
        if (e.op == "~") return ~eval(a, w, sgn) & m;
        if (e.op == "-") return (0 - eval(a, w, sgn)) & m;
        if (e.op == "+") return eval(a, w, sgn);
        const u64 v = eval(a, a.w, a.sgn);
        const u64 am = mask_of(a.w);
        u64 r;
        if (e.op == "!") {
          r = v == 0;
        } else if (e.op == "&") {
          r = v == am;
        } else if (e.op == "~&") {
          r = v != am;
        } else if (e.op == "|") {
          r = v != 0;
        } else if (e.op == "~|") {
          r = v == 0;
        } else {
          r = __builtin_popcountll(v) & 1;
          if (e.op != "^") r ^= 1;
        }
        return r & m;
      }
      case RE::K::Bin: return eval_binary(e, w, sgn) & m;
      case RE::K::Tern: {
        const RE& c = *e.a[0];
        return eval(*e.a[truthy(c) ? 1 : 2], w, sgn);
      }
      default: return extend(self_value(e), e.w, w, sgn && e.sgn) & m;
    }
  }

  u64 eval_binary(const RE& e, int w, bool sgn) {
    const std::string& op = e.op;
    const RE& x = *e.a[0];
    const RE& y = *e.a[1];
    if (op == "&&") return truthy(x) && truthy(y);
    if (op == "||") return truthy(x) || truthy(y);
    if (op == "==" || op == "!=" || op == "===" || op == "!==" || op == "<" || op == "<=" || op == ">" ||
        op == ">=") {
      const int cw = std::max(x.w, y.w);
      const bool cs = x.sgn && y.sgn;
      const u64 a = eval(x, cw, cs);
      const u64 b = eval(y, cw, cs);
      if (op == "==" || op == "===") return a == b;
      if (op == "!=" || op == "!==") return a != b;
      const bool lt = cs ? sext(a, cw) < sext(b, cw) : a < b;
      const bool eq = a == b;
      if (op == "<") return lt;
      if (op == "<=") return lt || eq;
      if (op == ">") return !lt && !eq;
      return !lt;
    }
    if (op == "<<" || op == ">>" || op == "<<<" || op == ">>>") {
      const u64 a = eval(x, w, sgn);
      const u64 n = eval(y, y.w, false);
      if (op == "<<" || op == "<<<") return n >= 64 ? 0 : a << n;
      if (op == ">>>" && sgn && x.sgn) {
        const i64 v = sext(a, w);
        return static_cast<u64>(n >= 64 ? (v < 0 ? -1 : 0) : v >> n);
      }
      return n >= 64 ? 0 : (a & mask_of(w)) >> n;
    }
    if (op == "**") {
      const u64 a = eval(x, w, sgn);
      u64 n = eval(y, y.w, false);
      u64 r = 1;
      while (n-- > 0 && r != 0) r *= a;
      return r;
    }
    const u64 a = eval(x, w, sgn);
    const u64 b = eval(y, w, sgn);
    if (op == "+") return a + b;
    if (op == "-") return a - b;
    if (op == "*") return a * b;
    if (op == "&") return a & b;
    if (op == "|") return a | b;
    if (op == "^") return a ^ b;
    if (op == "^~" || op == "~^") return ~(a ^ b);
    if (op == "/" || op == "%") {
      if (b == 0) return 0;
      if (sgn) {
        const i64 sa = sext(a, w);
        const i64 sb = sext(b, w);
        return static_cast<u64>(op == "/" ? sa / sb : sa % sb);
      }
      return op == "/" ? a / b : a % b;
    }
    throw SimError("unknown operator " + op);
  }

  u64 call(const RE& e) {
    Func& fn = *funcs_[static_cast<std::size_t>(e.fn)];
    if (!fn.compiled) throw SimError("function " + fn.name + " used before definition");
    if (fn.depth > 0) throw SimError("recursive call of function " + fn.name);
    for (std::size_t i = 0; i < fn.args.size(); ++i) {
      Signal& s = sigs_[fn.args[i]];
      s.val = eval(*e.a[i], std::max(s.width, e.a[i]->w), e.a[i]->sgn) & mask_of(s.width);
    }
    ++fn.depth;
    Proc p;
    p.code = &fn.code;
    p.slots.assign(static_cast<std::size_t>(fn.code.slots), 0);
    try {
      exec(p, -1);
    } catch (...) {
      --fn.depth;
      throw;
    }
    --fn.depth;
    return sigs_[fn.ret].val;
  }

  // ---- state updates ----
  void activate(int p) {
    if (procs_[p].queued) return;
    procs_[p].queued = true;
    active_.push_back(p);
  }

  void notify(int id, u64 old_v, u64 new_v) {
    Signal& s = sigs_[id];
    const bool rose = !(old_v & 1) && (new_v & 1);
    const bool fell = (old_v & 1) && !(new_v & 1);
    std::size_t keep = 0;
    for (std::size_t i = 0; i < s.waiters.size(); ++i) {
      const Waiter wt = s.waiters[i];
      Proc& p = procs_[wt.proc];
      if (wt.gen != p.gen) continue;  // stale
      const bool fire = wt.edge == EventTerm::Edge::Any || (wt.edge == EventTerm::Edge::Pos && rose) ||
                        (wt.edge == EventTerm::Edge::Neg && fell);
      if (fire) {
        ++p.gen;
        activate(wt.proc);
      } else {
        s.waiters[keep++] = wt;
      }
    }
    s.waiters.resize(keep);
    for (const int c : s.fanout) activate(c);
  }

  void set_bits(int id, i64 mem_index, int lo, int w, u64 v) {
    Signal& s = sigs_[id];
    u64* slot = &s.val;
    if (mem_index >= 0 || s.is_mem) {
      if (mem_index < s.mem_lo || mem_index > s.mem_hi) return;
      slot = &s.mem[static_cast<std::size_t>(mem_index - s.mem_lo)];
    }
    const u64 old = *slot;
    u64 next = old;
    for (int i = 0; i < w; ++i) {
      const int p = lo + i;
      if (p < 0 || p >= s.width) continue;
      next = (next & ~(1ULL << p)) | (((v >> i) & 1) << p);
    }
    if (next == old) return;
    *slot = next;
    if (s.is_mem) {
      notify(id, 0, 0);
    } else {
      notify(id, old, next);
    }
  }

  std::vector<Target> targets(const LV& lv) {
    std::vector<Target> out;
    for (const auto& p : lv.parts) {
      Target t{p.sig, -1, 0, p.w};
      const Signal& s = sigs_[p.sig];
      if (p.mem_idx) {
        t.mem_index = as_index(*p.mem_idx);
        if (t.mem_index < 0) t.mem_index = s.mem_lo - 1;  // out of range, dropped
      }
      switch (p.k) {
        case LVPart::K::Whole: t.lo = 0; break;
        case LVPart::K::Part: t.lo = p.lo; break;
        case LVPart::K::Bit: {
          const i64 i = as_index(*p.idx);
          const i64 pos = p.msb >= p.lsb ? i - p.lsb : p.lsb - i;
          t.lo = pos < 0 || pos >= 64 ? 64 : static_cast<int>(pos);
          break;
        }
        case LVPart::K::IdxPart: {
          RE tmp;
          tmp.msb = p.msb;
          tmp.lsb = p.lsb;
          tmp.w = p.w;
          tmp.down = p.down;
          const i64 lo = idx_part_lo(tmp, as_index(*p.idx));
          t.lo = static_cast<int>(std::clamp<i64>(lo, -64, 64));
          break;
        }
      }
      out.push_back(t);
    }
    return out;
  }

  void write_target(const Target& t, u64 v) { set_bits(t.sig, t.mem_index, t.lo, t.w, v); }

  void assign(const LV& lv, const RE& rhs, bool nonblocking) {
    const int w = std::max(lv.w, rhs.w);
    const u64 v = eval(rhs, w, rhs.sgn);
    const auto ts = targets(lv);
    int shift = lv.w;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      shift -= ts[i].w;
      const u64 part = (shift >= 64 ? 0 : v >> shift) & mask_of(ts[i].w);
      if (nonblocking) {
        nba_.emplace_back(ts[i], part);
      } else {
        write_target(ts[i], part);
      }
    }
  }

  // ---- process execution ----
  void step(int id) {
    Proc& p = procs_[id];
    if (p.done) return;
    if (p.lv) {
      assign(*p.lv, *p.rhs, false);
      return;
    }
    exec(p, id);
  }

  // Runs until the process blocks; id < 0 marks a function body.
  void exec(Proc& p, int id) {
    auto& ops = p.code->ops;
    while (true) {
      const Op& op = ops[static_cast<std::size_t>(p.pc)];
      switch (op.k) {
        case Op::K::Assign:
          assign(*op.lv, *op.e, false);
          ++p.pc;
          break;
        case Op::K::Nba:
          assign(*op.lv, *op.e, true);
          ++p.pc;
          break;
        case Op::K::Jmp: p.pc = op.target; break;
        case Op::K::Jz: p.pc = truthy(*op.e) ? p.pc + 1 : op.target; break;
        case Op::K::Case: p.pc = case_match(op) ? p.pc + 1 : op.target; break;
        case Op::K::RepInit:
          p.slots[static_cast<std::size_t>(op.slot)] = as_index(*op.e);
          ++p.pc;
          break;
        case Op::K::RepDec: {
          auto& n = p.slots[static_cast<std::size_t>(op.slot)];
          if (n <= 0) {
            p.pc = op.target;
          } else {
            --n;
            ++p.pc;
          }
          break;
        }
        case Op::K::Delay: {
          const u64 d = eval(*op.e, op.e->w, false);
          ++p.pc;
          if (id < 0) throw SimError("delay inside a function");
          if (d == 0) {
            inactive_.push_back(id);
          } else {
            future_[now_ + d].push_back(id);
          }
          return;
        }
        case Op::K::Wait: {
          ++p.pc;
          if (id < 0) throw SimError("event control inside a function");
          for (const auto& [sig, edge] : op.terms) sigs_[sig].waiters.push_back(Waiter{id, p.gen, edge});
          return;
        }
        case Op::K::Sys:
          system_task(op);
          ++p.pc;
          break;
        case Op::K::Halt:
          p.done = id >= 0;
          return;
      }
    }
  }

  bool case_match(const Op& op) {
    const RE& sel = *op.e;
    for (const RE* l : op.labels) {
      const int w = std::max(sel.w, l->w);
      const bool sg = sel.sgn && l->sgn;
      const u64 a = eval(sel, w, sg);
      const u64 b = eval(*l, w, sg);
      u64 care = mask_of(w);
      if (l->k == RE::K::Const) {
        if (op.case_kind >= 1) care &= ~l->dontcare;
        if (op.case_kind == 2) care &= ~l->xmask;
      }
      if ((a & care) == (b & care)) return true;
    }
    return false;
  }

  // ---- system tasks ----
  void out(std::string_view text) { buffer_.append(text); if (buffer_.size() > (1 << 16)) flush(); }

  void flush() {
    std::fwrite(buffer_.data(), 1, buffer_.size(), stdout);
    std::fflush(stdout);
    buffer_.clear();
  }

  std::string format_value(const RE& e, char conv, int width, bool zero_pad_min) {
    const u64 v = eval(e, e.w, e.sgn);
    std::string digits;
    switch (conv) {
      case 'd': {
        char buf[32];
        if (e.sgn) {
          std::snprintf(buf, sizeof buf, "%" PRId64, sext(v, e.w));
        } else {
          std::snprintf(buf, sizeof buf, "%" PRIu64, v);
        }
        digits = buf;
        if (width < 0 && !zero_pad_min) {
          char mx[32];
          std::snprintf(mx, sizeof mx, "%" PRIu64, mask_of(e.w));
          width = static_cast<int>(std::strlen(mx)) + (e.sgn ? 1 : 0);
        }
        if (width > 0 && static_cast<int>(digits.size()) < width) {
          digits.insert(0, static_cast<std::size_t>(width) - digits.size(), ' ');
        }
        return digits;
      }
      case 'b':
      case 'o':
      case 'h': {
        const int bits = conv == 'b' ? 1 : conv == 'o' ? 3 : 4;
        const int n = (e.w + bits - 1) / bits;
        for (int i = n - 1; i >= 0; --i) {
          const u64 d = (v >> (i * bits)) & ((1ULL << bits) - 1);
          digits.push_back("0123456789abcdef"[d]);
        }
        if (zero_pad_min) {
          const auto nz = digits.find_first_not_of('0');
          digits = nz == std::string::npos ? "0" : digits.substr(nz);
        }
        if (width > 0 && static_cast<int>(digits.size()) < width) {
          digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
        }
        return digits;
      }
      case 'c': return std::string(1, static_cast<char>(v & 0xFF));
      case 's': {
        if (e.k == RE::K::Str) return e.str;
        for (int i = (e.w + 7) / 8 - 1; i >= 0; --i) {
          const char ch = static_cast<char>((v >> (8 * i)) & 0xFF);
          if (ch != 0) digits.push_back(ch);
        }
        return digits;
      }
      case 't': {
        digits = std::to_string(v);
        if (width > 0 && static_cast<int>(digits.size()) < width) {
          digits.insert(0, static_cast<std::size_t>(width) - digits.size(), ' ');
        }
        return digits;
      }
      default: break;
    }
    return std::to_string(v);
  }

  std::string format_args(const std::vector<RE*>& args, const std::string& scope) {
    std::string text;
    std::size_t i = 0;
    while (i < args.size()) {
      const RE* a = args[i++];
      if (!a) {
        text.push_back(' ');
        continue;
      }
      if (a->k != RE::K::Str) {
        text += format_value(*a, 'd', -1, true);
        continue;
      }
      const std::string& f = a->str;
      for (std::size_t k = 0; k < f.size(); ++k) {
        if (f[k] != '%') {
          text.push_back(f[k]);
          continue;
        }
        ++k;
        if (k < f.size() && f[k] == '-') ++k;
        int width = -1;
        bool zero_min = false;
        if (k < f.size() && std::isdigit(static_cast<unsigned char>(f[k]))) {
          width = 0;
          while (k < f.size() && std::isdigit(static_cast<unsigned char>(f[k]))) width = width * 10 + (f[k++] - '0');
          if (width == 0) zero_min = true;
        }
        if (k >= f.size()) break;
        char conv = static_cast<char>(std::tolower(static_cast<unsigned char>(f[k])));
        if (conv == '%') {
          text.push_back('%');
          continue;
        }
        if (conv == 'm') {
          text += scope;
          continue;
        }
        if (conv == 'x') conv = 'h';
        if (conv == 'e' || conv == 'f' || conv == 'g') conv = 'd';
        if (i >= args.size() || !args[i]) {
          text += "<missing>";
          ++i;
          continue;
        }
        text += format_value(*args[i++], conv, zero_min ? 0 : width, zero_min || conv == 't');
      }
    }
    return text;
  }

  void system_task(const Op& op) {
    const std::string& n = op.name;
    if (n == "$display" || n == "$strobe" || n == "$displayb" || n == "$displayh") {
      out(format_args(op.args, op.scope) + "\n");
    } else if (n == "$write") {
      out(format_args(op.args, op.scope));
    } else if (n == "$finish" || n == "$stop") {
      throw Finish{0};
    } else if (n == "$fatal") {
      std::vector<RE*> rest(op.args.begin() + (op.args.empty() ? 0 : 1), op.args.end());
      out("FATAL: " + format_args(rest, op.scope) + "\n");
      throw Finish{1};
    } else if (n == "$error") {
      out("ERROR: " + format_args(op.args, op.scope) + "\n");
    } else if (n == "$warning") {
      out("WARNING: " + format_args(op.args, op.scope) + "\n");
    } else if (n == "$info") {
      out("INFO: " + format_args(op.args, op.scope) + "\n");
    }
    // $dumpfile, $dumpvars, $timeformat: no-ops
  }

  std::map<std::string, const Module*> modules_;
  std::vector<std::unique_ptr<Scope>> scopes_;
  std::map<const Scope*, std::map<std::string, Dir>> dirs_;
  std::map<const Function*, Scope*> func_scopes_;
  std::vector<std::unique_ptr<RE>> res_;
  std::vector<std::unique_ptr<LV>> lvs_;
  std::vector<std::unique_ptr<Code>> codes_;
  std::vector<std::unique_ptr<Func>> funcs_;
  std::vector<Signal> sigs_;
  std::vector<Proc> procs_;

  u64 now_ = 0;
  u64 rng_ = 0x853c49e6748fea9bULL;
  std::deque<int> active_;
  std::vector<int> inactive_;
  std::vector<std::pair<Target, u64>> nba_;
  std::map<u64, std::vector<int>> future_;
  std::string buffer_;
};

}  // namespace

int simulate(const std::vector<Module>& modules, const SimOptions& options) {
  Sim sim(modules);
  sim.elaborate();
  if (options.check_only) return 0;
  return sim.run();
}

}  // namespace vstub
