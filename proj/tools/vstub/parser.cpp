#include <set>

#include "vstub.hpp"

namespace vstub {

namespace {

using TK = Token::Kind;

const std::set<std::string> kUnsupported = {"generate", "genvar", "task", "fork", "disable", "specify",
                                            "primitive", "deassign", "force", "release", "interface",
                                            "class", "package", "typedef", "enum", "struct"};

class Parser {
 public:
  explicit Parser(const SourceFile& src) : src_(src), toks_(lex(src)) {}

  std::vector<Module> run() {
    std::vector<Module> out;
    while (!at_end()) {
      if (is_kw("module") || is_kw("macromodule")) {
        out.push_back(module());
      } else {
        fail("expected 'module', found '" + peek().text + "'");
      }
    }
    return out;
  }

 private:
  // token helpers
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool at_end() const { return peek().kind == TK::End; }
  const Token& take() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool is_op(std::string_view op, std::size_t ahead = 0) const {
    return peek(ahead).kind == TK::Op && peek(ahead).text == op;
  }
  bool is_kw(std::string_view kw, std::size_t ahead = 0) const {
    return peek(ahead).kind == TK::Ident && peek(ahead).text == kw;
  }
  bool accept_op(std::string_view op) {
    if (!is_op(op)) return false;
    take();
    return true;
  }
  bool accept_kw(std::string_view kw) {
    if (!is_kw(kw)) return false;
    take();
    return true;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw Diag(src_.name, peek().line, msg); }
  void expect_op(std::string_view op) {
    if (!accept_op(op)) {
      fail("expected '" + std::string(op) + "' but found '" + (at_end() ? "end of file" : peek().text) + "'");
    }
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) {
      fail("expected '" + std::string(kw) + "' but found '" + (at_end() ? "end of file" : peek().text) + "'");
    }
  }
  std::string ident() {
    if (peek().kind != TK::Ident) fail("expected identifier, found '" + peek().text + "'");
    const std::string& t = take().text;
    if (kUnsupported.count(t)) fail("unsupported construct '" + t + "'");
    return t;
  }

  // module
  Module module() {
    Module m;
    m.file = src_.name;
    m.line = peek().line;
    take();
    m.name = ident();
    if (accept_op("#")) {
      expect_op("(");
      while (!is_op(")")) {
        accept_kw("parameter");
        skip_param_type();
        Param p;
        p.line = peek().line;
        p.name = ident();
        expect_op("=");
        p.value = expr();
        m.params.push_back(std::move(p));
        if (!accept_op(",")) break;
      }
      expect_op(")");
    }
    if (accept_op("(")) {
      if (is_kw("input") || is_kw("output") || is_kw("inout")) {
        ansi_ports(m);
      } else {
        while (!is_op(")")) {
          m.port_order.push_back(ident());
          if (!accept_op(",")) break;
        }
      }
      expect_op(")");
    }
    expect_op(";");
    while (!accept_kw("endmodule")) {
      if (at_end()) fail("missing 'endmodule' for module " + m.name);
      item(m);
    }
    return m;
  }

  void skip_param_type() {
    if (accept_kw("integer")) return;
    accept_kw("signed");
    if (is_op("[")) {
      take();
      expr();
      expect_op(":");
      expr();
      expect_op("]");
    }
  }

  Dir direction() {
    if (accept_kw("input")) return Dir::In;
    if (accept_kw("output")) return Dir::Out;
    if (accept_kw("inout")) return Dir::InOut;
    return Dir::None;
  }

  // [wire|reg|logic|integer] [signed] [range]
  void decl_type(Decl& d) {
    if (accept_kw("reg") || accept_kw("logic")) {
      d.is_var = true;
    } else if (accept_kw("integer")) {
      d.is_var = d.is_integer = d.is_signed = true;
    } else {
      accept_kw("wire") || accept_kw("tri");
    }
    if (accept_kw("signed")) d.is_signed = true;
    accept_kw("unsigned");
    if (is_op("[")) {
      take();
      d.msb = expr();
      expect_op(":");
      d.lsb = expr();
      expect_op("]");
    }
  }

  void ansi_ports(Module& m) {
    Decl proto;
    while (true) {
      if (is_kw("input") || is_kw("output") || is_kw("inout")) {
        proto = Decl{};
        proto.dir = direction();
        decl_type(proto);
      }
      Decl d;
      d.line = peek().line;
      d.name = ident();
      d.dir = proto.dir;
      d.is_var = proto.is_var;
      d.is_integer = proto.is_integer;
      d.is_signed = proto.is_signed;
      d.msb = clone(proto.msb);
      d.lsb = clone(proto.lsb);
      m.port_order.push_back(d.name);
      m.decls.push_back(std::move(d));
      if (!accept_op(",")) break;
    }
  }

  static ExprP clone(const ExprP& e) {
    if (!e) return nullptr;
    auto c = std::make_unique<Expr>();
    c->k = e->k;
    c->line = e->line;
    c->name = e->name;
    c->num = e->num;
    c->str = e->str;
    for (const auto& s : e->sels) c->sels.push_back(Selector{s.kind, clone(s.e1), clone(s.e2)});
    for (const auto& a : e->a) c->a.push_back(clone(a));
    return c;
  }

  void decl_list(std::vector<Decl>& out, Dir dir) {
    Decl proto;
    proto.dir = dir;
    decl_type(proto);
    while (true) {
      Decl d;
      d.line = peek().line;
      d.name = ident();
      d.dir = proto.dir;
      d.is_var = proto.is_var;
      d.is_integer = proto.is_integer;
      d.is_signed = proto.is_signed;
      d.msb = clone(proto.msb);
      d.lsb = clone(proto.lsb);
      if (accept_op("[")) {
        d.mem_a = expr();
        expect_op(":");
        d.mem_b = expr();
        expect_op("]");
      }
      if (accept_op("=")) d.init = expr();
      out.push_back(std::move(d));
      if (!accept_op(",")) break;
    }
    expect_op(";");
  }

  void item(Module& m) {
    const Token& t = peek();
    if (t.kind != TK::Ident) fail("unexpected '" + t.text + "' in module body");
    const std::string& w = t.text;
    if (w == "input" || w == "output" || w == "inout") {
      const Dir d = direction();
      decl_list(m.decls, d);
    } else if (w == "wire" || w == "reg" || w == "logic" || w == "integer" || w == "tri") {
      decl_list(m.decls, Dir::None);
    } else if (w == "parameter" || w == "localparam") {
      const bool local = w == "localparam";
      take();
      skip_param_type();
      while (true) {
        Param p;
        p.line = peek().line;
        p.local = local;
        p.name = ident();
        expect_op("=");
        p.value = expr();
        m.params.push_back(std::move(p));
        if (!accept_op(",")) break;
      }
      expect_op(";");
    } else if (w == "assign") {
      take();
      while (true) {
        ContAssign a;
        a.line = peek().line;
        a.lhs = lvalue();
        expect_op("=");
        a.rhs = expr();
        m.assigns.push_back(std::move(a));
        if (!accept_op(",")) break;
      }
      expect_op(";");
    } else if (w == "always" || w == "always_ff" || w == "always_latch" || w == "always_comb") {
      Process p;
      p.line = t.line;
      p.comb = w == "always_comb";
      take();
      p.body = stmt();
      m.procs.push_back(std::move(p));
    } else if (w == "initial") {
      Process p;
      p.line = t.line;
      p.initial = true;
      take();
      p.body = stmt();
      m.procs.push_back(std::move(p));
    } else if (w == "function") {
      m.funcs.push_back(function());
    } else if (kUnsupported.count(w)) {
      fail("unsupported construct '" + w + "'");
    } else if (w == "module" || w == "endfunction" || w == "begin" || w == "end") {
      fail("unexpected '" + w + "' in module " + m.name);
    } else {
      instances(m);
    }
  }

  Function function() {
    Function f;
    f.line = peek().line;
    take();
    accept_kw("automatic");
    if (accept_kw("integer")) {
      f.is_integer = f.is_signed = true;
    } else {
      accept_kw("reg") || accept_kw("logic");
      if (accept_kw("signed")) f.is_signed = true;
      if (accept_op("[")) {
        f.msb = expr();
        expect_op(":");
        f.lsb = expr();
        expect_op("]");
      }
    }
    f.name = ident();
    if (accept_op("(")) {
      Decl proto;
      while (!is_op(")")) {
        if (is_kw("input")) {
          proto = Decl{};
          proto.dir = direction();
          decl_type(proto);
        }
        Decl d;
        d.line = peek().line;
        d.name = ident();
        d.dir = Dir::In;
        d.is_var = true;
        d.is_integer = proto.is_integer;
        d.is_signed = proto.is_signed;
        d.msb = clone(proto.msb);
        d.lsb = clone(proto.lsb);
        f.inputs.push_back(d.name);
        f.decls.push_back(std::move(d));
        if (!accept_op(",")) break;
      }
      expect_op(")");
    }
    expect_op(";");
    std::vector<StmtP> stmts;
    while (!accept_kw("endfunction")) {
      if (at_end()) fail("missing 'endfunction'");
      if (is_kw("input")) {
        take();
        const std::size_t before = f.decls.size();
        decl_list(f.decls, Dir::In);
        for (std::size_t i = before; i < f.decls.size(); ++i) f.inputs.push_back(f.decls[i].name);
      } else if (is_kw("reg") || is_kw("integer") || is_kw("logic")) {
        decl_list(f.decls, Dir::None);
      } else if (is_kw("output") || is_kw("inout")) {
        fail("functions take inputs only");
      } else {
        stmts.push_back(stmt());
      }
    }
    auto block = std::make_unique<Stmt>();
    block->k = Stmt::K::Block;
    block->line = f.line;
    block->body = std::move(stmts);
    f.body = std::move(block);
    return f;
  }

  void instances(Module& m) {
    const int line = peek().line;
    const std::string mod = ident();
    std::vector<std::pair<std::string, ExprP>> params;
    if (accept_op("#")) {
      expect_op("(");
      while (!is_op(")")) {
        if (accept_op(".")) {
          std::string name = ident();
          expect_op("(");
          ExprP e = expr();
          expect_op(")");
          params.emplace_back(std::move(name), std::move(e));
        } else {
          params.emplace_back(std::string{}, expr());
        }
        if (!accept_op(",")) break;
      }
      expect_op(")");
    }
    while (true) {
      Instance inst;
      inst.module = mod;
      inst.line = line;
      for (const auto& [n, e] : params) inst.params.emplace_back(n, clone(e));
      if (peek().kind != TK::Ident) fail("expected instance name after '" + mod + "'");
      inst.name = ident();
      if (is_op("[")) fail("instance arrays are not supported");
      expect_op("(");
      if (!is_op(")")) {
        while (true) {
          Connection c;
          if (accept_op(".")) {
            if (accept_op("*")) fail("'.*' connections are not supported");
            c.port = ident();
            if (accept_op("(")) {
              if (!is_op(")")) c.expr = expr();
              expect_op(")");
            } else {
              auto e = std::make_unique<Expr>();
              e->k = Expr::K::Ref;
              e->line = peek().line;
              e->name = c.port;
              c.expr = std::move(e);
            }
          } else if (!is_op(",") && !is_op(")")) {
            c.expr = expr();
          }
          inst.conns.push_back(std::move(c));
          if (!accept_op(",")) break;
        }
      }
      expect_op(")");
      m.insts.push_back(std::move(inst));
      if (!accept_op(",")) break;
    }
    expect_op(";");
  }

  // statements
  StmtP make_stmt(Stmt::K k, int line) {
    auto s = std::make_unique<Stmt>();
    s->k = k;
    s->line = line;
    return s;
  }

  StmtP stmt_or_null() {
    if (accept_op(";")) return nullptr;
    return stmt();
  }

  void events(Stmt& s) {
    if (accept_op("*")) {
      s.star = true;
      return;
    }
    expect_op("(");
    if (accept_op("*")) {
      s.star = true;
      expect_op(")");
      return;
    }
    while (true) {
      EventTerm t;
      if (accept_kw("posedge")) {
        t.edge = EventTerm::Edge::Pos;
      } else if (accept_kw("negedge")) {
        t.edge = EventTerm::Edge::Neg;
      }
      t.e = expr();
      s.events.push_back(std::move(t));
      if (!accept_kw("or") && !accept_op(",")) break;
    }
    expect_op(")");
  }

  StmtP stmt() {
    const Token& t = peek();
    const int line = t.line;
    if (t.kind == TK::Op && t.text == ";") {
      take();
      return make_stmt(Stmt::K::Null, line);
    }
    if (t.kind == TK::Op && t.text == "#") {
      take();
      auto s = make_stmt(Stmt::K::Delay, line);
      s->e = delay_value();
      s->body.push_back(stmt_or_null());
      return s;
    }
    if (t.kind == TK::Op && t.text == "@") {
      take();
      auto s = make_stmt(Stmt::K::Event, line);
      events(*s);
      s->body.push_back(stmt_or_null());
      return s;
    }
    if (t.kind == TK::SysIdent) {
      auto s = make_stmt(Stmt::K::SysTask, line);
      s->name = take().text;
      if (accept_op("(")) {
        while (!is_op(")")) {
          if (is_op(",")) {
            s->args.push_back(nullptr);
          } else {
            s->args.push_back(expr());
          }
          if (!accept_op(",")) break;
        }
        expect_op(")");
      }
      expect_op(";");
      return s;
    }
    if (t.kind == TK::Op && t.text == "{") return assignment(line);
    if (t.kind != TK::Ident) fail("unexpected '" + t.text + "' at start of statement");

    const std::string& w = t.text;
    if (w == "begin") {
      take();
      auto s = make_stmt(Stmt::K::Block, line);
      if (accept_op(":")) ident();
      while (!accept_kw("end")) {
        if (at_end()) fail("missing 'end'");
        if (is_kw("reg") || is_kw("integer")) fail("declarations inside blocks are not supported");
        s->body.push_back(stmt());
      }
      if (accept_op(":")) ident();
      return s;
    }
    if (w == "if") {
      take();
      auto s = make_stmt(Stmt::K::If, line);
      expect_op("(");
      s->e = expr();
      expect_op(")");
      s->body.push_back(stmt_or_null());
      s->body.push_back(accept_kw("else") ? stmt_or_null() : nullptr);
      return s;
    }
    if (w == "case" || w == "casez" || w == "casex") {
      take();
      auto s = make_stmt(Stmt::K::Case, line);
      s->case_kind = w == "case" ? 0 : w == "casez" ? 1 : 2;
      expect_op("(");
      s->e = expr();
      expect_op(")");
      while (!accept_kw("endcase")) {
        if (at_end()) fail("missing 'endcase'");
        CaseItem item;
        if (accept_kw("default")) {
          accept_op(":");
        } else {
          while (true) {
            item.labels.push_back(expr());
            if (!accept_op(",")) break;
          }
          expect_op(":");
        }
        item.body = stmt_or_null();
        s->items.push_back(std::move(item));
      }
      return s;
    }
    if (w == "for") {
      take();
      auto s = make_stmt(Stmt::K::For, line);
      expect_op("(");
      if (is_kw("integer") || is_kw("int")) fail("loop variable declarations are not supported");
      s->init = assignment_body(peek().line, false);
      expect_op(";");
      s->e = expr();
      expect_op(";");
      s->step = assignment_body(peek().line, false);
      expect_op(")");
      s->body.push_back(stmt_or_null());
      return s;
    }
    if (w == "while" || w == "repeat" || w == "wait") {
      take();
      auto s = make_stmt(w == "while" ? Stmt::K::While : w == "repeat" ? Stmt::K::Repeat : Stmt::K::Wait, line);
      expect_op("(");
      s->e = expr();
      expect_op(")");
      s->body.push_back(stmt_or_null());
      return s;
    }
    if (w == "forever") {
      take();
      auto s = make_stmt(Stmt::K::Forever, line);
      s->body.push_back(stmt());
      return s;
    }
    if (kUnsupported.count(w)) fail("unsupported construct '" + w + "'");
    if (is_op("(", 1) || is_op(";", 1)) fail("task calls are not supported ('" + w + "')");
    return assignment(line);
  }

  StmtP assignment_body(int line, bool allow_nba) {
    auto lhs = lvalue();
    StmtP s;
    if (accept_op("=")) {
      s = make_stmt(Stmt::K::Assign, line);
    } else if (allow_nba && accept_op("<=")) {
      s = make_stmt(Stmt::K::Nba, line);
    } else {
      fail("expected assignment operator");
    }
    if (accept_op("#")) delay_value();  // intra-assignment delays are ignored
    s->lhs = std::move(lhs);
    s->e = expr();
    return s;
  }

  StmtP assignment(int line) {
    auto s = assignment_body(line, true);
    expect_op(";");
    return s;
  }

  ExprP delay_value() {
    if (accept_op("(")) {
      auto e = expr();
      expect_op(")");
      return e;
    }
    return primary();
  }

  ExprP lvalue() {
    if (is_op("{")) return primary();
    if (peek().kind != TK::Ident) fail("expected assignment target, found '" + peek().text + "'");
    return reference();
  }

  // expressions
  ExprP node(Expr::K k, int line) {
    auto e = std::make_unique<Expr>();
    e->k = k;
    e->line = line;
    return e;
  }

  ExprP expr() {
    auto c = binary(0);
    if (is_op("?")) {
      const int line = take().line;
      auto t = node(Expr::K::Ternary, line);
      t->a.push_back(std::move(c));
      t->a.push_back(expr());
      expect_op(":");
      t->a.push_back(expr());
      return t;
    }
    return c;
  }

  static int precedence(const Token& t) {
    if (t.kind != TK::Op) return -1;
    const std::string& o = t.text;
    if (o == "||") return 1;
    if (o == "&&") return 2;
    if (o == "|") return 3;
    if (o == "^" || o == "^~" || o == "~^") return 4;
    if (o == "&") return 5;
    if (o == "==" || o == "!=" || o == "===" || o == "!==") return 6;
    if (o == "<" || o == "<=" || o == ">" || o == ">=") return 7;
    if (o == "<<" || o == ">>" || o == "<<<" || o == ">>>") return 8;
    if (o == "+" || o == "-") return 9;
    if (o == "*" || o == "/" || o == "%") return 10;
    if (o == "**") return 11;
    return -1;
  }

  ExprP binary(int min_prec) {
    auto lhs = unary();
    while (true) {
      const int p = precedence(peek());
      if (p < 0 || p < min_prec) break;
      const Token op = take();
      // ** is right-associative
      auto rhs = binary(op.text == "**" ? p : p + 1);
      auto b = node(Expr::K::Binary, op.line);
      b->name = op.text;
      b->a.push_back(std::move(lhs));
      b->a.push_back(std::move(rhs));
      lhs = std::move(b);
    }
    return lhs;
  }

  ExprP unary() {
    static const std::set<std::string> kUnary = {"+", "-", "!", "~", "&", "|", "^", "~&", "~|", "~^", "^~"};
    if (peek().kind == TK::Op && kUnary.count(peek().text)) {
      const Token op = take();
      auto u = node(Expr::K::Unary, op.line);
      u->name = op.text;
      u->a.push_back(unary());
      return u;
    }
    return primary();
  }

  ExprP reference() {
    auto r = node(Expr::K::Ref, peek().line);
    r->name = ident();
    if (is_op("(")) fail("unexpected '(' after '" + r->name + "'");
    while (accept_op("[")) {
      Selector s;
      s.e1 = expr();
      if (accept_op(":")) {
        s.kind = Selector::Kind::Part;
        s.e2 = expr();
      } else if (accept_op("+:")) {
        s.kind = Selector::Kind::Up;
        s.e2 = expr();
      } else if (accept_op("-:")) {
        s.kind = Selector::Kind::Down;
        s.e2 = expr();
      }
      expect_op("]");
      r->sels.push_back(std::move(s));
    }
    return r;
  }

  ExprP primary() {
    const Token& t = peek();
    switch (t.kind) {
      case TK::Number: {
        auto e = node(Expr::K::Num, t.line);
        e->num = take().num;
        return e;
      }
      case TK::String: {
        auto e = node(Expr::K::Str, t.line);
        e->str = take().text;
        return e;
      }
      case TK::SysIdent: {
        auto e = node(Expr::K::SysCall, t.line);
        e->name = take().text;
        if (accept_op("(")) {
          while (!is_op(")")) {
            e->a.push_back(expr());
            if (!accept_op(",")) break;
          }
          expect_op(")");
        }
        return e;
      }
      case TK::Ident: {
        if (is_op("(", 1)) {
          auto e = node(Expr::K::Call, t.line);
          e->name = ident();
          take();
          while (!is_op(")")) {
            e->a.push_back(expr());
            if (!accept_op(",")) break;
          }
          expect_op(")");
          return e;
        }
        return reference();
      }
      case TK::Op:
        if (t.text == "(") {
          take();
          auto e = expr();
          expect_op(")");
          return e;
        }
        if (t.text == "{") {
          const int line = take().line;
          auto first = expr();
          if (accept_op("{")) {
            // replication {n{...}}
            auto r = node(Expr::K::Repl, line);
            r->a.push_back(std::move(first));
            auto inner = node(Expr::K::Concat, line);
            while (true) {
              inner->a.push_back(expr());
              if (!accept_op(",")) break;
            }
            expect_op("}");
            expect_op("}");
            r->a.push_back(std::move(inner));
            return r;
          }
          auto c = node(Expr::K::Concat, line);
          c->a.push_back(std::move(first));
          while (accept_op(",")) c->a.push_back(expr());
          expect_op("}");
          return c;
        }
        break;
      default:
        break;
    }
    fail("expected expression, found '" + (at_end() ? std::string("end of file") : t.text) + "'");
  }

  const SourceFile& src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<Module> parse(const SourceFile& src) { return Parser(src).run(); }

}  // namespace vstub
