// Small two-state simulator for a synthesizable-plus-testbench Verilog subset.
#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vstub {

// "file:line: error: message"
class Diag : public std::runtime_error {
 public:
  Diag(const std::string& file, int line, const std::string& msg)
      : std::runtime_error(file + ":" + std::to_string(line) + ": error: " + msg) {}
};

struct Value {
  std::uint64_t bits = 0;
  int width = 32;
  bool is_signed = false;
  bool sized = false;
  std::uint64_t dontcare = 0;  // z / ? digits, for casez
  std::uint64_t xmask = 0;     // x digits, for casex
};

struct Token {
  enum class Kind { Ident, SysIdent, Number, String, Op, End } kind = Kind::End;
  std::string text;
  Value num;
  int line = 0;
};

struct SourceFile {
  std::string name;
  std::string text;
};

std::vector<Token> lex(const SourceFile& src);

struct Expr;
using ExprP = std::unique_ptr<Expr>;

struct Selector {
  enum class Kind { Bit, Part, Up, Down } kind = Kind::Bit;
  ExprP e1, e2;
};

struct Expr {
  enum class K { Num, Str, Ref, Concat, Repl, Unary, Binary, Ternary, Call, SysCall } k = K::Num;
  int line = 0;
  std::string name;  // Ref / Call / SysCall identifier, or operator
  Value num;
  std::string str;
  std::vector<Selector> sels;  // Ref only
  std::vector<ExprP> a;        // operands
};

struct Stmt;
using StmtP = std::unique_ptr<Stmt>;

struct EventTerm {
  enum class Edge { Any, Pos, Neg } edge = Edge::Any;
  ExprP e;
};

struct CaseItem {
  std::vector<ExprP> labels;  // empty for default
  StmtP body;
};

struct Stmt {
  enum class K { Block, If, Case, For, While, Repeat, Forever, Delay, Event, Wait, Assign, Nba, SysTask, Null } k =
      K::Null;
  int line = 0;
  std::vector<StmtP> body;  // Block: children; If: then, else; loops/Delay/Event/Wait: body (may be null)
  ExprP e;                  // condition / delay / count / rhs
  ExprP lhs;
  StmtP init, step;
  std::vector<CaseItem> items;
  int case_kind = 0;  // 0 case, 1 casez, 2 casex
  std::vector<EventTerm> events;
  bool star = false;
  std::string name;
  std::vector<ExprP> args;
};

enum class Dir { None, In, Out, InOut };

struct Decl {
  std::string name;
  int line = 0;
  Dir dir = Dir::None;
  bool is_var = false;  // reg/logic/integer
  bool is_integer = false;
  bool is_signed = false;
  ExprP msb, lsb;
  ExprP mem_a, mem_b;  // unpacked dimension
  ExprP init;
};

struct Param {
  std::string name;
  int line = 0;
  bool local = false;
  ExprP value;
};

struct Connection {
  std::string port;  // empty when positional
  ExprP expr;        // null when left open
};

struct Instance {
  std::string module;
  std::string name;
  int line = 0;
  std::vector<std::pair<std::string, ExprP>> params;  // name empty when positional
  std::vector<Connection> conns;
};

struct Function {
  std::string name;
  int line = 0;
  bool is_signed = false;
  bool is_integer = false;
  ExprP msb, lsb;
  std::vector<Decl> decls;
  std::vector<std::string> inputs;
  StmtP body;
};

struct Process {
  bool initial = false;
  bool comb = false;  // always_comb
  int line = 0;
  StmtP body;
};

struct ContAssign {
  int line = 0;
  ExprP lhs, rhs;
};

struct Module {
  std::string name;
  std::string file;
  int line = 0;
  std::vector<std::string> port_order;
  std::vector<Param> params;
  std::vector<Decl> decls;
  std::vector<ContAssign> assigns;
  std::vector<Process> procs;
  std::vector<Instance> insts;
  std::vector<Function> funcs;
};

std::vector<Module> parse(const SourceFile& src);

// Elaborates and simulates. Returns the process exit status.
struct SimOptions {
  bool check_only = false;  // elaborate, do not run
};
int simulate(const std::vector<Module>& modules, const SimOptions& options);

}  // namespace vstub
