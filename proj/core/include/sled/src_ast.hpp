#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sled/diagnostics.hpp"

namespace sled::src {

// Effect rows are canonical sets: no duplicates, order-insensitive equality.
using EffectRow = std::set<std::string>;

// Stage of a type or effect signature. RunTime is level 0 (generated code),
// CompileTime is level -1 (generating code).
enum class Level { RunTime, CompileTime };

struct VType;
using VTypePtr = std::shared_ptr<const VType>;

// Value types at either level. Code is always a compile-time type whose
// payload is a run-time computation type (value type + row).
struct VType {
  enum class Kind { Nat, Fun, Cont, Code };
  Kind kind = Kind::Nat;
  Level level = Level::RunTime;
  VTypePtr dom, cod;       // Fun / Cont
  EffectRow latent;        // Fun / Cont latent row
  VTypePtr code_val;       // Code payload value type (run-time)
  EffectRow code_row;      // Code payload row
  std::string classifier;  // optional scope tag on Code; empty = untagged
};

VTypePtr nat_type(Level lv);
VTypePtr fun_type(Level lv, VTypePtr dom, EffectRow latent, VTypePtr cod);
VTypePtr cont_type(Level lv, VTypePtr dom, EffectRow latent, VTypePtr cod);
VTypePtr code_type(VTypePtr value, EffectRow row, std::string classifier = "");

// Structural equality; classifier tags are ignored unless requested.
bool vtype_equal(const VTypePtr &a, const VTypePtr &b, bool with_classifiers = false);

// Equality of the written form: ignores levels (they are derived from the
// binder's mode) but compares classifier tags. Used for round-trip checks.
bool vtype_equal_shape(const VTypePtr &a, const VTypePtr &b);

struct EffectSig {
  std::string name;
  Level level = Level::RunTime;
  VTypePtr arg;
  VTypePtr result;
  SourceLoc loc;
};

struct Value;
struct Expr;
struct Handler;
using ValuePtr = std::shared_ptr<const Value>;
using ExprPtr = std::shared_ptr<const Expr>;
using HandlerPtr = std::shared_ptr<const Handler>;

struct Value {
  enum class Kind { Var, Nat, Lam };
  Kind kind = Kind::Var;
  std::string name;            // Var
  std::uint64_t nat = 0;       // Nat
  std::string binder;          // Lam
  VTypePtr ann;                // Lam annotation (null until checked)
  ExprPtr body;                // Lam
  SourceLoc loc;
};

enum class ArithOp { Plus, Times, Monus };

struct Expr {
  enum class Kind { App, Return, Do, Op, Handle, Continue, Quote, Splice, Arith };
  Kind kind = Kind::Return;
  ValuePtr v1, v2;        // App/Continue: v1 v2; Return/Op: v1; Arith: v1 op v2
  std::string op_name;    // Op
  ArithOp arith = ArithOp::Plus;
  std::string binder;     // Do
  VTypePtr ann;           // Do binder annotation
  ExprPtr e1, e2;         // Do
  ExprPtr inner;          // Quote/Splice/Handle subject
  HandlerPtr handler;     // Handle
  SourceLoc loc;
};

struct HClause {
  bool is_return = false;
  std::string op_name;    // when !is_return
  std::string x;
  VTypePtr x_ann;
  std::string k;          // when !is_return
  VTypePtr k_ann;
  ExprPtr body;
  SourceLoc loc;
};

// Exactly one return clause (kept first) and at most one clause per op.
struct Handler {
  std::vector<HClause> clauses;
  SourceLoc loc;
};

struct Program {
  std::vector<EffectSig> sigs;
  ExprPtr body;
};

// Constructors.
ValuePtr mk_var(std::string name, SourceLoc loc = {});
ValuePtr mk_nat(std::uint64_t n, SourceLoc loc = {});
ValuePtr mk_lam(std::string binder, VTypePtr ann, ExprPtr body, SourceLoc loc = {});

ExprPtr mk_app(ValuePtr f, ValuePtr a, SourceLoc loc = {});
ExprPtr mk_return(ValuePtr v, SourceLoc loc = {});
ExprPtr mk_do(std::string binder, VTypePtr ann, ExprPtr e1, ExprPtr e2, SourceLoc loc = {});
ExprPtr mk_op(std::string op, ValuePtr v, SourceLoc loc = {});
ExprPtr mk_handle(ExprPtr subject, HandlerPtr h, SourceLoc loc = {});
ExprPtr mk_continue(ValuePtr k, ValuePtr v, SourceLoc loc = {});
ExprPtr mk_quote(ExprPtr inner, SourceLoc loc = {});
ExprPtr mk_splice(ExprPtr inner, SourceLoc loc = {});
ExprPtr mk_arith(ArithOp op, ValuePtr a, ValuePtr b, SourceLoc loc = {});

bool value_equal(const ValuePtr &a, const ValuePtr &b);
bool expr_equal(const ExprPtr &a, const ExprPtr &b);
bool handler_equal(const HandlerPtr &a, const HandlerPtr &b);
bool program_equal(const Program &a, const Program &b);

// Free source variables of an expression (both levels).
std::set<std::string> free_vars(const ExprPtr &e);

}  // namespace sled::src
