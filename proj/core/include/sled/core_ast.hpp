#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sled/src_ast.hpp"

namespace sled::core {

using EffectRow = src::EffectRow;

// Run-time pretypes: the types of generated code.
struct PreType;
using PreTypePtr = std::shared_ptr<const PreType>;

struct PreType {
  enum class Kind { Nat, Fun, Cont, Comp, Handler };
  Kind kind = Kind::Nat;
  PreTypePtr a, b;   // Fun/Cont: dom/cod; Comp: a = value; Handler: a = in, b = out
  EffectRow row;     // Fun/Cont latent; Comp row; Handler input row
  EffectRow row2;    // Handler output row
};

PreTypePtr pre_nat();
PreTypePtr pre_fun(PreTypePtr dom, EffectRow latent, PreTypePtr cod);
PreTypePtr pre_cont(PreTypePtr dom, EffectRow latent, PreTypePtr cod);
PreTypePtr pre_comp(PreTypePtr value, EffectRow row);
PreTypePtr pre_handler(PreTypePtr in, EffectRow row_in, PreTypePtr out, EffectRow row_out);
bool pretype_equal(const PreTypePtr &a, const PreTypePtr &b);
std::string pretype_to_string(const PreTypePtr &p);

// Machine-level value types. Any is the type of err: it compares equal to
// every type, mirroring the rule that err can be assigned any type.
struct CoreType;
using CoreTypePtr = std::shared_ptr<const CoreType>;

struct CoreType {
  enum class Kind { Nat, Fun, Cont, FParam, Ast, Any };
  Kind kind = Kind::Nat;
  CoreTypePtr dom, cod;  // Fun/Cont
  EffectRow latent;      // Fun/Cont
  PreTypePtr pre;        // FParam(R) or AST(value/comp/handler pretype)
};

CoreTypePtr ct_nat();
CoreTypePtr ct_fun(CoreTypePtr dom, EffectRow latent, CoreTypePtr cod);
CoreTypePtr ct_cont(CoreTypePtr dom, EffectRow latent, CoreTypePtr cod);
CoreTypePtr ct_fparam(PreTypePtr pre);
CoreTypePtr ct_ast(PreTypePtr pre);
CoreTypePtr ct_any();
bool coretype_equal(const CoreTypePtr &a, const CoreTypePtr &b);
std::string coretype_to_string(const CoreTypePtr &t);

// A computation type: value type plus effect row.
struct CompType {
  CoreTypePtr value;
  EffectRow row;
};

// Formal parameters are binding-site names in generated code. Identity is
// the id alone; the pretype is checked separately for well-typedness.
struct FormalParam {
  std::uint64_t id = 0;
  PreTypePtr pretype;
  std::string classifier;  // non-empty only when elaborated in classifier mode

  friend bool operator==(const FormalParam &a, const FormalParam &b) { return a.id == b.id; }
  friend bool operator<(const FormalParam &a, const FormalParam &b) { return a.id < b.id; }
};

struct NormalForm;
struct CoreTerm;
struct CoreHandler;
using NfPtr = std::shared_ptr<const NormalForm>;
using TermPtr = std::shared_ptr<const CoreTerm>;
using CoreHandlerPtr = std::shared_ptr<const CoreHandler>;

struct NormalForm {
  enum class Kind {
    MetaVar,   // x
    NatLit,    // m
    Lam,       // fun x -> t
    Kont,      // continuation value, machine-created only
    AstNat,    // Nat(m)
    FParamV,   // the formal parameter itself
    AstVar,    // Var(n)
    AstLam,    // Lam(n1, n2)
    AstApp,    // App(n1, n2)
    AstContinue,
    AstRet,
    AstDo,     // Do(comp, binder, body)
    AstOp,     // Op[name](n)
    AstHwith,  // Hwith(n1, n2)
    AstHret,   // Hret(binder, body)
    AstHop,    // Hop[name](h, x, k, body)
    AstPlus,
    AstTimes,
  };
  Kind kind = Kind::MetaVar;
  std::string var;      // MetaVar; Lam/Kont binder
  std::uint64_t nat = 0;
  TermPtr body;         // Lam/Kont body
  FormalParam fparam;   // FParamV
  NfPtr n1, n2, n3, n4; // AST constructor arguments
  std::string op_name;  // AstOp / AstHop
  CoreTypePtr lam_ann;  // binder type hint for Lam, metadata only (not compared)
};

struct CoreTerm {
  enum class Kind {
    App,       // n1 n2
    Return,    // return n1
    Do,        // do var <- t1 in t2
    Op,        // op(n1)
    Handle,    // handle t1 with handler
    Continue,  // continue n1 n2
    Check,     // check(n1)
    CheckM,    // check_M(n1)
    Mkvar,     // mkvar(R)
    Dlet,      // dlet(n1, t1)
    Tls,       // tls(t1)
    Err,
    Arith,     // n1 op n2 on naturals
  };
  Kind kind = Kind::Err;
  NfPtr n1, n2;
  std::string var;
  TermPtr t1, t2;
  CoreHandlerPtr handler;
  std::string op_name;
  src::ArithOp arith = src::ArithOp::Plus;
  PreTypePtr mk_pre;          // Mkvar
  std::string mk_classifier;  // Mkvar tag in classifier mode
};

struct CoreHClause {
  bool is_return = false;
  std::string op_name;
  std::string x;
  std::string k;
  TermPtr body;
};

struct CoreHandler {
  std::vector<CoreHClause> clauses;
};

// Constructors.
NfPtr nf_metavar(std::string x);
NfPtr nf_nat(std::uint64_t m);
NfPtr nf_lam(std::string x, TermPtr body);
NfPtr nf_lam_ann(std::string x, CoreTypePtr binder_type, TermPtr body);
NfPtr nf_kont(std::string x, TermPtr body);
NfPtr nf_ast_nat(std::uint64_t m);
NfPtr nf_fparam(FormalParam fp);
NfPtr nf_ast_var(NfPtr n);
NfPtr nf_ast_lam(NfPtr binder, NfPtr body);
NfPtr nf_ast_app(NfPtr f, NfPtr a);
NfPtr nf_ast_continue(NfPtr k, NfPtr a);
NfPtr nf_ast_ret(NfPtr n);
NfPtr nf_ast_do(NfPtr comp, NfPtr binder, NfPtr body);
NfPtr nf_ast_op(std::string op, NfPtr n);
NfPtr nf_ast_hwith(NfPtr subject, NfPtr handler);
NfPtr nf_ast_hret(NfPtr binder, NfPtr body);
NfPtr nf_ast_hop(std::string op, NfPtr h, NfPtr x, NfPtr k, NfPtr body);
NfPtr nf_ast_plus(NfPtr a, NfPtr b);
NfPtr nf_ast_times(NfPtr a, NfPtr b);

TermPtr tm_app(NfPtr f, NfPtr a);
TermPtr tm_return(NfPtr n);
TermPtr tm_do(std::string x, TermPtr t1, TermPtr t2);
TermPtr tm_op(std::string op, NfPtr n);
TermPtr tm_handle(TermPtr subject, CoreHandlerPtr h);
TermPtr tm_continue(NfPtr k, NfPtr v);
TermPtr tm_check(NfPtr n);
TermPtr tm_check_m(NfPtr n);
TermPtr tm_mkvar(PreTypePtr pre, std::string classifier = "");
TermPtr tm_dlet(NfPtr fp, TermPtr body);
TermPtr tm_tls(TermPtr body);
TermPtr tm_err();
TermPtr tm_arith(src::ArithOp op, NfPtr a, NfPtr b);

// Free Var(alpha) occurrences of a normal form, i.e. those not bound by an
// enclosing Lam/Do/Hret/Hop AST binder. Traverses meta-level lambda and
// continuation bodies as well.
std::set<FormalParam> freevars(const NfPtr &n);
std::set<FormalParam> freevars_term(const TermPtr &t);

// Operation names with clauses; empty for a bare return clause.
std::set<std::string> handler_dom(const CoreHandlerPtr &h);

// Free meta-variables (not formal parameters).
std::set<std::string> meta_freevars(const NfPtr &n);
std::set<std::string> meta_freevars_term(const TermPtr &t);

// Capture-avoiding substitution of a normal form for a meta-variable.
// Formal parameters are names, never renamed.
TermPtr subst(const TermPtr &t, const NfPtr &n, const std::string &x);
NfPtr subst_nf(const NfPtr &m, const NfPtr &n, const std::string &x);

bool nf_equal(const NfPtr &a, const NfPtr &b);
bool term_equal(const TermPtr &a, const TermPtr &b);
bool handler_equal(const CoreHandlerPtr &a, const CoreHandlerPtr &b);

// True when the normal form is an AST constructor node (has AST type).
bool nf_is_ast(const NfPtr &n);

// Rewrites do x <- return n in t to t[n/x] everywhere, to fixpoint. Used to
// compare elaborations modulo administrative bindings.
TermPtr admin_normalize(const TermPtr &t);

// Renames meta binders to v0, v1, ... in traversal order so that terms can
// be compared independently of elaboration-generated names.
TermPtr alpha_canonicalize(const TermPtr &t);

struct NodeCensus {
  int checks = 0;
  int check_ms = 0;
  int dlets = 0;
  int tls = 0;
  int mkvars = 0;
  friend bool operator==(const NodeCensus &a, const NodeCensus &b) = default;
};

NodeCensus census(const TermPtr &t);

}  // namespace sled::core
