#include "sled/core_ast.hpp"

#include <cassert>
#include <functional>
#include <sstream>

namespace sled::core {

PreTypePtr pre_nat() {
  auto p = std::make_shared<PreType>();
  p->kind = PreType::Kind::Nat;
  return p;
}

PreTypePtr pre_fun(PreTypePtr dom, EffectRow latent, PreTypePtr cod) {
  auto p = std::make_shared<PreType>();
  p->kind = PreType::Kind::Fun;
  p->a = std::move(dom);
  p->b = std::move(cod);
  p->row = std::move(latent);
  return p;
}

PreTypePtr pre_cont(PreTypePtr dom, EffectRow latent, PreTypePtr cod) {
  auto p = std::make_shared<PreType>();
  p->kind = PreType::Kind::Cont;
  p->a = std::move(dom);
  p->b = std::move(cod);
  p->row = std::move(latent);
  return p;
}

PreTypePtr pre_comp(PreTypePtr value, EffectRow row) {
  auto p = std::make_shared<PreType>();
  p->kind = PreType::Kind::Comp;
  p->a = std::move(value);
  p->row = std::move(row);
  return p;
}

PreTypePtr pre_handler(PreTypePtr in, EffectRow row_in, PreTypePtr out, EffectRow row_out) {
  auto p = std::make_shared<PreType>();
  p->kind = PreType::Kind::Handler;
  p->a = std::move(in);
  p->b = std::move(out);
  p->row = std::move(row_in);
  p->row2 = std::move(row_out);
  return p;
}

bool pretype_equal(const PreTypePtr &a, const PreTypePtr &b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case PreType::Kind::Nat: return true;
    case PreType::Kind::Fun:
    case PreType::Kind::Cont:
      return a->row == b->row && pretype_equal(a->a, b->a) && pretype_equal(a->b, b->b);
    case PreType::Kind::Comp:
      return a->row == b->row && pretype_equal(a->a, b->a);
    case PreType::Kind::Handler:
      return a->row == b->row && a->row2 == b->row2 && pretype_equal(a->a, b->a) &&
             pretype_equal(a->b, b->b);
  }
  return false;
}

static std::string row_to_string(const EffectRow &r) {
  std::string s = "{";
  bool first = true;
  for (const auto &op : r) {
    if (!first) s += ",";
    s += op;
    first = false;
  }
  return s + "}";
}

std::string pretype_to_string(const PreTypePtr &p) {
  if (!p) return "?";
  switch (p->kind) {
    case PreType::Kind::Nat: return "Nat";
    case PreType::Kind::Fun:
      return "(" + pretype_to_string(p->a) + " ->" + row_to_string(p->row) + " " +
             pretype_to_string(p->b) + ")";
    case PreType::Kind::Cont:
      return "(" + pretype_to_string(p->a) + " =>" + row_to_string(p->row) + " " +
             pretype_to_string(p->b) + ")";
    case PreType::Kind::Comp:
      return pretype_to_string(p->a) + "!" + row_to_string(p->row);
    case PreType::Kind::Handler:
      return "(" + pretype_to_string(p->a) + "!" + row_to_string(p->row) + " => " +
             pretype_to_string(p->b) + "!" + row_to_string(p->row2) + ")";
  }
  return "?";
}

CoreTypePtr ct_nat() {
  auto t = std::make_shared<CoreType>();
  t->kind = CoreType::Kind::Nat;
  return t;
}

CoreTypePtr ct_fun(CoreTypePtr dom, EffectRow latent, CoreTypePtr cod) {
  auto t = std::make_shared<CoreType>();
  t->kind = CoreType::Kind::Fun;
  t->dom = std::move(dom);
  t->cod = std::move(cod);
  t->latent = std::move(latent);
  return t;
}

CoreTypePtr ct_cont(CoreTypePtr dom, EffectRow latent, CoreTypePtr cod) {
  auto t = std::make_shared<CoreType>();
  t->kind = CoreType::Kind::Cont;
  t->dom = std::move(dom);
  t->cod = std::move(cod);
  t->latent = std::move(latent);
  return t;
}

CoreTypePtr ct_fparam(PreTypePtr pre) {
  auto t = std::make_shared<CoreType>();
  t->kind = CoreType::Kind::FParam;
  t->pre = std::move(pre);
  return t;
}

CoreTypePtr ct_ast(PreTypePtr pre) {
  auto t = std::make_shared<CoreType>();
  t->kind = CoreType::Kind::Ast;
  t->pre = std::move(pre);
  return t;
}

CoreTypePtr ct_any() {
  auto t = std::make_shared<CoreType>();
  t->kind = CoreType::Kind::Any;
  return t;
}

bool coretype_equal(const CoreTypePtr &a, const CoreTypePtr &b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind == CoreType::Kind::Any || b->kind == CoreType::Kind::Any) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case CoreType::Kind::Nat: return true;
    case CoreType::Kind::Fun:
    case CoreType::Kind::Cont:
      return a->latent == b->latent && coretype_equal(a->dom, b->dom) &&
             coretype_equal(a->cod, b->cod);
    case CoreType::Kind::FParam:
    case CoreType::Kind::Ast:
      return pretype_equal(a->pre, b->pre);
    case CoreType::Kind::Any:
      return true;
  }
  return false;
}

std::string coretype_to_string(const CoreTypePtr &t) {
  if (!t) return "?";
  switch (t->kind) {
    case CoreType::Kind::Nat: return "Nat";
    case CoreType::Kind::Fun:
      return "(" + coretype_to_string(t->dom) + " ->" + row_to_string(t->latent) + " " +
             coretype_to_string(t->cod) + ")";
    case CoreType::Kind::Cont:
      return "(" + coretype_to_string(t->dom) + " =>" + row_to_string(t->latent) + " " +
             coretype_to_string(t->cod) + ")";
    case CoreType::Kind::FParam: return "FParam(" + pretype_to_string(t->pre) + ")";
    case CoreType::Kind::Ast: return "AST(" + pretype_to_string(t->pre) + ")";
    case CoreType::Kind::Any: return "any";
  }
  return "?";
}

static std::shared_ptr<NormalForm> base_nf(NormalForm::Kind k) {
  auto n = std::make_shared<NormalForm>();
  n->kind = k;
  return n;
}

NfPtr nf_metavar(std::string x) {
  auto n = base_nf(NormalForm::Kind::MetaVar);
  n->var = std::move(x);
  return n;
}

NfPtr nf_nat(std::uint64_t m) {
  auto n = base_nf(NormalForm::Kind::NatLit);
  n->nat = m;
  return n;
}

NfPtr nf_lam(std::string x, TermPtr body) {
  auto n = base_nf(NormalForm::Kind::Lam);
  n->var = std::move(x);
  n->body = std::move(body);
  return n;
}

NfPtr nf_lam_ann(std::string x, CoreTypePtr binder_type, TermPtr body) {
  auto n = base_nf(NormalForm::Kind::Lam);
  n->var = std::move(x);
  n->body = std::move(body);
  n->lam_ann = std::move(binder_type);
  return n;
}

NfPtr nf_kont(std::string x, TermPtr body) {
  auto n = base_nf(NormalForm::Kind::Kont);
  n->var = std::move(x);
  n->body = std::move(body);
  return n;
}

NfPtr nf_ast_nat(std::uint64_t m) {
  auto n = base_nf(NormalForm::Kind::AstNat);
  n->nat = m;
  return n;
}

NfPtr nf_fparam(FormalParam fp) {
  auto n = base_nf(NormalForm::Kind::FParamV);
  n->fparam = std::move(fp);
  return n;
}

NfPtr nf_ast_var(NfPtr n1) {
  auto n = base_nf(NormalForm::Kind::AstVar);
  n->n1 = std::move(n1);
  return n;
}

NfPtr nf_ast_lam(NfPtr binder, NfPtr body) {
  auto n = base_nf(NormalForm::Kind::AstLam);
  n->n1 = std::move(binder);
  n->n2 = std::move(body);
  return n;
}

NfPtr nf_ast_app(NfPtr f, NfPtr a) {
  auto n = base_nf(NormalForm::Kind::AstApp);
  n->n1 = std::move(f);
  n->n2 = std::move(a);
  return n;
}

NfPtr nf_ast_continue(NfPtr k, NfPtr a) {
  auto n = base_nf(NormalForm::Kind::AstContinue);
  n->n1 = std::move(k);
  n->n2 = std::move(a);
  return n;
}

NfPtr nf_ast_ret(NfPtr inner) {
  auto n = base_nf(NormalForm::Kind::AstRet);
  n->n1 = std::move(inner);
  return n;
}

NfPtr nf_ast_do(NfPtr comp, NfPtr binder, NfPtr body) {
  auto n = base_nf(NormalForm::Kind::AstDo);
  n->n1 = std::move(comp);
  n->n2 = std::move(binder);
  n->n3 = std::move(body);
  return n;
}

NfPtr nf_ast_op(std::string op, NfPtr arg) {
  auto n = base_nf(NormalForm::Kind::AstOp);
  n->op_name = std::move(op);
  n->n1 = std::move(arg);
  return n;
}

NfPtr nf_ast_hwith(NfPtr subject, NfPtr handler) {
  auto n = base_nf(NormalForm::Kind::AstHwith);
  n->n1 = std::move(subject);
  n->n2 = std::move(handler);
  return n;
}

NfPtr nf_ast_hret(NfPtr binder, NfPtr body) {
  auto n = base_nf(NormalForm::Kind::AstHret);
  n->n1 = std::move(binder);
  n->n2 = std::move(body);
  return n;
}

NfPtr nf_ast_hop(std::string op, NfPtr h, NfPtr x, NfPtr k, NfPtr body) {
  auto n = base_nf(NormalForm::Kind::AstHop);
  n->op_name = std::move(op);
  n->n1 = std::move(h);
  n->n2 = std::move(x);
  n->n3 = std::move(k);
  n->n4 = std::move(body);
  return n;
}

NfPtr nf_ast_plus(NfPtr a, NfPtr b) {
  auto n = base_nf(NormalForm::Kind::AstPlus);
  n->n1 = std::move(a);
  n->n2 = std::move(b);
  return n;
}

NfPtr nf_ast_times(NfPtr a, NfPtr b) {
  auto n = base_nf(NormalForm::Kind::AstTimes);
  n->n1 = std::move(a);
  n->n2 = std::move(b);
  return n;
}

static std::shared_ptr<CoreTerm> base_tm(CoreTerm::Kind k) {
  auto t = std::make_shared<CoreTerm>();
  t->kind = k;
  return t;
}

TermPtr tm_app(NfPtr f, NfPtr a) {
  auto t = base_tm(CoreTerm::Kind::App);
  t->n1 = std::move(f);
  t->n2 = std::move(a);
  return t;
}

TermPtr tm_return(NfPtr n) {
  auto t = base_tm(CoreTerm::Kind::Return);
  t->n1 = std::move(n);
  return t;
}

TermPtr tm_do(std::string x, TermPtr t1, TermPtr t2) {
  auto t = base_tm(CoreTerm::Kind::Do);
  t->var = std::move(x);
  t->t1 = std::move(t1);
  t->t2 = std::move(t2);
  return t;
}

TermPtr tm_op(std::string op, NfPtr n) {
  auto t = base_tm(CoreTerm::Kind::Op);
  t->op_name = std::move(op);
  t->n1 = std::move(n);
  return t;
}

TermPtr tm_handle(TermPtr subject, CoreHandlerPtr h) {
  auto t = base_tm(CoreTerm::Kind::Handle);
  t->t1 = std::move(subject);
  t->handler = std::move(h);
  return t;
}

TermPtr tm_continue(NfPtr k, NfPtr v) {
  auto t = base_tm(CoreTerm::Kind::Continue);
  t->n1 = std::move(k);
  t->n2 = std::move(v);
  return t;
}

TermPtr tm_check(NfPtr n) {
  auto t = base_tm(CoreTerm::Kind::Check);
  t->n1 = std::move(n);
  return t;
}

TermPtr tm_check_m(NfPtr n) {
  auto t = base_tm(CoreTerm::Kind::CheckM);
  t->n1 = std::move(n);
  return t;
}

TermPtr tm_mkvar(PreTypePtr pre, std::string classifier) {
  auto t = base_tm(CoreTerm::Kind::Mkvar);
  t->mk_pre = std::move(pre);
  t->mk_classifier = std::move(classifier);
  return t;
}

TermPtr tm_dlet(NfPtr fp, TermPtr body) {
  auto t = base_tm(CoreTerm::Kind::Dlet);
  t->n1 = std::move(fp);
  t->t1 = std::move(body);
  return t;
}

TermPtr tm_tls(TermPtr body) {
  auto t = base_tm(CoreTerm::Kind::Tls);
  t->t1 = std::move(body);
  return t;
}

TermPtr tm_err() { return base_tm(CoreTerm::Kind::Err); }

TermPtr tm_arith(src::ArithOp op, NfPtr a, NfPtr b) {
  auto t = base_tm(CoreTerm::Kind::Arith);
  t->arith = op;
  t->n1 = std::move(a);
  t->n2 = std::move(b);
  return t;
}

// ---------------------------------------------------------------------------
// Free Var(alpha) computation.

namespace {

struct FvState {
  std::set<std::uint64_t> bound;  // AST binders in scope
  std::set<FormalParam> acc;
};

void fv_nf(const NfPtr &n, FvState &st);
void fv_term(const TermPtr &t, FvState &st);

void fv_handler(const CoreHandlerPtr &h, FvState &st) {
  if (!h) return;
  for (const auto &c : h->clauses) fv_term(c.body, st);
}

void fv_with_binder(const NfPtr &binder, const NfPtr &body, FvState &st) {
  if (binder && binder->kind == NormalForm::Kind::FParamV) {
    std::uint64_t id = binder->fparam.id;
    bool fresh = st.bound.insert(id).second;
    fv_nf(body, st);
    if (fresh) st.bound.erase(id);
  } else {
    // Pre-substitution binder position may hold a meta-variable; nothing to
    // bind at the Var(alpha) level then.
    fv_nf(body, st);
  }
}

void fv_nf(const NfPtr &n, FvState &st) {
  if (!n) return;
  switch (n->kind) {
    case NormalForm::Kind::MetaVar:
    case NormalForm::Kind::NatLit:
    case NormalForm::Kind::AstNat:
    case NormalForm::Kind::FParamV:
      return;
    case NormalForm::Kind::Lam:
    case NormalForm::Kind::Kont:
      fv_term(n->body, st);
      return;
    case NormalForm::Kind::AstVar:
      if (n->n1 && n->n1->kind == NormalForm::Kind::FParamV) {
        if (!st.bound.count(n->n1->fparam.id)) st.acc.insert(n->n1->fparam);
      }
      return;
    case NormalForm::Kind::AstLam:
      fv_with_binder(n->n1, n->n2, st);
      return;
    case NormalForm::Kind::AstApp:
    case NormalForm::Kind::AstContinue:
    case NormalForm::Kind::AstPlus:
    case NormalForm::Kind::AstTimes:
    case NormalForm::Kind::AstHwith:
      fv_nf(n->n1, st);
      fv_nf(n->n2, st);
      return;
    case NormalForm::Kind::AstRet:
    case NormalForm::Kind::AstOp:
      fv_nf(n->n1, st);
      return;
    case NormalForm::Kind::AstDo:
      fv_nf(n->n1, st);
      fv_with_binder(n->n2, n->n3, st);
      return;
    case NormalForm::Kind::AstHret:
      fv_with_binder(n->n1, n->n2, st);
      return;
    case NormalForm::Kind::AstHop: {
      fv_nf(n->n1, st);
      std::vector<std::uint64_t> fresh;
      for (const NfPtr &b : {n->n2, n->n3}) {
        if (b && b->kind == NormalForm::Kind::FParamV && st.bound.insert(b->fparam.id).second)
          fresh.push_back(b->fparam.id);
      }
      fv_nf(n->n4, st);
      for (auto id : fresh) st.bound.erase(id);
      return;
    }
  }
}

void fv_term(const TermPtr &t, FvState &st) {
  if (!t) return;
  switch (t->kind) {
    case CoreTerm::Kind::App:
    case CoreTerm::Kind::Continue:
    case CoreTerm::Kind::Arith:
      fv_nf(t->n1, st);
      fv_nf(t->n2, st);
      return;
    case CoreTerm::Kind::Return:
    case CoreTerm::Kind::Op:
    case CoreTerm::Kind::Check:
    case CoreTerm::Kind::CheckM:
      fv_nf(t->n1, st);
      return;
    case CoreTerm::Kind::Do:
      fv_term(t->t1, st);
      fv_term(t->t2, st);
      return;
    case CoreTerm::Kind::Handle:
      fv_term(t->t1, st);
      fv_handler(t->handler, st);
      return;
    case CoreTerm::Kind::Mkvar:
    case CoreTerm::Kind::Err:
      return;
    case CoreTerm::Kind::Dlet:
      fv_nf(t->n1, st);
      fv_term(t->t1, st);
      return;
    case CoreTerm::Kind::Tls:
      fv_term(t->t1, st);
      return;
  }
}

}  // namespace

std::set<FormalParam> freevars(const NfPtr &n) {
  FvState st;
  fv_nf(n, st);
  return st.acc;
}

std::set<FormalParam> freevars_term(const TermPtr &t) {
  FvState st;
  fv_term(t, st);
  return st.acc;
}

std::set<std::string> handler_dom(const CoreHandlerPtr &h) {
  std::set<std::string> dom;
  if (!h) return dom;
  for (const auto &c : h->clauses)
    if (!c.is_return) dom.insert(c.op_name);
  return dom;
}

// ---------------------------------------------------------------------------
// Meta-variable free variables and substitution.

namespace {

void mfv_nf(const NfPtr &n, std::set<std::string> &bound, std::set<std::string> &acc);

void mfv_term(const TermPtr &t, std::set<std::string> &bound, std::set<std::string> &acc) {
  if (!t) return;
  switch (t->kind) {
    case CoreTerm::Kind::App:
    case CoreTerm::Kind::Continue:
    case CoreTerm::Kind::Arith:
      mfv_nf(t->n1, bound, acc);
      mfv_nf(t->n2, bound, acc);
      return;
    case CoreTerm::Kind::Return:
    case CoreTerm::Kind::Op:
    case CoreTerm::Kind::Check:
    case CoreTerm::Kind::CheckM:
      mfv_nf(t->n1, bound, acc);
      return;
    case CoreTerm::Kind::Do: {
      mfv_term(t->t1, bound, acc);
      bool fresh = bound.insert(t->var).second;
      mfv_term(t->t2, bound, acc);
      if (fresh) bound.erase(t->var);
      return;
    }
    case CoreTerm::Kind::Handle: {
      mfv_term(t->t1, bound, acc);
      for (const auto &c : t->handler->clauses) {
        std::set<std::string> b2 = bound;
        b2.insert(c.x);
        if (!c.is_return) b2.insert(c.k);
        mfv_term(c.body, b2, acc);
      }
      return;
    }
    case CoreTerm::Kind::Mkvar:
    case CoreTerm::Kind::Err:
      return;
    case CoreTerm::Kind::Dlet:
      mfv_nf(t->n1, bound, acc);
      mfv_term(t->t1, bound, acc);
      return;
    case CoreTerm::Kind::Tls:
      mfv_term(t->t1, bound, acc);
      return;
  }
}

void mfv_nf(const NfPtr &n, std::set<std::string> &bound, std::set<std::string> &acc) {
  if (!n) return;
  switch (n->kind) {
    case NormalForm::Kind::MetaVar:
      if (!bound.count(n->var)) acc.insert(n->var);
      return;
    case NormalForm::Kind::Lam:
    case NormalForm::Kind::Kont: {
      bool fresh = bound.insert(n->var).second;
      mfv_term(n->body, bound, acc);
      if (fresh) bound.erase(n->var);
      return;
    }
    default:
      mfv_nf(n->n1, bound, acc);
      mfv_nf(n->n2, bound, acc);
      mfv_nf(n->n3, bound, acc);
      mfv_nf(n->n4, bound, acc);
      return;
  }
}

std::string fresh_name(const std::string &base, const std::set<std::string> &avoid) {
  std::string cand = base + "'";
  int i = 0;
  while (avoid.count(cand)) cand = base + "'" + std::to_string(i++);
  return cand;
}

struct SubstCtx {
  const NfPtr &replacement;
  std::string target;
  std::set<std::string> repl_fvs;
};

NfPtr subst_nf_impl(const NfPtr &m, SubstCtx &cx);
TermPtr subst_term_impl(const TermPtr &t, SubstCtx &cx);

// Renames meta binder b if it would capture a free variable of the
// replacement; runtime substitutions use closed values so this is rare.
template <typename Body, typename Rebuild>
auto subst_under_binder(const std::string &b, const Body &body, SubstCtx &cx, Rebuild rebuild) {
  if (b == cx.target) return rebuild(b, body);  // shadowed: stop
  if (cx.repl_fvs.count(b)) {
    std::set<std::string> avoid = cx.repl_fvs;
    std::set<std::string> bound;
    std::set<std::string> body_fvs;
    if constexpr (std::is_same_v<Body, TermPtr>) {
      mfv_term(body, bound, body_fvs);
    } else {
      mfv_nf(body, bound, body_fvs);
    }
    avoid.insert(body_fvs.begin(), body_fvs.end());
    std::string nb = fresh_name(b, avoid);
    SubstCtx rn{nf_metavar(nb), b, {nb}};
    if constexpr (std::is_same_v<Body, TermPtr>) {
      TermPtr renamed = subst_term_impl(body, rn);
      return rebuild(nb, subst_term_impl(renamed, cx));
    } else {
      auto renamed = subst_nf_impl(body, rn);
      return rebuild(nb, subst_nf_impl(renamed, cx));
    }
  }
  if constexpr (std::is_same_v<Body, TermPtr>) {
    return rebuild(b, subst_term_impl(body, cx));
  } else {
    return rebuild(b, subst_nf_impl(body, cx));
  }
}

NfPtr subst_nf_impl(const NfPtr &m, SubstCtx &cx) {
  if (!m) return m;
  switch (m->kind) {
    case NormalForm::Kind::MetaVar:
      return m->var == cx.target ? cx.replacement : m;
    case NormalForm::Kind::NatLit:
    case NormalForm::Kind::AstNat:
    case NormalForm::Kind::FParamV:
      return m;
    case NormalForm::Kind::Lam:
      return subst_under_binder(m->var, m->body, cx, [&](const std::string &b, TermPtr t) {
        return nf_lam_ann(b, m->lam_ann, std::move(t));
      });
    case NormalForm::Kind::Kont:
      return subst_under_binder(m->var, m->body, cx, [&](const std::string &b, TermPtr t) {
        return nf_kont(b, std::move(t));
      });
    default: {
      auto copy = std::make_shared<NormalForm>(*m);
      copy->n1 = subst_nf_impl(m->n1, cx);
      copy->n2 = subst_nf_impl(m->n2, cx);
      copy->n3 = subst_nf_impl(m->n3, cx);
      copy->n4 = subst_nf_impl(m->n4, cx);
      return copy;
    }
  }
}

TermPtr subst_term_impl(const TermPtr &t, SubstCtx &cx) {
  if (!t) return t;
  switch (t->kind) {
    case CoreTerm::Kind::App:
      return tm_app(subst_nf_impl(t->n1, cx), subst_nf_impl(t->n2, cx));
    case CoreTerm::Kind::Return:
      return tm_return(subst_nf_impl(t->n1, cx));
    case CoreTerm::Kind::Do: {
      TermPtr t1 = subst_term_impl(t->t1, cx);
      return subst_under_binder(t->var, t->t2, cx, [&](const std::string &b, TermPtr t2) {
        return tm_do(b, t1, std::move(t2));
      });
    }
    case CoreTerm::Kind::Op:
      return tm_op(t->op_name, subst_nf_impl(t->n1, cx));
    case CoreTerm::Kind::Handle: {
      auto h = std::make_shared<CoreHandler>();
      for (const auto &c : t->handler->clauses) {
        CoreHClause nc = c;
        if (c.x == cx.target || (!c.is_return && c.k == cx.target)) {
          // shadowed inside the clause body
        } else if (cx.repl_fvs.count(c.x) || (!c.is_return && cx.repl_fvs.count(c.k))) {
          // rename clause binders that would capture
          std::set<std::string> bound, body_fvs;
          mfv_term(c.body, bound, body_fvs);
          std::set<std::string> avoid = cx.repl_fvs;
          avoid.insert(body_fvs.begin(), body_fvs.end());
          TermPtr body = c.body;
          if (cx.repl_fvs.count(c.x)) {
            std::string nx = fresh_name(c.x, avoid);
            avoid.insert(nx);
            SubstCtx rn{nf_metavar(nx), c.x, {nx}};
            body = subst_term_impl(body, rn);
            nc.x = nx;
          }
          if (!c.is_return && cx.repl_fvs.count(c.k)) {
            std::string nk = fresh_name(c.k, avoid);
            SubstCtx rn{nf_metavar(nk), c.k, {nk}};
            body = subst_term_impl(body, rn);
            nc.k = nk;
          }
          nc.body = subst_term_impl(body, cx);
          h->clauses.push_back(std::move(nc));
          continue;
        } else {
          nc.body = subst_term_impl(c.body, cx);
          h->clauses.push_back(std::move(nc));
          continue;
        }
        h->clauses.push_back(std::move(nc));
      }
      return tm_handle(subst_term_impl(t->t1, cx), h);
    }
    case CoreTerm::Kind::Continue:
      return tm_continue(subst_nf_impl(t->n1, cx), subst_nf_impl(t->n2, cx));
    case CoreTerm::Kind::Check:
      return tm_check(subst_nf_impl(t->n1, cx));
    case CoreTerm::Kind::CheckM:
      return tm_check_m(subst_nf_impl(t->n1, cx));
    case CoreTerm::Kind::Mkvar:
    case CoreTerm::Kind::Err:
      return t;
    case CoreTerm::Kind::Dlet:
      return tm_dlet(subst_nf_impl(t->n1, cx), subst_term_impl(t->t1, cx));
    case CoreTerm::Kind::Tls:
      return tm_tls(subst_term_impl(t->t1, cx));
    case CoreTerm::Kind::Arith:
      return tm_arith(t->arith, subst_nf_impl(t->n1, cx), subst_nf_impl(t->n2, cx));
  }
  return t;
}

}  // namespace

std::set<std::string> meta_freevars(const NfPtr &n) {
  std::set<std::string> bound, acc;
  mfv_nf(n, bound, acc);
  return acc;
}

std::set<std::string> meta_freevars_term(const TermPtr &t) {
  std::set<std::string> bound, acc;
  mfv_term(t, bound, acc);
  return acc;
}

TermPtr subst(const TermPtr &t, const NfPtr &n, const std::string &x) {
  SubstCtx cx{n, x, meta_freevars(n)};
  return subst_term_impl(t, cx);
}

NfPtr subst_nf(const NfPtr &m, const NfPtr &n, const std::string &x) {
  SubstCtx cx{n, x, meta_freevars(n)};
  return subst_nf_impl(m, cx);
}

// ---------------------------------------------------------------------------
// Equality.

bool handler_equal(const CoreHandlerPtr &a, const CoreHandlerPtr &b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->clauses.size() != b->clauses.size()) return false;
  for (std::size_t i = 0; i < a->clauses.size(); ++i) {
    const auto &ca = a->clauses[i];
    const auto &cb = b->clauses[i];
    if (ca.is_return != cb.is_return || ca.op_name != cb.op_name || ca.x != cb.x || ca.k != cb.k)
      return false;
    if (!term_equal(ca.body, cb.body)) return false;
  }
  return true;
}

bool nf_equal(const NfPtr &a, const NfPtr &b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case NormalForm::Kind::MetaVar: return a->var == b->var;
    case NormalForm::Kind::NatLit:
    case NormalForm::Kind::AstNat:
      return a->nat == b->nat;
    case NormalForm::Kind::Lam:
    case NormalForm::Kind::Kont:
      return a->var == b->var && term_equal(a->body, b->body);
    case NormalForm::Kind::FParamV:
      return a->fparam == b->fparam;
    default:
      if (a->op_name != b->op_name) return false;
      return nf_equal(a->n1, b->n1) && nf_equal(a->n2, b->n2) && nf_equal(a->n3, b->n3) &&
             nf_equal(a->n4, b->n4);
  }
}

bool term_equal(const TermPtr &a, const TermPtr &b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case CoreTerm::Kind::App:
    case CoreTerm::Kind::Continue:
      return nf_equal(a->n1, b->n1) && nf_equal(a->n2, b->n2);
    case CoreTerm::Kind::Return:
    case CoreTerm::Kind::Check:
    case CoreTerm::Kind::CheckM:
      return nf_equal(a->n1, b->n1);
    case CoreTerm::Kind::Do:
      return a->var == b->var && term_equal(a->t1, b->t1) && term_equal(a->t2, b->t2);
    case CoreTerm::Kind::Op:
      return a->op_name == b->op_name && nf_equal(a->n1, b->n1);
    case CoreTerm::Kind::Handle:
      return term_equal(a->t1, b->t1) && handler_equal(a->handler, b->handler);
    case CoreTerm::Kind::Mkvar:
      return pretype_equal(a->mk_pre, b->mk_pre) && a->mk_classifier == b->mk_classifier;
    case CoreTerm::Kind::Dlet:
      return nf_equal(a->n1, b->n1) && term_equal(a->t1, b->t1);
    case CoreTerm::Kind::Tls:
      return term_equal(a->t1, b->t1);
    case CoreTerm::Kind::Err:
      return true;
    case CoreTerm::Kind::Arith:
      return a->arith == b->arith && nf_equal(a->n1, b->n1) && nf_equal(a->n2, b->n2);
  }
  return false;
}

bool nf_is_ast(const NfPtr &n) {
  if (!n) return false;
  switch (n->kind) {
    case NormalForm::Kind::AstNat:
    case NormalForm::Kind::AstVar:
    case NormalForm::Kind::AstLam:
    case NormalForm::Kind::AstApp:
    case NormalForm::Kind::AstContinue:
    case NormalForm::Kind::AstRet:
    case NormalForm::Kind::AstDo:
    case NormalForm::Kind::AstOp:
    case NormalForm::Kind::AstHwith:
    case NormalForm::Kind::AstHret:
    case NormalForm::Kind::AstHop:
    case NormalForm::Kind::AstPlus:
    case NormalForm::Kind::AstTimes:
      return true;
    default:
      return false;
  }
}

// ---------------------------------------------------------------------------
// Administrative normalization and alpha canonicalization.

namespace {

NfPtr norm_nf(const NfPtr &n);

TermPtr norm_term(const TermPtr &t) {
  if (!t) return t;
  switch (t->kind) {
    case CoreTerm::Kind::Do: {
      TermPtr t1 = norm_term(t->t1);
      TermPtr t2 = norm_term(t->t2);
      if (t1->kind == CoreTerm::Kind::Return) return norm_term(subst(t2, t1->n1, t->var));
      return tm_do(t->var, t1, t2);
    }
    case CoreTerm::Kind::App:
      return tm_app(norm_nf(t->n1), norm_nf(t->n2));
    case CoreTerm::Kind::Return:
      return tm_return(norm_nf(t->n1));
    case CoreTerm::Kind::Op:
      return tm_op(t->op_name, norm_nf(t->n1));
    case CoreTerm::Kind::Handle: {
      auto h = std::make_shared<CoreHandler>();
      for (const auto &c : t->handler->clauses) {
        CoreHClause nc = c;
        nc.body = norm_term(c.body);
        h->clauses.push_back(std::move(nc));
      }
      return tm_handle(norm_term(t->t1), h);
    }
    case CoreTerm::Kind::Continue:
      return tm_continue(norm_nf(t->n1), norm_nf(t->n2));
    case CoreTerm::Kind::Check:
      return tm_check(norm_nf(t->n1));
    case CoreTerm::Kind::CheckM:
      return tm_check_m(norm_nf(t->n1));
    case CoreTerm::Kind::Mkvar:
    case CoreTerm::Kind::Err:
      return t;
    case CoreTerm::Kind::Dlet:
      return tm_dlet(norm_nf(t->n1), norm_term(t->t1));
    case CoreTerm::Kind::Tls:
      return tm_tls(norm_term(t->t1));
    case CoreTerm::Kind::Arith:
      return tm_arith(t->arith, norm_nf(t->n1), norm_nf(t->n2));
  }
  return t;
}

NfPtr norm_nf(const NfPtr &n) {
  if (!n) return n;
  switch (n->kind) {
    case NormalForm::Kind::Lam:
      return nf_lam_ann(n->var, n->lam_ann, norm_term(n->body));
    case NormalForm::Kind::Kont:
      return nf_kont(n->var, norm_term(n->body));
    case NormalForm::Kind::MetaVar:
    case NormalForm::Kind::NatLit:
    case NormalForm::Kind::AstNat:
    case NormalForm::Kind::FParamV:
      return n;
    default: {
      auto copy = std::make_shared<NormalForm>(*n);
      copy->n1 = norm_nf(n->n1);
      copy->n2 = norm_nf(n->n2);
      copy->n3 = norm_nf(n->n3);
      copy->n4 = norm_nf(n->n4);
      return copy;
    }
  }
}

struct AlphaState {
  std::map<std::string, std::string> renames;
  int next = 0;

  std::string bind(const std::string &x) {
    std::string fresh = "v" + std::to_string(next++);
    renames[x] = fresh;
    return fresh;
  }
};

NfPtr alpha_nf(const NfPtr &n, AlphaState st);

TermPtr alpha_term(const TermPtr &t, AlphaState st, AlphaState *shared) {
  // `shared` threads the counter through sequential siblings.
  if (!t) return t;
  auto advance = [&](auto &&fn) {
    auto r = fn();
    if (shared) shared->next = st.next;
    return r;
  };
  (void)advance;
  switch (t->kind) {
    case CoreTerm::Kind::Do: {
      TermPtr t1 = alpha_term(t->t1, st, &st);
      AlphaState inner = st;
      std::string b = inner.bind(t->var);
      TermPtr t2 = alpha_term(t->t2, inner, &inner);
      if (shared) shared->next = inner.next;
      return tm_do(b, t1, t2);
    }
    case CoreTerm::Kind::App: {
      auto r = tm_app(alpha_nf(t->n1, st), alpha_nf(t->n2, st));
      return r;
    }
    case CoreTerm::Kind::Return:
      return tm_return(alpha_nf(t->n1, st));
    case CoreTerm::Kind::Op:
      return tm_op(t->op_name, alpha_nf(t->n1, st));
    case CoreTerm::Kind::Handle: {
      TermPtr t1 = alpha_term(t->t1, st, &st);
      auto h = std::make_shared<CoreHandler>();
      for (const auto &c : t->handler->clauses) {
        AlphaState inner = st;
        CoreHClause nc = c;
        nc.x = inner.bind(c.x);
        if (!c.is_return) nc.k = inner.bind(c.k);
        nc.body = alpha_term(c.body, inner, &inner);
        st.next = inner.next;
        h->clauses.push_back(std::move(nc));
      }
      if (shared) shared->next = st.next;
      return tm_handle(t1, h);
    }
    case CoreTerm::Kind::Continue:
      return tm_continue(alpha_nf(t->n1, st), alpha_nf(t->n2, st));
    case CoreTerm::Kind::Check:
      return tm_check(alpha_nf(t->n1, st));
    case CoreTerm::Kind::CheckM:
      return tm_check_m(alpha_nf(t->n1, st));
    case CoreTerm::Kind::Mkvar:
    case CoreTerm::Kind::Err:
      return t;
    case CoreTerm::Kind::Dlet:
      return tm_dlet(alpha_nf(t->n1, st), alpha_term(t->t1, st, shared));
    case CoreTerm::Kind::Tls:
      return tm_tls(alpha_term(t->t1, st, shared));
    case CoreTerm::Kind::Arith:
      return tm_arith(t->arith, alpha_nf(t->n1, st), alpha_nf(t->n2, st));
  }
  return t;
}

NfPtr alpha_nf(const NfPtr &n, AlphaState st) {
  if (!n) return n;
  switch (n->kind) {
    case NormalForm::Kind::MetaVar: {
      auto it = st.renames.find(n->var);
      return it == st.renames.end() ? n : nf_metavar(it->second);
    }
    case NormalForm::Kind::Lam:
    case NormalForm::Kind::Kont: {
      AlphaState inner = st;
      std::string b = inner.bind(n->var);
      TermPtr body = alpha_term(n->body, inner, &inner);
      return n->kind == NormalForm::Kind::Lam ? nf_lam_ann(b, n->lam_ann, body) : nf_kont(b, body);
    }
    case NormalForm::Kind::NatLit:
    case NormalForm::Kind::AstNat:
    case NormalForm::Kind::FParamV:
      return n;
    default: {
      auto copy = std::make_shared<NormalForm>(*n);
      copy->n1 = alpha_nf(n->n1, st);
      copy->n2 = alpha_nf(n->n2, st);
      copy->n3 = alpha_nf(n->n3, st);
      copy->n4 = alpha_nf(n->n4, st);
      return copy;
    }
  }
}

void census_nf(const NfPtr &n, NodeCensus &c);

void census_term(const TermPtr &t, NodeCensus &c) {
  if (!t) return;
  switch (t->kind) {
    case CoreTerm::Kind::Check: c.checks++; break;
    case CoreTerm::Kind::CheckM: c.check_ms++; break;
    case CoreTerm::Kind::Dlet: c.dlets++; break;
    case CoreTerm::Kind::Tls: c.tls++; break;
    case CoreTerm::Kind::Mkvar: c.mkvars++; break;
    default: break;
  }
  census_nf(t->n1, c);
  census_nf(t->n2, c);
  census_term(t->t1, c);
  census_term(t->t2, c);
  if (t->handler)
    for (const auto &cl : t->handler->clauses) census_term(cl.body, c);
}

void census_nf(const NfPtr &n, NodeCensus &c) {
  if (!n) return;
  census_term(n->body, c);
  census_nf(n->n1, c);
  census_nf(n->n2, c);
  census_nf(n->n3, c);
  census_nf(n->n4, c);
}

}  // namespace

TermPtr admin_normalize(const TermPtr &t) { return norm_term(t); }

TermPtr alpha_canonicalize(const TermPtr &t) {
  AlphaState st;
  return alpha_term(t, st, nullptr);
}

NodeCensus census(const TermPtr &t) {
  NodeCensus c;
  census_term(t, c);
  return c;
}

}  // namespace sled::core
