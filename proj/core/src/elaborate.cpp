#include "sled/elaborate.hpp"

#include <stdexcept>

namespace sled {

using namespace core;
using src::Mode;

const char *check_kind_name(CheckKind k) {
  switch (k) {
    case CheckKind::Naive: return "naive";
    case CheckKind::Lazy: return "lazy";
    case CheckKind::Eager: return "eager";
    case CheckKind::C4C: return "c4c";
  }
  return "?";
}

namespace {

struct Policy {
  bool dlet_c = false;
  bool dlet_q = false;
  bool check_tls = false;
  bool check_q_ctor = false;
  bool use_m = false;
};

Policy policy_for(CheckKind k) {
  switch (k) {
    case CheckKind::Naive: return {};
    case CheckKind::Lazy: return {true, false, true, false, false};
    case CheckKind::Eager: return {true, true, true, true, false};
    case CheckKind::C4C: return {true, true, true, true, true};
  }
  return {};
}

struct Elaborator {
  Policy pol;
  const ClassifierTags *tags = nullptr;
  int fresh = 0;

  std::string gen(const char *role) { return std::string("%") + role + std::to_string(fresh++); }

  std::string tag_of(const void *node) const {
    if (!tags) return "";
    auto it = tags->find(node);
    return it == tags->end() ? "" : it->second;
  }

  TermPtr chk(NfPtr n) const { return pol.use_m ? tm_check_m(std::move(n)) : tm_check(std::move(n)); }

  bool dlet_here(Mode m) const {
    return (m == Mode::Compile && pol.dlet_c) || (m == Mode::Quote && pol.dlet_q);
  }

  bool check_here(Mode m) const { return m == Mode::Quote && pol.check_q_ctor; }

  // Emits the final constructor of a quote/compile-mode elaboration.
  TermPtr ctor(Mode m, NfPtr n) const {
    if (check_here(m)) return chk(std::move(n));
    return tm_return(std::move(n));
  }

  // Wraps the body computation of a binder form: optionally dlet the fresh
  // formal parameters, then check the constructed node after the dlet pops.
  TermPtr wrap_binder(Mode m, const std::vector<std::string> &params, TermPtr core) {
    if (dlet_here(m)) {
      for (auto it = params.rbegin(); it != params.rend(); ++it)
        core = tm_dlet(nf_metavar(*it), core);
    }
    if (check_here(m)) {
      std::string u = gen("u");
      core = tm_do(u, core, chk(nf_metavar(u)));
    }
    return core;
  }

  PreTypePtr erased(const src::VTypePtr &ann, const char *what) const {
    if (!ann) throw std::logic_error(std::string("elaborate: missing annotation on ") + what);
    return src::erase(ann);
  }

  // -- splice-mode elaboration (the identity shape) ---------------------------

  NfPtr value_s(const src::ValuePtr &v) {
    switch (v->kind) {
      case src::Value::Kind::Var: return nf_metavar(v->name);
      case src::Value::Kind::Nat: return nf_nat(v->nat);
      case src::Value::Kind::Lam:
        return nf_lam_ann(v->binder, v->ann ? elaborate_vtype(v->ann) : nullptr,
                          expr_s(v->body));
    }
    throw std::logic_error("elaborate: malformed value");
  }

  CoreHandlerPtr handler_s(const src::HandlerPtr &h) {
    auto out = std::make_shared<CoreHandler>();
    for (const auto &c : h->clauses) {
      CoreHClause nc;
      nc.is_return = c.is_return;
      nc.op_name = c.op_name;
      nc.x = c.x;
      nc.k = c.k;
      nc.body = expr_s(c.body);
      out->clauses.push_back(std::move(nc));
    }
    return out;
  }

  TermPtr expr_s(const src::ExprPtr &e) {
    using K = src::Expr::Kind;
    switch (e->kind) {
      case K::App: return tm_app(value_s(e->v1), value_s(e->v2));
      case K::Return: return tm_return(value_s(e->v1));
      case K::Do: return tm_do(e->binder, expr_s(e->e1), expr_s(e->e2));
      case K::Op: return tm_op(e->op_name, value_s(e->v1));
      case K::Handle: return tm_handle(expr_s(e->inner), handler_s(e->handler));
      case K::Continue: return tm_continue(value_s(e->v1), value_s(e->v2));
      case K::Quote: return expr_cq(e->inner, Mode::Quote);
      case K::Splice: throw std::logic_error("elaborate: splice inside splice");
      case K::Arith: return tm_arith(e->arith, value_s(e->v1), value_s(e->v2));
    }
    throw std::logic_error("elaborate: malformed expression");
  }

  // -- compile/quote-mode elaboration (AST building) --------------------------

  TermPtr value_cq(const src::ValuePtr &v, Mode m) {
    switch (v->kind) {
      case src::Value::Kind::Var:
        return ctor(m, nf_ast_var(nf_metavar(v->name)));
      case src::Value::Kind::Nat:
        // Nat(m) has no variables; its check is vacuous and omitted.
        return tm_return(nf_ast_nat(v->nat));
      case src::Value::Kind::Lam: {
        std::string body = gen("body");
        TermPtr core = tm_do(body, expr_cq(v->body, m),
                             tm_return(nf_ast_lam(nf_metavar(v->binder), nf_metavar(body))));
        core = wrap_binder(m, {v->binder}, core);
        return tm_do(v->binder, tm_mkvar(erased(v->ann, "lambda binder"), tag_of(v.get())), core);
      }
    }
    throw std::logic_error("elaborate: malformed value");
  }

  TermPtr handler_cq(const src::HandlerPtr &h, Mode m) {
    const src::HClause *ret = nullptr;
    for (const auto &c : h->clauses)
      if (c.is_return) ret = &c;
    if (!ret) throw std::logic_error("elaborate: handler without return clause");

    std::string a = gen("a");
    TermPtr core = tm_do(a, expr_cq(ret->body, m),
                         tm_return(nf_ast_hret(nf_metavar(ret->x), nf_metavar(a))));
    core = wrap_binder(m, {ret->x}, core);
    TermPtr acc = tm_do(ret->x, tm_mkvar(erased(ret->x_ann, "return clause binder"), tag_of(ret)), core);

    for (const auto &c : h->clauses) {
      if (c.is_return) continue;
      std::string hv = gen("h");
      std::string b = gen("b");
      TermPtr inner = tm_do(b, expr_cq(c.body, m),
                            tm_return(nf_ast_hop(c.op_name, nf_metavar(hv), nf_metavar(c.x),
                                                 nf_metavar(c.k), nf_metavar(b))));
      inner = wrap_binder(m, {c.x, c.k}, inner);
      inner = tm_do(c.k, tm_mkvar(erased(c.k_ann, "clause continuation binder"), tag_of(&c)), inner);
      inner = tm_do(c.x, tm_mkvar(erased(c.x_ann, "clause binder")), inner);
      acc = tm_do(hv, acc, inner);
    }
    return acc;
  }

  TermPtr expr_cq(const src::ExprPtr &e, Mode m) {
    using K = src::Expr::Kind;
    switch (e->kind) {
      case K::App: {
        std::string f = gen("f"), a = gen("a");
        return tm_do(f, value_cq(e->v1, m),
                     tm_do(a, value_cq(e->v2, m),
                           ctor(m, nf_ast_app(nf_metavar(f), nf_metavar(a)))));
      }
      case K::Return: {
        std::string a = gen("a");
        return tm_do(a, value_cq(e->v1, m), ctor(m, nf_ast_ret(nf_metavar(a))));
      }
      case K::Do: {
        std::string a = gen("a"), b = gen("b");
        TermPtr core =
            tm_do(b, expr_cq(e->e2, m),
                  tm_return(nf_ast_do(nf_metavar(a), nf_metavar(e->binder), nf_metavar(b))));
        core = wrap_binder(m, {e->binder}, core);
        core = tm_do(e->binder, tm_mkvar(erased(e->ann, "do binder"), tag_of(e.get())), core);
        return tm_do(a, expr_cq(e->e1, m), core);
      }
      case K::Op: {
        std::string a = gen("a");
        return tm_do(a, value_cq(e->v1, m), ctor(m, nf_ast_op(e->op_name, nf_metavar(a))));
      }
      case K::Handle: {
        std::string a = gen("a"), b = gen("b");
        return tm_do(a, expr_cq(e->inner, m),
                     tm_do(b, handler_cq(e->handler, m),
                           ctor(m, nf_ast_hwith(nf_metavar(a), nf_metavar(b)))));
      }
      case K::Continue: {
        std::string f = gen("f"), a = gen("a");
        return tm_do(f, value_cq(e->v1, m),
                     tm_do(a, value_cq(e->v2, m),
                           ctor(m, nf_ast_continue(nf_metavar(f), nf_metavar(a)))));
      }
      case K::Quote:
        throw std::logic_error("elaborate: quote in compile/quote mode");
      case K::Splice: {
        if (m == Mode::Quote) return expr_s(e->inner);
        TermPtr core = tm_tls(expr_s(e->inner));
        if (pol.check_tls) {
          std::string s = gen("s");
          return tm_do(s, core, chk(nf_metavar(s)));
        }
        return core;
      }
      case K::Arith: {
        std::string a = gen("a"), b = gen("b");
        NfPtr node = e->arith == src::ArithOp::Plus
                         ? nf_ast_plus(nf_metavar(a), nf_metavar(b))
                         : nf_ast_times(nf_metavar(a), nf_metavar(b));
        if (e->arith == src::ArithOp::Monus)
          throw std::logic_error("elaborate: monus has no AST constructor");
        return tm_do(a, value_cq(e->v1, m), tm_do(b, value_cq(e->v2, m), ctor(m, node)));
      }
    }
    throw std::logic_error("elaborate: malformed expression");
  }
};

}  // namespace

core::TermPtr elaborate(const src::Program &annotated, CheckKind kind, const ClassifierTags *tags) {
  Elaborator el;
  el.pol = policy_for(kind);
  el.tags = tags;
  return el.expr_cq(annotated.body, Mode::Compile);
}

core::TermPtr elaborate_expr(const src::ExprPtr &annotated, src::Mode mode, CheckKind kind) {
  Elaborator el;
  el.pol = policy_for(kind);
  if (mode == Mode::Splice) return el.expr_s(annotated);
  return el.expr_cq(annotated, mode);
}

core::TermPtr elaborate_value(const src::ValuePtr &annotated, src::Mode mode, CheckKind kind) {
  Elaborator el;
  el.pol = policy_for(kind);
  if (mode == Mode::Splice) return tm_return(el.value_s(annotated));
  return el.value_cq(annotated, mode);
}

core::TermPtr elaborate_instrumented_naive(const src::Program &annotated) {
  Elaborator el;
  el.pol = Policy{true, false, false, false, false};
  return el.expr_cq(annotated.body, Mode::Compile);
}

core::CoreTypePtr elaborate_vtype(const src::VTypePtr &t) {
  using K = src::VType::Kind;
  if (t->level == src::Level::RunTime) return ct_ast(src::erase(t));
  switch (t->kind) {
    case K::Nat: return ct_nat();
    case K::Fun: return ct_fun(elaborate_vtype(t->dom), t->latent, elaborate_vtype(t->cod));
    case K::Cont: return ct_cont(elaborate_vtype(t->dom), t->latent, elaborate_vtype(t->cod));
    case K::Code: return ct_ast(src::erase_comp(t->code_val, t->code_row));
  }
  throw std::logic_error("elaborate_vtype: malformed type");
}

core::CompType elaborate_expr_type_cq(const src::VTypePtr &t0, const src::EffectRow &delta,
                                      const src::EffectRow &xi) {
  return {ct_ast(src::erase_comp(t0, xi)), delta};
}

core::CoreTypePtr elaborate_context_entry(const src::VTypePtr &t) {
  if (t->level == src::Level::RunTime) return ct_fparam(src::erase(t));
  return elaborate_vtype(t);
}

std::vector<std::pair<std::string, core::CoreTypePtr>> elaborate_context(
    const src::TypingContext &ctx) {
  std::vector<std::pair<std::string, core::CoreTypePtr>> out;
  for (const auto &[name, ty] : ctx.entries) out.emplace_back(name, elaborate_context_entry(ty));
  return out;
}

core::CoreSigTable build_core_sigs(const std::vector<src::EffectSig> &sigs) {
  core::CoreSigTable table;
  for (const auto &s : sigs) {
    if (s.level == src::Level::CompileTime) {
      table.machine_ops[s.name] = {elaborate_vtype(s.arg), elaborate_vtype(s.result)};
    } else {
      table.ast_ops[s.name] = {src::erase(s.arg), src::erase(s.result)};
    }
  }
  return table;
}

}  // namespace sled
