#include "sled/typeck.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

#include "sled/print.hpp"

namespace sled::src {

namespace {

struct TypeError {
  Diagnostic diag;
};

[[noreturn]] void err(SourceLoc loc, const std::string &msg,
                      std::vector<std::string> vars = {}) {
  throw TypeError{{Severity::Error, msg, loc, std::move(vars)}};
}

EffectRow row_union(const EffectRow &a, const EffectRow &b) {
  EffectRow r = a;
  r.insert(b.begin(), b.end());
  return r;
}

struct Checker {
  std::map<std::string, EffectSig> rt_sigs, ct_sigs;

  // -- annotation resolution -------------------------------------------------
  // Annotations are parsed without levels; the binder's mode decides them.
  VTypePtr resolve(const VTypePtr &t, Level lv, SourceLoc loc) {
    if (!t) err(loc, "missing type annotation");
    switch (t->kind) {
      case VType::Kind::Nat:
        return nat_type(lv);
      case VType::Kind::Fun:
      case VType::Kind::Cont: {
        validate_row(t->latent, lv, loc);
        VTypePtr dom = resolve(t->dom, lv, loc);
        VTypePtr cod = resolve(t->cod, lv, loc);
        return t->kind == VType::Kind::Fun ? fun_type(lv, dom, t->latent, cod)
                                           : cont_type(lv, dom, t->latent, cod);
      }
      case VType::Kind::Code: {
        if (lv == Level::RunTime)
          err(loc, "Code types live at the compile-time level and cannot annotate a "
                   "run-time (quote/compile mode) binder");
        validate_row(t->code_row, Level::RunTime, loc);
        VTypePtr val = resolve(t->code_val, Level::RunTime, loc);
        return code_type(val, t->code_row, t->classifier);
      }
    }
    err(loc, "malformed type");
  }

  void validate_row(const EffectRow &row, Level lv, SourceLoc loc) {
    const auto &sigs = lv == Level::RunTime ? rt_sigs : ct_sigs;
    for (const auto &op : row) {
      if (!sigs.count(op))
        err(loc, "effect row mentions undeclared " +
                     std::string(lv == Level::RunTime ? "run-time" : "compile-time") +
                     " operation '" + op + "'");
    }
  }

  // -- variable lookup -------------------------------------------------------
  VTypePtr lookup(const TypingContext &ctx, Mode mode, const std::string &name, SourceLoc loc) {
    Level want = mode == Mode::Splice ? Level::CompileTime : Level::RunTime;
    for (auto it = ctx.entries.rbegin(); it != ctx.entries.rend(); ++it) {
      if (it->first != name) continue;
      if (it->second->level != want) {
        err(loc, "variable '" + name + "' is bound at " +
                     (it->second->level == Level::RunTime ? std::string("level 0")
                                                          : std::string("level -1")) +
                     " and is not accessible in " +
                     (mode == Mode::Splice ? "splice" : mode == Mode::Quote ? "quote" : "compile") +
                     " mode",
            {name});
      }
      return it->second;
    }
    err(loc, "unbound variable '" + name + "'", {name});
  }

  const EffectSig &sig_for(Mode mode, const std::string &op, SourceLoc loc) {
    const auto &sigs = mode == Mode::Splice ? ct_sigs : rt_sigs;
    auto it = sigs.find(op);
    if (it == sigs.end())
      err(loc, std::string("undeclared ") +
                   (mode == Mode::Splice ? "compile-time" : "run-time") + " operation '" + op + "'");
    return it->second;
  }

  // -- values ----------------------------------------------------------------
  struct ValueResult {
    VTypePtr type;
    EffectRow delta;
    ValuePtr annotated;
  };

  ValueResult check_value(const TypingContext &ctx, Mode mode, const ValuePtr &v,
                          const VTypePtr &binder_hint = nullptr) {
    switch (v->kind) {
      case Value::Kind::Var:
        return {lookup(ctx, mode, v->name, v->loc), {}, v};
      case Value::Kind::Nat:
        return {nat_type(mode == Mode::Splice ? Level::CompileTime : Level::RunTime), {}, v};
      case Value::Kind::Lam: {
        Level lv = mode == Mode::Splice ? Level::CompileTime : Level::RunTime;
        VTypePtr dom;
        if (v->ann) {
          dom = resolve(v->ann, lv, v->loc);
        } else if (binder_hint) {
          dom = binder_hint;  // beta-redex: the argument's type fixes the binder
        } else {
          err(v->loc, "missing annotation on lambda binder '" + v->binder + "'");
        }
        TypingContext inner = ctx;
        inner.push(v->binder, dom);
        ExprResult body = check_expr(inner, mode, v->body);
        VTypePtr ty;
        if (mode == Mode::Splice) {
          ty = fun_type(Level::CompileTime, dom, body.delta, body.type);
          return {ty, {}, mk_lam(v->binder, dom, body.annotated, v->loc)};
        }
        ty = fun_type(Level::RunTime, dom, body.xi, body.type);
        return {ty, body.delta, mk_lam(v->binder, dom, body.annotated, v->loc)};
      }
    }
    err(v->loc, "malformed value");
  }

  // -- expressions -----------------------------------------------------------
  struct ExprResult {
    VTypePtr type;
    EffectRow delta;
    EffectRow xi;  // empty in splice mode
    ExprPtr annotated;
  };

  ExprResult check_expr(const TypingContext &ctx, Mode mode, const ExprPtr &e) {
    bool cq = mode != Mode::Splice;
    switch (e->kind) {
      case Expr::Kind::App: {
        // A bare unannotated lambda applied to a value takes its binder type
        // from the argument.
        ValueResult arg = check_value(ctx, mode, e->v2);
        ValueResult fn =
            (e->v1->kind == Value::Kind::Lam && !e->v1->ann)
                ? check_value(ctx, mode, e->v1, arg.type)
                : check_value(ctx, mode, e->v1);
        if (fn.type->kind != VType::Kind::Fun)
          err(e->loc, "applied value has type " + print_type(fn.type) + ", not a function type");
        if (!vtype_equal(arg.type, fn.type->dom))
          err(e->loc, "argument type " + print_type(arg.type) + " does not match parameter type " +
                          print_type(fn.type->dom));
        EffectRow delta = row_union(fn.delta, arg.delta);
        ExprPtr ann = mk_app(fn.annotated, arg.annotated, e->loc);
        if (cq) return {fn.type->cod, delta, fn.type->latent, ann};
        return {fn.type->cod, row_union(delta, fn.type->latent), {}, ann};
      }
      case Expr::Kind::Return: {
        ValueResult v = check_value(ctx, mode, e->v1);
        return {v.type, v.delta, {}, mk_return(v.annotated, e->loc)};
      }
      case Expr::Kind::Do: {
        ExprResult r1 = check_expr(ctx, mode, e->e1);
        Level lv = cq ? Level::RunTime : Level::CompileTime;
        if (e->ann) {
          VTypePtr want = resolve(e->ann, lv, e->loc);
          if (!vtype_equal(want, r1.type))
            err(e->loc, "do-binder annotation " + print_type(want) +
                            " does not match the bound computation's type " + print_type(r1.type));
        }
        TypingContext inner = ctx;
        inner.push(e->binder, r1.type);
        ExprResult r2 = check_expr(inner, mode, e->e2);
        return {r2.type, row_union(r1.delta, r2.delta), row_union(r1.xi, r2.xi),
                mk_do(e->binder, r1.type, r1.annotated, r2.annotated, e->loc)};
      }
      case Expr::Kind::Op: {
        const EffectSig &sig = sig_for(mode, e->op_name, e->loc);
        ValueResult v = check_value(ctx, mode, e->v1);
        if (!vtype_equal(v.type, sig.arg))
          err(e->loc, "operation '" + e->op_name + "' expects argument type " +
                          print_type(sig.arg) + ", got " + print_type(v.type));
        ExprPtr ann = mk_op(e->op_name, v.annotated, e->loc);
        if (cq) return {sig.result, v.delta, {e->op_name}, ann};
        return {sig.result, row_union(v.delta, {e->op_name}), {}, ann};
      }
      case Expr::Kind::Handle: {
        ExprResult subj = check_expr(ctx, mode, e->inner);
        const EffectRow &row_in = cq ? subj.xi : subj.delta;
        HandlerResult h = check_handler(ctx, mode, e->handler, subj.type, row_in, e->loc);
        // (Handle): every input effect not forwarded must have a clause.
        std::set<std::string> dom;
        for (const auto &c : e->handler->clauses)
          if (!c.is_return) dom.insert(c.op_name);
        std::vector<std::string> missing;
        for (const auto &op : row_in)
          if (!h.row_out.count(op) && !dom.count(op)) missing.push_back(op);
        if (!missing.empty())
          err(e->loc, "handler does not cover every effect of the handled computation", missing);
        ExprPtr ann = mk_handle(subj.annotated, h.annotated, e->loc);
        if (cq) return {h.type, row_union(subj.delta, h.delta), h.row_out, ann};
        return {h.type, h.row_out, {}, ann};
      }
      case Expr::Kind::Continue: {
        ValueResult k = check_value(ctx, mode, e->v1);
        if (k.type->kind != VType::Kind::Cont)
          err(e->loc, "continue expects a continuation, got " + print_type(k.type));
        ValueResult v = check_value(ctx, mode, e->v2);
        if (!vtype_equal(v.type, k.type->dom))
          err(e->loc, "continuation expects " + print_type(k.type->dom) + ", got " +
                          print_type(v.type));
        ExprPtr ann = mk_continue(k.annotated, v.annotated, e->loc);
        EffectRow delta = row_union(k.delta, v.delta);
        if (cq) return {k.type->cod, delta, k.type->latent, ann};
        return {k.type->cod, row_union(delta, k.type->latent), {}, ann};
      }
      case Expr::Kind::Quote: {
        if (cq)
          err(e->loc, "quote is not allowed in compile or quote mode (only under a splice)");
        ExprResult inner = check_expr(ctx, Mode::Quote, e->inner);
        return {code_type(inner.type, inner.xi), inner.delta, {},
                mk_quote(inner.annotated, e->loc)};
      }
      case Expr::Kind::Splice: {
        if (!cq) err(e->loc, "splice is not allowed inside a splice body");
        ExprResult inner = check_expr(ctx, Mode::Splice, e->inner);
        if (inner.type->kind != VType::Kind::Code)
          err(e->loc, "spliced expression must produce Code, got " + print_type(inner.type));
        return {inner.type->code_val, inner.delta, inner.type->code_row,
                mk_splice(inner.annotated, e->loc)};
      }
      case Expr::Kind::Arith: {
        if (cq && e->arith == ArithOp::Monus)
          err(e->loc, "subtraction is available at the compile-time level only");
        ValueResult a = check_value(ctx, mode, e->v1);
        ValueResult b = check_value(ctx, mode, e->v2);
        Level lv = cq ? Level::RunTime : Level::CompileTime;
        if (a.type->kind != VType::Kind::Nat || b.type->kind != VType::Kind::Nat)
          err(e->loc, "arithmetic expects naturals, got " + print_type(a.type) + " and " +
                          print_type(b.type));
        ExprPtr ann = mk_arith(e->arith, a.annotated, b.annotated, e->loc);
        return {nat_type(lv), row_union(a.delta, b.delta), {}, ann};
      }
    }
    err(e->loc, "malformed expression");
  }

  // -- handlers ----------------------------------------------------------------
  struct HandlerResult {
    VTypePtr type;      // output value type T
    EffectRow row_out;  // xi2 (c/q) or Delta2 (s)
    EffectRow delta;    // ambient compile row of the clause bodies (c/q only)
    HandlerPtr annotated;
  };

  HandlerResult check_handler(const TypingContext &ctx, Mode mode, const HandlerPtr &h,
                              const VTypePtr &in_type, const EffectRow &row_in, SourceLoc loc) {
    bool cq = mode != Mode::Splice;
    Level lv = cq ? Level::RunTime : Level::CompileTime;

    const HClause *ret = nullptr;
    for (const auto &c : h->clauses)
      if (c.is_return) ret = &c;
    if (!ret) err(loc, "handler is missing a return clause");

    std::set<std::string> dom;
    for (const auto &c : h->clauses) {
      if (c.is_return) continue;
      if (!dom.insert(c.op_name).second)
        err(c.loc, "duplicate clause for operation '" + c.op_name + "'");
    }

    if (ret->x_ann) {
      VTypePtr want = resolve(ret->x_ann, lv, ret->loc);
      if (!vtype_equal(want, in_type))
        err(ret->loc, "return-clause annotation " + print_type(want) +
                          " does not match the handled computation's type " + print_type(in_type));
    }
    TypingContext rctx = ctx;
    rctx.push(ret->x, in_type);
    ExprResult rbody = check_expr(rctx, mode, ret->body);
    VTypePtr out_type = rbody.type;

    EffectRow row_out = cq ? rbody.xi : rbody.delta;
    for (const auto &op : row_in)
      if (!dom.count(op)) row_out.insert(op);  // forwarded effects

    // The continuation's latent row is the handler's output row, so clause
    // bodies are re-checked until the row stabilises.
    EffectRow delta = rbody.delta;
    std::vector<ExprResult> clause_bodies(h->clauses.size());
    for (int iter = 0;; ++iter) {
      EffectRow next = row_out;
      delta = rbody.delta;
      for (std::size_t i = 0; i < h->clauses.size(); ++i) {
        const auto &c = h->clauses[i];
        if (c.is_return) continue;
        const EffectSig &sig = sig_for(mode, c.op_name, c.loc);
        VTypePtr k_type = cont_type(lv, sig.result, row_out, out_type);
        TypingContext cctx = ctx;
        cctx.push(c.x, sig.arg);
        cctx.push(c.k, k_type);
        ExprResult body = check_expr(cctx, mode, c.body);
        if (!vtype_equal(body.type, out_type))
          err(c.loc, "clause result type " + print_type(body.type) +
                         " does not match the return clause's type " + print_type(out_type));
        clause_bodies[i] = body;
        const EffectRow &contrib = cq ? body.xi : body.delta;
        next.insert(contrib.begin(), contrib.end());
        if (cq) delta = row_union(delta, body.delta);
      }
      if (next == row_out || iter > 64) break;
      row_out = next;
    }

    // Clause annotations are checked against the stabilised row.
    for (const auto &c : h->clauses) {
      if (c.is_return) continue;
      const EffectSig &sig = sig_for(mode, c.op_name, c.loc);
      if (c.x_ann) {
        VTypePtr want = resolve(c.x_ann, lv, c.loc);
        if (!vtype_equal(want, sig.arg))
          err(c.loc, "clause annotation " + print_type(want) +
                         " does not match the operation's argument type " + print_type(sig.arg));
      }
      if (c.k_ann) {
        VTypePtr want = resolve(c.k_ann, lv, c.loc);
        VTypePtr k_type = cont_type(lv, sig.result, row_out, out_type);
        if (!vtype_equal(want, k_type))
          err(c.loc, "continuation annotation " + print_type(want) + " should be " +
                         print_type(k_type));
      }
    }

    auto annotated = std::make_shared<Handler>();
    annotated->loc = h->loc;
    for (std::size_t i = 0; i < h->clauses.size(); ++i) {
      const auto &c = h->clauses[i];
      HClause nc = c;
      if (c.is_return) {
        nc.x_ann = in_type;
        nc.body = rbody.annotated;
      } else {
        const EffectSig &sig = sig_for(mode, c.op_name, c.loc);
        nc.x_ann = sig.arg;
        nc.k_ann = cont_type(lv, sig.result, row_out, out_type);
        nc.body = clause_bodies[i].annotated;
      }
      annotated->clauses.push_back(std::move(nc));
    }
    return {out_type, row_out, delta, annotated};
  }

  void load_sigs(const std::vector<EffectSig> &sigs, std::vector<Diagnostic> &diags) {
    for (const auto &s : sigs) {
      auto &table = s.level == Level::RunTime ? rt_sigs : ct_sigs;
      EffectSig resolved = s;
      Level lv = s.level == Level::RunTime ? Level::RunTime : Level::CompileTime;
      resolved.arg = resolve(s.arg, lv, s.loc);
      resolved.result = resolve(s.result, lv, s.loc);
      if (!table.emplace(s.name, resolved).second)
        diags.push_back({Severity::Error, "duplicate effect declaration '" + s.name + "'", s.loc, {}});
    }
  }
};

}  // namespace

CheckedProgram typecheck_program(const Program &p) {
  CheckedProgram out;
  Checker ck;
  try {
    ck.load_sigs(p.sigs, out.diagnostics);
    if (!out.diagnostics.empty()) return out;
    TypingContext ctx;
    auto r = ck.check_expr(ctx, Mode::Compile, p.body);
    if (!r.delta.empty() || !r.xi.empty()) {
      std::vector<std::string> ops(r.delta.begin(), r.delta.end());
      ops.insert(ops.end(), r.xi.begin(), r.xi.end());
      out.diagnostics.push_back({Severity::Error,
                                 "unhandled effects at top level (each op must be handled: op "
                                 "∉ ∅)",
                                 p.body->loc, ops});
      return out;
    }
    out.ok = true;
    out.program.sigs.clear();
    for (const auto &[name, sig] : ck.rt_sigs) out.program.sigs.push_back(sig);
    for (const auto &[name, sig] : ck.ct_sigs) out.program.sigs.push_back(sig);
    out.program.body = r.annotated;
    out.type = r.type;
  } catch (TypeError &e) {
    out.diagnostics.push_back(e.diag);
  }
  return out;
}

InferResult infer_expr(const std::vector<EffectSig> &sigs, const TypingContext &ctx, Mode mode,
                       const ExprPtr &e) {
  InferResult out;
  Checker ck;
  try {
    ck.load_sigs(sigs, out.diagnostics);
    if (!out.diagnostics.empty()) return out;
    auto r = ck.check_expr(ctx, mode, e);
    out.ok = true;
    out.value = r.type;
    out.delta = r.delta;
    out.xi = r.xi;
    out.annotated = r.annotated;
  } catch (TypeError &err_) {
    out.diagnostics.push_back(err_.diag);
  }
  return out;
}

InferValueResult infer_value(const std::vector<EffectSig> &sigs, const TypingContext &ctx,
                             Mode mode, const ValuePtr &v) {
  InferValueResult out;
  Checker ck;
  try {
    ck.load_sigs(sigs, out.diagnostics);
    if (!out.diagnostics.empty()) return out;
    auto r = ck.check_value(ctx, mode, v);
    out.ok = true;
    out.value = r.type;
    out.delta = r.delta;
    out.annotated = r.annotated;
  } catch (TypeError &err_) {
    out.diagnostics.push_back(err_.diag);
  }
  return out;
}

core::PreTypePtr erase(const VTypePtr &t0) {
  if (!t0) throw std::logic_error("erase: null type");
  if (t0->level != Level::RunTime)
    throw std::logic_error("erase: applied to a level -1 type (defect)");
  switch (t0->kind) {
    case VType::Kind::Nat:
      return core::pre_nat();
    case VType::Kind::Fun:
      return core::pre_fun(erase(t0->dom), t0->latent, erase(t0->cod));
    case VType::Kind::Cont:
      return core::pre_cont(erase(t0->dom), t0->latent, erase(t0->cod));
    case VType::Kind::Code:
      throw std::logic_error("erase: Code is not a level 0 type (defect)");
  }
  throw std::logic_error("erase: malformed type");
}

core::PreTypePtr erase_comp(const VTypePtr &t0, const EffectRow &xi) {
  return core::pre_comp(erase(t0), xi);
}

}  // namespace sled::src
