#include "sled/machine.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "sled/print.hpp"

namespace sled::core {

FramePtr frame_do(std::string var, TermPtr body) {
  auto f = std::make_shared<Frame>();
  f->kind = Frame::Kind::Do;
  f->var = std::move(var);
  f->body = std::move(body);
  return f;
}

FramePtr frame_handle(CoreHandlerPtr h) {
  auto f = std::make_shared<Frame>();
  f->kind = Frame::Kind::Handle;
  f->handler = std::move(h);
  return f;
}

FramePtr frame_dlet(FormalParam fp) {
  auto f = std::make_shared<Frame>();
  f->kind = Frame::Kind::Dlet;
  f->fp = std::move(fp);
  return f;
}

FramePtr frame_tls() {
  auto f = std::make_shared<Frame>();
  f->kind = Frame::Kind::Tls;
  return f;
}

Configuration initial_config(TermPtr t) {
  Configuration c;
  c.term = std::move(t);
  c.mark = std::nullopt;  // top
  return c;
}

std::set<FormalParam> projfvs(const std::vector<FramePtr> &stack) {
  std::set<FormalParam> out;
  for (const auto &f : stack)
    if (f->kind == Frame::Kind::Dlet) out.insert(f->fp);
  return out;
}

std::set<std::string> handled(const std::vector<FramePtr> &stack) {
  std::set<std::string> out;
  for (const auto &f : stack) {
    if (f->kind != Frame::Kind::Handle) continue;
    auto dom = handler_dom(f->handler);
    out.insert(dom.begin(), dom.end());
  }
  return out;
}

std::uint64_t next_id(const std::set<std::uint64_t> &used) {
  std::uint64_t n = 0;
  for (auto id : used) {
    if (id != n) break;
    ++n;
  }
  return n;
}

TermPtr plug(const std::vector<FramePtr> &stack, TermPtr t) {
  for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
    const Frame &f = **it;
    switch (f.kind) {
      case Frame::Kind::Do: t = tm_do(f.var, t, f.body); break;
      case Frame::Kind::Handle: t = tm_handle(t, f.handler); break;
      case Frame::Kind::Dlet: t = tm_dlet(nf_fparam(f.fp), t); break;
      case Frame::Kind::Tls: t = tm_tls(t); break;
    }
  }
  return t;
}

namespace {

[[noreturn]] void stuck(const Configuration &c, const std::string &why) {
  throw std::logic_error("machine stuck (progress defect): " + why +
                         " in term: " + print_core(c.term));
}

bool subset_ids(const std::set<FormalParam> &fvs, const std::set<FormalParam> &declared,
                const std::set<std::uint64_t> *muted, std::vector<FormalParam> *offending) {
  bool ok = true;
  for (const auto &fp : fvs) {
    if (muted && muted->count(fp.id)) continue;
    if (!declared.count(fp)) {
      ok = false;
      if (offending) offending->push_back(fp);
    }
  }
  return ok;
}

// Inverse of plug for captured continuations: peels frames until the body is
// `return x` for the continuation's own binder.
std::vector<FramePtr> decompose_kont(const NfPtr &kont) {
  std::vector<FramePtr> frames;
  TermPtr t = kont->body;
  for (;;) {
    if (t->kind == CoreTerm::Kind::Return && t->n1 &&
        t->n1->kind == NormalForm::Kind::MetaVar && t->n1->var == kont->var)
      return frames;
    switch (t->kind) {
      case CoreTerm::Kind::Do:
        frames.push_back(frame_do(t->var, t->t2));
        t = t->t1;
        break;
      case CoreTerm::Kind::Handle:
        frames.push_back(frame_handle(t->handler));
        t = t->t1;
        break;
      case CoreTerm::Kind::Dlet:
        frames.push_back(frame_dlet(t->n1->fparam));
        t = t->t1;
        break;
      case CoreTerm::Kind::Tls:
        frames.push_back(frame_tls());
        t = t->t1;
        break;
      default:
        throw std::logic_error("malformed continuation body: " + print_core(t));
    }
  }
}

}  // namespace

StepResult step(const Configuration &c) {
  StepResult r;
  const CoreTerm &t = *c.term;

  switch (t.kind) {
    case CoreTerm::Kind::Return: {
      if (c.stack.empty()) {
        r.done = true;
        r.outcome.kind = Outcome::Kind::Value;
        r.outcome.value = t.n1;
        r.outcome.final_used = c.used;
        return r;
      }
      // Pop: re-plug the innermost frame around the return.
      r.next = c;
      FramePtr f = c.stack.back();
      r.next.stack.pop_back();
      switch (f->kind) {
        case Frame::Kind::Do: r.next.term = tm_do(f->var, c.term, f->body); break;
        case Frame::Kind::Handle: r.next.term = tm_handle(c.term, f->handler); break;
        case Frame::Kind::Dlet: r.next.term = tm_dlet(nf_fparam(f->fp), c.term); break;
        case Frame::Kind::Tls: r.next.term = tm_tls(c.term); break;
      }
      r.rule = "Pop";
      return r;
    }

    case CoreTerm::Kind::Do: {
      if (t.t1->kind == CoreTerm::Kind::Return) {
        r.next = c;
        r.next.term = subst(t.t2, t.t1->n1, t.var);
        r.rule = "Seq";
        return r;
      }
      r.next = c;
      r.next.stack.push_back(frame_do(t.var, t.t2));
      r.next.term = t.t1;
      r.rule = "Psh";
      return r;
    }

    case CoreTerm::Kind::Handle: {
      if (t.t1->kind == CoreTerm::Kind::Return) {
        const CoreHClause *ret = nullptr;
        for (const auto &cl : t.handler->clauses)
          if (cl.is_return) ret = &cl;
        if (!ret) stuck(c, "handler without return clause");
        r.next = c;
        r.next.term = subst(ret->body, t.t1->n1, ret->x);
        r.rule = "Hdl";
        return r;
      }
      r.next = c;
      r.next.stack.push_back(frame_handle(t.handler));
      r.next.term = t.t1;
      r.rule = "Psh";
      return r;
    }

    case CoreTerm::Kind::Tls: {
      if (t.t1->kind == CoreTerm::Kind::Return) {
        r.next = c;
        r.next.term = t.t1;
        r.next.muted.clear();
        r.next.mark = std::nullopt;
        r.rule = "Sec-Tls";
        return r;
      }
      r.next = c;
      r.next.stack.push_back(frame_tls());
      r.next.term = t.t1;
      r.rule = "Psh";
      return r;
    }

    case CoreTerm::Kind::Dlet: {
      if (t.n1->kind != NormalForm::Kind::FParamV) stuck(c, "dlet of a non-formal-parameter");
      if (t.t1->kind == CoreTerm::Kind::Return) {
        r.next = c;
        r.next.term = t.t1;
        bool keep = c.mark.has_value() && c.stack.size() > *c.mark;
        if (!keep) {
          r.next.muted.clear();
          r.next.mark = std::nullopt;
        }
        r.rule = "Sec-Dlt";
        return r;
      }
      r.next = c;
      r.next.stack.push_back(frame_dlet(t.n1->fparam));
      r.next.term = t.t1;
      r.rule = "Psh";
      return r;
    }

    case CoreTerm::Kind::App: {
      if (t.n1->kind != NormalForm::Kind::Lam) stuck(c, "application of a non-lambda");
      r.next = c;
      r.next.term = subst(t.n1->body, t.n2, t.n1->var);
      r.rule = "App";
      return r;
    }

    case CoreTerm::Kind::Check:
    case CoreTerm::Kind::CheckM: {
      bool is_m = t.kind == CoreTerm::Kind::CheckM;
      auto fvs = freevars(t.n1);
      auto declared = projfvs(c.stack);
      std::vector<FormalParam> offending;
      bool ok = subset_ids(fvs, declared, is_m ? &c.muted : nullptr, &offending);
      r.next = c;
      if (ok) {
        r.next.term = tm_return(t.n1);
        r.rule = is_m ? "Sec-Cms" : "Sec-Chs";
        return r;
      }
      ScopeDiag diag;
      diag.offending = std::move(offending);
      diag.frame_depth = c.stack.size();
      diag.mark = c.mark;
      diag.was_check_m = is_m;
      r.next.term = tm_err();
      r.next.pending_diag = diag;
      r.rule = is_m ? "Sec-Cmf" : "Sec-Chf";
      return r;
    }

    case CoreTerm::Kind::Mkvar: {
      std::uint64_t id = next_id(c.used);
      FormalParam fp{id, t.mk_pre, t.mk_classifier};
      r.next = c;
      r.next.used.insert(id);
      r.next.term = tm_return(nf_fparam(fp));
      r.rule = "Ast-Gen";
      return r;
    }

    case CoreTerm::Kind::Op: {
      // Innermost handler with a clause for the op; frames above it are the
      // captured context E2.
      std::ptrdiff_t idx = -1;
      for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(c.stack.size()) - 1; i >= 0; --i) {
        const Frame &f = *c.stack[static_cast<std::size_t>(i)];
        if (f.kind == Frame::Kind::Handle && handler_dom(f.handler).count(t.op_name)) {
          idx = i;
          break;
        }
      }
      if (idx < 0) {
        r.done = true;
        r.outcome.kind = Outcome::Kind::Unhandled;
        r.outcome.op = t.op_name;
        return r;
      }
      auto j = static_cast<std::size_t>(idx);
      const CoreHandlerPtr &h = c.stack[j]->handler;
      const CoreHClause *clause = nullptr;
      for (const auto &cl : h->clauses)
        if (!cl.is_return && cl.op_name == t.op_name) clause = &cl;
      std::vector<FramePtr> captured(c.stack.begin() + static_cast<std::ptrdiff_t>(j),
                                     c.stack.end());
      std::vector<FramePtr> e2(c.stack.begin() + static_cast<std::ptrdiff_t>(j) + 1,
                               c.stack.end());
      NfPtr cont = nf_kont("%r", plug(captured, tm_return(nf_metavar("%r"))));
      r.next = c;
      r.next.stack.assign(c.stack.begin(), c.stack.begin() + static_cast<std::ptrdiff_t>(j));
      r.next.term = subst(subst(clause->body, t.n1, clause->x), cont, clause->k);
      for (const auto &fp : projfvs(e2)) r.next.muted.insert(fp.id);
      std::size_t len_e1 = j;
      r.next.mark = c.mark.has_value() ? std::min(len_e1, *c.mark) : len_e1;
      r.rule = "Eff-Op";
      return r;
    }

    case CoreTerm::Kind::Continue: {
      if (t.n1->kind != NormalForm::Kind::Kont) stuck(c, "continue of a non-continuation");
      auto frames = decompose_kont(t.n1);
      r.next = c;
      r.next.stack.insert(r.next.stack.end(), frames.begin(), frames.end());
      r.next.term = tm_return(t.n2);
      r.rule = "Eff-Cnt";
      return r;
    }

    case CoreTerm::Kind::Err: {
      r.done = true;
      r.outcome.kind = Outcome::Kind::ScopeError;
      if (c.pending_diag) r.outcome.diag = *c.pending_diag;
      return r;
    }

    case CoreTerm::Kind::Arith: {
      if (t.n1->kind != NormalForm::Kind::NatLit || t.n2->kind != NormalForm::Kind::NatLit)
        stuck(c, "arithmetic on non-naturals");
      std::uint64_t a = t.n1->nat, b = t.n2->nat, v = 0;
      switch (t.arith) {
        case src::ArithOp::Plus: v = a + b; break;
        case src::ArithOp::Times: v = a * b; break;
        case src::ArithOp::Monus: v = a >= b ? a - b : 0; break;
      }
      r.next = c;
      r.next.term = tm_return(nf_nat(v));
      r.rule = "Arith";
      return r;
    }
  }
  stuck(c, "no applicable rule");
}

std::string trace_line(const TraceRecord &rec) {
  std::ostringstream os;
  os << rec.rule << "\t" << rec.stack_len << "\t" << rec.used_count << "\t";
  if (rec.muted.empty()) {
    os << "-";
  } else {
    bool first = true;
    for (auto id : rec.muted) {
      if (!first) os << ",";
      os << id;
      first = false;
    }
  }
  os << "\t";
  if (rec.mark.has_value())
    os << *rec.mark;
  else
    os << "top";
  return os.str();
}

RunResult run(TermPtr t, std::uint64_t fuel, bool trace) {
  RunResult res;
  Configuration c = initial_config(std::move(t));
  for (std::uint64_t n = 0; n < fuel; ++n) {
    StepResult s = step(c);
    if (s.done) {
      res.outcome = s.outcome;
      res.outcome.steps = n;
      return res;
    }
    c = std::move(s.next);
    if (trace) {
      TraceRecord rec;
      rec.rule = s.rule;
      rec.stack_len = c.stack.size();
      rec.used_count = c.used.size();
      rec.muted.assign(c.muted.begin(), c.muted.end());
      rec.mark = c.mark;
      res.trace.push_back(std::move(rec));
    }
  }
  res.outcome.kind = Outcome::Kind::FuelExhausted;
  res.outcome.steps = fuel;
  return res;
}

Outcome run_with_inspector(TermPtr t, std::uint64_t fuel,
                           const std::function<void(const Configuration &)> &inspect) {
  Configuration c = initial_config(std::move(t));
  for (std::uint64_t n = 0; n < fuel; ++n) {
    inspect(c);
    StepResult s = step(c);
    if (s.done) {
      s.outcome.steps = n;
      return s.outcome;
    }
    c = std::move(s.next);
  }
  Outcome out;
  out.kind = Outcome::Kind::FuelExhausted;
  out.steps = fuel;
  return out;
}

// ---------------------------------------------------------------------------
// Core type checking.

namespace {

struct CoreTypeErr {
  CoreTypeError e;
};

[[noreturn]] void terr(const std::string &msg, const std::string &path = "") {
  throw CoreTypeErr{{msg, path}};
}

EffectRow row_union(const EffectRow &a, const EffectRow &b) {
  EffectRow r = a;
  r.insert(b.begin(), b.end());
  return r;
}

struct CoreChecker {
  const CoreSigTable &sigs;

  CoreTypePtr lookup(const CoreContext &ctx, const std::string &x) {
    for (auto it = ctx.rbegin(); it != ctx.rend(); ++it)
      if (it->first == x) return it->second;
    terr("unbound meta-variable '" + x + "'");
  }

  PreTypePtr want_ast(const CoreTypePtr &t, const std::string &where) {
    if (t->kind == CoreType::Kind::Any) return nullptr;
    if (t->kind != CoreType::Kind::Ast) terr(where + ": expected an AST type, got " + coretype_to_string(t));
    return t->pre;
  }

  PreTypePtr want_fparam(const CoreTypePtr &t, const std::string &where) {
    if (t->kind == CoreType::Kind::Any) return nullptr;
    if (t->kind != CoreType::Kind::FParam)
      terr(where + ": expected a formal parameter, got " + coretype_to_string(t));
    return t->pre;
  }

  void require_pre(const PreTypePtr &a, const PreTypePtr &b, const std::string &where) {
    if (!a || !b) return;  // unknown from Any: accept
    if (!pretype_equal(a, b))
      terr(where + ": pretype mismatch: " + pretype_to_string(a) + " vs " + pretype_to_string(b));
  }

  CoreTypePtr nf_type(const CoreContext &ctx, const NfPtr &n) {
    using K = NormalForm::Kind;
    switch (n->kind) {
      case K::MetaVar: return lookup(ctx, n->var);
      case K::NatLit: return ct_nat();
      case K::Lam: {
        CoreTypePtr dom = n->lam_ann ? n->lam_ann : ct_any();
        CoreContext inner = ctx;
        inner.emplace_back(n->var, dom);
        CompType body = term_type(inner, n->body);
        return ct_fun(dom, body.row, body.value);
      }
      case K::Kont: {
        CoreContext inner = ctx;
        inner.emplace_back(n->var, ct_any());
        CompType body = term_type(inner, n->body);
        return ct_cont(ct_any(), body.row, body.value);
      }
      case K::AstNat: return ct_ast(pre_nat());
      case K::FParamV: return ct_fparam(n->fparam.pretype);
      case K::AstVar: {
        PreTypePtr r = want_fparam(nf_type(ctx, n->n1), "Var");
        return r ? ct_ast(r) : ct_any();
      }
      case K::AstLam: {
        PreTypePtr q = want_fparam(nf_type(ctx, n->n1), "Lam binder");
        PreTypePtr body = want_ast(nf_type(ctx, n->n2), "Lam body");
        if (!q || !body) return ct_any();
        if (body->kind != PreType::Kind::Comp) terr("Lam body must be a computation AST");
        return ct_ast(pre_fun(q, body->row, body->a));
      }
      case K::AstApp:
      case K::AstContinue: {
        PreTypePtr f = want_ast(nf_type(ctx, n->n1), "App/Continue function");
        PreTypePtr a = want_ast(nf_type(ctx, n->n2), "App/Continue argument");
        if (!f || !a) return ct_any();
        auto want = n->kind == K::AstApp ? PreType::Kind::Fun : PreType::Kind::Cont;
        if (f->kind != want) terr("App/Continue head has pretype " + pretype_to_string(f));
        require_pre(a, f->a, "App/Continue argument");
        return ct_ast(pre_comp(f->b, f->row));
      }
      case K::AstRet: {
        PreTypePtr v = want_ast(nf_type(ctx, n->n1), "Ret");
        if (!v) return ct_any();
        if (v->kind == PreType::Kind::Comp) terr("Ret of a computation AST");
        return ct_ast(pre_comp(v, {}));
      }
      case K::AstDo: {
        PreTypePtr c1 = want_ast(nf_type(ctx, n->n1), "Do computation");
        PreTypePtr b = want_fparam(nf_type(ctx, n->n2), "Do binder");
        PreTypePtr c2 = want_ast(nf_type(ctx, n->n3), "Do body");
        if (!c1 || !b || !c2) return ct_any();
        if (c1->kind != PreType::Kind::Comp || c2->kind != PreType::Kind::Comp)
          terr("Do expects computation ASTs");
        require_pre(b, c1->a, "Do binder");
        return ct_ast(pre_comp(c2->a, row_union(c1->row, c2->row)));
      }
      case K::AstOp: {
        auto it = sigs.ast_ops.find(n->op_name);
        if (it == sigs.ast_ops.end()) terr("unknown run-time operation '" + n->op_name + "'");
        PreTypePtr a = want_ast(nf_type(ctx, n->n1), "Op argument");
        require_pre(a, it->second.first, "Op argument");
        return ct_ast(pre_comp(it->second.second, {n->op_name}));
      }
      case K::AstHwith: {
        PreTypePtr subj = want_ast(nf_type(ctx, n->n1), "Hwith subject");
        PreTypePtr h = want_ast(nf_type(ctx, n->n2), "Hwith handler");
        if (!subj || !h) return ct_any();
        if (subj->kind != PreType::Kind::Comp || h->kind != PreType::Kind::Handler)
          terr("Hwith expects a computation AST and a handler AST");
        require_pre(subj->a, h->a, "Hwith subject");
        // handler input row tracks the clause domain; everything else forwards
        EffectRow out = h->row2;
        for (const auto &op : subj->row)
          if (!h->row.count(op)) out.insert(op);
        return ct_ast(pre_comp(h->b, out));
      }
      case K::AstHret: {
        PreTypePtr q = want_fparam(nf_type(ctx, n->n1), "Hret binder");
        PreTypePtr body = want_ast(nf_type(ctx, n->n2), "Hret body");
        if (!q || !body) return ct_any();
        if (body->kind != PreType::Kind::Comp) terr("Hret body must be a computation AST");
        return ct_ast(pre_handler(q, {}, body->a, body->row));
      }
      case K::AstHop: {
        PreTypePtr h = want_ast(nf_type(ctx, n->n1), "Hop handler");
        PreTypePtr x = want_fparam(nf_type(ctx, n->n2), "Hop argument binder");
        PreTypePtr k = want_fparam(nf_type(ctx, n->n3), "Hop continuation binder");
        PreTypePtr body = want_ast(nf_type(ctx, n->n4), "Hop body");
        auto it = sigs.ast_ops.find(n->op_name);
        if (it == sigs.ast_ops.end()) terr("unknown run-time operation '" + n->op_name + "'");
        if (!h || !body) return ct_any();
        if (h->kind != PreType::Kind::Handler) terr("Hop over a non-handler AST");
        if (body->kind != PreType::Kind::Comp) terr("Hop body must be a computation AST");
        require_pre(x, it->second.first, "Hop argument binder");
        EffectRow out = row_union(h->row2, body->row);
        if (k) {
          if (k->kind != PreType::Kind::Cont) terr("Hop continuation binder has a non-continuation pretype");
          require_pre(k->a, it->second.second, "Hop continuation input");
          require_pre(k->b, h->b, "Hop continuation output");
          out = row_union(out, k->row);
        }
        require_pre(body->a, h->b, "Hop body");
        EffectRow dom = h->row;
        dom.insert(n->op_name);
        return ct_ast(pre_handler(h->a, dom, h->b, out));
      }
      case K::AstPlus:
      case K::AstTimes: {
        PreTypePtr a = want_ast(nf_type(ctx, n->n1), "arithmetic AST");
        PreTypePtr b = want_ast(nf_type(ctx, n->n2), "arithmetic AST");
        if (a && a->kind != PreType::Kind::Nat) terr("arithmetic AST over non-Nat");
        if (b && b->kind != PreType::Kind::Nat) terr("arithmetic AST over non-Nat");
        return ct_ast(pre_comp(pre_nat(), {}));
      }
    }
    terr("malformed normal form");
  }

  CompType term_type(const CoreContext &ctx, const TermPtr &t) {
    using K = CoreTerm::Kind;
    switch (t->kind) {
      case K::App: {
        CoreTypePtr f = nf_type(ctx, t->n1);
        CoreTypePtr a = nf_type(ctx, t->n2);
        if (f->kind == CoreType::Kind::Any) return {ct_any(), {}};
        if (f->kind != CoreType::Kind::Fun) terr("application of " + coretype_to_string(f));
        if (!coretype_equal(a, f->dom))
          terr("argument type " + coretype_to_string(a) + " vs parameter " +
               coretype_to_string(f->dom));
        return {f->cod, f->latent};
      }
      case K::Return:
        return {nf_type(ctx, t->n1), {}};
      case K::Do: {
        CompType c1 = term_type(ctx, t->t1);
        CoreContext inner = ctx;
        inner.emplace_back(t->var, c1.value);
        CompType c2 = term_type(inner, t->t2);
        return {c2.value, row_union(c1.row, c2.row)};
      }
      case K::Op: {
        auto it = sigs.machine_ops.find(t->op_name);
        if (it == sigs.machine_ops.end())
          terr("unknown compile-time operation '" + t->op_name + "'");
        CoreTypePtr a = nf_type(ctx, t->n1);
        if (!coretype_equal(a, it->second.first))
          terr("operation '" + t->op_name + "' argument: " + coretype_to_string(a) + " vs " +
               coretype_to_string(it->second.first));
        return {it->second.second, {t->op_name}};
      }
      case K::Handle: {
        CompType subj = term_type(ctx, t->t1);
        const CoreHClause *ret = nullptr;
        std::set<std::string> dom;
        for (const auto &cl : t->handler->clauses) {
          if (cl.is_return)
            ret = &cl;
          else if (!dom.insert(cl.op_name).second)
            terr("duplicate clause for '" + cl.op_name + "'");
        }
        if (!ret) terr("handler without return clause");
        CoreContext rctx = ctx;
        rctx.emplace_back(ret->x, subj.value);
        CompType rbody = term_type(rctx, ret->body);
        EffectRow out = rbody.row;
        for (const auto &op : subj.row)
          if (!dom.count(op)) out.insert(op);
        for (int iter = 0;; ++iter) {
          EffectRow next = out;
          for (const auto &cl : t->handler->clauses) {
            if (cl.is_return) continue;
            auto it = sigs.machine_ops.find(cl.op_name);
            if (it == sigs.machine_ops.end())
              terr("unknown compile-time operation '" + cl.op_name + "'");
            CoreContext cctx = ctx;
            cctx.emplace_back(cl.x, it->second.first);
            cctx.emplace_back(cl.k, ct_cont(it->second.second, out, rbody.value));
            CompType body = term_type(cctx, cl.body);
            if (!coretype_equal(body.value, rbody.value))
              terr("clause result type " + coretype_to_string(body.value) + " vs " +
                   coretype_to_string(rbody.value));
            next = row_union(next, body.row);
          }
          if (next == out || iter > 64) break;
          out = next;
        }
        return {rbody.value, out};
      }
      case K::Continue: {
        CoreTypePtr k = nf_type(ctx, t->n1);
        CoreTypePtr a = nf_type(ctx, t->n2);
        if (k->kind == CoreType::Kind::Any) return {ct_any(), {}};
        if (k->kind != CoreType::Kind::Cont) terr("continue of " + coretype_to_string(k));
        if (!coretype_equal(a, k->dom))
          terr("continue argument " + coretype_to_string(a) + " vs " + coretype_to_string(k->dom));
        return {k->cod, k->latent};
      }
      case K::Check:
      case K::CheckM: {
        CoreTypePtr v = nf_type(ctx, t->n1);
        if (v->kind != CoreType::Kind::Ast && v->kind != CoreType::Kind::Any)
          terr("check of a non-AST value: " + coretype_to_string(v));
        return {v, {}};
      }
      case K::Mkvar:
        return {ct_fparam(t->mk_pre), {}};
      case K::Dlet: {
        want_fparam(nf_type(ctx, t->n1), "dlet");
        return term_type(ctx, t->t1);
      }
      case K::Tls:
        return term_type(ctx, t->t1);
      case K::Err:
        return {ct_any(), {}};
      case K::Arith: {
        CoreTypePtr a = nf_type(ctx, t->n1);
        CoreTypePtr b = nf_type(ctx, t->n2);
        if (a->kind != CoreType::Kind::Nat && a->kind != CoreType::Kind::Any)
          terr("arithmetic on " + coretype_to_string(a));
        if (b->kind != CoreType::Kind::Nat && b->kind != CoreType::Kind::Any)
          terr("arithmetic on " + coretype_to_string(b));
        return {ct_nat(), {}};
      }
    }
    terr("malformed term");
  }
};

}  // namespace

CoreTypeResult typecheck_core(const CoreSigTable &sigs, const CoreContext &ctx, const TermPtr &t) {
  CoreTypeResult out;
  CoreChecker ck{sigs};
  try {
    out.type = ck.term_type(ctx, t);
    out.ok = true;
  } catch (CoreTypeErr &e) {
    out.errors.push_back(e.e);
  }
  return out;
}

CoreNfTypeResult typecheck_core_nf(const CoreSigTable &sigs, const CoreContext &ctx,
                                   const NfPtr &n) {
  CoreNfTypeResult out;
  CoreChecker ck{sigs};
  try {
    out.type = ck.nf_type(ctx, n);
    out.ok = true;
  } catch (CoreTypeErr &e) {
    out.errors.push_back(e.e);
  }
  return out;
}

CoreTypeResult typecheck_config(const CoreSigTable &sigs, const Configuration &c) {
  return typecheck_core(sigs, {}, plug(c.stack, c.term));
}

}  // namespace sled::core
