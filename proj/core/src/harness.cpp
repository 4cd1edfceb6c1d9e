#include "sled/harness.hpp"

#include <random>

#include "sled/print.hpp"
#include "sled/typeck.hpp"

namespace sled {

using namespace src;

NaiveFlags analyze_naive(const Program &annotated, std::uint64_t fuel) {
  NaiveFlags flags;
  core::TermPtr t = elaborate_instrumented_naive(annotated);
  std::size_t step_no = 0;
  auto inspect = [&](const core::Configuration &c) {
    if (c.term->kind == core::CoreTerm::Kind::Return && core::nf_is_ast(c.term->n1)) {
      auto fvs = core::freevars(c.term->n1);
      if (!fvs.empty()) {
        auto declared = core::projfvs(c.stack);
        bool subset = true;
        for (const auto &fp : fvs)
          if (!declared.count(fp)) {
            subset = false;
            break;
          }
        if (!subset) {
          if (!flags.eager_extrusion_seen) {
            flags.eager_extrusion_seen = true;
            flags.eager_first_step = step_no;
          }
          if (!c.stack.empty() && c.stack.back()->kind == core::Frame::Kind::Tls)
            flags.lazy_extrusion_final = true;
        }
      }
    }
    step_no++;
  };
  core::Outcome out = core::run_with_inspector(t, fuel, inspect);
  if (out.kind == core::Outcome::Kind::FuelExhausted) flags.known = false;
  return flags;
}

bool outcome_accepts(const core::Outcome &o) { return o.kind == core::Outcome::Kind::Value; }

CheckOutcomes compare_checks(const Program &annotated, std::uint64_t fuel) {
  CheckOutcomes out;
  out.lazy = core::run(elaborate(annotated, CheckKind::Lazy), fuel).outcome;
  out.eager = core::run(elaborate(annotated, CheckKind::Eager), fuel).outcome;
  out.c4c = core::run(elaborate(annotated, CheckKind::C4C), fuel).outcome;
  out.classifier_accepted = check_classifiers(annotated).ok;
  out.naive = analyze_naive(annotated, fuel);
  return out;
}

// ---------------------------------------------------------------------------
// Program generation.

namespace {

struct Gen {
  std::mt19937_64 rng;
  int budget = 0;

  explicit Gen(std::uint64_t seed, int size) : rng(seed), budget(size) {}

  int pick(int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }
  bool coin(int pct) { return pick(100) < pct; }

  bool spend() {
    if (budget <= 0) return false;
    --budget;
    return true;
  }

  int fresh = 0;
  std::string name(const char *base) { return std::string(base) + std::to_string(fresh++); }

  // Context entries visible to the generator.
  struct Entry {
    std::string name;
    VTypePtr type;  // resolved (leveled) type
  };
  std::vector<Entry> ctx;

  static VTypePtr nat0() { return nat_type(Level::RunTime); }
  static VTypePtr natm1() { return nat_type(Level::CompileTime); }
  static VTypePtr code_nat() { return code_type(nat_type(Level::RunTime), {}); }

  std::vector<Entry> vars_of(const VTypePtr &t) {
    std::vector<Entry> out;
    for (const auto &e : ctx)
      if (vtype_equal(e.type, t)) out.push_back(e);
    return out;
  }

  // ---- level 0 (compile/quote mode) ----------------------------------------

  ValuePtr gen_value_cq(const VTypePtr &t, const EffectRow &xi_allowed, int depth) {
    (void)xi_allowed;
    auto vars = vars_of(t);
    if (!vars.empty() && coin(55)) return mk_var(vars[static_cast<size_t>(pick((int)vars.size()))].name);
    if (t->kind == VType::Kind::Nat) return mk_nat(static_cast<std::uint64_t>(pick(5)));
    if (t->kind == VType::Kind::Fun) {
      std::string x = name("x");
      ctx.push_back({x, t->dom});
      ExprPtr body = gen_expr_cq(t->cod, t->latent, depth - 1);
      ctx.pop_back();
      return mk_lam(x, t->dom, body);
    }
    // no syntactic values of other shapes at level 0
    return mk_nat(0);
  }

  ExprPtr gen_expr_cq(const VTypePtr &t, const EffectRow &xi_allowed, int depth) {
    if (depth <= 0 || !spend()) return mk_return(gen_value_cq(t, xi_allowed, 0));
    switch (pick(8)) {
      case 0:
        return mk_return(gen_value_cq(t, xi_allowed, depth));
      case 1: {  // do
        VTypePtr s = coin(70) ? nat0() : fun_type(Level::RunTime, nat0(), {}, nat0());
        ExprPtr e1 = gen_expr_cq(s, xi_allowed, depth - 1);
        std::string x = name("v");
        ctx.push_back({x, s});
        ExprPtr e2 = gen_expr_cq(t, xi_allowed, depth - 1);
        ctx.pop_back();
        return mk_do(x, s, e1, e2);
      }
      case 2: {  // beta redex
        VTypePtr s = nat0();
        std::string x = name("x");
        ctx.push_back({x, s});
        ExprPtr body = gen_expr_cq(t, xi_allowed, depth - 1);
        ctx.pop_back();
        return mk_app(mk_lam(x, s, body), gen_value_cq(s, xi_allowed, 0));
      }
      case 3: {  // run-time effect
        if (t->kind == VType::Kind::Nat && !xi_allowed.empty()) {
          auto it = xi_allowed.begin();
          std::advance(it, pick((int)xi_allowed.size()));
          return mk_op(*it, gen_value_cq(nat0(), xi_allowed, 0));
        }
        return mk_return(gen_value_cq(t, xi_allowed, depth));
      }
      case 4: {  // run-time handler
        std::string opn = coin(50) ? "tick" : "tock";
        EffectRow inner = xi_allowed;
        inner.insert(opn);
        ExprPtr subject = gen_expr_cq(nat0(), inner, depth - 1);
        auto h = std::make_shared<Handler>();
        HClause ret;
        ret.is_return = true;
        ret.x = name("u");
        ctx.push_back({ret.x, nat0()});
        ret.body = gen_expr_cq(t, xi_allowed, depth - 2 < 0 ? 0 : depth - 2);
        ctx.pop_back();
        h->clauses.push_back(ret);
        HClause cl;
        cl.op_name = opn;
        cl.x = name("y");
        cl.k = name("k");
        VTypePtr kt = cont_type(Level::RunTime, nat0(), xi_allowed, t);
        ctx.push_back({cl.x, nat0()});
        ctx.push_back({cl.k, kt});
        if (coin(60)) {
          cl.body = mk_continue(mk_var(cl.k), mk_var(cl.x));
        } else {
          cl.body = gen_expr_cq(t, xi_allowed, depth - 2 < 0 ? 0 : depth - 2);
        }
        ctx.pop_back();
        ctx.pop_back();
        h->clauses.push_back(cl);
        return mk_handle(subject, h);
      }
      case 5:
      case 6: {  // splice
        EffectRow xi = coin(60) ? EffectRow{} : xi_allowed;
        ExprPtr inner = gen_expr_s(code_type(t, xi), {}, depth - 1);
        return mk_splice(inner);
      }
      default:
        return mk_return(gen_value_cq(t, xi_allowed, depth));
    }
  }

  // ---- level -1 (splice mode) ----------------------------------------------

  ValuePtr gen_value_s(const VTypePtr &t, const EffectRow &delta_allowed, int depth) {
    (void)delta_allowed;
    auto vars = vars_of(t);
    if (!vars.empty() && coin(60)) return mk_var(vars[static_cast<size_t>(pick((int)vars.size()))].name);
    if (t->kind == VType::Kind::Nat) return mk_nat(static_cast<std::uint64_t>(pick(5)));
    if (t->kind == VType::Kind::Fun) {
      std::string x = name("z");
      ctx.push_back({x, t->dom});
      ExprPtr body = gen_expr_s(t->cod, t->latent, depth - 1);
      ctx.pop_back();
      return mk_lam(x, t->dom, body);
    }
    return mk_nat(0);
  }

  // A value of Code type in splice mode is always produced via an expression
  // (quotes are expressions), so Code targets go through gen_expr_s.
  ExprPtr gen_expr_s(const VTypePtr &t, const EffectRow &delta_allowed, int depth) {
    if (t->kind == VType::Kind::Code) return gen_code_expr(t, delta_allowed, depth);
    if (depth <= 0 || !spend()) return mk_return(gen_value_s(t, delta_allowed, 0));
    switch (pick(6)) {
      case 0:
        return mk_return(gen_value_s(t, delta_allowed, depth));
      case 1: {  // do
        VTypePtr s = coin(50) ? natm1() : code_nat();
        ExprPtr e1 = gen_expr_s(s, delta_allowed, depth - 1);
        std::string x = name("w");
        ctx.push_back({x, s});
        ExprPtr e2 = gen_expr_s(t, delta_allowed, depth - 1);
        ctx.pop_back();
        return mk_do(x, s, e1, e2);
      }
      case 2: {  // arithmetic (Nat targets only)
        if (t->kind == VType::Kind::Nat) {
          ArithOp op = pick(3) == 0 ? ArithOp::Plus : pick(2) == 0 ? ArithOp::Times : ArithOp::Monus;
          return mk_arith(op, gen_value_s(natm1(), delta_allowed, 0),
                          gen_value_s(natm1(), delta_allowed, 0));
        }
        return mk_return(gen_value_s(t, delta_allowed, depth));
      }
      case 3: {  // beta redex at level -1
        VTypePtr s = coin(50) ? natm1() : code_nat();
        std::string x = name("z");
        ctx.push_back({x, s});
        ExprPtr body = gen_expr_s(t, delta_allowed, depth - 1);
        ctx.pop_back();
        ValuePtr arg;
        if (s->kind == VType::Kind::Code) {
          // Code arguments must come from an expression; bind one first.
          ExprPtr ce = gen_code_expr(s, delta_allowed, depth - 1);
          std::string c = name("c");
          ctx.push_back({c, s});
          ExprPtr app = mk_app(mk_lam(x, s, body), mk_var(c));
          ctx.pop_back();
          return mk_do(c, s, ce, app);
        }
        arg = gen_value_s(s, delta_allowed, 0);
        return mk_app(mk_lam(x, s, body), arg);
      }
      default:
        return mk_return(gen_value_s(t, delta_allowed, depth));
    }
  }

  ExprPtr gen_code_expr(const VTypePtr &t, const EffectRow &delta_allowed, int depth) {
    auto vars = vars_of(t);
    if ((depth <= 0 || !spend())) {
      if (!vars.empty() && coin(70))
        return mk_return(mk_var(vars[static_cast<size_t>(pick((int)vars.size()))].name));
      return mk_quote(gen_expr_cq(t->code_val, t->code_row, 0));
    }
    // continue on a continuation from an enclosing clause, when compatible
    std::vector<Entry> konts;
    for (const auto &e : ctx)
      if (e.type->kind == VType::Kind::Cont && vtype_equal(e.type->cod, t) &&
          e.type->latent == delta_allowed)
        konts.push_back(e);
    switch (pick(10)) {
      case 0:
        if (!vars.empty())
          return mk_return(mk_var(vars[static_cast<size_t>(pick((int)vars.size()))].name));
        [[fallthrough]];
      case 1:
      case 2:
        return mk_quote(gen_expr_cq(t->code_val, t->code_row, depth - 1));
      case 3:
      case 4: {  // perform a compile-time effect
        std::string opn;
        if (!delta_allowed.empty()) {
          auto it = delta_allowed.begin();
          std::advance(it, pick((int)delta_allowed.size()));
          opn = *it;
        }
        if (!opn.empty() && vtype_equal(t, code_nat())) {
          ExprPtr arg = gen_code_expr(code_nat(), delta_allowed, depth - 1);
          std::string a = name("c");
          ctx.push_back({a, code_nat()});
          ExprPtr body = mk_op(opn, mk_var(a));
          ctx.pop_back();
          return mk_do(a, code_nat(), arg, body);
        }
        return mk_quote(gen_expr_cq(t->code_val, t->code_row, depth - 1));
      }
      case 5:
      case 6:
      case 7: {  // handle a compile-time effect around code generation
        std::string opn = coin(50) ? "lift1" : "lift2";
        EffectRow inner = delta_allowed;
        inner.insert(opn);
        VTypePtr subject_ty;
        ExprPtr subject;
        if (coin(55)) {
          // canonical crossing subject: a quoted lambda whose body splices a
          // perform whose argument quotes the lambda's own binder
          std::string xn = name("mx"), cn = name("mc");
          ExprPtr arg_quote = mk_quote(mk_return(mk_var(xn)));
          ExprPtr perf = mk_do(cn, nullptr, arg_quote, mk_op(opn, mk_var(cn)));
          ExprPtr body = mk_splice(perf);
          if (coin(50)) {
            std::string an = name("ma");
            body = mk_do(an, nullptr, body, mk_return(mk_var(an)));
          }
          subject = mk_quote(mk_return(mk_lam(xn, nat0(), body)));
          subject_ty = code_type(fun_type(Level::RunTime, nat0(), {}, nat0()), EffectRow{});
        } else {
          subject_ty = coin(50) ? t
                                : code_type(fun_type(Level::RunTime, nat_type(Level::RunTime),
                                                     t->code_row, t->code_val),
                                            EffectRow{});
          subject = gen_code_expr(subject_ty, inner, depth - 1);
        }
        auto h = std::make_shared<Handler>();
        HClause ret;
        ret.is_return = true;
        ret.x = name("u");
        ctx.push_back({ret.x, subject_ty});
        if (vtype_equal(subject_ty, t) && coin(60)) {
          ret.body = mk_return(mk_var(ret.x));
        } else {
          ret.body = gen_code_expr(t, delta_allowed, depth - 2 < 0 ? 0 : depth - 2);
        }
        ctx.pop_back();
        h->clauses.push_back(ret);
        HClause cl;
        cl.op_name = opn;
        cl.x = name("y");
        cl.k = name("k");
        VTypePtr kt = cont_type(Level::CompileTime, code_nat(), delta_allowed, t);
        ctx.push_back({cl.x, code_nat()});
        ctx.push_back({cl.k, kt});
        int mode = pick(4);
        if (mode == 0) {
          cl.body = mk_continue(mk_var(cl.k), mk_var(cl.x));  // resume with the argument
        } else if (mode == 1 && vtype_equal(t, code_nat())) {
          // leak: discard the continuation, hand the received fragment out
          cl.body = mk_return(mk_var(cl.x));
        } else if (mode == 1 || mode == 2) {
          // discard the continuation and the argument
          cl.body = mk_do(name("w"), code_nat(), mk_return(mk_var(cl.x)),
                          gen_code_expr(t, delta_allowed, depth - 2 < 0 ? 0 : depth - 2));
        } else {
          // rebuild code around the argument eagerly, then resume
          std::string a = name("a");
          ExprPtr rebuilt =
              mk_quote(mk_do(a, nat_type(Level::RunTime), mk_splice(mk_return(mk_var(cl.x))),
                             mk_arith(ArithOp::Plus, mk_var(a), mk_nat(0))));
          std::string u = name("u");
          ctx.push_back({u, code_nat()});
          ExprPtr resume = mk_continue(mk_var(cl.k), mk_var(u));
          ctx.pop_back();
          cl.body = mk_do(u, code_nat(), rebuilt, resume);
        }
        ctx.pop_back();
        ctx.pop_back();
        h->clauses.push_back(cl);
        return mk_handle(subject, h);
      }
      case 8:
        if (!konts.empty()) {
          const Entry &k = konts[static_cast<size_t>(pick((int)konts.size()))];
          ExprPtr arg = gen_code_expr(k.type->dom, delta_allowed, depth - 1);
          std::string a = name("c");
          ExprPtr body = mk_continue(mk_var(k.name), mk_var(a));
          return mk_do(a, k.type->dom, arg, body);
        }
        {
          // build the code of a function (possibly a whole code generator
          // with its own handlers) and throw it away
          VTypePtr fun_code =
              code_type(fun_type(Level::RunTime, nat0(), {}, nat0()), EffectRow{});
          ExprPtr built = gen_code_expr(fun_code, delta_allowed, depth - 1);
          std::string w = name("w");
          ExprPtr rest = gen_code_expr(t, delta_allowed, depth - 1);
          return mk_do(w, fun_code, built, rest);
        }
      default:
        return mk_quote(gen_expr_cq(t->code_val, t->code_row, depth - 1));
    }
  }

  Program build(std::uint64_t seed) {
    Program p;
    p.sigs = {
        {"tick", Level::RunTime, nat0(), nat0(), {}},
        {"tock", Level::RunTime, nat0(), nat0(), {}},
        {"lift1", Level::CompileTime, code_type(nat0(), {}, "s1"), code_type(nat0(), {}, "s1"), {}},
        {"lift2", Level::CompileTime, code_type(nat0(), {}, "s2"), code_type(nat0(), {}, "s2"), {}},
    };
    // top level: a compile-mode expression with empty rows
    p.body = gen_expr_cq(nat0(), {}, 5 + static_cast<int>(seed % 4));
    return p;
  }
};

}  // namespace

Program gen_program(std::uint64_t seed, int size_bound) {
  for (int attempt = 0; attempt < 16; ++attempt) {
    Gen g(seed * 1000003 + static_cast<std::uint64_t>(attempt), size_bound);
    Program p = g.build(seed);
    auto checked = typecheck_program(p);
    if (checked.ok) return checked.program;
  }
  // trivial fallback
  Program p;
  p.sigs = {
      {"tick", Level::RunTime, Gen::nat0(), Gen::nat0(), {}},
      {"tock", Level::RunTime, Gen::nat0(), Gen::nat0(), {}},
      {"lift1", Level::CompileTime, code_type(Gen::nat0(), {}, "s1"),
       code_type(Gen::nat0(), {}, "s1"), {}},
      {"lift2", Level::CompileTime, code_type(Gen::nat0(), {}, "s2"),
       code_type(Gen::nat0(), {}, "s2"), {}},
  };
  p.body = mk_splice(mk_quote(mk_return(mk_nat(0))));
  auto checked = typecheck_program(p);
  return checked.program;
}

RelationReport check_relations(const std::vector<Program> &annotated_programs,
                               std::uint64_t fuel) {
  RelationReport report;
  for (const auto &p : annotated_programs) {
    CheckOutcomes oc = compare_checks(p, fuel);
    bool any_fuel = oc.lazy.kind == core::Outcome::Kind::FuelExhausted ||
                    oc.eager.kind == core::Outcome::Kind::FuelExhausted ||
                    oc.c4c.kind == core::Outcome::Kind::FuelExhausted || !oc.naive.known;
    if (any_fuel) {
      report.fuel_exhausted++;
      continue;
    }
    report.checked++;
    auto violate = [&](const char *rel) {
      auto interesting = [&](const Program &q) {
        CheckOutcomes o = compare_checks(q, fuel);
        if (!o.naive.known) return false;
        if (std::string(rel) == "a")
          return (o.lazy.kind == core::Outcome::Kind::ScopeError) != o.naive.lazy_extrusion_final;
        if (std::string(rel) == "b")
          return outcome_accepts(o.eager) && !outcome_accepts(o.c4c);
        return o.naive.lazy_extrusion_final && o.c4c.kind != core::Outcome::Kind::ScopeError;
      };
      Program small = shrink(p, interesting);
      report.violations.push_back({rel, print_source(small)});
    };
    bool lazy_errs = oc.lazy.kind == core::Outcome::Kind::ScopeError;
    if (lazy_errs != oc.naive.lazy_extrusion_final) violate("a");
    if (outcome_accepts(oc.eager) && !outcome_accepts(oc.c4c)) violate("b");
    if (oc.naive.lazy_extrusion_final && oc.c4c.kind != core::Outcome::Kind::ScopeError)
      violate("c");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Shrinking.

namespace {

// Rebuilds the expression with the node at preorder index `target` replaced,
// when a replacement of matching shape is known.
struct Replacer {
  int counter = 0;
  int target = -1;
  bool replaced = false;

  ExprPtr visit(const ExprPtr &e) {
    int my = counter++;
    ExprPtr reb = rebuild_children(e);
    if (my == target) {
      // try `return 0`; the caller re-typechecks, so a shape mismatch is fine
      replaced = true;
      return mk_return(mk_nat(0), e->loc);
    }
    return reb;
  }

  ExprPtr rebuild_children(const ExprPtr &e) {
    using K = Expr::Kind;
    switch (e->kind) {
      case K::Do:
        return mk_do(e->binder, e->ann, visit(e->e1), visit(e->e2), e->loc);
      case K::Handle: {
        auto h = std::make_shared<Handler>();
        for (const auto &c : e->handler->clauses) {
          HClause nc = c;
          nc.body = visit(c.body);
          h->clauses.push_back(nc);
        }
        return mk_handle(visit(e->inner), h, e->loc);
      }
      case K::Quote:
        return mk_quote(visit(e->inner), e->loc);
      case K::Splice:
        return mk_splice(visit(e->inner), e->loc);
      case K::App:
      case K::Return:
      case K::Op:
      case K::Continue:
      case K::Arith: {
        auto copy = std::make_shared<Expr>(*e);
        if (e->v1 && e->v1->kind == Value::Kind::Lam) {
          auto lam = std::make_shared<Value>(*e->v1);
          lam->body = visit(e->v1->body);
          copy->v1 = lam;
        }
        if (e->v2 && e->v2->kind == Value::Kind::Lam) {
          auto lam = std::make_shared<Value>(*e->v2);
          lam->body = visit(e->v2->body);
          copy->v2 = lam;
        }
        return copy;
      }
    }
    return e;
  }
};

// Do-binder annotations are optional and re-derived by the checker; dropping
// them lets a replacement change the bound computation's type.
ExprPtr strip_do_anns(const ExprPtr &e) {
  using K = Expr::Kind;
  switch (e->kind) {
    case K::Do:
      return mk_do(e->binder, nullptr, strip_do_anns(e->e1), strip_do_anns(e->e2), e->loc);
    case K::Handle: {
      auto h = std::make_shared<Handler>();
      for (const auto &c : e->handler->clauses) {
        HClause nc = c;
        nc.body = strip_do_anns(c.body);
        h->clauses.push_back(nc);
      }
      return mk_handle(strip_do_anns(e->inner), h, e->loc);
    }
    case K::Quote:
      return mk_quote(strip_do_anns(e->inner), e->loc);
    case K::Splice:
      return mk_splice(strip_do_anns(e->inner), e->loc);
    default: {
      auto copy = std::make_shared<Expr>(*e);
      auto fix = [&](const ValuePtr &v) -> ValuePtr {
        if (!v || v->kind != Value::Kind::Lam) return v;
        auto lam = std::make_shared<Value>(*v);
        lam->body = strip_do_anns(v->body);
        return lam;
      };
      copy->v1 = fix(e->v1);
      copy->v2 = fix(e->v2);
      return copy;
    }
  }
}

int count_nodes(const ExprPtr &e) {
  Replacer r;
  r.target = -1;
  r.visit(e);
  return r.counter;
}

}  // namespace

Program shrink(const Program &p, const std::function<bool(const Program &)> &still_interesting) {
  Program cur = p;
  bool progress = true;
  while (progress) {
    progress = false;
    int n = count_nodes(cur.body);
    for (int i = 0; i < n; ++i) {
      Replacer r;
      r.target = i;
      ExprPtr candidate_body = r.visit(cur.body);
      if (!r.replaced) continue;
      Program candidate;
      candidate.sigs = cur.sigs;
      candidate.body = strip_do_anns(candidate_body);
      auto checked = typecheck_program(candidate);
      if (!checked.ok) continue;
      if (expr_equal(checked.program.body, cur.body)) continue;
      if (still_interesting(checked.program)) {
        cur = checked.program;
        progress = true;
        break;
      }
    }
  }
  return cur;
}

}  // namespace sled
