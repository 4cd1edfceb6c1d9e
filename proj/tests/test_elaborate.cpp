#include "doctest.h"
#include "helpers.hpp"

using namespace sled;
using namespace sled::core;

namespace {

bool elab_equal(const TermPtr &a, const TermPtr &b) {
  return term_equal(alpha_canonicalize(admin_normalize(a)),
                    alpha_canonicalize(admin_normalize(b)));
}

}  // namespace

TEST_CASE("naive elaboration of the minimal staged program") {
  auto checked = test::load_listing("staged_identity.sl");
  auto t = elaborate(checked.program, CheckKind::Naive);
  // tls(do x <- return Ret(Nat(0)) in (fun z -> return z) x)
  auto expected = tm_tls(tm_do(
      "x", tm_return(nf_ast_ret(nf_ast_nat(0))),
      tm_app(nf_lam("z", tm_return(nf_metavar("z"))), nf_metavar("x"))));
  CHECK(elab_equal(t, expected));
}

TEST_CASE("type elaboration") {
  using namespace sled::src;
  // Code(Nat!{}) elaborates to AST(Nat!{})
  auto code = code_type(nat_type(Level::RunTime), {});
  CHECK(coretype_to_string(elaborate_vtype(code)) == "AST(Nat!{})");
  // level -1 Nat stays Nat
  CHECK(coretype_to_string(elaborate_vtype(nat_type(Level::CompileTime))) == "Nat");
  // a level 0 computation type with both rows: delta rides outside the AST
  auto ct = elaborate_expr_type_cq(nat_type(Level::RunTime), {"get"}, {"print"});
  CHECK(coretype_to_string(ct.value) == "AST(Nat!{print})");
  CHECK(ct.row == EffectRow{"get"});
  // level 0 value types elaborate to ASTs of erased pretypes
  CHECK(coretype_to_string(elaborate_vtype(nat_type(Level::RunTime))) == "AST(Nat)");
}

TEST_CASE("context entry elaboration") {
  using namespace sled::src;
  TypingContext ctx;
  CHECK(elaborate_context(ctx).empty());
  ctx.push("x", nat_type(Level::RunTime));
  ctx.push("y", nat_type(Level::CompileTime));
  auto out = elaborate_context(ctx);
  REQUIRE(out.size() == 2);
  CHECK(coretype_to_string(out[0].second) == "FParam(Nat)");
  CHECK(coretype_to_string(out[1].second) == "Nat");
}

TEST_CASE("quote-splice duality, syntactically, for every kind") {
  int q_cases = 0, s_cases = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    auto p = gen_program(seed, 12);
    std::vector<std::pair<src::ExprPtr, src::Mode>> exprs;
    test::collect_by_mode(p.body, src::Mode::Compile, exprs);
    for (const auto &[e, mode] : exprs) {
      for (CheckKind k :
           {CheckKind::Naive, CheckKind::Lazy, CheckKind::Eager, CheckKind::C4C}) {
        if (mode == src::Mode::Quote) {
          auto wrapped = src::mk_splice(src::mk_quote(e));
          CHECK(term_equal(elaborate_expr(wrapped, src::Mode::Quote, k),
                           elaborate_expr(e, src::Mode::Quote, k)));
          q_cases++;
        } else if (mode == src::Mode::Splice) {
          auto wrapped = src::mk_quote(src::mk_splice(e));
          CHECK(term_equal(elaborate_expr(wrapped, src::Mode::Splice, k),
                           elaborate_expr(e, src::Mode::Splice, k)));
          s_cases++;
        }
      }
    }
  }
  CHECK(q_cases > 100);
  CHECK(s_cases > 100);
}

TEST_CASE("kind census: naive has no inserted nodes, lazy checks only the splice") {
  for (const char *name : {"discarded.sl", "safe_resume.sl", "eager_false_positive.sl",
                           "c4c_false_positive.sl", "classifier_safe.sl", "staged_identity.sl"}) {
    auto checked = test::load_listing(name);
    auto naive = census(elaborate(checked.program, CheckKind::Naive));
    CHECK(naive.checks == 0);
    CHECK(naive.check_ms == 0);
    CHECK(naive.dlets == 0);
    CHECK(naive.tls >= 1);

    auto lazy = census(elaborate(checked.program, CheckKind::Lazy));
    CHECK(lazy.check_ms == 0);
    CHECK(lazy.checks == lazy.tls);  // exactly one check per top-level splice

    auto eager = census(elaborate(checked.program, CheckKind::Eager));
    CHECK(eager.check_ms == 0);
    CHECK(eager.checks >= lazy.checks);
    CHECK(eager.dlets >= lazy.dlets);

    auto c4c = census(elaborate(checked.program, CheckKind::C4C));
    CHECK(c4c.checks == 0);
    CHECK(c4c.check_ms == eager.checks);
    CHECK(c4c.dlets == eager.dlets);
    CHECK(c4c.tls == eager.tls);
  }
}

TEST_CASE("elaboration preservation: every kind, every corpus program") {
  for (const char *name : {"discarded.sl", "safe_resume.sl", "eager_false_positive.sl",
                           "c4c_false_positive.sl", "classifier_safe.sl", "staged_identity.sl",
                           "accumulator.sl"}) {
    auto checked = test::load_listing(name);
    auto sigs = build_core_sigs(checked.program.sigs);
    for (CheckKind k : {CheckKind::Naive, CheckKind::Lazy, CheckKind::Eager, CheckKind::C4C}) {
      auto t = elaborate(checked.program, k);
      auto r = typecheck_core(sigs, {}, t);
      REQUIRE_MESSAGE(r.ok, name << ": " << (r.errors.empty() ? "" : r.errors[0].message));
      auto want = elaborate_expr_type_cq(checked.type, {}, {});
      CHECK_MESSAGE(coretype_equal(r.type.value, want.value),
                    name << ": " << coretype_to_string(r.type.value) << " vs "
                         << coretype_to_string(want.value));
      CHECK(r.type.row.empty());
    }
  }
}

TEST_CASE("instrumented naive run behaves like naive") {
  for (const char *name : {"discarded.sl", "eager_false_positive.sl", "accumulator.sl"}) {
    auto checked = test::load_listing(name);
    auto plain = run(elaborate(checked.program, CheckKind::Naive)).outcome;
    auto inst = run(elaborate_instrumented_naive(checked.program)).outcome;
    CHECK(plain.kind == inst.kind);
    if (plain.kind == Outcome::Kind::Value)
      CHECK(nf_equal(plain.value, inst.value));
  }
}
