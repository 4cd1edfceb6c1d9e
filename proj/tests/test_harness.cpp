#include "doctest.h"
#include "helpers.hpp"

using namespace sled;

TEST_CASE("analyze_naive on the corpus listings") {
  auto flags_of = [](const char *name) {
    auto checked = test::load_listing(name);
    return analyze_naive(checked.program);
  };

  // offending AST discarded: seen mid-run, final state clean
  auto l1 = flags_of("discarded.sl");
  CHECK(l1.known);
  CHECK(l1.eager_extrusion_seen);
  CHECK(!l1.lazy_extrusion_final);

  // used only in safe ways: same flags
  auto l2 = flags_of("safe_resume.sl");
  CHECK(l2.eager_extrusion_seen);
  CHECK(!l2.lazy_extrusion_final);

  // minimal program: no variables at all
  auto minimal = flags_of("staged_identity.sl");
  CHECK(!minimal.eager_extrusion_seen);
  CHECK(!minimal.lazy_extrusion_final);

  // final extrusion implies seen extrusion on every corpus entry
  for (const char *name : {"discarded.sl", "safe_resume.sl", "eager_false_positive.sl",
                           "c4c_false_positive.sl", "classifier_safe.sl", "accumulator.sl"}) {
    auto f = flags_of(name);
    if (f.lazy_extrusion_final) CHECK(f.eager_extrusion_seen);
  }
}

TEST_CASE("a genuinely extruding program trips the lazy flag and the lazy check") {
  // the handler discards the continuation and leaks the received fragment
  // into the final code
  auto checked = test::check_text(
      "effect^ lift : Code(Nat!{})@s -> Code(Nat!{})@s\n"
      "$( handle << fun (x : Nat) -> $( perform lift(<< x >>) ) >>"
      "   with { return(u) -> << 0 >> ; lift(y, k) -> return y } )");
  REQUIRE(checked.ok);
  auto flags = analyze_naive(checked.program);
  CHECK(flags.eager_extrusion_seen);
  CHECK(flags.lazy_extrusion_final);
  auto oc = compare_checks(checked.program);
  CHECK(oc.lazy.kind == core::Outcome::Kind::ScopeError);
  CHECK(oc.c4c.kind == core::Outcome::Kind::ScopeError);
  CHECK(oc.eager.kind == core::Outcome::Kind::ScopeError);
  CHECK(!oc.classifier_accepted);
}

TEST_CASE("compare_checks fills the expected rows for the discriminating listings") {
  auto row = [](const char *name) {
    auto checked = test::load_listing(name);
    return compare_checks(checked.program);
  };
  auto l3 = row("eager_false_positive.sl");
  CHECK(outcome_accepts(l3.lazy));
  CHECK(l3.eager.kind == core::Outcome::Kind::ScopeError);
  CHECK(outcome_accepts(l3.c4c));
  CHECK(!l3.classifier_accepted);

  auto l4 = row("c4c_false_positive.sl");
  CHECK(outcome_accepts(l4.lazy));
  CHECK(l4.eager.kind == core::Outcome::Kind::ScopeError);
  CHECK(l4.c4c.kind == core::Outcome::Kind::ScopeError);
  CHECK(!l4.classifier_accepted);

  auto l5 = row("classifier_safe.sl");
  CHECK(outcome_accepts(l5.lazy));
  CHECK(outcome_accepts(l5.eager));
  CHECK(outcome_accepts(l5.c4c));
  CHECK(l5.classifier_accepted);
}

TEST_CASE("matrix determinism") {
  auto checked = test::load_listing("eager_false_positive.sl");
  auto a = compare_checks(checked.program);
  auto b = compare_checks(checked.program);
  CHECK(a.lazy.kind == b.lazy.kind);
  CHECK(a.eager.kind == b.eager.kind);
  CHECK(a.c4c.kind == b.c4c.kind);
  CHECK(a.classifier_accepted == b.classifier_accepted);
}

TEST_CASE("generator: minimal seed yields the trivial splice-of-quote program") {
  auto p = gen_program(0, 1);
  REQUIRE(p.body);
  // size 1 exhausts the budget immediately: a leaf program
  auto checked = src::typecheck_program(p);
  CHECK(checked.ok);
}

TEST_CASE("generator: every output re-checks") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto p = gen_program(seed, 10 + static_cast<int>(seed % 9));
    auto checked = src::typecheck_program(p);
    REQUIRE_MESSAGE(checked.ok, "seed " << seed << "\n" << print_source(p));
  }
}

TEST_CASE("generator census: handlers that resume and handlers that discard both appear") {
  int resumes = 0, discards = 0, quotes = 0, performs = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto p = gen_program(seed, 14);
    std::vector<std::pair<src::ExprPtr, src::Mode>> exprs;
    test::collect_by_mode(p.body, src::Mode::Compile, exprs);
    for (const auto &[e, mode] : exprs) {
      if (e->kind == src::Expr::Kind::Quote) quotes++;
      if (e->kind == src::Expr::Kind::Op) performs++;
      if (e->kind == src::Expr::Kind::Handle) {
        for (const auto &c : e->handler->clauses) {
          if (c.is_return) continue;
          bool uses_k = src::free_vars(c.body).count(c.k) > 0;
          (uses_k ? resumes : discards)++;
        }
      }
    }
  }
  CHECK(resumes > 50);
  CHECK(discards > 50);
  CHECK(quotes > 200);
  CHECK(performs > 50);
}

TEST_CASE("relations hold on the corpus") {
  std::vector<src::Program> programs;
  for (const char *name : {"discarded.sl", "safe_resume.sl", "eager_false_positive.sl",
                           "c4c_false_positive.sl", "classifier_safe.sl", "staged_identity.sl",
                           "accumulator.sl"}) {
    programs.push_back(test::load_listing(name).program);
  }
  auto report = check_relations(programs);
  CHECK(report.checked == 7);
  CHECK(report.fuel_exhausted == 0);
  for (const auto &v : report.violations)
    MESSAGE("relation " << v.relation << " violated by\n" << v.program);
  CHECK(report.violations.empty());
}

TEST_CASE("empty program set passes vacuously") {
  auto report = check_relations({});
  CHECK(report.checked == 0);
  CHECK(report.violations.empty());
}

TEST_CASE("shrinking reduces a failing program while keeping the failure") {
  auto checked = test::check_text(
      "effect^ lift : Code(Nat!{})@s -> Code(Nat!{})@s\n"
      "$( do pad <- (do a <- 1 + 2 in << return 0 >> ) in\n"
      "   handle << fun (x : Nat) -> $( perform lift(<< x >>) ) >>"
      "   with { return(u) -> << 0 >> ; lift(y, k) -> return y } )");
  REQUIRE(checked.ok);
  auto lazily_errs = [](const src::Program &p) {
    return core::run(elaborate(p, CheckKind::Lazy)).outcome.kind ==
           core::Outcome::Kind::ScopeError;
  };
  REQUIRE(lazily_errs(checked.program));
  auto small = shrink(checked.program, lazily_errs);
  CHECK(lazily_errs(small));
  auto nodes = [](const src::Program &p) {
    std::vector<std::pair<src::ExprPtr, src::Mode>> out;
    test::collect_by_mode(p.body, src::Mode::Compile, out);
    return out.size();
  };
  CHECK(nodes(small) < nodes(checked.program));
}

TEST_CASE("final extrusion implies seen extrusion, and the first step index is sane") {
  int finals = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto p = gen_program(seed, 12);
    auto flags = analyze_naive(p);
    if (!flags.known) continue;
    if (flags.lazy_extrusion_final) {
      finals++;
      CHECK(flags.eager_extrusion_seen);
    }
    if (flags.eager_extrusion_seen) CHECK(flags.eager_first_step < 100000);
  }
  CHECK(finals > 0);
}
