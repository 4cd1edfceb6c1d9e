#include "doctest.h"
#include "helpers.hpp"

using namespace sled;
using namespace sled::src;

TEST_CASE("entails: reflexive, transitive, and not symmetric") {
  ClassifierContext ctx;
  ctx.classifiers = {"bot", "g1", "g2"};
  ctx.order = {{"bot", "g1"}, {"g1", "g2"}};
  CHECK(entails(ctx, "g1", "g1"));
  CHECK(entails(ctx, "bot", "g2"));
  CHECK(!entails(ctx, "g2", "g1"));
  CHECK_THROWS_AS((void)entails(ctx, "bot", "nope"), std::logic_error);
}

TEST_CASE("expressiveness of the static discipline on the five corpus listings") {
  auto expect = [](const char *name, bool accepted) {
    auto checked = test::load_listing(name);
    auto r = check_classifiers(checked.program);
    CHECK_MESSAGE(r.ok == accepted,
                  name << ": " << (r.diagnostics.empty()
                                       ? std::string("accepted")
                                       : format_diagnostics(r.diagnostics)));
  };
  expect("discarded.sl", false);
  expect("safe_resume.sl", false);
  expect("eager_false_positive.sl", false);
  expect("c4c_false_positive.sl", false);
  expect("classifier_safe.sl", true);
}

TEST_CASE("programs without staging tricks are accepted trivially") {
  auto checked = test::check_text("$( << return 3 >> )");
  REQUIRE(checked.ok);
  CHECK(check_classifiers(checked.program).ok);

  auto plain = test::check_text("return (fun (x : Nat) -> return x)");
  REQUIRE(plain.ok);
  CHECK(check_classifiers(plain.program).ok);
}

TEST_CASE("compile-time signatures must carry classifier-tagged Code results") {
  auto checked = test::load_listing("accumulator.sl");
  auto r = check_classifiers(checked.program);
  CHECK(!r.ok);
  REQUIRE(!r.diagnostics.empty());
  CHECK(r.diagnostics[0].message.find("classifier-tagged Code") != std::string::npos);
}

TEST_CASE("multiple top-level splices are reported in classifier mode") {
  auto checked = test::check_text("$( do a <- << return 0 >> in return a ) + $( << return 2 >> )");
  REQUIRE(checked.ok);
  auto r = check_classifiers(checked.program);
  CHECK(!r.ok);
  REQUIRE(!r.diagnostics.empty());
  CHECK(r.diagnostics[0].message.find("single top-level splice") != std::string::npos);
}

TEST_CASE("freshness: every binder introduces a distinct classifier") {
  auto checked = test::load_listing("classifier_safe.sl");
  auto r = check_classifiers(checked.program);
  REQUIRE(r.ok);
  std::set<std::string> seen(r.introduced.begin(), r.introduced.end());
  CHECK(seen.size() == r.introduced.size());
  CHECK(!r.introduced.empty());
}

TEST_CASE("weakening: acceptance is stable under context extension") {
  for (const char *name :
       {"classifier_safe.sl", "discarded.sl", "safe_resume.sl", "staged_identity.sl"}) {
    auto checked = test::load_listing(name);
    bool base = check_classifiers(checked.program).ok;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      ClassifierContext extra;
      extra.classifiers = {"w1", "w2", "w3"};
      if (seed % 2) extra.order.push_back({"w1", "w2"});
      if (seed % 3) extra.order.push_back({"w2", "w3"});
      extra.level0_vars.emplace_back("extra" + std::to_string(seed),
                                     nat_type(Level::RunTime), "w1");
      extra.levelm1_vars.emplace_back("extram1",
                                      code_type(nat_type(Level::RunTime), {}, "bot"));
      bool extended = check_classifiers_with(checked.program, extra).ok;
      CHECK_MESSAGE(base == extended, name << " seed " << seed);
    }
  }
}

TEST_CASE("weakening over generated classifier-relevant programs") {
  int flips = 0;
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    auto p = gen_program(seed, 12);
    bool base = check_classifiers(p).ok;
    ClassifierContext extra;
    extra.classifiers = {"wa", "wb"};
    extra.order = {{"wa", "wb"}};
    extra.level0_vars.emplace_back("wx", nat_type(Level::RunTime), "wb");
    bool extended = check_classifiers_with(p, extra).ok;
    if (base != extended) flips++;
  }
  CHECK(flips == 0);
}

TEST_CASE("classifier soundness over the corpus") {
  // every accepted corpus program runs naively to a closed value
  for (const char *name : {"discarded.sl", "safe_resume.sl", "eager_false_positive.sl",
                           "c4c_false_positive.sl", "classifier_safe.sl", "staged_identity.sl",
                           "accumulator.sl"}) {
    auto checked = test::load_listing(name);
    if (!check_classifiers(checked.program).ok) continue;
    auto res = core::run(elaborate(checked.program, CheckKind::Naive), 100000);
    REQUIRE_MESSAGE(res.outcome.kind == core::Outcome::Kind::Value, name);
    CHECK_MESSAGE(core::freevars(res.outcome.value).empty(), name);
  }
}
