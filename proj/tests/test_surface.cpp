#include <random>

#include "doctest.h"
#include "helpers.hpp"

using namespace sled;
using namespace sled::src;

TEST_CASE("parse: the minimal staged program has the expected shape") {
  auto r = parse_program("$(do x <- <<return 0>> in (fun z -> return z) x)");
  REQUIRE(r.ok);
  const auto &body = r.program.body;
  REQUIRE(body->kind == Expr::Kind::Splice);
  REQUIRE(body->inner->kind == Expr::Kind::Do);
  CHECK(body->inner->e1->kind == Expr::Kind::Quote);
  CHECK(body->inner->e2->kind == Expr::Kind::App);
  CHECK(body->inner->e2->v1->kind == Value::Kind::Lam);
}

TEST_CASE("parse: empty program is a diagnostic") {
  auto r = parse_program("");
  CHECK(!r.ok);
  REQUIRE(!r.diagnostics.empty());
  CHECK(r.diagnostics[0].message.find("empty program") != std::string::npos);

  auto r2 = parse_program("(* just a comment *)");
  CHECK(!r2.ok);
}

TEST_CASE("parse: quote at top level is rejected (compile mode has no quote)") {
  auto r = parse_program("<<return 1>>");
  CHECK(!r.ok);
  REQUIRE(!r.diagnostics.empty());
  CHECK(r.diagnostics[0].message.find("quote") != std::string::npos);
}

TEST_CASE("parse: splice inside a splice body is rejected") {
  auto r = parse_program("$( $( return 0 ) )");
  CHECK(!r.ok);
}

TEST_CASE("parse: undeclared operation names are diagnosed") {
  auto r = parse_program("$( perform mystery(0) )");
  CHECK(!r.ok);
  bool found = false;
  for (const auto &d : r.diagnostics)
    if (d.message.find("undeclared operation") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("parse: every diagnostic carries a position") {
  auto r = parse_program("$(do x <- <<return 0>>\n in perform nope(x))");
  CHECK(!r.ok);
  for (const auto &d : r.diagnostics) {
    CHECK(d.loc.line >= 1);
    CHECK(d.loc.column >= 1);
  }
}

TEST_CASE("sugar: op argument, return argument and sequencing desugar to do") {
  auto r = parse_program(
      "effect^ lift : Code(Nat!{}) -> Code(Nat!{})\n"
      "$( do c <- (handle << return 1 >> with { return(u) -> return u }) in perform lift(c) ; "
      "<< return 0 >> )");
  REQUIRE(r.ok);
}

TEST_CASE("round trip: corpus programs") {
  for (const char *name : {"discarded.sl", "safe_resume.sl", "eager_false_positive.sl",
                           "c4c_false_positive.sl", "classifier_safe.sl", "staged_identity.sl",
                           "accumulator.sl"}) {
    auto parsed = parse_program(test::read_file(name));
    REQUIRE_MESSAGE(parsed.ok, name);
    auto printed = print_source(parsed.program);
    auto reparsed = parse_program(printed);
    REQUIRE_MESSAGE(reparsed.ok, printed);
    CHECK_MESSAGE(program_equal(parsed.program, reparsed.program), name);
  }
}

TEST_CASE("round trip: annotated corpus programs and generated programs") {
  for (const char *name : {"discarded.sl", "classifier_safe.sl", "accumulator.sl"}) {
    auto checked = test::load_listing(name);
    auto printed = print_source(checked.program);
    auto reparsed = parse_program(printed);
    REQUIRE_MESSAGE(reparsed.ok, printed);
    CHECK_MESSAGE(program_equal(checked.program, reparsed.program), name);
  }
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    auto p = gen_program(seed, 12);
    auto printed = print_source(p);
    auto reparsed = parse_program(printed);
    REQUIRE_MESSAGE(reparsed.ok, printed);
    CHECK_MESSAGE(program_equal(p, reparsed.program), printed);
  }
}

TEST_CASE("printing is deterministic") {
  auto p1 = gen_program(42, 14);
  auto p2 = gen_program(42, 14);
  CHECK(print_source(p1) == print_source(p2));
}

TEST_CASE("distinct binders with the same name keep their names when printed") {
  auto r = parse_program("$( do x <- << return 0 >> in do x <- << return 1 >> in return 2 )");
  REQUIRE(r.ok);
  auto printed = print_source(r.program);
  CHECK(printed.find("do x <- ") != std::string::npos);
  auto re = parse_program(printed);
  REQUIRE(re.ok);
  CHECK(program_equal(r.program, re.program));
}

TEST_CASE("print_core renders constructor application notation") {
  using namespace sled::core;
  CHECK(print_core(tm_return(nf_ast_ret(nf_ast_nat(0)))) == "return Ret(Nat(0))");
  CHECK(print_nf(nf_ast_lam(nf_fparam({0, pre_nat(), ""}),
                            nf_ast_var(nf_fparam({0, pre_nat(), ""})))) ==
        "Lam(α0, Var(α0))");
  CHECK(print_core(tm_check_m(nf_metavar("s"))) == "check_M(s)");
  CHECK(print_nf(nf_fparam({3, pre_nat(), ""}), true) == "α3:Nat");
}

TEST_CASE("structured output is stable json") {
  auto r = parse_program("$( << return 0 >> )");
  REQUIRE(r.ok);
  CHECK(structured_expr(r.program.body) ==
        R"({"children":[{"children":[{"children":[{"tag":"nat","value":0}],"tag":"return"}],"tag":"quote"}],"tag":"splice"})");
}

TEST_CASE("sugar: quoted value arguments desugar to the documented do form") {
  std::vector<src::EffectSig> sigs = {{"lift", Level::CompileTime,
                                       code_type(nat_type(Level::RunTime), {}),
                                       code_type(nat_type(Level::RunTime), {}),
                                       {}}};
  auto sugar = parse_expr("perform lift(<< 1 >>)", Mode::Splice, sigs);
  auto explicit_form = parse_expr("do a <- << return 1 >> in perform lift(a)", Mode::Splice, sigs);
  REQUIRE(sugar.ok);
  REQUIRE(explicit_form.ok);
  // identical up to the generated binder's name
  REQUIRE(sugar.expr->kind == Expr::Kind::Do);
  CHECK(expr_equal(sugar.expr->e1, explicit_form.expr->e1));
  CHECK(sugar.expr->e2->kind == Expr::Kind::Op);
  CHECK(sugar.expr->e2->v1->kind == Value::Kind::Var);
  CHECK(sugar.expr->e2->v1->name == sugar.expr->binder);
}

TEST_CASE("parser never crashes on junk input") {
  std::mt19937_64 rng(2024);
  const std::string alphabet = "abcxyz01 ()<>{}$;:,-+*!@^_\n\"\\'.[]&|=~%?/#";
  for (int i = 0; i < 2000; ++i) {
    std::string junk;
    std::size_t len = rng() % 60;
    for (std::size_t j = 0; j < len; ++j) junk.push_back(alphabet[rng() % alphabet.size()]);
    auto r = parse_program(junk);  // must return diagnostics, never crash
    if (!r.ok) CHECK(!r.diagnostics.empty());
  }
}
