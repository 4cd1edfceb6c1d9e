#include "doctest.h"
#include "helpers.hpp"

using namespace sled;
using namespace sled::core;

namespace {

FormalParam fp(std::uint64_t id) { return FormalParam{id, pre_nat(), ""}; }

bool has_id(const std::set<FormalParam> &s, std::uint64_t id) {
  return s.count(FormalParam{id, nullptr, ""}) > 0;
}

}  // namespace

TEST_CASE("freevars: single free occurrence") {
  auto n = nf_ast_var(nf_fparam(fp(0)));
  auto fvs = freevars(n);
  CHECK(fvs.size() == 1);
  CHECK(has_id(fvs, 0));
}

TEST_CASE("freevars: Lam closes its body") {
  // Lam(a, Plus(Var(a), Nat(0)))
  auto n = nf_ast_lam(nf_fparam(fp(0)), nf_ast_plus(nf_ast_var(nf_fparam(fp(0))), nf_ast_nat(0)));
  CHECK(freevars(n).empty());
}

TEST_CASE("freevars: Do binds only its body") {
  // Do(Ret(Var(a)), b, Plus(Var(b), Var(a))) -> {Var(a)}
  auto n = nf_ast_do(nf_ast_ret(nf_ast_var(nf_fparam(fp(0)))), nf_fparam(fp(1)),
                     nf_ast_plus(nf_ast_var(nf_fparam(fp(1))), nf_ast_var(nf_fparam(fp(0)))));
  auto fvs = freevars(n);
  CHECK(fvs.size() == 1);
  CHECK(has_id(fvs, 0));
}

TEST_CASE("freevars: Hop binds both clause binders; shadowing works") {
  auto body = nf_ast_plus(nf_ast_var(nf_fparam(fp(2))), nf_ast_var(nf_fparam(fp(3))));
  auto n = nf_ast_hop("op", nf_ast_hret(nf_fparam(fp(9)), nf_ast_ret(nf_ast_var(nf_fparam(fp(4))))),
                      nf_fparam(fp(2)), nf_fparam(fp(3)), body);
  auto fvs = freevars(n);
  CHECK(fvs.size() == 1);
  CHECK(has_id(fvs, 4));

  // nested shadowing: Lam(a, Lam(a, Var(a))) is closed
  auto sh = nf_ast_lam(nf_fparam(fp(0)), nf_ast_ret(nf_ast_lam(
                                             nf_fparam(fp(0)),
                                             nf_ast_ret(nf_ast_var(nf_fparam(fp(0)))))));
  CHECK(freevars(sh).empty());
}

TEST_CASE("freevars looks under meta-level lambdas and terms") {
  auto lam = nf_lam("x", tm_return(nf_ast_var(nf_fparam(fp(7)))));
  auto fvs = freevars(lam);
  CHECK(has_id(fvs, 7));
}

TEST_CASE("handler_dom") {
  auto h0 = std::make_shared<CoreHandler>();
  h0->clauses.push_back({true, "", "x", "", tm_return(nf_metavar("x"))});
  CHECK(handler_dom(h0).empty());

  auto h1 = std::make_shared<CoreHandler>(*h0);
  h1->clauses.push_back({false, "op", "y", "k", tm_return(nf_metavar("y"))});
  CHECK(handler_dom(h1) == std::set<std::string>{"op"});

  auto h2 = std::make_shared<CoreHandler>(*h1);
  h2->clauses.push_back({false, "op2", "y", "k", tm_return(nf_metavar("y"))});
  CHECK(handler_dom(h2) == std::set<std::string>({"op", "op2"}));
}

TEST_CASE("subst: basics and shadowing") {
  // subst(return x, 3, x) = return 3
  auto t = tm_return(nf_metavar("x"));
  CHECK(term_equal(subst(t, nf_nat(3), "x"), tm_return(nf_nat(3))));

  // distinct binder is untouched
  auto lam = tm_return(nf_lam("y", tm_return(nf_metavar("x"))));
  auto lam_sub = subst(lam, nf_nat(1), "x");
  CHECK(term_equal(lam_sub, tm_return(nf_lam("y", tm_return(nf_nat(1))))));

  // do x <- return x in return x: only the bound occurrence in e1 changes
  auto dd = tm_do("x", tm_return(nf_metavar("x")), tm_return(nf_metavar("x")));
  auto dd_sub = subst(dd, nf_nat(5), "x");
  CHECK(term_equal(dd_sub, tm_do("x", tm_return(nf_nat(5)), tm_return(nf_metavar("x")))));
}

TEST_CASE("subst avoids capture by renaming") {
  // subst(return (fun y -> return x), y, x) must not capture y
  auto t = tm_return(nf_lam("y", tm_return(nf_metavar("x"))));
  auto r = subst(t, nf_metavar("y"), "x");
  REQUIRE(r->n1->kind == NormalForm::Kind::Lam);
  CHECK(r->n1->var != "y");
  CHECK(r->n1->body->n1->var == "y");
}

TEST_CASE("property: freevars is monotone under non-binding constructors") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    test::NfGen g(seed);
    auto a = g.gen(3);
    auto b = g.gen(3);
    auto fa = freevars(a);
    auto fb = freevars(b);
    std::set<FormalParam> both = fa;
    both.insert(fb.begin(), fb.end());
    CHECK(freevars(nf_ast_app(a, b)) == both);
    CHECK(freevars(nf_ast_plus(a, b)) == both);
    CHECK(freevars(nf_ast_ret(a)) == fa);
  }
}

TEST_CASE("property: binder subtraction for Lam and Do") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    test::NfGen g(seed + 1000);
    auto body = g.gen(3);
    core::FormalParam alpha{1, pre_nat(), ""};
    auto fvs = freevars(body);
    fvs.erase(alpha);
    CHECK(freevars(nf_ast_lam(nf_fparam(alpha), body)) == fvs);

    auto comp = g.gen(2);
    auto want = freevars(comp);
    want.insert(fvs.begin(), fvs.end());
    CHECK(freevars(nf_ast_do(comp, nf_fparam(alpha), body)) == want);
  }
}

TEST_CASE("property: identity substitution") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    test::NfGen g(seed + 5000);
    auto body = tm_return(g.gen(3));
    auto t = tm_do("x", tm_return(nf_metavar("x")), body);
    CHECK(term_equal(subst(t, nf_metavar("x"), "x"), t));
  }
}

TEST_CASE("admin_normalize reduces do-of-return") {
  auto t = tm_do("a", tm_return(nf_ast_nat(0)), tm_return(nf_ast_ret(nf_metavar("a"))));
  CHECK(term_equal(admin_normalize(t), tm_return(nf_ast_ret(nf_ast_nat(0)))));
}

TEST_CASE("alpha_canonicalize makes names position-determined") {
  auto t1 = tm_do("a", tm_mkvar(pre_nat()), tm_return(nf_metavar("a")));
  auto t2 = tm_do("zz", tm_mkvar(pre_nat()), tm_return(nf_metavar("zz")));
  CHECK(term_equal(alpha_canonicalize(t1), alpha_canonicalize(t2)));
}
