#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "helpers.hpp"

using namespace sled;
using namespace sled::core;

namespace {

FormalParam fp(std::uint64_t id) { return FormalParam{id, pre_nat(), ""}; }

const std::string kAccum =
    "handle do x <- perform accum(20) in do y <- perform accum(10) in return x - y "
    "with { return(q) -> return q "
    "     ; accum(v, k) -> do m <- v * 2 in do z <- continue k m in return 1 + z }";

std::vector<src::EffectSig> accum_sigs() {
  return {{"accum", src::Level::CompileTime, src::nat_type(src::Level::CompileTime),
           src::nat_type(src::Level::CompileTime), {}}};
}

TermPtr elaborated_accum() {
  auto sigs = accum_sigs();
  auto parsed = src::parse_expr(kAccum, src::Mode::Splice, sigs);
  REQUIRE(parsed.ok);
  auto inferred = src::infer_expr(sigs, {}, src::Mode::Splice, parsed.expr);
  REQUIRE_MESSAGE(inferred.ok, format_diagnostics(inferred.diagnostics));
  CHECK(inferred.value->kind == src::VType::Kind::Nat);
  CHECK(inferred.delta.empty());
  return elaborate_expr(inferred.annotated, src::Mode::Splice, CheckKind::Naive);
}

}  // namespace

TEST_CASE("next: smallest missing natural") {
  CHECK(next_id({}) == 0);
  CHECK(next_id({0, 1, 2}) == 3);
  CHECK(next_id({0, 2}) == 1);
  CHECK(next_id({1, 2}) == 0);
}

TEST_CASE("projfvs collects dlet frames only") {
  std::vector<FramePtr> stack;
  CHECK(projfvs(stack).empty());
  stack.push_back(frame_dlet(fp(4)));
  stack.push_back(frame_do("x", tm_return(nf_nat(0))));
  auto vars = projfvs(stack);
  CHECK(vars.size() == 1);
  CHECK(vars.count(fp(4)) == 1);
  stack.push_back(frame_dlet(fp(9)));
  CHECK(projfvs(stack).size() == 2);
}

TEST_CASE("handled unions handler domains; other frames transparent") {
  std::vector<FramePtr> stack;
  CHECK(handled(stack).empty());
  auto h = std::make_shared<CoreHandler>();
  h->clauses.push_back({true, "", "x", "", tm_return(nf_metavar("x"))});
  h->clauses.push_back({false, "op", "y", "k", tm_return(nf_metavar("y"))});
  stack.push_back(frame_handle(h));
  CHECK(handled(stack) == std::set<std::string>{"op"});
  stack.push_back(frame_tls());
  stack.push_back(frame_dlet(fp(0)));
  CHECK(handled(stack) == std::set<std::string>{"op"});
}

TEST_CASE("terminal value at empty stack") {
  auto res = run(tm_return(nf_nat(3)));
  CHECK(res.outcome.kind == Outcome::Kind::Value);
  CHECK(res.outcome.value->nat == 3);
  CHECK(res.outcome.steps == 0);
}

TEST_CASE("the doubling accumulator evaluates to 22") {
  auto res = run(elaborated_accum());
  REQUIRE(res.outcome.kind == Outcome::Kind::Value);
  REQUIRE(res.outcome.value->kind == NormalForm::Kind::NatLit);
  CHECK(res.outcome.value->nat == 22);
}

TEST_CASE("the minimal staged program runs to Ret(Nat(0))") {
  auto checked = test::load_listing("staged_identity.sl");
  auto t = elaborate(checked.program, CheckKind::Naive);
  auto res = run(t);
  REQUIRE(res.outcome.kind == Outcome::Kind::Value);
  CHECK(print_nf(res.outcome.value) == "Ret(Nat(0))");
}

TEST_CASE("unhandled operations are reported with the op name") {
  auto t = tm_op("boom", nf_nat(0));
  auto res = run(t);
  REQUIRE(res.outcome.kind == Outcome::Kind::Unhandled);
  CHECK(res.outcome.op == "boom");
}

TEST_CASE("fuel exhaustion is reported") {
  // an infinite loop via a handler that restarts itself is not expressible
  // with the fixed signatures; exhaust fuel instead with a long computation
  auto checked = test::load_listing("accumulator.sl");
  auto t = elaborate(checked.program, CheckKind::Naive);
  auto res = run(t, 3);
  CHECK(res.outcome.kind == Outcome::Kind::FuelExhausted);
  CHECK(res.outcome.steps == 3);
}

TEST_CASE("mkvar is deterministic and reuses freed-up ids never") {
  Configuration c = initial_config(tm_mkvar(pre_nat()));
  c.used = {0, 2};
  auto s = step(c);
  REQUIRE(!s.done);
  CHECK(s.next.term->n1->fparam.id == 1);
  CHECK(s.next.used == std::set<std::uint64_t>({0, 1, 2}));
  CHECK(std::string(s.rule) == "Ast-Gen");
}

TEST_CASE("check succeeds iff free vars are declared") {
  auto n = nf_ast_var(nf_fparam(fp(0)));
  Configuration c = initial_config(tm_check(n));
  auto s = step(c);
  REQUIRE(!s.done);
  CHECK(std::string(s.rule) == "Sec-Chf");
  CHECK(s.next.term->kind == CoreTerm::Kind::Err);

  c.stack.push_back(frame_dlet(fp(0)));
  auto s2 = step(c);
  CHECK(std::string(s2.rule) == "Sec-Chs");
  CHECK(s2.next.term->kind == CoreTerm::Kind::Return);
}

TEST_CASE("check_M ignores muted variables") {
  auto n = nf_ast_var(nf_fparam(fp(0)));
  Configuration c = initial_config(tm_check_m(n));
  c.muted = {0};
  auto s = step(c);
  CHECK(std::string(s.rule) == "Sec-Cms");

  c.muted.clear();
  auto s2 = step(c);
  CHECK(std::string(s2.rule) == "Sec-Cmf");
}

TEST_CASE("Sec-Tls unconditionally unmutes; Sec-Dlt only at or below the mark") {
  Configuration c = initial_config(tm_tls(tm_return(nf_nat(0))));
  c.muted = {3};
  c.mark = 7;
  auto s = step(c);
  CHECK(std::string(s.rule) == "Sec-Tls");
  CHECK(s.next.muted.empty());
  CHECK(!s.next.mark.has_value());

  Configuration d = initial_config(tm_dlet(nf_fparam(fp(1)), tm_return(nf_nat(0))));
  d.muted = {3};
  d.mark = 2;  // len(E)=0 <= 2: unmute
  auto sd = step(d);
  CHECK(std::string(sd.rule) == "Sec-Dlt");
  CHECK(sd.next.muted.empty());
  CHECK(!sd.next.mark.has_value());

  Configuration e = initial_config(tm_dlet(nf_fparam(fp(1)), tm_return(nf_nat(0))));
  e.stack.push_back(frame_tls());
  e.stack.push_back(frame_tls());
  e.stack.push_back(frame_tls());
  e.muted = {3};
  e.mark = 2;  // len(E)=3 > 2: keep
  auto se = step(e);
  CHECK(std::string(se.rule) == "Sec-Dlt");
  CHECK(se.next.muted == std::set<std::uint64_t>{3});
  CHECK(se.next.mark == std::optional<std::size_t>(2));
}

TEST_CASE("machine determinism: identical traces on repeated runs") {
  for (const char *name : {"discarded.sl", "safe_resume.sl", "eager_false_positive.sl",
                           "c4c_false_positive.sl", "classifier_safe.sl", "staged_identity.sl",
                           "accumulator.sl"}) {
    auto checked = test::load_listing(name);
    for (CheckKind k : {CheckKind::Naive, CheckKind::Lazy, CheckKind::Eager, CheckKind::C4C}) {
      auto t = elaborate(checked.program, k);
      auto r1 = run(t, kDefaultFuel, true);
      auto r2 = run(t, kDefaultFuel, true);
      REQUIRE(r1.trace.size() == r2.trace.size());
      for (std::size_t i = 0; i < r1.trace.size(); ++i)
        CHECK(trace_line(r1.trace[i]) == trace_line(r2.trace[i]));
    }
  }
}

TEST_CASE("trace records have exactly five tab-separated fields") {
  auto checked = test::load_listing("staged_identity.sl");
  auto res = run(elaborate(checked.program, CheckKind::C4C), kDefaultFuel, true);
  REQUIRE(!res.trace.empty());
  for (const auto &rec : res.trace) {
    auto line = trace_line(rec);
    CHECK(std::count(line.begin(), line.end(), '\t') == 4);
  }
}

TEST_CASE("eff-op mark never increases; sec-tls resets muting") {
  auto checked = test::load_listing("eager_false_positive.sl");
  auto t = elaborate(checked.program, CheckKind::C4C);
  std::optional<std::size_t> prev_mark;
  bool saw_op = false;
  Configuration c = initial_config(t);
  for (int i = 0; i < 100000; ++i) {
    auto s = step(c);
    if (s.done) break;
    if (std::string(s.rule) == "Eff-Op") {
      saw_op = true;
      if (prev_mark.has_value()) {
        REQUIRE(s.next.mark.has_value());
        CHECK(*s.next.mark <= *prev_mark);
      }
    }
    if (std::string(s.rule) == "Sec-Tls") {
      CHECK(s.next.muted.empty());
      CHECK(!s.next.mark.has_value());
    }
    prev_mark = s.next.mark;
    c = s.next;
  }
  CHECK(saw_op);
}

TEST_CASE("check and check_M agree whenever the muted set is empty") {
  // co-simulate: in C4C runs, whenever a check_M fires with M = {}, the plain
  // check predicate must give the same verdict.
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    auto p = gen_program(seed, 12);
    auto t = elaborate(p, CheckKind::C4C);
    Configuration c = initial_config(t);
    for (int i = 0; i < 20000; ++i) {
      auto s = step(c);
      if (s.done) break;
      std::string rule = s.rule;
      if ((rule == "Sec-Cms" || rule == "Sec-Cmf") && c.muted.empty()) {
        auto fvs = freevars(c.term->n1);
        auto declared = projfvs(c.stack);
        bool plain_ok = true;
        for (const auto &v : fvs)
          if (!declared.count(v)) plain_ok = false;
        CHECK(plain_ok == (rule == "Sec-Cms"));
      }
      c = s.next;
    }
  }
}

TEST_CASE("typecheck_core: a free Var is well-typed though ill-scoped") {
  CoreSigTable sigs;
  auto r = typecheck_core_nf(sigs, {}, nf_ast_var(nf_fparam(fp(0))));
  REQUIRE(r.ok);
  CHECK(coretype_to_string(r.type) == "AST(Nat)");
}

TEST_CASE("typecheck_core: err takes any type") {
  CoreSigTable sigs;
  auto r = typecheck_core(sigs, {}, tm_do("x", tm_err(), tm_return(nf_nat(0))));
  REQUIRE(r.ok);
  CHECK(coretype_equal(r.type.value, ct_nat()));
  auto r2 = typecheck_core(sigs, {}, tm_err());
  REQUIRE(r2.ok);
  CHECK(r2.type.value->kind == CoreType::Kind::Any);
}

TEST_CASE("typecheck_core: Lam AST builds a function pretype") {
  CoreSigTable sigs;
  auto body = nf_ast_ret(nf_ast_var(nf_fparam(fp(0))));
  auto r = typecheck_core_nf(sigs, {}, nf_ast_lam(nf_fparam(fp(0)), body));
  REQUIRE(r.ok);
  CHECK(coretype_to_string(r.type) == "AST((Nat ->{} Nat))");
}

TEST_CASE("typecheck_core rejects ill-typed ASTs") {
  CoreSigTable sigs;
  // App of a non-function AST
  auto bad = nf_ast_app(nf_ast_nat(1), nf_ast_nat(2));
  CHECK(!typecheck_core_nf(sigs, {}, bad).ok);
  // check of a non-AST
  CHECK(!typecheck_core(sigs, {}, tm_check(nf_nat(3))).ok);
}

TEST_CASE("stuck states are loud defects") {
  auto t = tm_app(nf_nat(3), nf_nat(4));
  Configuration c = initial_config(t);
  CHECK_THROWS_AS((void)step(c), std::logic_error);
}

TEST_CASE("eager run reports the offending variable when the fragment is used") {
  // the handler returns the received fragment, which is then wired into a
  // larger AST in a scope where its binder was never declared safe
  auto checked = test::check_text(
      "effect^ lift : Code(Nat!{})@s -> Code(Nat!{})@s\n"
      "$( do z <- (handle << fun (x : Nat) -> $( perform lift(<< x >>) ) >>"
      "            with { return(u) -> << 0 >> ; lift(y, k) -> return y })"
      "   in << $( return z ) + 1 >> )");
  REQUIRE(checked.ok);
  auto res = run(elaborate(checked.program, CheckKind::Eager));
  REQUIRE(res.outcome.kind == Outcome::Kind::ScopeError);
  REQUIRE(!res.outcome.diag.offending.empty());
  CHECK(res.outcome.diag.offending[0].id == 0);  // the first generated parameter is x's
  CHECK(!res.outcome.diag.was_check_m);

  // this listing is genuinely unsafe: all three dynamic checks reject it
  auto oc = compare_checks(checked.program);
  CHECK(oc.lazy.kind == Outcome::Kind::ScopeError);
  CHECK(oc.c4c.kind == Outcome::Kind::ScopeError);
  CHECK(oc.naive.lazy_extrusion_final);
}

namespace {

void collect_params(const TermPtr &t, std::set<std::uint64_t> &out);

void collect_params_nf(const NfPtr &n, std::set<std::uint64_t> &out) {
  if (!n) return;
  if (n->kind == NormalForm::Kind::FParamV) out.insert(n->fparam.id);
  collect_params(n->body, out);
  collect_params_nf(n->n1, out);
  collect_params_nf(n->n2, out);
  collect_params_nf(n->n3, out);
  collect_params_nf(n->n4, out);
}

void collect_params(const TermPtr &t, std::set<std::uint64_t> &out) {
  if (!t) return;
  collect_params_nf(t->n1, out);
  collect_params_nf(t->n2, out);
  collect_params(t->t1, out);
  collect_params(t->t2, out);
  if (t->handler)
    for (const auto &c : t->handler->clauses) collect_params(c.body, out);
}

}  // namespace

TEST_CASE("machine invariant: every formal parameter in the configuration is in U") {
  for (const char *name : {"safe_resume.sl", "eager_false_positive.sl", "c4c_false_positive.sl"}) {
    auto checked = test::load_listing(name);
    auto t = elaborate(checked.program, CheckKind::C4C);
    Configuration c = initial_config(t);
    for (int i = 0; i < 10000; ++i) {
      std::set<std::uint64_t> params;
      collect_params(plug(c.stack, c.term), params);
      for (auto id : params) CHECK(c.used.count(id));
      auto s = step(c);
      if (s.done) break;
      c = s.next;
    }
  }
}

TEST_CASE("rule census of the accumulator run") {
  auto res = run(elaborated_accum(), kDefaultFuel, true);
  REQUIRE(res.outcome.kind == Outcome::Kind::Value);
  std::map<std::string, int> rules;
  for (const auto &rec : res.trace) rules[rec.rule]++;
  CHECK(rules["Eff-Op"] == 2);   // two performs reach the handler
  CHECK(rules["Eff-Cnt"] == 2);  // both are resumed
  CHECK(rules["Hdl"] == 1);      // the return clause fires once
  CHECK(rules["Arith"] == 5);    // two doublings, one subtraction, two increments
  // both continuations are resumed, so every pushed frame is eventually popped
  CHECK(rules["Psh"] == rules["Pop"]);
  CHECK(rules["App"] == 0);
}

TEST_CASE("golden trace: the c4c run of the rebuild-before-resume listing") {
  auto checked = test::load_listing("eager_false_positive.sl");
  auto res = run(elaborate(checked.program, CheckKind::C4C), kDefaultFuel, true);
  REQUIRE(res.outcome.kind == Outcome::Kind::Value);
  std::string got;
  for (const auto &rec : res.trace) got += trace_line(rec) + "\n";
  std::ifstream in(std::string(SLED_LISTINGS_DIR) + "/../tests/golden_trace_eager_false_positive_c4c.txt");
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(got == ss.str());
}

TEST_CASE("runs are independent across threads") {
  std::vector<std::string> serial;
  std::vector<const char *> names = {"discarded.sl", "safe_resume.sl", "eager_false_positive.sl",
                                     "c4c_false_positive.sl", "accumulator.sl"};
  std::vector<TermPtr> terms;
  for (const char *name : names) {
    auto checked = test::load_listing(name);
    terms.push_back(elaborate(checked.program, CheckKind::C4C));
  }
  for (const auto &t : terms) {
    auto r = run(t, kDefaultFuel, true);
    std::string s;
    for (const auto &rec : r.trace) s += trace_line(rec) + "\n";
    serial.push_back(s);
  }
  std::vector<std::string> parallel(terms.size());
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    threads.emplace_back([&, i] {
      auto r = run(terms[i], kDefaultFuel, true);
      std::string s;
      for (const auto &rec : r.trace) s += trace_line(rec) + "\n";
      parallel[i] = s;
    });
  }
  for (auto &t : threads) t.join();
  for (std::size_t i = 0; i < terms.size(); ++i) CHECK(serial[i] == parallel[i]);
}

TEST_CASE("multi-shot continuations: each resumption regenerates fresh parameters") {
  auto checked = test::check_text(
      "effect^ lift : Code(Nat!{})@s -> Code(Nat!{})@s\n"
      "$( handle << $( perform lift(<< 1 >>) ) + 2 >>\n"
      "   with { return(u) -> return u\n"
      "        ; lift(y, k) -> do a <- continue k y in do b <- continue k y in return b } )");
  REQUIRE(checked.ok);
  for (CheckKind k : {CheckKind::Naive, CheckKind::Lazy, CheckKind::Eager, CheckKind::C4C}) {
    auto res = run(elaborate(checked.program, k));
    REQUIRE(res.outcome.kind == Outcome::Kind::Value);
    // the replayed continuation ran mkvar twice: two distinct parameters
    CHECK(res.outcome.final_used == std::set<std::uint64_t>({0, 1}));
    CHECK(print_nf(res.outcome.value) ==
          "Do(Ret(Nat(1)), α1, Plus(Var(α1), Nat(2)))");
  }
}

TEST_CASE("unmatched inner handlers forward to the outer one and are reinstalled") {
  auto checked = test::check_text(
      "effect^ lift1 : Code(Nat!{})@s1 -> Code(Nat!{})@s1\n"
      "effect^ lift2 : Code(Nat!{})@s2 -> Code(Nat!{})@s2\n"
      "$( handle (handle << $( perform lift1(<< 5 >>) ) >>\n"
      "           with { return(u) -> return u ; lift2(y, k) -> continue k y })\n"
      "   with { return(u) -> return u ; lift1(y, k) -> continue k y } )");
  REQUIRE(checked.ok);
  auto res = run(elaborate(checked.program, CheckKind::C4C), kDefaultFuel, true);
  REQUIRE(res.outcome.kind == Outcome::Kind::Value);
  CHECK(print_nf(res.outcome.value) == "Ret(Nat(5))");
  int eff_ops = 0;
  for (const auto &rec : res.trace)
    if (rec.rule == "Eff-Op") eff_ops++;
  CHECK(eff_ops == 1);
}
