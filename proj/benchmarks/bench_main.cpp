#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "sled/elaborate.hpp"
#include "sled/harness.hpp"
#include "sled/machine.hpp"
#include "sled/parse.hpp"
#include "sled/typeck.hpp"

#ifndef SLED_LISTINGS_DIR
#define SLED_LISTINGS_DIR "listings"
#endif

namespace {

sled::src::CheckedProgram load(const std::string &name) {
  std::ifstream in(std::string(SLED_LISTINGS_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  auto parsed = sled::src::parse_program(ss.str());
  return sled::src::typecheck_program(parsed.program);
}

void BM_parse_typecheck(benchmark::State &state) {
  std::ifstream in(std::string(SLED_LISTINGS_DIR) + "/eager_false_positive.sl");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  for (auto _ : state) {
    auto parsed = sled::src::parse_program(text);
    auto checked = sled::src::typecheck_program(parsed.program);
    benchmark::DoNotOptimize(checked.ok);
  }
}
BENCHMARK(BM_parse_typecheck);

void BM_elaborate(benchmark::State &state) {
  auto checked = load("c4c_false_positive.sl");
  auto kind = static_cast<sled::CheckKind>(state.range(0));
  for (auto _ : state) {
    auto t = sled::elaborate(checked.program, kind);
    benchmark::DoNotOptimize(t.get());
  }
}
BENCHMARK(BM_elaborate)->DenseRange(0, 3);

void BM_machine_run(benchmark::State &state) {
  auto checked = load("accumulator.sl");
  auto t = sled::elaborate(checked.program, sled::CheckKind::C4C);
  std::uint64_t steps = 0;
  for (auto _ : state) {
    auto res = sled::core::run(t);
    steps += res.outcome.steps;
    benchmark::DoNotOptimize(res.outcome.kind);
  }
  state.counters["steps/s"] = benchmark::Counter(static_cast<double>(steps),
                                                 benchmark::Counter::kIsRate);
}
BENCHMARK(BM_machine_run);

void BM_compare_checks(benchmark::State &state) {
  auto checked = load("eager_false_positive.sl");
  for (auto _ : state) {
    auto oc = sled::compare_checks(checked.program);
    benchmark::DoNotOptimize(oc.classifier_accepted);
  }
}
BENCHMARK(BM_compare_checks);

void BM_gen_program(benchmark::State &state) {
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto p = sled::gen_program(seed++, 14);
    benchmark::DoNotOptimize(p.body.get());
  }
}
BENCHMARK(BM_gen_program);

}  // namespace

BENCHMARK_MAIN();
