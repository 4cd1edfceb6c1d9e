#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sled/classifier.hpp"
#include "sled/elaborate.hpp"
#include "sled/machine.hpp"
#include "sled/src_ast.hpp"

namespace sled {

// Flags computed from the run of the (dlet-instrumented) naive elaboration.
struct NaiveFlags {
  bool known = true;  // false when the run exhausted its fuel
  bool eager_extrusion_seen = false;
  std::size_t eager_first_step = 0;
  bool lazy_extrusion_final = false;
};

NaiveFlags analyze_naive(const src::Program &annotated,
                         std::uint64_t fuel = core::kDefaultFuel);

struct CheckOutcomes {
  core::Outcome lazy, eager, c4c;
  bool classifier_accepted = false;
  NaiveFlags naive;
};

// Runs the three dynamic elaborations plus the static classifier check.
CheckOutcomes compare_checks(const src::Program &annotated,
                             std::uint64_t fuel = core::kDefaultFuel);

bool outcome_accepts(const core::Outcome &o);

// Seeded, type-directed generation of a closed well-typed program over a
// fixed pool of two run-time and two compile-time operations. Always
// re-checked; on repeated dead ends falls back to the minimal program.
src::Program gen_program(std::uint64_t seed, int size_bound);

struct RelationViolation {
  std::string relation;  // "a", "b" or "c"
  std::string program;   // printed (shrunk) counterexample
};

struct RelationReport {
  int checked = 0;
  int fuel_exhausted = 0;
  std::vector<RelationViolation> violations;
};

// Checks, per terminating program: (a) the lazy check errs iff the naive run
// exhibits final (lazy) extrusion; (b) eager acceptance implies C4C
// acceptance; (c) naive final extrusion implies C4C rejection.
RelationReport check_relations(const std::vector<src::Program> &annotated_programs,
                               std::uint64_t fuel = 100000);

// Replaces subexpressions by `return 0` (or quoted zero) wherever the result
// still typechecks and still satisfies the predicate; iterates to fixpoint.
src::Program shrink(const src::Program &p,
                    const std::function<bool(const src::Program &)> &still_interesting);

}  // namespace sled
