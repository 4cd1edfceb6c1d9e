#pragma once

#include <map>
#include <string>
#include <vector>

#include "sled/core_ast.hpp"
#include "sled/parse.hpp"
#include "sled/src_ast.hpp"
#include "sled/typeck.hpp"

namespace sled {

// Which scope-extrusion discipline the elaboration inserts.
enum class CheckKind { Naive, Lazy, Eager, C4C };

const char *check_kind_name(CheckKind k);

// Per-binder classifier tags (optional, produced by the classifier checker),
// keyed by AST node address.
using ClassifierTags = std::map<const void *, std::string>;

// Elaborates a fully annotated, well-typed program. Naive inserts no checks;
// Lazy adds a check after each top-level splice and dlets at compile-mode
// binders; Eager additionally checks every quote-mode AST constructor (except
// Nat literals) and dlets quote-mode binders; C4C is Eager with check_M.
core::TermPtr elaborate(const src::Program &annotated, CheckKind kind,
                        const ClassifierTags *tags = nullptr);

// Entry points at a specific mode, for tests and the harness.
core::TermPtr elaborate_expr(const src::ExprPtr &annotated, src::Mode mode, CheckKind kind);
core::TermPtr elaborate_value(const src::ValuePtr &annotated, src::Mode mode, CheckKind kind);

// Naive elaboration plus the compile-mode dlets of the lazy check and no
// checks at all. Runs exactly like the naive elaboration but keeps
// projfvs(E) meaningful, which the extrusion predicates need.
core::TermPtr elaborate_instrumented_naive(const src::Program &annotated);

// Type elaboration: level 0 value types become AST(erase(.)), level -1 types
// map structurally with Code becoming AST.
core::CoreTypePtr elaborate_vtype(const src::VTypePtr &t);

// Elaboration of a compile/quote-mode expression type T0 ! delta; xi.
core::CompType elaborate_expr_type_cq(const src::VTypePtr &t0, const src::EffectRow &delta,
                                      const src::EffectRow &xi);

// Context entry elaboration: level 0 entries become FParam(erase(.)).
std::vector<std::pair<std::string, core::CoreTypePtr>> elaborate_context(
    const src::TypingContext &ctx);

core::CoreTypePtr elaborate_context_entry(const src::VTypePtr &t);

}  // namespace sled

#include "sled/machine.hpp"

namespace sled {

// Derives the core signature tables: compile-time signatures become
// machine-level operation types, run-time signatures become AST-level
// pretypes.
core::CoreSigTable build_core_sigs(const std::vector<src::EffectSig> &sigs);

}  // namespace sled
