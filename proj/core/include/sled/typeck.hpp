#pragma once

#include <string>
#include <vector>

#include "sled/core_ast.hpp"
#include "sled/diagnostics.hpp"
#include "sled/parse.hpp"
#include "sled/src_ast.hpp"

namespace sled::src {

// Ordered typing context. Lookup walks from the most recent entry; the
// nearest binding decides, and a level/mode mismatch is an error rather than
// a fall-through.
struct TypingContext {
  std::vector<std::pair<std::string, VTypePtr>> entries;

  void push(std::string name, VTypePtr ty) { entries.emplace_back(std::move(name), std::move(ty)); }
};

struct CheckedProgram {
  bool ok = false;
  Program program;  // every binder annotation filled and verified
  VTypePtr type;    // inferred top-level value type
  std::vector<Diagnostic> diagnostics;
};

// Checks |- body : T0 ! {};{} in compile mode, resolving every op and
// filling every binder annotation.
CheckedProgram typecheck_program(const Program &p);

struct InferResult {
  bool ok = false;
  VTypePtr value;   // value part of the inferred type
  EffectRow delta;  // compile-time row
  EffectRow xi;     // run-time row (compile/quote modes only)
  ExprPtr annotated;
  std::vector<Diagnostic> diagnostics;
};

InferResult infer_expr(const std::vector<EffectSig> &sigs, const TypingContext &ctx, Mode mode,
                       const ExprPtr &e);

struct InferValueResult {
  bool ok = false;
  VTypePtr value;
  EffectRow delta;
  ValuePtr annotated;
  std::vector<Diagnostic> diagnostics;
};

InferValueResult infer_value(const std::vector<EffectSig> &sigs, const TypingContext &ctx,
                             Mode mode, const ValuePtr &v);

// Removes the level annotations of a level-0 type, producing a run-time
// pretype. Calling it on a level -1 type is a defect and throws.
core::PreTypePtr erase(const VTypePtr &t0);
core::PreTypePtr erase_comp(const VTypePtr &t0, const EffectRow &xi);

}  // namespace sled::src
