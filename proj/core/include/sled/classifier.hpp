#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "sled/diagnostics.hpp"
#include "sled/elaborate.hpp"
#include "sled/src_ast.hpp"

namespace sled::src {

// A set of declared classifiers and order facts, used by entails() and to
// extend the checking context (weakening experiments).
struct ClassifierContext {
  std::vector<std::string> classifiers;                          // declared names
  std::vector<std::pair<std::string, std::string>> order;       // (outer, inner)
  // extra variables: level-0 entries carry a declared classifier
  std::vector<std::tuple<std::string, VTypePtr, std::string>> level0_vars;
  std::vector<std::pair<std::string, VTypePtr>> levelm1_vars;
};

// Reflexive-transitive closure query over the declared facts. Undeclared
// classifiers are a defect and throw.
bool entails(const ClassifierContext &ctx, const std::string &outer, const std::string &inner);

struct ClassifierResult {
  bool ok = false;
  std::vector<Diagnostic> diagnostics;
  // binder AST node -> assigned classifier name (feeds mkvar tags)
  ClassifierTags tags;
  // classifiers introduced at binders, in checking order (instrumentation)
  std::vector<std::string> introduced;
};

// Static scope-extrusion prevention. Expects the annotated output of
// typecheck_program. Accepts iff the constraint system induced by the
// classifier typing rules is satisfiable; the algorithm infers the tightest
// classifier for every quote and handler scope and tests the order relation
// at every use site.
ClassifierResult check_classifiers(const Program &annotated);

// As above, under an extended ambient context; used to exercise weakening.
ClassifierResult check_classifiers_with(const Program &annotated, const ClassifierContext &extra);

}  // namespace sled::src
