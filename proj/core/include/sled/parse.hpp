#pragma once

#include <string>
#include <variant>
#include <vector>

#include "sled/diagnostics.hpp"
#include "sled/src_ast.hpp"

namespace sled::src {

enum class Mode { Compile, Quote, Splice };

struct ParseResult {
  bool ok = false;
  Program program;
  std::vector<Diagnostic> diagnostics;
};

struct ParseExprResult {
  bool ok = false;
  ExprPtr expr;
  std::vector<Diagnostic> diagnostics;
};

// Parses a whole program: effect declarations followed by one expression in
// compile mode. Grammar errors, staging-position errors (quote outside a
// splice, splice inside a splice body) and undeclared operation names are
// reported as diagnostics.
ParseResult parse_program(const std::string &text);

// Parses a single expression in the given mode against the given signatures.
ParseExprResult parse_expr(const std::string &text, Mode mode,
                           const std::vector<EffectSig> &sigs);

}  // namespace sled::src
