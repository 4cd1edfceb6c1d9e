#pragma once

#include <string>
#include <vector>

namespace sled {

struct SourceLoc {
  int line = 0;
  int column = 0;
};

enum class Severity { Error, Warning, Note };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string message;
  SourceLoc loc;
  std::vector<std::string> offending_vars;
};

std::string format_diagnostic(const Diagnostic &d);
std::string format_diagnostics(const std::vector<Diagnostic> &ds);

}  // namespace sled
