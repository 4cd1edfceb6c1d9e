#pragma once

#include <string>

#include "sled/core_ast.hpp"
#include "sled/src_ast.hpp"

namespace sled {

// Deterministic, re-parseable rendering of source programs and terms.
std::string print_type(const src::VTypePtr &t);
std::string print_value(const src::ValuePtr &v);
std::string print_expr(const src::ExprPtr &e);
std::string print_source(const src::Program &p);

// Constructor-application rendering of core terms: Ret(Nat(0)), Lam(α0, ...).
// Formal-parameter pretypes are suppressed unless verbose is set.
std::string print_nf(const core::NfPtr &n, bool verbose = false);
std::string print_core(const core::TermPtr &t, bool verbose = false);

// Machine-readable tree records: {"tag": ..., "children": [...]} plus leaf
// payload fields. Stable across versions.
std::string structured_expr(const src::ExprPtr &e);
std::string structured_program(const src::Program &p);
std::string structured_core(const core::TermPtr &t);

}  // namespace sled
