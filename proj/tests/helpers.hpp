#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sled/classifier.hpp"
#include "sled/elaborate.hpp"
#include "sled/harness.hpp"
#include "sled/machine.hpp"
#include "sled/parse.hpp"
#include "sled/print.hpp"
#include "sled/typeck.hpp"

#ifndef SLED_LISTINGS_DIR
#define SLED_LISTINGS_DIR "listings"
#endif

namespace sled::test {

inline std::string read_file(const std::string &name) {
  std::ifstream in(std::string(SLED_LISTINGS_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline src::CheckedProgram load_listing(const std::string &name) {
  auto parsed = src::parse_program(read_file(name));
  if (!parsed.ok) throw std::runtime_error("parse failed: " + format_diagnostics(parsed.diagnostics));
  auto checked = src::typecheck_program(parsed.program);
  if (!checked.ok)
    throw std::runtime_error("typecheck failed: " + format_diagnostics(checked.diagnostics));
  return checked;
}

inline src::CheckedProgram check_text(const std::string &text) {
  auto parsed = src::parse_program(text);
  if (!parsed.ok) throw std::runtime_error("parse failed: " + format_diagnostics(parsed.diagnostics));
  return src::typecheck_program(parsed.program);
}

// The shared batch of generated programs used by the property suites.
inline const std::vector<src::Program> &generated_batch(std::size_t count = 1100) {
  static std::vector<src::Program> batch = [count] {
    std::vector<src::Program> out;
    out.reserve(count);
    for (std::size_t seed = 0; seed < count; ++seed)
      out.push_back(sled::gen_program(seed, 10 + static_cast<int>(seed % 9)));
    return out;
  }();
  return batch;
}

// Random normal forms over a small alphabet of formal parameters; used for
// kernel property tests.
struct NfGen {
  std::mt19937_64 rng;
  explicit NfGen(std::uint64_t seed) : rng(seed) {}

  int pick(int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }

  core::FormalParam fp(std::uint64_t id) { return core::FormalParam{id, core::pre_nat(), ""}; }

  core::NfPtr gen(int depth) {
    using namespace core;
    if (depth <= 0) {
      switch (pick(3)) {
        case 0: return nf_ast_nat(static_cast<std::uint64_t>(pick(5)));
        case 1: return nf_ast_var(nf_fparam(fp(static_cast<std::uint64_t>(pick(4)))));
        default: return nf_ast_ret(nf_ast_nat(0));
      }
    }
    switch (pick(8)) {
      case 0: return nf_ast_plus(gen(depth - 1), gen(depth - 1));
      case 1: return nf_ast_times(gen(depth - 1), gen(depth - 1));
      case 2: return nf_ast_app(gen(depth - 1), gen(depth - 1));
      case 3: return nf_ast_ret(gen(depth - 1));
      case 4:
        return nf_ast_lam(nf_fparam(fp(static_cast<std::uint64_t>(pick(4)))), gen(depth - 1));
      case 5:
        return nf_ast_do(gen(depth - 1), nf_fparam(fp(static_cast<std::uint64_t>(pick(4)))),
                         gen(depth - 1));
      case 6:
        return nf_ast_hret(nf_fparam(fp(static_cast<std::uint64_t>(pick(4)))), gen(depth - 1));
      default:
        return nf_ast_var(nf_fparam(fp(static_cast<std::uint64_t>(pick(4)))));
    }
  }
};

// Collects (expr, mode) pairs from an annotated program body.
inline void collect_by_mode(const src::ExprPtr &e, src::Mode mode,
                            std::vector<std::pair<src::ExprPtr, src::Mode>> &out) {
  using K = src::Expr::Kind;
  out.emplace_back(e, mode);
  auto walk_value = [&](const src::ValuePtr &v) {
    if (v && v->kind == src::Value::Kind::Lam) collect_by_mode(v->body, mode, out);
  };
  switch (e->kind) {
    case K::App:
    case K::Continue:
    case K::Arith:
      walk_value(e->v1);
      walk_value(e->v2);
      break;
    case K::Return:
    case K::Op:
      walk_value(e->v1);
      break;
    case K::Do:
      collect_by_mode(e->e1, mode, out);
      collect_by_mode(e->e2, mode, out);
      break;
    case K::Handle:
      collect_by_mode(e->inner, mode, out);
      for (const auto &c : e->handler->clauses) collect_by_mode(c.body, mode, out);
      break;
    case K::Quote:
      collect_by_mode(e->inner, src::Mode::Quote, out);
      break;
    case K::Splice:
      collect_by_mode(e->inner, src::Mode::Splice, out);
      break;
  }
}

}  // namespace sled::test
