#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "sled/core_ast.hpp"
#include "sled/src_ast.hpp"

namespace sled::core {

struct Frame {
  enum class Kind { Do, Handle, Dlet, Tls };
  Kind kind = Kind::Tls;
  std::string var;         // Do binder
  TermPtr body;            // Do continuation
  CoreHandlerPtr handler;  // Handle
  FormalParam fp;          // Dlet
};

using FramePtr = std::shared_ptr<const Frame>;

FramePtr frame_do(std::string var, TermPtr body);
FramePtr frame_handle(CoreHandlerPtr h);
FramePtr frame_dlet(FormalParam fp);
FramePtr frame_tls();

// Details reported with a failed check.
struct ScopeDiag {
  std::vector<FormalParam> offending;  // freevars(n) \ projfvs(E) (\ M for check_M)
  std::size_t frame_depth = 0;
  std::optional<std::size_t> mark;  // I at the failing check; nullopt = top
  bool was_check_m = false;
};

struct Outcome {
  enum class Kind { Value, ScopeError, Unhandled, FuelExhausted };
  Kind kind = Kind::FuelExhausted;
  NfPtr value;                        // Value
  std::set<std::uint64_t> final_used; // Value
  ScopeDiag diag;                     // ScopeError
  std::string op;                     // Unhandled
  std::size_t steps = 0;
};

// The 5-tuple <t; E; U; M; I>. I is the stack mark: nullopt means "top".
struct Configuration {
  TermPtr term;
  std::vector<FramePtr> stack;  // bottom first, innermost frame last
  std::set<std::uint64_t> used;
  std::set<std::uint64_t> muted;
  std::optional<std::size_t> mark;
  std::optional<ScopeDiag> pending_diag;  // stashed by a failing check
};

Configuration initial_config(TermPtr t);

// Variables declared safe by dlet frames.
std::set<FormalParam> projfvs(const std::vector<FramePtr> &stack);

// Union of handler domains on the stack; other frames are transparent.
std::set<std::string> handled(const std::vector<FramePtr> &stack);

// Smallest natural not in the used set.
std::uint64_t next_id(const std::set<std::uint64_t> &used);

struct StepResult {
  bool done = false;
  Configuration next;   // when !done
  Outcome outcome;      // when done
  const char *rule = "";
};

// Applies the single applicable reduction rule; a stuck non-terminal state
// throws (progress violation, a defect).
StepResult step(const Configuration &c);

struct TraceRecord {
  std::string rule;
  std::size_t stack_len = 0;
  std::size_t used_count = 0;
  std::vector<std::uint64_t> muted;  // sorted
  std::optional<std::size_t> mark;
};

std::string trace_line(const TraceRecord &r);

struct RunResult {
  Outcome outcome;
  std::vector<TraceRecord> trace;  // filled only when tracing
};

constexpr std::uint64_t kDefaultFuel = 1'000'000;

RunResult run(TermPtr t, std::uint64_t fuel = kDefaultFuel, bool trace = false);

// Like run, but invokes the inspector on every configuration (including the
// initial one) before stepping.
Outcome run_with_inspector(TermPtr t, std::uint64_t fuel,
                           const std::function<void(const Configuration &)> &inspect);

// Rebuilds the plugged term E[t].
TermPtr plug(const std::vector<FramePtr> &stack, TermPtr t);

// ---------------------------------------------------------------------------
// Core type checking (syntax-directed, minimal rows with unions at joins).

struct CoreSigTable {
  // Machine-level (compile-time) operations: elaborated level -1 types.
  std::map<std::string, std::pair<CoreTypePtr, CoreTypePtr>> machine_ops;
  // AST-level (run-time) operations: erased pretypes.
  std::map<std::string, std::pair<PreTypePtr, PreTypePtr>> ast_ops;
};

struct CoreTypeError {
  std::string message;
  std::string path;
};

struct CoreTypeResult {
  bool ok = false;
  CompType type;
  std::vector<CoreTypeError> errors;
};

using CoreContext = std::vector<std::pair<std::string, CoreTypePtr>>;

CoreTypeResult typecheck_core(const CoreSigTable &sigs, const CoreContext &ctx, const TermPtr &t);

struct CoreNfTypeResult {
  bool ok = false;
  CoreTypePtr type;
  std::vector<CoreTypeError> errors;
};

CoreNfTypeResult typecheck_core_nf(const CoreSigTable &sigs, const CoreContext &ctx, const NfPtr &n);

// Types the whole configuration E[t] in the empty context.
CoreTypeResult typecheck_config(const CoreSigTable &sigs, const Configuration &c);

}  // namespace sled::core
