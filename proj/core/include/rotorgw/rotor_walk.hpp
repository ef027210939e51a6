#pragma once

#include "rotorgw/gw_tree.hpp"
#include "rotorgw/rotor_config.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rotorgw {

inline constexpr std::uint64_t kDefaultStepCap = 10'000'000'000ULL;

enum class WalkResult { kReturned, kReachedBoundary };

struct WalkOutcome {
  WalkResult kind = WalkResult::kReturned;
  std::uint64_t steps = 0;
  unsigned max_depth = 0;
};

struct EscapeStats {
  std::uint64_t n = 0;
  std::uint64_t escapes = 0;
  std::vector<std::uint8_t> outcomes;  // e_k
  int H = 0;
  std::uint64_t steps = 0;
  bool complete = true;  // false if a budget stopped the run early
  std::string abort_reason;

  double ratio() const noexcept { return n ? static_cast<double>(escapes) / static_cast<double>(n) : 0.0; }
};

// One rotor move from pos: increment the rotor mod (d+1), then follow it.
// Lazily expands pos and draws its initial rotor if needed.
NodeId step(TreeArena& arena, NodeId pos, const RotorMatrix& q);

// Walk from the root until it steps onto the sink or onto depth H.
// The rotor configuration left behind stays in the arena.
WalkOutcome run_walk(TreeArena& arena, const RotorMatrix& q, int H, std::uint64_t step_cap = kDefaultStepCap);

// n chained walks. Budget exhaustion (nodes or steps) does not throw: the
// stats come back with complete = false and the walks done so far.
EscapeStats escape_count(TreeArena& arena, const RotorMatrix& q, std::uint64_t n, int H,
                         std::uint64_t step_cap = kDefaultStepCap);

struct AdaptivePolicy {
  int initial_H = 8;
  int max_H = 1024;
  double rel_tol = 1e-3;
};

struct AdaptiveEscape {
  EscapeStats stats;  // run at the final H
  std::vector<std::pair<int, std::uint64_t>> history;  // (H, E_n) per attempt
  bool converged = false;
};

// Doubles H from initial_H until |E(2H) - E(H)| < rel_tol * E(H); the final
// H is the larger one of the last pair. Dynamics are reset between attempts,
// so every H sees the same initial configuration.
AdaptiveEscape escape_count_adaptive(TreeArena& arena, const RotorMatrix& q, std::uint64_t n,
                                     const AdaptivePolicy& policy = {}, std::uint64_t step_cap = kDefaultStepCap);

void write_escape_csv_header(std::ostream& out);
void write_escape_csv_row(std::ostream& out, std::uint64_t seed, const EscapeStats& stats);

// Run-length encoding of an outcome vector: "0:12 1:3 0:1".
std::string encode_outcomes(std::span<const std::uint8_t> outcomes);
std::vector<std::uint8_t> decode_outcomes(std::string_view text);

// ---- legal sequences ----

// Picks the next vertex to fire among the occupied ones (insertion order).
using Scheduler = std::function<NodeId(std::span<const NodeId> occupied)>;

Scheduler fifo_scheduler();
Scheduler lifo_scheduler();
Scheduler random_scheduler(std::uint64_t seed);

struct Placement {
  NodeId node;
  std::uint64_t count;
};

struct LegalResult {
  std::vector<std::pair<NodeId, std::uint64_t>> absorbed;  // per S vertex, sorted by id, zeros omitted
  std::uint64_t at_sink = 0;
  std::uint64_t moves = 0;
  std::vector<std::int8_t> rotors;  // final rotor per node id, -1 if unset

  std::uint64_t total_absorbed() const noexcept;
};

// Fires particles until every one sits in S or at s. S must be nonempty,
// must not contain s, and must cut the root off from infinity.
LegalResult run_legal_sequence(TreeArena& arena, std::span<const NodeId> S, std::span<const Placement> placement,
                               const Scheduler& scheduler, const RotorMatrix& q,
                               std::uint64_t move_cap = kDefaultStepCap);

}  // namespace rotorgw
