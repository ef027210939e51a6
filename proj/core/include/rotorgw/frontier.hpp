#pragma once

#include "rotorgw/gw_tree.hpp"
#include "rotorgw/rotor_config.hpp"
#include "rotorgw/srw_gamma.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace rotorgw {

// Each member vertex holds exactly one parked particle.
struct FrontierState {
  std::vector<std::uint8_t> member;  // dense mask by node id
  std::uint64_t frontier_size = 0;
  std::uint64_t n = 0;
  std::uint64_t sink_count = 0;
  unsigned realized_height = 0;  // deepest vertex ever visited
  std::uint64_t moves = 0;

  bool is_member(NodeId x) const noexcept { return x < member.size() && member[x]; }
  std::vector<NodeId> members() const;
};

// Injects one particle at the root and runs it, together with every
// particle released by a split, until all have parked or reached s.
void frontier_step(TreeArena& arena, const RotorMatrix& q, FrontierState& state);

// n injections from a fresh configuration. The callback, if given, sees the
// state after every injection.
FrontierState build_frontier(TreeArena& arena, const RotorMatrix& q, std::uint64_t n,
                             const std::function<void(const FrontierState&)>& on_step = {});

struct SinkCompletion {
  std::vector<NodeId> sink;      // members plus holes
  std::vector<NodeId> holes;     // level-M vertices whose root path avoids all members
  std::vector<NodeId> interior;  // T^S
  unsigned level = 0;            // M, the realized height
};

SinkCompletion complete_sink(TreeArena& arena, const FrontierState& state);

// |boundary| / |path| with |boundary| = 1 + sum of d over the path - |path|.
// The path is a vertex sequence starting at the root.
double path_boundary_ratio(const TreeArena& arena, std::span<const NodeId> path);

// Root-to-x vertex sequence.
std::vector<NodeId> root_path(const TreeArena& arena, NodeId x);

struct ProportionAudit {
  std::uint64_t n = 0;
  double h_root = 0.0;
  double ratio = 0.0;  // n_s / n
  double K = 0.0;
  double K_closed = 0.0;
  double K_flux = 0.0;
  double residual = 0.0;
  unsigned level = 0;
  std::size_t holes = 0;
  bool holds = false;  // |h(o) - n_s/n| <= K/n
};

// Same numbers as solve_hitting on complete_sink, without expanding the
// unvisited subtrees.
ProportionAudit audit_proportion(TreeArena& arena, const FrontierState& state);

// Header and rows come without the line terminator so callers can append columns.
void write_frontier_csv_header(std::ostream& out);
void write_frontier_csv_row(std::ostream& out, const FrontierState& state);

}  // namespace rotorgw
