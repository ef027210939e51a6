#pragma once

#include "rotorgw/cdf_operator.hpp"
#include "rotorgw/gw_tree.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace rotorgw {

// h(x) = P_x[hit s before S] for simple random walk on T^S.
struct HittingSolution {
  std::vector<double> h;             // dense by node id; 0 outside T^S and on S
  std::vector<NodeId> interior;      // T^S in BFS order from the root
  std::vector<NodeId> sinks;         // S, sorted by id
  std::vector<std::uint8_t> in_sink; // dense mask of S by node id
  double root = 0.0;                 // h(o)
  double max_residual = 0.0;         // worst interior harmonic residual

  double at(NodeId x) const noexcept {
    if (x == kSink) return 1.0;
    return x < h.size() ? h[x] : 0.0;
  }
};

// Two-pass tree elimination. Expands T^S as needed. Throws ValidationError
// if S is empty, contains s, or leaves an infinite root path uncut.
HittingSolution solve_hitting(TreeArena& arena, std::span<const NodeId> S);

// The same with S = S^H.
HittingSolution solve_hitting_level(TreeArena& arena, int H);

// 1 + sum over edges of T^S u S u {s} of |h(x) - h(y)|.
double k_constant(const TreeArena& arena, const HittingSolution& sol);

// 1 + (M + 1)(1 - h(o)).
double k_closed_form(const HittingSolution& sol, unsigned M);

// 1 + sum over z in S of i_z (|z| + 1), with i_z the current entering z.
// Equal to k_constant on every sink set.
double k_flux_form(const TreeArena& arena, const HittingSolution& sol);

void write_hitting_csv(std::ostream& out, const HittingSolution& sol);

struct GammaBounds {
  double lower = 0.0;
  double upper = 1.0;
  int H = 0;
  std::size_t nodes = 0;     // vertices visited by the recursion
  std::size_t boundary = 0;  // vertices at depth H, saturating
};

// The recursion gamma = 1 - 1/(1 + sum of children's gamma), evaluated
// bottom-up from the constant value `boundary` at depth H.
double gamma_recursion(const KeyedTree& tree, int H, double boundary);

// The boundary-1 recursion on the subtree below the vertex with this key,
// cut L levels down: P[walk from the vertex hits depth L before its parent].
GammaBounds subtree_gamma(const KeyedTree& tree, std::uint64_t key, int L);

// Bounds on gamma of the infinite tree. Upper: boundary 1 at depth H.
// Lower: boundary (d_min - 1)/d_min, the gamma of the d_min-ary tree that
// every subtree contains (d_min is the smallest offspring count in the
// support); with boundary 0 the recursion would be identically 0.
// Streams over the keyed tree without storing it; deterministic offspring
// takes an O(H) shortcut.
GammaBounds gamma_bounds(const KeyedTree& tree, int H);
inline GammaBounds gamma_bounds(const TreeArena& arena, int H) { return gamma_bounds(arena.keyed(), H); }

// Bounds on gamma_target = 1 - h(o) for S = S^target, from the subtree down
// to depth D <= target. Each depth-D vertex gets boundary 1 (upper) or the
// gamma of the d_min-ary tree truncated target - D levels below it (lower).
GammaBounds truncated_gamma_bounds(const KeyedTree& tree, int target, int D);

struct GammaEstimate {
  GammaBounds bounds;
  bool resolved = false;  // upper - lower <= gap
};

// Raises D one level at a time from min_D until the bracket on
// gamma_target is narrower than gap, or D = target.
GammaEstimate gamma_bracket(const KeyedTree& tree, int target, double gap, int min_D);

}  // namespace rotorgw
