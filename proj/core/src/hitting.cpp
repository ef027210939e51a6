#include "rotorgw/error.hpp"
#include "rotorgw/srw_gamma.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace rotorgw {

HittingSolution solve_hitting(TreeArena& arena, std::span<const NodeId> S) {
  if (S.empty()) throw ValidationError("sink set S is empty");
  HittingSolution sol;
  unsigned max_depth = 0;
  for (NodeId z : S) {
    if (z == kSink) throw ValidationError("S must not contain the sink s");
    if (!arena.contains(z)) throw ValidationError("S contains a node that is not in the arena");
    max_depth = std::max<unsigned>(max_depth, arena.node(z).depth);
  }
  sol.sinks.assign(S.begin(), S.end());
  std::sort(sol.sinks.begin(), sol.sinks.end());
  sol.sinks.erase(std::unique(sol.sinks.begin(), sol.sinks.end()), sol.sinks.end());

  // Grow T^S breadth-first. Anything at depth >= max depth of S that is not
  // in S has an infinite subtree that S never meets.
  std::vector<std::uint8_t> mask(arena.size(), 0);
  for (NodeId z : sol.sinks) mask[z] = 1;
  if (!mask[TreeArena::root()]) {
    sol.interior.push_back(TreeArena::root());
    for (std::size_t i = 0; i < sol.interior.size(); ++i) {
      const NodeId x = sol.interior[i];
      if (arena.node(x).depth >= max_depth) {
        throw ValidationError("S does not separate the root from infinity (vertex " + std::to_string(x) +
                              " at depth " + std::to_string(arena.node(x).depth) + " escapes it)");
      }
      const unsigned d = arena.ensure_expanded(x);
      const NodeId first = arena.node(x).first_child;
      for (unsigned k = 0; k < d; ++k) {
        const NodeId c = first + k;
        if (c >= mask.size() || !mask[c]) sol.interior.push_back(c);
      }
    }
  }
  mask.resize(arena.size(), 0);

  // Leaf-to-root: h(x) = beta_x h(parent), beta_x = 1 / (d_x + 1 - sum of interior children's beta).
  std::vector<double>& h = sol.h;
  h.assign(arena.size(), 0.0);
  for (auto it = sol.interior.rbegin(); it != sol.interior.rend(); ++it) {
    const Node& n = arena.node(*it);
    double acc = 0.0;
    for (unsigned k = 0; k < n.child_count; ++k) {
      const NodeId c = n.first_child + k;
      if (!mask[c]) acc += h[c];
    }
    h[*it] = 1.0 / (static_cast<double>(n.child_count) + 1.0 - acc);
  }
  // Root-to-leaf back-substitution; BFS order puts parents first.
  for (NodeId x : sol.interior) {
    const NodeId p = arena.node(x).parent;
    h[x] *= p == kSink ? 1.0 : h[p];
  }
  sol.root = sol.interior.empty() ? 0.0 : h[TreeArena::root()];

  for (NodeId x : sol.interior) {
    const Node& n = arena.node(x);
    double sum = n.parent == kSink ? 1.0 : h[n.parent];
    for (unsigned k = 0; k < n.child_count; ++k) sum += h[n.first_child + k];
    const double r = std::abs(h[x] * (n.child_count + 1.0) - sum);
    sol.max_residual = std::max(sol.max_residual, r);
  }
  sol.in_sink = std::move(mask);
  return sol;
}

HittingSolution solve_hitting_level(TreeArena& arena, int H) {
  const TruncatedView view = truncate_view(arena, H);
  return solve_hitting(arena, view.boundary);
}

double k_constant(const TreeArena& arena, const HittingSolution& sol) {
  double k = 1.0 + std::abs(1.0 - sol.at(TreeArena::root()));
  for (NodeId x : sol.interior) {
    const Node& n = arena.node(x);
    for (unsigned c = 0; c < n.child_count; ++c) k += std::abs(sol.h[x] - sol.h[n.first_child + c]);
  }
  return k;
}

double k_closed_form(const HittingSolution& sol, unsigned M) {
  return 1.0 + (static_cast<double>(M) + 1.0) * (1.0 - sol.root);
}

double k_flux_form(const TreeArena& arena, const HittingSolution& sol) {
  if (sol.interior.empty()) return 1.0 + 1.0;  // S = {o}: one unit of current over the edge (s, o)
  double k = 1.0;
  for (NodeId z : sol.sinks) {
    const Node& n = arena.node(z);
    if (n.parent == kSink) continue;
    k += sol.h[n.parent] * (n.depth + 1.0);
  }
  return k;
}

void write_hitting_csv(std::ostream& out, const HittingSolution& sol) {
  out << "id,h\n" << std::setprecision(17);
  out << "-1,1\n";
  for (NodeId x : sol.interior) out << x << ',' << sol.h[x] << '\n';
  for (NodeId z : sol.sinks) out << z << ",0\n";
}

namespace {

double gamma_step(double sum) { return sum / (1.0 + sum); }

// gamma of the d-ary tree cut at L levels below the root, boundary b.
double regular_gamma(unsigned d, int L, double b) {
  for (int h = 0; h < L; ++h) b = gamma_step(d * b);
  return b;
}

unsigned min_degree(const OffspringDistribution& xi) {
  unsigned k = 1;
  while (xi.p(k) == 0.0) ++k;
  return k;
}

struct Frame {
  std::uint64_t key;
  unsigned d;
  unsigned next;  // next child to visit, 1-based
  double upper;
  double lower;
};

// Both recursions in one depth-first pass, boundary values at depth D.
GammaBounds stream_bounds(const KeyedTree& tree, std::uint64_t start, int D, double b_upper, double b_lower) {
  GammaBounds b;
  b.H = D;
  if (D == 0) {
    b.upper = b_upper;
    b.lower = b_lower;
    b.nodes = 1;
    b.boundary = 1;
    return b;
  }
  if (const auto d = tree.distribution().degenerate_value()) {
    b.upper = regular_gamma(*d, D, b_upper);
    b.lower = regular_gamma(*d, D, b_lower);
    b.nodes = static_cast<std::size_t>(D) + 1;
    double count = std::pow(static_cast<double>(*d), D);
    b.boundary = count < 1.8e19 ? static_cast<std::size_t>(count) : ~std::size_t{0};
    return b;
  }
  std::vector<Frame> stack;
  stack.reserve(static_cast<std::size_t>(D) + 1);
  stack.push_back({start, tree.offspring(start), 1, 0.0, 0.0});
  b.nodes = 1;
  while (true) {
    Frame& top = stack.back();
    if (top.next <= top.d) {
      const std::uint64_t ck = tree.child(top.key, top.next++);
      ++b.nodes;
      if (static_cast<int>(stack.size()) == D) {
        ++b.boundary;
        top.upper += b_upper;
        top.lower += b_lower;
      } else {
        stack.push_back({ck, tree.offspring(ck), 1, 0.0, 0.0});
      }
      continue;
    }
    const double up = gamma_step(top.upper);
    const double lo = gamma_step(top.lower);
    stack.pop_back();
    if (stack.empty()) {
      b.upper = up;
      b.lower = lo;
      return b;
    }
    stack.back().upper += up;
    stack.back().lower += lo;
  }
}

}  // namespace

double gamma_recursion(const KeyedTree& tree, int H, double boundary) {
  if (H < 0) throw ValidationError("gamma recursion needs H >= 0");
  return stream_bounds(tree, tree.root(), H, boundary, boundary).upper;
}

GammaBounds subtree_gamma(const KeyedTree& tree, std::uint64_t key, int L) {
  if (L < 0) throw ValidationError("subtree_gamma needs L >= 0");
  GammaBounds b = stream_bounds(tree, key, L, 1.0, 1.0);
  b.lower = b.upper;
  return b;
}

GammaBounds gamma_bounds(const KeyedTree& tree, int H) {
  if (H < 0) throw ValidationError("gamma_bounds needs H >= 0");
  const unsigned dmin = min_degree(tree.distribution());
  return stream_bounds(tree, tree.root(), H, 1.0, (dmin - 1.0) / dmin);
}

GammaBounds truncated_gamma_bounds(const KeyedTree& tree, int target, int D) {
  if (D < 0 || target < D) throw ValidationError("truncated_gamma_bounds needs 0 <= D <= target");
  const unsigned dmin = min_degree(tree.distribution());
  if (D == target) {
    GammaBounds b = stream_bounds(tree, tree.root(), D, 1.0, 1.0);
    b.lower = b.upper;
    return b;
  }
  return stream_bounds(tree, tree.root(), D, 1.0, regular_gamma(dmin, target - D, 1.0));
}

GammaEstimate gamma_bracket(const KeyedTree& tree, int target, double gap, int min_D) {
  if (min_D < 0 || target < min_D) throw ValidationError("gamma_bracket needs 0 <= min_D <= target");
  GammaEstimate est;
  for (int D = min_D; D <= target; ++D) {
    est.bounds = truncated_gamma_bounds(tree, target, D);
    if (est.bounds.upper - est.bounds.lower <= gap) {
      est.resolved = true;
      return est;
    }
  }
  return est;
}

}  // namespace rotorgw
