#include "rotorgw/frontier.hpp"

#include "rotorgw/error.hpp"
#include "rotorgw/rotor_walk.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace rotorgw {

std::vector<NodeId> FrontierState::members() const {
  std::vector<NodeId> out;
  out.reserve(frontier_size);
  for (std::size_t i = 0; i < member.size(); ++i) {
    if (member[i]) out.push_back(static_cast<NodeId>(i));
  }
  return out;
}

void frontier_step(TreeArena& arena, const RotorMatrix& q, FrontierState& state) {
  // Pending departures: vertices holding a particle that must move on.
  std::vector<NodeId> stack;
  auto arrive = [&](NodeId y) {
    if (y == kSink) {
      ++state.sink_count;
      return;
    }
    Node& n = arena.mutable_node(y);
    if (!n.visited) {
      n.visited = true;
      if (state.member.size() <= y) state.member.resize(std::max<std::size_t>(arena.size(), y + 1), 0);
      state.member[y] = 1;
      ++state.frontier_size;
      state.realized_height = std::max<unsigned>(state.realized_height, n.depth);
      return;
    }
    if (state.is_member(y)) {
      state.member[y] = 0;
      --state.frontier_size;
      stack.push_back(y);
      stack.push_back(y);
      return;
    }
    stack.push_back(y);
  };

  ++state.n;
  arrive(TreeArena::root());
  while (!stack.empty()) {
    const NodeId x = stack.back();
    stack.pop_back();
    ++state.moves;
    arrive(step(arena, x, q));
  }
}

FrontierState build_frontier(TreeArena& arena, const RotorMatrix& q, std::uint64_t n,
                             const std::function<void(const FrontierState&)>& on_step) {
  if (n == 0) throw ValidationError("build_frontier needs n >= 1");
  arena.reset_dynamics();
  FrontierState state;
  for (std::uint64_t k = 0; k < n; ++k) {
    frontier_step(arena, q, state);
    if (on_step) on_step(state);
  }
  return state;
}

SinkCompletion complete_sink(TreeArena& arena, const FrontierState& state) {
  SinkCompletion out;
  out.level = state.realized_height;
  std::vector<NodeId> queue{TreeArena::root()};
  for (std::size_t i = 0; i < queue.size(); ++i) {
    const NodeId x = queue[i];
    if (state.is_member(x)) {
      out.sink.push_back(x);
      continue;
    }
    const unsigned depth = arena.node(x).depth;
    if (depth >= out.level) {
      out.holes.push_back(x);
      out.sink.push_back(x);
      continue;
    }
    out.interior.push_back(x);
    const unsigned d = arena.ensure_expanded(x);
    const NodeId first = arena.node(x).first_child;
    for (unsigned k = 0; k < d; ++k) queue.push_back(first + k);
  }
  return out;
}

double path_boundary_ratio(const TreeArena& arena, std::span<const NodeId> path) {
  if (path.empty()) throw ValidationError("path is empty");
  if (path.front() != TreeArena::root()) throw ValidationError("path must start at the root");
  double degree_sum = 0.0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!arena.contains(path[i])) throw ValidationError("path vertex is not in the arena");
    const Node& n = arena.node(path[i]);
    if (i > 0 && n.parent != path[i - 1]) throw ValidationError("path is not a connected root path");
    if (!n.expanded()) throw ValidationError("path vertex has unsampled children");
    degree_sum += n.child_count;
  }
  const double len = static_cast<double>(path.size());
  return (1.0 + degree_sum - len) / len;
}

std::vector<NodeId> root_path(const TreeArena& arena, NodeId x) {
  std::vector<NodeId> path;
  for (NodeId y = x; y != kSink; y = arena.node(y).parent) path.push_back(y);
  std::reverse(path.begin(), path.end());
  return path;
}

namespace {

// Child of an explicit interior vertex, as seen by the elimination.
struct Edge {
  NodeId child;
  double phi;          // P[hit S below child before returning]; 1 for S-vertices
  std::size_t vertex;  // position in the elimination order, 0 if not interior
};

}  // namespace

// Solves on the visited part of T^S only. An unvisited vertex above level M
// holds no member below it, so its subtree is the full cut at M and enters
// through its gamma value alone.
ProportionAudit audit_proportion(TreeArena& arena, const FrontierState& state) {
  const unsigned M = state.realized_height;
  ProportionAudit a;
  a.n = state.n;
  a.level = M;
  a.ratio = static_cast<double>(state.sink_count) / static_cast<double>(state.n);
  const KeyedTree keyed = arena.keyed();

  if (state.is_member(TreeArena::root())) {
    a.h_root = 0.0;
    a.K = a.K_flux = 2.0;
    a.K_closed = k_closed_form(HittingSolution{}, M);
  } else {
    std::vector<NodeId> order{TreeArena::root()};
    std::vector<std::size_t> first_edge{0};
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const NodeId x = order[i];
      const unsigned d = arena.ensure_expanded(x);
      const NodeId first = arena.node(x).first_child;
      for (unsigned k = 0; k < d; ++k) {
        const NodeId c = first + k;
        const Node& n = arena.node(c);
        if (state.is_member(c)) {
          edges.push_back({c, 1.0, 0});
        } else if (n.visited) {
          edges.push_back({c, 0.0, order.size()});
          order.push_back(c);
        } else if (n.depth >= M) {
          edges.push_back({c, 1.0, 0});
          ++a.holes;
        } else {
          const GammaBounds g = subtree_gamma(keyed, n.key, static_cast<int>(M - n.depth));
          edges.push_back({c, g.upper, 0});
          a.holes += g.boundary;
        }
      }
      first_edge.push_back(edges.size());
    }

    // beta[i] = h(x) / h(parent) for x = order[i]
    std::vector<double> beta(order.size());
    for (std::size_t i = order.size(); i-- > 0;) {
      double acc = 0.0;
      for (std::size_t e = first_edge[i]; e < first_edge[i + 1]; ++e) {
        acc += edges[e].vertex ? beta[edges[e].vertex] : 1.0 - edges[e].phi;
      }
      const double d = static_cast<double>(first_edge[i + 1] - first_edge[i]);
      beta[i] = 1.0 / (d + 1.0 - acc);
    }
    std::vector<double> h(order.size());
    std::vector<double> parent_h(order.size(), 1.0);
    for (std::size_t i = 0; i < order.size(); ++i) {
      h[i] = beta[i] * parent_h[i];
      for (std::size_t e = first_edge[i]; e < first_edge[i + 1]; ++e) {
        if (edges[e].vertex) parent_h[edges[e].vertex] = h[i];
      }
    }

    a.h_root = h[0];
    a.K = 1.0 + std::abs(1.0 - h[0]);
    a.K_flux = 1.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const double d = static_cast<double>(first_edge[i + 1] - first_edge[i]);
      double sum = parent_h[i];
      for (std::size_t e = first_edge[i]; e < first_edge[i + 1]; ++e) {
        const Edge& ed = edges[e];
        const double depth = arena.node(ed.child).depth;
        if (ed.vertex) {
          const double hc = h[ed.vertex];
          sum += hc;
          a.K += std::abs(h[i] - hc);
          continue;
        }
        // holes and everything below a compressed child sit at depth M
        const double current = h[i] * ed.phi;
        sum += h[i] - current;
        const double level = state.is_member(ed.child) ? depth : M;
        a.K += current * (level - depth + 1.0);
        a.K_flux += current * (level + 1.0);
      }
      a.residual = std::max(a.residual, std::abs(h[i] * (d + 1.0) - sum));
    }
    HittingSolution root_only;
    root_only.root = a.h_root;
    a.K_closed = k_closed_form(root_only, M);
  }
  a.holds = std::abs(a.h_root - a.ratio) <= a.K / static_cast<double>(state.n) + 1e-12;
  return a;
}

void write_frontier_csv_header(std::ostream& out) { out << "n,frontier_size,sink_count,realized_height"; }

void write_frontier_csv_row(std::ostream& out, const FrontierState& state) {
  out << state.n << ',' << state.frontier_size << ',' << state.sink_count << ',' << state.realized_height;
}

}  // namespace rotorgw
