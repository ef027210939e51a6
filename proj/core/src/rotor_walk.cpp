#include "rotorgw/rotor_walk.hpp"

#include "rotorgw/error.hpp"

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace rotorgw {

NodeId step(TreeArena& arena, NodeId pos, const RotorMatrix& q) {
  if (pos == kSink) throw UsageError("cannot step from the sink: it is absorbing");
  if (!arena.contains(pos)) throw UsageError("step from a node that is not in the arena");
  Node& n = prepare_node(arena, pos, q);
  int r = n.rotor + 1;
  if (r > n.child_count) r = 0;
  n.rotor = static_cast<std::int8_t>(r);
  return r == 0 ? n.parent : n.first_child + static_cast<NodeId>(r - 1);
}

WalkOutcome run_walk(TreeArena& arena, const RotorMatrix& q, int H, std::uint64_t step_cap) {
  if (H < 1) throw ValidationError("run_walk needs H >= 1");
  WalkOutcome out;
  NodeId pos = TreeArena::root();
  int depth = 0;
  while (true) {
    if (out.steps >= step_cap) {
      throw BudgetExceeded("walk exceeded the step cap of " + std::to_string(step_cap));
    }
    Node& n = prepare_node(arena, pos, q);
    int r = n.rotor + 1;
    if (r > n.child_count) r = 0;
    n.rotor = static_cast<std::int8_t>(r);
    ++out.steps;
    if (r == 0) {
      pos = n.parent;
      if (pos == kSink) {
        out.kind = WalkResult::kReturned;
        return out;
      }
      --depth;
    } else {
      pos = n.first_child + static_cast<NodeId>(r - 1);
      if (++depth > static_cast<int>(out.max_depth)) out.max_depth = static_cast<unsigned>(depth);
      if (depth == H) {
        out.kind = WalkResult::kReachedBoundary;
        return out;
      }
    }
  }
}

EscapeStats escape_count(TreeArena& arena, const RotorMatrix& q, std::uint64_t n, int H, std::uint64_t step_cap) {
  if (n == 0) throw ValidationError("escape_count needs n >= 1");
  if (H < 1) throw ValidationError("escape_count needs H >= 1");
  EscapeStats stats;
  stats.H = H;
  stats.outcomes.reserve(n);
  try {
    for (std::uint64_t k = 0; k < n; ++k) {
      const WalkOutcome w = run_walk(arena, q, H, step_cap);
      const bool escaped = w.kind == WalkResult::kReachedBoundary;
      stats.outcomes.push_back(escaped ? 1 : 0);
      stats.escapes += escaped;
      stats.steps += w.steps;
      ++stats.n;
    }
  } catch (const BudgetExceeded& e) {
    stats.complete = false;
    stats.abort_reason = e.what();
  }
  return stats;
}

AdaptiveEscape escape_count_adaptive(TreeArena& arena, const RotorMatrix& q, std::uint64_t n,
                                     const AdaptivePolicy& policy, std::uint64_t step_cap) {
  if (policy.initial_H < 1 || policy.max_H < policy.initial_H) throw ValidationError("bad adaptive depth policy");
  AdaptiveEscape result;
  auto run = [&](int H) {
    arena.reset_dynamics();
    EscapeStats s = escape_count(arena, q, n, H, step_cap);
    result.history.emplace_back(H, s.escapes);
    return s;
  };

  EscapeStats prev = run(policy.initial_H);
  if (!prev.complete) {
    result.stats = std::move(prev);
    return result;
  }
  while (true) {
    const int next_H = prev.H * 2;
    if (next_H > policy.max_H) {
      result.stats = std::move(prev);
      return result;
    }
    EscapeStats cur = run(next_H);
    if (!cur.complete) {
      result.stats = std::move(cur);
      return result;
    }
    const double diff = std::abs(static_cast<double>(cur.escapes) - static_cast<double>(prev.escapes));
    const bool settled = (cur.escapes == 0 && prev.escapes == 0) ||
                         diff < policy.rel_tol * static_cast<double>(prev.escapes);
    if (settled) {
      result.converged = true;
      result.stats = std::move(cur);
      return result;
    }
    prev = std::move(cur);
  }
}

void write_escape_csv_header(std::ostream& out) { out << "seed,n,H,E_n,ratio\n"; }

void write_escape_csv_row(std::ostream& out, std::uint64_t seed, const EscapeStats& stats) {
  std::ostringstream ratio;
  ratio << std::setprecision(12) << stats.ratio();
  out << seed << ',' << stats.n << ',' << stats.H << ',' << stats.escapes << ',' << ratio.str() << '\n';
}

std::string encode_outcomes(std::span<const std::uint8_t> outcomes) {
  std::string out;
  std::size_t i = 0;
  while (i < outcomes.size()) {
    std::size_t j = i;
    while (j < outcomes.size() && outcomes[j] == outcomes[i]) ++j;
    if (!out.empty()) out += ' ';
    out += std::to_string(outcomes[i] ? 1 : 0);
    out += ':';
    out += std::to_string(j - i);
    i = j;
  }
  return out;
}

std::vector<std::uint8_t> decode_outcomes(std::string_view text) {
  std::vector<std::uint8_t> out;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) {
    const auto colon = token.find(':');
    if (colon != 1 || (token[0] != '0' && token[0] != '1') || colon + 1 >= token.size()) {
      throw ValidationError("bad run-length token '" + token + "'");
    }
    char* end = nullptr;
    const unsigned long long len = std::strtoull(token.c_str() + 2, &end, 10);
    if (*end != '\0' || len == 0) throw ValidationError("bad run length in '" + token + "'");
    out.insert(out.end(), len, static_cast<std::uint8_t>(token[0] - '0'));
  }
  return out;
}

}  // namespace rotorgw
