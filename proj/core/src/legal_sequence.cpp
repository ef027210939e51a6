#include "rotorgw/error.hpp"
#include "rotorgw/rotor_walk.hpp"

#include <algorithm>
#include <memory>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace rotorgw {

Scheduler fifo_scheduler() {
  return [](std::span<const NodeId> occupied) { return occupied.front(); };
}

Scheduler lifo_scheduler() {
  return [](std::span<const NodeId> occupied) { return occupied.back(); };
}

Scheduler random_scheduler(std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng](std::span<const NodeId> occupied) {
    std::uniform_int_distribution<std::size_t> pick(0, occupied.size() - 1);
    return occupied[pick(*rng)];
  };
}

std::uint64_t LegalResult::total_absorbed() const noexcept {
  std::uint64_t total = 0;
  for (const auto& [id, c] : absorbed) total += c;
  return total;
}

LegalResult run_legal_sequence(TreeArena& arena, std::span<const NodeId> S, std::span<const Placement> placement,
                               const Scheduler& scheduler, const RotorMatrix& q, std::uint64_t move_cap) {
  if (S.empty()) throw ValidationError("sink set S is empty");
  std::unordered_set<NodeId> in_S;
  unsigned max_depth = 0;
  for (NodeId z : S) {
    if (z == kSink) throw ValidationError("S must not contain the sink s");
    if (!arena.contains(z)) throw ValidationError("S contains a node that is not in the arena");
    in_S.insert(z);
    max_depth = std::max<unsigned>(max_depth, arena.node(z).depth);
  }

  std::unordered_map<NodeId, std::uint64_t> absorbed;
  std::unordered_map<NodeId, std::uint64_t> count;
  std::vector<NodeId> occupied;
  LegalResult result;

  auto deposit = [&](NodeId y, std::uint64_t c) {
    if (c == 0) return;
    if (y == kSink) {
      result.at_sink += c;
    } else if (in_S.count(y)) {
      absorbed[y] += c;
    } else {
      auto& slot = count[y];
      if (slot == 0) occupied.push_back(y);
      slot += c;
    }
  };

  for (const Placement& p : placement) {
    if (p.node != kSink && !arena.contains(p.node)) throw ValidationError("placement on a node that is not in the arena");
    deposit(p.node, p.count);
  }

  while (!occupied.empty()) {
    if (result.moves >= move_cap) throw BudgetExceeded("legal sequence exceeded the move cap");
    const NodeId x = scheduler(std::span<const NodeId>(occupied));
    if (x == kSink || in_S.count(x)) throw UsageError("scheduler chose a sink vertex");
    const auto it = count.find(x);
    if (it == count.end() || it->second == 0) {
      throw UsageError("scheduler chose vertex " + std::to_string(x) + " which holds no particle");
    }
    if (arena.node(x).depth >= max_depth) {
      throw ValidationError("S does not separate the root from infinity: a particle reached depth " +
                            std::to_string(arena.node(x).depth) + " outside S");
    }
    if (--it->second == 0) {
      count.erase(it);
      occupied.erase(std::find(occupied.begin(), occupied.end(), x));
    }
    deposit(step(arena, x, q), 1);
    ++result.moves;
  }

  result.absorbed.assign(absorbed.begin(), absorbed.end());
  std::erase_if(result.absorbed, [](const auto& e) { return e.second == 0; });
  std::sort(result.absorbed.begin(), result.absorbed.end());
  result.rotors.resize(arena.size());
  for (std::size_t i = 0; i < arena.size(); ++i) result.rotors[i] = arena.node(static_cast<NodeId>(i)).rotor;
  return result;
}

}  // namespace rotorgw
