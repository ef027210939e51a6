#pragma once

#include "rotorgw/keyed_rng.hpp"
#include "rotorgw/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rotorgw {

using NodeId = std::uint32_t;

// The sink s: absorbing parent of the root. It lives outside the node store.
inline constexpr NodeId kSink = std::numeric_limits<NodeId>::max();

// Rotors are stored in a signed byte, so offspring counts are capped here.
inline constexpr unsigned kMaxOffspring = 126;

inline constexpr std::size_t kDefaultMaxNodes = std::size_t{1} << 26;

// Offspring law xi = (p_1, ..., p_kmax); p_0 = 0 is implicit.
class OffspringDistribution {
 public:
  // probs[k-1] = p_k. Throws ValidationError unless the entries are
  // nonnegative and sum to 1 within 1e-12.
  explicit OffspringDistribution(std::vector<double> probs);

  // Exact variant; the rational weights are kept for exact classification.
  static OffspringDistribution from_exact(std::vector<Rational> probs);

  // "p2=1", "p1=1/2,p2=1/2", "p2=0.5,p4=0.5". Whitespace is ignored.
  static OffspringDistribution parse(std::string_view spec);

  static OffspringDistribution deterministic(unsigned d);

  unsigned k_max() const noexcept { return static_cast<unsigned>(probs_.size()); }
  double p(unsigned k) const noexcept { return k >= 1 && k <= k_max() ? probs_[k - 1] : 0.0; }
  std::span<const double> probs() const noexcept { return probs_; }
  const std::optional<std::vector<Rational>>& exact() const noexcept { return exact_; }

  double mean() const noexcept { return mean_; }

  // Offspring count for a uniform draw u in [0, 1), by inverse-CDF lookup.
  unsigned sample(double u) const noexcept;

  // Some p_d equals 1: every vertex has d children.
  std::optional<unsigned> degenerate_value() const noexcept;

  // Canonical "pK=v,..." form, used in output headers.
  std::string describe() const;

 private:
  OffspringDistribution(std::vector<double> probs, std::optional<std::vector<Rational>> exact);

  std::vector<double> probs_;
  std::vector<double> cumulative_;
  std::optional<std::vector<Rational>> exact_;
  double mean_ = 0.0;
};

// The random tree behind an arena: offspring counts and rotor draws are pure
// functions of (seed, vertex path), so two arenas with the same seed describe
// the same infinite tree regardless of expansion order.
class KeyedTree {
 public:
  // Keeps a reference to dist, which must outlive the view.
  KeyedTree(const OffspringDistribution& dist, std::uint64_t seed) : dist_(&dist), seed_(seed) {}
  KeyedTree(OffspringDistribution&&, std::uint64_t) = delete;

  std::uint64_t root() const noexcept { return root_key(seed_); }
  std::uint64_t child(std::uint64_t key, unsigned k) const noexcept { return child_key(key, k); }
  unsigned offspring(std::uint64_t key) const noexcept {
    return dist_->sample(keyed_uniform(key, Stream::kOffspring));
  }
  double rotor_uniform(std::uint64_t key) const noexcept { return keyed_uniform(key, Stream::kRotor); }

  const OffspringDistribution& distribution() const noexcept { return *dist_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  const OffspringDistribution* dist_;
  std::uint64_t seed_;
};

struct Node {
  static constexpr std::uint8_t kUnsampled = 0xFF;
  static constexpr std::int8_t kUnset = -1;

  NodeId parent = kSink;
  NodeId first_child = 0;  // children are first_child .. first_child + child_count - 1
  std::uint64_t key = 0;
  std::uint16_t depth = 0;
  std::uint8_t child_count = kUnsampled;
  std::int8_t rotor = kUnset;
  bool visited = false;

  bool expanded() const noexcept { return child_count != kUnsampled; }
  bool has_rotor() const noexcept { return rotor != kUnset; }
  unsigned degree() const noexcept { return child_count; }
};

namespace detail {

// Block-allocated append-only store; ids stay valid and growth never
// copies existing blocks.
template <class T, unsigned BlockBits = 16>
class BlockStore {
 public:
  static constexpr std::size_t kBlock = std::size_t{1} << BlockBits;

  BlockStore() = default;
  BlockStore(const BlockStore& other) { *this = other; }
  BlockStore& operator=(const BlockStore& other) {
    if (this == &other) return *this;
    blocks_.clear();
    size_ = 0;
    for (std::size_t b = 0; b < other.blocks_.size(); ++b) {
      blocks_.push_back(std::make_unique<T[]>(kBlock));
      const std::size_t count = std::min(kBlock, other.size_ - b * kBlock);
      std::copy_n(other.blocks_[b].get(), count, blocks_.back().get());
    }
    size_ = other.size_;
    return *this;
  }
  BlockStore(BlockStore&&) noexcept = default;
  BlockStore& operator=(BlockStore&&) noexcept = default;

  std::size_t size() const noexcept { return size_; }

  T& operator[](std::size_t i) noexcept { return blocks_[i >> BlockBits][i & (kBlock - 1)]; }
  const T& operator[](std::size_t i) const noexcept { return blocks_[i >> BlockBits][i & (kBlock - 1)]; }

  std::size_t push_back(const T& value) {
    if (size_ == blocks_.size() * kBlock) blocks_.push_back(std::make_unique<T[]>(kBlock));
    (*this)[size_] = value;
    return size_++;
  }

 private:
  std::vector<std::unique_ptr<T[]>> blocks_;
  std::size_t size_ = 0;
};

}  // namespace detail

// Lazily sampled family tree with the sink attached above the root.
// Single-writer: one experiment owns an arena at a time.
class TreeArena {
 public:
  TreeArena(OffspringDistribution dist, std::uint64_t seed, std::size_t max_nodes = kDefaultMaxNodes);

  TreeArena(const TreeArena& other);
  TreeArena& operator=(const TreeArena& other);
  TreeArena(TreeArena&& other) noexcept;
  TreeArena& operator=(TreeArena&& other) noexcept;

  static constexpr NodeId root() noexcept { return 0; }
  static constexpr NodeId sink() noexcept { return kSink; }

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t max_nodes() const noexcept { return max_nodes_; }
  bool contains(NodeId id) const noexcept { return id < nodes_.size(); }

  const Node& node(NodeId id) const;
  const OffspringDistribution& distribution() const noexcept { return dist_; }
  std::uint64_t seed() const noexcept { return seed_; }
  KeyedTree keyed() const noexcept { return KeyedTree(dist_, seed_); }

  // Draws the child count and creates unsampled child records.
  // Throws UsageError if the node is already expanded.
  unsigned expand(NodeId id);

  unsigned ensure_expanded(NodeId id) {
    const Node& n = nodes_[id];
    return n.expanded() ? n.child_count : expand(id);
  }

  // k-th neighbour in planar order: k = 0 is the parent, 1..d the children.
  NodeId neighbor(NodeId id, unsigned k) const;
  NodeId child(NodeId id, unsigned k) const;

  void set_rotor(NodeId id, unsigned value);
  void mark_visited(NodeId id) { nodes_[id].visited = true; }

  // Hot-path mutable access for the walk engines.
  Node& mutable_node(NodeId id) noexcept { return nodes_[id]; }

  // Forget all rotor and visit state. Structure is kept; keyed rotor draws
  // reproduce the same initial configuration on the next visit.
  void reset_dynamics();

  // `id parent depth child_count rotor` per line; -1 marks the sink parent,
  // unsampled children and unset rotors.
  void write_snapshot(std::ostream& out) const;

 private:
  OffspringDistribution dist_;
  std::uint64_t seed_;
  std::size_t max_nodes_;
  detail::BlockStore<Node> nodes_;
};

struct TruncatedView {
  std::vector<NodeId> interior;  // depth < H
  std::vector<NodeId> boundary;  // depth == H
};

// All vertices of depth <= H, expanding as needed. Throws ValidationError for H < 0.
TruncatedView truncate_view(TreeArena& arena, int depth);

}  // namespace rotorgw
