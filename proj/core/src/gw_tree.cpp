#include "rotorgw/gw_tree.hpp"

#include "rotorgw/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

namespace rotorgw {

namespace {

constexpr double kSumTolerance = 1e-12;

void validate_probs(const std::vector<double>& probs) {
  if (probs.empty()) throw ValidationError("offspring distribution is empty");
  if (probs.size() > kMaxOffspring) {
    throw ValidationError("offspring support exceeds k_max = " + std::to_string(kMaxOffspring));
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("offspring probabilities must be finite and >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "offspring probabilities sum to " << sum << ", expected 1";
    throw ValidationError(msg.str());
  }
}

}  // namespace

OffspringDistribution::OffspringDistribution(std::vector<double> probs)
    : OffspringDistribution(std::move(probs), std::nullopt) {}

OffspringDistribution::OffspringDistribution(std::vector<double> probs,
                                             std::optional<std::vector<Rational>> exact)
    : probs_(std::move(probs)), exact_(std::move(exact)) {
  // Trailing zeros carry no information and would inflate k_max.
  while (probs_.size() > 1 && probs_.back() == 0.0) {
    probs_.pop_back();
    if (exact_) exact_->pop_back();
  }
  validate_probs(probs_);
  cumulative_.resize(probs_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    acc += probs_[i];
    cumulative_[i] = acc;
    mean_ += static_cast<double>(i + 1) * probs_[i];
  }
  cumulative_.back() = 1.0;
}

OffspringDistribution OffspringDistribution::from_exact(std::vector<Rational> probs) {
  Rational sum = 0;
  for (const Rational& p : probs) {
    if (p < 0) throw ValidationError("offspring probabilities must be >= 0");
    sum += p;
  }
  if (sum != 1) {
    throw ValidationError("offspring probabilities sum to " + to_string(sum) + ", expected 1");
  }
  std::vector<double> approx;
  approx.reserve(probs.size());
  for (const Rational& p : probs) approx.push_back(to_double(p));
  return OffspringDistribution(std::move(approx), std::move(probs));
}

OffspringDistribution OffspringDistribution::parse(std::string_view spec) {
  std::map<unsigned, Rational> entries;
  std::string text;
  for (char c : spec) {
    if (!std::isspace(static_cast<unsigned char>(c))) text.push_back(c);
  }
  if (text.empty()) throw ValidationError("empty offspring specification");
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (item.size() < 3 || (item[0] != 'p' && item[0] != 'P') || eq == std::string::npos || eq < 2) {
      throw ValidationError("expected entries of the form pK=value, got '" + item + "'");
    }
    const std::string index_text = item.substr(1, eq - 1);
    if (!std::all_of(index_text.begin(), index_text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw ValidationError("bad offspring index in '" + item + "'");
    }
    if (index_text.size() > 4) throw ValidationError("offspring index too large in '" + item + "'");
    const unsigned k = static_cast<unsigned>(std::stoul(index_text));
    Rational value = parse_rational(item.substr(eq + 1));
    if (k == 0) {
      if (value != 0) throw ValidationError("p0 > 0 is not supported (every vertex needs a child)");
      continue;
    }
    if (k > kMaxOffspring) throw ValidationError("offspring index exceeds k_max = " + std::to_string(kMaxOffspring));
    if (entries.count(k)) throw ValidationError("duplicate entry p" + index_text);
    entries[k] = value;
  }
  if (entries.empty()) throw ValidationError("offspring specification has no positive entries");
  std::vector<Rational> probs(entries.rbegin()->first, Rational(0));
  for (const auto& [k, v] : entries) probs[k - 1] = v;
  return from_exact(std::move(probs));
}

OffspringDistribution OffspringDistribution::deterministic(unsigned d) {
  if (d == 0 || d > kMaxOffspring) throw ValidationError("deterministic offspring must be in 1.." + std::to_string(kMaxOffspring));
  std::vector<Rational> probs(d, Rational(0));
  probs.back() = 1;
  return from_exact(std::move(probs));
}

unsigned OffspringDistribution::sample(double u) const noexcept {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto index = static_cast<unsigned>(std::min<std::ptrdiff_t>(it - cumulative_.begin(),
                                                                    static_cast<std::ptrdiff_t>(probs_.size()) - 1));
  return index + 1;
}

std::optional<unsigned> OffspringDistribution::degenerate_value() const noexcept {
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (exact_ ? (*exact_)[i] == 1 : probs_[i] == 1.0) return static_cast<unsigned>(i + 1);
  }
  return std::nullopt;
}

std::string OffspringDistribution::describe() const {
  std::ostringstream out;
  out.precision(17);
  bool first = true;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (probs_[i] == 0.0) continue;
    if (!first) out << ',';
    first = false;
    out << 'p' << (i + 1) << '=';
    if (exact_) {
      out << to_string((*exact_)[i]);
    } else {
      out << probs_[i];
    }
  }
  return out.str();
}

TreeArena::TreeArena(OffspringDistribution dist, std::uint64_t seed, std::size_t max_nodes)
    : dist_(std::move(dist)), seed_(seed), max_nodes_(std::max<std::size_t>(max_nodes, 1)) {
  Node root;
  root.parent = kSink;
  root.key = root_key(seed_);
  root.depth = 0;
  nodes_.push_back(root);
}

TreeArena::TreeArena(const TreeArena& other) = default;
TreeArena& TreeArena::operator=(const TreeArena& other) = default;
TreeArena::TreeArena(TreeArena&& other) noexcept = default;
TreeArena& TreeArena::operator=(TreeArena&& other) noexcept = default;

const Node& TreeArena::node(NodeId id) const {
  if (id >= nodes_.size()) throw UsageError("node id " + std::to_string(id) + " is not in the arena");
  return nodes_[id];
}

unsigned TreeArena::expand(NodeId id) {
  if (id >= nodes_.size()) throw UsageError("node id " + std::to_string(id) + " is not in the arena");
  Node& n = nodes_[id];
  if (n.expanded()) {
    throw UsageError("node " + std::to_string(id) + " is already expanded; child counts are drawn once");
  }
  if (n.depth == std::numeric_limits<std::uint16_t>::max()) throw BudgetExceeded("tree depth limit reached");
  const unsigned d = dist_.sample(keyed_uniform(n.key, Stream::kOffspring));
  if (nodes_.size() + d > max_nodes_) {
    throw BudgetExceeded("arena node budget of " + std::to_string(max_nodes_) + " nodes exhausted");
  }
  const auto first = static_cast<NodeId>(nodes_.size());
  const std::uint64_t key = n.key;
  const auto depth = static_cast<std::uint16_t>(n.depth + 1);
  n.first_child = first;
  n.child_count = static_cast<std::uint8_t>(d);
  for (unsigned k = 1; k <= d; ++k) {
    Node c;
    c.parent = id;
    c.key = child_key(key, k);
    c.depth = depth;
    nodes_.push_back(c);
  }
  return d;
}

NodeId TreeArena::neighbor(NodeId id, unsigned k) const {
  const Node& n = node(id);
  if (k == 0) return n.parent;
  if (!n.expanded()) throw UsageError("node " + std::to_string(id) + " has unsampled children");
  if (k > n.child_count) throw UsageError("child index out of range");
  return n.first_child + k - 1;
}

NodeId TreeArena::child(NodeId id, unsigned k) const {
  if (k == 0) throw UsageError("children are indexed from 1");
  return neighbor(id, k);
}

void TreeArena::set_rotor(NodeId id, unsigned value) {
  if (id >= nodes_.size()) throw UsageError("node id out of range");
  Node& n = nodes_[id];
  if (!n.expanded()) throw UsageError("set_rotor needs the child count; expand the node first");
  if (value > n.child_count) throw ValidationError("rotor value exceeds the number of children");
  n.rotor = static_cast<std::int8_t>(value);
}

void TreeArena::reset_dynamics() {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    nodes_[i].rotor = Node::kUnset;
    nodes_[i].visited = false;
  }
}

void TreeArena::write_snapshot(std::ostream& out) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    out << i << ' ' << (n.parent == kSink ? -1L : static_cast<long>(n.parent)) << ' ' << n.depth << ' '
        << (n.expanded() ? static_cast<int>(n.child_count) : -1) << ' ' << static_cast<int>(n.rotor) << '\n';
  }
}

TruncatedView truncate_view(TreeArena& arena, int depth) {
  if (depth < 0) throw ValidationError("truncation depth must be >= 0");
  TruncatedView view;
  if (depth == 0) {
    view.boundary.push_back(TreeArena::root());
    return view;
  }
  std::vector<NodeId> level{TreeArena::root()};
  for (int h = 0; h < depth; ++h) {
    std::vector<NodeId> next;
    for (NodeId x : level) {
      view.interior.push_back(x);
      const unsigned d = arena.ensure_expanded(x);
      const NodeId first = arena.node(x).first_child;
      for (unsigned k = 0; k < d; ++k) next.push_back(first + k);
    }
    level = std::move(next);
  }
  view.boundary = std::move(level);
  return view;
}

}  // namespace rotorgw
