#pragma once

#include "rotorgw/gw_tree.hpp"
#include "rotorgw/rational.hpp"

#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rotorgw {

// Lower-triangular matrix Q; row k (1-based) is (q_{k,0}, ..., q_{k,k}),
// the law of the number l of good children of a vertex with k children.
class RotorMatrix {
 public:
  // rows[k-1] has k+1 entries, each row summing to 1 within 1e-12.
  static RotorMatrix from_rows(std::vector<std::vector<double>> rows);
  static RotorMatrix from_exact_rows(std::vector<std::vector<Rational>> rows);

  // q_{k,l} = 1/(k+1) for k = 1..k_max.
  static RotorMatrix uniform(unsigned k_max = kMaxOffspring);

  // "uniform" or "rows:q10,q11;q20,q21,q22;..." with fractions allowed.
  static RotorMatrix parse(std::string_view spec);

  unsigned k_max() const noexcept { return static_cast<unsigned>(rows_.size()); }
  double q(unsigned k, unsigned l) const;
  std::span<const double> row(unsigned k) const;
  const std::optional<std::vector<std::vector<Rational>>>& exact() const noexcept { return exact_; }
  bool is_uniform() const noexcept { return uniform_; }

  // Rotor value d - l for a uniform draw u, l drawn from row d.
  unsigned sample(unsigned d, double u) const;

  std::string describe() const;

 private:
  RotorMatrix() = default;
  void build_cumulative();

  std::vector<std::vector<double>> rows_;
  std::vector<std::vector<double>> cumulative_;
  std::optional<std::vector<std::vector<Rational>>> exact_;
  bool uniform_ = false;
};

template <class URBG>
unsigned sample_rotor(unsigned d, const RotorMatrix& q, URBG& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return q.sample(d, unit(rng));
}

// Draws the initial rotor of an expanded node from its keyed rotor stream.
// No-op if the rotor is already set.
void assign_rotor(TreeArena& arena, NodeId id, const RotorMatrix& q);

// Expands the node if needed and assigns its initial rotor: the state a
// vertex is in when a particle first has to leave it.
inline Node& prepare_node(TreeArena& arena, NodeId id, const RotorMatrix& q) {
  Node& n = arena.mutable_node(id);
  if (!n.expanded()) arena.expand(id);
  if (!n.has_rotor()) assign_rotor(arena, id, q);
  return n;
}

// 1-based indices k with rho(x) < k <= d_x. Throws UsageError if the rotor is unset.
std::vector<unsigned> good_children(const Node& node);

struct GoodChildrenLaw {
  std::vector<double> probs;  // nu_0 .. nu_kmax
  double mean = 0.0;
  std::optional<std::vector<Rational>> exact_probs;
  std::optional<Rational> exact_mean;
};

GoodChildrenLaw good_children_law(const OffspringDistribution& xi, const RotorMatrix& q);

enum class Verdict { kRecurrent, kTransient };

struct Classification {
  Verdict verdict;
  double mean_nu;
  bool exact;  // decided in rational arithmetic
  GoodChildrenLaw law;
  bool degenerate = false;  // nu = 1 almost surely: one good ray everywhere, the walk never turns back
};

// Recurrent iff E[nu] <= 1.
Classification classify(const OffspringDistribution& xi, const RotorMatrix& q);

std::string to_string(Verdict v);

}  // namespace rotorgw
