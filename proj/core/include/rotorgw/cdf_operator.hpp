#pragma once

#include "rotorgw/gw_tree.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace rotorgw {

inline constexpr std::size_t kDefaultGrid = 4096;

// A distribution function on [0, 1] sampled at t_i = i / G, i = 0..G.
class DiscretizedCDF {
 public:
  // values.size() = G + 1, nondecreasing in [0, 1], values.back() = 1.
  explicit DiscretizedCDF(std::vector<double> values);

  static DiscretizedCDF uniform(std::size_t G = kDefaultGrid);
  // Unit atom at a: F(t_i) = 1 iff t_i >= a.
  static DiscretizedCDF point_mass(double a, std::size_t G = kDefaultGrid);

  std::size_t grid() const noexcept { return values_.size() - 1; }
  double t(std::size_t i) const noexcept { return static_cast<double>(i) / static_cast<double>(grid()); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  // Linear interpolation; 0 below 0 and 1 at or above 1.
  double at(double t) const noexcept;
  // Integral of 1 - F over [0, 1], trapezoidal.
  double mean() const noexcept;
  // Smallest grid point with F >= p.
  double quantile(double p) const noexcept;

  void write_csv(std::ostream& out) const;

 private:
  std::vector<double> values_;
};

double sup_distance(const DiscretizedCDF& a, const DiscretizedCDF& b);

// Levy distance between two CDFs on the same grid, in units of t.
double levy_distance(const DiscretizedCDF& a, const DiscretizedCDF& b);

// One application of F -> sum_k p_k F^{*k}(t / (1 - t)).
DiscretizedCDF apply_cdf_operator(const DiscretizedCDF& F, const OffspringDistribution& xi);

struct FixedPointResult {
  DiscretizedCDF cdf;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;  // sup-norm change per iteration
};

// Iterates from `start` (the uniform CDF if omitted) until the sup-norm
// change drops to tol or max_iter is reached. Non-convergence is flagged.
FixedPointResult cdf_fixed_point(const OffspringDistribution& xi, double tol = 1e-6, int max_iter = 200,
                                 std::size_t G = kDefaultGrid);
FixedPointResult cdf_fixed_point(const OffspringDistribution& xi, const DiscretizedCDF& start, double tol,
                                 int max_iter);

}  // namespace rotorgw
