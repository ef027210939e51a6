#include "rotorgw/cdf_operator.hpp"

#include "rotorgw/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <iomanip>
#include <memory>
#include <mutex>
#include <ostream>

namespace rotorgw {

namespace {

// The FFTW planner is not reentrant; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
struct FftwDeleter {
  void operator()(T* p) const noexcept { fftw_free(p); }
};

template <class T>
std::unique_ptr<T[], FftwDeleter<T>> fftw_array(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) throw std::bad_alloc();
  return std::unique_ptr<T[], FftwDeleter<T>>(p);
}

class Plans {
 public:
  Plans(std::size_t n, double* real, fftw_complex* spec) {
    std::lock_guard lock(planner_mutex());
    const int len = static_cast<int>(n);
    forward_ = fftw_plan_dft_r2c_1d(len, real, spec, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(len, spec, real, FFTW_ESTIMATE);
  }
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }
  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;

  void forward(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(forward_, in, out); }
  void inverse(fftw_complex* in, double* out) const { fftw_execute_dft_c2r(inverse_, in, out); }

 private:
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

DiscretizedCDF::DiscretizedCDF(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw ValidationError("a discretized CDF needs at least two grid points");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] >= 0.0 && values_[i] <= 1.0)) throw ValidationError("CDF values must lie in [0, 1]");
    if (i && values_[i] < values_[i - 1]) throw ValidationError("CDF values must be nondecreasing");
  }
  if (values_.back() != 1.0) throw ValidationError("CDF must reach 1 at t = 1");
}

DiscretizedCDF DiscretizedCDF::uniform(std::size_t G) {
  if (G == 0) throw ValidationError("grid size must be positive");
  std::vector<double> v(G + 1);
  for (std::size_t i = 0; i <= G; ++i) v[i] = static_cast<double>(i) / static_cast<double>(G);
  v.back() = 1.0;
  return DiscretizedCDF(std::move(v));
}

DiscretizedCDF DiscretizedCDF::point_mass(double a, std::size_t G) {
  if (G == 0) throw ValidationError("grid size must be positive");
  if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("atom location must lie in [0, 1]");
  std::vector<double> v(G + 1);
  for (std::size_t i = 0; i <= G; ++i) v[i] = static_cast<double>(i) / static_cast<double>(G) >= a ? 1.0 : 0.0;
  v.back() = 1.0;
  return DiscretizedCDF(std::move(v));
}

double DiscretizedCDF::at(double t) const noexcept {
  if (t < 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double x = t * static_cast<double>(grid());
  const auto j = static_cast<std::size_t>(x);
  const double frac = x - static_cast<double>(j);
  return values_[j] + frac * (values_[j + 1] - values_[j]);
}

double DiscretizedCDF::mean() const noexcept {
  double acc = 0.0;
  for (std::size_t i = 1; i < values_.size(); ++i) acc += 1.0 - 0.5 * (values_[i - 1] + values_[i]);
  return acc / static_cast<double>(grid());
}

double DiscretizedCDF::quantile(double p) const noexcept {
  const auto it = std::lower_bound(values_.begin(), values_.end(), p);
  return t(static_cast<std::size_t>(it - values_.begin()));
}

void DiscretizedCDF::write_csv(std::ostream& out) const {
  out << "t,F(t)\n" << std::setprecision(17);
  for (std::size_t i = 0; i < values_.size(); ++i) out << t(i) << ',' << values_[i] << '\n';
}

double sup_distance(const DiscretizedCDF& a, const DiscretizedCDF& b) {
  if (a.grid() != b.grid()) throw ValidationError("sup_distance needs CDFs on the same grid");
  double d = 0.0;
  for (std::size_t i = 0; i <= a.grid(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double levy_distance(const DiscretizedCDF& a, const DiscretizedCDF& b) {
  const std::size_t G = std::max(a.grid(), b.grid());
  auto ok = [&](double eps) {
    for (std::size_t i = 0; i <= G; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(G);
      const double fa = a.at(t);
      const double fb = b.at(t);
      if (fb > a.at(t + eps) + eps + 1e-15 || fb < a.at(t - eps) - eps - 1e-15) return false;
      if (fa > b.at(t + eps) + eps + 1e-15 || fa < b.at(t - eps) - eps - 1e-15) return false;
    }
    return true;
  };
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

DiscretizedCDF apply_cdf_operator(const DiscretizedCDF& F, const OffspringDistribution& xi) {
  const std::size_t G = F.grid();
  const unsigned kmax = xi.k_max();
  const std::size_t support = static_cast<std::size_t>(kmax) * G + 1;
  const std::size_t N = next_pow2(support);
  const std::size_t M = N / 2 + 1;

  auto real = fftw_array<double>(N);
  auto base = fftw_array<fftw_complex>(M);
  auto power = fftw_array<fftw_complex>(M);
  auto work = fftw_array<fftw_complex>(M);
  Plans plans(N, real.get(), base.get());

  // Lattice atoms: the mass F(t_i) - F(t_{i-1}) sits at t_i, F(0) at 0.
  std::fill(real.get(), real.get() + N, 0.0);
  real[0] = F[0];
  for (std::size_t i = 1; i <= G; ++i) real[i] = std::max(0.0, F[i] - F[i - 1]);
  plans.forward(real.get(), base.get());
  std::memcpy(power.get(), base.get(), sizeof(fftw_complex) * M);

  std::vector<double> out(G + 1, 0.0);
  std::vector<double> cum;
  const double scale = 1.0 / static_cast<double>(N);
  for (unsigned k = 1; k <= kmax; ++k) {
    if (k > 1) {
      for (std::size_t j = 0; j < M; ++j) {
        const std::complex<double> p(power[j][0], power[j][1]);
        const std::complex<double> b(base[j][0], base[j][1]);
        const std::complex<double> r = p * b;
        power[j][0] = r.real();
        power[j][1] = r.imag();
      }
    }
    const double pk = xi.p(k);
    if (pk == 0.0) continue;
    std::memcpy(work.get(), power.get(), sizeof(fftw_complex) * M);
    plans.inverse(work.get(), real.get());
    const std::size_t top = static_cast<std::size_t>(k) * G;
    cum.assign(top + 1, 0.0);
    double acc = 0.0;
    for (std::size_t j = 0; j <= top; ++j) {
      acc += real[j] * scale;
      cum[j] = std::clamp(acc, 0.0, 1.0);
    }
    for (std::size_t i = 1; i < G; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(G);
      const double x = t / (1.0 - t) * static_cast<double>(G);
      double v;
      if (x >= static_cast<double>(top)) {
        v = 1.0;  // F^{*k} is supported on [0, k]
      } else {
        const auto j0 = static_cast<std::size_t>(x);
        const double frac = x - static_cast<double>(j0);
        v = cum[j0] + frac * (cum[j0 + 1] - cum[j0]);
      }
      out[i] += pk * v;
    }
  }

  out[0] = 0.0;
  out[G] = 1.0;
  double running = 0.0;
  for (double& v : out) {
    v = std::clamp(v, running, 1.0);
    running = v;
  }
  return DiscretizedCDF(std::move(out));
}

FixedPointResult cdf_fixed_point(const OffspringDistribution& xi, double tol, int max_iter, std::size_t G) {
  return cdf_fixed_point(xi, DiscretizedCDF::uniform(G), tol, max_iter);
}

FixedPointResult cdf_fixed_point(const OffspringDistribution& xi, const DiscretizedCDF& start, double tol,
                                 int max_iter) {
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  if (max_iter < 1) throw ValidationError("max_iter must be >= 1");
  FixedPointResult r{start, 0, false, {}};
  while (r.iterations < max_iter) {
    DiscretizedCDF next = apply_cdf_operator(r.cdf, xi);
    const double change = sup_distance(next, r.cdf);
    r.cdf = std::move(next);
    ++r.iterations;
    r.history.push_back(change);
    if (change <= tol) {
      r.converged = true;
      break;
    }
  }
  return r;
}

}  // namespace rotorgw
