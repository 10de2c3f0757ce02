#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>

#include "design.hpp"
#include "error.hpp"
#include "kernels.hpp"

namespace rsse {

/// gamma^-p K_p((a - b) / gamma), without temporaries.
inline double scaled_kernel(const KernelSpec& kernel, std::span<const double> a, std::span<const double> b,
                            double gamma) {
  const double inv = 1.0 / gamma;
  const std::size_t p = a.size();
  if (kernel.family() == KernelFamily::ScaledGaussian) {
    double q = 0.0;
    for (std::size_t c = 0; c < p; ++c) {
      const double u = (a[c] - b[c]) * inv;
      q += u * u;
    }
    return std::pow(0.28209479177387814 * inv, static_cast<double>(p)) * std::exp(-0.25 * q);
  }
  double r = std::pow(inv, static_cast<double>(p));
  for (std::size_t c = 0; c < p; ++c) {
    r *= kernel((a[c] - b[c]) * inv);
    if (r == 0.0) return 0.0;
  }
  return r;
}

/// Product-kernel density estimate with one scalar bandwidth for every
/// coordinate: f(t) = (1 / (n gamma^p)) sum K_p((t - X) / gamma).
class DensityEstimate {
 public:
  DensityEstimate(PointSet points, KernelSpec kernel, double gamma)
      : points_(std::move(points)), kernel_(kernel), gamma_(gamma) {
    if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) throw ParameterError("bandwidth gamma must be > 0");
    if (points_.empty()) throw ParameterError("density estimate needs at least one observation");
  }
  DensityEstimate(const RankedSetSample& sample, KernelSpec kernel, double gamma)
      : DensityEstimate(sample.points(), kernel, gamma) {}

  double operator()(std::span<const double> t) const {
    if (t.size() != points_.dim()) throw ParameterError("evaluation point has the wrong dimension");
    double s = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) s += scaled_kernel(kernel_, t, points_[i], gamma_);
    return s / static_cast<double>(points_.size());
  }

  const PointSet& points() const noexcept { return points_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  double gamma() const noexcept { return gamma_; }

 private:
  PointSet points_;
  KernelSpec kernel_;
  double gamma_;
};

inline double kde_eval(const DensityEstimate& est, std::span<const double> t) { return est(t); }

/// Fraction of observations that are coordinate-wise <= t.
inline double ecdf_eval(const PointSet& points, std::span<const double> t) {
  if (points.empty()) return 0.0;
  if (t.size() != points.dim()) throw ParameterError("evaluation point has the wrong dimension");
  std::size_t count = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto x = points[i];
    bool below = true;
    for (std::size_t c = 0; c < t.size() && below; ++c) below = x[c] <= t[c];
    count += below ? 1 : 0;
  }
  return static_cast<double>(count) / static_cast<double>(points.size());
}

inline double ecdf_eval(const RankedSetSample& sample, std::span<const double> t) {
  return ecdf_eval(sample.points(), t);
}

}  // namespace rsse
