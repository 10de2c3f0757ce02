#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "error.hpp"

namespace rsse {

enum class KernelFamily { ScaledGaussian, PiecewiseJoe };

/// Piecewise-linear kernel k0(u) = a + b|u| on |u| < inner_knot and
/// d (outer_knot - |u|) on inner_knot <= |u| < outer_knot, zero beyond.
/// In the usual notation a = eta1, b = eta2, c = eta3 = d * outer_knot, d = eta4,
/// inner_knot = xi1, outer_knot = xi2.
struct JoeConstants {
  int p = 1;
  double a = 0.0;
  double b = 0.0;
  double d = 0.0;
  double inner_knot = 0.0;
  double outer_knot = 0.0;

  double c() const noexcept { return d * outer_knot; }
};

/// Residuals of the five constraints defining the Joe kernel for dimension p:
/// unit mass, unit second moment, continuity at the inner knot,
/// k0(0) = kappa02 / 2^(1/p) and  int v^2 k0^2 / kappa02 = 1.
struct JoeResiduals {
  double mass = 0.0;
  double second_moment = 0.0;
  double continuity = 0.0;
  double center = 0.0;
  double curvature = 0.0;
  double kappa02 = 0.0;

  std::array<double, 5> vector() const { return {mass, second_moment, continuity, center, curvature}; }
  double max_abs() const {
    double r = 0.0;
    for (double v : vector()) r = std::max(r, std::abs(v));
    return r;
  }
};

inline JoeResiduals joe_residuals(const JoeConstants& k) {
  const double a = k.a, b = k.b, d = k.d, s = k.inner_knot, t = k.outer_knot;
  const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  const double ts = t - s;
  JoeResiduals r;
  r.mass = 2.0 * (a * s + b * s2 / 2.0 + d * ts * ts / 2.0) - 1.0;
  const double outer_m2 = t * (t3 - s3) / 3.0 - (t4 - s4) / 4.0;
  r.second_moment = 2.0 * (a * s3 / 3.0 + b * s4 / 4.0 + d * outer_m2) - 1.0;
  r.continuity = a + b * s - d * ts;
  r.kappa02 = 2.0 * (a * a * s + a * b * s2 + b * b * s3 / 3.0 + d * d * ts * ts * ts / 3.0);
  r.center = a - r.kappa02 / std::pow(2.0, 1.0 / k.p);
  const double inner_c5 = a * a * s3 / 3.0 + a * b * s4 / 2.0 + b * b * s5 / 5.0;
  const double outer_c5 = t2 * (t3 - s3) / 3.0 - t * (t4 - s4) / 2.0 + (t5 - s5) / 5.0;
  r.curvature = 2.0 * (inner_c5 + d * d * outer_c5) / r.kappa02 - 1.0;
  return r;
}

/// Newton iteration with a central-difference Jacobian on the five
/// constraints. Throws ConfigurationError when it fails to converge to a
/// nonnegative kernel with 0 < inner_knot < outer_knot.
inline JoeConstants solve_joe_constants(int p, JoeConstants guess, double tol = 1e-14, int max_iter = 100) {
  if (p < 1 || p > 4) throw ParameterError("Joe kernel is defined for p = 1..4");
  using Vec = Eigen::Matrix<double, 5, 1>;
  using Mat = Eigen::Matrix<double, 5, 5>;
  auto pack = [](const JoeConstants& c) {
    Vec v;
    v << c.a, c.b, c.d, c.inner_knot, c.outer_knot;
    return v;
  };
  auto unpack = [p](const Vec& v) { return JoeConstants{p, v[0], v[1], v[2], v[3], v[4]}; };
  auto residual = [&](const Vec& v) {
    const auto r = joe_residuals(unpack(v)).vector();
    return Vec(r[0], r[1], r[2], r[3], r[4]);
  };
  guess.p = p;
  Vec x = pack(guess);
  double norm = residual(x).cwiseAbs().maxCoeff();
  for (int it = 0; it < max_iter && norm > tol; ++it) {
    Mat jac;
    for (int c = 0; c < 5; ++c) {
      const double h = 1e-7 * std::max(1.0, std::abs(x[c]));
      Vec up = x, dn = x;
      up[c] += h;
      dn[c] -= h;
      jac.col(c) = (residual(up) - residual(dn)) / (2.0 * h);
    }
    const Vec step = jac.fullPivLu().solve(-residual(x));
    if (!step.allFinite()) break;
    // Backtrack until the residual decreases.
    double lambda = 1.0;
    Vec next = x + step;
    double next_norm = residual(next).cwiseAbs().maxCoeff();
    while (!(next_norm < norm) && lambda > 1e-6) {
      lambda *= 0.5;
      next = x + lambda * step;
      next_norm = residual(next).cwiseAbs().maxCoeff();
    }
    if (!(next_norm < norm)) break;
    x = next;
    norm = next_norm;
  }
  const JoeConstants out = unpack(x);
  const bool shape_ok = out.a > 0.0 && out.d > 0.0 && out.inner_knot > 0.0 &&
                        out.outer_knot > out.inner_knot && out.a + out.b * out.inner_knot > 0.0;
  if (!(norm <= 1e-12) || !shape_ok)
    throw ConfigurationError("Joe kernel root-find did not converge for p=" + std::to_string(p) +
                             " (max residual " + std::to_string(norm) + ")");
  return out;
}

/// Solved constants, frozen from tools/derive_joe_constants (see
/// data/joe_kernel_constants.txt for the residual report).
inline constexpr std::array<JoeConstants, 4> kJoeTable = {{
    // JOE_TABLE_BEGIN
    {1, 0.1558460416819944, 0.24042630196562367, 0.64295633887450787, 1.1774660241080424, 1.8601559938761594},
    {2, 0.21081371661919443, 0.13484456250785889, 0.7202649291567198, 1.3184989882313423, 1.8580312077290777},
    {3, 0.23334075534917945, 0.093448651032478014, 0.82758191291409222, 1.4039923582623732, 1.844482830081744},
    {4, 0.24564462984458399, 0.071509456322584916, 0.94200420761726256, 1.4602791140498945, 1.8318999545289332},
    // JOE_TABLE_END
}};

/// Univariate kernel k0 and its p-variate product K_p.
class KernelSpec {
 public:
  KernelFamily family() const noexcept { return family_; }
  const JoeConstants& joe() const noexcept { return joe_; }
  /// Dimension the constants were tuned for (Joe only; 0 for the Gaussian).
  int tuned_dim() const noexcept { return family_ == KernelFamily::PiecewiseJoe ? joe_.p : 0; }

  double operator()(double u) const noexcept {
    if (family_ == KernelFamily::ScaledGaussian) return kGaussNorm * std::exp(-0.25 * u * u);
    const double x = std::abs(u);
    if (x < joe_.inner_knot) return joe_.a + joe_.b * x;
    if (x < joe_.outer_knot) return joe_.d * (joe_.outer_knot - x);
    return 0.0;
  }

  /// K_p(u) = prod_j k0(u_j).
  double product(std::span<const double> u) const noexcept {
    if (family_ == KernelFamily::ScaledGaussian) {
      double q = 0.0;
      for (double v : u) q += v * v;
      return std::pow(kGaussNorm, static_cast<double>(u.size())) * std::exp(-0.25 * q);
    }
    double r = 1.0;
    for (double v : u) {
      r *= (*this)(v);
      if (r == 0.0) break;
    }
    return r;
  }

  double at_zero() const noexcept { return (*this)(0.0); }
  /// kappa02 = int k0^2.
  double kappa02() const noexcept { return kappa02_; }
  /// kappa2 = int K_p^2 = kappa02^p.
  double kappa2(std::size_t p) const noexcept { return std::pow(kappa02_, static_cast<double>(p)); }
  /// Half-width of the support (infinity for the Gaussian).
  double support_radius() const noexcept {
    return family_ == KernelFamily::ScaledGaussian ? std::numeric_limits<double>::infinity() : joe_.outer_knot;
  }
  /// Points where k0 is not smooth (empty for the Gaussian).
  std::array<double, 2> knots() const noexcept { return {joe_.inner_knot, joe_.outer_knot}; }

  std::string name() const {
    return family_ == KernelFamily::ScaledGaussian ? "gaussian" : "joe" + std::to_string(joe_.p);
  }

  friend KernelSpec scaled_gaussian();
  friend KernelSpec piecewise_joe(int p);
  friend KernelSpec joe_kernel_from(const JoeConstants& c);

 private:
  static constexpr double kGaussNorm = 0.28209479177387814;  // (4 pi)^(-1/2)

  KernelFamily family_ = KernelFamily::ScaledGaussian;
  JoeConstants joe_{};
  double kappa02_ = 0.0;
};

/// k0(u) = (4 pi)^(-1/2) exp(-u^2 / 4): the N(0, 2) density.
inline KernelSpec scaled_gaussian() {
  KernelSpec k;
  k.family_ = KernelFamily::ScaledGaussian;
  k.kappa02_ = 1.0 / (2.0 * std::sqrt(2.0 * std::numbers::pi));
  return k;
}

/// Joe kernel built from explicit constants (no validation beyond shape).
inline KernelSpec joe_kernel_from(const JoeConstants& c) {
  KernelSpec k;
  k.family_ = KernelFamily::PiecewiseJoe;
  k.joe_ = c;
  k.kappa02_ = joe_residuals(c).kappa02;
  return k;
}

/// Joe piecewise-linear kernel for dimension p in 1..4 from the frozen table.
inline KernelSpec piecewise_joe(int p) {
  if (p < 1 || p > 4) throw ParameterError("Joe kernel is defined for p = 1..4");
  const JoeConstants& c = kJoeTable[static_cast<std::size_t>(p - 1)];
  if (joe_residuals(c).max_abs() > 1e-9)
    throw ConfigurationError("frozen Joe constants for p=" + std::to_string(p) + " violate their constraints");
  return joe_kernel_from(c);
}

/// Kernel by name: "gaussian" or "joe1".."joe4".
inline KernelSpec kernel_by_name(const std::string& name) {
  if (name == "gaussian") return scaled_gaussian();
  if (name.size() == 4 && name.rfind("joe", 0) == 0 && name[3] >= '1' && name[3] <= '4')
    return piecewise_joe(name[3] - '0');
  throw ParameterError("unknown kernel '" + name + "' (expected gaussian or joe1..joe4)");
}

}  // namespace rsse
