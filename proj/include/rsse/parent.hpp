#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <variant>

#include <boost/math/distributions/normal.hpp>

#include "error.hpp"
#include "random.hpp"

namespace rsse {

/// Normal(mean, sd^2).
struct Normal {
  double mean = 0.0;
  double sd = 1.0;

  double pdf(double x) const {
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
  }
  double cdf(double x) const { return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2)); }
  double quantile(double u) const {
    return boost::math::quantile(boost::math::normal_distribution<double>(mean, sd), u);
  }
  double sample(Rng& rng) const { return mean + sd * rng.normal(); }
  /// Differential entropy in nats.
  double entropy() const { return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * sd * sd); }
};

/// Uniform(lo, hi).
struct Uniform {
  double lo = 0.0;
  double hi = 1.0;

  double pdf(double x) const { return (x >= lo && x <= hi) ? 1.0 / (hi - lo) : 0.0; }
  double cdf(double x) const {
    if (x <= lo) return 0.0;
    if (x >= hi) return 1.0;
    return (x - lo) / (hi - lo);
  }
  double quantile(double u) const { return lo + u * (hi - lo); }
  double sample(Rng& rng) const { return lo + (hi - lo) * rng.uniform(); }
  double entropy() const { return std::log(hi - lo); }
};

/// One-dimensional parent law used by the theory engine.
class UnivariateParent {
 public:
  UnivariateParent(Normal n) : law_(n) {}  // NOLINT(google-explicit-constructor)
  UnivariateParent(Uniform u) : law_(u) {}  // NOLINT(google-explicit-constructor)

  double pdf(double x) const { return std::visit([x](const auto& d) { return d.pdf(x); }, law_); }
  double cdf(double x) const { return std::visit([x](const auto& d) { return d.cdf(x); }, law_); }
  double quantile(double u) const {
    return std::visit([u](const auto& d) { return d.quantile(u); }, law_);
  }
  double sample(Rng& rng) const {
    return std::visit([&rng](const auto& d) { return d.sample(rng); }, law_);
  }
  double entropy() const { return std::visit([](const auto& d) { return d.entropy(); }, law_); }

  /// Bounded interval carrying all but `tail` mass on each side.
  /// Both laws are symmetric, so the upper end is mirrored (1 - tail rounds to 1 for tiny tails).
  std::array<double, 2> effective_support(double tail = 1e-9) const {
    const double mid = quantile(0.5), lo = quantile(tail);
    return {lo, 2.0 * mid - lo};
  }

 private:
  std::variant<Normal, Uniform> law_;
};

/// Standard bivariate normal with correlation rho.
struct BivariateNormal {
  double rho = 0.0;

  double pdf(double x, double y) const {
    const double s = 1.0 - rho * rho;
    const double q = (x * x - 2.0 * rho * x * y + y * y) / s;
    return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(s));
  }
  /// Density of the first coordinate given the second equals y.
  double conditional_pdf(double x, double y) const {
    return Normal{rho * y, std::sqrt(1.0 - rho * rho)}.pdf(x);
  }
  Normal marginal() const { return {}; }
  std::array<double, 2> sample(Rng& rng) const {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    return {z1, rho * z1 + std::sqrt(1.0 - rho * rho) * z2};
  }
  double joint_entropy() const {
    return std::log(2.0 * std::numbers::pi * std::numbers::e) + 0.5 * std::log(1.0 - rho * rho);
  }
  double mutual_information() const { return -0.5 * std::log(1.0 - rho * rho); }
};

/// Analytic parent distribution: any univariate law or the bivariate normal.
class ParentModel {
 public:
  ParentModel(Normal n) : law_(UnivariateParent(n)) {}  // NOLINT(google-explicit-constructor)
  ParentModel(Uniform u) : law_(UnivariateParent(u)) {}  // NOLINT(google-explicit-constructor)
  ParentModel(BivariateNormal b) : law_(b) {  // NOLINT(google-explicit-constructor)
    if (!(std::abs(b.rho) < 1.0)) throw ParameterError("bivariate normal needs |rho| < 1");
  }

  std::size_t dimension() const { return std::holds_alternative<BivariateNormal>(law_) ? 2 : 1; }

  void sample(Rng& rng, std::span<double> out) const {
    if (const auto* b = std::get_if<BivariateNormal>(&law_)) {
      const auto xy = b->sample(rng);
      out[0] = xy[0];
      out[1] = xy[1];
    } else {
      out[0] = std::get<UnivariateParent>(law_).sample(rng);
    }
  }

  const BivariateNormal* bivariate() const { return std::get_if<BivariateNormal>(&law_); }
  const UnivariateParent* univariate() const { return std::get_if<UnivariateParent>(&law_); }

 private:
  std::variant<UnivariateParent, BivariateNormal> law_;
};

}  // namespace rsse
