#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "error.hpp"

namespace rsse::quad {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule via Newton iteration on P_n.
inline Rule gauss_legendre(int n) {
  Rule rule{std::vector<double>(n), std::vector<double>(n)};
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

inline const Rule& rule64() {
  static const Rule r = gauss_legendre(64);
  return r;
}

template <class F>
double panels(const F& f, double a, double b, int count, const Rule& rule) {
  const double h = (b - a) / count;
  double total = 0.0;
  for (int p = 0; p < count; ++p) {
    const double mid = a + (p + 0.5) * h;
    double s = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q)
      s += rule.weights[q] * f(mid + 0.5 * h * rule.nodes[q]);
    total += 0.5 * h * s;
  }
  return total;
}

struct Result {
  double value = 0.0;
  double error = 0.0;  // |last - previous| at termination
  int panels = 0;
};

/// Composite 64-point Gauss-Legendre on [a, b], halving panels until two
/// successive levels agree to `tol` (absolute, or relative when larger).
template <class F>
Result integrate(const F& f, double a, double b, double tol = 1e-8, int max_panels = 1 << 12) {
  const Rule& rule = rule64();
  int count = 1;
  double prev = panels(f, a, b, count, rule);
  double err = 0.0;
  while (count < max_panels) {
    count *= 2;
    const double cur = panels(f, a, b, count, rule);
    err = std::abs(cur - prev);
    if (err <= tol * std::max(1.0, std::abs(cur))) return {cur, err, count};
    prev = cur;
  }
  throw NumericalError("quadrature did not converge", err);
}

/// Integrates over consecutive segments between sorted breakpoints, so that
/// kinks and jumps of the integrand sit on panel edges.
template <class F>
Result integrate_pieces(const F& f, std::span<const double> breaks, double tol = 1e-8) {
  Result total;
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    if (!(breaks[s + 1] > breaks[s])) continue;
    const Result r = integrate(f, breaks[s], breaks[s + 1], tol);
    total.value += r.value;
    total.error += r.error;
    total.panels += r.panels;
  }
  return total;
}

/// Tensor-free product grid for repeated 1-d integrals: nodes and weights of a
/// composite rule over segments delimited by `breaks`.
struct Grid {
  std::vector<double> x;
  std::vector<double> w;

  std::size_t size() const noexcept { return x.size(); }

  template <class F>
  double integrate(const F& values) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * values(i);
    return s;
  }
};

/// Composite grid with `per_segment` panels of an `order`-point rule on each
/// segment between consecutive breakpoints.
inline Grid make_grid(std::span<const double> breaks, int per_segment, int order = 16) {
  const Rule rule = gauss_legendre(order);
  Grid g;
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double a = breaks[s], b = breaks[s + 1];
    if (!(b > a)) continue;
    const double h = (b - a) / per_segment;
    for (int p = 0; p < per_segment; ++p) {
      const double mid = a + (p + 0.5) * h;
      for (int q = 0; q < order; ++q) {
        g.x.push_back(mid + 0.5 * h * rule.nodes[q]);
        g.w.push_back(0.5 * h * rule.weights[q]);
      }
    }
  }
  return g;
}

}  // namespace rsse::quad
