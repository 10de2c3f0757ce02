#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "density.hpp"
#include "design.hpp"
#include "error.hpp"
#include "kernels.hpp"

namespace rsse {

/// The bounded set S the entropy integral is trimmed to.
struct SupportSpec {
  enum class Mode { AllPoints, Rectangle, DensityFloor };

  Mode mode = Mode::AllPoints;
  std::vector<double> lo, hi;  // Rectangle
  double floor = 0.0;          // DensityFloor: keep points whose full-sample KDE >= floor

  static SupportSpec all_points() { return {}; }
  static SupportSpec rectangle(std::vector<double> lo, std::vector<double> hi) {
    SupportSpec s;
    s.mode = Mode::Rectangle;
    s.lo = std::move(lo);
    s.hi = std::move(hi);
    return s;
  }
  static SupportSpec density_floor(double eps) {
    SupportSpec s;
    s.mode = Mode::DensityFloor;
    s.floor = eps;
    return s;
  }

  void validate(std::size_t p) const {
    if (mode == Mode::Rectangle) {
      if (lo.size() != p || hi.size() != p) throw ParameterError("support rectangle has the wrong dimension");
      for (std::size_t c = 0; c < p; ++c)
        if (!(lo[c] < hi[c])) throw ParameterError("support rectangle needs lo < hi in every coordinate");
    } else if (mode == Mode::DensityFloor && !(floor > 0.0)) {
      throw ParameterError("density floor must be > 0");
    }
  }

  /// Projection onto a subset of coordinates (rectangles only; the other
  /// modes carry over unchanged).
  SupportSpec project(std::span<const std::size_t> coords) const {
    if (mode != Mode::Rectangle) return *this;
    SupportSpec s = *this;
    s.lo.clear();
    s.hi.clear();
    for (std::size_t c : coords) {
      s.lo.push_back(lo.at(c));
      s.hi.push_back(hi.at(c));
    }
    return s;
  }
};

/// Type-7 (linear interpolation) sample quantile of unsorted values.
inline double quantile_type7(std::vector<double> v, double q) {
  if (v.empty()) throw ParameterError("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Quartile box diagnostics entering the bandwidth rule.
struct QuartileSummary {
  double mean_iqr = 0.0;
  double inside_fraction = 0.0;  // share of points inside the product of quartile boxes
  double correction = 1.0;       // (0.5 - inside) / (0.5 - 0.5^p); 1 for p = 1
};

inline QuartileSummary quartile_summary(const PointSet& points) {
  const std::size_t n = points.size(), p = points.dim();
  if (n < 4) throw ParameterError("bandwidth rule needs at least 4 observations");
  std::vector<double> q1(p), q3(p);
  QuartileSummary s;
  for (std::size_t c = 0; c < p; ++c) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = points[i][c];
    q1[c] = quantile_type7(col, 0.25);
    q3[c] = quantile_type7(col, 0.75);
    if (!(q3[c] > q1[c])) throw ParameterError("zero interquartile range in coordinate " + std::to_string(c));
    s.mean_iqr += (q3[c] - q1[c]) / static_cast<double>(p);
  }
  std::size_t inside = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool in = true;
    for (std::size_t c = 0; c < p && in; ++c) in = points[i][c] >= q1[c] && points[i][c] <= q3[c];
    inside += in ? 1 : 0;
  }
  s.inside_fraction = static_cast<double>(inside) / static_cast<double>(n);
  // At p = 1 the ratio is 0/0 in the limit; it is defined as 1.
  s.correction = p == 1 ? 1.0 : (0.5 - s.inside_fraction) / (0.5 - std::pow(0.5, static_cast<double>(p)));
  return s;
}

/// gamma = d1 n^(-1/(2 + p/2)) mean(IQR) (0.5 - alpha) / (0.5 - 0.5^p).
inline double bandwidth_rule(const PointSet& points, double d1) {
  if (!(d1 > 0.0)) throw ParameterError("d1 must be > 0");
  const auto s = quartile_summary(points);
  const double n = static_cast<double>(points.size());
  const double p = static_cast<double>(points.dim());
  const double gamma = d1 * std::pow(n, -1.0 / (2.0 + 0.5 * p)) * s.mean_iqr * s.correction;
  if (!(gamma > 0.0))
    throw ParameterError("bandwidth rule gave a non-positive bandwidth (half or more of the data lie in the quartile box)");
  return gamma;
}

inline double bandwidth_rule(const RankedSetSample& sample, double d1) { return bandwidth_rule(sample.points(), d1); }

/// 25 log-spaced bandwidths spanning [center/4, 4 center].
inline std::vector<double> default_cv_grid(double center, std::size_t count = 25) {
  std::vector<double> g(count);
  const double lo = std::log(center / 4.0), hi = std::log(center * 4.0);
  for (std::size_t i = 0; i < count; ++i)
    g[i] = count == 1 ? center : std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
  return g;
}

struct BandwidthPolicy {
  enum class Mode { Fixed, Rule, CvGrid };

  Mode mode = Mode::Rule;
  double gamma = 0.0;        // Fixed
  double d1 = 1.0;           // Rule; also centers the default CV grid
  std::vector<double> grid;  // CvGrid; empty = default grid around the rule value

  static BandwidthPolicy fixed(double g) { return {Mode::Fixed, g, 1.0, {}}; }
  static BandwidthPolicy rule(double d1) { return {Mode::Rule, 0.0, d1, {}}; }
  static BandwidthPolicy cv(std::vector<double> grid, double d1 = 1.0) { return {Mode::CvGrid, 0.0, d1, std::move(grid)}; }

  void validate() const {
    if (mode == Mode::Fixed && !(gamma > 0.0)) throw ParameterError("fixed bandwidth must be > 0");
    if (!(d1 > 0.0)) throw ParameterError("d1 must be > 0");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!(grid[i] > 0.0)) throw ParameterError("bandwidth grid values must be > 0");
      if (i > 0 && !(grid[i] > grid[i - 1])) throw ParameterError("bandwidth grid must be sorted ascending");
    }
  }
};

namespace detail {

/// Pairwise scaled kernel values w(a, b) = gamma^-p K_p((X_a - X_b) / gamma)
/// for one sample, shared by the entropy, cross-validation and MSE routines.
class KernelMatrix {
 public:
  KernelMatrix(const PointSet& pts, const KernelSpec& kernel, double gamma) : n_(pts.size()), w_(n_ * n_) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("bandwidth gamma must be > 0");
    for (std::size_t a = 0; a < n_; ++a) {
      w_[a * n_ + a] = scaled_kernel(kernel, pts[a], pts[a], gamma);
      for (std::size_t b = a + 1; b < n_; ++b) {
        const double v = scaled_kernel(kernel, pts[a], pts[b], gamma);
        w_[a * n_ + b] = v;
        w_[b * n_ + a] = v;
      }
    }
  }
  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t a, std::size_t b) const noexcept { return w_[a * n_ + b]; }

 private:
  std::size_t n_;
  std::vector<double> w_;
};

inline std::vector<char> resolve_support(const PointSet& pts, const SupportSpec& S, const std::vector<double>& density) {
  S.validate(pts.dim());
  std::vector<char> in(pts.size(), 1);
  if (S.mode == SupportSpec::Mode::Rectangle) {
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t c = 0; c < pts.dim(); ++c)
        if (pts[a][c] < S.lo[c] || pts[a][c] > S.hi[c]) in[a] = 0;
  } else if (S.mode == SupportSpec::Mode::DensityFloor) {
    for (std::size_t a = 0; a < pts.size(); ++a) in[a] = density[a] >= S.floor ? 1 : 0;
  }
  return in;
}

inline double neg_mean_log(std::span<const double> f, std::span<const char> in, std::size_t count) {
  double s = 0.0;
  std::size_t bad = 0;
  for (std::size_t a = 0; a < f.size(); ++a) {
    if (!in[a]) continue;
    if (!(f[a] > 0.0)) {
      ++bad;
      continue;
    }
    s += std::log(f[a]);
  }
  if (bad > 0)
    throw EvaluationError("kernel density estimate is zero at " + std::to_string(bad) + " in-support point(s)", bad);
  return -s / static_cast<double>(count);
}

}  // namespace detail

/// All entropy diagnostics of one sample at one bandwidth, built from a
/// single pairwise kernel matrix.
class EntropyAnalysis {
 public:
  EntropyAnalysis(const RankedSetSample& sample, const KernelSpec& kernel, double gamma,
                  const SupportSpec& S = SupportSpec::all_points())
      : n_(sample.size()), k_(sample.k()), m_(sample.m()), w_(sample.points(), kernel, gamma), gamma_(gamma) {
    const std::size_t n = sample.size();
    f_.assign(n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b) s += w_(a, b);
      f_[a] = s / static_cast<double>(n);
    }
    in_ = detail::resolve_support(sample.points(), S, f_);
  }

  double gamma() const noexcept { return gamma_; }
  std::span<const double> density() const noexcept { return f_; }
  std::span<const char> in_support() const noexcept { return in_; }

  /// H = -(1/n) sum log f(X) I_S(X).
  double entropy() const { return detail::neg_mean_log(f_, in_, n_); }

  /// Entropy of the sample without cycle j, same bandwidth and support.
  double entropy_without_cycle(std::size_t j) const {
    const std::size_t n = n_, k = k_;
    const std::size_t reduced = n - k;
    std::vector<double> f;
    std::vector<char> in;
    f.reserve(reduced);
    in.reserve(reduced);
    for (std::size_t a = 0; a < n; ++a) {
      if ((a / k_) == j) continue;
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b)
        if ((b / k_) != j) s += w_(a, b);
      f.push_back(s / static_cast<double>(reduced));
      in.push_back(in_[a]);
    }
    return detail::neg_mean_log(f, in, reduced);
  }

  struct CrossValidation {
    double cv = 0.0;  // mean squared full-minus-reduced deviation
    double d = 0.0;   // mean signed deviation
  };

  /// Leave-one-cycle-out statistics CV_gamma and D_gamma.
  CrossValidation cross_validation() const {
    const std::size_t m = m_;
    if (m < 2) throw ParameterError("cross-validation needs at least two cycles");
    const double full = entropy();
    CrossValidation out;
    for (std::size_t j = 0; j < m; ++j) {
      const double dev = full - entropy_without_cycle(j);
      out.cv += dev * dev;
      out.d += dev;
    }
    out.cv /= static_cast<double>(m);
    out.d /= static_cast<double>(m);
    return out;
  }

  /// Plug-in A(X_a).
  double a_hat(std::size_t a) const {
    const std::size_t n = n_;
    double s = 0.0;
    for (std::size_t l = 0; l < n; ++l)
      if (in_[l]) s += w_(l, a) / f_[l];
    s /= static_cast<double>(n);
    if (in_[a]) s += std::log(f_[a]);
    return s;
  }

  /// Plug-in B(X_a, X_b).
  double b_hat(std::size_t a, std::size_t b) const {
    const std::size_t n = n_;
    double s = 0.0;
    for (std::size_t l = 0; l < n; ++l)
      if (in_[l]) s += w_(l, a) * w_(l, b) / (f_[l] * f_[l]);
    s *= -0.5 / static_cast<double>(n);
    if (in_[a]) s += w_(a, b) / f_[a];
    return s;
  }

  struct Alphas {
    double alpha1 = 0.0;
    double alpha2 = 0.0;
  };

  Alphas alphas() const {
    const std::size_t n = n_, k = k_, m = m_;
    if (m < 2) throw ParameterError("MSE estimate needs at least two cycles");
    Alphas out;
    double diag = 0.0, off = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      if (in_[a]) diag += b_hat(a, a);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t jj = 0; jj < m; ++jj) {
          if (jj == j) continue;
          const std::size_t a = j * k + i, b = jj * k + i;
          if (in_[a] && in_[b]) off += b_hat(a, b);
        }
    out.alpha1 = diag / static_cast<double>(n) -
                 off / (static_cast<double>(m) * static_cast<double>(m - 1) * static_cast<double>(k));
    std::vector<double> A(n);
    for (std::size_t a = 0; a < n; ++a) A[a] = a_hat(a);
    double sq = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      if (in_[a]) sq += A[a] * A[a];
    double rows = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        if (in_[j * k + i]) r += A[j * k + i];
      r /= static_cast<double>(m);
      rows += r * r;
    }
    out.alpha2 = sq / static_cast<double>(n) - rows / static_cast<double>(k);
    return out;
  }

 private:
  std::size_t n_, k_, m_;
  detail::KernelMatrix w_;
  double gamma_;
  std::vector<double> f_;
  std::vector<char> in_;
};

inline double entropy_rss(const RankedSetSample& sample, const KernelSpec& kernel, double gamma,
                          const SupportSpec& S = SupportSpec::all_points()) {
  return EntropyAnalysis(sample, kernel, gamma, S).entropy();
}

struct CvResult {
  double cv = 0.0;
  double d = 0.0;
};

inline CvResult cv_gamma(const RankedSetSample& sample, const KernelSpec& kernel, double gamma,
                         const SupportSpec& S = SupportSpec::all_points()) {
  const auto r = EntropyAnalysis(sample, kernel, gamma, S).cross_validation();
  return {r.cv, r.d};
}

/// Grid point with the smallest CV_gamma; ties go to the smallest bandwidth.
inline double select_bandwidth_cv(const RankedSetSample& sample, const KernelSpec& kernel,
                                  std::span<const double> grid, const SupportSpec& S = SupportSpec::all_points()) {
  if (grid.empty()) throw ParameterError("bandwidth grid is empty");
  double best_gamma = grid[0];
  double best_cv = std::numeric_limits<double>::infinity();
  for (double g : grid) {
    const double cv = cv_gamma(sample, kernel, g, S).cv;
    if (cv < best_cv || (cv == best_cv && g < best_gamma)) {
      best_cv = cv;
      best_gamma = g;
    }
  }
  return best_gamma;
}

struct MseEstimate {
  double mse = 0.0;     // gated plug-in estimate
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double cv = 0.0;
  double d = 0.0;
  bool gate_passed = true;
};

/// M = [CV + n^-1 (alpha2 + 2 alpha1 |D|)] when the bracket is >= 0, else 0.
inline MseEstimate mse_from(const EntropyAnalysis& an, std::size_t n) {
  const auto cv = an.cross_validation();
  const auto al = an.alphas();
  MseEstimate out{0.0, al.alpha1, al.alpha2, cv.cv, cv.d, true};
  const double bracket = cv.cv + (al.alpha2 + 2.0 * al.alpha1 * std::abs(cv.d)) / static_cast<double>(n);
  out.gate_passed = bracket >= 0.0;
  out.mse = out.gate_passed ? bracket : 0.0;
  return out;
}

inline MseEstimate mse_hat(const RankedSetSample& sample, const KernelSpec& kernel, double gamma,
                           const SupportSpec& S = SupportSpec::all_points()) {
  return mse_from(EntropyAnalysis(sample, kernel, gamma, S), sample.size());
}

/// Resolves a bandwidth policy against a sample.
inline double resolve_bandwidth(const RankedSetSample& sample, const KernelSpec& kernel,
                                const BandwidthPolicy& policy, const SupportSpec& S = SupportSpec::all_points()) {
  policy.validate();
  switch (policy.mode) {
    case BandwidthPolicy::Mode::Fixed:
      return policy.gamma;
    case BandwidthPolicy::Mode::Rule:
      return bandwidth_rule(sample, policy.d1);
    case BandwidthPolicy::Mode::CvGrid: {
      const auto grid = policy.grid.empty() ? default_cv_grid(bandwidth_rule(sample, policy.d1)) : policy.grid;
      return select_bandwidth_cv(sample, kernel, grid, S);
    }
  }
  return policy.gamma;
}

struct EntropyReport {
  double H = 0.0;  // nats
  double gamma = 0.0;
  std::optional<double> cv, d, mse_hat, alpha1_hat, alpha2_hat;  // need m >= 2
  std::size_t n = 0, k = 0, m = 0, r = 0, p = 0;
  std::string kernel;
};

inline void to_json(nlohmann::ordered_json& j, const EntropyReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
  j = nlohmann::ordered_json{{"H", r.H},
                             {"gamma", r.gamma},
                             {"cv", opt(r.cv)},
                             {"d", opt(r.d)},
                             {"mse_hat", opt(r.mse_hat)},
                             {"alpha1_hat", opt(r.alpha1_hat)},
                             {"alpha2_hat", opt(r.alpha2_hat)},
                             {"kernel", r.kernel},
                             {"n", r.n},
                             {"k", r.k},
                             {"m", r.m},
                             {"r", r.r},
                             {"p", r.p}};
}

inline EntropyReport estimate_entropy(const RankedSetSample& sample, const KernelSpec& kernel,
                                      const BandwidthPolicy& policy, const SupportSpec& S = SupportSpec::all_points()) {
  EntropyReport rep;
  rep.gamma = resolve_bandwidth(sample, kernel, policy, S);
  const EntropyAnalysis an(sample, kernel, rep.gamma, S);
  rep.H = an.entropy();
  if (sample.m() >= 2) {
    const auto est = mse_from(an, sample.size());
    rep.cv = est.cv;
    rep.d = est.d;
    rep.mse_hat = est.mse;
    rep.alpha1_hat = est.alpha1;
    rep.alpha2_hat = est.alpha2;
  }
  rep.n = sample.size();
  rep.k = sample.k();
  rep.m = sample.m();
  rep.r = static_cast<std::size_t>(sample.design().r);
  rep.p = sample.dim();
  rep.kernel = kernel.name();
  return rep;
}

}  // namespace rsse
