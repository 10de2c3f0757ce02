#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "density.hpp"
#include "design.hpp"
#include "entropy.hpp"
#include "error.hpp"
#include "kernels.hpp"

namespace rsse {

/// 1 - exp(-2 I); equals rho^2 for the bivariate normal.
inline double standardized_mi(double I) {
  if (!(I >= 0.0)) throw DomainError("standardized mutual information needs I >= 0");
  return -std::expm1(-2.0 * I);
}

struct MiReport {
  double I_hat = 0.0;  // clamped at 0
  double I_raw = 0.0;  // before clamping
  double I_std = 0.0;
  double H_first = 0.0;
  double H_second = 0.0;
  double H_joint = 0.0;
  double gamma = 0.0;
  bool clamped = false;
  std::size_t n = 0, k = 0, m = 0, r = 0, p = 0;
  std::string kernel;
};

inline void to_json(nlohmann::ordered_json& j, const MiReport& r) {
  j = nlohmann::ordered_json{{"I_hat", r.I_hat},     {"I_std", r.I_std},       {"I_raw", r.I_raw},
                             {"clamped", r.clamped}, {"H_first", r.H_first},   {"H_second", r.H_second},
                             {"H_joint", r.H_joint}, {"gamma", r.gamma},       {"kernel", r.kernel},
                             {"n", r.n},             {"k", r.k},               {"m", r.m},
                             {"r", r.r},             {"p", r.p}};
}

namespace detail {

inline void check_blocks(std::size_t p, std::span<const std::size_t> first, std::span<const std::size_t> second) {
  if (first.empty() || second.empty()) throw ParameterError("mutual information blocks must be nonempty");
  std::vector<int> seen(p, 0);
  for (std::size_t c : first) {
    if (c >= p) throw ParameterError("block coordinate out of range");
    ++seen[c];
  }
  for (std::size_t c : second) {
    if (c >= p) throw ParameterError("block coordinate out of range");
    ++seen[c];
  }
  for (int s : seen)
    if (s != 1) throw ParameterError("mutual information blocks must partition the coordinates");
}

/// Full-sample KDE of `pts` evaluated at its own points.
inline std::vector<double> self_density(const PointSet& pts, const KernelSpec& kernel, double gamma) {
  const std::size_t n = pts.size();
  std::vector<double> f(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    f[a] += scaled_kernel(kernel, pts[a], pts[a], gamma);
    for (std::size_t b = a + 1; b < n; ++b) {
      const double v = scaled_kernel(kernel, pts[a], pts[b], gamma);
      f[a] += v;
      f[b] += v;
    }
  }
  for (double& v : f) v /= static_cast<double>(n);
  return f;
}

/// log of the Gaussian-kernel KDE at t via log-sum-exp, for points where
/// the direct sum underflows.
inline double gaussian_log_density(const PointSet& pts, std::span<const double> t, double gamma) {
  const std::size_t n = pts.size(), p = pts.dim();
  std::vector<double> e(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double q = 0.0;
    for (std::size_t c = 0; c < p; ++c) {
      const double u = (t[c] - pts[i][c]) / gamma;
      q += u * u;
    }
    e[i] = -0.25 * q;
    top = std::max(top, e[i]);
  }
  double s = 0.0;
  for (double v : e) s += std::exp(v - top);
  return top + std::log(s) + static_cast<double>(p) * std::log(0.28209479177387814 / gamma) -
         std::log(static_cast<double>(n));
}

}  // namespace detail

/// I = H(first) + H(second) - H(joint), every term from the same ranked set
/// sample, kernel and bandwidth. The support indicator is that of the joint
/// point and is applied to all three terms.
inline MiReport mutual_information(const RankedSetSample& sample, std::span<const std::size_t> first,
                                   std::span<const std::size_t> second, const KernelSpec& kernel, double gamma,
                                   const SupportSpec& S = SupportSpec::all_points()) {
  if (!(gamma > 0.0)) throw ParameterError("bandwidth gamma must be > 0");
  detail::check_blocks(sample.dim(), first, second);
  const PointSet& pts = sample.points();
  const auto fj = detail::self_density(pts, kernel, gamma);
  const auto in = detail::resolve_support(pts, S, fj);
  const std::size_t n = pts.size();
  MiReport rep;
  rep.H_joint = detail::neg_mean_log(fj, in, n);
  rep.H_first = detail::neg_mean_log(detail::self_density(pts.project(first), kernel, gamma), in, n);
  rep.H_second = detail::neg_mean_log(detail::self_density(pts.project(second), kernel, gamma), in, n);
  rep.I_raw = rep.H_first + rep.H_second - rep.H_joint;
  rep.clamped = rep.I_raw < 0.0;
  rep.I_hat = rep.clamped ? 0.0 : rep.I_raw;
  rep.I_std = standardized_mi(rep.I_hat);
  rep.gamma = gamma;
  rep.n = n;
  rep.k = sample.k();
  rep.m = sample.m();
  rep.r = static_cast<std::size_t>(sample.design().r);
  rep.p = sample.dim();
  rep.kernel = kernel.name();
  return rep;
}

/// (1/n) sum log(f1(X) / f2(X)) over the points X of sample1.
inline double kl_divergence(const RankedSetSample& sample1, const RankedSetSample& sample2, const KernelSpec& kernel,
                            double gamma) {
  if (!(gamma > 0.0)) throw ParameterError("bandwidth gamma must be > 0");
  if (sample1.size() == 0 || sample2.size() == 0) throw ParameterError("KL samples must be nonempty");
  if (sample1.dim() != sample2.dim()) throw ParameterError("KL samples must have equal dimension");
  const DensityEstimate f2(sample2, kernel, gamma);
  const auto f1 = detail::self_density(sample1.points(), kernel, gamma);
  double s = 0.0;
  std::size_t bad = 0;
  for (std::size_t a = 0; a < sample1.size(); ++a) {
    const double g = f2(sample1.points()[a]);
    if (!(g > 0.0)) {
      if (kernel.family() == KernelFamily::ScaledGaussian) {
        s += std::log(f1[a]) - detail::gaussian_log_density(sample2.points(), sample1.points()[a], gamma);
        continue;
      }
      ++bad;
      continue;
    }
    s += std::log(f1[a] / g);
  }
  if (bad > 0)
    throw EvaluationError("second density estimate is zero at " + std::to_string(bad) + " evaluation point(s)", bad);
  return s / static_cast<double>(sample1.size());
}

/// Entropy plug-in -(1/N) sum log f_N(X_i) I_S(X_i) over a whole finite population.
inline double entropy_population(const PointSet& population, const KernelSpec& kernel, double gamma,
                                 const SupportSpec& S = SupportSpec::all_points()) {
  if (population.size() < 2) throw ParameterError("population entropy needs N >= 2");
  const auto v = population.values();
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; }))
    throw ParameterError("population is constant; its kernel density is degenerate");
  if (!(gamma > 0.0)) throw ParameterError("bandwidth gamma must be > 0");
  const auto f = detail::self_density(population, kernel, gamma);
  const auto in = detail::resolve_support(population, S, f);
  return detail::neg_mean_log(f, in, population.size());
}

struct SubsetScore {
  std::vector<std::size_t> subset;  // candidate coordinates
  MiReport report;
};

/// Scores every size-`subset_size` subset of `candidates` by the standardized
/// MI between (subset) and `target`, using the bandwidth rule on the joint
/// dimension. Sorted by decreasing I_std; equal scores keep enumeration order.
inline std::vector<SubsetScore> rank_variable_subsets(const RankedSetSample& sample,
                                                      std::span<const std::size_t> candidates, std::size_t target,
                                                      std::size_t subset_size, const KernelSpec& kernel, double d1,
                                                      const SupportSpec& S = SupportSpec::all_points()) {
  if (subset_size == 0 || subset_size > candidates.size())
    throw ParameterError("subset size must be in 1..number of candidates");
  std::vector<SubsetScore> out;
  std::vector<char> pick(candidates.size(), 0);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(subset_size), 1);
  do {
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < candidates.size(); ++i)
      if (pick[i]) subset.push_back(candidates[i]);
    std::vector<std::size_t> coords = subset;
    coords.push_back(target);
    const RankedSetSample joint = sample.project(coords);
    std::vector<std::size_t> first(subset.size());
    std::iota(first.begin(), first.end(), std::size_t{0});
    const std::size_t second[] = {subset.size()};
    const double gamma = bandwidth_rule(joint, d1);
    out.push_back({subset, mutual_information(joint, first, second, kernel, gamma, S.project(coords))});
  } while (std::prev_permutation(pick.begin(), pick.end()));
  std::stable_sort(out.begin(), out.end(),
                   [](const SubsetScore& a, const SubsetScore& b) { return a.report.I_std > b.report.I_std; });
  return out;
}

}  // namespace rsse
