#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/binomial.hpp>

#include "error.hpp"
#include "kernels.hpp"
#include "parent.hpp"
#include "quadrature.hpp"

namespace rsse::theory {

/// Stage count standing for the r -> infinity limit.
inline constexpr int kLimitStages = -1;

/// Densities and cdfs of the k rank rows at one point.
struct RankDistributions {
  std::vector<double> pdf;
  std::vector<double> cdf;
};

namespace detail {

/// Poisson-binomial counts: out[c] = P(exactly c of the events occur), the
/// events being independent with probabilities probs[l], skipping index `skip`.
inline std::vector<double> poisson_binomial(std::span<const double> probs, std::size_t skip) {
  std::vector<double> dp(probs.size() + 1, 0.0);
  dp[0] = 1.0;
  std::size_t used = 0;
  for (std::size_t l = 0; l < probs.size(); ++l) {
    if (l == skip) continue;
    const double q = probs[l];
    for (std::size_t c = used + 1; c > 0; --c) dp[c] = dp[c] * (1.0 - q) + dp[c - 1] * q;
    dp[0] *= 1.0 - q;
    ++used;
  }
  return dp;
}

}  // namespace detail

/// Rank-row distributions of an MRSS design with perfect ranking on a
/// univariate parent. Stage 1 is the classical order statistic; stage s
/// ranks k independent units with the stage s-1 laws, evaluated exactly
/// by a Poisson-binomial recursion over the stage s-1 cdfs.
inline RankDistributions rank_distributions(const UnivariateParent& parent, int k, int r, double x) {
  if (k < 1) throw ParameterError("set size k must be >= 1");
  if (r < 1) throw ParameterError("stage count r must be >= 1");
  const double f = parent.pdf(x), F = parent.cdf(x);
  const auto K = static_cast<std::size_t>(k);
  RankDistributions cur{std::vector<double>(K), std::vector<double>(K)};
  for (std::size_t i = 0; i < K; ++i) {
    // i-th (0-based) order statistic of k iid draws.
    const double coef = static_cast<double>(k) * boost::math::binomial_coefficient<double>(k - 1, static_cast<unsigned>(i));
    cur.pdf[i] = coef * std::pow(F, static_cast<double>(i)) * std::pow(1.0 - F, static_cast<double>(K - 1 - i)) * f;
    cur.cdf[i] = F <= 0.0 ? 0.0 : F >= 1.0 ? 1.0 : boost::math::ibeta(static_cast<double>(i + 1), static_cast<double>(K - i), F);
  }
  for (int s = 2; s <= r; ++s) {
    RankDistributions next{std::vector<double>(K, 0.0), std::vector<double>(K, 0.0)};
    const auto all = detail::poisson_binomial(cur.cdf, K);  // skip nothing
    for (std::size_t i = 0; i < K; ++i) {
      double tail = 0.0;
      for (std::size_t c = i + 1; c <= K; ++c) tail += all[c];
      next.cdf[i] = std::clamp(tail, 0.0, 1.0);
    }
    for (std::size_t j = 0; j < K; ++j) {
      const auto others = detail::poisson_binomial(cur.cdf, j);
      for (std::size_t i = 0; i < K; ++i) next.pdf[i] += cur.pdf[j] * others[i];
    }
    cur = std::move(next);
  }
  return cur;
}

/// Density of rank row i (1-based) under k, r at x.
inline double order_stat_density(const UnivariateParent& parent, int k, int r, int i, double x) {
  if (i < 1 || i > k) throw ParameterError("rank index i must be in 1..k");
  return rank_distributions(parent, k, r, x).pdf[static_cast<std::size_t>(i - 1)];
}

inline double order_stat_cdf(const UnivariateParent& parent, int k, int r, int i, double x) {
  if (i < 1 || i > k) throw ParameterError("rank index i must be in 1..k");
  return rank_distributions(parent, k, r, x).cdf[static_cast<std::size_t>(i - 1)];
}

/// r -> infinity limit: k f(x) on the i-th quantile slab [Q((i-1)/k), Q(i/k)).
inline double limiting_rank_density(const UnivariateParent& parent, int k, int i, double x) {
  if (i < 1 || i > k) throw ParameterError("rank index i must be in 1..k");
  const double F = parent.cdf(x);
  const double lo = static_cast<double>(i - 1) / k, hi = static_cast<double>(i) / k;
  const bool in = F >= lo && (F < hi || (i == k && F <= 1.0));
  return in ? k * parent.pdf(x) : 0.0;
}

/// Rank density for finite r or the limit (r == kLimitStages).
inline double rank_density(const UnivariateParent& parent, int k, int r, int i, double x) {
  return r == kLimitStages ? limiting_rank_density(parent, k, i, x) : order_stat_density(parent, k, r, i, x);
}

/// Quantile breakpoints of the parent: effective support ends plus the
/// slab edges Q(i/k) (where the limiting densities jump).
inline std::vector<double> parent_breaks(const UnivariateParent& parent, int k, double tail = 1e-14) {
  const auto sup = parent.effective_support(tail);
  std::vector<double> b{sup[0]};
  for (int i = 1; i < k; ++i) b.push_back(parent.quantile(static_cast<double>(i) / k));
  b.push_back(sup[1]);
  std::sort(b.begin(), b.end());
  return b;
}

/// Density of the unranked first coordinate in rank row i when the standard
/// bivariate normal is ranked by its second coordinate:
/// int f(x | y) f_(i)(y) dy.
inline double concomitant_density(const BivariateNormal& parent, int k, int r, int i, double x) {
  if (i < 1 || i > k) throw ParameterError("rank index i must be in 1..k");
  const UnivariateParent ranker = parent.marginal();
  const auto breaks = parent_breaks(ranker, k);
  return quad::integrate_pieces(
             [&](double y) { return parent.conditional_pdf(x, y) * rank_density(ranker, k, r, i, y); }, breaks, 1e-11)
      .value;
}

/// Parent of the theory engine: either a univariate law ranked by itself, or
/// the standard bivariate normal whose first coordinate is the target and
/// whose second coordinate is the ranker.
using TheoryParent = std::variant<UnivariateParent, BivariateNormal>;

inline UnivariateParent target_marginal(const TheoryParent& p) {
  if (const auto* b = std::get_if<BivariateNormal>(&p)) return b->marginal();
  return std::get<UnivariateParent>(p);
}

/// Rank densities of the target coordinate tabulated on grid nodes.
inline std::vector<std::vector<double>> tabulate_rank_densities(const TheoryParent& parent, int k, int r,
                                                                const quad::Grid& grid, int ranker_panels) {
  const auto K = static_cast<std::size_t>(k);
  std::vector<std::vector<double>> out(K, std::vector<double>(grid.size(), 0.0));
  if (const auto* uni = std::get_if<UnivariateParent>(&parent)) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (r == kLimitStages) {
        for (std::size_t i = 0; i < K; ++i) out[i][g] = limiting_rank_density(*uni, k, static_cast<int>(i + 1), grid.x[g]);
      } else {
        const auto rd = rank_distributions(*uni, k, r, grid.x[g]);
        for (std::size_t i = 0; i < K; ++i) out[i][g] = rd.pdf[i];
      }
    }
    return out;
  }
  const auto& bvn = std::get<BivariateNormal>(parent);
  const UnivariateParent ranker = bvn.marginal();
  const auto ybreaks = parent_breaks(ranker, k);
  const quad::Grid ygrid = quad::make_grid(ybreaks, ranker_panels);
  std::vector<std::vector<double>> gy(K, std::vector<double>(ygrid.size()));
  for (std::size_t h = 0; h < ygrid.size(); ++h) {
    if (r == kLimitStages) {
      for (std::size_t i = 0; i < K; ++i) gy[i][h] = limiting_rank_density(ranker, k, static_cast<int>(i + 1), ygrid.x[h]);
    } else {
      const auto rd = rank_distributions(ranker, k, r, ygrid.x[h]);
      for (std::size_t i = 0; i < K; ++i) gy[i][h] = rd.pdf[i];
    }
  }
  for (std::size_t g = 0; g < grid.size(); ++g)
    for (std::size_t h = 0; h < ygrid.size(); ++h) {
      const double c = bvn.conditional_pdf(grid.x[g], ygrid.x[h]) * ygrid.w[h];
      for (std::size_t i = 0; i < K; ++i) out[i][g] += c * gy[i][h];
    }
  return out;
}

/// Expected value of rank row i (1-based) of the target coordinate.
inline double rank_mean(const TheoryParent& parent, int k, int r, int i) {
  const UnivariateParent target = target_marginal(parent);
  const quad::Grid grid = quad::make_grid(parent_breaks(target, k), 64);
  const auto dens = tabulate_rank_densities(parent, k, r, grid, 64);
  double s = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) s += grid.w[g] * grid.x[g] * dens[static_cast<std::size_t>(i - 1)][g];
  return s;
}

struct TheoryConfig {
  TheoryParent parent = BivariateNormal{0.9};
  int k = 3;
  int r = 1;  // or kLimitStages
  KernelSpec kernel = scaled_gaussian();
  double gamma = 0.5;
  std::optional<std::array<double, 2>> support;  // interval S; none = whole line
  double tol = 1e-6;                             // relative change between refinements
  int max_panels_per_segment = 512;
};

/// Bias/MSE expansion constants of the entropy estimator for one target
/// coordinate: alpha (ranked design) and beta (simple random sampling).
struct TheoryQuantities {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double H_gamma = 0.0;
  double H = 0.0;
  double residual = 0.0;  // largest relative change at the last refinement
  std::size_t nodes = 0;
};

namespace detail {

inline TheoryQuantities evaluate_on(const TheoryConfig& cfg, int panels) {
  const UnivariateParent target = target_marginal(cfg.parent);
  // with a Gaussian kernel f / Delta has much heavier tails than f
  const bool compact = std::isfinite(cfg.kernel.support_radius());
  auto breaks = parent_breaks(target, cfg.k, compact ? 1e-14 : 1e-60);
  if (cfg.support) {
    const double lo = (*cfg.support)[0], hi = (*cfg.support)[1];
    std::vector<double> clipped{lo};
    for (double b : breaks)
      if (b > lo && b < hi) clipped.push_back(b);
    clipped.push_back(hi);
    clipped.front() = std::max(lo, breaks.front());
    clipped.back() = std::min(hi, breaks.back());
    breaks = clipped;
  }
  const quad::Grid G = quad::make_grid(breaks, panels);
  const std::size_t n = G.size();
  const auto dens = tabulate_rank_densities(cfg.parent, cfg.k, cfg.r, G, panels);
  std::vector<double> f(n);
  for (std::size_t g = 0; g < n; ++g) f[g] = target.pdf(G.x[g]);

  const double inv = 1.0 / cfg.gamma;
  std::vector<double> KM(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) KM[a * n + b] = KM[b * n + a] = inv * cfg.kernel((G.x[a] - G.x[b]) * inv);
  const double k0 = inv * cfg.kernel.at_zero();

  // Smoothed density, restricted to S (the grid only covers S).
  auto smooth = [&](const std::vector<double>& g) {
    std::vector<double> out(n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b) s += KM[a * n + b] * g[b] * G.w[b];
      out[a] = s;
    }
    return out;
  };
  const auto D = smooth(f);

  TheoryQuantities q;
  for (std::size_t g = 0; g < n; ++g) q.H_gamma -= G.w[g] * f[g] * std::log(D[g]);
  if (cfg.support) {
    for (std::size_t g = 0; g < n; ++g)
      if (f[g] > 0.0) q.H -= G.w[g] * f[g] * std::log(f[g]);
  } else {
    q.H = target.entropy();
  }

  // A(x) = int_S K(y - x) / D(y) dF(y) + log D(x)
  std::vector<double> fd(n);
  for (std::size_t b = 0; b < n; ++b) fd[b] = f[b] / D[b];
  std::vector<double> A = smooth(fd);
  for (std::size_t a = 0; a < n; ++a) A[a] += std::log(D[a]);

  // int_S B(x, x) dF(x)
  double ebxx = 0.0;
  for (std::size_t z = 0; z < n; ++z) {
    double s = 0.0;
    for (std::size_t x = 0; x < n; ++x) s += KM[z * n + x] * KM[z * n + x] * f[x] * G.w[x];
    ebxx += -0.5 * G.w[z] * f[z] * s / (D[z] * D[z]);
  }
  for (std::size_t x = 0; x < n; ++x) ebxx += k0 * G.w[x] * f[x] / D[x];

  // int_S int_S B(x, y) g(x) g(y) dx dy
  auto pair_term = [&](const std::vector<double>& g) {
    const auto Dg = smooth(g);
    double s = 0.0;
    for (std::size_t z = 0; z < n; ++z) s += -0.5 * G.w[z] * f[z] * Dg[z] * Dg[z] / (D[z] * D[z]);
    for (std::size_t x = 0; x < n; ++x) s += G.w[x] * g[x] * Dg[x] / D[x];
    return s;
  };
  auto mean_under = [&](const std::vector<double>& v, const std::vector<double>& g) {
    double s = 0.0;
    for (std::size_t x = 0; x < n; ++x) s += G.w[x] * g[x] * v[x];
    return s;
  };
  std::vector<double> A2(n);
  for (std::size_t x = 0; x < n; ++x) A2[x] = A[x] * A[x];
  const double ea2 = mean_under(A2, f);

  q.beta1 = ebxx - pair_term(f);
  const double ea = mean_under(A, f);
  q.beta2 = ea2 - ea * ea;
  double pairs = 0.0, means = 0.0;
  for (const auto& gi : dens) {
    pairs += pair_term(gi);
    const double mi = mean_under(A, gi);
    means += mi * mi;
  }
  q.alpha1 = ebxx - pairs / cfg.k;
  q.alpha2 = ea2 - means / cfg.k;
  q.nodes = n;
  return q;
}

inline double rel_change(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace detail

/// alpha1, alpha2, beta1, beta2, H_gamma and H by grid quadrature, doubling
/// the panel count until every quantity changes by less than cfg.tol.
inline TheoryQuantities alpha_beta(const TheoryConfig& cfg) {
  if (cfg.k < 1) throw ParameterError("set size k must be >= 1");
  if (cfg.r < 1 && cfg.r != kLimitStages) throw ParameterError("stage count r must be >= 1");
  if (!(cfg.gamma > 0.0)) throw ParameterError("bandwidth gamma must be > 0");
  if (cfg.support && !((*cfg.support)[0] < (*cfg.support)[1])) throw ParameterError("support interval needs lo < hi");
  int panels = 8;
  TheoryQuantities prev = detail::evaluate_on(cfg, panels);
  double change = 0.0;
  while (panels < cfg.max_panels_per_segment) {
    panels *= 2;
    TheoryQuantities cur = detail::evaluate_on(cfg, panels);
    change = std::max({detail::rel_change(cur.alpha1, prev.alpha1), detail::rel_change(cur.alpha2, prev.alpha2),
                       detail::rel_change(cur.beta1, prev.beta1), detail::rel_change(cur.beta2, prev.beta2),
                       detail::rel_change(cur.H_gamma, prev.H_gamma)});
    cur.residual = change;
    if (change < cfg.tol) return cur;
    prev = cur;
  }
  throw NumericalError("theory quadrature did not reach the requested tolerance", change);
}

/// Leading-order MSE (H_gamma - H)^2 + n^-1 (c2 - 2 c1 (H_gamma - H)).
inline double approx_mse(double H_gamma, double H, double c1, double c2, double n) {
  const double bias = H_gamma - H;
  return bias * bias + (c2 - 2.0 * c1 * bias) / n;
}

/// Relative efficiency at a single common bandwidth, as the one-line ratio
/// expansion 1 + n^-1 (b2 - a2 - 2 (b1 - a1) bias) / MSE_rss.
inline double relative_efficiency_common(const TheoryQuantities& q, double n) {
  const double bias = q.H_gamma - q.H;
  const double denom = approx_mse(q.H_gamma, q.H, q.alpha1, q.alpha2, n);
  if (!(denom > 0.0)) throw NumericalError("approximate RSS MSE is not positive; check the bandwidth", denom);
  return 1.0 + (q.beta2 - q.alpha2 - 2.0 * (q.beta1 - q.alpha1) * bias) / n / denom;
}

struct EfficiencyResult {
  double re = 0.0;
  double mse_rss = 0.0;
  double mse_srs = 0.0;
  TheoryQuantities rss;  // at gamma_rss
  TheoryQuantities srs;  // at gamma_srs (beta terms used)
};

/// RE of the ranked-design entropy estimator relative to SRS, each scheme at
/// its own bandwidth: MSE_srs(gamma_srs) / MSE_rss(gamma_rss). With equal
/// bandwidths this is exactly relative_efficiency_common.
inline EfficiencyResult relative_efficiency(TheoryConfig cfg, double n, double gamma_rss, double gamma_srs) {
  if (!(n > 0.0)) throw ParameterError("sample size must be > 0");
  EfficiencyResult out;
  cfg.gamma = gamma_rss;
  out.rss = alpha_beta(cfg);
  if (gamma_srs == gamma_rss) {
    out.srs = out.rss;
  } else {
    cfg.gamma = gamma_srs;
    out.srs = alpha_beta(cfg);
  }
  out.mse_rss = approx_mse(out.rss.H_gamma, out.rss.H, out.rss.alpha1, out.rss.alpha2, n);
  out.mse_srs = approx_mse(out.srs.H_gamma, out.srs.H, out.srs.beta1, out.srs.beta2, n);
  if (!(out.mse_rss > 0.0)) throw NumericalError("approximate RSS MSE is not positive; check the bandwidth", out.mse_rss);
  out.re = out.mse_srs / out.mse_rss;
  return out;
}

/// Reference bandwidth constants c (gamma = c n^-0.4) for the bivariate
/// normal efficiency table. k = 1, r = 0 selects the SRS value.
inline double reference_c(double rho, int k, int r) {
  const bool hi = std::abs(rho - 0.9) < 1e-9;
  if (!hi && std::abs(rho - 0.8) > 1e-9) throw ParameterError("reference c values exist for rho = 0.8, 0.9 only");
  if (r == 0) return hi ? 1.35 : 1.30;
  if ((k != 3 && k != 5) || (r != 1 && r != 2)) throw ParameterError("reference c values exist for k = 3, 5 and r = 1, 2");
  const double base = k == 3 ? 1.40 : 1.65;
  return base + (r == 2 ? 0.05 : 0.0) - (hi ? 0.0 : 0.05);
}

/// Closed-form r -> infinity expressions built on the product identity
/// (1/k) sum_i f_i(x) f_i(y) -> k f(x) f(y):
/// alpha1 = beta1 - (k-1)/2, alpha2 = beta2 - (k-1)(1 - H_gamma)^2.
inline TheoryQuantities product_identity_limit(const TheoryQuantities& q, int k) {
  TheoryQuantities out = q;
  out.alpha1 = q.beta1 - 0.5 * (k - 1);
  out.alpha2 = q.beta2 - (k - 1) * (1.0 - q.H_gamma) * (1.0 - q.H_gamma);
  return out;
}

/// Limiting RE under the product identity.
inline double limiting_relative_efficiency(const TheoryQuantities& q, int k, double n) {
  const double bias = q.H_gamma - q.H;
  const double num = (k - 1) * ((1.0 - q.H_gamma) * (1.0 - q.H_gamma) - q.H_gamma + q.H) / n;
  const auto lim = product_identity_limit(q, k);
  const double denom = approx_mse(q.H_gamma, q.H, lim.alpha1, lim.alpha2, n);
  if (!(denom > 0.0)) throw NumericalError("limiting MSE is not positive", denom);
  (void)bias;
  return 1.0 + num / denom;
}

}  // namespace rsse::theory
