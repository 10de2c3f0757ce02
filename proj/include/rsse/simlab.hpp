#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <locale>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "design.hpp"
#include "divergence.hpp"
#include "entropy.hpp"
#include "kernels.hpp"
#include "parent.hpp"
#include "random.hpp"

namespace rsse::sim {

enum class Estimator { Entropy, MI, StdMI, KL };

inline std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::Entropy: return "entropy";
    case Estimator::MI: return "mi";
    case Estimator::StdMI: return "std-mi";
    case Estimator::KL: return "kl";
  }
  return "?";
}

inline Estimator estimator_by_name(const std::string& s) {
  if (s == "entropy") return Estimator::Entropy;
  if (s == "mi") return Estimator::MI;
  if (s == "std-mi") return Estimator::StdMI;
  if (s == "kl") return Estimator::KL;
  throw ConfigurationError("unknown estimator '" + s + "' (entropy, mi, std-mi, kl)");
}

// Reference d1 values, bivariate normal, n = 30. Rows are rho = 0.5..0.9.
inline double table_entropy_d1(int r, int k, int p, double rho) {
  static constexpr double t[2][2][2][5] = {
      {{{1.45, 1.40, 1.30, 1.25, 1.20}, {1.45, 1.45, 1.30, 1.30, 1.05}},
       {{1.45, 1.40, 1.30, 1.25, 1.20}, {1.50, 1.45, 1.45, 1.30, 1.05}}},
      {{{1.50, 1.45, 1.45, 1.40, 1.20}, {1.45, 1.45, 1.40, 1.30, 1.05}},
       {{1.50, 1.45, 1.45, 1.40, 1.30}, {1.50, 1.45, 1.40, 1.20, 1.05}}}};
  const long ri = std::lround(rho * 10.0) - 5;
  if ((r != 1 && r != 2) || (k != 3 && k != 5) || (p != 1 && p != 2) || ri < 0 || ri > 4 ||
      std::abs(rho * 10.0 - std::round(rho * 10.0)) > 1e-9)
    throw ParameterError("no tabulated entropy d1 for this (r, k, p, rho)");
  return t[r - 1][k == 3 ? 0 : 1][p - 1][ri];
}

inline double table_mi_d1(int r, int k, double rho) {
  static constexpr double t[2][2][5] = {{{1.55, 1.40, 1.30, 1.00, 0.70}, {1.50, 1.30, 1.30, 1.00, 0.70}},
                                        {{1.50, 1.40, 1.10, 1.00, 0.70}, {1.50, 1.40, 1.30, 1.10, 1.00}}};
  const long ri = std::lround(rho * 10.0) - 5;
  if ((r != 1 && r != 2) || (k != 3 && k != 5) || ri < 0 || ri > 4 ||
      std::abs(rho * 10.0 - std::round(rho * 10.0)) > 1e-9)
    throw ParameterError("no tabulated MI d1 for this (r, k, rho)");
  return t[r - 1][k == 3 ? 0 : 1][ri];
}

struct DesignCell {
  int k = 3;
  int m = 10;
  int r = 1;
  bool srs = false;  // simple random sample of size k*m instead
};

struct ExperimentSpec {
  std::vector<DesignCell> designs{{3, 10, 1, false}};
  std::vector<double> rhos{0.9};      // bivariate normal parents; empty = use `parent`
  std::optional<ParentModel> parent;  // used when rhos is empty
  std::string kernel = "gaussian";
  BandwidthPolicy bandwidth = BandwidthPolicy::rule(1.0);
  bool table_d1 = false;  // take d1 per cell from the reference tables
  Estimator estimator = Estimator::Entropy;
  std::vector<std::size_t> target{0};  // entropy coordinates
  std::size_t rank_by = 1;
  int replications = 2000;
  std::uint64_t seed = 1;
  bool diagnostics = true;  // CV_gamma and M-hat for the entropy estimator
  unsigned workers = 0;     // 0 = hardware concurrency

  void validate() const {
    if (replications < 1) throw ParameterError("replications R must be >= 1");
    if (designs.empty()) throw ParameterError("design grid is empty");
    if (rhos.empty() && !parent) throw ParameterError("need a rho grid or a parent model");
    for (double rho : rhos)
      if (!(std::abs(rho) < 1.0)) throw ParameterError("rho must satisfy |rho| < 1");
    bandwidth.validate();
    kernel_by_name(kernel);
    const std::size_t dim = rhos.empty() ? parent->dimension() : 2;
    for (const auto& d : designs) {
      Design probe;
      probe.k = d.k;
      probe.m = d.m;
      probe.r = d.r;
      probe.rank_by = dim == 1 ? 0 : rank_by;
      probe.validate(dim);
    }
    if (target.empty()) throw ParameterError("target coordinates are empty");
    for (std::size_t c : target)
      if (c >= dim) throw ParameterError("target coordinate out of range");
    if (estimator != Estimator::Entropy && dim < 2) throw ParameterError("MI and KL need a bivariate parent");
  }
};

/// Running mean and variance (Welford).
class Running {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  std::optional<double> variance() const {
    if (n_ < 2) return std::nullopt;
    return m2_ / static_cast<double>(n_ - 1);
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0, m2_ = 0.0;
};

struct AggregateRow {
  std::string estimator;
  std::string scheme;  // "RSS", "DRSS", "MRSS", "SRS"
  double rho = 0.0;
  int n = 0, k = 0, m = 0, r = 0;
  std::string kernel;
  double d1 = 0.0;     // 0 when a fixed bandwidth was used
  double truth = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double mse = 0.0;
  std::optional<double> variance;
  std::optional<double> cv_mean, cv_var, mhat_mean, mhat_var;
  int replications = 0;
  int failures = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

inline std::string scheme_name(const DesignCell& d) {
  if (d.srs) return "SRS";
  if (d.r == 1) return "RSS";
  if (d.r == 2) return "DRSS";
  return "MRSS" + std::to_string(d.r);
}

namespace detail {

struct RepResult {
  bool ok = false;
  double value = 0.0;
  double cv = 0.0, mhat = 0.0;
  bool has_diag = false;
};

/// Runs body(rep) for rep in [0, count) on a worker pool. Each rep writes
/// only its own slot, so the outcome does not depend on the worker count.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
  unsigned w = workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : workers;
  w = static_cast<unsigned>(std::min<std::size_t>(w, count));
  if (w <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < w; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  for (auto& th : pool) th.join();
}

inline ParentModel cell_parent(const ExperimentSpec& spec, std::size_t rho_index) {
  if (spec.rhos.empty()) return *spec.parent;
  return BivariateNormal{spec.rhos[rho_index]};
}

inline double truth_of(const ExperimentSpec& spec, const ParentModel& parent) {
  if (const auto* b = parent.bivariate()) {
    switch (spec.estimator) {
      case Estimator::Entropy: return spec.target.size() == 1 ? b->marginal().entropy() : b->joint_entropy();
      case Estimator::MI: return b->mutual_information();
      case Estimator::StdMI: return b->rho * b->rho;
      case Estimator::KL: return 0.0;  // both marginals are N(0, 1)
    }
  }
  return parent.univariate()->entropy();
}

inline RankedSetSample draw_cell(const ParentModel& parent, const DesignCell& d, std::size_t rank_by,
                                 std::uint64_t seed) {
  if (d.srs) return draw_srs(PopulationSource{parent}, static_cast<std::size_t>(d.k * d.m), seed);
  Design design;
  design.k = d.k;
  design.m = d.m;
  design.r = d.r;
  design.rank_by = parent.dimension() == 1 ? 0 : rank_by;
  return draw_mrss(PopulationSource{parent}, design, seed);
}

inline double cell_d1(const ExperimentSpec& spec, const DesignCell& d, double rho) {
  if (!spec.table_d1) return spec.bandwidth.d1;
  const int r = d.srs ? 1 : d.r;
  if (spec.estimator == Estimator::Entropy) return table_entropy_d1(r, d.k, static_cast<int>(spec.target.size()), rho);
  return table_mi_d1(r, d.k, rho);
}

/// One estimate at bandwidth rule constant d1 (or the spec's policy).
inline RepResult estimate_once(const ExperimentSpec& spec, const KernelSpec& kernel, const RankedSetSample& s,
                               const BandwidthPolicy& policy) {
  RepResult out;
  if (spec.estimator == Estimator::Entropy) {
    const auto proj = s.project(spec.target);
    const double gamma = resolve_bandwidth(proj, kernel, policy);
    const EntropyAnalysis an(proj, kernel, gamma, SupportSpec::all_points());
    out.value = an.entropy();
    if (spec.diagnostics && proj.m() >= 2) {
      const auto est = mse_from(an, proj.size());
      out.cv = est.cv;
      out.mhat = est.mse;
      out.has_diag = true;
    }
  } else if (spec.estimator == Estimator::KL) {
    const std::size_t c0[] = {0}, c1[] = {1};
    const auto a = s.project(c0), b = s.project(c1);
    const double gamma = resolve_bandwidth(a, kernel, policy);
    out.value = kl_divergence(a, b, kernel, gamma);
  } else {
    const std::size_t first[] = {0}, second[] = {1};
    const double gamma = resolve_bandwidth(s, kernel, policy);
    const auto rep = mutual_information(s, first, second, kernel, gamma);
    out.value = spec.estimator == Estimator::MI ? rep.I_hat : rep.I_std;
  }
  out.ok = std::isfinite(out.value);
  return out;
}

inline void check_failures(int failures, int R) {
  if (static_cast<double>(failures) > 0.01 * R)
    throw NumericalError(std::to_string(failures) + " of " + std::to_string(R) +
                             " replications failed (more than 1%)",
                         static_cast<double>(failures) / R);
}

}  // namespace detail

/// For every (rho, design) cell: R replications of draw -> estimate ->
/// diagnostics, reduced in replication order. Replication (cell c, rep i)
/// uses seed derive_seed(seed, {c, i}).
inline std::vector<AggregateRow> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const KernelSpec kernel = kernel_by_name(spec.kernel);
  const std::size_t nrho = spec.rhos.empty() ? 1 : spec.rhos.size();
  std::vector<AggregateRow> rows;
  std::uint64_t cell = 0;
  for (std::size_t ri = 0; ri < nrho; ++ri) {
    const ParentModel parent = detail::cell_parent(spec, ri);
    const double rho = parent.bivariate() ? parent.bivariate()->rho : 0.0;
    const double truth = detail::truth_of(spec, parent);
    for (const auto& d : spec.designs) {
      const auto t0 = std::chrono::steady_clock::now();
      BandwidthPolicy policy = spec.bandwidth;
      policy.d1 = detail::cell_d1(spec, d, rho);
      const auto R = static_cast<std::size_t>(spec.replications);
      std::vector<detail::RepResult> res(R);
      detail::parallel_for(R, spec.workers, [&](std::size_t i) {
        try {
          const auto s = detail::draw_cell(parent, d, spec.rank_by, derive_seed(spec.seed, {cell, i}));
          res[i] = detail::estimate_once(spec, kernel, s, policy);
        } catch (const Error&) {
          res[i] = {};
        }
      });
      Running est, sq, cv, mh;
      int failures = 0;
      for (const auto& x : res) {
        if (!x.ok) {
          ++failures;
          continue;
        }
        est.add(x.value);
        sq.add((x.value - truth) * (x.value - truth));
        if (x.has_diag) {
          cv.add(x.cv);
          mh.add(x.mhat);
        }
      }
      detail::check_failures(failures, spec.replications);
      AggregateRow row;
      row.estimator = to_string(spec.estimator);
      row.scheme = scheme_name(d);
      row.rho = rho;
      row.k = d.srs ? 1 : d.k;
      row.m = d.srs ? d.k * d.m : d.m;
      row.n = d.k * d.m;
      row.r = d.srs ? 1 : d.r;
      row.kernel = kernel.name();
      row.d1 = policy.mode == BandwidthPolicy::Mode::Fixed ? 0.0 : policy.d1;
      row.truth = truth;
      row.mean = est.mean();
      row.bias = est.mean() - truth;
      row.mse = sq.mean();
      row.variance = est.variance();
      if (cv.count() > 0) {
        row.cv_mean = cv.mean();
        row.cv_var = cv.variance();
        row.mhat_mean = mh.mean();
        row.mhat_var = mh.variance();
      }
      row.replications = spec.replications;
      row.failures = failures;
      row.seed = spec.seed;
      row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rows.push_back(std::move(row));
      ++cell;
    }
  }
  return rows;
}

inline std::vector<double> d1_grid(double lo = 0.5, double hi = 2.0, double step = 0.05) {
  std::vector<double> g;
  const long count = std::lround((hi - lo) / step);
  for (long i = 0; i <= count; ++i) g.push_back(std::round((lo + step * static_cast<double>(i)) * 1e6) / 1e6);
  return g;
}

struct TuneResult {
  double rho = 0.0;
  DesignCell design;
  double best_d1 = 0.0;
  std::vector<double> grid;
  std::vector<double> mse;  // simulated MSE per grid point
  int failures = 0;
};

/// Per cell, the grid d1 with the smallest simulated MSE (ties -> smaller d1).
/// Every grid point sees the same R samples.
inline std::vector<TuneResult> tune_d1(const ExperimentSpec& spec, const std::vector<double>& grid = d1_grid()) {
  spec.validate();
  if (grid.empty()) throw ParameterError("d1 grid is empty");
  for (double g : grid)
    if (!(g > 0.0)) throw ParameterError("d1 grid values must be > 0");
  const KernelSpec kernel = kernel_by_name(spec.kernel);
  const std::size_t nrho = spec.rhos.empty() ? 1 : spec.rhos.size();
  const auto R = static_cast<std::size_t>(spec.replications);
  std::vector<TuneResult> out;
  std::uint64_t cell = 0;
  for (std::size_t ri = 0; ri < nrho; ++ri) {
    const ParentModel parent = detail::cell_parent(spec, ri);
    const double truth = detail::truth_of(spec, parent);
    ExperimentSpec quiet = spec;
    quiet.diagnostics = false;
    for (const auto& d : spec.designs) {
      std::vector<double> err(R * grid.size(), 0.0);
      std::vector<char> ok(R, 1);
      detail::parallel_for(R, spec.workers, [&](std::size_t i) {
        try {
          const auto s = detail::draw_cell(parent, d, spec.rank_by, derive_seed(spec.seed, {cell, i}));
          for (std::size_t g = 0; g < grid.size(); ++g) {
            const auto v = detail::estimate_once(quiet, kernel, s, BandwidthPolicy::rule(grid[g]));
            if (!v.ok) throw NumericalError("non-finite estimate", v.value);
            err[i * grid.size() + g] = (v.value - truth) * (v.value - truth);
          }
        } catch (const Error&) {
          ok[i] = 0;
        }
      });
      TuneResult tr;
      tr.rho = parent.bivariate() ? parent.bivariate()->rho : 0.0;
      tr.design = d;
      tr.grid = grid;
      tr.failures = static_cast<int>(std::count(ok.begin(), ok.end(), 0));
      detail::check_failures(tr.failures, spec.replications);
      tr.mse.assign(grid.size(), 0.0);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        Running acc;
        for (std::size_t i = 0; i < R; ++i)
          if (ok[i]) acc.add(err[i * grid.size() + g]);
        tr.mse[g] = acc.mean();
      }
      std::size_t best = 0;
      for (std::size_t g = 1; g < grid.size(); ++g)
        if (tr.mse[g] < tr.mse[best] || (tr.mse[g] == tr.mse[best] && grid[g] < grid[best])) best = g;
      tr.best_d1 = grid[best];
      out.push_back(std::move(tr));
      ++cell;
    }
  }
  return out;
}

struct PopulationStudySpec {
  std::string rank_column;
  std::string x_column;  // entropy target, also the first MI coordinate
  std::string y_column;  // second MI coordinate
  int k = 3;
  int m = 10;
  std::string kernel = "gaussian";
  double d1 = 1.0;  // bandwidth rule constant for samples and population
  int replications = 2000;
  std::uint64_t seed = 1;
  unsigned workers = 0;
};

struct PopulationTargets {
  double H = 0.0, I = 0.0, I_std = 0.0;
  double gamma_H = 0.0, gamma_I = 0.0;
  std::size_t N = 0;
};

struct PopulationStudyRow {
  std::string scheme;
  std::string quantity;  // "H", "I", "I_std"
  double target = 0.0;
  double mean = 0.0, bias = 0.0, mse = 0.0;
  int replications = 0, failures = 0;
};

/// Plug-in targets over the whole population, bandwidth rule at n = N.
inline PopulationTargets population_targets(const FinitePopulation& pop, const PopulationStudySpec& spec) {
  const KernelSpec kernel = kernel_by_name(spec.kernel);
  const std::size_t xi = pop.column_index(spec.x_column), yi = pop.column_index(spec.y_column);
  PopulationTargets t;
  t.N = pop.size();
  const std::size_t cx[] = {xi}, cxy[] = {xi, yi};
  const PointSet px = pop.rows.project(cx), pxy = pop.rows.project(cxy);
  t.gamma_H = bandwidth_rule(px, spec.d1);
  t.H = entropy_population(px, kernel, t.gamma_H);
  t.gamma_I = bandwidth_rule(pxy, spec.d1);
  const std::size_t first[] = {0}, second[] = {1};
  const auto mi = mutual_information(RankedSetSample::simple(pxy), first, second, kernel, t.gamma_I);
  t.I = mi.I_hat;
  t.I_std = mi.I_std;
  return t;
}

/// Resampling (with replacement) study of H, I and I_std under RSS, DRSS and
/// SRS of size k*m, ranked by rank_column.
inline std::vector<PopulationStudyRow> finite_population_study(const FinitePopulation& pop,
                                                               const PopulationStudySpec& spec) {
  if (spec.replications < 1) throw ParameterError("replications R must be >= 1");
  if (pop.size() == 0) throw SizeError("population is empty");
  const KernelSpec kernel = kernel_by_name(spec.kernel);
  const std::size_t xi = pop.column_index(spec.x_column), yi = pop.column_index(spec.y_column);
  const std::size_t rk = pop.column_index(spec.rank_column);
  const PopulationTargets t = population_targets(pop, spec);
  const PopulationSource src{pop};
  const auto R = static_cast<std::size_t>(spec.replications);
  std::vector<PopulationStudyRow> rows;
  const std::pair<const char*, int> schemes[] = {{"RSS", 1}, {"DRSS", 2}, {"SRS", 0}};
  std::uint64_t cell = 0;
  for (const auto& [name, r] : schemes) {
    std::vector<std::array<double, 3>> vals(R);
    std::vector<char> ok(R, 1);
    detail::parallel_for(R, spec.workers, [&](std::size_t i) {
      try {
        const std::uint64_t seed = derive_seed(spec.seed, {cell, i});
        RankedSetSample s = [&] {
          if (r == 0) return draw_srs(src, static_cast<std::size_t>(spec.k * spec.m), seed);
          Design d;
          d.k = spec.k;
          d.m = spec.m;
          d.r = r;
          d.rank_by = rk;
          return draw_mrss(src, d, seed);
        }();
        const std::size_t cx[] = {xi}, cxy[] = {xi, yi};
        const auto sx = s.project(cx), sxy = s.project(cxy);
        const double H = entropy_rss(sx, kernel, bandwidth_rule(sx, spec.d1));
        const std::size_t first[] = {0}, second[] = {1};
        const auto mi = mutual_information(sxy, first, second, kernel, bandwidth_rule(sxy, spec.d1));
        vals[i] = {H, mi.I_hat, mi.I_std};
      } catch (const Error&) {
        ok[i] = 0;
      }
    });
    const int failures = static_cast<int>(std::count(ok.begin(), ok.end(), 0));
    detail::check_failures(failures, spec.replications);
    const double targets[] = {t.H, t.I, t.I_std};
    const char* names[] = {"H", "I", "I_std"};
    for (std::size_t q = 0; q < 3; ++q) {
      Running est, sq;
      for (std::size_t i = 0; i < R; ++i)
        if (ok[i]) {
          est.add(vals[i][q]);
          sq.add((vals[i][q] - targets[q]) * (vals[i][q] - targets[q]));
        }
      rows.push_back({name, names[q], targets[q], est.mean(), est.mean() - targets[q], sq.mean(), spec.replications,
                      failures});
    }
    ++cell;
  }
  return rows;
}

// ---- spec files and tables ----

/// Experiment spec from JSON. Keys (all optional): designs [[k,m,r],...],
/// srs (bool, adds an SRS row per design), rhos, parent {"normal":[mu,sd]} or
/// {"uniform":[lo,hi]}, kernel, d1, gamma, table_d1, estimator, target,
/// rank_by, replications, seed, diagnostics, workers.
inline ExperimentSpec experiment_from_json(const nlohmann::json& j) {
  ExperimentSpec s;
  try {
    if (j.contains("designs")) {
      s.designs.clear();
      for (const auto& d : j.at("designs")) {
        if (!d.is_array() || d.size() != 3) throw ConfigurationError("each design must be [k, m, r]");
        s.designs.push_back({d[0].get<int>(), d[1].get<int>(), d[2].get<int>(), false});
      }
    }
    if (j.value("srs", false)) {
      const auto base = s.designs;
      for (auto d : base) {
        d.srs = true;
        s.designs.push_back(d);
      }
    }
    if (j.contains("rhos")) s.rhos = j.at("rhos").get<std::vector<double>>();
    if (j.contains("parent")) {
      const auto& p = j.at("parent");
      s.rhos.clear();
      if (p.contains("normal")) {
        const auto v = p.at("normal").get<std::vector<double>>();
        if (v.size() != 2) throw ConfigurationError("parent.normal needs [mean, sd]");
        s.parent = ParentModel(Normal{v[0], v[1]});
      } else if (p.contains("uniform")) {
        const auto v = p.at("uniform").get<std::vector<double>>();
        if (v.size() != 2) throw ConfigurationError("parent.uniform needs [lo, hi]");
        s.parent = ParentModel(Uniform{v[0], v[1]});
      } else if (p.contains("bivariate_normal")) {
        s.rhos = {p.at("bivariate_normal").get<double>()};
      } else {
        throw ConfigurationError("parent must be normal, uniform or bivariate_normal");
      }
    }
    s.kernel = j.value("kernel", s.kernel);
    if (j.contains("gamma")) s.bandwidth = BandwidthPolicy::fixed(j.at("gamma").get<double>());
    if (j.contains("d1")) s.bandwidth = BandwidthPolicy::rule(j.at("d1").get<double>());
    s.table_d1 = j.value("table_d1", false);
    if (j.contains("estimator")) s.estimator = estimator_by_name(j.at("estimator").get<std::string>());
    if (j.contains("target")) s.target = j.at("target").get<std::vector<std::size_t>>();
    s.rank_by = j.value("rank_by", s.rank_by);
    s.replications = j.value("replications", s.replications);
    s.seed = j.value("seed", s.seed);
    s.diagnostics = j.value("diagnostics", s.diagnostics);
    s.workers = j.value("workers", s.workers);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("bad experiment spec: ") + e.what());
  }
  s.validate();
  return s;
}

inline ExperimentSpec read_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError("'" + path + "' is not valid JSON: " + e.what());
  }
  return experiment_from_json(j);
}

namespace detail {
inline std::ostringstream classic_stream() {
  std::ostringstream o;
  o.imbue(std::locale::classic());
  o << std::setprecision(10);
  return o;
}
inline void put_opt(std::ostream& o, const std::optional<double>& v) {
  if (v) o << *v;
  else o << "NA";
}
}  // namespace detail

/// Aggregate layout plus config echo, R and seed. Undefined variances
/// (R = 1) are written as NA.
inline void write_rows_csv(std::ostream& out, const std::vector<AggregateRow>& rows, bool timing = false) {
  auto o = detail::classic_stream();
  o << "estimator,scheme,rho,n,k,m,r,kernel,d1,truth,mean,bias,mse,variance,cv_mean,cv_var,mhat_mean,mhat_var,"
       "replications,failures,seed";
  if (timing) o << ",wall_seconds";
  o << '\n';
  for (const auto& r : rows) {
    o << r.estimator << ',' << r.scheme << ',' << r.rho << ',' << r.n << ',' << r.k << ',' << r.m << ',' << r.r << ','
      << r.kernel << ',' << r.d1 << ',' << r.truth << ',' << r.mean << ',' << r.bias << ',' << r.mse << ',';
    detail::put_opt(o, r.variance);
    o << ',';
    detail::put_opt(o, r.cv_mean);
    o << ',';
    detail::put_opt(o, r.cv_var);
    o << ',';
    detail::put_opt(o, r.mhat_mean);
    o << ',';
    detail::put_opt(o, r.mhat_var);
    o << ',' << r.replications << ',' << r.failures << ',' << r.seed;
    if (timing) o << ',' << r.wall_seconds;
    o << '\n';
  }
  out << o.str();
}

inline void write_tune_csv(std::ostream& out, const std::vector<TuneResult>& rows) {
  auto o = detail::classic_stream();
  o << "rho,k,m,r,scheme,best_d1";
  if (!rows.empty())
    for (double g : rows.front().grid) o << ",mse_" << g;
  o << '\n';
  for (const auto& t : rows) {
    o << t.rho << ',' << t.design.k << ',' << t.design.m << ',' << t.design.r << ',' << scheme_name(t.design) << ','
      << t.best_d1;
    for (double v : t.mse) o << ',' << v;
    o << '\n';
  }
  out << o.str();
}

inline void write_population_csv(std::ostream& out, const PopulationTargets& t,
                                 const std::vector<PopulationStudyRow>& rows) {
  auto o = detail::classic_stream();
  o << "# N=" << t.N << " H_N=" << t.H << " I_N=" << t.I << " I_std_N=" << t.I_std << '\n';
  o << "scheme,quantity,target,mean,bias,mse,replications,failures\n";
  for (const auto& r : rows)
    o << r.scheme << ',' << r.quantity << ',' << r.target << ',' << r.mean << ',' << r.bias << ',' << r.mse << ','
      << r.replications << ',' << r.failures << '\n';
  out << o.str();
}

}  // namespace rsse::sim
