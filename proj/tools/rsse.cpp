#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rsse/rsse.hpp"

namespace {

using nlohmann::ordered_json;

// Thrown for flag combinations CLI11 cannot express; maps to exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rsse::IngestionError("cannot write '" + path + "'");
  out << text;
}

void emit_json(const ordered_json& j, const std::string& path) { emit(j.dump(2) + "\n", path); }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::size_t index_of(const std::vector<std::string>& cols, const std::string& name) {
  for (std::size_t i = 0; i < cols.size(); ++i)
    if (cols[i] == name) return i;
  throw rsse::IngestionError("missing column '" + name + "'");
}

rsse::KernelSpec pick_kernel(const std::string& name, std::size_t dim) {
  if (name == "joe") {
    if (dim < 1 || dim > 4) throw rsse::ParameterError("joe kernel needs dimension 1..4");
    return rsse::piecewise_joe(static_cast<int>(dim));
  }
  return rsse::kernel_by_name(name);
}

rsse::ParentModel parse_parent(const std::string& s) {
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  std::vector<double> v;
  if (colon != std::string::npos)
    for (const auto& t : split_list(s.substr(colon + 1))) v.push_back(rsse::csv::detail::parse_number(t, 0, 0));
  if (kind == "normal" && v.size() == 2) return rsse::Normal{v[0], v[1]};
  if (kind == "uniform" && v.size() == 2) return rsse::Uniform{v[0], v[1]};
  if (kind == "bvn" && v.size() == 1) return rsse::BivariateNormal{v[0]};
  throw UsageError("--parent must be normal:MEAN,SD, uniform:LO,HI or bvn:RHO");
}

const CLI::Validator Positive(
    [](std::string& v) -> std::string {
      double x = 0.0;
      try {
        x = std::stod(v);
      } catch (...) {
        return "must be a number";
      }
      return x > 0.0 ? std::string() : "must be > 0";
    },
    "POSITIVE");

// Bandwidth and support flags shared by the estimation subcommands.
struct Smoothing {
  double gamma = 0.0;
  double d1 = 1.0;
  std::string cv_grid;
  bool cv = false;
  std::vector<double> support_lo, support_hi;
  double density_floor = 0.0;

  void add(CLI::App* app) {
    app->add_option("--gamma", gamma, "fixed bandwidth")->check(Positive);
    app->add_option("--d1", d1, "bandwidth rule constant")->check(Positive);
    app->add_option("--cv-grid", cv_grid, "comma-separated bandwidths; pick by CV");
    app->add_flag("--cv", cv, "pick the bandwidth by CV on a default grid around the rule value");
    app->add_option("--support-lo", support_lo, "rectangle support lower corner")->delimiter(',');
    app->add_option("--support-hi", support_hi, "rectangle support upper corner")->delimiter(',');
    app->add_option("--density-floor", density_floor, "support = {x: f_n(x) > eps}")->check(Positive);
  }

  rsse::BandwidthPolicy policy() const {
    if (gamma > 0.0) return rsse::BandwidthPolicy::fixed(gamma);
    if (!cv_grid.empty()) {
      std::vector<double> g;
      for (const auto& t : split_list(cv_grid)) g.push_back(rsse::csv::detail::parse_number(t, 0, 0));
      auto p = rsse::BandwidthPolicy::cv(g, d1);
      p.validate();
      return p;
    }
    if (cv) return rsse::BandwidthPolicy::cv({}, d1);
    return rsse::BandwidthPolicy::rule(d1);
  }

  rsse::SupportSpec support() const {
    if (density_floor > 0.0) {
      if (!support_lo.empty() || !support_hi.empty()) throw UsageError("choose a rectangle or a density floor, not both");
      return rsse::SupportSpec::density_floor(density_floor);
    }
    if (support_lo.empty() && support_hi.empty()) return rsse::SupportSpec::all_points();
    return rsse::SupportSpec::rectangle(support_lo, support_hi);
  }
};

std::vector<std::string> opt_columns(const std::string& s) { return s.empty() ? std::vector<std::string>{} : split_list(s); }

int run(int argc, char** argv) {
  CLI::App app{"Ranked set sampling entropy, mutual information and divergence estimation"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  bool dry = false;
  std::string out;
  app.add_flag("--dry-run", dry, "validate flags and inputs without computing")->configurable(false);
  app.add_option("-o,--out", out, "output path (default stdout)");

  // sample
  auto* c_sample = app.add_subcommand("sample", "draw a ranked set sample (writes CSV)");
  std::string parent = "normal:0,1", population, pop_columns;
  int k = 3, m = 10, r = 1;
  std::size_t rank_by = 0;
  std::uint64_t seed = 1;
  bool srs = false, without_replacement = false;
  double noise = 0.0;
  c_sample->add_option("--parent", parent, "normal:MEAN,SD | uniform:LO,HI | bvn:RHO");
  c_sample->add_option("--population", population, "draw from a population CSV instead");
  c_sample->add_option("--columns", pop_columns, "population columns to keep");
  c_sample->add_option("-k", k, "set size")->check(Positive);
  c_sample->add_option("-m", m, "cycles")->check(Positive);
  c_sample->add_option("-r", r, "stages (1 = RSS, 2 = DRSS)")->check(Positive);
  c_sample->add_option("--rank-by", rank_by, "ranking coordinate (0-based)");
  c_sample->add_option("--seed", seed);
  c_sample->add_flag("--srs", srs, "simple random sample of size k*m");
  c_sample->add_flag("--without-replacement", without_replacement, "finite population without replacement");
  c_sample->add_option("--ranking-noise", noise, "sd of additive noise on the ranking key")->check(CLI::NonNegativeNumber);

  // entropy
  auto* c_entropy = app.add_subcommand("entropy", "entropy of a ranked set sample (JSON)");
  std::string input, columns, kernel = "gaussian";
  Smoothing sm;
  c_entropy->add_option("-i,--input", input, "sample CSV (cycle,rank,values...)")->required();
  c_entropy->add_option("--columns", columns, "value columns to use");
  c_entropy->add_option("--kernel", kernel, "gaussian | joe | joe1..joe4");
  c_entropy->add_option("-r", r, "stages the sample was drawn with")->check(Positive);
  sm.add(c_entropy);

  // mi
  auto* c_mi = app.add_subcommand("mi", "mutual information between column blocks (JSON)");
  std::string first, second;
  c_mi->add_option("-i,--input", input, "sample CSV")->required();
  c_mi->add_option("--first", first, "first block columns")->required();
  c_mi->add_option("--second", second, "second block columns")->required();
  c_mi->add_option("--kernel", kernel, "gaussian | joe | joe1..joe4");
  c_mi->add_option("-r", r, "stages the sample was drawn with")->check(Positive);
  sm.add(c_mi);

  // kl
  auto* c_kl = app.add_subcommand("kl", "KL divergence estimate between two samples (JSON)");
  std::string input2;
  c_kl->add_option("-i,--input", input, "first sample CSV")->required();
  c_kl->add_option("--input2", input2, "second sample CSV (default: same file)");
  c_kl->add_option("--columns", columns, "first sample columns");
  std::string columns2;
  c_kl->add_option("--columns2", columns2, "second sample columns (default: same)");
  c_kl->add_option("--kernel", kernel, "gaussian | joe | joe1..joe4");
  c_kl->add_option("--gamma", sm.gamma, "fixed bandwidth")->check(Positive);
  c_kl->add_option("--d1", sm.d1, "rule constant (applied to the first sample)")->check(Positive);

  // select-vars
  auto* c_sel = app.add_subcommand("select-vars", "rank variable subsets by standardized MI with a target (JSON)");
  std::string candidates, target;
  std::size_t subset_size = 2;
  std::string sel_kernel = "joe";
  double sel_d1 = 0.6;
  c_sel->add_option("-i,--input", input, "sample CSV")->required();
  c_sel->add_option("--candidates", candidates, "candidate columns")->required();
  c_sel->add_option("--target", target, "target column")->required();
  c_sel->add_option("--subset-size", subset_size)->check(Positive);
  c_sel->add_option("--kernel", sel_kernel, "gaussian | joe (by joint dimension) | joe1..joe4");
  c_sel->add_option("--d1", sel_d1)->check(Positive);
  c_sel->add_option("-r", r, "stages the sample was drawn with")->check(Positive);

  // simulate
  auto* c_sim = app.add_subcommand("simulate", "Monte Carlo experiment (CSV)");
  std::string spec_path;
  unsigned workers = 0;
  bool timing = false;
  int reps = 0;
  std::string rank_col, x_col, y_col;
  c_sim->add_option("--spec", spec_path, "experiment spec JSON");
  c_sim->add_option("--workers", workers, "worker threads (0 = all cores)");
  c_sim->add_option("--replications", reps, "override R")->check(Positive);
  c_sim->add_option("--seed", seed);
  c_sim->add_flag("--timing", timing, "append wall-time column");
  c_sim->add_option("--population", population, "finite population study on this CSV");
  c_sim->add_option("--rank-column", rank_col);
  c_sim->add_option("--x", x_col, "entropy column / first MI column");
  c_sim->add_option("--y", y_col, "second MI column");
  c_sim->add_option("-k", k)->check(Positive);
  c_sim->add_option("-m", m)->check(Positive);
  c_sim->add_option("--kernel", kernel);
  c_sim->add_option("--d1", sm.d1)->check(Positive);

  // tune-d1
  auto* c_tune = app.add_subcommand("tune-d1", "best d1 per cell on a grid (CSV)");
  double lo = 0.5, hi = 2.0, step = 0.05;
  c_tune->add_option("--spec", spec_path, "experiment spec JSON")->required();
  c_tune->add_option("--workers", workers);
  c_tune->add_option("--replications", reps)->check(Positive);
  c_tune->add_option("--seed", seed);
  c_tune->add_option("--lo", lo)->check(Positive);
  c_tune->add_option("--hi", hi)->check(Positive);
  c_tune->add_option("--step", step)->check(Positive);

  // re-approx
  auto* c_re = app.add_subcommand("re-approx", "approximate relative efficiency vs SRS (CSV)");
  double rho = 0.9, n = 30, c_rss = 0.0, c_srs = 0.0, tol = 1e-6;
  bool table = false;
  c_re->add_option("--rho", rho);
  c_re->add_option("-k", k)->check(Positive);
  c_re->add_option("-r", r)->check(Positive);
  c_re->add_option("-n", n)->check(Positive);
  c_re->add_option("--c-rss", c_rss, "gamma = c n^-0.4 for the ranked design (default: reference value)");
  c_re->add_option("--c-srs", c_srs, "gamma = c n^-0.4 for SRS (default: reference value)");
  c_re->add_option("--kernel", kernel);
  c_re->add_option("--tol", tol)->check(Positive);
  c_re->add_flag("--table", table, "all 24 reference cells");

  // population-entropy
  auto* c_pop = app.add_subcommand("population-entropy", "plug-in entropy (and MI) of a whole population (JSON)");
  c_pop->add_option("--population", population, "population CSV")->required();
  c_pop->add_option("--columns", columns, "one column (entropy) or two (entropy of the first, MI)")->required();
  c_pop->add_option("--kernel", kernel);
  c_pop->add_option("--gamma", sm.gamma)->check(Positive);
  c_pop->add_option("--d1", sm.d1)->check(Positive);


  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  auto done_dry = [&](ordered_json info) {
    info["dry_run"] = true;
    emit_json(info, "");
    return 0;
  };

  if (c_sample->parsed()) {
    rsse::PopulationSource src = rsse::ParentModel(rsse::Normal{});
    std::vector<std::string> names;
    if (!population.empty()) {
      auto pop = rsse::csv::read_population(population, opt_columns(pop_columns));
      names = pop.columns;
      src = std::move(pop);
    } else {
      src = parse_parent(parent);
    }
    rsse::Design d;
    d.k = k;
    d.m = m;
    d.r = r;
    d.rank_by = rank_by;
    d.replacement = !without_replacement;
    d.ranking_noise_sd = noise;
    d.validate(rsse::source_dim(src));
    if (dry) return done_dry({{"subcommand", "sample"}, {"n", d.n()}});
    const auto s = srs ? rsse::draw_srs(src, d.n(), seed, d.replacement) : rsse::draw_mrss(src, d, seed);
    std::ostringstream o;
    rsse::csv::write_sample(o, s, names);
    emit(o.str(), out);
    return 0;
  }

  if (c_entropy->parsed()) {
    const auto tab = rsse::csv::read_sample(input, opt_columns(columns), r);
    const auto kern = pick_kernel(kernel, tab.sample.dim());
    const auto pol = sm.policy();
    pol.validate();
    const auto S = sm.support();
    S.validate(tab.sample.dim());
    if (dry) return done_dry({{"subcommand", "entropy"}, {"n", tab.sample.size()}, {"p", tab.sample.dim()}});
    ordered_json j = rsse::estimate_entropy(tab.sample, kern, pol, S);
    j["columns"] = tab.columns;
    emit_json(j, out);
    return 0;
  }

  if (c_mi->parsed()) {
    const auto a = split_list(first), b = split_list(second);
    std::vector<std::string> all = a;
    all.insert(all.end(), b.begin(), b.end());
    const auto tab = rsse::csv::read_sample(input, all, r);
    std::vector<std::size_t> fi, si;
    for (const auto& x : a) fi.push_back(index_of(all, x));
    for (const auto& x : b) si.push_back(index_of(all, x));
    const auto kern = pick_kernel(kernel, all.size());
    const auto S = sm.support();
    S.validate(all.size());
    if (!sm.cv_grid.empty() || sm.cv) throw UsageError("mi takes --gamma or --d1");
    if (dry) return done_dry({{"subcommand", "mi"}, {"n", tab.sample.size()}, {"p", all.size()}});
    const double g = sm.gamma > 0.0 ? sm.gamma : rsse::bandwidth_rule(tab.sample, sm.d1);
    ordered_json j = rsse::mutual_information(tab.sample, fi, si, kern, g, S);
    j["first"] = a;
    j["second"] = b;
    emit_json(j, out);
    return 0;
  }

  if (c_kl->parsed()) {
    const auto t1 = rsse::csv::read_sample(input, opt_columns(columns));
    const auto cols2 = columns2.empty() ? opt_columns(columns) : opt_columns(columns2);
    const auto t2 = rsse::csv::read_sample(input2.empty() ? input : input2, cols2);
    if (t1.sample.dim() != t2.sample.dim()) throw UsageError("KL samples must have the same number of columns");
    const auto kern = pick_kernel(kernel, t1.sample.dim());
    if (dry) return done_dry({{"subcommand", "kl"}, {"n1", t1.sample.size()}, {"n2", t2.sample.size()}});
    const double g = sm.gamma > 0.0 ? sm.gamma : rsse::bandwidth_rule(t1.sample, sm.d1);
    ordered_json j{{"kl", rsse::kl_divergence(t1.sample, t2.sample, kern, g)},
                   {"gamma", g},
                   {"kernel", kern.name()},
                   {"n1", t1.sample.size()},
                   {"n2", t2.sample.size()}};
    emit_json(j, out);
    return 0;
  }

  if (c_sel->parsed()) {
    const auto cand = split_list(candidates);
    std::vector<std::string> all = cand;
    all.push_back(target);
    const auto tab = rsse::csv::read_sample(input, all, r);
    std::vector<std::size_t> ci(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) ci[i] = i;
    if (subset_size > cand.size()) throw UsageError("--subset-size exceeds the number of candidates");
    const auto kern = pick_kernel(sel_kernel, subset_size + 1);
    if (dry) return done_dry({{"subcommand", "select-vars"}, {"n", tab.sample.size()}});
    const auto scores = rsse::rank_variable_subsets(tab.sample, ci, cand.size(), subset_size, kern, sel_d1);
    ordered_json arr = ordered_json::array();
    for (const auto& s : scores) {
      std::vector<std::string> names;
      for (std::size_t c : s.subset) names.push_back(cand[c]);
      ordered_json e{{"subset", names}, {"I_std", s.report.I_std}};
      e["report"] = s.report;
      arr.push_back(e);
    }
    emit_json({{"target", target}, {"d1", sel_d1}, {"ranking", arr}}, out);
    return 0;
  }

  if (c_sim->parsed()) {
    if (!population.empty()) {
      if (rank_col.empty() || x_col.empty() || y_col.empty())
        throw UsageError("population study needs --rank-column, --x and --y");
      const auto pop = rsse::csv::read_population(population);
      rsse::sim::PopulationStudySpec ps;
      ps.rank_column = rank_col;
      ps.x_column = x_col;
      ps.y_column = y_col;
      ps.k = k;
      ps.m = m;
      ps.kernel = kernel;
      ps.d1 = sm.d1;
      ps.replications = reps > 0 ? reps : 2000;
      ps.seed = seed;
      ps.workers = workers;
      pop.column_index(rank_col);
      pop.column_index(x_col);
      pop.column_index(y_col);
      rsse::kernel_by_name(kernel);
      if (dry) return done_dry({{"subcommand", "simulate"}, {"N", pop.size()}});
      const auto t = rsse::sim::population_targets(pop, ps);
      const auto rows = rsse::sim::finite_population_study(pop, ps);
      std::ostringstream o;
      rsse::sim::write_population_csv(o, t, rows);
      emit(o.str(), out);
      return 0;
    }
    if (spec_path.empty()) throw UsageError("simulate needs --spec or --population");
    auto spec = rsse::sim::read_experiment(spec_path);
    if (reps > 0) spec.replications = reps;
    if (c_sim->count("--seed")) spec.seed = seed;
    spec.workers = workers;
    spec.validate();
    if (dry) return done_dry({{"subcommand", "simulate"}, {"cells", spec.designs.size() * std::max<std::size_t>(1, spec.rhos.size())}});
    std::ostringstream o;
    rsse::sim::write_rows_csv(o, rsse::sim::run_experiment(spec), timing);
    emit(o.str(), out);
    return 0;
  }

  if (c_tune->parsed()) {
    auto spec = rsse::sim::read_experiment(spec_path);
    if (reps > 0) spec.replications = reps;
    if (c_tune->count("--seed")) spec.seed = seed;
    spec.workers = workers;
    if (!(hi >= lo)) throw UsageError("--hi must be >= --lo");
    const auto grid = rsse::sim::d1_grid(lo, hi, step);
    if (dry) return done_dry({{"subcommand", "tune-d1"}, {"grid_points", grid.size()}});
    std::ostringstream o;
    rsse::sim::write_tune_csv(o, rsse::sim::tune_d1(spec, grid));
    emit(o.str(), out);
    return 0;
  }

  if (c_re->parsed()) {
    const auto kern = rsse::kernel_by_name(kernel);
    struct Cell {
      double rho, n;
      int k, r;
      double c_rss, c_srs;
    };
    std::vector<Cell> cells;
    if (table) {
      for (double rr : {0.9, 0.8})
        for (double nn : {15.0, 30.0, 45.0})
          for (int kk : {3, 5})
            for (int st : {1, 2})
              cells.push_back({rr, nn, kk, st, rsse::theory::reference_c(rr, kk, st), rsse::theory::reference_c(rr, 1, 0)});
    } else {
      if (!(std::abs(rho) < 1.0)) throw rsse::ParameterError("rho must satisfy |rho| < 1");
      cells.push_back({rho, n, k, r, c_rss > 0.0 ? c_rss : rsse::theory::reference_c(rho, k, r),
                       c_srs > 0.0 ? c_srs : rsse::theory::reference_c(rho, 1, 0)});
    }
    if (dry) return done_dry({{"subcommand", "re-approx"}, {"cells", cells.size()}});
    std::ostringstream o;
    o.imbue(std::locale::classic());
    o << std::setprecision(8) << "rho,n,k,r,c_rss,c_srs,gamma_rss,gamma_srs,re,mse_rss,mse_srs,alpha1,alpha2,beta1,beta2,H_gamma,H\n";
    for (const auto& c : cells) {
      rsse::theory::TheoryConfig cfg;
      cfg.parent = rsse::BivariateNormal{c.rho};
      cfg.k = c.k;
      cfg.r = c.r;
      cfg.kernel = kern;
      cfg.tol = tol;
      const double gr = c.c_rss * std::pow(c.n, -0.4), gs = c.c_srs * std::pow(c.n, -0.4);
      const auto e = rsse::theory::relative_efficiency(cfg, c.n, gr, gs);
      o << c.rho << ',' << c.n << ',' << c.k << ',' << c.r << ',' << c.c_rss << ',' << c.c_srs << ',' << gr << ',' << gs
        << ',' << e.re << ',' << e.mse_rss << ',' << e.mse_srs << ',' << e.rss.alpha1 << ',' << e.rss.alpha2 << ','
        << e.srs.beta1 << ',' << e.srs.beta2 << ',' << e.rss.H_gamma << ',' << e.rss.H << '\n';
    }
    emit(o.str(), out);
    return 0;
  }

  if (c_pop->parsed()) {
    const auto names = split_list(columns);
    if (names.empty() || names.size() > 2) throw UsageError("--columns takes one or two columns");
    const auto pop = rsse::csv::read_population(population, names);
    const auto kern = pick_kernel(kernel, names.size());
    if (dry) return done_dry({{"subcommand", "population-entropy"}, {"N", pop.size()}});
    const std::size_t c0[] = {0};
    const auto px = pop.rows.project(c0);
    const auto kx = pick_kernel(kernel, 1);
    const double gx = sm.gamma > 0.0 ? sm.gamma : rsse::bandwidth_rule(px, sm.d1);
    ordered_json j{{"N", pop.size()}, {"column", names[0]}, {"H", rsse::entropy_population(px, kx, gx)}, {"gamma_H", gx}};
    if (names.size() == 2) {
      const double gj = sm.gamma > 0.0 ? sm.gamma : rsse::bandwidth_rule(pop.rows, sm.d1);
      const std::size_t f[] = {0}, s[] = {1};
      const auto mi = rsse::mutual_information(rsse::RankedSetSample::simple(pop.rows), f, s, kern, gj);
      j["second_column"] = names[1];
      j["I"] = mi.I_hat;
      j["I_std"] = mi.I_std;
      j["gamma_I"] = gj;
    }
    emit_json(j, out);
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rsse::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rsse::IngestionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rsse::ConfigurationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
