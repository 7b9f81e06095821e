#include "autoten/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "autoten/cp_apr.hpp"
#include "autoten/cp_nmu.hpp"
#include "autoten/errors.hpp"
#include "autoten/log.hpp"
#include "autoten/parallel.hpp"
#include "autoten/seed.hpp"

namespace autoten {

int baseline_stop_rank(std::span<const double> values, double eps, bool higher_is_better,
                       Improvement improvement) {
  if (values.empty()) throw InputError("baseline_stop_rank: no values");
  for (std::size_t f = 1; f < values.size(); ++f) {
    const double prev = values[f - 1];
    double gain = higher_is_better ? values[f] - prev : prev - values[f];
    if (improvement == Improvement::Relative && prev != 0.0) gain /= std::abs(prev);
    if (!(gain > eps)) return static_cast<int>(f);
  }
  return static_cast<int>(values.size());
}

namespace {

template <class Fit>
int lazy_baseline(int f_max, double eps, bool higher_is_better, Improvement improvement, Fit&& fit_at) {
  if (f_max < 2) throw InputError("fmax must be >= 2");
  std::vector<double> values{fit_at(1)};
  for (int f = 2; f <= f_max; ++f) {
    values.push_back(fit_at(f));
    if (baseline_stop_rank(values, eps, higher_is_better, improvement) < f) return f - 1;
  }
  return f_max;
}

CpResult baseline_fit(const SparseTensor3& t, Loss loss, int f, const SolverConfig& base,
                      std::size_t restarts, std::uint64_t seed) {
  SolverConfig sc = base;
  sc.rank = static_cast<std::size_t>(f);
  sc.seed = cell_seed(seed, loss, f);
  return loss == Loss::Fro ? cp_nmu_fit_best(t, sc, restarts) : cp_apr_fit_best(t, sc, restarts);
}

}  // namespace

int baseline2(const SparseTensor3& t, int f_max, double eps, const BaselineConfig& cfg) {
  return lazy_baseline(f_max, eps, false, cfg.improvement, [&](int f) {
    return baseline_fit(t, Loss::Fro, f, cfg.nmu, cfg.restarts, cfg.seed).objective;
  });
}

int baseline3(const SparseTensor3& t, int f_max, double eps, const BaselineConfig& cfg) {
  const SparseTensor3 counts = t.is_nonnegative() ? t : clamp_nonnegative(t);
  return lazy_baseline(f_max, eps, true, cfg.improvement, [&](int f) {
    return baseline_fit(counts, Loss::Kl, f, cfg.apr, cfg.restarts, cfg.seed).objective;
  });
}

double sign_test_p(std::span<const int> errors_a, std::span<const int> errors_b) {
  if (errors_a.size() != errors_b.size()) throw DimensionError("sign_test_p: unpaired samples");
  std::size_t wins = 0, losses = 0;
  for (std::size_t n = 0; n < errors_a.size(); ++n) {
    if (errors_a[n] < errors_b[n]) ++wins;
    if (errors_a[n] > errors_b[n]) ++losses;
  }
  const std::size_t n = wins + losses;
  if (n == 0) return 1.0;
  const std::size_t k = std::min(wins, losses);
  // P(X <= k) for X ~ Binomial(n, 1/2), summed in log space.
  long double tail = 0.0L;
  const long double log_half_n = static_cast<long double>(n) * std::log(0.5L);
  for (std::size_t i = 0; i <= k; ++i) {
    const long double log_choose = std::lgamma(static_cast<long double>(n) + 1) -
                                   std::lgamma(static_cast<long double>(i) + 1) -
                                   std::lgamma(static_cast<long double>(n - i) + 1);
    tail += std::exp(log_choose + log_half_n);
  }
  return static_cast<double>(std::min(1.0L, 2.0L * tail));
}

const char* method_name(Method m) {
  switch (m) {
    case Method::AutoTen: return "AUTOTEN";
    case Method::Baseline2: return "BASELINE2";
    case Method::Baseline3: return "BASELINE3";
    case Method::External: return "EXTERNAL";
  }
  return "?";
}

std::vector<BenchCell> default_cells(std::optional<Noise> only) {
  std::vector<BenchCell> cells;
  for (const Noise noise : {Noise::Gaussian, Noise::None}) {
    if (only && *only != noise) continue;
    for (const FactorMode mode : {FactorMode::Sparse, FactorMode::Dense})
      for (int f_o = 2; f_o <= 5; ++f_o) cells.push_back({mode, noise, f_o});
  }
  return cells;
}

std::vector<BenchCell> parse_cells(const std::string& spec) {
  if (spec == "all") return default_cells();
  if (spec == "noisy") return default_cells(Noise::Gaussian);
  if (spec == "noiseless") return default_cells(Noise::None);
  std::vector<BenchCell> cells;
  std::istringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto c1 = item.find(':');
    const auto c2 = c1 == std::string::npos ? c1 : item.find(':', c1 + 1);
    if (c2 == std::string::npos) throw InputError("cell '" + item + "' is not mode:noise:F_o");
    const auto mode = parse_factor_mode(item.substr(0, c1));
    const auto noise = parse_noise(item.substr(c1 + 1, c2 - c1 - 1));
    int f_o = 0;
    try {
      f_o = std::stoi(item.substr(c2 + 1));
    } catch (const std::exception&) {
      f_o = 0;
    }
    if (!mode || !noise || f_o < 1) throw InputError("cell '" + item + "' is not mode:noise:F_o");
    cells.push_back({*mode, *noise, f_o});
  }
  if (cells.empty()) throw InputError("no benchmark cells given");
  return cells;
}

std::map<std::pair<BenchCell, std::size_t>, int> load_external_estimates(std::istream& in) {
  std::map<std::pair<BenchCell, std::size_t>, int> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 5) throw ParseError(lineno, "expected factor_mode,noise,f_o,trial,f_est");
    if (lineno == 1 && f[0] == "factor_mode") continue;
    const auto mode = parse_factor_mode(f[0]);
    const auto noise = parse_noise(f[1]);
    if (!mode || !noise) throw ParseError(lineno, "unknown factor mode or noise");
    try {
      out[{BenchCell{*mode, *noise, std::stoi(f[2])}, static_cast<std::size_t>(std::stoul(f[3]))}] =
          std::stoi(f[4]);
    } catch (const std::exception&) {
      throw ParseError(lineno, "invalid integer field");
    }
  }
  return out;
}

std::uint64_t trial_seed(std::uint64_t base, const BenchCell& cell, std::size_t trial) {
  return derive_seed(base, {static_cast<std::uint64_t>(cell.factor_mode), static_cast<std::uint64_t>(cell.noise),
                            static_cast<std::uint64_t>(cell.f_o), trial});
}

TrialOutcome run_trial(const BenchCell& cell, std::size_t trial, const BenchConfig& cfg) {
  SynthSpec spec;
  spec.dims = cfg.dims;
  spec.true_rank = cell.f_o;
  spec.factor_mode = cell.factor_mode;
  spec.noise = cell.noise;
  spec.seed = trial_seed(cfg.seed, cell, trial);
  spec.target_nnz = cfg.target_nnz;
  const SynthResult gen = generate(spec);
  const SparseTensor3& t = gen.tensor;

  AutoTenConfig ac = cfg.autoten;
  ac.jobs = 1;
  ac.seed = splitmix64(spec.seed);
  const int f_max = 2 * cell.f_o;
  const Grid grid = build_grid(t, f_max, ac);
  const SelectionResult sel = autoten_select(t, grid, ac.strategy);

  const SparseTensor3 counts = t.is_nonnegative() ? t : clamp_nonnegative(t);
  std::vector<double> fro_loss{baseline_fit(t, Loss::Fro, 1, ac.nmu, ac.restarts, ac.seed).objective};
  std::vector<double> kl_ll{baseline_fit(counts, Loss::Kl, 1, ac.apr, ac.restarts, ac.seed).objective};
  for (const auto& c : grid.fro_cells) fro_loss.push_back(c.fit.objective);
  for (const auto& c : grid.kl_cells) kl_ll.push_back(c.fit.objective);

  TrialOutcome out;
  out.nnz = t.nnz();
  out.clamped = t.nnz() - counts.nnz();
  out.results.push_back(make_trial_result(Method::AutoTen, sel.f_star, cell.f_o));
  out.results.push_back(make_trial_result(
      Method::Baseline2, baseline_stop_rank(fro_loss, cfg.eps, false, cfg.improvement), cell.f_o));
  out.results.push_back(make_trial_result(
      Method::Baseline3, baseline_stop_rank(kl_ll, cfg.eps, true, cfg.improvement), cell.f_o));
  if (const auto it = cfg.external.find({cell, trial}); it != cfg.external.end())
    out.results.push_back(make_trial_result(Method::External, it->second, cell.f_o));
  return out;
}

BenchReport run_benchmark(const BenchConfig& cfg) {
  if (cfg.trials == 0) throw InputError("trials must be >= 1");
  const std::size_t total = cfg.cells.size() * cfg.trials;
  std::vector<TrialOutcome> outcomes(total);
  std::atomic<std::size_t> done{0};
  parallel_for(total, cfg.jobs, [&](std::size_t task) {
    const BenchCell& cell = cfg.cells[task / cfg.trials];
    outcomes[task] = run_trial(cell, task % cfg.trials, cfg);
    log::info("trial " + std::to_string(done.fetch_add(1) + 1) + "/" + std::to_string(total) + " (" +
              factor_mode_name(cell.factor_mode) + ":" + noise_name(cell.noise) + ":" +
              std::to_string(cell.f_o) + ")");
  });

  BenchReport report;
  report.trials = cfg.trials;
  report.seed = cfg.seed;
  for (std::size_t ci = 0; ci < cfg.cells.size(); ++ci) {
    CellReport cr;
    cr.cell = cfg.cells[ci];
    for (std::size_t tr = 0; tr < cfg.trials; ++tr) {
      const TrialOutcome& o = outcomes[ci * cfg.trials + tr];
      cr.mean_nnz += static_cast<double>(o.nnz);
      cr.mean_clamped += static_cast<double>(o.clamped);
      for (const auto& r : o.results) {
        auto& st = cr.per_method[r.method];
        st.f_est.push_back(r.f_est);
        st.errors.push_back(r.error);
      }
    }
    cr.mean_nnz /= static_cast<double>(cfg.trials);
    cr.mean_clamped /= static_cast<double>(cfg.trials);
    for (auto& [m, st] : cr.per_method) {
      double s = 0.0;
      for (const int e : st.errors) s += e;
      st.mean_error = s / static_cast<double>(st.errors.size());
    }
    const auto& at = cr.per_method[Method::AutoTen].errors;
    cr.p_vs_baseline2 = sign_test_p(at, cr.per_method[Method::Baseline2].errors);
    cr.p_vs_baseline3 = sign_test_p(at, cr.per_method[Method::Baseline3].errors);
    report.cells.push_back(std::move(cr));
  }
  return report;
}

std::string report_json(const BenchReport& report) {
  nlohmann::json j;
  j["trials"] = report.trials;
  j["seed"] = report.seed;
  j["cells"] = nlohmann::json::array();
  for (const auto& cr : report.cells) {
    nlohmann::json c;
    c["factor_mode"] = factor_mode_name(cr.cell.factor_mode);
    c["noise"] = noise_name(cr.cell.noise);
    c["f_o"] = cr.cell.f_o;
    c["mean_nnz"] = cr.mean_nnz;
    c["mean_clamped_for_kl"] = cr.mean_clamped;
    nlohmann::json pm = nlohmann::json::object();
    for (const auto& [m, st] : cr.per_method)
      pm[method_name(m)] = {{"mean_error", st.mean_error}, {"errors", st.errors}, {"f_est", st.f_est}};
    c["per_method"] = pm;
    c["p_vs_baseline2"] = cr.p_vs_baseline2;
    c["p_vs_baseline3"] = cr.p_vs_baseline3;
    j["cells"].push_back(c);
  }
  return j.dump(2);
}

void write_report_csv(std::ostream& out, const BenchReport& report) {
  out << "factor_mode,noise,f_o,method,mean_error,trials,p_vs_autoten\n";
  for (const auto& cr : report.cells) {
    for (const auto& [m, st] : cr.per_method) {
      out << factor_mode_name(cr.cell.factor_mode) << ',' << noise_name(cr.cell.noise) << ',' << cr.cell.f_o
          << ',' << method_name(m) << ',' << st.mean_error << ',' << st.errors.size() << ',';
      if (m == Method::Baseline2) out << cr.p_vs_baseline2;
      else if (m == Method::Baseline3) out << cr.p_vs_baseline3;
      out << '\n';
    }
  }
}

}  // namespace autoten
