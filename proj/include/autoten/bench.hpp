#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "autoten/autoten.hpp"
#include "autoten/synth.hpp"

namespace autoten {

enum class Improvement { Relative, Absolute };

/// Rank-increase stopping rule shared by both baselines. values[f - 1] is the
/// score at rank f. Returns the rank preceding the first step whose
/// improvement is <= eps, or values.size() if there is none.
int baseline_stop_rank(std::span<const double> values, double eps, bool higher_is_better,
                       Improvement improvement = Improvement::Relative);

struct BaselineConfig {
  SolverConfig nmu = SolverConfig::nmu_defaults(1);
  SolverConfig apr = SolverConfig::apr_defaults(1);
  std::size_t restarts = 1;
  std::uint64_t seed = 0;
  Improvement improvement = Improvement::Relative;
};

/// CP_NMU for f = 1, 2, ... recording the Frobenius residual; stops at the
/// first rank that fails to improve by more than eps. Rank f uses
/// cell_seed(cfg.seed, Loss::Fro, f), matching AutoTen's grid.
int baseline2(const SparseTensor3& t, int f_max, double eps, const BaselineConfig& cfg = {});

/// As baseline2 with CP_APR and the Poisson log-likelihood (higher is better).
/// Negative entries are clamped to zero first.
int baseline3(const SparseTensor3& t, int f_max, double eps, const BaselineConfig& cfg = {});

/// Two-sided sign test of paired errors; ties are dropped. Returns 1 when no
/// untied pair remains.
double sign_test_p(std::span<const int> errors_a, std::span<const int> errors_b);

enum class Method { AutoTen, Baseline2, Baseline3, External };
const char* method_name(Method m);

struct TrialResult {
  Method method = Method::AutoTen;
  int f_est = 0;
  int f_o = 0;
  int error = 0;
};

inline TrialResult make_trial_result(Method m, int f_est, int f_o) {
  return {m, f_est, f_o, f_est > f_o ? f_est - f_o : f_o - f_est};
}

struct BenchCell {
  FactorMode factor_mode = FactorMode::Sparse;
  Noise noise = Noise::Gaussian;
  int f_o = 2;
  friend auto operator<=>(const BenchCell&, const BenchCell&) = default;
};

/// Parses "all", "noisy", "noiseless" or a comma list of mode:noise:F_o,
/// e.g. "sparse:gauss:2,dense:none:5".
std::vector<BenchCell> parse_cells(const std::string& spec);
std::vector<BenchCell> default_cells(std::optional<Noise> only = std::nullopt);

struct BenchConfig {
  std::vector<BenchCell> cells = default_cells();
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  SparseTensor3::Dims dims{50, 50, 50};
  std::size_t target_nnz = 500;
  double eps = 1e-6;
  Improvement improvement = Improvement::Relative;
  AutoTenConfig autoten;
  /// F_est per (cell, trial) from an external method, e.g. a Bayesian CP run
  /// outside this tool.
  std::map<std::pair<BenchCell, std::size_t>, int> external;
};

/// Reads "factor_mode,noise,f_o,trial,f_est" rows (header optional).
std::map<std::pair<BenchCell, std::size_t>, int> load_external_estimates(std::istream& in);

struct MethodStats {
  std::vector<int> f_est;
  std::vector<int> errors;
  double mean_error = 0.0;
};

struct CellReport {
  BenchCell cell;
  std::map<Method, MethodStats> per_method;
  double p_vs_baseline2 = 1.0;
  double p_vs_baseline3 = 1.0;
  double mean_nnz = 0.0;
  /// Mean count of entries dropped by clamping for the KL path.
  double mean_clamped = 0.0;
};

struct BenchReport {
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<CellReport> cells;
};

/// Generated tensor plus every method's estimate for one trial.
struct TrialOutcome {
  std::size_t nnz = 0;
  std::size_t clamped = 0;
  std::vector<TrialResult> results;
};

std::uint64_t trial_seed(std::uint64_t base, const BenchCell& cell, std::size_t trial);

/// One trial: AutoTen with F_max = 2 F_o and both baselines on the same
/// generated tensor. The baselines reuse AutoTen's grid fits for f >= 2.
TrialOutcome run_trial(const BenchCell& cell, std::size_t trial, const BenchConfig& cfg);

BenchReport run_benchmark(const BenchConfig& cfg);

std::string report_json(const BenchReport& report);
void write_report_csv(std::ostream& out, const BenchReport& report);

}  // namespace autoten
