#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "autoten/corcondia.hpp"
#include "autoten/solver.hpp"
#include "autoten/tensor.hpp"

namespace autoten {

/// Diagnostic value per rank for one loss. Values lie in [0, 100].
struct QualityCurve {
  Loss loss = Loss::Fro;
  std::vector<int> ranks;
  std::vector<double> c;

  bool all_zero() const;
  double sum() const;
};

enum class Strategy { Sum, MaxC, MaxF, Area };

const char* strategy_name(Strategy s);
std::optional<Strategy> parse_strategy(const std::string& s);

/// A point (F, c) of a curve. F = 0, c = 0 is the "no good structure" sentinel.
struct CurvePoint {
  int f = 0;
  double c = 0.0;
  bool is_sentinel() const { return f == 0; }
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct SelectionResult {
  Loss loss = Loss::Fro;
  int f_star = 0;
  double c_star = 0.0;
  FactorSet factors;
  QualityCurve fro;
  QualityCurve kl;
  Strategy strategy = Strategy::MaxF;
  std::vector<std::string> warnings;
  bool no_structure = false;
};

struct AutoTenConfig {
  Strategy strategy = Strategy::MaxF;
  std::uint64_t seed = 0;
  /// Worker threads for the grid; results do not depend on this.
  std::size_t jobs = 1;
  /// Solver restarts per grid cell; the best objective wins.
  std::size_t restarts = 1;
  SolverConfig nmu = SolverConfig::nmu_defaults(1);
  SolverConfig apr = SolverConfig::apr_defaults(1);
  KlRegressionConfig kl;
};

/// One grid cell: the decomposition for (loss, f) and its diagnostic.
struct CellResult {
  Loss loss = Loss::Fro;
  int f = 0;
  CpResult fit;
  /// Truncated to [0, 100]; 0 when the diagnostic failed.
  double c = 0.0;
  double raw_c = 0.0;
  std::optional<std::string> warning;
};

/// Seed for cell (loss, f); a pure function of the base seed.
std::uint64_t cell_seed(std::uint64_t base, Loss loss, int f);

/// Fit and score one cell. The KL cell runs on clamp_nonnegative(t) when t has
/// negative entries.
CellResult evaluate_cell(const SparseTensor3& t, Loss loss, int f, const AutoTenConfig& cfg);

struct Grid {
  QualityCurve fro;
  QualityCurve kl;
  /// Indexed by f - 2.
  std::vector<CellResult> fro_cells;
  std::vector<CellResult> kl_cells;
};

/// Every (loss, f) cell for f = 2..f_max, run on cfg.jobs threads.
Grid build_grid(const SparseTensor3& t, int f_max, const AutoTenConfig& cfg);

inline std::pair<QualityCurve, QualityCurve> build_curves(const SparseTensor3& t, int f_max,
                                                          const AutoTenConfig& cfg) {
  Grid g = build_grid(t, f_max, cfg);
  return {std::move(g.fro), std::move(g.kl)};
}

/// 2-means on the c values (Lloyd from the extreme values), then the point of
/// largest rank in the cluster with the larger mean.
CurvePoint two_step_max(const QualityCurve& curve);

/// log(c) * log(F) for c > 0, else 0.
double area_score(double c, int f);

/// Choose between the two losses. `prefer_kl_on_tie` breaks exact ties.
SelectionResult select(const QualityCurve& fro, const QualityCurve& kl, Strategy strategy,
                       bool prefer_kl_on_tie);

/// Build the grid, select, attach the winning factors and warnings.
SelectionResult autoten_run(const SparseTensor3& t, int f_max, const AutoTenConfig& cfg);

/// Selection on an already computed grid.
SelectionResult autoten_select(const SparseTensor3& t, const Grid& grid, Strategy strategy);

}  // namespace autoten
