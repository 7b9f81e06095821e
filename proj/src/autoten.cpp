#include "autoten/autoten.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "autoten/cp_apr.hpp"
#include "autoten/cp_nmu.hpp"
#include "autoten/errors.hpp"
#include "autoten/log.hpp"
#include "autoten/parallel.hpp"
#include "autoten/seed.hpp"

namespace autoten {

namespace {

constexpr double kLowQuality = 20.0;
constexpr int kMaxLloydIters = 100;

std::string format_c(double c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", c);
  return buf;
}

}  // namespace

bool QualityCurve::all_zero() const {
  return std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; });
}

double QualityCurve::sum() const { return std::accumulate(c.begin(), c.end(), 0.0); }

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Sum: return "sum";
    case Strategy::MaxC: return "maxc";
    case Strategy::MaxF: return "maxf";
    case Strategy::Area: return "area";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(const std::string& s) {
  if (s == "sum") return Strategy::Sum;
  if (s == "maxc") return Strategy::MaxC;
  if (s == "maxf") return Strategy::MaxF;
  if (s == "area") return Strategy::Area;
  return std::nullopt;
}

std::uint64_t cell_seed(std::uint64_t base, Loss loss, int f) {
  return derive_seed(base, {loss == Loss::Fro ? 0u : 1u, static_cast<std::uint64_t>(f)});
}

namespace {

CellResult evaluate_cell_unchecked(const SparseTensor3& t, Loss loss, int f, const AutoTenConfig& cfg) {
  CellResult cell;
  cell.loss = loss;
  cell.f = f;
  SolverConfig sc = loss == Loss::Fro ? cfg.nmu : cfg.apr;
  sc.rank = static_cast<std::size_t>(f);
  sc.seed = cell_seed(cfg.seed, loss, f);
  cell.fit = loss == Loss::Fro ? cp_nmu_fit_best(t, sc, cfg.restarts) : cp_apr_fit_best(t, sc, cfg.restarts);
  try {
    const DiagnosticResult d = corcondia(loss, t, cell.fit.factors, cfg.kl);
    cell.raw_c = d.c;
    if (!std::isfinite(d.c)) {
      cell.warning = std::string(loss_name(loss)) + " F=" + std::to_string(f) + ": non-finite diagnostic, recorded as 0";
      cell.c = 0.0;
    } else {
      cell.c = std::clamp(d.c, 0.0, 100.0);
    }
  } catch (const SingularityError& e) {
    cell.warning = std::string(loss_name(loss)) + " F=" + std::to_string(f) + ": " + e.what() + "; recorded as 0";
    cell.raw_c = 0.0;
    cell.c = 0.0;
  }
  return cell;
}

}  // namespace

CellResult evaluate_cell(const SparseTensor3& t, Loss loss, int f, const AutoTenConfig& cfg) {
  if (loss == Loss::Kl && !t.is_nonnegative()) return evaluate_cell_unchecked(clamp_nonnegative(t), loss, f, cfg);
  return evaluate_cell_unchecked(t, loss, f, cfg);
}

Grid build_grid(const SparseTensor3& t, int f_max, const AutoTenConfig& cfg) {
  if (f_max < 2) throw InputError("fmax must be >= 2");
  const bool needs_clamp = !t.is_nonnegative();
  if (needs_clamp) log::warn("tensor has negative entries; the KL path uses them clamped to zero");
  const SparseTensor3 clamped = needs_clamp ? clamp_nonnegative(t) : SparseTensor3{};
  const SparseTensor3& kl_input = needs_clamp ? clamped : t;

  const std::size_t per_loss = static_cast<std::size_t>(f_max - 1);
  std::vector<CellResult> cells(2 * per_loss);
  // Larger ranks are slower; scheduling them first balances the pool.
  parallel_for(cells.size(), cfg.jobs, [&](std::size_t task) {
    const std::size_t slot = cells.size() - 1 - task;
    const Loss loss = slot < per_loss ? Loss::Fro : Loss::Kl;
    const int f = static_cast<int>(slot % per_loss) + 2;
    cells[slot] = evaluate_cell_unchecked(loss == Loss::Fro ? t : kl_input, loss, f, cfg);
    log::debug(std::string(loss_name(loss)) + " F=" + std::to_string(f) + " c=" + format_c(cells[slot].c));
  });

  Grid g;
  g.fro.loss = Loss::Fro;
  g.kl.loss = Loss::Kl;
  for (std::size_t s = 0; s < cells.size(); ++s) {
    QualityCurve& curve = s < per_loss ? g.fro : g.kl;
    curve.ranks.push_back(cells[s].f);
    curve.c.push_back(cells[s].c);
    if (cells[s].warning) log::warn(*cells[s].warning);
  }
  g.fro_cells.assign(std::make_move_iterator(cells.begin()),
                     std::make_move_iterator(cells.begin() + static_cast<std::ptrdiff_t>(per_loss)));
  g.kl_cells.assign(std::make_move_iterator(cells.begin() + static_cast<std::ptrdiff_t>(per_loss)),
                    std::make_move_iterator(cells.end()));
  return g;
}

CurvePoint two_step_max(const QualityCurve& curve) {
  const std::size_t n = curve.c.size();
  if (n == 0 || curve.ranks.size() != n) throw DimensionError("two_step_max: empty or ragged curve");
  if (curve.all_zero()) return {};

  const auto [lo_it, hi_it] = std::minmax_element(curve.c.begin(), curve.c.end());
  double lo = *lo_it, hi = *hi_it;
  std::vector<bool> high(n, true);
  if (lo < hi) {
    for (int iter = 0; iter < kMaxLloydIters; ++iter) {
      bool changed = false;
      double sum_lo = 0.0, sum_hi = 0.0;
      std::size_t n_lo = 0, n_hi = 0;
      for (std::size_t i = 0; i < n; ++i) {
        // Equidistant points go to the high cluster.
        const bool h = std::abs(curve.c[i] - hi) <= std::abs(curve.c[i] - lo);
        if (h != high[i] || iter == 0) changed = true;
        high[i] = h;
        (h ? sum_hi : sum_lo) += curve.c[i];
        (h ? n_hi : n_lo) += 1;
      }
      if (n_lo == 0 || n_hi == 0) {
        std::fill(high.begin(), high.end(), true);
        break;
      }
      lo = sum_lo / static_cast<double>(n_lo);
      hi = sum_hi / static_cast<double>(n_hi);
      if (lo >= hi) {
        std::fill(high.begin(), high.end(), true);
        break;
      }
      if (!changed) break;
    }
  }

  CurvePoint best;
  bool found = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!high[i]) continue;
    if (!found || curve.ranks[i] > best.f) {
      best = {curve.ranks[i], curve.c[i]};
      found = true;
    }
  }
  return best;
}

double area_score(double c, int f) {
  if (!(c > 0.0) || f <= 0) return 0.0;
  return std::log(c) * std::log(static_cast<double>(f));
}

SelectionResult select(const QualityCurve& fro, const QualityCurve& kl, Strategy strategy,
                       bool prefer_kl_on_tie) {
  if (fro.ranks != kl.ranks) throw DimensionError("select: curves are over different rank grids");
  SelectionResult res;
  res.fro = fro;
  res.kl = kl;
  res.strategy = strategy;

  const CurvePoint pf = two_step_max(fro);
  const CurvePoint pk = two_step_max(kl);
  const auto pick = [&](double score_fro, double score_kl) {
    if (score_kl != score_fro) return score_kl > score_fro ? Loss::Kl : Loss::Fro;
    return prefer_kl_on_tie ? Loss::Kl : Loss::Fro;
  };

  CurvePoint chosen;
  switch (strategy) {
    case Strategy::Sum:
      res.loss = pick(fro.sum(), kl.sum());
      chosen = res.loss == Loss::Fro ? pf : pk;
      break;
    case Strategy::MaxC:
      res.loss = pick(pf.c, pk.c);
      chosen = res.loss == Loss::Fro ? pf : pk;
      break;
    case Strategy::MaxF:
      res.loss = pick(pf.f, pk.f);
      chosen = res.loss == Loss::Fro ? pf : pk;
      break;
    case Strategy::Area: {
      // Only points with c > 0 compete; among equal scores the larger rank wins.
      const auto best_of = [](const QualityCurve& q) {
        std::optional<std::pair<double, CurvePoint>> best;
        for (std::size_t i = 0; i < q.c.size(); ++i) {
          if (!(q.c[i] > 0.0)) continue;
          const double g = area_score(q.c[i], q.ranks[i]);
          if (!best || g > best->first || (g == best->first && q.ranks[i] > best->second.f))
            best = std::make_pair(g, CurvePoint{q.ranks[i], q.c[i]});
        }
        return best;
      };
      const auto bf = best_of(fro), bk = best_of(kl);
      if (!bf && !bk) {
        res.loss = pick(0.0, 0.0);
      } else if (!bf || !bk) {
        res.loss = bk ? Loss::Kl : Loss::Fro;
        chosen = bk ? bk->second : bf->second;
      } else {
        res.loss = bk->first != bf->first ? pick(bf->first, bk->first)
                                          : pick(bf->second.f, bk->second.f);
        chosen = res.loss == Loss::Fro ? bf->second : bk->second;
      }
      break;
    }
  }
  res.f_star = chosen.f;
  res.c_star = chosen.c;
  res.no_structure = chosen.is_sentinel();
  return res;
}

SelectionResult autoten_select(const SparseTensor3& t, const Grid& grid, Strategy strategy) {
  SelectionResult res = select(grid.fro, grid.kl, strategy, t.is_integer_valued());
  for (const auto* cells : {&grid.fro_cells, &grid.kl_cells})
    for (const auto& cell : *cells)
      if (cell.warning) res.warnings.push_back(*cell.warning);
  if (res.no_structure) {
    res.warnings.push_back("no good structure detected: every diagnostic value is zero up to the rank budget");
    return res;
  }
  const auto& cells = res.loss == Loss::Fro ? grid.fro_cells : grid.kl_cells;
  for (const auto& cell : cells)
    if (cell.f == res.f_star) res.factors = cell.fit.factors;
  if (res.c_star < kLowQuality) {
    res.warnings.push_back("selected decomposition has low quality (c* = " + format_c(res.c_star) +
                           " < 20); interpret its components with caution");
  }
  return res;
}

SelectionResult autoten_run(const SparseTensor3& t, int f_max, const AutoTenConfig& cfg) {
  const Grid grid = build_grid(t, f_max, cfg);
  SelectionResult res = autoten_select(t, grid, cfg.strategy);
  // Cell warnings were already logged by build_grid.
  if (!res.warnings.empty() && (res.no_structure || res.c_star < kLowQuality)) log::warn(res.warnings.back());
  return res;
}

}  // namespace autoten
