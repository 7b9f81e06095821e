#include "autoten/cp_nmu.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "autoten/errors.hpp"
#include "autoten/log.hpp"
#include "autoten/seed.hpp"

namespace autoten {

namespace {

constexpr double kDenominatorFloor = 1e-12;

DenseMatrix hadamard(const DenseMatrix& x, const DenseMatrix& y) {
  DenseMatrix out = x;
  auto o = out.values();
  const auto v = y.values();
  for (std::size_t n = 0; n < o.size(); ++n) o[n] *= v[n];
  return out;
}

}  // namespace

CpResult cp_nmu_fit(const SparseTensor3& t, const SolverConfig& cfg) {
  validate(cfg);
  const auto& d = t.dims();
  const Index f = cfg.rank;
  if (f > std::min({d[0] * d[1], d[1] * d[2], d[0] * d[2]})) {
    throw InputError("rank " + std::to_string(f) + " exceeds min(IJ, JK, IK)");
  }
  if (!t.is_nonnegative()) log::warn("cp_nmu: tensor has negative entries; factors stay nonnegative");

  CpResult res;
  res.factors = random_factors(d, cfg.rank, cfg.seed);
  FactorSet& fs = res.factors;
  const double norm_x = t.norm();
  const double norm_x2 = norm_x * norm_x;

  DenseMatrix grams[3] = {fs.a.gram(), fs.b.gram(), fs.c.gram()};
  double fit_old = 0.0;
  for (std::size_t it = 1; it <= cfg.max_outer_iters; ++it) {
    DenseMatrix last_mttkrp;
    for (std::size_t n = 0; n < 3; ++n) {
      DenseMatrix m = mttkrp(t, fs, n);
      const DenseMatrix g = hadamard(grams[(n + 1) % 3], grams[(n + 2) % 3]);
      DenseMatrix& u = fs.mode(n);
      const DenseMatrix ug = matmul(u, g);
      auto uv = u.values();
      const auto mv = m.values();
      const auto dv = ug.values();
      for (std::size_t e = 0; e < uv.size(); ++e) uv[e] *= mv[e] / (dv[e] + kDenominatorFloor);
      grams[n] = u.gram();
      if (n == 2) last_mttkrp = std::move(m);
    }
    // <X, M> from the final mode's MTTKRP, which used the current A and B.
    double inner = 0.0;
    {
      const auto cv = fs.c.values();
      const auto mv = last_mttkrp.values();
      for (std::size_t e = 0; e < cv.size(); ++e) inner += cv[e] * mv[e];
    }
    double model2 = 0.0;
    {
      const auto a = grams[0].values(), b = grams[1].values(), c = grams[2].values();
      for (std::size_t e = 0; e < a.size(); ++e) model2 += a[e] * b[e] * c[e];
    }
    const double resid2 = std::max(0.0, norm_x2 - 2.0 * inner + model2);
    res.history.push_back(resid2);
    res.iterations = it;
    const double fit = norm_x > 0.0 ? 1.0 - std::sqrt(resid2) / norm_x : 1.0;
    if (norm_x == 0.0 || (it > 1 && std::abs(fit - fit_old) < cfg.tol)) {
      res.converged = true;
      break;
    }
    fit_old = fit;
  }
  res.objective = reconstruct_residual_fro(t, fs);
  res.fit = norm_x > 0.0 ? 1.0 - res.objective / norm_x : 1.0;
  return res;
}

CpResult cp_nmu_fit_best(const SparseTensor3& t, const SolverConfig& cfg, std::size_t restarts) {
  if (restarts == 0) throw InputError("restarts must be >= 1");
  CpResult best;
  for (std::size_t r = 0; r < restarts; ++r) {
    SolverConfig c = cfg;
    c.seed = r == 0 ? cfg.seed : derive_seed(cfg.seed, {r});
    CpResult run = cp_nmu_fit(t, c);
    if (r == 0 || run.objective < best.objective) best = std::move(run);
  }
  return best;
}

}  // namespace autoten
