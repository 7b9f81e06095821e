#include "autoten/cp_apr.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "autoten/errors.hpp"
#include "autoten/seed.hpp"
#include "rank_dispatch.hpp"

namespace autoten {

namespace {

constexpr double kModelFloor = 1e-16;

// phi = (X / (B Pi^T)) Pi for the mode being updated, where B replaces that
// mode's factor and Pi is the Khatri-Rao product of the other two. Entries
// are walked one mode-3 fiber (fixed i, j) at a time so the Pi rows are never
// stored: within a fiber the fixed factor rows fold into a single vector.
template <std::size_t FS>
void accumulate_phi(std::span<const Entry> entries, const FactorSet& fs, std::size_t mode,
                    const DenseMatrix& b, DenseMatrix& phi) {
  const std::size_t f = detail::rank_or<FS>(b.cols());
  std::fill(phi.values().begin(), phi.values().end(), 0.0);
  const DenseMatrix& fa = mode == 0 ? b : fs.a;
  const DenseMatrix& fb = mode == 1 ? b : fs.b;
  const DenseMatrix& fc = fs.c;
  auto u = detail::make_rank_buffer<FS>(f);
  auto acc = detail::make_rank_buffer<FS>(f);
  const std::size_t nnz = entries.size();
  std::size_t n = 0;
  while (n < nnz) {
    const Index i = entries[n].i, j = entries[n].j;
    const double* ar = fa.row(i).data();
    const double* br = fb.row(j).data();
    for (std::size_t r = 0; r < f; ++r) u[r] = ar[r] * br[r];
    if (mode == 2) {
      for (; n < nnz && entries[n].i == i && entries[n].j == j; ++n) {
        const std::size_t k = entries[n].k;
        const double* bk = b.row(k).data();
        double m = 0.0;
        for (std::size_t r = 0; r < f; ++r) m += bk[r] * u[r];
        const double q = entries[n].value / std::max(m, kModelFloor);
        double* ph = phi.row(k).data();
        for (std::size_t r = 0; r < f; ++r) ph[r] += q * u[r];
      }
      continue;
    }
    std::fill(acc.begin(), acc.end(), 0.0);
    for (; n < nnz && entries[n].i == i && entries[n].j == j; ++n) {
      const double* cr = fc.row(entries[n].k).data();
      double m = 0.0;
      for (std::size_t r = 0; r < f; ++r) m += u[r] * cr[r];
      const double q = entries[n].value / std::max(m, kModelFloor);
      for (std::size_t r = 0; r < f; ++r) acc[r] += q * cr[r];
    }
    // Pi row for mode 1 is b_j * c_k, for mode 2 it is a_i * c_k.
    const double* other = mode == 0 ? fs.b.row(j).data() : fs.a.row(i).data();
    double* ph = phi.row(mode == 0 ? i : j).data();
    for (std::size_t r = 0; r < f; ++r) ph[r] += acc[r] * other[r];
  }
}

}  // namespace

double poisson_log_likelihood(const SparseTensor3& t, const FactorSet& fs) {
  fs.validate(t.dims());
  const auto m = model_at_entries(t, fs);
  long double ll = 0.0L;
  std::size_t n = 0;
  for (const auto& e : t.entries()) {
    if (e.value > 0.0) ll += e.value * std::log(std::max(m[n], kModelFloor));
    ++n;
  }
  const auto sa = fs.a.column_sums(), sb = fs.b.column_sums(), sc = fs.c.column_sums();
  for (std::size_t r = 0; r < fs.rank(); ++r) ll -= fs.weights[r] * sa[r] * sb[r] * sc[r];
  return static_cast<double>(ll);
}

CpResult cp_apr_fit(const SparseTensor3& t, const SolverConfig& cfg) {
  validate(cfg);
  if (!t.is_nonnegative()) throw InputError("cp_apr: tensor has negative entries; counts must be >= 0");
  const std::size_t f = cfg.rank;
  const auto entries = t.entries();

  CpResult res;
  res.factors = random_factors(t.dims(), f, cfg.seed);
  FactorSet& fs = res.factors;
  // Start from unit 1-norm columns; the scale lives in the weights.
  for (std::size_t n = 0; n < 3; ++n) {
    DenseMatrix& u = fs.mode(n);
    const auto s = u.column_sums();
    for (std::size_t i = 0; i < u.rows(); ++i)
      for (std::size_t r = 0; r < f; ++r) u(i, r) /= s[r];
  }
  std::fill(fs.weights.begin(), fs.weights.end(), std::max(t.sum(), 0.0) / static_cast<double>(f));

  for (std::size_t it = 1; it <= cfg.max_outer_iters; ++it) {
    bool converged = true;
    for (std::size_t n = 0; n < 3; ++n) {
      DenseMatrix& u = fs.mode(n);

      DenseMatrix b = u;
      for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t r = 0; r < f; ++r) b(i, r) *= fs.weights[r];

      DenseMatrix phi(b.rows(), f);
      for (std::size_t inner = 0; inner < cfg.max_inner_iters; ++inner) {
        detail::dispatch_rank(f, [&](auto tag) {
          accumulate_phi<decltype(tag)::value>(entries, fs, n, b, phi);
        });
        double kkt = 0.0;
        const auto bv = b.values();
        const auto pv = phi.values();
        for (std::size_t x = 0; x < bv.size(); ++x)
          kkt = std::max(kkt, std::abs(std::min(bv[x], 1.0 - pv[x])));
        if (kkt < cfg.tol) break;
        converged = false;
        for (std::size_t x = 0; x < bv.size(); ++x) bv[x] *= pv[x];
      }

      const auto lambda = b.column_sums();
      for (std::size_t r = 0; r < f; ++r) fs.weights[r] = lambda[r];
      for (std::size_t i = 0; i < u.rows(); ++i)
        for (std::size_t r = 0; r < f; ++r) u(i, r) = lambda[r] > 0.0 ? b(i, r) / lambda[r] : 0.0;
    }
    res.history.push_back(poisson_log_likelihood(t, fs));
    res.iterations = it;
    if (converged) {
      res.converged = true;
      break;
    }
  }
  res.objective = res.history.empty() ? poisson_log_likelihood(t, fs) : res.history.back();
  const double norm_x = t.norm();
  res.fit = norm_x > 0.0 ? 1.0 - reconstruct_residual_fro(t, fs) / norm_x : 1.0;
  return res;
}

CpResult cp_apr_fit_best(const SparseTensor3& t, const SolverConfig& cfg, std::size_t restarts) {
  if (restarts == 0) throw InputError("restarts must be >= 1");
  CpResult best;
  for (std::size_t r = 0; r < restarts; ++r) {
    SolverConfig c = cfg;
    c.seed = r == 0 ? cfg.seed : derive_seed(cfg.seed, {r});
    CpResult run = cp_apr_fit(t, c);
    if (r == 0 || run.objective > best.objective) best = std::move(run);
  }
  return best;
}

}  // namespace autoten
