#include "autoten/corcondia.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "autoten/errors.hpp"
#include "autoten/kron.hpp"

namespace autoten {

namespace {

constexpr double kYhatFloor = 1e-16;

// Rough flop counts for applying a Kronecker-structured operator densely
// versus over the support of a sparse vector.
struct PathCost {
  double dense;
  double sparse;
};

PathCost estimate_costs(const SparseVector& y, const DenseMatrix& a, const DenseMatrix& b,
                        const DenseMatrix& c) {
  const double f = static_cast<double>(std::max({a.cols(), b.cols(), c.cols()}));
  const double rows = static_cast<double>(y.length);
  std::size_t ni = 0, nij = 0;
  const Index jk = static_cast<Index>(b.rows()) * c.rows();
  Index last_i = ~Index{0}, last_ij = ~Index{0};
  for (const Index p : y.positions) {
    const Index i = p / jk, ij = p / c.rows();
    if (i != last_i) ++ni, last_i = i;
    if (ij != last_ij) ++nij, last_ij = ij;
  }
  return {rows * f, static_cast<double>(y.nnz()) * f + static_cast<double>(nij) * f * f +
                        static_cast<double>(ni) * f * f * f};
}

DenseMatrix absorbed_mode1(const FactorSet& fs) { return absorb_weights(fs).a; }

void check_factor_shapes(const SparseTensor3& t, const FactorSet& fs) {
  fs.validate(t.dims());
}

}  // namespace

double core_consistency(const CoreTensor& core) {
  const std::size_t f = core.f();
  if (f == 0) throw DimensionError("empty core");
  long double dev = 0.0L;
  for (std::size_t p = 0; p < f; ++p)
    for (std::size_t q = 0; q < f; ++q)
      for (std::size_t r = 0; r < f; ++r) {
        const double target = (p == q && q == r) ? 1.0 : 0.0;
        const long double d = core(p, q, r) - target;
        dev += d * d;
      }
  return static_cast<double>(100.0L * (1.0L - dev / static_cast<long double>(f)));
}

DiagnosticResult corcondia_fro(const SparseTensor3& t, const FactorSet& fs) {
  check_factor_shapes(t, fs);
  const std::size_t f = fs.rank();
  const DenseMatrix a = absorbed_mode1(fs);
  const SparseVector y = vectorize(t);

  const auto solve = [&] {
    const PathCost cost = estimate_costs(y, a, fs.b, fs.c);
    if (y.length > KlRegressionConfig::kDenseRowLimit || cost.sparse < cost.dense)
      return kron_pinv_apply(a, fs.b, fs.c, y);
    const auto dense = y.to_dense();
    return kron_pinv_apply(a, fs.b, fs.c, std::span<const double>(dense));
  };

  DiagnosticResult res;
  res.loss = Loss::Fro;
  if (f == 1) {
    res.trivial = true;
    res.c = 100.0;
    try {
      res.core = CoreTensor(1, solve());
    } catch (const SingularityError&) {
      res.core = CoreTensor(1, {0.0});
    }
    return res;
  }
  res.core = CoreTensor(f, solve());
  res.c = core_consistency(res.core);
  return res;
}

double kl_divergence(const SparseVector& y, std::span<const double> yhat_on_support, double yhat_total) {
  long double d = 0.0L;
  for (std::size_t n = 0; n < y.nnz(); ++n) {
    const double yv = y.values[n];
    if (yv > 0.0) d += yv * std::log(yv / std::max(yhat_on_support[n], kYhatFloor)) - yv;
  }
  return static_cast<double>(d + yhat_total);
}

KlRegressionResult kl_core_regression(const SparseVector& y, const DenseMatrix& a, const DenseMatrix& b,
                                      const DenseMatrix& c, const KlRegressionConfig& cfg) {
  if (y.length != static_cast<Index>(a.rows()) * b.rows() * c.rows())
    throw DimensionError("kl_core_regression: y length != I*J*K");
  for (const double v : y.values)
    if (v < 0.0) throw InputError("kl_core_regression: y has negative entries");
  if (cfg.max_iters == 0) throw InputError("kl_core_regression: max_iters must be >= 1");

  const std::size_t n = a.cols() * b.cols() * c.cols();
  KlRegressionResult res;
  res.x.assign(n, 0.0);
  double ysum = 0.0;
  for (const double v : y.values) ysum += v;
  if (ysum == 0.0) return res;

  const DenseMatrix mats[3] = {a, b, c};
  const std::vector<double> s = kron_row_sums(mats);
  double s_total = 0.0;
  for (const double v : s) s_total += v;
  if (!(s_total > 0.0)) {
    // W has no positive column: W x = 0 for every x.
    res.objective = kl_divergence(y, std::vector<double>(y.nnz(), 0.0), 0.0);
    return res;
  }

  if (cfg.init == KlRegressionConfig::Init::Random) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double wsum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      res.x[j] = 1.0 - unit(rng);
      wsum += s[j] * res.x[j];
    }
    for (auto& v : res.x) v *= ysum / wsum;
  } else {
    std::fill(res.x.begin(), res.x.end(), ysum / s_total);
  }

  bool sparse_path = cfg.path == KlRegressionConfig::Path::SparseSupport;
  if (cfg.path == KlRegressionConfig::Path::Auto) {
    const PathCost cost = estimate_costs(y, a, b, c);
    sparse_path = y.length > KlRegressionConfig::kDenseRowLimit || cost.sparse < cost.dense;
  }

  std::vector<double> full;
  std::vector<double> yhat(y.nnz());
  const auto eval_yhat = [&] {
    if (sparse_path) {
      yhat = kron3_apply_at(a, b, c, res.x, y.positions);
    } else {
      full = kron_mat_vec(mats, res.x);
      for (std::size_t m = 0; m < y.nnz(); ++m) yhat[m] = full[y.positions[m]];
    }
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += s[j] * res.x[j];
    return kl_divergence(y, yhat, total);
  };

  double obj = eval_yhat();
  if (cfg.record_history) res.history.push_back(obj);
  SparseVector z1{y.length, y.positions, std::vector<double>(y.nnz())};
  std::vector<double> z1_dense;
  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    for (std::size_t m = 0; m < y.nnz(); ++m)
      z1.values[m] = y.values[m] > 0.0 ? y.values[m] / std::max(yhat[m], kYhatFloor) : 0.0;
    std::vector<double> z2;
    if (sparse_path) {
      z2 = kron3_transpose_apply_sparse(a, b, c, z1);
    } else {
      z1_dense.assign(y.length, 0.0);
      for (std::size_t m = 0; m < y.nnz(); ++m) z1_dense[y.positions[m]] = z1.values[m];
      z2 = kron_mat_vec(mats, z1_dense, Transpose::Yes);
    }
    for (std::size_t j = 0; j < n; ++j) res.x[j] = s[j] > 0.0 ? res.x[j] * z2[j] / s[j] : 0.0;

    const double next = eval_yhat();
    if (cfg.record_history) res.history.push_back(next);
    res.iterations = it;
    const double change = std::abs(obj - next);
    obj = next;
    if (cfg.tol > 0.0 && (obj == 0.0 || change <= cfg.tol * std::abs(obj))) break;
  }
  res.objective = obj;
  return res;
}

DiagnosticResult corcondia_kl(const SparseTensor3& t, const FactorSet& fs, const KlRegressionConfig& cfg) {
  check_factor_shapes(t, fs);
  if (!t.is_nonnegative()) throw InputError("corcondia_kl: tensor has negative entries");
  const std::size_t f = fs.rank();
  const DenseMatrix a = absorbed_mode1(fs);
  const KlRegressionResult reg = kl_core_regression(vectorize(t), a, fs.b, fs.c, cfg);

  DiagnosticResult res;
  res.loss = Loss::Kl;
  res.iterations = reg.iterations;
  res.core = CoreTensor(f, reg.x);
  if (f == 1) {
    res.trivial = true;
    res.c = 100.0;
  } else {
    res.c = core_consistency(res.core);
  }
  return res;
}

DiagnosticResult corcondia(Loss loss, const SparseTensor3& t, const FactorSet& fs,
                           const KlRegressionConfig& kl_cfg) {
  return loss == Loss::Fro ? corcondia_fro(t, fs) : corcondia_kl(t, fs, kl_cfg);
}

}  // namespace autoten
