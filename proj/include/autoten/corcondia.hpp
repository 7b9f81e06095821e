#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "autoten/solver.hpp"
#include "autoten/tensor.hpp"

namespace autoten {

struct DiagnosticResult {
  /// Core consistency, at most 100.
  double c = 100.0;
  CoreTensor core;
  Loss loss = Loss::Fro;
  /// KL regression iterations; 0 for the Frobenius path.
  std::size_t iterations = 0;
  /// Set for rank-one inputs, where c = 100 holds by definition.
  bool trivial = false;
};

/// 100 * (1 - sum (G - I)^2 / F), I the super-diagonal ones tensor.
double core_consistency(const CoreTensor& core);

/// Least-squares Tucker core for fixed CP factors, vec(G) = (A ⊗ B ⊗ C)† vec(X),
/// and its core consistency. Weights are absorbed into the mode-1 factor first.
/// Rank-deficient factors raise SingularityError.
DiagnosticResult corcondia_fro(const SparseTensor3& t, const FactorSet& fs);

struct KlRegressionConfig {
  enum class Init { ScaledOnes, Random };
  /// Kron evaluates W x over all I*J*K rows with kron_mat_vec. SparseSupport
  /// evaluates it only on the support of y. Auto picks SparseSupport when
  /// I*J*K exceeds kDenseRowLimit or y is very sparse.
  enum class Path { Auto, Kron, SparseSupport };

  std::size_t max_iters = 250;
  /// Relative change of the objective; 0 runs exactly max_iters iterations.
  double tol = 1e-6;
  Init init = Init::ScaledOnes;
  std::uint64_t seed = 0;
  Path path = Path::Auto;
  bool record_history = false;

  static constexpr std::uint64_t kDenseRowLimit = std::uint64_t{1} << 24;
};

struct KlRegressionResult {
  std::vector<double> x;
  std::size_t iterations = 0;
  /// D_KL(y || W x) at the returned x.
  double objective = 0.0;
  /// Objective before the first update and after each one, when recorded.
  std::vector<double> history;
};

/// Generalized KL divergence sum y log(y / yhat) - y + yhat, with 0 log 0 = 0
/// and yhat floored at 1e-16 where y > 0; `yhat_on_support` is W x at the
/// positions of y and `yhat_total` is sum(W x).
double kl_divergence(const SparseVector& y, std::span<const double> yhat_on_support, double yhat_total);

/// min_{x >= 0} D_KL(y || (A ⊗ B ⊗ C) x) by multiplicative majorization-
/// minimization, x <- x * (Wᵀ (y / W x)) / s with s the column sums of W,
/// never materializing W.
KlRegressionResult kl_core_regression(const SparseVector& y, const DenseMatrix& a, const DenseMatrix& b,
                                      const DenseMatrix& c, const KlRegressionConfig& cfg = {});

/// Core consistency with the core fitted under KL loss. Weights are absorbed
/// into the mode-1 factor first.
DiagnosticResult corcondia_kl(const SparseTensor3& t, const FactorSet& fs, const KlRegressionConfig& cfg = {});

DiagnosticResult corcondia(Loss loss, const SparseTensor3& t, const FactorSet& fs,
                           const KlRegressionConfig& kl_cfg = {});

}  // namespace autoten
