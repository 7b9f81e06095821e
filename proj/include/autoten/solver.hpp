#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "autoten/tensor.hpp"

namespace autoten {

enum class Loss { Fro, Kl };

const char* loss_name(Loss loss);

struct SolverConfig {
  std::size_t rank = 1;
  std::size_t max_outer_iters = 500;
  /// CP_NMU: relative change in fit. CP_APR: maximum KKT violation.
  double tol = 1e-6;
  std::uint64_t seed = 0;
  /// CP_APR only: cap on multiplicative updates per mode per outer iteration.
  std::size_t max_inner_iters = 10;

  static SolverConfig nmu_defaults(std::size_t rank, std::uint64_t seed = 0) {
    return {rank, 500, 1e-6, seed, 10};
  }
  static SolverConfig apr_defaults(std::size_t rank, std::uint64_t seed = 0) {
    return {rank, 200, 1e-4, seed, 10};
  }
  static SolverConfig defaults(Loss loss, std::size_t rank, std::uint64_t seed = 0) {
    return loss == Loss::Fro ? nmu_defaults(rank, seed) : apr_defaults(rank, seed);
  }
};

void validate(const SolverConfig& cfg);

struct CpResult {
  FactorSet factors;
  std::size_t iterations = 0;
  bool converged = false;
  /// CP_NMU: ||X - M||_F. CP_APR: Poisson log-likelihood.
  double objective = 0.0;
  /// 1 - ||X - M||_F / ||X||_F.
  double fit = 0.0;
  /// Per outer iteration. CP_NMU: ||X - M||_F^2. CP_APR: log-likelihood.
  std::vector<double> history;
};

/// Factors with entries drawn uniformly from (0, 1].
FactorSet random_factors(const SparseTensor3::Dims& dims, std::size_t rank, std::uint64_t seed);

}  // namespace autoten
