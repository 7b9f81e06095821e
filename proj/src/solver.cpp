#include "autoten/solver.hpp"

#include <random>

#include "autoten/errors.hpp"

namespace autoten {

const char* loss_name(Loss loss) { return loss == Loss::Fro ? "fro" : "kl"; }

void validate(const SolverConfig& cfg) {
  if (cfg.rank == 0) throw InputError("rank must be >= 1");
  if (cfg.max_outer_iters == 0) throw InputError("max_outer_iters must be >= 1");
  if (!(cfg.tol > 0.0)) throw InputError("tol must be > 0");
  if (cfg.max_inner_iters == 0) throw InputError("max_inner_iters must be >= 1");
}

FactorSet random_factors(const SparseTensor3::Dims& dims, std::size_t rank, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DenseMatrix m[3];
  for (std::size_t n = 0; n < 3; ++n) {
    m[n] = DenseMatrix(dims[n], rank);
    // 1 - U[0,1) lies in (0, 1].
    for (auto& v : m[n].values()) v = 1.0 - unit(rng);
  }
  return FactorSet(std::move(m[0]), std::move(m[1]), std::move(m[2]));
}

}  // namespace autoten
