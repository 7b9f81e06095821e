#pragma once

#include "autoten/solver.hpp"

namespace autoten {

/// Nonnegative CP under Frobenius loss with Lee-Seung multiplicative updates:
///   A <- A * MTTKRP_1 / (A (CᵀC * BᵀB) + 1e-12)
/// cycled over the three modes. Stops after cfg.max_outer_iters or once the
/// fit changes by less than cfg.tol between outer iterations.
CpResult cp_nmu_fit(const SparseTensor3& t, const SolverConfig& cfg);

/// Best of `restarts` runs (lowest residual); run r uses a seed derived from
/// (cfg.seed, r).
CpResult cp_nmu_fit_best(const SparseTensor3& t, const SolverConfig& cfg, std::size_t restarts);

}  // namespace autoten
