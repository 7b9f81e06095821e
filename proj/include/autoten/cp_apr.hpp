#pragma once

#include "autoten/solver.hpp"

namespace autoten {

/// Poisson log-likelihood sum(x log m - m) of the weighted model, summed over
/// every coordinate (the unstored ones contribute -m). Uses 0 log 0 = 0.
double poisson_log_likelihood(const SparseTensor3& t, const FactorSet& fs);

/// Poisson CP (KL-divergence loss) for nonnegative data.
///
/// Each outer iteration visits the modes in turn. For mode n the weights are
/// folded into the factor, B = U_n diag(w), and the majorization-minimization
/// update B <- B * Phi, Phi = (X_(n) / (B Piᵀ)) Pi, is repeated up to
/// cfg.max_inner_iters times or until max |min(B, 1 - Phi)| < cfg.tol. The
/// columns of B are then rescaled to unit 1-norm with the scale pushed back
/// into the weights. The run stops when every mode satisfies the KKT bound on
/// its first inner check.
///
/// Throws InputError on negative entries.
CpResult cp_apr_fit(const SparseTensor3& t, const SolverConfig& cfg);

/// Best of `restarts` runs (highest log-likelihood).
CpResult cp_apr_fit_best(const SparseTensor3& t, const SolverConfig& cfg, std::size_t restarts);

}  // namespace autoten
