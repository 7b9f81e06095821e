#pragma once

#include <span>
#include <vector>

#include "autoten/tensor.hpp"

namespace autoten {

enum class Transpose { No, Yes };

/// y = (M1 ⊗ M2 ⊗ ... ⊗ Mn) x, or with every Mi transposed.
///
/// x is viewed as an n-way array with the first index slowest. Each step
/// contracts the leading mode with its factor and rotates it to the back, so
/// the Kronecker product is never formed.
std::vector<double> kron_mat_vec(std::span<const DenseMatrix> mats, std::span<const double> x,
                                 Transpose transpose = Transpose::No);

/// Column sums of M1 ⊗ ... ⊗ Mn, computed as the Kronecker product of the
/// per-factor column sums.
std::vector<double> kron_row_sums(std::span<const DenseMatrix> mats);

/// (A ⊗ B ⊗ C) x evaluated only at the given linear positions of the
/// I*J*K output, which must be strictly increasing. Work is grouped by the
/// distinct i and (i, j) prefixes among the positions.
std::vector<double> kron3_apply_at(const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& c,
                                   std::span<const double> x, std::span<const Index> positions);

/// (Aᵀ ⊗ Bᵀ ⊗ Cᵀ) z for a sparse z of length I*J*K.
std::vector<double> kron3_transpose_apply_sparse(const DenseMatrix& a, const DenseMatrix& b,
                                                 const DenseMatrix& c, const SparseVector& z);

/// Thin SVD M = U diag(s) Vᵀ of an m x n matrix, m >= n, singular values in
/// decreasing order.
struct ThinSvd {
  DenseMatrix u;
  std::vector<double> s;
  DenseMatrix v;
};

/// Smallest singular value allowed relative to the largest.
inline constexpr double kRankTolerance = 1e-12;

/// One-sided cyclic Jacobi. Throws SingularityError(mode) when the matrix has
/// fewer rows than columns or s_min < kRankTolerance * s_max.
ThinSvd thin_svd(const DenseMatrix& m, int mode = 0);

/// (A ⊗ B ⊗ C)† x through the factor SVDs:
/// (Va ⊗ Vb ⊗ Vc)(Σa⁻¹ ⊗ Σb⁻¹ ⊗ Σc⁻¹)(Uaᵀ ⊗ Ubᵀ ⊗ Ucᵀ) x.
std::vector<double> kron_pinv_apply(const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& c,
                                    std::span<const double> x);

/// Same, for a sparse right-hand side; the first factor is applied over the
/// stored entries only.
std::vector<double> kron_pinv_apply(const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& c,
                                    const SparseVector& x);

}  // namespace autoten
