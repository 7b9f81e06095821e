#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace autoten {

using Index = std::uint64_t;

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Takes ownership of a row-major value array; throws DimensionError if
  /// values.size() != rows * cols.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  DenseMatrix transposed() const;
  /// Mᵀ M.
  DenseMatrix gram() const;
  /// Per-column sums, i.e. 1ᵀ M.
  std::vector<double> column_sums() const;
  bool all_finite() const noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

struct Entry {
  Index i = 0;
  Index j = 0;
  Index k = 0;
  double value = 0.0;
  friend bool operator==(const Entry&, const Entry&) = default;
};

/// Sparse vector with strictly increasing positions.
struct SparseVector {
  Index length = 0;
  std::vector<Index> positions;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return positions.size(); }
  std::vector<double> to_dense() const;
};

/// Coordinate-format 3-mode tensor. Immutable after construction.
///
/// Entries are kept sorted lexicographically by (i, j, k); duplicate
/// coordinates are summed and coordinates whose summed value is exactly zero
/// are dropped.
class SparseTensor3 {
 public:
  using Dims = std::array<Index, 3>;

  SparseTensor3() = default;
  SparseTensor3(Dims dims, std::vector<Entry> entries);

  const Dims& dims() const noexcept { return dims_; }
  Index dim(std::size_t mode) const { return dims_[mode]; }
  /// I * J * K.
  Index size() const noexcept { return dims_[0] * dims_[1] * dims_[2]; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  std::span<const Entry> entries() const noexcept { return entries_; }

  double norm() const;
  double sum() const;
  bool is_nonnegative() const;
  bool is_integer_valued() const;

  friend bool operator==(const SparseTensor3&, const SparseTensor3&) = default;

 private:
  Dims dims_{0, 0, 0};
  std::vector<Entry> entries_;
};

/// Returns a copy with every value <= 0 removed.
SparseTensor3 clamp_nonnegative(const SparseTensor3& t);

/// Three factor matrices sharing a column count, plus per-component weights.
struct FactorSet {
  DenseMatrix a;
  DenseMatrix b;
  DenseMatrix c;
  std::vector<double> weights;

  FactorSet() = default;
  /// Weights default to ones.
  FactorSet(DenseMatrix a, DenseMatrix b, DenseMatrix c);
  FactorSet(DenseMatrix a, DenseMatrix b, DenseMatrix c, std::vector<double> weights);

  std::size_t rank() const noexcept { return a.cols(); }
  const DenseMatrix& mode(std::size_t m) const;
  DenseMatrix& mode(std::size_t m);

  /// Throws DimensionError unless all shapes agree with each other and, when
  /// given, with the tensor dims.
  void validate() const;
  void validate(const SparseTensor3::Dims& dims) const;
};

/// Multiplies the weights into the mode-1 factor and resets them to ones.
FactorSet absorb_weights(FactorSet fs);

/// Dense F x F x F core, stored with the last index varying fastest.
class CoreTensor {
 public:
  CoreTensor() = default;
  explicit CoreTensor(std::size_t f, std::vector<double> values);

  std::size_t f() const noexcept { return f_; }
  double operator()(std::size_t p, std::size_t q, std::size_t r) const {
    return values_[(p * f_ + q) * f_ + r];
  }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t f_ = 0;
  std::vector<double> values_;
};

/// Parse "i j k value" lines with an optional "%dims I J K" header.
SparseTensor3 load_coo(std::istream& in);
SparseTensor3 load_coo_file(const std::string& path);
void save_coo(std::ostream& out, const SparseTensor3& t);
void save_coo_file(const std::string& path, const SparseTensor3& t);

/// Entry (i, j, k) maps to position i*J*K + j*K + k.
SparseVector vectorize(const SparseTensor3& t);
SparseTensor3 devectorize(const SparseVector& v, const SparseTensor3::Dims& dims);

inline Index linear_position(const SparseTensor3::Dims& dims, Index i, Index j, Index k) {
  return (i * dims[1] + j) * dims[2] + k;
}

/// Matricized tensor times Khatri-Rao product for a 0-based mode. Ignores the
/// weights vector. Iterates over stored entries only.
DenseMatrix mttkrp(const SparseTensor3& t, const FactorSet& fs, std::size_t mode);

/// Value of the (weighted) model at every stored coordinate of t.
std::vector<double> model_at_entries(const SparseTensor3& t, const FactorSet& fs);

/// Squared Frobenius norm of the weighted model, via Gram matrices.
double model_norm_squared(const FactorSet& fs);

/// ||X - sum_f w_f a_f o b_f o c_f||_F without densifying X.
double reconstruct_residual_fro(const SparseTensor3& t, const FactorSet& fs);

/// CSV with a "# rows cols" header line.
void save_matrix_csv(std::ostream& out, const DenseMatrix& m);
void save_matrix_csv_file(const std::string& path, const DenseMatrix& m);
DenseMatrix load_matrix_csv(std::istream& in);
DenseMatrix load_matrix_csv_file(const std::string& path);

}  // namespace autoten
