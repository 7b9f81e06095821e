#include "autoten/tensor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "autoten/errors.hpp"
#include "rank_dispatch.hpp"

namespace autoten {

// ---------------------------------------------------------------- DenseMatrix

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw DimensionError("matrix " + std::to_string(rows) + "x" + std::to_string(cols) +
                         " given " + std::to_string(values_.size()) + " values");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

DenseMatrix DenseMatrix::gram() const {
  DenseMatrix g(cols_, cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    const auto x = row(r);
    for (std::size_t p = 0; p < cols_; ++p) {
      const double xp = x[p];
      if (xp == 0.0) continue;
      for (std::size_t q = p; q < cols_; ++q) g(p, q) += xp * x[q];
    }
  }
  for (std::size_t p = 0; p < cols_; ++p)
    for (std::size_t q = 0; q < p; ++q) g(p, q) = g(q, p);
  return g;
}

std::vector<double> DenseMatrix::column_sums() const {
  std::vector<double> s(cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    const auto x = row(r);
    for (std::size_t c = 0; c < cols_; ++c) s[c] += x[c];
  }
  return s;
}

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.rows()));
  }
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto o = out.row(i);
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double v = a(i, p);
      if (v == 0.0) continue;
      const auto br = b.row(p);
      for (std::size_t j = 0; j < b.cols(); ++j) o[j] += v * br[j];
    }
  }
  return out;
}

// --------------------------------------------------------------- SparseVector

std::vector<double> SparseVector::to_dense() const {
  std::vector<double> d(length, 0.0);
  for (std::size_t n = 0; n < positions.size(); ++n) d[positions[n]] = values[n];
  return d;
}

// -------------------------------------------------------------- SparseTensor3

SparseTensor3::SparseTensor3(Dims dims, std::vector<Entry> entries) : dims_(dims) {
  for (std::size_t m = 0; m < 3; ++m) {
    if (dims_[m] == 0) throw DimensionError("tensor dimensions must be positive");
  }
  for (const auto& e : entries) {
    if (e.i >= dims_[0] || e.j >= dims_[1] || e.k >= dims_[2]) {
      throw BoundsError("entry (" + std::to_string(e.i) + "," + std::to_string(e.j) + "," +
                        std::to_string(e.k) + ") outside dims (" + std::to_string(dims_[0]) +
                        "," + std::to_string(dims_[1]) + "," + std::to_string(dims_[2]) + ")");
    }
    if (!std::isfinite(e.value)) throw InputError("non-finite tensor value");
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
    return std::tie(x.i, x.j, x.k) < std::tie(y.i, y.j, y.k);
  });
  entries_.reserve(entries.size());
  for (const auto& e : entries) {
    if (!entries_.empty()) {
      auto& last = entries_.back();
      if (last.i == e.i && last.j == e.j && last.k == e.k) {
        last.value += e.value;
        continue;
      }
    }
    entries_.push_back(e);
  }
  std::erase_if(entries_, [](const Entry& e) { return e.value == 0.0; });
}

double SparseTensor3::norm() const {
  long double s = 0.0L;
  for (const auto& e : entries_) s += static_cast<long double>(e.value) * e.value;
  return static_cast<double>(std::sqrt(s));
}

double SparseTensor3::sum() const {
  long double s = 0.0L;
  for (const auto& e : entries_) s += e.value;
  return static_cast<double>(s);
}

bool SparseTensor3::is_nonnegative() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const Entry& e) { return e.value >= 0.0; });
}

bool SparseTensor3::is_integer_valued() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](const Entry& e) { return e.value == std::round(e.value); });
}

SparseTensor3 clamp_nonnegative(const SparseTensor3& t) {
  std::vector<Entry> kept;
  kept.reserve(t.nnz());
  for (const auto& e : t.entries())
    if (e.value > 0.0) kept.push_back(e);
  return SparseTensor3(t.dims(), std::move(kept));
}

// ------------------------------------------------------------------ FactorSet

FactorSet::FactorSet(DenseMatrix a_, DenseMatrix b_, DenseMatrix c_)
    : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)), weights(a.cols(), 1.0) {}

FactorSet::FactorSet(DenseMatrix a_, DenseMatrix b_, DenseMatrix c_, std::vector<double> w)
    : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)), weights(std::move(w)) {}

const DenseMatrix& FactorSet::mode(std::size_t m) const {
  switch (m) {
    case 0: return a;
    case 1: return b;
    case 2: return c;
  }
  throw DimensionError("mode must be 0, 1 or 2");
}

DenseMatrix& FactorSet::mode(std::size_t m) {
  return const_cast<DenseMatrix&>(std::as_const(*this).mode(m));
}

void FactorSet::validate() const {
  const std::size_t f = a.cols();
  if (f == 0) throw DimensionError("factor set has zero columns");
  if (b.cols() != f || c.cols() != f) {
    throw DimensionError("factor column counts differ: " + std::to_string(a.cols()) + ", " +
                         std::to_string(b.cols()) + ", " + std::to_string(c.cols()));
  }
  if (weights.size() != f) {
    throw DimensionError("weights length " + std::to_string(weights.size()) + " != rank " +
                         std::to_string(f));
  }
}

void FactorSet::validate(const SparseTensor3::Dims& dims) const {
  validate();
  for (std::size_t m = 0; m < 3; ++m) {
    if (mode(m).rows() != dims[m]) {
      throw DimensionError("factor " + std::to_string(m + 1) + " has " +
                           std::to_string(mode(m).rows()) + " rows, tensor mode has " +
                           std::to_string(dims[m]));
    }
  }
}

FactorSet absorb_weights(FactorSet fs) {
  for (std::size_t r = 0; r < fs.a.rows(); ++r) {
    auto row = fs.a.row(r);
    for (std::size_t f = 0; f < row.size(); ++f) row[f] *= fs.weights[f];
  }
  std::fill(fs.weights.begin(), fs.weights.end(), 1.0);
  return fs;
}

// ----------------------------------------------------------------- CoreTensor

CoreTensor::CoreTensor(std::size_t f, std::vector<double> values) : f_(f), values_(std::move(values)) {
  if (values_.size() != f * f * f) throw DimensionError("core tensor needs F^3 values");
}

// ----------------------------------------------------------------------- COO

namespace {

bool parse_index(std::string_view tok, Index& out) {
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_real(const std::string& tok, double& out) {
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size() && !tok.empty() && std::isfinite(out);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) toks.push_back(tok);
  return toks;
}

std::string strip_comment(const std::string& line) {
  const auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

}  // namespace

SparseTensor3 load_coo(std::istream& in) {
  std::vector<Entry> entries;
  bool have_dims = false;
  SparseTensor3::Dims dims{0, 0, 0};
  Index max_index[3] = {0, 0, 0};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line.compare(first, 5, "%dims") == 0) {
      if (have_dims || !entries.empty()) throw ParseError(lineno, "%dims header must come first");
      const auto toks = split_ws(strip_comment(line.substr(first + 5)));
      if (toks.size() != 3) throw ParseError(lineno, "%dims needs three integers");
      for (std::size_t m = 0; m < 3; ++m) {
        if (!parse_index(toks[m], dims[m]) || dims[m] == 0)
          throw ParseError(lineno, "invalid dimension '" + toks[m] + "'");
      }
      have_dims = true;
      continue;
    }
    const auto toks = split_ws(strip_comment(line));
    if (toks.empty()) continue;
    if (toks.size() != 4) {
      throw ParseError(lineno, "expected 'i j k value', got " + std::to_string(toks.size()) + " fields");
    }
    Entry e;
    Index* idx[3] = {&e.i, &e.j, &e.k};
    for (std::size_t m = 0; m < 3; ++m) {
      if (!parse_index(toks[m], *idx[m])) throw ParseError(lineno, "invalid index '" + toks[m] + "'");
      if (have_dims && *idx[m] >= dims[m]) {
        throw BoundsError("line " + std::to_string(lineno) + ": index " + toks[m] +
                          " out of bounds for mode " + std::to_string(m + 1) + " of size " +
                          std::to_string(dims[m]));
      }
      max_index[m] = std::max(max_index[m], *idx[m]);
    }
    if (!parse_real(toks[3], e.value)) throw ParseError(lineno, "invalid value '" + toks[3] + "'");
    entries.push_back(e);
  }
  if (!have_dims) {
    if (entries.empty()) throw ParseError(lineno, "no entries and no %dims header");
    for (std::size_t m = 0; m < 3; ++m) dims[m] = max_index[m] + 1;
  }
  return SparseTensor3(dims, std::move(entries));
}

SparseTensor3 load_coo_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return load_coo(in);
}

void save_coo(std::ostream& out, const SparseTensor3& t) {
  const auto& d = t.dims();
  out << "%dims " << d[0] << ' ' << d[1] << ' ' << d[2] << '\n';
  out << std::setprecision(17);
  for (const auto& e : t.entries()) out << e.i << ' ' << e.j << ' ' << e.k << ' ' << e.value << '\n';
}

void save_coo_file(const std::string& path, const SparseTensor3& t) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  save_coo(out, t);
}

// ---------------------------------------------------------------- vectorize

SparseVector vectorize(const SparseTensor3& t) {
  SparseVector v;
  v.length = t.size();
  v.positions.reserve(t.nnz());
  v.values.reserve(t.nnz());
  // Lexicographic entry order makes positions strictly increasing.
  for (const auto& e : t.entries()) {
    v.positions.push_back(linear_position(t.dims(), e.i, e.j, e.k));
    v.values.push_back(e.value);
  }
  return v;
}

SparseTensor3 devectorize(const SparseVector& v, const SparseTensor3::Dims& dims) {
  const Index jk = dims[1] * dims[2];
  if (v.length != dims[0] * jk) throw DimensionError("vector length does not match dims");
  std::vector<Entry> entries;
  entries.reserve(v.nnz());
  for (std::size_t n = 0; n < v.nnz(); ++n) {
    const Index p = v.positions[n];
    entries.push_back({p / jk, (p % jk) / dims[2], p % dims[2], v.values[n]});
  }
  return SparseTensor3(dims, std::move(entries));
}

// ------------------------------------------------------------------- kernels

namespace {

// Entries are sorted by (i, j, k), so runs sharing (i, j) are mode-3 fibers.
// Modes 1 and 2 accumulate sum_k x c_k over a fiber before one Hadamard with
// the fixed factor row; mode 3 forms a_i * b_j once per fiber.
template <std::size_t FS>
void mttkrp_kernel(const SparseTensor3& t, const FactorSet& fs, std::size_t mode,
                   DenseMatrix& out) {
  const std::size_t f = detail::rank_or<FS>(fs.rank());
  const auto entries = t.entries();
  const std::size_t nnz = entries.size();
  auto acc = detail::make_rank_buffer<FS>(f);
  std::size_t n = 0;
  while (n < nnz) {
    const Index i = entries[n].i, j = entries[n].j;
    const double* ar = fs.a.row(i).data();
    const double* br = fs.b.row(j).data();
    if (mode == 2) {
      for (std::size_t r = 0; r < f; ++r) acc[r] = ar[r] * br[r];
      for (; n < nnz && entries[n].i == i && entries[n].j == j; ++n) {
        const double x = entries[n].value;
        double* o = out.row(entries[n].k).data();
        for (std::size_t r = 0; r < f; ++r) o[r] += x * acc[r];
      }
      continue;
    }
    std::fill(acc.begin(), acc.end(), 0.0);
    for (; n < nnz && entries[n].i == i && entries[n].j == j; ++n) {
      const double x = entries[n].value;
      const double* cr = fs.c.row(entries[n].k).data();
      for (std::size_t r = 0; r < f; ++r) acc[r] += x * cr[r];
    }
    const double* other = mode == 0 ? br : ar;
    double* o = out.row(mode == 0 ? i : j).data();
    for (std::size_t r = 0; r < f; ++r) o[r] += acc[r] * other[r];
  }
}

template <std::size_t FS>
void model_kernel(const SparseTensor3& t, const FactorSet& fs, std::vector<double>& m) {
  const std::size_t f = detail::rank_or<FS>(fs.rank());
  const auto entries = t.entries();
  const std::size_t nnz = entries.size();
  auto ab = detail::make_rank_buffer<FS>(f);
  std::size_t n = 0;
  while (n < nnz) {
    const Index i = entries[n].i, j = entries[n].j;
    const double* ar = fs.a.row(i).data();
    const double* br = fs.b.row(j).data();
    for (std::size_t r = 0; r < f; ++r) ab[r] = fs.weights[r] * ar[r] * br[r];
    for (; n < nnz && entries[n].i == i && entries[n].j == j; ++n) {
      const double* cr = fs.c.row(entries[n].k).data();
      double s = 0.0;
      for (std::size_t r = 0; r < f; ++r) s += ab[r] * cr[r];
      m[n] = s;
    }
  }
}

}  // namespace

DenseMatrix mttkrp(const SparseTensor3& t, const FactorSet& fs, std::size_t mode) {
  if (mode > 2) throw DimensionError("mode must be 0, 1 or 2");
  fs.validate(t.dims());
  DenseMatrix out(t.dim(mode), fs.rank());
  detail::dispatch_rank(fs.rank(), [&](auto tag) { mttkrp_kernel<decltype(tag)::value>(t, fs, mode, out); });
  return out;
}

std::vector<double> model_at_entries(const SparseTensor3& t, const FactorSet& fs) {
  fs.validate(t.dims());
  std::vector<double> m(t.nnz());
  detail::dispatch_rank(fs.rank(), [&](auto tag) { model_kernel<decltype(tag)::value>(t, fs, m); });
  return m;
}

namespace {

std::vector<long double> gram_ld(const DenseMatrix& m) {
  const std::size_t f = m.cols();
  std::vector<long double> g(f * f, 0.0L);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto x = m.row(r);
    for (std::size_t p = 0; p < f; ++p)
      for (std::size_t q = 0; q < f; ++q) g[p * f + q] += static_cast<long double>(x[p]) * x[q];
  }
  return g;
}

long double model_norm_squared_ld(const FactorSet& fs) {
  const std::size_t f = fs.rank();
  const auto ga = gram_ld(fs.a);
  const auto gb = gram_ld(fs.b);
  const auto gc = gram_ld(fs.c);
  long double s = 0.0L;
  for (std::size_t p = 0; p < f; ++p)
    for (std::size_t q = 0; q < f; ++q)
      s += static_cast<long double>(fs.weights[p]) * fs.weights[q] * ga[p * f + q] *
           gb[p * f + q] * gc[p * f + q];
  return s;
}

}  // namespace

double model_norm_squared(const FactorSet& fs) {
  fs.validate();
  return static_cast<double>(model_norm_squared_ld(fs));
}

double reconstruct_residual_fro(const SparseTensor3& t, const FactorSet& fs) {
  fs.validate(t.dims());
  const std::size_t f = fs.rank();
  // ||X - M||^2 = sum_nz (x - m)^2 + (||M||^2 - sum_nz m^2).
  // The second term is the model mass off the stored support; it is exactly
  // zero when every coordinate is stored.
  long double on_support = 0.0L;
  long double model_on_support = 0.0L;
  for (const auto& e : t.entries()) {
    const double* ar = fs.a.row(e.i).data();
    const double* br = fs.b.row(e.j).data();
    const double* cr = fs.c.row(e.k).data();
    long double m = 0.0L;
    for (std::size_t r = 0; r < f; ++r)
      m += static_cast<long double>(fs.weights[r]) * ar[r] * br[r] * cr[r];
    const long double d = e.value - m;
    on_support += d * d;
    model_on_support += m * m;
  }
  long double off_support = 0.0L;
  if (t.nnz() != t.size()) off_support = std::max(0.0L, model_norm_squared_ld(fs) - model_on_support);
  return static_cast<double>(std::sqrt(on_support + off_support));
}

// ----------------------------------------------------------------------- CSV

void save_matrix_csv(std::ostream& out, const DenseMatrix& m) {
  out << "# " << m.rows() << ' ' << m.cols() << '\n';
  out << std::setprecision(17);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
}

void save_matrix_csv_file(const std::string& path, const DenseMatrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  save_matrix_csv(out, m);
}

DenseMatrix load_matrix_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::size_t rows = 0, cols = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 3 || toks[0] != "#") throw ParseError(lineno, "expected '# rows cols' header");
    Index r = 0, c = 0;
    if (!parse_index(toks[1], r) || !parse_index(toks[2], c) || r == 0 || c == 0)
      throw ParseError(lineno, "invalid matrix header");
    rows = r;
    cols = c;
    have_header = true;
    break;
  }
  if (!have_header) throw ParseError(lineno, "missing '# rows cols' header");
  std::vector<double> values;
  values.reserve(rows * cols);
  std::size_t seen = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (seen == rows) throw ParseError(lineno, "more rows than declared");
    std::istringstream ss(line);
    std::string cell;
    std::size_t ncell = 0;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      const std::string tok = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      double v = 0.0;
      if (!parse_real(tok, v)) throw ParseError(lineno, "invalid number '" + tok + "'");
      values.push_back(v);
      ++ncell;
    }
    if (ncell != cols) {
      throw ParseError(lineno, "expected " + std::to_string(cols) + " columns, got " + std::to_string(ncell));
    }
    ++seen;
  }
  if (seen != rows) throw ParseError(lineno, "expected " + std::to_string(rows) + " rows, got " + std::to_string(seen));
  return DenseMatrix(rows, cols, std::move(values));
}

DenseMatrix load_matrix_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return load_matrix_csv(in);
}

}  // namespace autoten
