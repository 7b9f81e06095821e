#include "autoten/kron.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "autoten/errors.hpp"

namespace autoten {

namespace {

// Contracts the leading mode of a row-major array of shape (in_dim, rest) with
// M and moves the new mode to the back: out[r, a] = sum_b M[a, b] in[b, r].
void lead_mode_product(const DenseMatrix& m, Transpose tr, std::span<const double> in,
                       std::size_t rest, std::vector<double>& tmp, std::vector<double>& out) {
  const std::size_t out_dim = tr == Transpose::No ? m.rows() : m.cols();
  const std::size_t in_dim = tr == Transpose::No ? m.cols() : m.rows();
  tmp.assign(out_dim * rest, 0.0);
  for (std::size_t a = 0; a < out_dim; ++a) {
    double* d = tmp.data() + a * rest;
    for (std::size_t b = 0; b < in_dim; ++b) {
      const double coef = tr == Transpose::No ? m(a, b) : m(b, a);
      if (coef == 0.0) continue;
      const double* s = in.data() + b * rest;
      for (std::size_t r = 0; r < rest; ++r) d[r] += coef * s[r];
    }
  }
  out.resize(out_dim * rest);
  constexpr std::size_t kBlock = 64;
  for (std::size_t r0 = 0; r0 < rest; r0 += kBlock) {
    const std::size_t r1 = std::min(rest, r0 + kBlock);
    for (std::size_t a = 0; a < out_dim; ++a) {
      const double* s = tmp.data() + a * rest;
      for (std::size_t r = r0; r < r1; ++r) out[r * out_dim + a] = s[r];
    }
  }
}

struct Coord3 {
  Index i, j, k;
};

Coord3 decode(Index pos, Index jdim, Index kdim) {
  const Index jk = jdim * kdim;
  return {pos / jk, (pos % jk) / kdim, pos % kdim};
}

}  // namespace

std::vector<double> kron_mat_vec(std::span<const DenseMatrix> mats, std::span<const double> x,
                                 Transpose transpose) {
  if (mats.empty()) throw DimensionError("kron_mat_vec: no matrices");
  const std::size_t n = mats.size();
  std::vector<std::size_t> in_dims(n), out_dims(n);
  std::size_t in_len = 1;
  for (std::size_t m = 0; m < n; ++m) {
    in_dims[m] = transpose == Transpose::No ? mats[m].cols() : mats[m].rows();
    out_dims[m] = transpose == Transpose::No ? mats[m].rows() : mats[m].cols();
    in_len *= in_dims[m];
  }
  if (x.size() != in_len) {
    throw DimensionError("kron_mat_vec: vector length " + std::to_string(x.size()) +
                         " != product of column counts " + std::to_string(in_len));
  }

  if (in_len == 0) {
    std::size_t out_len = 1;
    for (const std::size_t d : out_dims) out_len *= d;
    return std::vector<double>(out_len, 0.0);
  }

  // Each step contracts the leading mode and rotates it to the back, so after
  // n steps the modes are back in their original order.
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> tmp, next;
  std::size_t len = in_len;
  for (std::size_t m = 0; m < n; ++m) {
    const std::size_t rest = len / in_dims[m];
    lead_mode_product(mats[m], transpose, cur, rest, tmp, next);
    len = rest * out_dims[m];
    cur.swap(next);
  }
  return cur;
}

std::vector<double> kron_row_sums(std::span<const DenseMatrix> mats) {
  if (mats.empty()) throw DimensionError("kron_row_sums: no matrices");
  std::vector<double> s{1.0};
  for (const auto& m : mats) {
    const auto cs = m.column_sums();
    std::vector<double> next;
    next.reserve(s.size() * cs.size());
    for (const double u : s)
      for (const double v : cs) next.push_back(u * v);
    s.swap(next);
  }
  return s;
}

std::vector<double> kron3_apply_at(const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& c,
                                   std::span<const double> x, std::span<const Index> positions) {
  const std::size_t fa = a.cols(), fb = b.cols(), fc = c.cols();
  if (x.size() != fa * fb * fc) throw DimensionError("kron3_apply_at: vector length mismatch");
  const Index total = static_cast<Index>(a.rows()) * b.rows() * c.rows();
  std::vector<double> out(positions.size(), 0.0);
  std::vector<double> t(fb * fc), u(fc);
  Index cur_i = ~Index{0}, cur_j = ~Index{0};
  for (std::size_t n = 0; n < positions.size(); ++n) {
    if (positions[n] >= total) throw BoundsError("kron3_apply_at: position out of range");
    const auto [i, j, k] = decode(positions[n], b.rows(), c.rows());
    if (i != cur_i) {
      std::fill(t.begin(), t.end(), 0.0);
      for (std::size_t p = 0; p < fa; ++p) {
        const double ap = a(i, p);
        if (ap == 0.0) continue;
        const double* xs = x.data() + p * fb * fc;
        for (std::size_t qr = 0; qr < fb * fc; ++qr) t[qr] += ap * xs[qr];
      }
      cur_i = i;
      cur_j = ~Index{0};
    }
    if (j != cur_j) {
      std::fill(u.begin(), u.end(), 0.0);
      for (std::size_t q = 0; q < fb; ++q) {
        const double bq = b(j, q);
        if (bq == 0.0) continue;
        for (std::size_t r = 0; r < fc; ++r) u[r] += bq * t[q * fc + r];
      }
      cur_j = j;
    }
    double s = 0.0;
    const auto cr = c.row(k);
    for (std::size_t r = 0; r < fc; ++r) s += cr[r] * u[r];
    out[n] = s;
  }
  return out;
}

std::vector<double> kron3_transpose_apply_sparse(const DenseMatrix& a, const DenseMatrix& b,
                                                 const DenseMatrix& c, const SparseVector& z) {
  const std::size_t fa = a.cols(), fb = b.cols(), fc = c.cols();
  if (z.length != static_cast<Index>(a.rows()) * b.rows() * c.rows())
    throw DimensionError("kron3_transpose_apply_sparse: vector length mismatch");
  std::vector<double> out(fa * fb * fc, 0.0);
  std::vector<double> t(fb * fc, 0.0), u(fc, 0.0);
  const std::size_t nnz = z.nnz();
  std::size_t n = 0;
  while (n < nnz) {
    const Index i = decode(z.positions[n], b.rows(), c.rows()).i;
    std::fill(t.begin(), t.end(), 0.0);
    while (n < nnz && decode(z.positions[n], b.rows(), c.rows()).i == i) {
      const Index j = decode(z.positions[n], b.rows(), c.rows()).j;
      std::fill(u.begin(), u.end(), 0.0);
      while (n < nnz) {
        const auto co = decode(z.positions[n], b.rows(), c.rows());
        if (co.i != i || co.j != j) break;
        const auto cr = c.row(co.k);
        const double zv = z.values[n];
        for (std::size_t r = 0; r < fc; ++r) u[r] += zv * cr[r];
        ++n;
      }
      for (std::size_t q = 0; q < fb; ++q) {
        const double bq = b(j, q);
        if (bq == 0.0) continue;
        for (std::size_t r = 0; r < fc; ++r) t[q * fc + r] += bq * u[r];
      }
    }
    for (std::size_t p = 0; p < fa; ++p) {
      const double ap = a(i, p);
      if (ap == 0.0) continue;
      double* o = out.data() + p * fb * fc;
      for (std::size_t qr = 0; qr < fb * fc; ++qr) o[qr] += ap * t[qr];
    }
  }
  return out;
}

ThinSvd thin_svd(const DenseMatrix& m, int mode) {
  const std::size_t rows = m.rows(), cols = m.cols();
  if (cols == 0) throw DimensionError("thin_svd: empty matrix");
  if (rows < cols) {
    throw SingularityError(mode, "factor of mode " + std::to_string(mode + 1) + " has " +
                                     std::to_string(rows) + " rows for " + std::to_string(cols) +
                                     " columns and cannot have full column rank");
  }
  // Column-major working copies so rotations touch contiguous memory.
  std::vector<double> w(rows * cols), v(cols * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) w[c * rows + r] = m(r, c);
  for (std::size_t c = 0; c < cols; ++c) v[c * cols + c] = 1.0;

  constexpr double kEps = 2.220446049250313e-16;
  constexpr int kMaxSweeps = 80;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        double* wp = w.data() + p * rows;
        double* wq = w.data() + q * rows;
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
          alpha += wp[r] * wp[r];
          beta += wq[r] * wq[r];
          gamma += wp[r] * wq[r];
        }
        if (gamma == 0.0 || std::abs(gamma) <= kEps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (std::size_t r = 0; r < rows; ++r) {
          const double x = wp[r], y = wq[r];
          wp[r] = cs * x - sn * y;
          wq[r] = sn * x + cs * y;
        }
        double* vp = v.data() + p * cols;
        double* vq = v.data() + q * cols;
        for (std::size_t r = 0; r < cols; ++r) {
          const double x = vp[r], y = vq[r];
          vp[r] = cs * x - sn * y;
          vq[r] = sn * x + cs * y;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += w[c * rows + r] * w[c * rows + r];
    sigma[c] = std::sqrt(s);
  }
  std::vector<std::size_t> order(cols);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  const double smax = sigma[order.front()];
  const double smin = sigma[order.back()];
  if (!(smax > 0.0) || smin < kRankTolerance * smax) {
    throw SingularityError(mode, "factor of mode " + std::to_string(mode + 1) +
                                     " is numerically rank deficient (s_min/s_max = " +
                                     std::to_string(smax > 0.0 ? smin / smax : 0.0) + ")");
  }

  ThinSvd out{DenseMatrix(rows, cols), std::vector<double>(cols), DenseMatrix(cols, cols)};
  for (std::size_t c = 0; c < cols; ++c) {
    const std::size_t src = order[c];
    out.s[c] = sigma[src];
    for (std::size_t r = 0; r < rows; ++r) out.u(r, c) = w[src * rows + r] / sigma[src];
    for (std::size_t r = 0; r < cols; ++r) out.v(r, c) = v[src * cols + r];
  }
  return out;
}

namespace {

std::vector<double> finish_pinv(const ThinSvd& sa, const ThinSvd& sb, const ThinSvd& sc,
                                std::vector<double> y) {
  const std::size_t fa = sa.s.size(), fb = sb.s.size(), fc = sc.s.size();
  for (std::size_t p = 0; p < fa; ++p)
    for (std::size_t q = 0; q < fb; ++q)
      for (std::size_t r = 0; r < fc; ++r) y[(p * fb + q) * fc + r] /= sa.s[p] * sb.s[q] * sc.s[r];
  const DenseMatrix vs[3] = {sa.v, sb.v, sc.v};
  return kron_mat_vec(vs, y);
}

}  // namespace

std::vector<double> kron_pinv_apply(const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& c,
                                    std::span<const double> x) {
  if (x.size() != a.rows() * b.rows() * c.rows())
    throw DimensionError("kron_pinv_apply: vector length != I*J*K");
  const ThinSvd sa = thin_svd(a, 0), sb = thin_svd(b, 1), sc = thin_svd(c, 2);
  const DenseMatrix us[3] = {sa.u, sb.u, sc.u};
  return finish_pinv(sa, sb, sc, kron_mat_vec(us, x, Transpose::Yes));
}

std::vector<double> kron_pinv_apply(const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& c,
                                    const SparseVector& x) {
  if (x.length != static_cast<Index>(a.rows()) * b.rows() * c.rows())
    throw DimensionError("kron_pinv_apply: vector length != I*J*K");
  const ThinSvd sa = thin_svd(a, 0), sb = thin_svd(b, 1), sc = thin_svd(c, 2);
  return finish_pinv(sa, sb, sc, kron3_transpose_apply_sparse(sa.u, sb.u, sc.u, x));
}

}  // namespace autoten
