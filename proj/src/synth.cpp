#include "autoten/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "autoten/errors.hpp"
#include "autoten/log.hpp"

namespace autoten {

const char* factor_mode_name(FactorMode m) { return m == FactorMode::Sparse ? "sparse" : "dense"; }
const char* noise_name(Noise n) { return n == Noise::Gaussian ? "gauss" : "none"; }

std::optional<FactorMode> parse_factor_mode(const std::string& s) {
  if (s == "sparse") return FactorMode::Sparse;
  if (s == "dense") return FactorMode::Dense;
  return std::nullopt;
}

std::optional<Noise> parse_noise(const std::string& s) {
  if (s == "gauss" || s == "gaussian") return Noise::Gaussian;
  if (s == "none") return Noise::None;
  return std::nullopt;
}

std::array<std::size_t, 3> sparse_support_sizes(const SparseTensor3::Dims& dims, int rank,
                                                std::size_t target_nnz) {
  std::array<std::size_t, 3> best{1, 1, 1};
  double best_err = std::numeric_limits<double>::infinity();
  std::size_t best_spread = 0;
  const double target = static_cast<double>(target_nnz);
  for (std::size_t na = 1; na <= dims[0]; ++na) {
    for (std::size_t nb = 1; nb <= dims[1]; ++nb) {
      const double partial = static_cast<double>(rank) * static_cast<double>(na * nb);
      if (partial > 2.0 * target && nb > 1) break;
      for (std::size_t nc = 1; nc <= dims[2]; ++nc) {
        const double total = partial * static_cast<double>(nc);
        const double err = std::abs(total - target);
        const std::size_t spread = std::max({na, nb, nc}) - std::min({na, nb, nc});
        if (err < best_err || (err == best_err && spread < best_spread)) {
          best = {na, nb, nc};
          best_err = err;
          best_spread = spread;
        }
        if (total > target) break;
      }
    }
  }
  return best;
}

SynthResult generate(const SynthSpec& spec) {
  if (spec.true_rank < 1) throw InputError("true rank must be >= 1");
  for (const auto d : spec.dims)
    if (d == 0) throw InputError("dims must be positive");
  if (spec.max_factor_value < 1) throw InputError("max_factor_value must be >= 1");

  const std::size_t f = static_cast<std::size_t>(spec.true_rank);
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> value(1, spec.max_factor_value);

  SynthResult out;
  DenseMatrix m[3];
  if (spec.factor_mode == FactorMode::Dense) {
    for (std::size_t n = 0; n < 3; ++n) {
      m[n] = DenseMatrix(spec.dims[n], f);
      for (auto& v : m[n].values()) v = value(rng);
    }
  } else {
    out.column_support = sparse_support_sizes(spec.dims, spec.true_rank, spec.target_nnz);
    for (std::size_t n = 0; n < 3; ++n) {
      m[n] = DenseMatrix(spec.dims[n], f);
      std::vector<std::size_t> rows(spec.dims[n]);
      std::iota(rows.begin(), rows.end(), 0);
      for (std::size_t r = 0; r < f; ++r) {
        std::shuffle(rows.begin(), rows.end(), rng);
        for (std::size_t s = 0; s < out.column_support[n]; ++s) m[n](rows[s], r) = value(rng);
      }
    }
  }
  out.truth = FactorSet(std::move(m[0]), std::move(m[1]), std::move(m[2]));
  const FactorSet& fs = out.truth;

  std::vector<Entry> entries;
  if (spec.factor_mode == FactorMode::Dense) {
    entries.reserve(spec.dims[0] * spec.dims[1] * spec.dims[2]);
    for (Index i = 0; i < spec.dims[0]; ++i)
      for (Index j = 0; j < spec.dims[1]; ++j)
        for (Index k = 0; k < spec.dims[2]; ++k) {
          double s = 0.0;
          for (std::size_t r = 0; r < f; ++r) s += fs.a(i, r) * fs.b(j, r) * fs.c(k, r);
          if (s != 0.0) entries.push_back({i, j, k, s});
        }
  } else {
    // Only the supports can contribute; overlapping terms are summed on construction.
    for (std::size_t r = 0; r < f; ++r) {
      std::vector<Index> supp[3];
      for (std::size_t n = 0; n < 3; ++n)
        for (Index i = 0; i < spec.dims[n]; ++i)
          if (fs.mode(n)(i, r) != 0.0) supp[n].push_back(i);
      for (const Index i : supp[0])
        for (const Index j : supp[1])
          for (const Index k : supp[2]) entries.push_back({i, j, k, fs.a(i, r) * fs.b(j, r) * fs.c(k, r)});
    }
  }

  if (spec.noise == Noise::Gaussian) {
    SparseTensor3 clean(spec.dims, std::move(entries));
    std::normal_distribution<double> gauss(0.0, std::sqrt(spec.noise_variance));
    entries.assign(clean.entries().begin(), clean.entries().end());
    for (auto& e : entries) e.value += gauss(rng);
  }
  out.tensor = SparseTensor3(spec.dims, std::move(entries));

  if (spec.factor_mode == FactorMode::Sparse) {
    const double achieved = static_cast<double>(out.tensor.nnz());
    const double target = static_cast<double>(spec.target_nnz);
    if (std::abs(achieved - target) > 0.2 * target) {
      out.warnings.push_back("sparse generation reached " + std::to_string(out.tensor.nnz()) +
                             " nonzeros for a target of " + std::to_string(spec.target_nnz));
      log::warn(out.warnings.back());
    }
  }
  return out;
}

}  // namespace autoten
