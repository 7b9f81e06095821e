#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "autoten/tensor.hpp"

namespace autoten {

enum class FactorMode { Sparse, Dense };
enum class Noise { None, Gaussian };

const char* factor_mode_name(FactorMode m);
const char* noise_name(Noise n);
std::optional<FactorMode> parse_factor_mode(const std::string& s);
/// Accepts "gauss"/"gaussian" and "none".
std::optional<Noise> parse_noise(const std::string& s);

struct SynthSpec {
  SparseTensor3::Dims dims{50, 50, 50};
  int true_rank = 3;
  FactorMode factor_mode = FactorMode::Sparse;
  Noise noise = Noise::None;
  std::uint64_t seed = 1;
  /// Sparse mode: target number of tensor nonzeros.
  std::size_t target_nnz = 500;
  double noise_variance = 0.1;
  /// Factor entries are integers drawn uniformly from [1, max_factor_value].
  int max_factor_value = 5;
};

struct SynthResult {
  SparseTensor3 tensor;
  FactorSet truth;
  /// Per-mode nonzeros per column used in sparse mode.
  std::array<std::size_t, 3> column_support{0, 0, 0};
  std::vector<std::string> warnings;
};

/// Random nonnegative integer factors and the tensor sum_f a_f o b_f o c_f.
///
/// Sparse mode draws, for every column, a random support whose per-mode sizes
/// are chosen so that F * |a| * |b| * |c| is as close as possible to the
/// nonzero target, and reports a warning if the achieved count misses the
/// target by more than 20%. Dense mode fills every factor entry. Gaussian
/// noise is added to each nonzero of the noiseless tensor; values pushed
/// below zero are kept.
SynthResult generate(const SynthSpec& spec);

/// Per-mode column support sizes minimizing |F * na * nb * nc - target|.
std::array<std::size_t, 3> sparse_support_sizes(const SparseTensor3::Dims& dims, int rank,
                                                std::size_t target_nnz);

}  // namespace autoten
