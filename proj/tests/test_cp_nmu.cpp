#include <doctest.h>

#include <cmath>

#include "autoten/cp_nmu.hpp"
#include "autoten/errors.hpp"
#include "autoten/synth.hpp"
#include "oracles.hpp"

using namespace autoten;

TEST_CASE("rank-one recovery") {
  const SparseTensor3::Dims d{6, 5, 4};
  const auto truth = oracle::random_positive_factors(d, 1, 3);
  const auto t = oracle::exact_tensor(truth, d);
  const auto res = cp_nmu_fit(t, SolverConfig::nmu_defaults(1, 9));
  CHECK(reconstruct_residual_fro(t, res.factors) / t.norm() < 1e-4);
  CHECK(res.objective == doctest::Approx(reconstruct_residual_fro(t, res.factors)));
  CHECK(res.fit > 1.0 - 1e-4);
}

TEST_CASE("zero tensor") {
  const SparseTensor3 t({3, 4, 5}, {});
  const auto res = cp_nmu_fit(t, SolverConfig::nmu_defaults(2, 1));
  CHECK(reconstruct_residual_fro(t, res.factors) == 0.0);
  CHECK(res.converged);
}

TEST_CASE("noiseless sparse rank three, best of five") {
  SynthSpec spec;
  spec.true_rank = 3;
  spec.seed = 42;
  const auto syn = generate(spec);
  const auto res = cp_nmu_fit_best(syn.tensor, SolverConfig::nmu_defaults(3, 42), 5);
  CHECK(res.objective / syn.tensor.norm() < 0.05);
}

TEST_CASE("objective is monotone and factors stay nonnegative") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = oracle::random_tensor({5, 4, 6}, 0.5, seed);
    auto cfg = SolverConfig::nmu_defaults(1 + seed % 3, seed);
    cfg.tol = 1e-300;
    cfg.max_outer_iters = 60;
    const auto res = cp_nmu_fit(t, cfg);
    REQUIRE_FALSE(res.history.empty());
    for (std::size_t n = 1; n < res.history.size(); ++n)
      CHECK(res.history[n] <= res.history[n - 1] + 1e-10 * std::max(1.0, res.history[n - 1]));
    for (std::size_t m = 0; m < 3; ++m)
      for (double v : res.factors.mode(m).values()) CHECK(v >= 0.0);
    const double resid = reconstruct_residual_fro(t, res.factors);
    CHECK(std::sqrt(res.history.back()) == doctest::Approx(resid).epsilon(1e-8));
  }
}

TEST_CASE("determinism and restarts") {
  const auto t = oracle::random_tensor({6, 6, 6}, 0.3, 12);
  const auto cfg = SolverConfig::nmu_defaults(2, 77);
  const auto r1 = cp_nmu_fit(t, cfg), r2 = cp_nmu_fit(t, cfg);
  CHECK(r1.factors.a == r2.factors.a);
  CHECK(r1.history == r2.history);
  const auto best = cp_nmu_fit_best(t, cfg, 4);
  CHECK(best.objective <= cp_nmu_fit_best(t, cfg, 1).objective + 1e-12);
  CHECK(cp_nmu_fit_best(t, cfg, 4).factors.b == best.factors.b);
}

TEST_CASE("invalid configurations") {
  const auto t = oracle::random_tensor({2, 2, 2}, 0.9, 1);
  CHECK_THROWS_AS(cp_nmu_fit(t, SolverConfig::nmu_defaults(0)), InputError);
  CHECK_THROWS_AS(cp_nmu_fit(t, SolverConfig::nmu_defaults(5)), InputError);
  auto cfg = SolverConfig::nmu_defaults(1);
  cfg.max_outer_iters = 0;
  CHECK_THROWS_AS(cp_nmu_fit(t, cfg), InputError);
  CHECK_THROWS_AS(cp_nmu_fit_best(t, SolverConfig::nmu_defaults(1), 0), InputError);
}

TEST_CASE("negative entries only warn") {
  const SparseTensor3 t({2, 2, 2}, {{0, 0, 0, 1.0}, {1, 1, 1, -0.5}});
  CHECK_NOTHROW(cp_nmu_fit(t, SolverConfig::nmu_defaults(1)));
}
