#include <doctest.h>

#include <cmath>

#include "autoten/cp_apr.hpp"
#include "autoten/errors.hpp"
#include "autoten/synth.hpp"
#include "oracles.hpp"

using namespace autoten;

namespace {

double model_log_likelihood(const SparseTensor3& t, const FactorSet& fs) {
  const Eigen::VectorXd x = oracle::dense(t), m = oracle::model(fs, t.dims());
  double ll = 0.0;
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    if (x(n) > 0.0) ll += x(n) * std::log(std::max(m(n), 1e-16));
    ll -= m(n);
  }
  return ll;
}

}  // namespace

TEST_CASE("log-likelihood matches the dense definition") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SparseTensor3::Dims d{3, 4, 5};
    const auto t = oracle::random_tensor(d, 0.4, seed, true);
    auto fs = random_factors(d, 2, seed);
    fs.weights = {1.5, 0.25};
    CHECK(poisson_log_likelihood(t, fs) == doctest::Approx(model_log_likelihood(t, fs)).epsilon(1e-12));
  }
}

TEST_CASE("rank-one count tensor") {
  SynthSpec spec;
  spec.dims = {8, 7, 6};
  spec.true_rank = 1;
  spec.factor_mode = FactorMode::Dense;
  spec.seed = 4;
  const auto syn = generate(spec);
  const auto res = cp_apr_fit(syn.tensor, SolverConfig::apr_defaults(1, 2));
  for (std::size_t m = 0; m < 3; ++m) CHECK(oracle::factor_match(res.factors.mode(m), syn.truth.mode(m)) > 0.99);
  for (std::size_t m = 0; m < 3; ++m) {
    double s = 0.0;
    for (double v : res.factors.mode(m).values()) s += v;
    CHECK(s == doctest::Approx(1.0));
  }
}

TEST_CASE("zero tensor") {
  const SparseTensor3 t({3, 3, 3}, {});
  const auto res = cp_apr_fit(t, SolverConfig::apr_defaults(2, 1));
  CHECK(res.objective == 0.0);
  for (std::size_t m = 0; m < 3; ++m)
    for (double v : res.factors.mode(m).values()) CHECK(v == 0.0);
}

TEST_CASE("noiseless sparse rank two, best of five") {
  SynthSpec spec;
  spec.true_rank = 2;
  spec.seed = 7;
  const auto syn = generate(spec);
  const auto res = cp_apr_fit_best(syn.tensor, SolverConfig::apr_defaults(2, 7), 5);
  for (std::size_t m = 0; m < 3; ++m) CHECK(oracle::factor_match(res.factors.mode(m), syn.truth.mode(m)) > 0.95);
}

TEST_CASE("log-likelihood is monotone and factors stay nonnegative") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = oracle::random_tensor({5, 6, 4}, 0.4, seed, true);
    auto cfg = SolverConfig::apr_defaults(1 + seed % 4, seed);
    cfg.max_outer_iters = 40;
    const auto res = cp_apr_fit(t, cfg);
    for (std::size_t n = 1; n < res.history.size(); ++n)
      CHECK(res.history[n] >= res.history[n - 1] - 1e-8 * std::max(1.0, std::abs(res.history[n - 1])));
    for (std::size_t m = 0; m < 3; ++m)
      for (double v : res.factors.mode(m).values()) CHECK(v >= 0.0);
    for (double w : res.factors.weights) CHECK(w >= 0.0);
  }
}

TEST_CASE("restarts keep the best likelihood") {
  const auto t = oracle::random_tensor({6, 6, 6}, 0.3, 5, true);
  const auto cfg = SolverConfig::apr_defaults(3, 11);
  const auto best = cp_apr_fit_best(t, cfg, 4);
  CHECK(best.objective >= cp_apr_fit(t, cfg).objective);
  CHECK(cp_apr_fit_best(t, cfg, 4).factors.c == best.factors.c);
}

TEST_CASE("input errors") {
  const SparseTensor3 neg({2, 2, 2}, {{0, 0, 0, 1.0}, {1, 0, 1, -2.0}});
  CHECK_THROWS_AS(cp_apr_fit(neg, SolverConfig::apr_defaults(1)), InputError);
  const auto t = oracle::random_tensor({2, 2, 2}, 0.9, 1, true);
  CHECK_THROWS_AS(cp_apr_fit(t, SolverConfig::apr_defaults(0)), InputError);
  CHECK_THROWS_AS(cp_apr_fit_best(t, SolverConfig::apr_defaults(1), 0), InputError);
}
