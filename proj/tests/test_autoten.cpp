#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "autoten/autoten.hpp"
#include "autoten/errors.hpp"
#include "autoten/synth.hpp"
#include "oracles.hpp"

using namespace autoten;

namespace {

QualityCurve curve(Loss loss, std::vector<int> ranks, std::vector<double> c) {
  QualityCurve q;
  q.loss = loss;
  q.ranks = std::move(ranks);
  q.c = std::move(c);
  return q;
}

QualityCurve curve(Loss loss, std::vector<double> c) {
  std::vector<int> ranks(c.size());
  std::iota(ranks.begin(), ranks.end(), 2);
  return curve(loss, std::move(ranks), std::move(c));
}

// A curve whose two-step point is (f, c): every other point is 0 and the
// chosen rank is the largest nonzero one.
QualityCurve peaked(Loss loss, int f, double c, int f_max) {
  std::vector<double> v(static_cast<std::size_t>(f_max - 1), 0.0);
  v[static_cast<std::size_t>(f - 2)] = c;
  return curve(loss, v);
}

}  // namespace

TEST_CASE("two_step_max examples") {
  CHECK(two_step_max(curve(Loss::Fro, {10, 80, 85, 12})) == CurvePoint{4, 85});
  CHECK(two_step_max(curve(Loss::Fro, {50, 50, 50})) == CurvePoint{4, 50});
  const auto s = two_step_max(curve(Loss::Fro, {0, 0, 0}));
  CHECK(s.is_sentinel());
  CHECK(s.c == 0.0);
  CHECK(two_step_max(curve(Loss::Fro, {95})) == CurvePoint{2, 95});
  CHECK(two_step_max(curve(Loss::Fro, {90, 92, 5, 91, 4})) == CurvePoint{5, 91});
  CHECK_THROWS_AS(two_step_max(QualityCurve{}), DimensionError);
}

TEST_CASE("two_step_max properties") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 9;
    std::vector<int> ranks(n);
    std::iota(ranks.begin(), ranks.end(), 2);
    std::vector<double> c(n);
    for (auto& v : c) v = rng() % 4 == 0 ? 0.0 : (rng() % 5 == 0 ? 50.0 : u(rng));
    const auto base = two_step_max(curve(Loss::Fro, ranks, c));

    bool member = base.is_sentinel();
    for (std::size_t i = 0; i < n; ++i) member = member || (ranks[i] == base.f && c[i] == base.c);
    CHECK(member);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> pr;
    std::vector<double> pc;
    for (auto i : order) {
      pr.push_back(ranks[i]);
      pc.push_back(c[i]);
    }
    CHECK(two_step_max(curve(Loss::Fro, pr, pc)) == base);

    // The chosen point belongs to the cluster nearer the larger value.
    if (!base.is_sentinel()) CHECK(base.c >= *std::min_element(c.begin(), c.end()));
  }
}

TEST_CASE("strategy definitions") {
  SUBCASE("sum") {
    const auto fro = curve(Loss::Fro, {60, 60, 0});
    const auto kl = curve(Loss::Kl, {100, 100, 100});
    REQUIRE(fro.sum() == 120);
    REQUIRE(kl.sum() == 300);
    const auto r = select(fro, kl, Strategy::Sum, false);
    CHECK(r.loss == Loss::Kl);
    CHECK(CurvePoint{r.f_star, r.c_star} == two_step_max(kl));
  }
  const auto fro = peaked(Loss::Fro, 4, 70, 6);
  const auto kl = peaked(Loss::Kl, 6, 40, 6);
  REQUIRE(two_step_max(fro) == CurvePoint{4, 70});
  REQUIRE(two_step_max(kl) == CurvePoint{6, 40});
  SUBCASE("max F") {
    const auto r = select(fro, kl, Strategy::MaxF, false);
    CHECK(r.loss == Loss::Kl);
    CHECK(r.f_star == 6);
  }
  SUBCASE("max c") {
    const auto r = select(fro, kl, Strategy::MaxC, true);
    CHECK(r.loss == Loss::Fro);
    CHECK(r.c_star == 70);
  }
  SUBCASE("area") {
    const auto r = select(fro, kl, Strategy::Area, false);
    CHECK(area_score(70, 4) < area_score(40, 6));
    CHECK(r.loss == Loss::Kl);
    CHECK(r.f_star == 6);
    CHECK(area_score(0, 5) == 0.0);
  }
  SUBCASE("ties follow the data type") {
    const auto a = peaked(Loss::Fro, 3, 80, 5);
    const auto b = peaked(Loss::Kl, 3, 80, 5);
    for (auto s : {Strategy::Sum, Strategy::MaxC, Strategy::MaxF, Strategy::Area}) {
      CHECK(select(a, b, s, true).loss == Loss::Kl);
      CHECK(select(a, b, s, false).loss == Loss::Fro);
    }
  }
  SUBCASE("single nonzero point wins under every strategy") {
    const auto a = peaked(Loss::Fro, 3, 55, 6);
    const auto zero = curve(Loss::Kl, {0, 0, 0, 0, 0});
    for (auto s : {Strategy::Sum, Strategy::MaxC, Strategy::MaxF, Strategy::Area}) {
      const auto r = select(a, zero, s, true);
      CHECK(r.loss == Loss::Fro);
      CHECK(r.f_star == 3);
      CHECK(r.c_star == 55);
    }
  }
  SUBCASE("mismatched grids") {
    CHECK_THROWS_AS(select(curve(Loss::Fro, {1, 2}), curve(Loss::Kl, {1, 2, 3}), Strategy::MaxF, false),
                    DimensionError);
  }
  for (auto s : {"sum", "maxc", "maxf", "area"}) CHECK(strategy_name(*parse_strategy(s)) == std::string(s));
  CHECK_FALSE(parse_strategy("best"));
}

TEST_CASE("strategy guarantees on random curves") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(6), b(6);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    const auto fro = curve(Loss::Fro, a), kl = curve(Loss::Kl, b);
    const auto pf = two_step_max(fro), pk = two_step_max(kl);
    const auto c = select(fro, kl, Strategy::MaxC, false);
    CHECK(c.c_star >= std::min(pf.c, pk.c));
    CHECK(c.c_star == std::max(pf.c, pk.c));
    const auto f = select(fro, kl, Strategy::MaxF, false);
    CHECK(f.f_star == std::max(pf.f, pk.f));
  }
}

TEST_CASE("grid on an all-zero tensor") {
  const SparseTensor3 t({4, 4, 4}, {});
  AutoTenConfig cfg;
  const auto res = autoten_run(t, 4, cfg);
  CHECK(res.fro.all_zero());
  CHECK(res.kl.all_zero());
  CHECK(res.no_structure);
  CHECK(res.f_star == 0);
  CHECK(res.c_star == 0.0);
  REQUIRE_FALSE(res.warnings.empty());
  CHECK(res.warnings.back().find("no good structure") != std::string::npos);
}

TEST_CASE("minimal grid and bad budgets") {
  const auto t = oracle::random_tensor({5, 5, 5}, 0.4, 1, true);
  AutoTenConfig cfg;
  const auto [fro, kl] = build_curves(t, 2, cfg);
  CHECK(fro.ranks == std::vector<int>{2});
  CHECK(kl.c.size() == 1);
  CHECK_THROWS_AS(build_grid(t, 1, cfg), InputError);
}

TEST_CASE("grid does not depend on the number of workers") {
  const auto t = oracle::random_tensor({8, 7, 6}, 0.3, 4, true);
  AutoTenConfig cfg;
  cfg.seed = 99;
  const auto one = build_curves(t, 5, cfg);
  cfg.jobs = 4;
  const auto four = build_curves(t, 5, cfg);
  CHECK(one.first.c == four.first.c);
  CHECK(one.second.c == four.second.c);
  cfg.jobs = 1;
  const auto cell = evaluate_cell(t, Loss::Kl, 4, cfg);
  CHECK(cell.c == one.second.c[2]);
  CHECK(cell_seed(99, Loss::Kl, 4) != cell_seed(99, Loss::Fro, 4));
  CHECK(cell_seed(99, Loss::Kl, 4) == cell_seed(99, Loss::Kl, 4));
}

TEST_CASE("negative entries reach the KL path clamped") {
  const auto base = oracle::random_tensor({5, 5, 5}, 0.5, 3);
  std::vector<Entry> e(base.entries().begin(), base.entries().end());
  e[0].value = -0.5;
  const SparseTensor3 t(base.dims(), e);
  AutoTenConfig cfg;
  const auto cell = evaluate_cell(t, Loss::Kl, 2, cfg);
  const auto same = evaluate_cell(clamp_nonnegative(t), Loss::Kl, 2, cfg);
  CHECK(cell.c == same.c);
  CHECK_NOTHROW(build_grid(t, 3, cfg));
}

TEST_CASE("noiseless dense rank three scores high at its rank") {
  SynthSpec spec;
  spec.true_rank = 3;
  spec.factor_mode = FactorMode::Dense;
  spec.seed = 11;
  const auto syn = generate(spec);
  AutoTenConfig cfg;
  cfg.seed = 11;
  const auto fro = evaluate_cell(syn.tensor, Loss::Fro, 3, cfg);
  CHECK(fro.c >= 90.0);
}

TEST_CASE("noiseless sparse rank two end to end") {
  SynthSpec spec;
  spec.true_rank = 2;
  spec.seed = 3;
  const auto syn = generate(spec);
  AutoTenConfig cfg;
  cfg.seed = 3;
  const auto res = autoten_run(syn.tensor, 4, cfg);
  CHECK(res.f_star == 2);
  CHECK_FALSE(res.no_structure);
  CHECK(res.factors.rank() == 2);
}
