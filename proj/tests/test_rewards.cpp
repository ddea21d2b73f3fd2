#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "roltr/rewards.hpp"

using namespace roltr;

namespace {

double reward(RewardVariant v, std::size_t t, int c, double eta_model = 1.0) {
  return step_reward(RewardSpec{v, 0.0, eta_model, std::nullopt}, t, c).value;
}

constexpr double kL1 = 0.6309297535714574;  // 1 / log2(3)

}  // namespace

TEST_CASE("per-step reward examples") {
  CHECK(dcg_weight(0) == 1.0);
  CHECK(dcg_weight(1) == doctest::Approx(kL1).epsilon(1e-15));
  CHECK(reward(RewardVariant::kIpsPos, 1, 1) == doctest::Approx(1.2618595071429148).epsilon(1e-12));
  CHECK(reward(RewardVariant::kNaivePos, 1, 1) == doctest::Approx(kL1).epsilon(1e-12));
  CHECK(reward(RewardVariant::kNaiveNeg, 1, 0) == doctest::Approx(-kL1).epsilon(1e-12));
  CHECK(reward(RewardVariant::kIpsNeg, 1, 0) == doctest::Approx(-kL1).epsilon(1e-12));
  CHECK(reward(RewardVariant::kIpsNeg, 1, 1) == doctest::Approx(kL1).epsilon(1e-12));
  CHECK(std::abs(reward(RewardVariant::kIpsBoth, 1, 1) - 1.892790) <= 1e-6);
  CHECK(reward(RewardVariant::kIpsBoth, 1, 0) == doctest::Approx(-kL1).epsilon(1e-12));
  CHECK(reward(RewardVariant::kNaiveBoth, 0, 0) == -1.0);
  CHECK(reward(RewardVariant::kNaiveBoth, 0, 1) == 1.0);
  CHECK(reward(RewardVariant::kDcg, 0, 1) == 1.0);
}

TEST_CASE("rewards match the independent formulas on a grid") {
  for (double eta : {0.0, 0.5, 1.0, 2.0}) {
    for (std::size_t t = 0; t < 10; ++t) {
      const double l = oracle::lambda(t), p = oracle::propensity(t + 1, eta);
      for (int c : {0, 1}) {
        CHECK(reward(RewardVariant::kNaivePos, t, c, eta) == doctest::Approx(l * c).epsilon(1e-12));
        CHECK(reward(RewardVariant::kIpsPos, t, c, eta) == doctest::Approx(l * c / p).epsilon(1e-12));
        CHECK(reward(RewardVariant::kNaiveNeg, t, c, eta) == doctest::Approx(l * (c - 1)).epsilon(1e-12));
        const double ipsneg = l * (c - 1) + (1 - p) / p * l * c;
        CHECK(reward(RewardVariant::kIpsNeg, t, c, eta) == doctest::Approx(ipsneg).epsilon(1e-12));
        CHECK(reward(RewardVariant::kIpsBoth, t, c, eta) == doctest::Approx(l * c / p + ipsneg).epsilon(1e-12));
        CHECK(reward(RewardVariant::kNaiveBoth, t, c, eta) == doctest::Approx(l * c + l * (c - 1)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("eta_model 0 reduces IPS to naive") {
  for (std::size_t t = 0; t < 10; ++t)
    for (int c : {0, 1}) {
      CHECK(reward(RewardVariant::kIpsPos, t, c, 0.0) == reward(RewardVariant::kNaivePos, t, c, 0.0));
      CHECK(reward(RewardVariant::kIpsNeg, t, c, 0.0) == reward(RewardVariant::kNaiveNeg, t, c, 0.0));
      CHECK(reward(RewardVariant::kIpsBoth, t, c, 0.0) == reward(RewardVariant::kNaiveBoth, t, c, 0.0));
    }
}

TEST_CASE("propensity clipping and underflow") {
  RewardSpec clipped{RewardVariant::kIpsPos, 0.0, 1.0, 4.0};
  CHECK(step_reward(clipped, 9, 1).value == doctest::Approx(oracle::lambda(9) * 4.0).epsilon(1e-12));
  CHECK(step_reward(clipped, 1, 1).value == doctest::Approx(oracle::lambda(1) * 2.0).epsilon(1e-12));
  RewardSpec huge{RewardVariant::kIpsPos, 0.0, 5000.0, std::nullopt};
  CHECK_THROWS_AS(step_reward(huge, 3, 1), std::invalid_argument);
  CHECK_THROWS_AS(RewardSpec({RewardVariant::kIpsPos, 1.5, 1.0, std::nullopt}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(parse_reward_variant("ips"), std::invalid_argument);
  for (auto v : {RewardVariant::kDcg, RewardVariant::kNaivePos, RewardVariant::kIpsPos, RewardVariant::kNaiveNeg,
                 RewardVariant::kIpsNeg, RewardVariant::kNaiveBoth, RewardVariant::kIpsBoth})
    CHECK(parse_reward_variant(to_string(v)) == v);
}

TEST_CASE("discounted returns") {
  const RewardSpec spec{RewardVariant::kDcg, 0.5, 1.0, std::nullopt};
  const std::vector<StepReward> r{{0, 1.0}, {1, 2.0}, {2, 4.0}};
  CHECK(episode_return(spec, r, 0) == 1.0 + 0.5 * 2.0 + 0.25 * 4.0);
  CHECK(episode_return(spec, r, 2) == 4.0);
  const auto g = discounted_returns(0.5, r);
  for (std::size_t t = 0; t < 3; ++t) CHECK(g[t] == doctest::Approx(episode_return(spec, r, t)).epsilon(1e-15));
  // gamma = 0 leaves only the immediate reward.
  Rng rng(3);
  const RewardSpec myopic{RewardVariant::kDcg, 0.0, 1.0, std::nullopt};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<StepReward> rr;
    for (std::size_t t = 0; t < 10; ++t) rr.push_back({t, uniform01(rng) - 0.5});
    for (std::size_t t = 0; t < 10; ++t) CHECK(episode_return(myopic, rr, t) == rr[t].value);
  }
}

TEST_CASE("oracle worked instance [1,0,1] at eta 1") {
  const std::vector<int> y{1, 0, 1};
  Rng rng(17);
  const std::size_t n = 200000;
  struct Case {
    RewardVariant v;
    double expected;
  };
  for (const auto& c : {Case{RewardVariant::kIpsPos, 1.5}, Case{RewardVariant::kNaivePos, 1.0 + 0.5 / 3.0},
                        Case{RewardVariant::kIpsNeg, -kL1}, Case{RewardVariant::kNaiveNeg, -kL1 - 1.0 / 3.0}}) {
    const auto est = expected_return_oracle(y, c.v, 1.0, 1.0, n, rng);
    CHECK(std::abs(est.mean - c.expected) <= std::max(3.0 * est.std_error(), 1e-12));
  }
}

TEST_CASE("IPS is unbiased and naive is biased in the expected direction") {
  Rng rng(99);
  Rng gen(5);
  const std::size_t n = 100000;
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<int> y(10);
    for (auto& v : y) v = uniform01(gen) < 0.4 ? 1 : 0;
    y[3] = 1;
    y[4] = 0;
    for (double eta : {0.5, 1.0, 2.0}) {
      const auto ips_pos = expected_return_oracle(y, RewardVariant::kIpsPos, eta, eta, n, rng);
      CHECK(std::abs(ips_pos.mean - oracle::expected_dcg(y)) <= std::max(4.0 * ips_pos.std_error(), 1e-12));
      const auto ips_neg = expected_return_oracle(y, RewardVariant::kIpsNeg, eta, eta, n, rng);
      CHECK(std::abs(ips_neg.mean - oracle::expected_neg_dcg(y)) <= std::max(4.0 * ips_neg.std_error(), 1e-12));
      const auto naive_pos = expected_return_oracle(y, RewardVariant::kNaivePos, eta, eta, n, rng);
      CHECK(naive_pos.mean < oracle::expected_dcg(y));
      CHECK(std::abs(naive_pos.mean - oracle::expected_naive_pos(y, eta)) <= 5.0 * naive_pos.std_error());
      const auto naive_neg = expected_return_oracle(y, RewardVariant::kNaiveNeg, eta, eta, n, rng);
      CHECK(naive_neg.mean < oracle::expected_neg_dcg(y));
      CHECK(std::abs(naive_neg.mean - oracle::expected_naive_neg(y, eta)) <= 5.0 * naive_neg.std_error());
    }
  }
}

TEST_CASE("misspecified eta_model has the closed-form expectation") {
  Rng rng(4);
  const std::vector<int> y{0, 1, 1, 0, 1, 0, 0, 1, 0, 1};
  for (double eta_model : {0.5, 2.0}) {
    const auto est = expected_return_oracle(y, RewardVariant::kIpsPos, 1.0, eta_model, 200000, rng);
    CHECK(std::abs(est.mean - oracle::expected_ips_pos(y, 1.0, eta_model)) <= 5.0 * est.std_error());
    const auto neg = expected_return_oracle(y, RewardVariant::kIpsNeg, 1.0, eta_model, 200000, rng);
    CHECK(std::abs(neg.mean - oracle::expected_ips_neg(y, 1.0, eta_model)) <= 5.0 * neg.std_error());
  }
}
