#include "oracles.hpp"

#include "pmpo/numeric.hpp"
#include "pmpo/policy.hpp"
#include "pmpo/policy_io.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace pmpo;

TEST_SUITE("numeric") {
  TEST_CASE("logsumexp survives large inputs") {
    const std::vector<double> v = {1000.0, 1000.0};
    CHECK(logsumexp(v) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
    const std::vector<double> w = {-1000.0, -1000.0};
    CHECK(logsumexp(w) == doctest::Approx(-1000.0 + std::log(2.0)).epsilon(1e-15));
  }

  TEST_CASE("softmax matches direct normalization") {
    const std::vector<double> v = {0.3, -1.2, 2.5, 0.0};
    const auto p = softmax(v);
    const auto q = oracle::probs_from_logits(v.data(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-14));
  }

  TEST_CASE("softplus and sigmoid at the extremes") {
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
    CHECK(softplus(800.0) == 800.0);
    CHECK(softplus(-800.0) >= 0.0);
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(std::isfinite(sigmoid(-1000.0)));
  }

  TEST_CASE("format_double17 round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_double17(v)) == v);
  }
}

TEST_SUITE("policy") {
  TEST_CASE("standard normal log density at the origin") {
    GaussianPolicy p({0.0}, {0.0});
    CHECK(p.log_prob(0, {0.0}) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-15));
  }

  TEST_CASE("uniform categorical log_prob is -log K") {
    auto p = CategoricalPolicy::uniform(3, 5);
    for (std::size_t y = 0; y < 5; ++y) CHECK(p.log_prob(2, y) == doctest::Approx(-std::log(5.0)));
  }

  TEST_CASE("log_prob agrees with the direct formulas") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      auto g = oracle::random_gaussian(rng, 3);
      std::vector<double> y = {rng.normal(), rng.normal(), rng.normal()};
      CHECK(g.log_prob(0, y) == doctest::Approx(oracle::gaussian_log_density(g.mean(), g.log_std(), y)).epsilon(1e-12));

      auto c = oracle::random_categorical(rng, 2, 6);
      const auto probs = oracle::probs_from_logits(c.logits().data() + 6, 6);
      const std::size_t k = rng.index(6);
      CHECK(c.log_prob(1, k) == doctest::Approx(std::log(probs[k])).epsilon(1e-12));

      auto a = oracle::random_autoregressive(rng, 2, 3, trial % 3, 4);
      std::vector<std::size_t> seq = {rng.index(3), rng.index(3), rng.index(3)};
      CHECK(a.log_prob(1, seq) == doctest::Approx(oracle::autoregressive_log_prob(a, 1, seq)).epsilon(1e-12));
    }
  }

  TEST_CASE("autoregressive probabilities over all full-length sequences sum to one") {
    Rng rng(3);
    auto a = oracle::random_autoregressive(rng, 1, 3, 2, 4);
    double total = 0.0;
    for (const auto& y : oracle::all_sequences(3, 4)) total += std::exp(a.log_prob(0, y));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("grad_log_prob matches central differences") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      auto g = oracle::random_gaussian(rng, 2);
      const std::vector<double> y = {g.mean()[0] + rng.normal(), g.mean()[1] + rng.normal()};
      auto fg = [&](const ParamVector& p) { return g.with_params(p).log_prob(0, y); };
      CHECK(oracle::relative_error(grad_log_prob(g, 0, y), oracle::finite_difference(fg, g.params())) <= 1e-5);

      auto c = oracle::random_categorical(rng, 3, 4);
      const std::size_t k = rng.index(4);
      auto fc = [&](const ParamVector& p) { return c.with_params(p).log_prob(2, k); };
      CHECK(oracle::relative_error(grad_log_prob(c, 2, k), oracle::finite_difference(fc, c.params())) <= 1e-5);

      auto a = oracle::random_autoregressive(rng, 1, 3, 1, 3);
      const std::vector<std::size_t> seq = {rng.index(3), rng.index(3), rng.index(3)};
      auto fa = [&](const ParamVector& p) { return a.with_params(p).log_prob(0, seq); };
      CHECK(oracle::relative_error(grad_log_prob(a, 0, seq), oracle::finite_difference(fa, a.params())) <= 1e-5);
    }
  }

  TEST_CASE("clamped logits keep log_prob finite and get no gradient") {
    CategoricalPolicy p(1, 3, {500.0, 0.0, -500.0});
    CHECK(std::isfinite(p.log_prob(0, 2)));
    CHECK(p.log_prob(0, 2) < -50.0);
    const auto g = grad_log_prob(p, 0, std::size_t{2});
    CHECK(g[0] == 0.0);
    CHECK(g[2] == 0.0);
    CHECK(g[1] != 0.0);
  }

  TEST_CASE("gaussian std floor holds") {
    GaussianPolicy p({0.0}, {-50.0});
    CHECK(p.std_dev(0) == kStdFloor);
    CHECK(p.std_at_floor(0));
    CHECK(std::isfinite(p.log_prob(0, {1.0})));
  }

  TEST_CASE("sample moments") {
    Rng rng(17);
    GaussianPolicy g({1.5, -2.0}, {std::log(0.5), 0.0});
    const auto ys = sample(g, 0, rng, 20000);
    double m0 = 0.0, m1 = 0.0;
    for (const auto& y : ys) m0 += y[0], m1 += y[1];
    CHECK(m0 / 20000 == doctest::Approx(1.5).epsilon(0.02));
    CHECK(m1 / 20000 == doctest::Approx(-2.0).epsilon(0.02));

    CategoricalPolicy c(1, 3, {0.0, std::log(2.0), std::log(3.0)});
    std::vector<int> counts(3);
    for (auto y : sample(c, 0, rng, 60000)) ++counts[y];
    CHECK(counts[2] / 60000.0 == doctest::Approx(0.5).epsilon(0.03));
  }

  TEST_CASE("input errors") {
    CHECK_THROWS_AS(GaussianPolicy({0.0}, {0.0, 1.0}), InputError);
    CHECK_THROWS_AS(CategoricalPolicy(1, 2, {0.0}), InputError);
    auto c = CategoricalPolicy::uniform(2, 2);
    CHECK_THROWS_AS(c.log_prob(5, 0), InputError);
    CHECK_THROWS_AS(c.log_prob(0, 7), InputError);
    auto a = AutoregressivePolicy::uniform(1, 2, 1, 3);
    CHECK_THROWS_AS(a.log_prob(0, {0, 1, 0, 1}), InputError);
    CHECK_THROWS_AS(a.log_prob(0, {0, 5}), InputError);
    CHECK_THROWS_AS(sample(c, 0, *std::make_unique<Rng>(0), 0), InputError);
    CHECK_THROWS_AS(AutoregressivePolicy::uniform(1, 100, 6, 4), CapacityError);
  }

  TEST_CASE("json round trip is bit exact") {
    Rng rng(23);
    const std::vector<AnyPolicy> policies = {oracle::random_gaussian(rng, 3), oracle::random_categorical(rng, 2, 3),
                                             oracle::random_autoregressive(rng, 2, 3, 1, 4)};
    for (const auto& p : policies) {
      const auto back = policy_from_string(policy_to_string(p));
      CHECK(back.index() == p.index());
      const auto params = [](const AnyPolicy& q) { return std::visit([](const auto& v) { return v.params(); }, q); };
      CHECK(params(back) == params(p));
    }
  }
}
