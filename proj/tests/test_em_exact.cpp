#include "pmpo/em_exact.hpp"
#include "pmpo/errors.hpp"
#include "pmpo/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace pmpo;

namespace {

DiscreteDistribution random_distribution(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  for (double& v : w) v = rng.uniform() + 1e-3;
  return DiscreteDistribution::normalized(w);
}

}  // namespace

TEST_SUITE("em_exact") {
  TEST_CASE("distribution invariants") {
    CHECK_NOTHROW(DiscreteDistribution({0.25, 0.75}));
    CHECK_THROWS_AS(DiscreteDistribution({0.5, 0.6}), InputError);
    CHECK_THROWS_AS(DiscreteDistribution({-0.1, 1.1}), InputError);
    CHECK_THROWS_AS(DiscreteDistribution({}), InputError);
    CHECK_THROWS_AS(DiscreteDistribution::normalized({0.0, 0.0}), DegenerateInputError);
    CHECK_THROWS_AS(DiscreteFunction({1.0, INFINITY}), InputError);
    CHECK_THROWS_AS(DiscreteDistribution::uniform(kMaxSupport + 1), CapacityError);
    CHECK(DiscreteDistribution::point_mass(3, 1)[1] == 1.0);
  }

  TEST_CASE("two-point argmax in closed form") {
    // prior uniform, f = (0, 1), tau = 1: delta* = (1, e) / (1 + e)
    const auto d = argmax_softmax(DiscreteDistribution::uniform(2), DiscreteFunction({0.0, 1.0}), 1.0);
    CHECK(d[1] == doctest::Approx(std::exp(1.0) / (1.0 + std::exp(1.0))).epsilon(1e-15));
  }

  TEST_CASE("extreme values do not overflow") {
    const auto d = argmax_softmax(DiscreteDistribution::uniform(2), DiscreteFunction({0.0, 5000.0}), 1.0);
    CHECK(d[1] == 1.0);
    const double b = logsumexp_bound(DiscreteDistribution::uniform(2), DiscreteFunction({0.0, 5000.0}), 1.0);
    CHECK(b == doctest::Approx(5000.0 - std::log(2.0)));
  }

  TEST_CASE("the argmax beats random distributions and attains the bound") {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 2 + rng.index(20);
      const auto prior = random_distribution(rng, n);
      std::vector<double> fv(n);
      for (double& v : fv) v = -5.0 + 10.0 * rng.uniform();
      const DiscreteFunction f(fv);
      const double tau = 0.5 + rng.uniform();
      const auto best = argmax_softmax(prior, f, tau);
      const double bound = logsumexp_bound(prior, f, tau);
      CHECK(regularized_objective(best, f, tau, prior) == doctest::Approx(bound).epsilon(1e-12));
      for (int k = 0; k < 50; ++k)
        CHECK(regularized_objective(random_distribution(rng, n), f, tau, prior) <= bound + 1e-9);
    }
  }

  TEST_CASE("support mismatch and mass outside the prior") {
    const DiscreteFunction f({0.0, 1.0});
    CHECK_THROWS_AS(regularized_objective(DiscreteDistribution::uniform(2), f, 1.0, DiscreteDistribution::point_mass(2, 0)),
                    InputError);
    CHECK_THROWS_AS(argmax_softmax(DiscreteDistribution::uniform(3), f, 1.0), InputError);
    CHECK_THROWS_AS(argmax_softmax(DiscreteDistribution::uniform(2), f, 0.0), InputError);
  }

  TEST_CASE("weighted ml loss is minimized at the argmax") {
    Rng rng(2);
    const auto mu = random_distribution(rng, 6);
    const DiscreteFunction f({0.1, -0.3, 2.0, 1.0, -1.0, 0.5});
    const auto best = argmax_softmax(mu, f, 0.8);
    const double at_best = weighted_ml_loss(mu, f, 0.8, best);
    for (int k = 0; k < 100; ++k) CHECK(weighted_ml_loss(mu, f, 0.8, random_distribution(rng, 6)) >= at_best - 1e-12);
  }

  TEST_CASE("run_em improves monotonically and concentrates on the argmax of f") {
    Rng rng(3);
    const auto d0 = random_distribution(rng, 8);
    const DiscreteFunction f({0.0, 1.0, 3.0, -2.0, 2.5, 0.0, 1.0, 2.9});
    const auto traj = run_em(d0, f, 1.0);
    for (std::size_t k = 1; k < traj.values.size(); ++k) CHECK(traj.values[k] >= traj.values[k - 1] - 1e-12);
    CHECK(traj.converged);
    CHECK(traj.distributions.back()[2] == doctest::Approx(1.0));
    CHECK(traj.distributions.size() == traj.values.size());
    CHECK(traj.tv_changes.size() == traj.steps());
  }

  TEST_CASE("a point mass is a fixed point") {
    const auto traj = run_em(DiscreteDistribution::point_mass(4, 1), DiscreteFunction({3.0, 0.0, 1.0, 2.0}), 1.0);
    CHECK(traj.steps() == 1);
    CHECK(traj.converged);
    CHECK(traj.values.front() == traj.values.back());
  }

  TEST_CASE("constant f converges after one step") {
    Rng rng(4);
    const auto traj = run_em(random_distribution(rng, 5), DiscreteFunction(std::vector<double>(5, 1.5)), 1.0);
    CHECK(traj.converged);
    CHECK(traj.steps() == 1);
  }

  TEST_CASE("dropping the stored iterates keeps the final one") {
    EmOptions opts;
    opts.keep_distributions = false;
    const auto traj = run_em(DiscreteDistribution::uniform(3), DiscreteFunction({0.0, 1.0, 2.0}), 1.0, opts);
    CHECK(traj.distributions.size() == 1);
    CHECK(traj.values.size() == traj.steps() + 1);
  }
}
