#pragma once

// Exact EM over a finite set S: delta_{k+1}(s) is proportional to
// delta_k(s) * exp(f(s) / tau). Used to check the improvement guarantee, the
// logsumexp majorant and the closed-form argmax of the regularized
// expectation E_delta[f] - tau * KL(delta || prior).

#include <cstddef>
#include <span>
#include <vector>

namespace pmpo {

inline constexpr std::size_t kMaxSupport = 1'000'000;

class DiscreteDistribution {
 public:
  // Checks entries >= 0 and sum == 1 within 1e-12.
  explicit DiscreteDistribution(std::vector<double> probs);
  static DiscreteDistribution uniform(std::size_t n);
  static DiscreteDistribution point_mass(std::size_t n, std::size_t at);
  // Scales nonnegative weights to sum to one.
  static DiscreteDistribution normalized(std::vector<double> weights);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const noexcept { return probs_; }

  friend bool operator==(const DiscreteDistribution&, const DiscreteDistribution&) = default;

 private:
  struct Unchecked {};
  DiscreteDistribution(std::vector<double> probs, Unchecked) : probs_(std::move(probs)) {}
  std::vector<double> probs_;
};

class DiscreteFunction {
 public:
  // Checks every entry is finite.
  explicit DiscreteFunction(std::vector<double> values);
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

double total_variation(const DiscreteDistribution& a, const DiscreteDistribution& b);

// sum_s delta(s) f(s).
double expected_value(const DiscreteDistribution& delta, const DiscreteFunction& f);

// prior(s) exp(f(s) / tau) / sum_s prior(s) exp(f(s) / tau).
DiscreteDistribution argmax_softmax(const DiscreteDistribution& prior, const DiscreteFunction& f, double tau);

// One EM iteration; identical to argmax_softmax with the current iterate as prior.
DiscreteDistribution em_step(const DiscreteDistribution& delta, const DiscreteFunction& f, double tau);

// E_delta[f] - tau * KL(delta || prior). Throws InputError when delta puts
// mass where the prior has none.
double regularized_objective(const DiscreteDistribution& delta, const DiscreteFunction& f, double tau,
                             const DiscreteDistribution& prior);

// tau * log sum_s prior(s) exp(f(s) / tau), max-subtracted.
double logsumexp_bound(const DiscreteDistribution& prior, const DiscreteFunction& f, double tau);

// The sample-form M-step loss -sum_s q_mu(s) exp(f(s)/tau) log q_theta(s). Over
// the simplex it is minimized by q_theta = argmax_softmax(q_mu, f, tau).
double weighted_ml_loss(const DiscreteDistribution& q_mu, const DiscreteFunction& f, double tau,
                        const DiscreteDistribution& q_theta);

struct EmOptions {
  std::size_t max_iters = 10'000;
  double tolerance = 1e-14;  // stop once the total-variation change falls below this
  bool keep_distributions = true;
};

struct EmTrajectory {
  // distributions[0] is delta0; values[k] = E_{delta_k}[f]. When
  // keep_distributions is false only the final iterate is stored.
  std::vector<DiscreteDistribution> distributions;
  std::vector<double> values;
  std::vector<double> tv_changes;  // tv_changes[k] = TV(delta_{k+1}, delta_k)
  bool converged = false;

  std::size_t steps() const noexcept { return values.empty() ? 0 : values.size() - 1; }
};

EmTrajectory run_em(const DiscreteDistribution& delta0, const DiscreteFunction& f, double tau,
                    const EmOptions& options = {});

}  // namespace pmpo
