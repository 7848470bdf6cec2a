#include "pmpo/em_exact.hpp"

#include "pmpo/errors.hpp"
#include "pmpo/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pmpo {

namespace {

void check_size(std::size_t n) {
  if (n == 0) throw InputError("discrete distribution: support is empty");
  if (n > kMaxSupport) throw CapacityError("discrete distribution: support exceeds 10^6 entries");
}

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InputError("tau must be a finite positive number");
}

void check_match(std::size_t a, std::size_t b) {
  if (a != b) throw InputError("discrete support sizes differ");
}

}  // namespace

DiscreteDistribution::DiscreteDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  check_size(probs_.size());
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InputError("discrete distribution: entries must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw InputError("discrete distribution: entries sum to " + format_double(total) + ", not 1");
}

DiscreteDistribution DiscreteDistribution::uniform(std::size_t n) {
  check_size(n);
  return DiscreteDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)), Unchecked{});
}

DiscreteDistribution DiscreteDistribution::point_mass(std::size_t n, std::size_t at) {
  check_size(n);
  if (at >= n) throw InputError("point_mass: index out of range");
  std::vector<double> probs(n, 0.0);
  probs[at] = 1.0;
  return DiscreteDistribution(std::move(probs), Unchecked{});
}

DiscreteDistribution DiscreteDistribution::normalized(std::vector<double> weights) {
  check_size(weights.size());
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("normalized: weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw DegenerateInputError("normalized: weights sum to zero");
  for (double& w : weights) w /= total;
  return DiscreteDistribution(std::move(weights), Unchecked{});
}

DiscreteFunction::DiscreteFunction(std::vector<double> values) : values_(std::move(values)) {
  check_size(values_.size());
  for (double v : values_)
    if (!std::isfinite(v)) throw InputError("discrete function: entries must be finite");
}

double total_variation(const DiscreteDistribution& a, const DiscreteDistribution& b) {
  check_match(a.size(), b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return 0.5 * acc;
}

double expected_value(const DiscreteDistribution& delta, const DiscreteFunction& f) {
  check_match(delta.size(), f.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) acc += delta[i] * f[i];
  return acc;
}

DiscreteDistribution argmax_softmax(const DiscreteDistribution& prior, const DiscreteFunction& f, double tau) {
  check_tau(tau);
  check_match(prior.size(), f.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < f.size(); ++i)
    if (prior[i] > 0.0) peak = std::max(peak, f[i]);
  std::vector<double> weights(f.size(), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i)
    if (prior[i] > 0.0) weights[i] = prior[i] * std::exp((f[i] - peak) / tau);
  return DiscreteDistribution::normalized(std::move(weights));
}

DiscreteDistribution em_step(const DiscreteDistribution& delta, const DiscreteFunction& f, double tau) {
  return argmax_softmax(delta, f, tau);
}

double regularized_objective(const DiscreteDistribution& delta, const DiscreteFunction& f, double tau,
                             const DiscreteDistribution& prior) {
  check_tau(tau);
  check_match(delta.size(), f.size());
  check_match(delta.size(), prior.size());
  double kl = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    if (delta[i] == 0.0) continue;
    if (prior[i] == 0.0)
      throw InputError("regularized_objective: delta has mass outside the prior support (index " +
                       std::to_string(i) + ")");
    kl += delta[i] * (std::log(delta[i]) - std::log(prior[i]));
  }
  return expected_value(delta, f) - tau * kl;
}

double logsumexp_bound(const DiscreteDistribution& prior, const DiscreteFunction& f, double tau) {
  check_tau(tau);
  check_match(prior.size(), f.size());
  std::vector<double> scaled(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) scaled[i] = f[i] / tau;
  return tau * weighted_logsumexp(prior.probs(), scaled);
}

double weighted_ml_loss(const DiscreteDistribution& q_mu, const DiscreteFunction& f, double tau,
                        const DiscreteDistribution& q_theta) {
  check_tau(tau);
  check_match(q_mu.size(), f.size());
  check_match(q_mu.size(), q_theta.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double w = q_mu[i] * std::exp(f[i] / tau);
    if (w == 0.0) continue;
    if (q_theta[i] == 0.0) return std::numeric_limits<double>::infinity();
    acc -= w * std::log(q_theta[i]);
  }
  return acc;
}

EmTrajectory run_em(const DiscreteDistribution& delta0, const DiscreteFunction& f, double tau,
                    const EmOptions& options) {
  check_tau(tau);
  check_match(delta0.size(), f.size());
  EmTrajectory out;
  DiscreteDistribution current = delta0;
  out.values.push_back(expected_value(current, f));
  if (options.keep_distributions) out.distributions.push_back(current);
  for (std::size_t k = 0; k < options.max_iters; ++k) {
    DiscreteDistribution next = em_step(current, f, tau);
    const double change = total_variation(next, current);
    out.values.push_back(expected_value(next, f));
    out.tv_changes.push_back(change);
    if (options.keep_distributions) out.distributions.push_back(next);
    current = std::move(next);
    if (change < options.tolerance) {
      out.converged = true;
      break;
    }
  }
  if (!options.keep_distributions) out.distributions.push_back(std::move(current));
  return out;
}

}  // namespace pmpo
