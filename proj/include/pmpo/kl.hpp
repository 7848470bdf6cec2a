#pragma once

// KL divergences between a reference policy and a trained policy. The
// direction is always D_KL(reference || theta): an expectation under the
// reference of log(reference / theta). All gradients are with respect to the
// parameters of the second (theta) argument.

#include "pmpo/errors.hpp"
#include "pmpo/policy.hpp"

#include <span>
#include <variant>

namespace pmpo {

struct ClosedForm {};
// Sum of exact per-token categorical KLs along one prefix sampled from the
// reference; only valid for autoregressive policies.
struct AutoregressivePerToken {};
struct MonteCarlo {
  std::size_t sample_count = 1000;
};

using KlMode = std::variant<ClosedForm, AutoregressivePerToken, MonteCarlo>;

// sum_y p(y) (log p(y) - log q(y)) over two log-probability vectors, with 0 log 0 = 0.
double categorical_kl(std::span<const double> log_p, std::span<const double> log_q);

double kl_closed_form(const GaussianPolicy& p, const GaussianPolicy& q, Condition x = 0);
double kl_closed_form(const CategoricalPolicy& p, const CategoricalPolicy& q, Condition x);
// Runtime-dispatched variant; throws InputError on family mismatch or an
// autoregressive pair.
double kl_closed_form(const AnyPolicy& p, const AnyPolicy& q, Condition x);

ParamVector kl_closed_form_grad(const GaussianPolicy& ref, const GaussianPolicy& theta, Condition x = 0);
ParamVector kl_closed_form_grad(const CategoricalPolicy& ref, const CategoricalPolicy& theta, Condition x);

// sum_{i < len} D_KL(ref(. | x, y_{<i}) || theta(. | x, y_{<i})) along the
// given sequence. Unbiased for the sequence-level KL when the sequence is a
// full-length draw from the reference.
double kl_autoregressive(const AutoregressivePolicy& ref, const AutoregressivePolicy& theta, Condition x,
                         std::span<const Token> sequence);
void accumulate_kl_autoregressive_grad(const AutoregressivePolicy& ref, const AutoregressivePolicy& theta,
                                       Condition x, std::span<const Token> sequence, double scale,
                                       ParamVector& grad);

// Exact sequence-level KL by summing over all V^L full-length sequences.
// Throws CapacityError when V^L exceeds 10^6.
double kl_exact_enumeration(const AutoregressivePolicy& p, const AutoregressivePolicy& q, Condition x);

inline constexpr std::size_t kMaxEnumeration = 1'000'000;

// Mean of log p(y|x) - log q(y|x) over samples drawn from p.
template <PolicyFamily P>
double kl_monte_carlo(const P& p, const P& q, Condition x, std::span<const typename P::Output> samples) {
  if (samples.empty()) throw InputError("kl_monte_carlo: sample set is empty");
  double acc = 0.0;
  for (const auto& y : samples) acc += p.log_prob(x, y) - q.log_prob(x, y);
  return acc / static_cast<double>(samples.size());
}

struct KlEstimate {
  double value = 0.0;
  ParamVector gradient;  // d value / d theta
};

// KL(ref || theta; x) and its theta-gradient under the requested mode. The
// random source is consumed only by the sampling modes.
template <PolicyFamily P>
KlEstimate estimate_kl(const P& ref, const P& theta, Condition x, const KlMode& mode, Rng& rng);

}  // namespace pmpo
