#pragma once

// Preference-learning objectives with analytic parameter gradients.
//
// Sign convention: pmpo, mpo, bc and the exact positive/negative forms are
// maximization objectives (Sense::Maximize). dpo and ipo are losses in their
// usual minimization form (Sense::Minimize). LossResult::ascent() returns
// the direction that improves either kind.

#include "pmpo/kl.hpp"
#include "pmpo/policy.hpp"

#include <optional>
#include <span>
#include <vector>

namespace pmpo {

struct LossSpec {
  double alpha = 0.5;  // weight of the accepted-sample term; (1 - alpha) weighs the rejected term
  double beta = 0.5;   // weight of D_KL(reference || theta)
  KlMode kl_mode = ClosedForm{};
  double eta = 1.0;  // MPO softmax temperature
  double dpo_beta = 1.0;
  double ipo_beta = 1.0;

  // Throws InputError naming the first bad field.
  void validate() const;
};

template <class Output>
struct PreferenceBatch {
  Condition condition = 0;
  std::vector<Output> accepted;
  std::vector<Output> rejected;
  std::optional<std::vector<double>> scores;
};

struct LossComponents {
  double accept_term = 0.0;  // mean log pi_theta over accepted outputs (0 when none)
  double reject_term = 0.0;  // mean log pi_theta over rejected outputs (0 when none)
  double kl_term = 0.0;      // D_KL(reference || theta) as estimated
};

enum class Sense { Maximize, Minimize };

struct LossResult {
  double value = 0.0;
  ParamVector gradient;  // d value / d theta
  LossComponents components;
  Sense sense = Sense::Maximize;

  ParamVector ascent() const { return sense == Sense::Maximize ? gradient : -1.0 * gradient; }
  double objective() const { return sense == Sense::Maximize ? value : -value; }
};

// value = alpha * mean_accepted log pi - (1 - alpha) * mean_rejected log pi - beta * KL.
// An empty side contributes zero. Both empty is an error.
template <PolicyFamily P>
LossResult pmpo_loss(const PreferenceBatch<typename P::Output>& batch, const P& theta, const P& ref,
                     const LossSpec& spec, Rng& rng);

// value = sum_j softmax(f / eta)_j log pi(y_j | x).
template <PolicyFamily P>
LossResult mpo_weighted_ml_loss(Condition x, std::span<const typename P::Output> samples,
                                std::span<const double> f_values, const P& theta, double eta);

// Behaviour cloning: mean log-likelihood of the samples.
template <PolicyFamily P>
LossResult bc_loss(Condition x, std::span<const typename P::Output> samples, const P& theta);

// -log sigmoid(beta * [(log pi(a) - log ref(a)) - (log pi(r) - log ref(r))]).
template <PolicyFamily P>
LossResult dpo_loss(Condition x, const typename P::Output& y_accept, const typename P::Output& y_reject,
                    const P& theta, const P& ref, double dpo_beta);

// -log pi(a) + log pi(r) + beta * (delta_a - delta_r)^2 with delta = log(pi / ref).
template <PolicyFamily P>
LossResult ipo_loss(Condition x, const typename P::Output& y_accept, const typename P::Output& y_reject,
                    const P& theta, const P& ref, double ipo_beta);

// Exact M-step objectives over an enumerated support. `support` must list the
// whole output space (reference mass sums to 1). They exist to check the
// preference/dis-preference reparameterization and are not used in training.
struct ExactFormResult {
  LossResult loss;
  double normalizer = 0.0;  // Z_x (positive form) or Z'_x (negative form)
};

// value = sum_y ref(y) p(S|y) / Z log pi(y), Z = sum_y ref(y) p(S|y).
template <PolicyFamily P>
ExactFormResult positive_form_loss(Condition x, std::span<const typename P::Output> support,
                                   std::span<const double> pref_probs, const P& theta, const P& ref);

// value = -sum_y ref(y) p(S'|y) / Z' log pi(y) - KL(ref || theta) / Z', Z' = sum_y ref(y) p(S'|y).
template <PolicyFamily P>
ExactFormResult negative_form_loss(Condition x, std::span<const typename P::Output> support,
                                   std::span<const double> dispref_probs, const P& theta, const P& ref);

// Both sides of the IPO/PMPO regularizer link for one condition, by enumeration:
// E_{a,r ~ ref}[(delta_a - delta_r)^2] and 2 Var_{y ~ ref}[delta_y].
struct VarianceLink {
  double pair_expectation = 0.0;
  double twice_variance = 0.0;
};
VarianceLink ipo_variance_link(const CategoricalPolicy& theta, const CategoricalPolicy& ref, Condition x);

}  // namespace pmpo
