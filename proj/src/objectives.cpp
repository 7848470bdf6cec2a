#include "pmpo/objectives.hpp"

#include "pmpo/errors.hpp"
#include "pmpo/numeric.hpp"

#include <cmath>
#include <string>

namespace pmpo {

void LossSpec::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("alpha must lie in [0, 1]");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InputError("beta must be >= 0");
  if (!(eta > 0.0)) throw InputError("eta must be > 0");
  if (!(dpo_beta > 0.0)) throw InputError("dpo_beta must be > 0");
  if (!(ipo_beta > 0.0)) throw InputError("ipo_beta must be > 0");
  if (const auto* mc = std::get_if<MonteCarlo>(&kl_mode); mc && mc->sample_count == 0)
    throw InputError("kl_mode monte_carlo sample_count must be positive");
}

namespace {

template <class P>
void check_pair(const P& theta, const P& ref, const char* what) {
  if (!theta.same_shape(ref)) throw InputError(std::string(what) + ": theta and reference shapes differ");
}

// Mean log-likelihood of outputs and its gradient accumulated with `scale`.
template <PolicyFamily P>
double mean_log_prob(const P& theta, Condition x, std::span<const typename P::Output> outputs, double scale,
                     ParamVector& grad) {
  if (outputs.empty()) return 0.0;
  const double inv = 1.0 / static_cast<double>(outputs.size());
  double acc = 0.0;
  for (const auto& y : outputs) {
    acc += theta.log_prob(x, y);
    if (scale != 0.0) theta.accumulate_grad_log_prob(x, y, scale * inv, grad);
  }
  return acc * inv;
}

void check_probability_list(std::span<const double> probs, const char* what) {
  for (double p : probs)
    if (!(p >= 0.0 && p <= 1.0)) throw InputError(std::string(what) + ": probabilities must lie in [0, 1]");
}

template <PolicyFamily P>
std::vector<double> reference_mass(Condition x, std::span<const typename P::Output> support, const P& ref) {
  std::vector<double> mass;
  mass.reserve(support.size());
  double total = 0.0;
  for (const auto& y : support) {
    mass.push_back(std::exp(ref.log_prob(x, y)));
    total += mass.back();
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw InputError("exact form loss: support does not cover the reference distribution (mass " +
                     format_double(total) + ")");
  return mass;
}

}  // namespace

template <PolicyFamily P>
LossResult pmpo_loss(const PreferenceBatch<typename P::Output>& batch, const P& theta, const P& ref,
                     const LossSpec& spec, Rng& rng) {
  spec.validate();
  check_pair(theta, ref, "pmpo_loss");
  if (batch.accepted.empty() && batch.rejected.empty())
    throw InputError("pmpo_loss: accepted and rejected lists are both empty");

  const Condition x = batch.condition;
  LossResult out;
  out.gradient = ParamVector(theta.param_count());
  out.components.accept_term = mean_log_prob<P>(theta, x, batch.accepted, spec.alpha, out.gradient);
  out.components.reject_term = mean_log_prob<P>(theta, x, batch.rejected, -(1.0 - spec.alpha), out.gradient);

  // The KL estimate is always reported, even when beta == 0.
  const KlEstimate kl = estimate_kl(ref, theta, x, spec.kl_mode, rng);
  out.components.kl_term = kl.value;
  if (spec.beta != 0.0) out.gradient.axpy(-spec.beta, kl.gradient);

  out.value = spec.alpha * out.components.accept_term - (1.0 - spec.alpha) * out.components.reject_term -
              spec.beta * out.components.kl_term;
  return out;
}

template <PolicyFamily P>
LossResult mpo_weighted_ml_loss(Condition x, std::span<const typename P::Output> samples,
                                std::span<const double> f_values, const P& theta, double eta) {
  if (samples.empty()) throw InputError("mpo_weighted_ml_loss: samples are empty");
  if (samples.size() != f_values.size()) throw InputError("mpo_weighted_ml_loss: f_values length mismatch");
  if (!(eta > 0.0)) throw InputError("mpo_weighted_ml_loss: eta must be > 0");

  std::vector<double> scaled(f_values.begin(), f_values.end());
  for (double& v : scaled) v /= eta;
  const auto weights = softmax(scaled);

  LossResult out;
  out.gradient = ParamVector(theta.param_count());
  for (std::size_t j = 0; j < samples.size(); ++j) {
    out.value += weights[j] * theta.log_prob(x, samples[j]);
    theta.accumulate_grad_log_prob(x, samples[j], weights[j], out.gradient);
  }
  out.components.accept_term = out.value;
  return out;
}

template <PolicyFamily P>
LossResult bc_loss(Condition x, std::span<const typename P::Output> samples, const P& theta) {
  if (samples.empty()) throw InputError("bc_loss: samples are empty");
  LossResult out;
  out.gradient = ParamVector(theta.param_count());
  out.value = mean_log_prob<P>(theta, x, samples, 1.0, out.gradient);
  out.components.accept_term = out.value;
  return out;
}

template <PolicyFamily P>
LossResult dpo_loss(Condition x, const typename P::Output& y_accept, const typename P::Output& y_reject,
                    const P& theta, const P& ref, double dpo_beta) {
  check_pair(theta, ref, "dpo_loss");
  if (!(dpo_beta > 0.0)) throw InputError("dpo_loss: dpo_beta must be > 0");
  if (y_accept == y_reject) throw InputError("dpo_loss: accepted and rejected outputs are identical");

  const double theta_a = theta.log_prob(x, y_accept);
  const double theta_r = theta.log_prob(x, y_reject);
  const double margin = (theta_a - ref.log_prob(x, y_accept)) - (theta_r - ref.log_prob(x, y_reject));
  const double z = dpo_beta * margin;

  LossResult out;
  out.sense = Sense::Minimize;
  out.value = softplus(-z);
  out.components.accept_term = theta_a;
  out.components.reject_term = theta_r;
  out.gradient = ParamVector(theta.param_count());
  const double coeff = -sigmoid(-z) * dpo_beta;
  theta.accumulate_grad_log_prob(x, y_accept, coeff, out.gradient);
  theta.accumulate_grad_log_prob(x, y_reject, -coeff, out.gradient);
  return out;
}

template <PolicyFamily P>
LossResult ipo_loss(Condition x, const typename P::Output& y_accept, const typename P::Output& y_reject,
                    const P& theta, const P& ref, double ipo_beta) {
  check_pair(theta, ref, "ipo_loss");
  if (!(ipo_beta > 0.0)) throw InputError("ipo_loss: ipo_beta must be > 0");
  if (y_accept == y_reject) throw InputError("ipo_loss: accepted and rejected outputs are identical");

  const double theta_a = theta.log_prob(x, y_accept);
  const double theta_r = theta.log_prob(x, y_reject);
  const double gap = (theta_a - ref.log_prob(x, y_accept)) - (theta_r - ref.log_prob(x, y_reject));

  LossResult out;
  out.sense = Sense::Minimize;
  out.value = -theta_a + theta_r + ipo_beta * gap * gap;
  out.components.accept_term = theta_a;
  out.components.reject_term = theta_r;
  out.components.kl_term = gap * gap;
  out.gradient = ParamVector(theta.param_count());
  const double coeff = 2.0 * ipo_beta * gap;
  theta.accumulate_grad_log_prob(x, y_accept, -1.0 + coeff, out.gradient);
  theta.accumulate_grad_log_prob(x, y_reject, 1.0 - coeff, out.gradient);
  return out;
}

template <PolicyFamily P>
ExactFormResult positive_form_loss(Condition x, std::span<const typename P::Output> support,
                                   std::span<const double> pref_probs, const P& theta, const P& ref) {
  check_pair(theta, ref, "positive_form_loss");
  if (support.size() != pref_probs.size()) throw InputError("positive_form_loss: pref_probs length mismatch");
  check_probability_list(pref_probs, "positive_form_loss");
  const auto mass = reference_mass<P>(x, support, ref);

  double z = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) z += mass[i] * pref_probs[i];
  if (!(z > 0.0)) throw DegenerateInputError("positive_form_loss: normalizer Z_x is zero");

  ExactFormResult out;
  out.normalizer = z;
  out.loss.gradient = ParamVector(theta.param_count());
  for (std::size_t i = 0; i < support.size(); ++i) {
    const double w = mass[i] * pref_probs[i] / z;
    if (w == 0.0) continue;
    out.loss.value += w * theta.log_prob(x, support[i]);
    theta.accumulate_grad_log_prob(x, support[i], w, out.loss.gradient);
  }
  out.loss.components.accept_term = out.loss.value;
  return out;
}

template <PolicyFamily P>
ExactFormResult negative_form_loss(Condition x, std::span<const typename P::Output> support,
                                   std::span<const double> dispref_probs, const P& theta, const P& ref) {
  check_pair(theta, ref, "negative_form_loss");
  if (support.size() != dispref_probs.size())
    throw InputError("negative_form_loss: dispref_probs length mismatch");
  check_probability_list(dispref_probs, "negative_form_loss");
  const auto mass = reference_mass<P>(x, support, ref);

  double z = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) z += mass[i] * dispref_probs[i];
  if (!(z > 0.0)) throw DegenerateInputError("negative_form_loss: normalizer Z'_x is zero");

  ExactFormResult out;
  out.normalizer = z;
  auto& loss = out.loss;
  loss.gradient = ParamVector(theta.param_count());
  double weighted = 0.0;
  double kl = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    const double lp_theta = theta.log_prob(x, support[i]);
    const double w = mass[i] * dispref_probs[i] / z;
    weighted += w * lp_theta;
    if (mass[i] > 0.0) kl += mass[i] * (std::log(mass[i]) - lp_theta);
    // d/dtheta of (-w log pi) and of (-KL / Z') = (1 / Z') sum ref grad log pi.
    const double coeff = -w + mass[i] / z;
    if (coeff != 0.0) theta.accumulate_grad_log_prob(x, support[i], coeff, loss.gradient);
  }
  loss.components.reject_term = weighted;
  loss.components.kl_term = kl;
  loss.value = -weighted - kl / z;
  return out;
}

VarianceLink ipo_variance_link(const CategoricalPolicy& theta, const CategoricalPolicy& ref, Condition x) {
  check_pair(theta, ref, "ipo_variance_link");
  const auto lt = theta.log_probs(x);
  const auto lr = ref.log_probs(x);
  const std::size_t n = lt.size();
  std::vector<double> delta(n), mass(n);
  for (std::size_t i = 0; i < n; ++i) {
    delta[i] = lt[i] - lr[i];
    mass[i] = std::exp(lr[i]);
  }
  VarianceLink out;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t r = 0; r < n; ++r) {
      const double d = delta[a] - delta[r];
      out.pair_expectation += mass[a] * mass[r] * d * d;
    }
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += mass[i] * delta[i];
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += mass[i] * (delta[i] - mean) * (delta[i] - mean);
  out.twice_variance = 2.0 * var;
  return out;
}

#define PMPO_INSTANTIATE_OBJECTIVES(P)                                                                         \
  template LossResult pmpo_loss<P>(const PreferenceBatch<P::Output>&, const P&, const P&, const LossSpec&,   \
                                   Rng&);                                                                     \
  template LossResult mpo_weighted_ml_loss<P>(Condition, std::span<const P::Output>, std::span<const double>, \
                                              const P&, double);                                              \
  template LossResult bc_loss<P>(Condition, std::span<const P::Output>, const P&);                           \
  template LossResult dpo_loss<P>(Condition, const P::Output&, const P::Output&, const P&, const P&, double); \
  template LossResult ipo_loss<P>(Condition, const P::Output&, const P::Output&, const P&, const P&, double); \
  template ExactFormResult positive_form_loss<P>(Condition, std::span<const P::Output>,                      \
                                                 std::span<const double>, const P&, const P&);                \
  template ExactFormResult negative_form_loss<P>(Condition, std::span<const P::Output>,                      \
                                                 std::span<const double>, const P&, const P&);

PMPO_INSTANTIATE_OBJECTIVES(GaussianPolicy)
PMPO_INSTANTIATE_OBJECTIVES(CategoricalPolicy)
PMPO_INSTANTIATE_OBJECTIVES(AutoregressivePolicy)

#undef PMPO_INSTANTIATE_OBJECTIVES

}  // namespace pmpo
