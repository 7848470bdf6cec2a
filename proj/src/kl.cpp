#include "pmpo/kl.hpp"

#include <cmath>
#include <string>

namespace pmpo {

namespace {

template <class P>
void check_pair(const P& ref, const P& theta, const char* what) {
  if (!ref.same_shape(theta)) throw InputError(std::string(what) + ": policies have different shapes");
}

// theta-gradient of categorical_kl(ref_row, theta_row) written into the
// logits row starting at base; clamped theta logits receive no gradient.
void accumulate_row_kl_grad(std::span<const double> ref_log_probs, std::span<const double> theta_log_probs,
                            std::span<const double> theta_logits, std::size_t base, double scale,
                            ParamVector& grad) {
  for (std::size_t k = 0; k < ref_log_probs.size(); ++k) {
    if (logit_clamped(theta_logits[base + k])) continue;
    grad[base + k] += scale * (std::exp(theta_log_probs[k]) - std::exp(ref_log_probs[k]));
  }
}

}  // namespace

double categorical_kl(std::span<const double> log_p, std::span<const double> log_q) {
  if (log_p.size() != log_q.size()) throw InputError("categorical_kl: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < log_p.size(); ++i) {
    const double p = std::exp(log_p[i]);
    if (p == 0.0) continue;
    acc += p * (log_p[i] - log_q[i]);
  }
  return acc;
}

double kl_closed_form(const GaussianPolicy& p, const GaussianPolicy& q, Condition) {
  check_pair(p, q, "kl_closed_form");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.dimension(); ++i) {
    const double sp = p.std_dev(i);
    const double sq = q.std_dev(i);
    const double dm = p.mean()[i] - q.mean()[i];
    acc += std::log(sq / sp) + (sp * sp + dm * dm) / (2.0 * sq * sq) - 0.5;
  }
  return acc;
}

double kl_closed_form(const CategoricalPolicy& p, const CategoricalPolicy& q, Condition x) {
  check_pair(p, q, "kl_closed_form");
  return categorical_kl(p.log_probs(x), q.log_probs(x));
}

double kl_closed_form(const AnyPolicy& p, const AnyPolicy& q, Condition x) {
  if (p.index() != q.index()) throw InputError("kl_closed_form: policy families differ");
  if (const auto* gp = std::get_if<GaussianPolicy>(&p)) return kl_closed_form(*gp, std::get<GaussianPolicy>(q), x);
  if (const auto* cp = std::get_if<CategoricalPolicy>(&p))
    return kl_closed_form(*cp, std::get<CategoricalPolicy>(q), x);
  throw InputError("kl_closed_form: no closed form for autoregressive policies");
}

ParamVector kl_closed_form_grad(const GaussianPolicy& ref, const GaussianPolicy& theta, Condition) {
  check_pair(ref, theta, "kl_closed_form_grad");
  const std::size_t d = theta.dimension();
  ParamVector grad(2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    const double sp = ref.std_dev(i);
    const double sq = theta.std_dev(i);
    const double dm = ref.mean()[i] - theta.mean()[i];
    grad[i] = -dm / (sq * sq);
    if (!theta.std_at_floor(i)) grad[d + i] = 1.0 - (sp * sp + dm * dm) / (sq * sq);
  }
  return grad;
}

ParamVector kl_closed_form_grad(const CategoricalPolicy& ref, const CategoricalPolicy& theta, Condition x) {
  check_pair(ref, theta, "kl_closed_form_grad");
  ParamVector grad(theta.param_count());
  accumulate_row_kl_grad(ref.log_probs(x), theta.log_probs(x), theta.logits(), x * theta.outputs(), 1.0, grad);
  return grad;
}

double kl_autoregressive(const AutoregressivePolicy& ref, const AutoregressivePolicy& theta, Condition x,
                         std::span<const Token> sequence) {
  check_pair(ref, theta, "kl_autoregressive");
  ref.check_sequence(TokenSequence(sequence.begin(), sequence.end()));
  double acc = 0.0;
  std::size_t ctx = AutoregressivePolicy::initial_context();
  for (Token t : sequence) {
    acc += categorical_kl(ref.step_log_probs(x, ctx), theta.step_log_probs(x, ctx));
    ctx = ref.next_context(ctx, t);
  }
  return acc;
}

void accumulate_kl_autoregressive_grad(const AutoregressivePolicy& ref, const AutoregressivePolicy& theta,
                                       Condition x, std::span<const Token> sequence, double scale,
                                       ParamVector& grad) {
  check_pair(ref, theta, "kl_autoregressive");
  ref.check_sequence(TokenSequence(sequence.begin(), sequence.end()));
  std::size_t ctx = AutoregressivePolicy::initial_context();
  for (Token t : sequence) {
    accumulate_row_kl_grad(ref.step_log_probs(x, ctx), theta.step_log_probs(x, ctx), theta.logits(),
                           theta.row_offset(x, ctx), scale, grad);
    ctx = ref.next_context(ctx, t);
  }
}

double kl_exact_enumeration(const AutoregressivePolicy& p, const AutoregressivePolicy& q, Condition x) {
  check_pair(p, q, "kl_exact_enumeration");
  double support = 1.0;
  for (std::size_t i = 0; i < p.max_length(); ++i) {
    support *= static_cast<double>(p.vocab_size());
    if (support > static_cast<double>(kMaxEnumeration))
      throw CapacityError("kl_exact_enumeration: V^L exceeds 10^6 sequences");
  }
  double acc = 0.0;
  for (const auto& y : enumerate_sequences(p.vocab_size(), p.max_length())) {
    const double lp = p.log_prob(x, y);
    const double mass = std::exp(lp);
    if (mass == 0.0) continue;
    acc += mass * (lp - q.log_prob(x, y));
  }
  return acc;
}

namespace {

template <PolicyFamily P>
KlEstimate monte_carlo_estimate(const P& ref, const P& theta, Condition x, std::size_t count, Rng& rng) {
  const auto samples = sample(ref, x, rng, count);
  KlEstimate out{kl_monte_carlo<P>(ref, theta, x, samples), ParamVector(theta.param_count())};
  const double scale = -1.0 / static_cast<double>(samples.size());
  for (const auto& y : samples) theta.accumulate_grad_log_prob(x, y, scale, out.gradient);
  return out;
}

}  // namespace

template <PolicyFamily P>
KlEstimate estimate_kl(const P& ref, const P& theta, Condition x, const KlMode& mode, Rng& rng) {
  check_pair(ref, theta, "estimate_kl");
  if (const auto* mc = std::get_if<MonteCarlo>(&mode)) {
    if (mc->sample_count == 0) throw InputError("estimate_kl: MonteCarlo sample_count must be positive");
    return monte_carlo_estimate(ref, theta, x, mc->sample_count, rng);
  }
  if constexpr (std::is_same_v<P, AutoregressivePolicy>) {
    if (!std::holds_alternative<AutoregressivePerToken>(mode))
      throw InputError("estimate_kl: autoregressive policies need AutoregressivePerToken or MonteCarlo mode");
    const auto seq = ref.sample_one(x, rng);
    KlEstimate out{kl_autoregressive(ref, theta, x, seq), ParamVector(theta.param_count())};
    accumulate_kl_autoregressive_grad(ref, theta, x, seq, 1.0, out.gradient);
    return out;
  } else {
    if (!std::holds_alternative<ClosedForm>(mode))
      throw InputError("estimate_kl: AutoregressivePerToken mode requires an autoregressive policy");
    return KlEstimate{kl_closed_form(ref, theta, x), kl_closed_form_grad(ref, theta, x)};
  }
}

template KlEstimate estimate_kl(const GaussianPolicy&, const GaussianPolicy&, Condition, const KlMode&, Rng&);
template KlEstimate estimate_kl(const CategoricalPolicy&, const CategoricalPolicy&, Condition, const KlMode&,
                                Rng&);
template KlEstimate estimate_kl(const AutoregressivePolicy&, const AutoregressivePolicy&, Condition,
                                const KlMode&, Rng&);

}  // namespace pmpo
