#pragma once

// Policy families pi_theta(y | x) with exact log-density, sampling and
// analytic gradients of the log-density.
//
// ParamVector layouts:
//   GaussianPolicy        [mean_0 .. mean_{d-1}, log_std_0 .. log_std_{d-1}]
//   CategoricalPolicy     row-major logits, index x * outputs + y
//   AutoregressivePolicy  row-major logits, index
//                         ((x * contexts) + context) * vocab + token
//
// Policies are immutable values. Updating parameters means building a new
// policy via with_params().

#include "pmpo/errors.hpp"
#include "pmpo/param_vector.hpp"
#include "pmpo/rng.hpp"

#include <concepts>
#include <cstddef>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace pmpo {

using Condition = std::size_t;
using Token = std::size_t;
using TokenSequence = std::vector<Token>;

// exp(log_std) is clamped from below so the density never degenerates.
inline constexpr double kStdFloor = 1e-4;
// Logits are clamped to [-kLogitBound, kLogitBound] before the softmax.
inline constexpr double kLogitBound = 30.0;

// Diagonal Gaussian over R^d. Unconditioned: the condition argument is ignored.
class GaussianPolicy {
 public:
  using Output = std::vector<double>;
  static constexpr std::string_view kFamily = "gaussian";

  GaussianPolicy(std::vector<double> mean, std::vector<double> log_std);

  std::size_t dimension() const noexcept { return mean_.size(); }
  const std::vector<double>& mean() const noexcept { return mean_; }
  const std::vector<double>& log_std() const noexcept { return log_std_; }

  // Effective standard deviation max(exp(log_std_i), kStdFloor).
  double std_dev(std::size_t i) const;
  bool std_at_floor(std::size_t i) const;

  std::size_t param_count() const noexcept { return 2 * mean_.size(); }
  ParamVector params() const;
  GaussianPolicy with_params(const ParamVector& params) const;
  bool same_shape(const GaussianPolicy& other) const noexcept {
    return dimension() == other.dimension();
  }

  double log_prob(Condition x, const Output& y) const;
  void accumulate_grad_log_prob(Condition x, const Output& y, double scale, ParamVector& grad) const;
  Output sample_one(Condition x, Rng& rng) const;

 private:
  void check_output(const Output& y) const;

  std::vector<double> mean_;
  std::vector<double> log_std_;
};

// Table of logits, one categorical distribution per condition.
class CategoricalPolicy {
 public:
  using Output = std::size_t;
  static constexpr std::string_view kFamily = "categorical";

  CategoricalPolicy(std::size_t conditions, std::size_t outputs, std::vector<double> logits);
  static CategoricalPolicy uniform(std::size_t conditions, std::size_t outputs);

  std::size_t conditions() const noexcept { return conditions_; }
  std::size_t outputs() const noexcept { return outputs_; }
  const std::vector<double>& logits() const noexcept { return logits_; }

  std::vector<double> log_probs(Condition x) const;
  std::vector<double> probs(Condition x) const;

  std::size_t param_count() const noexcept { return logits_.size(); }
  ParamVector params() const { return ParamVector(logits_); }
  CategoricalPolicy with_params(const ParamVector& params) const;
  bool same_shape(const CategoricalPolicy& other) const noexcept {
    return conditions_ == other.conditions_ && outputs_ == other.outputs_;
  }

  double log_prob(Condition x, const Output& y) const;
  void accumulate_grad_log_prob(Condition x, const Output& y, double scale, ParamVector& grad) const;
  // Adds scale * d/dtheta sum_y weights[y] log pi(y|x) for a full weight vector over outputs.
  void accumulate_weighted_grad(Condition x, std::span<const double> weights, double scale,
                                ParamVector& grad) const;
  Output sample_one(Condition x, Rng& rng) const;

  void check_condition(Condition x) const;

 private:
  std::size_t conditions_;
  std::size_t outputs_;
  std::vector<double> logits_;
};

// Order-n autoregressive categorical model over tokens [0, vocab). The
// conditional at each step depends on the condition and the last n tokens;
// missing history positions are filled with a begin marker. Context codes are
// base-(vocab+1) numbers with the most recent token in the lowest digit;
// digit 0 is the begin marker and token t is digit t + 1.
class AutoregressivePolicy {
 public:
  using Output = TokenSequence;
  static constexpr std::string_view kFamily = "autoregressive";

  AutoregressivePolicy(std::size_t conditions, std::size_t vocab_size, std::size_t context_order,
                       std::size_t max_length, std::vector<double> logits);
  static AutoregressivePolicy uniform(std::size_t conditions, std::size_t vocab_size,
                                      std::size_t context_order, std::size_t max_length);

  std::size_t conditions() const noexcept { return conditions_; }
  std::size_t vocab_size() const noexcept { return vocab_; }
  std::size_t context_order() const noexcept { return order_; }
  std::size_t max_length() const noexcept { return max_length_; }
  std::size_t context_count() const noexcept { return contexts_; }
  const std::vector<double>& logits() const noexcept { return logits_; }

  // Context code of the history before position prefix.size().
  std::size_t context_of(std::span<const Token> prefix) const;
  // Code reached after emitting token from context.
  std::size_t next_context(std::size_t context, Token token) const;
  static constexpr std::size_t initial_context() noexcept { return 0; }

  std::vector<double> step_log_probs(Condition x, std::size_t context) const;
  std::vector<double> step_log_probs(Condition x, std::span<const Token> prefix) const {
    return step_log_probs(x, context_of(prefix));
  }
  std::size_t row_offset(Condition x, std::size_t context) const {
    return (x * contexts_ + context) * vocab_;
  }

  std::size_t param_count() const noexcept { return logits_.size(); }
  ParamVector params() const { return ParamVector(logits_); }
  AutoregressivePolicy with_params(const ParamVector& params) const;
  bool same_shape(const AutoregressivePolicy& other) const noexcept {
    return conditions_ == other.conditions_ && vocab_ == other.vocab_ && order_ == other.order_ &&
           max_length_ == other.max_length_;
  }

  // Log-probability of a sequence of length <= max_length (a prefix probability
  // when shorter).
  double log_prob(Condition x, const Output& y) const;
  void accumulate_grad_log_prob(Condition x, const Output& y, double scale, ParamVector& grad) const;
  // Samples a full length-max_length sequence.
  Output sample_one(Condition x, Rng& rng) const;

  void check_condition(Condition x) const;
  void check_sequence(const Output& y) const;

 private:
  std::size_t conditions_;
  std::size_t vocab_;
  std::size_t order_;
  std::size_t max_length_;
  std::size_t contexts_;
  std::vector<double> logits_;
};

template <class P>
concept PolicyFamily = requires(const P& p, Condition x, const typename P::Output& y, Rng& rng,
                                ParamVector& g, const ParamVector& params) {
  { p.log_prob(x, y) } -> std::same_as<double>;
  p.accumulate_grad_log_prob(x, y, 1.0, g);
  { p.sample_one(x, rng) } -> std::same_as<typename P::Output>;
  { p.params() } -> std::same_as<ParamVector>;
  { p.with_params(params) } -> std::same_as<P>;
  { p.param_count() } -> std::same_as<std::size_t>;
  { p.same_shape(p) } -> std::same_as<bool>;
};

using AnyPolicy = std::variant<GaussianPolicy, CategoricalPolicy, AutoregressivePolicy>;

template <PolicyFamily P>
double log_prob(const P& policy, Condition x, const typename P::Output& y) {
  return policy.log_prob(x, y);
}

template <PolicyFamily P>
ParamVector grad_log_prob(const P& policy, Condition x, const typename P::Output& y) {
  ParamVector grad(policy.param_count());
  policy.accumulate_grad_log_prob(x, y, 1.0, grad);
  return grad;
}

// M independent draws; throws InputError when count == 0.
template <PolicyFamily P>
std::vector<typename P::Output> sample(const P& policy, Condition x, Rng& rng, std::size_t count) {
  if (count == 0) throw InputError("sample: count must be at least 1");
  std::vector<typename P::Output> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(policy.sample_one(x, rng));
  return out;
}

// Clamp to [-kLogitBound, kLogitBound].
double clamp_logit(double logit) noexcept;
bool logit_clamped(double logit) noexcept;

// Sample an index from a probability vector.
std::size_t sample_index(std::span<const double> probs, Rng& rng);

// Every length-L sequence over [0, V) in lexicographic order.
std::vector<TokenSequence> enumerate_sequences(std::size_t vocab_size, std::size_t length);

}  // namespace pmpo
