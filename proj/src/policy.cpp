#include "pmpo/policy.hpp"

#include "pmpo/errors.hpp"
#include "pmpo/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace pmpo {

namespace {

constexpr std::size_t kMaxTableSize = 50'000'000;

std::size_t checked_power(std::size_t base, std::size_t exponent) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exponent; ++i) {
    if (out > kMaxTableSize / base) throw CapacityError("autoregressive context table too large");
    out *= base;
  }
  return out;
}

void check_finite(const std::vector<double>& values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) throw InputError(std::string(what) + " must be finite");
}

std::vector<double> clamped_row(std::span<const double> row) {
  std::vector<double> out(row.begin(), row.end());
  for (double& v : out) v = clamp_logit(v);
  return out;
}

}  // namespace

double clamp_logit(double logit) noexcept { return std::clamp(logit, -kLogitBound, kLogitBound); }

bool logit_clamped(double logit) noexcept { return logit > kLogitBound || logit < -kLogitBound; }

std::size_t sample_index(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // u landed in the rounding slack above the cumulative sum: take the last
  // entry with nonzero mass.
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return i;
  return probs.size() - 1;
}

std::vector<TokenSequence> enumerate_sequences(std::size_t vocab_size, std::size_t length) {
  const std::size_t total = checked_power(vocab_size, length);
  std::vector<TokenSequence> out;
  out.reserve(total);
  TokenSequence current(length, 0);
  for (std::size_t n = 0; n < total; ++n) {
    out.push_back(current);
    for (std::size_t pos = length; pos-- > 0;) {
      if (++current[pos] < vocab_size) break;
      current[pos] = 0;
    }
  }
  return out;
}

// --- GaussianPolicy ---------------------------------------------------------

GaussianPolicy::GaussianPolicy(std::vector<double> mean, std::vector<double> log_std)
    : mean_(std::move(mean)), log_std_(std::move(log_std)) {
  if (mean_.empty()) throw InputError("gaussian policy: dimension must be positive");
  if (mean_.size() != log_std_.size())
    throw InputError("gaussian policy: mean and log_std dimensions differ");
  check_finite(mean_, "gaussian mean");
  check_finite(log_std_, "gaussian log_std");
}

double GaussianPolicy::std_dev(std::size_t i) const {
  return std::max(std::exp(log_std_[i]), kStdFloor);
}

bool GaussianPolicy::std_at_floor(std::size_t i) const { return std::exp(log_std_[i]) < kStdFloor; }

ParamVector GaussianPolicy::params() const {
  std::vector<double> out(mean_);
  out.insert(out.end(), log_std_.begin(), log_std_.end());
  return ParamVector(std::move(out));
}

GaussianPolicy GaussianPolicy::with_params(const ParamVector& params) const {
  const std::size_t d = dimension();
  if (params.size() != 2 * d) throw InputError("gaussian policy: parameter vector size mismatch");
  std::vector<double> mean(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d));
  std::vector<double> log_std(params.begin() + static_cast<std::ptrdiff_t>(d), params.end());
  return GaussianPolicy(std::move(mean), std::move(log_std));
}

void GaussianPolicy::check_output(const Output& y) const {
  if (y.size() != dimension())
    throw InputError("gaussian policy: output has dimension " + std::to_string(y.size()) +
                     ", expected " + std::to_string(dimension()));
}

double GaussianPolicy::log_prob(Condition, const Output& y) const {
  check_output(y);
  constexpr double half_log_two_pi = 0.91893853320467274178;
  double out = 0.0;
  for (std::size_t i = 0; i < dimension(); ++i) {
    const double s = std_dev(i);
    const double z = (y[i] - mean_[i]) / s;
    out += -0.5 * z * z - std::log(s) - half_log_two_pi;
  }
  return out;
}

void GaussianPolicy::accumulate_grad_log_prob(Condition, const Output& y, double scale,
                                              ParamVector& grad) const {
  check_output(y);
  const std::size_t d = dimension();
  for (std::size_t i = 0; i < d; ++i) {
    const double s = std_dev(i);
    const double z = (y[i] - mean_[i]) / s;
    grad[i] += scale * z / s;
    if (!std_at_floor(i)) grad[d + i] += scale * (z * z - 1.0);
  }
}

GaussianPolicy::Output GaussianPolicy::sample_one(Condition, Rng& rng) const {
  Output y(dimension());
  for (std::size_t i = 0; i < dimension(); ++i) y[i] = mean_[i] + std_dev(i) * rng.normal();
  return y;
}

// --- CategoricalPolicy ------------------------------------------------------

CategoricalPolicy::CategoricalPolicy(std::size_t conditions, std::size_t outputs,
                                     std::vector<double> logits)
    : conditions_(conditions), outputs_(outputs), logits_(std::move(logits)) {
  if (conditions_ == 0 || outputs_ == 0)
    throw InputError("categorical policy: condition and output counts must be positive");
  if (conditions_ > kMaxTableSize / outputs_) throw CapacityError("categorical table too large");
  if (logits_.size() != conditions_ * outputs_)
    throw InputError("categorical policy: logits size must equal conditions * outputs");
  check_finite(logits_, "categorical logits");
}

CategoricalPolicy CategoricalPolicy::uniform(std::size_t conditions, std::size_t outputs) {
  return CategoricalPolicy(conditions, outputs, std::vector<double>(conditions * outputs, 0.0));
}

void CategoricalPolicy::check_condition(Condition x) const {
  if (x >= conditions_)
    throw InputError("categorical policy: condition " + std::to_string(x) + " out of range");
}

std::vector<double> CategoricalPolicy::log_probs(Condition x) const {
  check_condition(x);
  const auto row = std::span<const double>(logits_).subspan(x * outputs_, outputs_);
  return log_softmax(clamped_row(row));
}

std::vector<double> CategoricalPolicy::probs(Condition x) const {
  auto out = log_probs(x);
  for (double& v : out) v = std::exp(v);
  return out;
}

CategoricalPolicy CategoricalPolicy::with_params(const ParamVector& params) const {
  if (params.size() != logits_.size())
    throw InputError("categorical policy: parameter vector size mismatch");
  return CategoricalPolicy(conditions_, outputs_, params.values());
}

double CategoricalPolicy::log_prob(Condition x, const Output& y) const {
  if (y >= outputs_) throw InputError("categorical policy: output " + std::to_string(y) + " out of range");
  return log_probs(x)[y];
}

void CategoricalPolicy::accumulate_grad_log_prob(Condition x, const Output& y, double scale,
                                                 ParamVector& grad) const {
  if (y >= outputs_) throw InputError("categorical policy: output " + std::to_string(y) + " out of range");
  const auto p = probs(x);
  const std::size_t base = x * outputs_;
  for (std::size_t k = 0; k < outputs_; ++k) {
    if (logit_clamped(logits_[base + k])) continue;
    grad[base + k] += scale * ((k == y ? 1.0 : 0.0) - p[k]);
  }
}

void CategoricalPolicy::accumulate_weighted_grad(Condition x, std::span<const double> weights,
                                                 double scale, ParamVector& grad) const {
  if (weights.size() != outputs_) throw InputError("categorical policy: weight vector size mismatch");
  const auto p = probs(x);
  double total = 0.0;
  for (double w : weights) total += w;
  const std::size_t base = x * outputs_;
  for (std::size_t k = 0; k < outputs_; ++k) {
    if (logit_clamped(logits_[base + k])) continue;
    grad[base + k] += scale * (weights[k] - total * p[k]);
  }
}

CategoricalPolicy::Output CategoricalPolicy::sample_one(Condition x, Rng& rng) const {
  return sample_index(probs(x), rng);
}

// --- AutoregressivePolicy ---------------------------------------------------

AutoregressivePolicy::AutoregressivePolicy(std::size_t conditions, std::size_t vocab_size,
                                           std::size_t context_order, std::size_t max_length,
                                           std::vector<double> logits)
    : conditions_(conditions),
      vocab_(vocab_size),
      order_(context_order),
      max_length_(max_length),
      contexts_(0),
      logits_(std::move(logits)) {
  if (conditions_ == 0 || vocab_ == 0 || max_length_ == 0)
    throw InputError("autoregressive policy: conditions, vocab_size and max_length must be positive");
  contexts_ = checked_power(vocab_ + 1, order_);
  if (conditions_ * contexts_ > kMaxTableSize / vocab_)
    throw CapacityError("autoregressive logit table too large");
  if (logits_.size() != conditions_ * contexts_ * vocab_)
    throw InputError("autoregressive policy: logits size must equal conditions * (vocab+1)^order * vocab");
  check_finite(logits_, "autoregressive logits");
}

AutoregressivePolicy AutoregressivePolicy::uniform(std::size_t conditions, std::size_t vocab_size,
                                                   std::size_t context_order, std::size_t max_length) {
  const std::size_t contexts = checked_power(vocab_size + 1, context_order);
  return AutoregressivePolicy(conditions, vocab_size, context_order, max_length,
                              std::vector<double>(conditions * contexts * vocab_size, 0.0));
}

std::size_t AutoregressivePolicy::next_context(std::size_t context, Token token) const {
  if (order_ == 0) return 0;
  return (context * (vocab_ + 1) + token + 1) % contexts_;
}

std::size_t AutoregressivePolicy::context_of(std::span<const Token> prefix) const {
  std::size_t ctx = initial_context();
  const std::size_t start = prefix.size() > order_ ? prefix.size() - order_ : 0;
  for (std::size_t i = start; i < prefix.size(); ++i) ctx = next_context(ctx, prefix[i]);
  return ctx;
}

void AutoregressivePolicy::check_condition(Condition x) const {
  if (x >= conditions_)
    throw InputError("autoregressive policy: condition " + std::to_string(x) + " out of range");
}

void AutoregressivePolicy::check_sequence(const Output& y) const {
  if (y.size() > max_length_)
    throw InputError("autoregressive policy: sequence length " + std::to_string(y.size()) +
                     " exceeds max_length " + std::to_string(max_length_));
  for (Token t : y)
    if (t >= vocab_) throw InputError("autoregressive policy: token " + std::to_string(t) + " out of range");
}

std::vector<double> AutoregressivePolicy::step_log_probs(Condition x, std::size_t context) const {
  check_condition(x);
  const auto row = std::span<const double>(logits_).subspan(row_offset(x, context), vocab_);
  return log_softmax(clamped_row(row));
}

AutoregressivePolicy AutoregressivePolicy::with_params(const ParamVector& params) const {
  if (params.size() != logits_.size())
    throw InputError("autoregressive policy: parameter vector size mismatch");
  return AutoregressivePolicy(conditions_, vocab_, order_, max_length_, params.values());
}

double AutoregressivePolicy::log_prob(Condition x, const Output& y) const {
  check_condition(x);
  check_sequence(y);
  double out = 0.0;
  std::size_t ctx = initial_context();
  for (Token t : y) {
    out += step_log_probs(x, ctx)[t];
    ctx = next_context(ctx, t);
  }
  return out;
}

void AutoregressivePolicy::accumulate_grad_log_prob(Condition x, const Output& y, double scale,
                                                    ParamVector& grad) const {
  check_condition(x);
  check_sequence(y);
  std::size_t ctx = initial_context();
  for (Token t : y) {
    const auto lp = step_log_probs(x, ctx);
    const std::size_t base = row_offset(x, ctx);
    for (std::size_t k = 0; k < vocab_; ++k) {
      if (logit_clamped(logits_[base + k])) continue;
      grad[base + k] += scale * ((k == t ? 1.0 : 0.0) - std::exp(lp[k]));
    }
    ctx = next_context(ctx, t);
  }
}

AutoregressivePolicy::Output AutoregressivePolicy::sample_one(Condition x, Rng& rng) const {
  check_condition(x);
  Output y;
  y.reserve(max_length_);
  std::size_t ctx = initial_context();
  for (std::size_t i = 0; i < max_length_; ++i) {
    auto p = step_log_probs(x, ctx);
    for (double& v : p) v = std::exp(v);
    const Token t = sample_index(p, rng);
    y.push_back(t);
    ctx = next_context(ctx, t);
  }
  return y;
}

}  // namespace pmpo
