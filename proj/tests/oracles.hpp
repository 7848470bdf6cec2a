#pragma once

// Test-side reference computations. Everything here is written from the
// textbook definitions and deliberately avoids the library's own helpers
// (softmax, logsumexp, context coding) so the tests compare two independent
// implementations.

#include "pmpo/policy.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using pmpo::ParamVector;
using pmpo::Rng;

inline std::vector<double> probs_from_logits(const double* logits, std::size_t n) {
  double hi = logits[0];
  for (std::size_t i = 1; i < n; ++i) hi = std::max(hi, logits[i]);
  std::vector<double> p(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += p[i] = std::exp(logits[i] - hi);
  for (double& v : p) v /= z;
  return p;
}

inline double gaussian_log_density(const std::vector<double>& mean, const std::vector<double>& log_std,
                                   const std::vector<double>& y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double s = std::exp(log_std[i]);
    const double z = (y[i] - mean[i]) / s;
    acc += -0.5 * z * z - std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return acc;
}

// Context code: the last `order` tokens as base-(V+1) digits (token + 1),
// most recent token in the lowest digit.
inline std::size_t context_code(const std::vector<std::size_t>& prefix, std::size_t vocab, std::size_t order) {
  std::size_t code = 0, place = 1;
  for (std::size_t j = 0; j < order && j < prefix.size(); ++j) {
    code += (prefix[prefix.size() - 1 - j] + 1) * place;
    place *= vocab + 1;
  }
  return code;
}

inline double autoregressive_log_prob(const pmpo::AutoregressivePolicy& p, std::size_t x,
                                      const std::vector<std::size_t>& y) {
  const std::size_t V = p.vocab_size();
  double acc = 0.0;
  std::vector<std::size_t> prefix;
  for (std::size_t t : y) {
    const std::size_t ctx = context_code(prefix, V, p.context_order());
    std::vector<double> row(V);
    for (std::size_t v = 0; v < V; ++v) row[v] = p.logits()[(x * p.context_count() + ctx) * V + v];
    acc += std::log(probs_from_logits(row.data(), V)[t]);
    prefix.push_back(t);
  }
  return acc;
}

// All V^L sequences in lexicographic order.
inline std::vector<std::vector<std::size_t>> all_sequences(std::size_t V, std::size_t L) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> y(L, 0);
  while (true) {
    out.push_back(y);
    std::size_t i = L;
    while (i > 0 && ++y[i - 1] == V) y[--i] = 0;
    if (i == 0) break;
  }
  return out;
}

// Central differences of f at p with step h.
inline ParamVector finite_difference(const std::function<double(const ParamVector&)>& f, const ParamVector& p,
                                     double h = 1e-5) {
  ParamVector g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    ParamVector up = p, down = p;
    up[i] += h;
    down[i] -= h;
    g[i] = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

// The 1e-6 floor keeps exactly-zero gradients (a context-free policy scoring a
// permuted pair, say) from turning central-difference roundoff into a failure.
inline double relative_error(const ParamVector& analytic, const ParamVector& numeric) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    scale = std::max(scale, std::max(std::abs(analytic[i]), std::abs(numeric[i])));
  }
  return std::sqrt(diff) / std::max(scale * std::sqrt(static_cast<double>(analytic.size())), 1e-6);
}

inline pmpo::GaussianPolicy random_gaussian(Rng& rng, std::size_t d) {
  std::vector<double> mean(d), log_std(d);
  for (auto& m : mean) m = 2.0 * rng.normal();
  for (auto& s : log_std) s = -1.0 + 1.5 * rng.uniform();
  return {mean, log_std};
}

inline pmpo::CategoricalPolicy random_categorical(Rng& rng, std::size_t conditions, std::size_t outputs,
                                                  double scale = 1.5) {
  std::vector<double> logits(conditions * outputs);
  for (auto& l : logits) l = scale * rng.normal();
  return {conditions, outputs, logits};
}

inline pmpo::AutoregressivePolicy random_autoregressive(Rng& rng, std::size_t conditions, std::size_t vocab,
                                                        std::size_t order, std::size_t length,
                                                        double scale = 1.0) {
  auto shape = pmpo::AutoregressivePolicy::uniform(conditions, vocab, order, length);
  std::vector<double> logits(shape.param_count());
  for (auto& l : logits) l = scale * rng.normal();
  return {conditions, vocab, order, length, logits};
}

// A perturbed copy of a policy, handy for building (theta, ref) pairs.
template <class P>
P perturbed(const P& p, Rng& rng, double scale) {
  ParamVector q = p.params();
  for (auto& v : q) v += scale * rng.normal();
  return p.with_params(q);
}

}  // namespace oracle
