#pragma once

// First-order optimizers. Both step in the ascent direction: the gradient
// passed in is d objective / d theta of a maximization objective.

#include "pmpo/param_vector.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace pmpo {

enum class OptimizerKind { Sgd, Adam };

OptimizerKind parse_optimizer_kind(std::string_view name);
std::string_view to_string(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 0.05;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  // Appends one message per bad field (prefixed with `prefix`).
  void collect_violations(std::vector<std::string>& out, const std::string& prefix = "optimizer.") const;
};

struct OptimizerState {
  ParamVector m;
  ParamVector v;
  std::size_t t = 0;
};

// Throws NonFiniteError when the gradient or the result has a non-finite entry.
ParamVector optimizer_step(const ParamVector& params, const ParamVector& gradient, OptimizerState& state,
                           const OptimizerConfig& config);

// Rescales g so that its Euclidean norm is at most max_norm (no-op when max_norm <= 0).
ParamVector clip_global_norm(ParamVector g, double max_norm);

}  // namespace pmpo
