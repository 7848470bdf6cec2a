#include "pmpo/optimizer.hpp"

#include "pmpo/errors.hpp"

#include <cmath>

namespace pmpo {

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  throw InputError("unknown optimizer \"" + std::string(name) + "\"");
}

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

void OptimizerConfig::collect_violations(std::vector<std::string>& out, const std::string& prefix) const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) out.push_back(prefix + "learning_rate must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) out.push_back(prefix + "adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) out.push_back(prefix + "adam_beta2 must lie in [0, 1)");
  if (!(adam_epsilon > 0.0)) out.push_back(prefix + "adam_epsilon must be > 0");
}

ParamVector optimizer_step(const ParamVector& params, const ParamVector& gradient, OptimizerState& state,
                           const OptimizerConfig& config) {
  if (params.size() != gradient.size()) throw InputError("optimizer_step: gradient size mismatch");
  if (!gradient.all_finite()) throw NonFiniteError("optimizer_step: gradient has a non-finite entry");

  ParamVector out = params;
  if (config.kind == OptimizerKind::Sgd) {
    out.axpy(config.learning_rate, gradient);
  } else {
    if (state.m.size() != params.size()) {
      state.m = ParamVector(params.size());
      state.v = ParamVector(params.size());
      state.t = 0;
    }
    ++state.t;
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i] = b1 * state.m[i] + (1.0 - b1) * gradient[i];
      state.v[i] = b2 * state.v[i] + (1.0 - b2) * gradient[i] * gradient[i];
      const double m_hat = state.m[i] / c1;
      const double v_hat = state.v[i] / c2;
      out[i] += config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
    }
  }
  if (!out.all_finite()) throw NonFiniteError("optimizer_step: parameters became non-finite");
  return out;
}

ParamVector clip_global_norm(ParamVector g, double max_norm) {
  if (max_norm <= 0.0) return g;
  const double n = g.norm();
  if (n > max_norm) g *= max_norm / n;
  return g;
}

}  // namespace pmpo
