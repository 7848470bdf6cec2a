#include "pmpo/trainer.hpp"

#include "pmpo/errors.hpp"
#include "pmpo/kl.hpp"
#include "pmpo/numeric.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace pmpo {

Algorithm parse_algorithm(std::string_view name) {
  if (name == "pmpo") return Algorithm::Pmpo;
  if (name == "mpo") return Algorithm::Mpo;
  if (name == "dpo") return Algorithm::Dpo;
  if (name == "ipo") return Algorithm::Ipo;
  if (name == "bc") return Algorithm::Bc;
  if (name == "mixture") return Algorithm::Mixture;
  throw InputError("unknown algorithm \"" + std::string(name) + "\"");
}

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Pmpo: return "pmpo";
    case Algorithm::Mpo: return "mpo";
    case Algorithm::Dpo: return "dpo";
    case Algorithm::Ipo: return "ipo";
    case Algorithm::Bc: return "bc";
    case Algorithm::Mixture: return "mixture";
  }
  return "unknown";
}

std::vector<std::string> TrainerConfig::violations() const {
  std::vector<std::string> out;
  if (!(loss.alpha >= 0.0 && loss.alpha <= 1.0))
    out.push_back("alpha must lie in [0, 1] (got " + format_double(loss.alpha) + ")");
  if (!(loss.beta >= 0.0) || !std::isfinite(loss.beta))
    out.push_back("beta ≥ 0 violated (got " + format_double(loss.beta) + ")");
  if (!(loss.eta > 0.0)) out.push_back("eta must be > 0");
  if (!(loss.dpo_beta > 0.0)) out.push_back("dpo_beta must be > 0");
  if (!(loss.ipo_beta > 0.0)) out.push_back("ipo_beta must be > 0");
  if (const auto* mc = std::get_if<MonteCarlo>(&loss.kl_mode); mc && mc->sample_count == 0)
    out.push_back("kl_mode.sample_count must be positive");
  if (samples_per_condition == 0) out.push_back("samples_per_condition must be >= 1");
  if (const auto* topk = std::get_if<TopK>(&label_rule)) {
    if (topk->k == 0) out.push_back("label_rule.k must be >= 1");
    if (samples_per_condition < topk->k) out.push_back("samples_per_condition < k");
    if (samples_per_condition < 2) out.push_back("samples_per_condition must be >= 2 for top-k labels");
  }
  if (std::holds_alternative<BestWorstOnly>(label_rule) && samples_per_condition < 2)
    out.push_back("samples_per_condition must be >= 2 for best/worst labels");
  if ((algorithm == Algorithm::Dpo || algorithm == Algorithm::Ipo) && samples_per_condition < 2)
    out.push_back("samples_per_condition must be >= 2 for pairwise losses");
  optimizer.collect_violations(out);
  if (ref_update_interval && *ref_update_interval == 0)
    out.push_back("ref_update_interval must be >= 1 or \"never\"");
  if (m_step_steps == 0) out.push_back("m_step_steps must be >= 1");
  if (iterations == 0) out.push_back("iterations must be >= 1");
  if (!(gradient_clip >= 0.0)) out.push_back("gradient_clip must be >= 0 (0 disables clipping)");
  if (eval_interval == 0) out.push_back("eval_interval must be >= 1");
  if (!(mixture.bc >= 0.0) || !(mixture.accept >= 0.0) || !(mixture.reject >= 0.0))
    out.push_back("mixture weights must be >= 0");
  return out;
}

void TrainerConfig::validate() const {
  auto v = violations();
  if (!v.empty()) throw ConfigError(std::move(v));
}

double collapse_norm_threshold(const ParamVector& initial) {
  return 10.0 * std::max(initial.norm(), std::sqrt(static_cast<double>(initial.size())));
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Samples of one condition plus whatever the loss needs precomputed.
template <PolicyFamily P>
struct Prepared {
  using Output = typename P::Output;
  Condition x = 0;
  std::vector<Output> samples;
  std::vector<double> f;
  PreferenceBatch<Output> batch;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (accepted index, rejected index)
};

// i-th best accepted with i-th worst rejected; pairs with equal outputs are dropped.
template <PolicyFamily P>
std::vector<std::pair<std::size_t, std::size_t>> make_pairs(const LabeledSampleSet<typename P::Output>& set) {
  std::vector<std::size_t> acc;
  std::vector<std::size_t> rej;
  for (std::size_t i = 0; i < set.labels.size(); ++i) {
    if (set.labels[i] == Label::Accept) acc.push_back(i);
    if (set.labels[i] == Label::Reject) rej.push_back(i);
  }
  const auto& f = set.f_values;
  std::stable_sort(acc.begin(), acc.end(), [&](std::size_t a, std::size_t b) { return f[a] > f[b]; });
  std::stable_sort(rej.begin(), rej.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < std::min(acc.size(), rej.size()); ++i)
    if (!(set.samples[acc[i]] == set.samples[rej[i]])) out.emplace_back(acc[i], rej[i]);
  return out;
}

template <PolicyFamily P>
Prepared<P> prepare(Condition x, std::vector<typename P::Output> samples, std::vector<double> f,
                    const TrainerConfig& cfg) {
  Prepared<P> p;
  p.x = x;
  if (cfg.algorithm == Algorithm::Pmpo || cfg.algorithm == Algorithm::Dpo || cfg.algorithm == Algorithm::Ipo) {
    auto set = label_samples(x, samples, f, cfg.label_rule);
    if (cfg.algorithm == Algorithm::Pmpo)
      p.batch = set.to_batch();
    else
      p.pairs = make_pairs<P>(set);
  }
  p.samples = std::move(samples);
  p.f = std::move(f);
  return p;
}

struct Aggregate {
  double value = 0.0;
  ParamVector ascent;
  LossComponents components;
};

template <PolicyFamily P>
Aggregate aggregate_loss(const std::vector<Prepared<P>>& batches, const P& theta, const P& ref,
                         const TrainerConfig& cfg, Rng& rng) {
  Aggregate agg;
  agg.ascent = ParamVector(theta.param_count());
  std::size_t used = 0;
  auto add = [&](const LossResult& r) {
    agg.value += r.value;
    agg.ascent += r.ascent();
    agg.components.accept_term += r.components.accept_term;
    agg.components.reject_term += r.components.reject_term;
    agg.components.kl_term += r.components.kl_term;
    ++used;
  };
  for (const auto& b : batches) {
    switch (cfg.algorithm) {
      case Algorithm::Pmpo:
        add(pmpo_loss(b.batch, theta, ref, cfg.loss, rng));
        break;
      case Algorithm::Mpo:
        add(mpo_weighted_ml_loss<P>(b.x, b.samples, b.f, theta, cfg.loss.eta));
        break;
      case Algorithm::Bc:
        add(bc_loss<P>(b.x, b.samples, theta));
        break;
      case Algorithm::Dpo:
      case Algorithm::Ipo:
        for (const auto& [a, r] : b.pairs) {
          add(cfg.algorithm == Algorithm::Dpo
                  ? dpo_loss(b.x, b.samples[a], b.samples[r], theta, ref, cfg.loss.dpo_beta)
                  : ipo_loss(b.x, b.samples[a], b.samples[r], theta, ref, cfg.loss.ipo_beta));
        }
        break;
      case Algorithm::Mixture:
        throw ConfigError({"algorithm \"mixture\" is only available in the offline regime"});
    }
  }
  if (used > 0) {
    const double inv = 1.0 / static_cast<double>(used);
    agg.value *= inv;
    agg.ascent *= inv;
    agg.components.accept_term *= inv;
    agg.components.reject_term *= inv;
    agg.components.kl_term *= inv;
  }
  return agg;
}

template <PolicyFamily P, class Env>
RunResult run_online(P theta, Env& env, const TrainerConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  RunResult out;
  const double norm_limit = collapse_norm_threshold(theta.params());
  P ref = theta;
  OptimizerState opt;
  out.initial_metric = env.metric(theta);
  double metric = out.initial_metric;

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const auto start = Clock::now();
    if (cfg.ref_update_interval && it % *cfg.ref_update_interval == 0) ref = theta;
    env.refresh(ref);

    IterationRecord rec;
    rec.iteration = it;
    const auto conditions = env.conditions(rng);

    double kl = 0.0;
    for (Condition x : conditions) kl += estimate_kl(ref, theta, x, cfg.loss.kl_mode, rng).value;
    rec.kl_estimate = kl / static_cast<double>(conditions.size());

    std::vector<Prepared<P>> batches;
    batches.reserve(conditions.size());
    double score = 0.0;
    std::size_t scored = 0;
    for (Condition x : conditions) {
      auto samples = sample(ref, x, rng, cfg.samples_per_condition);
      std::vector<double> f;
      f.reserve(samples.size());
      for (const auto& y : samples) f.push_back(env.evaluate(x, y));
      for (double v : f) score += v;
      scored += f.size();
      batches.push_back(prepare<P>(x, std::move(samples), std::move(f), cfg));
    }
    rec.score = score / static_cast<double>(scored);

    try {
      for (std::size_t step = 0; step < cfg.m_step_steps; ++step) {
        const Aggregate agg = aggregate_loss(batches, theta, ref, cfg, rng);
        if (step == 0) {
          rec.loss = agg.value;
          rec.components = agg.components;
        }
        if (!std::isfinite(agg.value)) throw NonFiniteError("loss value is non-finite");
        const ParamVector grad = clip_global_norm(agg.ascent, cfg.gradient_clip);
        theta = theta.with_params(optimizer_step(theta.params(), grad, opt, cfg.optimizer));
      }
      if ((it + 1) % cfg.eval_interval == 0 || it + 1 == cfg.iterations) {
        metric = env.metric(theta);
        if (!std::isfinite(metric)) throw NonFiniteError("metric is non-finite");
      }
    } catch (const NonFiniteError& e) {
      out.collapsed = true;
      out.halted = true;
      out.collapse_reason = std::string("non-finite guard at iteration ") + std::to_string(it) + ": " + e.what();
    }

    rec.metric = metric;
    rec.param_norm = theta.params().norm();
    if (!out.collapsed && rec.param_norm > norm_limit) {
      out.collapsed = true;
      out.collapse_reason = "parameter norm " + format_double(rec.param_norm) + " exceeded " +
                            format_double(norm_limit) + " at iteration " + std::to_string(it);
    }
    rec.wall_ms = elapsed_ms(start);
    out.records.push_back(rec);
    if (out.halted) break;
  }
  out.final_metric = metric;
  out.final_params = theta.params();
  return out;
}

struct BanditEnv {
  const BenchmarkFunction& fn;
  void refresh(const GaussianPolicy&) {}
  std::vector<Condition> conditions(Rng&) { return {0}; }
  double evaluate(Condition, const std::vector<double>& y) { return fn.evaluate(y); }
  double metric(const GaussianPolicy& theta) { return fn.value(theta.mean()); }
};

struct MdpEnv {
  const GridworldMdp& mdp;
  const MdpOptions& options;
  std::size_t batch_conditions;
  ActionValueTable q;

  void refresh(const CategoricalPolicy& ref) { q = policy_q_critic(mdp, ref, options.critic_tol, q); }
  std::vector<Condition> conditions(Rng& rng) {
    std::vector<Condition> states = mdp.start_states();
    if (batch_conditions == 0 || batch_conditions >= states.size()) return states;
    for (std::size_t i = 0; i < batch_conditions; ++i) std::swap(states[i], states[i + rng.index(states.size() - i)]);
    states.resize(batch_conditions);
    std::sort(states.begin(), states.end());
    return states;
  }
  double evaluate(Condition s, std::size_t a) { return q[s * kActionCount + a]; }
  double metric(const CategoricalPolicy& theta) {
    return mean_greedy_return(mdp, greedy_actions(theta), options.max_steps);
  }
};

struct SequenceEnv {
  const SequenceTask& task;
  void refresh(const AutoregressivePolicy&) {}
  std::vector<Condition> conditions(Rng&) { return {0}; }
  double evaluate(Condition, const TokenSequence& y) { return task.reward(y); }
  double metric(const AutoregressivePolicy& theta) { return expected_sequence_reward(task, theta); }
};

}  // namespace

RunResult train_bandit(const BenchmarkFunction& fn, const TrainerConfig& config, const BanditOptions& options) {
  if (fn.dimension == 0) throw InputError("train_bandit: dimension must be positive");
  const Domain dom = fn.domain();
  std::vector<double> mean = options.init_mean.value_or(std::vector<double>(fn.dimension, dom.center()));
  if (mean.size() != fn.dimension) throw InputError("train_bandit: init_mean dimension mismatch");
  const double std0 = options.init_std.value_or(dom.half_width());
  if (!(std0 > 0.0)) throw InputError("train_bandit: init_std must be positive");
  GaussianPolicy theta(std::move(mean), std::vector<double>(fn.dimension, std::log(std0)));
  BanditEnv env{fn};
  return run_online(std::move(theta), env, config);
}

RunResult train_mdp(const GridworldMdp& mdp, const TrainerConfig& config, const MdpOptions& options) {
  MdpEnv env{mdp, options, config.batch_conditions, {}};
  return run_online(CategoricalPolicy::uniform(mdp.state_count(), kActionCount), env, config);
}

RunResult train_sequence(const SequenceTask& task, const TrainerConfig& config, const SequenceOptions& options) {
  task.validate();
  if (std::holds_alternative<ClosedForm>(config.loss.kl_mode))
    throw ConfigError({"kl_mode must be \"autoregressive_per_token\" or \"monte_carlo\" for sequence policies"});
  SequenceEnv env{task};
  return run_online(AutoregressivePolicy::uniform(1, task.vocab_size, options.context_order, task.length), env,
                    config);
}

// --- offline ---------------------------------------------------------------

namespace {

// (state x action) counts normalized by their total.
struct CountTable {
  std::vector<double> weights;  // row-major, sums to 1 (or all zero)
  std::size_t total = 0;
};

CountTable count_table(std::size_t states, const std::vector<std::pair<Condition, std::size_t>>& items) {
  CountTable t;
  t.weights.assign(states * kActionCount, 0.0);
  for (const auto& [s, a] : items) t.weights[s * kActionCount + a] += 1.0;
  t.total = items.size();
  if (t.total > 0)
    for (double& w : t.weights) w /= static_cast<double>(t.total);
  return t;
}

// sum_{s,a} w(s,a) log pi(a|s), with scale * gradient accumulated into grad.
double weighted_log_lik(const CategoricalPolicy& theta, const CountTable& t, double scale, ParamVector& grad) {
  double value = 0.0;
  for (std::size_t s = 0; s < theta.conditions(); ++s) {
    const std::span<const double> row(t.weights.data() + s * kActionCount, kActionCount);
    double mass = 0.0;
    for (double w : row) mass += w;
    if (mass == 0.0) continue;
    const auto lp = theta.log_probs(s);
    for (std::size_t a = 0; a < kActionCount; ++a) value += row[a] * lp[a];
    if (scale != 0.0) theta.accumulate_weighted_grad(s, row, scale, grad);
  }
  return value;
}

}  // namespace

RunResult train_offline(const OfflineDataset& dataset, const GridworldMdp& mdp, const TrainerConfig& cfg,
                        const OfflineOptions& options) {
  cfg.validate();
  if (cfg.algorithm != Algorithm::Mixture && cfg.algorithm != Algorithm::Pmpo && cfg.algorithm != Algorithm::Bc)
    throw ConfigError({"offline regime supports algorithm mixture, pmpo or bc"});
  if (dataset.transition_count() == 0) throw InputError("train_offline: dataset has no transitions");
  if (options.eval_episodes == 0) throw ConfigError({"eval_episodes must be >= 1"});
  const std::size_t states = mdp.state_count();

  // Weights of the three log-likelihood terms and of the KL.
  double w_bc = 0.0, w_acc = 0.0, w_rej = 0.0;
  switch (cfg.algorithm) {
    case Algorithm::Mixture:
      w_bc = cfg.mixture.bc;
      w_acc = cfg.mixture.accept;
      w_rej = cfg.mixture.reject;
      break;
    case Algorithm::Pmpo:
      w_acc = cfg.loss.alpha;
      w_rej = 1.0 - cfg.loss.alpha;
      break;
    default:
      w_bc = 1.0;
      break;
  }
  const double w_kl = cfg.loss.beta;

  std::vector<std::pair<Condition, std::size_t>> all_items, acc_items, rej_items;
  for (const auto& ep : dataset.episodes)
    for (const auto& step : ep) {
      if (step.state >= states || step.action >= kActionCount)
        throw InputError("train_offline: transition outside the MDP's state/action space");
      all_items.emplace_back(step.state, step.action);
    }
  const StateValueTable v = monte_carlo_values(dataset, states);
  const auto labeled = dataset.transitions(0, options.labeled_episodes);
  for (const auto& set : label_advantage(labeled, v))
    for (std::size_t i = 0; i < set.samples.size(); ++i)
      (set.labels[i] == Label::Accept ? acc_items : rej_items).emplace_back(set.condition, set.samples[i]);

  std::vector<std::string> problems;
  if (w_acc > 0.0 && acc_items.empty()) problems.push_back("accept term is weighted but no transition was accepted");
  if (w_rej > 0.0 && rej_items.empty()) problems.push_back("reject term is weighted but no transition was rejected");
  if (!problems.empty()) throw ConfigError(std::move(problems));

  const CountTable all = count_table(states, all_items);
  const CountTable acc = count_table(states, acc_items);
  const CountTable rej = count_table(states, rej_items);

  // Reference = empirical behaviour policy; only its entropy-like constant
  // enters the KL value, the gradient is that of -BC.
  double behaviour_term = 0.0;
  for (std::size_t s = 0; s < states; ++s) {
    double mass = 0.0;
    for (std::size_t a = 0; a < kActionCount; ++a) mass += all.weights[s * kActionCount + a];
    for (std::size_t a = 0; a < kActionCount; ++a) {
      const double w = all.weights[s * kActionCount + a];
      if (w > 0.0) behaviour_term += w * std::log(w / mass);
    }
  }

  CategoricalPolicy theta = CategoricalPolicy::uniform(states, kActionCount);
  const double norm_limit = collapse_norm_threshold(theta.params());
  OptimizerState opt;
  RunResult out;
  // Every evaluation replays the same episode seeds, so the final metric does
  // not depend on how often intermediate evaluations ran.
  auto evaluate = [&](const CategoricalPolicy& p, std::size_t episodes) {
    Rng rng(cfg.seed);
    return mean_sampled_return(mdp, p, episodes, options.max_steps, rng);
  };
  out.initial_metric = evaluate(theta, options.eval_episodes);
  double metric = out.initial_metric;

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const auto start = Clock::now();
    IterationRecord rec;
    rec.iteration = it;
    try {
      ParamVector grad(theta.param_count());
      const double bc = weighted_log_lik(theta, all, w_bc + w_kl, grad);
      const double a_term = acc.total ? weighted_log_lik(theta, acc, w_acc, grad) : 0.0;
      const double r_term = rej.total ? weighted_log_lik(theta, rej, -w_rej, grad) : 0.0;
      const double kl = behaviour_term - bc;
      rec.score = bc;
      rec.kl_estimate = kl;
      rec.components = {a_term, r_term, kl};
      rec.loss = w_bc * bc + w_acc * a_term - w_rej * r_term - w_kl * kl;
      if (!std::isfinite(rec.loss)) throw NonFiniteError("loss value is non-finite");
      theta = theta.with_params(
          optimizer_step(theta.params(), clip_global_norm(std::move(grad), cfg.gradient_clip), opt, cfg.optimizer));
      if ((it + 1) % cfg.eval_interval == 0 && it + 1 != cfg.iterations)
        metric = evaluate(theta, options.eval_episodes);
    } catch (const NonFiniteError& e) {
      out.collapsed = true;
      out.halted = true;
      out.collapse_reason = std::string("non-finite guard at iteration ") + std::to_string(it) + ": " + e.what();
    }
    if (it + 1 == cfg.iterations && !out.halted) metric = evaluate(theta, options.eval_episodes);
    rec.metric = metric;
    rec.param_norm = theta.params().norm();
    if (!out.collapsed && rec.param_norm > norm_limit) {
      out.collapsed = true;
      out.collapse_reason = "parameter norm " + format_double(rec.param_norm) + " exceeded " +
                            format_double(norm_limit) + " at iteration " + std::to_string(it);
    }
    rec.wall_ms = elapsed_ms(start);
    out.records.push_back(rec);
    if (out.halted) break;
  }
  out.final_metric = metric;
  out.final_params = theta.params();
  return out;
}

}  // namespace pmpo
