#include "pmpo/experiment.hpp"

#include "pmpo/errors.hpp"
#include "pmpo/numeric.hpp"
#include "pmpo/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace pmpo {

using nlohmann::json;

Regime parse_regime(std::string_view name) {
  if (name == "bandit") return Regime::Bandit;
  if (name == "mdp") return Regime::Mdp;
  if (name == "sequence") return Regime::Sequence;
  if (name == "offline") return Regime::Offline;
  if (name == "em-exact") return Regime::EmExact;
  throw InputError("unknown regime \"" + std::string(name) + "\"");
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Bandit: return "bandit";
    case Regime::Mdp: return "mdp";
    case Regime::Sequence: return "sequence";
    case Regime::Offline: return "offline";
    case Regime::EmExact: return "em-exact";
  }
  return "unknown";
}

namespace {

bool is_count(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// Typed access to one JSON object that records violations instead of
// throwing, and reports keys nobody asked for.
class Section {
 public:
  Section(const json* obj, std::string path, std::vector<std::string>& violations)
      : obj_(obj), path_(std::move(path)), violations_(violations) {
    if (obj_ && !obj_->is_object()) {
      violations_.push_back(path_ + " must be an object");
      obj_ = nullptr;
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_ && obj_->contains(key);
  }

  const json* raw(const std::string& key) { return has(key) ? &(*obj_)[key] : nullptr; }

  double real(const std::string& key, double fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_number()) {
      violations_.push_back(name(key) + " must be a number");
      return fallback;
    }
    return v->get<double>();
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    if (!is_count(*v)) {
      violations_.push_back(name(key) + " must be a nonnegative integer");
      return fallback;
    }
    return v->get<std::size_t>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_string()) {
      violations_.push_back(name(key) + " must be a string");
      return fallback;
    }
    return v->get<std::string>();
  }

  bool flag(const std::string& key, bool fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_boolean()) {
      violations_.push_back(name(key) + " must be true or false");
      return fallback;
    }
    return v->get<bool>();
  }

  const json* object(const std::string& key) {
    const json* v = raw(key);
    if (v && !v->is_object()) {
      violations_.push_back(name(key) + " must be an object");
      return nullptr;
    }
    return v;
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& path() const { return path_; }
  void violation(const std::string& message) { violations_.push_back(message); }

  void finish() {
    if (!obj_) return;
    for (const auto& [key, value] : obj_->items())
      if (!seen_.count(key)) violations_.push_back("unknown field " + name(key));
  }

 private:
  const json* obj_;
  std::string path_;
  std::vector<std::string>& violations_;
  std::set<std::string> seen_;
};

template <class F>
void guarded(std::vector<std::string>& violations, const std::string& where, F&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    violations.push_back(where + ": " + e.what());
  }
}

void parse_grid(const json* doc, GridworldSpec& spec, std::vector<std::string>& v, const std::string& where) {
  if (!doc) return;
  guarded(v, where, [&] {
    spec = GridworldSpec::from_json(*doc);
    GridworldMdp check(spec);
  });
}

KlMode parse_kl_mode(const json& doc, std::vector<std::string>& v) {
  const std::string where = "trainer.loss.kl_mode";
  std::string kind;
  std::size_t samples = MonteCarlo{}.sample_count;
  if (doc.is_string()) {
    kind = doc.get<std::string>();
  } else if (doc.is_object()) {
    Section s(&doc, where, v);
    kind = s.text("kind", "");
    samples = s.count("sample_count", samples);
    s.finish();
  } else {
    v.push_back(where + " must be a string or an object");
    return ClosedForm{};
  }
  if (kind == "closed_form") return ClosedForm{};
  if (kind == "autoregressive_per_token") return AutoregressivePerToken{};
  if (kind == "monte_carlo") return MonteCarlo{samples};
  v.push_back(where + " must be closed_form, autoregressive_per_token or monte_carlo");
  return ClosedForm{};
}

// Returns nullopt for the advantage rule.
std::optional<LabelRule> parse_label_rule(const json& doc, std::size_t samples, std::vector<std::string>& v,
                                          bool& is_advantage) {
  const std::string where = "trainer.label_rule";
  std::string kind;
  std::size_t k = std::max<std::size_t>(1, samples / 2);
  std::string baseline = "mean";
  if (doc.is_string()) {
    kind = doc.get<std::string>();
  } else if (doc.is_object()) {
    Section s(&doc, where, v);
    kind = s.text("kind", "");
    k = s.count("k", k);
    baseline = s.text("baseline", baseline);
    s.finish();
  } else {
    v.push_back(where + " must be a string or an object");
    return std::nullopt;
  }
  is_advantage = kind == "advantage";
  if (kind == "top_k") return TopK{k};
  if (kind == "best_worst") return BestWorstOnly{};
  if (kind == "advantage") return std::nullopt;
  if (kind == "baseline") {
    if (baseline == "mean") return Baseline{BaselineKind::Mean};
    if (baseline == "median") return Baseline{BaselineKind::Median};
    v.push_back(where + ".baseline must be mean or median");
    return std::nullopt;
  }
  v.push_back(where + " must be top_k, baseline, best_worst or advantage");
  return std::nullopt;
}

void apply_regime_defaults(Regime regime, TrainerConfig& t) {
  switch (regime) {
    case Regime::Bandit:
      t.iterations = 2000;
      t.optimizer.learning_rate = 0.05;
      break;
    case Regime::Mdp:
      t.iterations = 500;
      t.optimizer.learning_rate = 0.05;
      break;
    case Regime::Sequence:
      t.iterations = 1000;
      t.optimizer.learning_rate = 0.01;
      t.loss.kl_mode = AutoregressivePerToken{};
      break;
    case Regime::Offline:
      t.iterations = 300;
      t.optimizer.learning_rate = 0.05;
      t.algorithm = Algorithm::Mixture;
      t.ref_update_interval = std::nullopt;
      t.eval_interval = 50;
      break;
    case Regime::EmExact:
      break;
  }
}

void parse_trainer(const json* doc, Regime regime, TrainerConfig& t, std::vector<std::string>& v) {
  apply_regime_defaults(regime, t);
  Section s(doc, "trainer", v);
  if (const json* a = s.raw("algorithm")) {
    if (a->is_string())
      guarded(v, "trainer.algorithm", [&] { t.algorithm = parse_algorithm(a->get<std::string>()); });
    else
      v.push_back("trainer.algorithm must be a string");
  }
  if (const json* loss = s.object("loss")) {
    Section l(loss, "trainer.loss", v);
    t.loss.alpha = l.real("alpha", t.loss.alpha);
    t.loss.beta = l.real("beta", t.loss.beta);
    t.loss.eta = l.real("eta", t.loss.eta);
    t.loss.dpo_beta = l.real("dpo_beta", t.loss.dpo_beta);
    t.loss.ipo_beta = l.real("ipo_beta", t.loss.ipo_beta);
    if (const json* kl = l.raw("kl_mode")) t.loss.kl_mode = parse_kl_mode(*kl, v);
    l.finish();
  }
  t.samples_per_condition = s.count("samples_per_condition", t.samples_per_condition);
  const bool pairwise = t.algorithm == Algorithm::Dpo || t.algorithm == Algorithm::Ipo;
  t.label_rule = pairwise ? LabelRule{BestWorstOnly{}} : LabelRule{TopK{std::max<std::size_t>(1, t.samples_per_condition / 2)}};
  bool advantage = regime == Regime::Offline;
  if (const json* rule = s.raw("label_rule")) {
    advantage = false;
    if (auto parsed = parse_label_rule(*rule, t.samples_per_condition, v, advantage)) t.label_rule = *parsed;
  }
  if (regime == Regime::Offline && !advantage)
    v.push_back("trainer.label_rule: the offline regime labels by advantage sign only");
  if (regime != Regime::Offline && advantage)
    v.push_back("trainer.label_rule: the advantage rule is only available in the offline regime");

  if (const json* opt = s.object("optimizer")) {
    Section o(opt, "trainer.optimizer", v);
    if (const json* kind = o.raw("kind")) {
      if (kind->is_string())
        guarded(v, "trainer.optimizer.kind", [&] { t.optimizer.kind = parse_optimizer_kind(kind->get<std::string>()); });
      else
        v.push_back("trainer.optimizer.kind must be a string");
    }
    t.optimizer.learning_rate = o.real("learning_rate", t.optimizer.learning_rate);
    t.optimizer.adam_beta1 = o.real("adam_beta1", t.optimizer.adam_beta1);
    t.optimizer.adam_beta2 = o.real("adam_beta2", t.optimizer.adam_beta2);
    t.optimizer.adam_epsilon = o.real("adam_epsilon", t.optimizer.adam_epsilon);
    o.finish();
  }
  if (const json* n = s.raw("ref_update_interval")) {
    if (n->is_string() && n->get<std::string>() == "never")
      t.ref_update_interval = std::nullopt;
    else if (is_count(*n))
      t.ref_update_interval = n->get<std::size_t>();
    else
      v.push_back("trainer.ref_update_interval must be a positive integer or \"never\"");
  }
  t.m_step_steps = s.count("m_step_steps", t.m_step_steps);
  t.iterations = s.count("iterations", t.iterations);
  t.batch_conditions = s.count("batch_conditions", t.batch_conditions);
  t.gradient_clip = s.real("gradient_clip", t.gradient_clip);
  t.eval_interval = s.count("eval_interval", t.eval_interval);
  if (const json* mix = s.object("mixture")) {
    Section m(mix, "trainer.mixture", v);
    t.mixture.bc = m.real("bc", t.mixture.bc);
    t.mixture.accept = m.real("accept", t.mixture.accept);
    t.mixture.reject = m.real("reject", t.mixture.reject);
    m.finish();
  }
  s.finish();

  for (auto& msg : t.violations()) v.push_back("trainer: " + msg);

  const bool ar = std::holds_alternative<AutoregressivePerToken>(t.loss.kl_mode);
  const bool closed = std::holds_alternative<ClosedForm>(t.loss.kl_mode);
  if (regime == Regime::Sequence && closed)
    v.push_back("trainer.loss.kl_mode: sequence policies need autoregressive_per_token or monte_carlo");
  if ((regime == Regime::Bandit || regime == Regime::Mdp) && ar)
    v.push_back("trainer.loss.kl_mode: autoregressive_per_token needs the sequence regime");
  if (regime == Regime::Offline) {
    if (t.algorithm != Algorithm::Mixture && t.algorithm != Algorithm::Pmpo && t.algorithm != Algorithm::Bc)
      v.push_back("trainer.algorithm: the offline regime supports mixture, pmpo or bc");
  } else if (t.algorithm == Algorithm::Mixture) {
    v.push_back("trainer.algorithm: mixture is only available in the offline regime");
  }
}

void parse_environment(const json* doc, ExperimentConfig& c, std::vector<std::string>& v) {
  Section s(doc, "environment", v);
  switch (c.regime) {
    case Regime::Bandit: {
      guarded(v, "environment.function", [&] { c.bandit.kind = parse_benchmark_kind(s.text("function", "sphere")); });
      c.bandit.dimension = s.count("dimension", 2);
      if (c.bandit.dimension == 0) v.push_back("environment.dimension must be >= 1");
      if (c.bandit.kind == BenchmarkKind::Rosenbrock && c.bandit.dimension < 2)
        v.push_back("environment.dimension must be >= 2 for rosenbrock");
      if (const json* m = s.raw("init_mean")) {
        std::vector<double> mean;
        if (m->is_array()) {
          for (const auto& x : *m) {
            if (!x.is_number()) {
              v.push_back("environment.init_mean entries must be numbers");
              break;
            }
            mean.push_back(x.get<double>());
          }
        } else {
          v.push_back("environment.init_mean must be an array");
        }
        if (mean.size() != c.bandit.dimension) v.push_back("environment.init_mean must have `dimension` entries");
        c.bandit_options.init_mean = mean;
      }
      if (s.has("init_std")) {
        c.bandit_options.init_std = s.real("init_std", 1.0);
        if (!(*c.bandit_options.init_std > 0.0)) v.push_back("environment.init_std must be > 0");
      }
      break;
    }
    case Regime::Mdp:
      parse_grid(s.object("grid"), c.grid, v, "environment.grid");
      c.mdp_options.max_steps = s.count("max_steps", c.mdp_options.max_steps);
      c.mdp_options.critic_tol = s.real("critic_tol", c.mdp_options.critic_tol);
      if (c.mdp_options.max_steps == 0) v.push_back("environment.max_steps must be >= 1");
      if (!(c.mdp_options.critic_tol > 0.0)) v.push_back("environment.critic_tol must be > 0");
      break;
    case Regime::Sequence:
      c.sequence.vocab_size = s.count("vocab_size", c.sequence.vocab_size);
      c.sequence.length = s.count("length", c.sequence.length);
      c.sequence.target_token = s.count("target_token", c.sequence.target_token);
      c.sequence_options.context_order = s.count("context_order", c.sequence_options.context_order);
      guarded(v, "environment", [&] {
        c.sequence.validate();
        AutoregressivePolicy::uniform(1, c.sequence.vocab_size, c.sequence_options.context_order, c.sequence.length);
      });
      break;
    case Regime::Offline: {
      auto& o = c.offline;
      parse_grid(s.object("grid"), o.grid, v, "environment.grid");
      o.corruption_fraction = s.real("corruption_fraction", o.corruption_fraction);
      o.episodes = s.count("episodes", o.episodes);
      o.labeled_episodes = s.count("labeled_episodes", o.labeled_episodes);
      o.max_steps = s.count("max_steps", o.max_steps);
      o.eval_episodes = s.count("eval_episodes", o.eval_episodes);
      if (!(o.corruption_fraction >= 0.0 && o.corruption_fraction <= 1.0))
        v.push_back("environment.corruption_fraction must lie in [0, 1]");
      if (o.episodes == 0) v.push_back("environment.episodes must be >= 1");
      if (o.labeled_episodes > o.episodes) v.push_back("environment.labeled_episodes must be <= episodes");
      if (o.max_steps == 0) v.push_back("environment.max_steps must be >= 1");
      if (o.eval_episodes == 0) v.push_back("environment.eval_episodes must be >= 1");
      break;
    }
    case Regime::EmExact: {
      auto& e = c.em;
      e.support_size = s.count("support_size", e.support_size);
      e.tau = s.real("tau", e.tau);
      e.max_iters = s.count("max_iters", e.max_iters);
      e.f_low = s.real("f_low", e.f_low);
      e.f_high = s.real("f_high", e.f_high);
      if (e.support_size == 0 || e.support_size > kMaxSupport)
        v.push_back("environment.support_size must lie in [1, 1000000]");
      if (!(e.tau > 0.0)) v.push_back("environment.tau must be > 0");
      if (e.max_iters == 0) v.push_back("environment.max_iters must be >= 1");
      if (!(e.f_low <= e.f_high) || !std::isfinite(e.f_low) || !std::isfinite(e.f_high))
        v.push_back("environment.f_low must be <= f_high (both finite)");
      break;
    }
  }
  s.finish();
}

}  // namespace

ParseResult parse_experiment(const json& doc) {
  ParseResult out;
  auto& v = out.violations;
  if (!doc.is_object()) {
    v.push_back("config must be a JSON object");
    return out;
  }
  ExperimentConfig c;
  c.source = doc;
  Section top(&doc, "", v);
  c.name = top.text("name", "experiment");
  bool regime_ok = false;
  if (const json* r = top.raw("regime")) {
    if (r->is_string()) {
      try {
        c.regime = parse_regime(r->get<std::string>());
        regime_ok = true;
      } catch (const InputError&) {
        v.push_back("regime must be one of bandit, mdp, sequence, offline, em-exact (got \"" +
                    r->get<std::string>() + "\")");
      }
    } else {
      v.push_back("regime must be a string");
    }
  } else {
    v.push_back("regime is required");
  }

  const json* env = top.object("environment");
  const json* trainer = top.object("trainer");
  if (regime_ok) {
    c.environment_echo = env ? *env : json::object();
    parse_environment(env, c, v);
    if (c.regime == Regime::EmExact) {
      if (trainer) v.push_back("trainer is not used by the em-exact regime");
    } else {
      parse_trainer(trainer, c.regime, c.trainer, v);
    }
  }

  if (const json* seeds = top.raw("seeds")) {
    if (!seeds->is_array() || seeds->empty()) {
      v.push_back("seeds must be a nonempty array of nonnegative integers");
    } else {
      for (const auto& s : *seeds) {
        if (!is_count(s)) {
          v.push_back("seeds must be a nonempty array of nonnegative integers");
          break;
        }
        c.seeds.push_back(s.get<std::uint64_t>());
      }
    }
  } else {
    v.push_back("seeds is required");
  }
  c.output_dir = top.text("output_dir", "runs/" + c.name);
  if (const json* plot = top.object("plot")) {
    Section p(plot, "plot", v);
    c.log_y = p.flag("log_y", c.regime == Regime::Bandit);
    p.finish();
  } else {
    c.log_y = c.regime == Regime::Bandit;
  }
  top.finish();
  if (v.empty()) out.config = std::move(c);
  return out;
}

ParseResult parse_experiment_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return {std::nullopt, {"cannot read config file " + path.string()}};
  try {
    return parse_experiment(json::parse(in));
  } catch (const json::parse_error& e) {
    return {std::nullopt, {"config file " + path.string() + " is not valid JSON: " + e.what()}};
  }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  auto number = [&](const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      throw InputError("invalid seed list \"" + text + "\"");
    return static_cast<std::uint64_t>(std::stoull(s));
  };
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(number(item));
    } else {
      const auto lo = number(item.substr(0, dash));
      const auto hi = number(item.substr(dash + 1));
      if (hi < lo) throw InputError("invalid seed range \"" + item + "\"");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    }
  }
  if (out.empty()) throw InputError("seed list is empty");
  return out;
}

std::string mixture_label(const TrainerConfig& t) {
  if (t.algorithm == Algorithm::Bc) return "BC";
  if (t.algorithm == Algorithm::Pmpo) return "PMPO";
  const bool bc = t.mixture.bc > 0.0, acc = t.mixture.accept > 0.0, rej = t.mixture.reject > 0.0;
  std::string label;
  auto add = [&](const char* part) { label += (label.empty() ? "" : "+") + std::string(part); };
  if (acc) add("Accept");
  if (rej) add("Reject");
  if (bc) add("BC");
  return label.empty() ? "none" : label;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct MetricInfo {
  std::string name;
  bool lower_is_better;
};

MetricInfo metric_info(Regime regime) {
  switch (regime) {
    case Regime::Bandit: return {"function value at the policy mean", true};
    case Regime::Mdp: return {"mean greedy return", false};
    case Regime::Sequence: return {"expected reward", false};
    case Regime::Offline: return {"mean sampled return", false};
    case Regime::EmExact: return {"expected value E[f]", false};
  }
  return {"metric", false};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

SeedSummary summarize(std::uint64_t seed, const RunResult& r, double wall_ms) {
  SeedSummary s;
  s.seed = seed;
  s.initial_metric = r.initial_metric;
  s.final_metric = r.final_metric;
  s.collapsed = r.collapsed;
  s.halted = r.halted;
  s.collapse_reason = r.collapse_reason;
  s.iterations_run = r.records.size();
  s.wall_ms = wall_ms;
  for (const auto& rec : r.records) s.metric_curve.push_back(rec.metric);
  return s;
}

SeedSummary run_seed(const ExperimentConfig& c, std::uint64_t seed, std::string& csv) {
  const auto start = std::chrono::steady_clock::now();
  auto ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };
  std::ostringstream out;
  TrainerConfig t = c.trainer;
  t.seed = seed;
  RunResult r;
  switch (c.regime) {
    case Regime::Bandit:
      r = train_bandit(c.bandit, t, c.bandit_options);
      break;
    case Regime::Mdp:
      r = train_mdp(GridworldMdp(c.grid), t, c.mdp_options);
      break;
    case Regime::Sequence:
      r = train_sequence(c.sequence, t, c.sequence_options);
      break;
    case Regime::Offline: {
      const GridworldMdp mdp(c.offline.grid);
      const auto vi = value_iteration(mdp);
      const auto expert = deterministic_policy(greedy_actions_from_q(vi.q, mdp.state_count()));
      Rng data_rng(splitmix64(seed));
      const auto data = generate_offline_dataset(mdp, expert, c.offline.corruption_fraction, c.offline.episodes,
                                                 data_rng, c.offline.max_steps);
      OfflineOptions o;
      o.labeled_episodes = c.offline.labeled_episodes;
      o.eval_episodes = c.offline.eval_episodes;
      o.max_steps = c.offline.max_steps;
      r = train_offline(data, mdp, t, o);
      break;
    }
    case Regime::EmExact: {
      Rng rng(seed);
      std::vector<double> f(c.em.support_size), w(c.em.support_size);
      for (double& x : f) x = c.em.f_low + (c.em.f_high - c.em.f_low) * rng.uniform();
      for (double& x : w) x = rng.uniform() + 1e-12;
      EmOptions opts;
      opts.max_iters = c.em.max_iters;
      opts.keep_distributions = false;
      const auto traj = run_em(DiscreteDistribution::normalized(w), DiscreteFunction(f), c.em.tau, opts);
      write_em_csv(out, traj);
      csv = out.str();
      SeedSummary s;
      s.seed = seed;
      s.initial_metric = traj.values.front();
      s.final_metric = traj.values.back();
      s.iterations_run = traj.steps();
      s.metric_curve = traj.values;
      for (std::size_t k = 1; k < traj.values.size(); ++k)
        if (traj.values[k] < traj.values[k - 1] - 1e-12) s.monotone = false;
      s.wall_ms = ms();
      return s;
    }
  }
  write_run_csv(out, r.records);
  csv = out.str();
  return summarize(seed, r, ms());
}

json quartile_json(const std::vector<double>& values) {
  const auto q = quartiles(values);
  return {{"median", q.median}, {"q25", q.q25}, {"q75", q.q75},
          {"min", *std::min_element(values.begin(), values.end())},
          {"max", *std::max_element(values.begin(), values.end())}};
}

// Per-iteration median and quartiles over seeds; shorter (halted) curves
// hold their last value.
void band(const std::vector<SeedSummary>& seeds, std::vector<double>& x, std::vector<double>& lo,
          std::vector<double>& mid, std::vector<double>& hi) {
  std::size_t len = 0;
  for (const auto& s : seeds) len = std::max(len, s.metric_curve.size());
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<double> vals;
    for (const auto& s : seeds)
      if (!s.metric_curve.empty()) vals.push_back(s.metric_curve[std::min(i, s.metric_curve.size() - 1)]);
    const auto q = quartiles(vals);
    x.push_back(static_cast<double>(i));
    lo.push_back(q.q25);
    mid.push_back(q.median);
    hi.push_back(q.q75);
  }
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options, std::ostream& log) {
  ExperimentOutcome outcome;
  outcome.output_dir = options.output_dir.value_or(config.output_dir);
  const auto seeds = options.seeds.value_or(config.seeds);
  std::filesystem::create_directories(outcome.output_dir);

  for (std::uint64_t seed : seeds) {
    std::string csv;
    SeedSummary s = run_seed(config, seed, csv);
    write_text(outcome.output_dir / ("seed_" + std::to_string(seed) + ".csv"), csv);
    if (!options.quiet) {
      log << config.name << " seed " << seed << ": final " << format_double(s.final_metric) << " after "
          << s.iterations_run << " iterations";
      if (s.collapsed) log << " [collapsed: " << s.collapse_reason << "]";
      log << '\n';
    }
    outcome.seeds.push_back(std::move(s));
  }

  const MetricInfo info = metric_info(config.regime);
  std::vector<double> finals;
  json per_seed = json::array();
  std::size_t collapsed = 0;
  bool monotone = true;
  for (const auto& s : outcome.seeds) {
    finals.push_back(s.final_metric);
    collapsed += s.collapsed ? 1 : 0;
    monotone = monotone && s.monotone;
    json entry = {{"seed", s.seed},
                  {"initial_metric", s.initial_metric},
                  {"final_metric", s.final_metric},
                  {"iterations_run", s.iterations_run},
                  {"wall_ms", s.wall_ms}};
    if (config.regime == Regime::EmExact) {
      entry["monotone"] = s.monotone;
    } else {
      entry["collapsed"] = s.collapsed;
      entry["halted"] = s.halted;
      if (s.collapsed) entry["collapse_reason"] = s.collapse_reason;
    }
    per_seed.push_back(entry);
  }
  json summary = {{"schema", "pmpo-summary-1"},
                  {"name", config.name},
                  {"regime", std::string(to_string(config.regime))},
                  {"metric", info.name},
                  {"lower_is_better", info.lower_is_better},
                  {"final_metric", quartile_json(finals)},
                  {"seeds", per_seed},
                  {"config", config.source}};
  if (config.regime == Regime::EmExact) {
    summary["monotone"] = monotone;
  } else {
    summary["collapsed"] = collapsed > 0;
    summary["collapsed_seeds"] = collapsed;
    summary["algorithm"] = std::string(to_string(config.trainer.algorithm));
  }
  outcome.summary = summary;

  SvgPlot plot;
  plot.title = config.name;
  plot.y_label = info.name;
  plot.log_y = config.log_y;
  plot.x_label = "iteration";
  for (const auto& s : outcome.seeds) {
    SvgSeries series;
    series.label = "seed " + std::to_string(s.seed);
    for (std::size_t i = 0; i < s.metric_curve.size(); ++i) {
      series.x.push_back(static_cast<double>(i));
      series.y.push_back(s.metric_curve[i]);
    }
    plot.series.push_back(std::move(series));
  }
  write_text(outcome.output_dir / "curve.svg", plot.render());
  write_text(outcome.output_dir / "summary.json", summary.dump(2) + "\n");
  return outcome;
}

json compare_experiments(const std::vector<ExperimentConfig>& configs, const RunOptions& options, std::ostream& log) {
  if (configs.empty()) throw InputError("compare: no configs given");
  const auto& first = configs.front();
  for (const auto& c : configs) {
    if (c.regime != first.regime)
      throw InputError("compare: regime mismatch (" + std::string(to_string(first.regime)) + " vs " +
                       std::string(to_string(c.regime)) + ")");
    if (c.environment_echo != first.environment_echo)
      throw InputError("compare: config \"" + c.name + "\" uses a different environment");
  }
  const std::filesystem::path root = options.output_dir.value_or("runs/compare");
  std::filesystem::create_directories(root);

  const MetricInfo info = metric_info(first.regime);
  SvgPlot plot;
  plot.title = "comparison (" + std::string(to_string(first.regime)) + ")";
  plot.y_label = info.name;
  plot.log_y = first.log_y;
  json rows = json::array();
  std::map<std::string, int> used_names;
  std::map<std::string, double> table_values;

  for (const auto& c : configs) {
    std::string dir = c.name;
    if (used_names[dir]++ > 0) dir += "_" + std::to_string(used_names[c.name]);
    RunOptions sub = options;
    sub.output_dir = (root / dir).string();
    const auto outcome = run_experiment(c, sub, log);

    SvgSeries series;
    series.label = c.name;
    band(outcome.seeds, series.x, series.band_low, series.y, series.band_high);
    plot.series.push_back(std::move(series));

    json row = {{"name", c.name}, {"final_metric", outcome.summary["final_metric"]}};
    if (c.regime != Regime::EmExact) {
      row["algorithm"] = std::string(to_string(c.trainer.algorithm));
      row["alpha"] = c.trainer.loss.alpha;
      row["beta"] = c.trainer.loss.beta;
      row["collapsed_seeds"] = outcome.summary["collapsed_seeds"];
    }
    if (c.regime == Regime::Offline) {
      row["mixture"] = mixture_label(c.trainer);
      table_values[mixture_label(c.trainer)] = outcome.summary["final_metric"]["median"].get<double>();
    }
    rows.push_back(row);
  }

  json result = {{"schema", "pmpo-compare-1"},
                 {"regime", std::string(to_string(first.regime))},
                 {"metric", info.name},
                 {"lower_is_better", info.lower_is_better},
                 {"rows", rows}};
  if (first.regime == Regime::Offline) {
    const std::vector<std::string> order = {"BC", "Accept+BC", "Accept", "Reject+BC", "Accept+Reject+BC"};
    json columns = json::array(), medians = json::array();
    for (const auto& name : order) {
      columns.push_back(name);
      if (auto it = table_values.find(name); it != table_values.end())
        medians.push_back(it->second);
      else
        medians.push_back(nullptr);
    }
    for (const auto& [name, value] : table_values) {
      if (std::find(order.begin(), order.end(), name) != order.end()) continue;
      columns.push_back(name);
      medians.push_back(value);
    }
    result["table"] = {{"columns", columns}, {"median_return", medians}};
  }
  write_text(root / "compare.svg", plot.render());
  write_text(root / "compare.json", result.dump(2) + "\n");
  return result;
}

}  // namespace pmpo
