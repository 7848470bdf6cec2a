// Acceptance checks, one PASS/FAIL line per criterion. Exits nonzero if any
// criterion fails. Every check uses fixed seeds, so the output is stable.

#include "oracles.hpp"

#include "pmpo/em_exact.hpp"
#include "pmpo/experiment.hpp"
#include "pmpo/kl.hpp"
#include "pmpo/objectives.hpp"
#include "pmpo/report.hpp"
#include "pmpo/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace pmpo;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

DiscreteDistribution random_distribution(Rng& rng, std::size_t n, bool sparse) {
  std::vector<double> w(n);
  for (double& x : w) x = (sparse && rng.uniform() < 0.5) ? 0.0 : rng.uniform();
  w[rng.index(n)] += 1e-3;
  return DiscreteDistribution::normalized(w);
}

DiscreteFunction random_f(Rng& rng, std::size_t n) {
  std::vector<double> f(n);
  for (double& x : f) x = -5.0 + 10.0 * rng.uniform();
  return DiscreteFunction(f);
}

// 1. EM monotonicity over random instances.
Verdict em_monotonicity() {
  Rng rng(1);
  const double taus[] = {0.1, 1.0, 10.0};
  std::size_t checked = 0;
  double worst_drop = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 2 + rng.index(63);
    const double tau = taus[inst % 3];
    const auto f = random_f(rng, n);
    const auto traj = run_em(random_distribution(rng, n, false), f, tau, {10'000, 1e-14, false});
    for (std::size_t k = 0; k < traj.steps(); ++k) {
      const double gain = traj.values[k + 1] - traj.values[k];
      worst_drop = std::min(worst_drop, gain);
      if (gain < -1e-12) return {false, "instance " + std::to_string(inst) + " step " + std::to_string(k) + " decreased by " + num(-gain)};
      if (traj.tv_changes[k] > 1e-6 && !(gain > 0.0))
        return {false, "instance " + std::to_string(inst) + " step " + std::to_string(k) + " moved (TV " +
                           num(traj.tv_changes[k]) + ") without improving"};
      ++checked;
    }
  }
  return {true, "100 instances, " + std::to_string(checked) + " steps, worst step change " + num(worst_drop)};
}

// 2. The logsumexp majorant and its attainment.
Verdict majorant() {
  Rng rng(2);
  double min_slack = INFINITY, worst_gap = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 2 + rng.index(63);
    const double tau = std::pow(10.0, -1.0 + 2.0 * rng.uniform());
    const auto prior = random_distribution(rng, n, false);
    const auto f = random_f(rng, n);
    const double bound = logsumexp_bound(prior, f, tau);
    for (int k = 0; k < 1000; ++k) {
      const auto delta = random_distribution(rng, n, k % 2 == 1);
      min_slack = std::min(min_slack, bound - regularized_objective(delta, f, tau, prior));
    }
    worst_gap = std::max(worst_gap, std::abs(regularized_objective(argmax_softmax(prior, f, tau), f, tau, prior) - bound));
  }
  const bool pass = min_slack >= -1e-9 && worst_gap <= 1e-12;
  return {pass, "min slack " + num(min_slack) + ", worst |L(delta*) - bound| " + num(worst_gap)};
}

// 3. Positive and negative exact forms give the same update direction.
Verdict exact_form_equivalence() {
  Rng rng(3);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t k = 2 + rng.index(15);
    auto theta = oracle::random_categorical(rng, 1, k);
    auto ref = oracle::random_categorical(rng, 1, k);
    std::vector<std::size_t> support(k);
    std::vector<double> p(k), q(k);
    for (std::size_t i = 0; i < k; ++i) {
      support[i] = i;
      p[i] = rng.uniform();
      q[i] = 1.0 - p[i];
    }
    const auto pos = positive_form_loss<CategoricalPolicy>(0, support, p, theta, ref);
    const auto neg = negative_form_loss<CategoricalPolicy>(0, support, q, theta, ref);
    const double ratio = neg.normalizer / pos.normalizer;
    for (std::size_t i = 0; i < k; ++i)
      worst = std::max(worst, std::abs(pos.loss.gradient[i] - ratio * neg.loss.gradient[i]));
  }
  // With Z = Z' = 1/2 the two gradients coincide without rescaling.
  CategoricalPolicy theta(1, 2, {0.4, -0.7});
  const auto ref = CategoricalPolicy::uniform(1, 2);
  const std::vector<std::size_t> support = {0, 1};
  const std::vector<double> p = {0.9, 0.1}, q = {0.1, 0.9};
  const auto pos = positive_form_loss<CategoricalPolicy>(0, support, p, theta, ref);
  const auto neg = negative_form_loss<CategoricalPolicy>(0, support, q, theta, ref);
  double literal = 0.0;
  for (std::size_t i = 0; i < 2; ++i) literal = std::max(literal, std::abs(pos.loss.gradient[i] - neg.loss.gradient[i]));
  return {worst <= 1e-10 && literal <= 1e-10,
          "100 instances, max |grad_pos - (Z'/Z) grad_neg| " + num(worst) + ", Z = Z' = 1/2 case " + num(literal)};
}

// 4. Finite-difference gradient oracle for every loss and family.
template <class P>
double fd_error(const P& theta, const std::function<LossResult(const P&)>& loss) {
  const auto analytic = loss(theta).gradient;
  auto f = [&](const ParamVector& p) { return loss(theta.with_params(p)).value; };
  return oracle::relative_error(analytic, oracle::finite_difference(f, theta.params()));
}

template <class P, class Make>
double family_gradients(Rng& rng, Make make, const KlMode& kl_mode) {
  double worst = 0.0;
  for (int inst = 0; inst < 100;) {
    const P theta = make(rng);
    const P ref = oracle::perturbed(theta, rng, 0.4);
    // Distinct outputs, so no preference pair compares an output with itself.
    std::vector<typename P::Output> ys;
    for (int tries = 0; ys.size() < 4 && tries < 1000; ++tries) {
      auto y = ref.sample_one(0, rng);
      if (std::find(ys.begin(), ys.end(), y) == ys.end()) ys.push_back(y);
    }
    if (ys.size() < 4) continue;
    ++inst;
    std::vector<double> f(ys.size());
    for (double& v : f) v = rng.normal();
    LossSpec spec;
    spec.alpha = rng.uniform();
    spec.beta = 2.0 * rng.uniform();
    spec.kl_mode = kl_mode;
    PreferenceBatch<typename P::Output> batch{0, {ys[0], ys[1]}, {ys[2], ys[3]}, std::nullopt};
    const double eta = 0.2 + rng.uniform();
    const double pair_beta = 0.1 + rng.uniform();
    worst = std::max({worst,
                      fd_error<P>(theta, [&](const P& t) { Rng r(inst); return pmpo_loss(batch, t, ref, spec, r); }),
                      fd_error<P>(theta, [&](const P& t) { return mpo_weighted_ml_loss<P>(0, ys, f, t, eta); }),
                      fd_error<P>(theta, [&](const P& t) { return bc_loss<P>(0, ys, t); }),
                      fd_error<P>(theta, [&](const P& t) { return dpo_loss(0, ys[0], ys[1], t, ref, pair_beta); }),
                      fd_error<P>(theta, [&](const P& t) { return ipo_loss(0, ys[0], ys[1], t, ref, pair_beta); })});
  }
  return worst;
}

Verdict gradient_oracle() {
  Rng rng(4);
  const double g = family_gradients<GaussianPolicy>(
      rng, [](Rng& r) { return oracle::random_gaussian(r, 1 + r.index(3)); }, ClosedForm{});
  const double c = family_gradients<CategoricalPolicy>(
      rng, [](Rng& r) { return oracle::random_categorical(r, 1, 4 + r.index(5)); }, ClosedForm{});
  const double a = family_gradients<AutoregressivePolicy>(
      rng, [](Rng& r) { return oracle::random_autoregressive(r, 1, 2 + r.index(3), r.index(3), 2 + r.index(3)); },
      AutoregressivePerToken{});
  const double worst = std::max({g, c, a});
  return {worst <= 1e-4, "5 losses x 100 instances x 3 families, max relative error gaussian " + num(g) +
                             ", categorical " + num(c) + ", autoregressive " + num(a)};
}

// 5. Unbiasedness of the per-token sequence KL estimator.
Verdict autoregressive_estimator() {
  Rng rng(5);
  double worst_z = 0.0;
  int outside = 0, constant = 0;
  for (int pair = 0; pair < 20; ++pair) {
    const std::size_t V = 2 + rng.index(3), L = 1 + rng.index(3), order = rng.index(3);
    auto p = oracle::random_autoregressive(rng, 1, V, order, L);
    auto q = oracle::random_autoregressive(rng, 1, V, order, L);
    const int n = 100'000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double k = kl_autoregressive(p, q, 0, p.sample_one(0, rng));
      sum += k;
      sq += k * k;
    }
    const double mean = sum / n;
    const double se = std::sqrt(std::max(sq / n - mean * mean, 0.0) / n);
    const double exact = kl_exact_enumeration(p, q, 0);
    // Without context the per-token terms do not depend on the sample, so the
    // estimate is constant and has to match the exact value up to roundoff.
    if (se <= 1e-12 * std::max(1.0, exact)) {
      ++constant;
      outside += std::abs(mean - exact) > 1e-10 * std::max(1.0, exact);
      continue;
    }
    const double z = std::abs(mean - exact) / se;
    worst_z = std::max(worst_z, z);
    outside += z > 3.0;
  }
  return {outside == 0, "20 pairs, 1e5 samples each, largest |mean - exact| = " + num(worst_z) +
                            " standard errors (" + std::to_string(constant) + " context-free pairs matched exactly)"};
}

// 6. IPO regularizer equals twice the variance of the log-ratio.
Verdict variance_link() {
  Rng rng(6);
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t k = 2 + rng.index(15);
    const auto link = ipo_variance_link(oracle::random_categorical(rng, 1, k), oracle::random_categorical(rng, 1, k), 0);
    worst = std::max(worst, std::abs(link.pair_expectation - link.twice_variance));
  }
  return {worst <= 1e-10, "50 instances, max |E[(d_a - d_r)^2] - 2 Var[d]| " + num(worst)};
}

TrainerConfig pmpo(double alpha, double beta, std::uint64_t seed) {
  TrainerConfig c;
  c.loss.alpha = alpha;
  c.loss.beta = beta;
  c.seed = seed;
  return c;
}

// 7. Bandit convergence with the default settings.
Verdict bandit_convergence() {
  struct Variant {
    const char* name;
    double alpha, beta;
  };
  const Variant variants[] = {{"AR", 0.5, 0.5}, {"A", 1.0, 0.0}, {"R", 0.0, 2.0}};
  bool pass = true;
  std::string detail;
  for (auto [kind, limit] : {std::pair{BenchmarkKind::Sphere, 1e-2}, std::pair{BenchmarkKind::Rosenbrock, 1.0}}) {
    const BenchmarkFunction fn{kind, 2};
    for (const auto& v : variants) {
      std::vector<double> finals;
      for (std::uint64_t s = 0; s < 10; ++s) {
        auto c = pmpo(v.alpha, v.beta, s);
        c.iterations = 2000;
        finals.push_back(train_bandit(fn, c).final_metric);
      }
      const double m = median(finals);
      pass = pass && m < limit;
      detail += std::string(to_string(kind)) + " " + v.name + " " + num(m) + (m < limit ? "" : " (over limit)") + "; ";
    }
  }
  return {pass, "median f over 10 seeds: " + detail};
}

// 8. Beta sensitivity of reject-only and accept-only learning.
struct RegimeOutcome {
  double median = 0.0;
  std::size_t collapsed = 0;
};

Verdict beta_sensitivity() {
  const GridworldMdp mdp(GridworldSpec::default_8x8());
  const auto vi = value_iteration(mdp);
  const double optimum = mean_greedy_return(mdp, greedy_actions_from_q(vi.q, mdp.state_count()), 100);
  const SequenceTask task;
  const double uniform_reward = expected_sequence_reward(task, AutoregressivePolicy::uniform(1, 4, 1, task.length));

  auto run = [&](bool sequence, double alpha, double beta) {
    RegimeOutcome out;
    std::vector<double> finals;
    for (std::uint64_t s = 0; s < 10; ++s) {
      auto c = pmpo(alpha, beta, s);
      c.ref_update_interval = 10;
      c.m_step_steps = 10;
      c.optimizer.learning_rate = 0.05;
      RunResult r;
      if (sequence) {
        c.iterations = 1000;
        c.loss.kl_mode = AutoregressivePerToken{};
        r = train_sequence(task, c);
      } else {
        c.iterations = 500;
        r = train_mdp(mdp, c);
      }
      finals.push_back(r.final_metric);
      out.collapsed += r.collapsed;
    }
    out.median = median(finals);
    return out;
  };

  bool pass = true;
  std::string detail;
  for (bool sequence : {false, true}) {
    const auto r0 = run(sequence, 0.0, 0.0);
    const auto r2 = run(sequence, 0.0, 2.0);
    const bool r0_fails = r0.median < 0.5 * r2.median || r0.collapsed * 2 >= 10;
    const bool r2_succeeds = sequence ? r2.median >= 1.5 * uniform_reward : r2.median >= 0.5 * optimum;
    double best_a = -INFINITY, worst_a = INFINITY;
    std::string a_text;
    for (double beta : {0.0, 0.5, 2.0}) {
      const auto a = run(sequence, 1.0, beta);
      best_a = std::max(best_a, a.median);
      worst_a = std::min(worst_a, a.median);
      a_text += num(a.median) + " ";
    }
    const bool a_insensitive = worst_a >= 0.8 * best_a;
    pass = pass && r0_fails && r2_succeeds && a_insensitive;
    detail += std::string(sequence ? "sequence" : "gridworld") + ": R(b=0) " + num(r0.median) + " [" +
              std::to_string(r0.collapsed) + "/10 collapsed], R(b=2) " + num(r2.median) + ", A(b=0,0.5,2) " + a_text +
              (r0_fails && r2_succeeds && a_insensitive ? "ok" : "NOT MET") + "; ";
  }
  return {pass, detail + "protocol: reference refreshed every 10 iterations, 10 optimizer steps per batch, lr 0.05"};
}

// 9. Offline loss-mixture ordering on a corrupted dataset, using the shipped
// configs so the numbers match `pmpo run configs/offline/<name>.json`.
Verdict offline_mixtures() {
  const char* names[] = {"bc", "accept_bc", "accept", "reject_bc", "accept_reject_bc"};
  const fs::path root = fs::temp_directory_path() / "pmpo_acceptance_offline";
  fs::remove_all(root);
  std::vector<double> med;
  std::string detail = "median returns over 10 seeds:";
  for (const char* name : names) {
    const auto parsed = parse_experiment_file(fs::path(PMPO_SOURCE_DIR) / "configs" / "offline" / (std::string(name) + ".json"));
    if (!parsed.config) return {false, std::string(name) + ": " + parsed.violations.front()};
    RunOptions o;
    o.output_dir = (root / name).string();
    o.quiet = true;
    std::ostringstream log;
    const auto outcome = run_experiment(*parsed.config, o, log);
    std::vector<double> finals;
    for (const auto& s : outcome.seeds) finals.push_back(s.final_metric);
    med.push_back(median(finals));
    detail += " " + mixture_label(parsed.config->trainer) + " " + num(med.back()) + ";";
  }
  fs::remove_all(root);
  const double bc = med[0];
  const bool ordering = med[4] >= med[3] && med[3] > bc;
  auto near_bc = [&](double v) { return std::abs(v - bc) <= 0.15 * std::abs(bc); };
  const bool accept_near = near_bc(med[1]) && near_bc(med[2]);
  detail += std::string(" ordering A+R+BC >= R+BC > BC ") + (ordering ? "holds" : "FAILS") +
            "; Accept and Accept+BC within 15% of BC " + (accept_near ? "holds" : "FAILS");
  return {ordering && accept_near, detail};
}

// 10. Byte-identical CSVs across repeated runs of every regime.
Verdict determinism() {
  const char* docs[] = {
      R"({"name": "b", "regime": "bandit", "trainer": {"iterations": 300}, "seeds": [0, 1]})",
      R"({"name": "m", "regime": "mdp", "trainer": {"iterations": 60}, "seeds": [0, 1]})",
      R"({"name": "s", "regime": "sequence", "trainer": {"iterations": 100, "loss": {"kl_mode": "monte_carlo"}}, "seeds": [0, 1]})",
      R"({"name": "o", "regime": "offline", "environment": {"episodes": 200, "labeled_episodes": 100},
          "trainer": {"iterations": 40}, "seeds": [0, 1]})",
      R"({"name": "e", "regime": "em-exact", "seeds": [0, 1]})",
  };
  const fs::path root = fs::temp_directory_path() / "pmpo_acceptance_determinism";
  fs::remove_all(root);
  std::size_t compared = 0;
  for (const char* text : docs) {
    const auto parsed = parse_experiment(nlohmann::json::parse(text));
    if (!parsed.config) return {false, "config rejected: " + parsed.violations.front()};
    std::string first[2];
    for (int rep = 0; rep < 2; ++rep) {
      RunOptions o;
      o.output_dir = (root / (parsed.config->name + std::to_string(rep))).string();
      o.quiet = true;
      std::ostringstream log;
      run_experiment(*parsed.config, o, log);
    }
    for (int seed = 0; seed < 2; ++seed) {
      const auto name = "seed_" + std::to_string(seed) + ".csv";
      for (int rep = 0; rep < 2; ++rep) {
        std::ifstream in(root / (parsed.config->name + std::to_string(rep)) / name, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        first[rep] = ss.str();
      }
      if (first[0].empty() || first[0] != first[1])
        return {false, std::string(to_string(parsed.config->regime)) + " seed " + std::to_string(seed) + " differs"};
      ++compared;
    }
  }
  fs::remove_all(root);
  return {true, std::to_string(compared) + " CSV pairs across 5 regimes are byte-identical"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double budget_s;
    Verdict (*check)();
  };
  const Criterion criteria[] = {
      {1, "EM monotonicity", 5, em_monotonicity},
      {2, "logsumexp majorant and argmax", 5, majorant},
      {3, "positive/negative form equivalence", 5, exact_form_equivalence},
      {4, "finite-difference gradient oracle", 30, gradient_oracle},
      {5, "per-token KL estimator", 60, autoregressive_estimator},
      {6, "IPO variance link", 60, variance_link},
      {7, "bandit convergence", 120, bandit_convergence},
      {8, "beta sensitivity", 300, beta_sensitivity},
      {9, "offline mixture ordering", 300, offline_mixtures},
      {10, "determinism", 300, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = v.pass && in_time;
    failures += !pass;
    std::printf("criterion %2d %-4s %s (%.1fs of %.0fs): %s%s\n", c.id, pass ? "PASS" : "FAIL", c.title, secs,
                c.budget_s, v.detail.c_str(), in_time ? "" : " [over time budget]");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
  return failures == 0 ? 0 : 1;
}
