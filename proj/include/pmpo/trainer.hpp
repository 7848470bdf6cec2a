#pragma once

// The improvement loop. Each iteration:
//   1. refresh the reference to the current policy when the interval is due,
//   2. per condition, sample M outputs from the reference and evaluate them,
//   3. label the samples and build the chosen loss,
//   4. take m_step_steps optimizer steps on that fixed batch (ascent).
// The loss value is recorded in the loss's own sense (DPO/IPO are minimized).

#include "pmpo/benchmark.hpp"
#include "pmpo/gridworld.hpp"
#include "pmpo/labeling.hpp"
#include "pmpo/objectives.hpp"
#include "pmpo/offline.hpp"
#include "pmpo/optimizer.hpp"
#include "pmpo/sequence_task.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pmpo {

enum class Algorithm { Pmpo, Mpo, Dpo, Ipo, Bc, Mixture };

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm algorithm);

// Offline loss mixture: bc * BC + accept * Accept - reject * Reject - beta * KL.
struct MixtureWeights {
  double bc = 1.0;
  double accept = 1.0;
  double reject = 1.0;
};

struct TrainerConfig {
  Algorithm algorithm = Algorithm::Pmpo;
  LossSpec loss;
  std::size_t samples_per_condition = 4;
  LabelRule label_rule = TopK{2};
  OptimizerConfig optimizer;
  std::optional<std::size_t> ref_update_interval = 1;  // nullopt: never refresh
  std::size_t m_step_steps = 1;
  std::size_t iterations = 1000;
  std::size_t batch_conditions = 0;  // 0: every condition each iteration
  double gradient_clip = 10.0;
  std::size_t eval_interval = 1;
  MixtureWeights mixture;
  std::uint64_t seed = 0;

  std::vector<std::string> violations() const;
  // Throws ConfigError listing every violation.
  void validate() const;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double score = 0.0;   // mean evaluation value of this iteration's samples
  double metric = 0.0;  // regime metric, carried forward between evaluations
  double loss = 0.0;
  LossComponents components;
  double kl_estimate = 0.0;  // KL(reference || theta) at the start of the iteration
  double param_norm = 0.0;
  double wall_ms = 0.0;
};

struct RunResult {
  std::vector<IterationRecord> records;
  bool collapsed = false;
  std::string collapse_reason;
  bool halted = false;  // stopped early by the non-finite guard
  double initial_metric = 0.0;
  double final_metric = 0.0;
  ParamVector final_params;
};

// Regime metric: function value at the Gaussian mean (lower is better).
struct BanditOptions {
  std::optional<std::vector<double>> init_mean;  // default: domain centre
  std::optional<double> init_std;                // default: domain half-width
};
RunResult train_bandit(const BenchmarkFunction& fn, const TrainerConfig& config, const BanditOptions& options = {});

// Regime metric: mean undiscounted greedy return over all start states.
struct MdpOptions {
  std::size_t max_steps = 100;
  double critic_tol = 1e-8;
};
RunResult train_mdp(const GridworldMdp& mdp, const TrainerConfig& config, const MdpOptions& options = {});

// Regime metric: exact expected reward of the current policy.
struct SequenceOptions {
  std::size_t context_order = 1;
};
RunResult train_sequence(const SequenceTask& task, const TrainerConfig& config,
                         const SequenceOptions& options = {});

// Regime metric: mean undiscounted return of episodes sampled from the policy.
struct OfflineOptions {
  std::size_t labeled_episodes = 0;  // labels come from the first labeled_episodes episodes
  std::size_t eval_episodes = 100;
  std::size_t max_steps = 50;
};
RunResult train_offline(const OfflineDataset& dataset, const GridworldMdp& mdp, const TrainerConfig& config,
                        const OfflineOptions& options);

// The parameter-norm half of the collapse guard: > 10 * max(|theta_0|, sqrt(P)).
double collapse_norm_threshold(const ParamVector& initial);

}  // namespace pmpo
