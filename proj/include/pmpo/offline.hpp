#pragma once

// Synthetic offline data for the loss-mixture study: rollouts of an expert
// whose actions are replaced by uniformly random ones with a fixed probability.

#include "pmpo/gridworld.hpp"
#include "pmpo/labeling.hpp"

#include <iosfwd>
#include <vector>

namespace pmpo {

struct OfflineStep {
  Condition state = 0;
  std::size_t action = 0;
  double reward = 0.0;
  double reward_to_go = 0.0;  // discounted with the MDP's gamma
  bool corrupted = false;     // action was drawn uniformly instead of from the expert
};

struct OfflineDataset {
  std::vector<std::vector<OfflineStep>> episodes;
  double corruption_fraction = 0.0;

  std::size_t transition_count() const;
  // Flattened (state, action, reward_to_go) triples of episodes [first, last).
  std::vector<Transition> transitions(std::size_t first = 0, std::size_t last = static_cast<std::size_t>(-1)) const;
};

// Each episode starts in a uniformly drawn start state and runs until a
// terminal cell or max_steps.
OfflineDataset generate_offline_dataset(const GridworldMdp& mdp, const CategoricalPolicy& expert,
                                        double corruption_fraction, std::size_t episodes, Rng& rng,
                                        std::size_t max_steps = 50);

// First-visit Monte Carlo average of reward-to-go per state; NaN for states
// that never occur.
StateValueTable monte_carlo_values(const OfflineDataset& dataset, std::size_t state_count);

// JSON Lines, one record per transition:
// {"episode", "step", "state", "action", "reward", "reward_to_go", "corrupted"}.
void write_offline_jsonl(std::ostream& out, const OfflineDataset& dataset);
OfflineDataset read_offline_jsonl(std::istream& in, double corruption_fraction = 0.0);

}  // namespace pmpo
