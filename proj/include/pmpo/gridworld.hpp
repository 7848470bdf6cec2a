#pragma once

// Deterministic tabular gridworld with exact critics.
//
// States are cell indices row * width + col (walls included, they are simply
// never reached). Actions are up, down, left, right. A move into a wall or off
// the grid leaves the agent in place. The reward of a transition is the reward
// of the cell it lands in (also when it stays put) plus step_reward. Terminal
// cells end the episode and have value 0.

#include "pmpo/policy.hpp"
#include "pmpo/rng.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace pmpo {

inline constexpr std::size_t kActionCount = 4;
enum class Action : std::size_t { Up = 0, Down = 1, Left = 2, Right = 3 };

struct GridworldSpec {
  // '.' empty, '#' wall, any other character is a labelled cell.
  std::vector<std::string> rows;
  std::map<char, double> rewards;  // by cell character; missing means 0
  std::string terminals;           // characters whose cells are terminal
  double gamma = 0.95;
  double step_reward = 0.0;

  // 8x8 grid with a goal G (+1, terminal) and a pit P (-1, terminal).
  static GridworldSpec default_8x8();
  static GridworldSpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

class GridworldMdp {
 public:
  explicit GridworldMdp(const GridworldSpec& spec);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t state_count() const noexcept { return width_ * height_; }
  double gamma() const noexcept { return gamma_; }
  const GridworldSpec& spec() const noexcept { return spec_; }

  bool is_wall(std::size_t s) const { return walls_.at(s); }
  bool is_terminal(std::size_t s) const { return terminals_.at(s); }
  // Non-wall, non-terminal cells, ascending.
  const std::vector<std::size_t>& start_states() const noexcept { return starts_; }

  std::size_t next_state(std::size_t s, std::size_t a) const;
  double reward(std::size_t s, std::size_t a) const;

 private:
  GridworldSpec spec_;
  std::size_t width_;
  std::size_t height_;
  double gamma_;
  std::vector<bool> walls_;
  std::vector<bool> terminals_;
  std::vector<double> cell_reward_;
  std::vector<std::size_t> starts_;
};

// Q[s * kActionCount + a].
using ActionValueTable = std::vector<double>;

struct ValueIterationResult {
  std::vector<double> v;
  ActionValueTable q;
  std::size_t sweeps = 0;
};

// Stops once one sweep changes V by at most tol * (1 - gamma) / gamma, which
// puts Q within tol of the fixed point in sup-norm.
ValueIterationResult value_iteration(const GridworldMdp& mdp, double tol = 1e-10);

// Iterative evaluation of Q^pi for a (states x 4) categorical policy, with the
// same stopping rule. `warm_start` (if non-empty) seeds the iteration.
ActionValueTable policy_q_critic(const GridworldMdp& mdp, const CategoricalPolicy& policy, double tol = 1e-10,
                                 const ActionValueTable& warm_start = {});

// Argmax over actions with ties to the lowest index.
std::size_t greedy_action(std::span<const double> row);
std::vector<std::size_t> greedy_actions_from_q(const ActionValueTable& q, std::size_t states);
std::vector<std::size_t> greedy_actions(const CategoricalPolicy& policy);

// Undiscounted return of following `actions` from `start` for at most max_steps.
double rollout_return(const GridworldMdp& mdp, const std::vector<std::size_t>& actions, std::size_t start,
                      std::size_t max_steps);
// Mean of rollout_return over all start states.
double mean_greedy_return(const GridworldMdp& mdp, const std::vector<std::size_t>& actions,
                          std::size_t max_steps);
// Mean undiscounted return of episodes that sample actions from the policy,
// starting from uniformly drawn start states.
double mean_sampled_return(const GridworldMdp& mdp, const CategoricalPolicy& policy, std::size_t episodes,
                           std::size_t max_steps, Rng& rng);

// Categorical policy putting almost all mass on the given actions.
CategoricalPolicy deterministic_policy(const std::vector<std::size_t>& actions, double logit_gap = 30.0);

}  // namespace pmpo
