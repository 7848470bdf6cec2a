#include "pmpo/gridworld.hpp"

#include "pmpo/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pmpo {

namespace {

using nlohmann::json;

// One Bellman backup of every Q entry given state values v.
void backup(const GridworldMdp& mdp, const std::vector<double>& v, ActionValueTable& q) {
  for (std::size_t s = 0; s < mdp.state_count(); ++s) {
    for (std::size_t a = 0; a < kActionCount; ++a) {
      double& entry = q[s * kActionCount + a];
      if (mdp.is_terminal(s) || mdp.is_wall(s)) {
        entry = 0.0;
        continue;
      }
      const std::size_t next = mdp.next_state(s, a);
      entry = mdp.reward(s, a) + mdp.gamma() * (mdp.is_terminal(next) ? 0.0 : v[next]);
    }
  }
}

double stop_threshold(double tol, double gamma) {
  if (!(tol > 0.0)) throw InputError("critic tolerance must be positive");
  return gamma == 0.0 ? tol : tol * (1.0 - gamma) / gamma;
}

}  // namespace

GridworldSpec GridworldSpec::default_8x8() {
  GridworldSpec spec;
  spec.rows = {
      "........",
      ".##..##.",
      ".#....#.",
      "...#P...",
      ".#.#..#.",
      ".#...G#.",
      ".####.#.",
      "........",
  };
  spec.rewards = {{'G', 1.0}, {'P', -1.0}};
  spec.terminals = "GP";
  spec.gamma = 0.95;
  return spec;
}

GridworldSpec GridworldSpec::from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("gridworld: expected an object");
  GridworldSpec spec;
  if (!doc.contains("rows") || !doc["rows"].is_array()) throw InputError("gridworld: \"rows\" must be an array");
  for (const auto& row : doc["rows"]) {
    if (!row.is_string()) throw InputError("gridworld: rows must be strings");
    spec.rows.push_back(row.get<std::string>());
  }
  if (doc.contains("rewards")) {
    if (!doc["rewards"].is_object()) throw InputError("gridworld: \"rewards\" must map cell characters to numbers");
    for (const auto& [key, value] : doc["rewards"].items()) {
      if (key.size() != 1 || !value.is_number())
        throw InputError("gridworld: reward keys must be single characters with numeric values");
      spec.rewards[key[0]] = value.get<double>();
    }
  }
  if (doc.contains("terminals")) {
    if (!doc["terminals"].is_string()) throw InputError("gridworld: \"terminals\" must be a string of characters");
    spec.terminals = doc["terminals"].get<std::string>();
  }
  if (doc.contains("gamma")) {
    if (!doc["gamma"].is_number()) throw InputError("gridworld: \"gamma\" must be a number");
    spec.gamma = doc["gamma"].get<double>();
  }
  if (doc.contains("step_reward")) {
    if (!doc["step_reward"].is_number()) throw InputError("gridworld: \"step_reward\" must be a number");
    spec.step_reward = doc["step_reward"].get<double>();
  }
  return spec;
}

json GridworldSpec::to_json() const {
  json rewards_doc = json::object();
  for (const auto& [c, r] : rewards) rewards_doc[std::string(1, c)] = r;
  return {{"rows", rows}, {"rewards", rewards_doc}, {"terminals", terminals}, {"gamma", gamma},
          {"step_reward", step_reward}};
}

GridworldMdp::GridworldMdp(const GridworldSpec& spec) : spec_(spec) {
  if (spec.rows.empty() || spec.rows.front().empty()) throw InputError("gridworld: grid is empty");
  height_ = spec.rows.size();
  width_ = spec.rows.front().size();
  for (const auto& row : spec.rows)
    if (row.size() != width_) throw InputError("gridworld: rows have different lengths");
  if (!(spec.gamma >= 0.0 && spec.gamma < 1.0)) throw InputError("gridworld: gamma must lie in [0, 1)");
  if (!std::isfinite(spec.step_reward)) throw InputError("gridworld: step_reward must be finite");
  gamma_ = spec.gamma;

  const std::size_t n = width_ * height_;
  walls_.assign(n, false);
  terminals_.assign(n, false);
  cell_reward_.assign(n, 0.0);
  for (std::size_t r = 0; r < height_; ++r) {
    for (std::size_t c = 0; c < width_; ++c) {
      const char ch = spec.rows[r][c];
      const std::size_t s = r * width_ + c;
      walls_[s] = ch == '#';
      terminals_[s] = ch != '.' && ch != '#' && spec.terminals.find(ch) != std::string::npos;
      if (auto it = spec.rewards.find(ch); it != spec.rewards.end()) {
        if (!std::isfinite(it->second)) throw InputError("gridworld: rewards must be finite");
        cell_reward_[s] = it->second;
      }
      if (!walls_[s] && !terminals_[s]) starts_.push_back(s);
    }
  }
  if (starts_.empty()) throw InputError("gridworld: no non-terminal open cell");
}

std::size_t GridworldMdp::next_state(std::size_t s, std::size_t a) const {
  if (s >= state_count()) throw InputError("gridworld: state out of range");
  if (a >= kActionCount) throw InputError("gridworld: action out of range");
  const std::size_t r = s / width_;
  const std::size_t c = s % width_;
  std::size_t nr = r;
  std::size_t nc = c;
  switch (static_cast<Action>(a)) {
    case Action::Up:
      if (r == 0) return s;
      nr = r - 1;
      break;
    case Action::Down:
      if (r + 1 == height_) return s;
      nr = r + 1;
      break;
    case Action::Left:
      if (c == 0) return s;
      nc = c - 1;
      break;
    case Action::Right:
      if (c + 1 == width_) return s;
      nc = c + 1;
      break;
  }
  const std::size_t next = nr * width_ + nc;
  return walls_[next] ? s : next;
}

double GridworldMdp::reward(std::size_t s, std::size_t a) const {
  return cell_reward_[next_state(s, a)] + spec_.step_reward;
}

ValueIterationResult value_iteration(const GridworldMdp& mdp, double tol) {
  const double threshold = stop_threshold(tol, mdp.gamma());
  ValueIterationResult out;
  out.v.assign(mdp.state_count(), 0.0);
  out.q.assign(mdp.state_count() * kActionCount, 0.0);
  while (true) {
    backup(mdp, out.v, out.q);
    ++out.sweeps;
    double change = 0.0;
    for (std::size_t s = 0; s < mdp.state_count(); ++s) {
      const double best = *std::max_element(out.q.begin() + s * kActionCount, out.q.begin() + (s + 1) * kActionCount);
      change = std::max(change, std::abs(best - out.v[s]));
      out.v[s] = best;
    }
    if (change <= threshold) break;
  }
  backup(mdp, out.v, out.q);
  return out;
}

ActionValueTable policy_q_critic(const GridworldMdp& mdp, const CategoricalPolicy& policy, double tol,
                                 const ActionValueTable& warm_start) {
  if (policy.conditions() != mdp.state_count() || policy.outputs() != kActionCount)
    throw InputError("policy_q_critic: policy must be shaped (states x 4)");
  const double threshold = stop_threshold(tol, mdp.gamma());
  std::vector<std::vector<double>> probs(mdp.state_count());
  for (std::size_t s = 0; s < mdp.state_count(); ++s) probs[s] = policy.probs(s);

  ActionValueTable q = warm_start.empty() ? ActionValueTable(mdp.state_count() * kActionCount, 0.0) : warm_start;
  if (q.size() != mdp.state_count() * kActionCount) throw InputError("policy_q_critic: warm start has wrong size");
  std::vector<double> v(mdp.state_count(), 0.0);
  auto state_values = [&] {
    double change = 0.0;
    for (std::size_t s = 0; s < mdp.state_count(); ++s) {
      double acc = 0.0;
      for (std::size_t a = 0; a < kActionCount; ++a) acc += probs[s][a] * q[s * kActionCount + a];
      change = std::max(change, std::abs(acc - v[s]));
      v[s] = acc;
    }
    return change;
  };
  state_values();
  while (true) {
    backup(mdp, v, q);
    if (state_values() <= threshold) break;
  }
  backup(mdp, v, q);
  return q;
}

std::size_t greedy_action(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

std::vector<std::size_t> greedy_actions_from_q(const ActionValueTable& q, std::size_t states) {
  std::vector<std::size_t> out(states);
  for (std::size_t s = 0; s < states; ++s)
    out[s] = greedy_action(std::span<const double>(q).subspan(s * kActionCount, kActionCount));
  return out;
}

std::vector<std::size_t> greedy_actions(const CategoricalPolicy& policy) {
  std::vector<std::size_t> out(policy.conditions());
  for (std::size_t s = 0; s < policy.conditions(); ++s) out[s] = greedy_action(policy.log_probs(s));
  return out;
}

double rollout_return(const GridworldMdp& mdp, const std::vector<std::size_t>& actions, std::size_t start,
                      std::size_t max_steps) {
  double total = 0.0;
  std::size_t s = start;
  for (std::size_t t = 0; t < max_steps && !mdp.is_terminal(s); ++t) {
    total += mdp.reward(s, actions.at(s));
    s = mdp.next_state(s, actions[s]);
  }
  return total;
}

double mean_greedy_return(const GridworldMdp& mdp, const std::vector<std::size_t>& actions,
                          std::size_t max_steps) {
  double acc = 0.0;
  for (std::size_t s : mdp.start_states()) acc += rollout_return(mdp, actions, s, max_steps);
  return acc / static_cast<double>(mdp.start_states().size());
}

double mean_sampled_return(const GridworldMdp& mdp, const CategoricalPolicy& policy, std::size_t episodes,
                           std::size_t max_steps, Rng& rng) {
  if (episodes == 0) throw InputError("mean_sampled_return: episodes must be positive");
  const auto& starts = mdp.start_states();
  double acc = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    std::size_t s = starts[rng.index(starts.size())];
    for (std::size_t t = 0; t < max_steps && !mdp.is_terminal(s); ++t) {
      const std::size_t a = policy.sample_one(s, rng);
      acc += mdp.reward(s, a);
      s = mdp.next_state(s, a);
    }
  }
  return acc / static_cast<double>(episodes);
}

CategoricalPolicy deterministic_policy(const std::vector<std::size_t>& actions, double logit_gap) {
  std::vector<double> logits(actions.size() * kActionCount, 0.0);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] >= kActionCount) throw InputError("deterministic_policy: action out of range");
    logits[s * kActionCount + actions[s]] = logit_gap;
  }
  return CategoricalPolicy(actions.size(), kActionCount, std::move(logits));
}

}  // namespace pmpo
