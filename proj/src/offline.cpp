#include "pmpo/offline.hpp"

#include "pmpo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace pmpo {

std::size_t OfflineDataset::transition_count() const {
  std::size_t n = 0;
  for (const auto& ep : episodes) n += ep.size();
  return n;
}

std::vector<Transition> OfflineDataset::transitions(std::size_t first, std::size_t last) const {
  last = std::min(last, episodes.size());
  std::vector<Transition> out;
  for (std::size_t e = first; e < last; ++e)
    for (const auto& step : episodes[e]) out.push_back({step.state, step.action, step.reward_to_go});
  return out;
}

OfflineDataset generate_offline_dataset(const GridworldMdp& mdp, const CategoricalPolicy& expert,
                                        double corruption_fraction, std::size_t episodes, Rng& rng,
                                        std::size_t max_steps) {
  if (!(corruption_fraction >= 0.0 && corruption_fraction <= 1.0))
    throw InputError("generate_offline_dataset: corruption_fraction must lie in [0, 1]");
  if (expert.conditions() != mdp.state_count() || expert.outputs() != kActionCount)
    throw InputError("generate_offline_dataset: expert must be shaped (states x 4)");
  if (max_steps == 0) throw InputError("generate_offline_dataset: max_steps must be positive");

  OfflineDataset data;
  data.corruption_fraction = corruption_fraction;
  data.episodes.reserve(episodes);
  const auto& starts = mdp.start_states();
  for (std::size_t e = 0; e < episodes; ++e) {
    std::vector<OfflineStep> ep;
    std::size_t s = starts[rng.index(starts.size())];
    for (std::size_t t = 0; t < max_steps && !mdp.is_terminal(s); ++t) {
      OfflineStep step;
      step.state = s;
      step.corrupted = rng.uniform() < corruption_fraction;
      step.action = step.corrupted ? rng.index(kActionCount) : expert.sample_one(s, rng);
      step.reward = mdp.reward(s, step.action);
      ep.push_back(step);
      s = mdp.next_state(s, step.action);
    }
    double acc = 0.0;
    for (std::size_t t = ep.size(); t-- > 0;) {
      acc = ep[t].reward + mdp.gamma() * acc;
      ep[t].reward_to_go = acc;
    }
    data.episodes.push_back(std::move(ep));
  }
  return data;
}

StateValueTable monte_carlo_values(const OfflineDataset& dataset, std::size_t state_count) {
  std::vector<double> sum(state_count, 0.0);
  std::vector<std::size_t> count(state_count, 0);
  std::vector<bool> seen(state_count);
  for (const auto& ep : dataset.episodes) {
    std::fill(seen.begin(), seen.end(), false);
    for (const auto& step : ep) {
      if (step.state >= state_count) throw InputError("monte_carlo_values: state out of range");
      if (seen[step.state]) continue;
      seen[step.state] = true;
      sum[step.state] += step.reward_to_go;
      ++count[step.state];
    }
  }
  StateValueTable v(state_count, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t s = 0; s < state_count; ++s)
    if (count[s] > 0) v[s] = sum[s] / static_cast<double>(count[s]);
  return v;
}

void write_offline_jsonl(std::ostream& out, const OfflineDataset& dataset) {
  for (std::size_t e = 0; e < dataset.episodes.size(); ++e) {
    const auto& ep = dataset.episodes[e];
    for (std::size_t t = 0; t < ep.size(); ++t) {
      const nlohmann::json rec = {{"episode", e},
                                  {"step", t},
                                  {"state", ep[t].state},
                                  {"action", ep[t].action},
                                  {"reward", ep[t].reward},
                                  {"reward_to_go", ep[t].reward_to_go},
                                  {"corrupted", ep[t].corrupted}};
      out << rec.dump() << '\n';
    }
  }
}

OfflineDataset read_offline_jsonl(std::istream& in, double corruption_fraction) {
  OfflineDataset data;
  data.corruption_fraction = corruption_fraction;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      const auto e = rec.at("episode").get<std::size_t>();
      if (e + 1 < data.episodes.size() || e > data.episodes.size())
        throw InputError("episodes must appear in order");
      if (e == data.episodes.size()) data.episodes.emplace_back();
      OfflineStep step;
      step.state = rec.at("state").get<std::size_t>();
      step.action = rec.at("action").get<std::size_t>();
      step.reward = rec.at("reward").get<double>();
      step.reward_to_go = rec.at("reward_to_go").get<double>();
      step.corrupted = rec.value("corrupted", false);
      data.episodes.back().push_back(step);
    } catch (const nlohmann::json::exception& ex) {
      throw InputError("offline dataset line " + std::to_string(lineno) + ": " + ex.what());
    } catch (const InputError& ex) {
      throw InputError("offline dataset line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return data;
}

}  // namespace pmpo
