#include "pmpo/labeling.hpp"

#include "pmpo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace pmpo {

namespace detail {
void check_parallel(std::size_t samples, std::size_t f_values) {
  if (samples != f_values) throw InputError("labeling: samples and f_values lengths differ");
}
}  // namespace detail

double compute_baseline(std::span<const double> f_values, BaselineKind kind) {
  if (f_values.empty()) throw InputError("compute_baseline: f_values is empty");
  if (kind == BaselineKind::Mean)
    return std::accumulate(f_values.begin(), f_values.end(), 0.0) / static_cast<double>(f_values.size());
  std::vector<double> sorted(f_values.begin(), f_values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

std::vector<Label> topk_labels(std::span<const double> f_values, std::size_t k) {
  if (k == 0) throw InputError("label_topk: k must be positive");
  if (k > f_values.size())
    throw InputError("label_topk: k = " + std::to_string(k) + " exceeds sample count " +
                     std::to_string(f_values.size()));
  std::vector<std::size_t> order(f_values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return f_values[a] > f_values[b]; });
  std::vector<Label> labels(f_values.size(), Label::Reject);
  for (std::size_t i = 0; i < k; ++i) labels[order[i]] = Label::Accept;
  return labels;
}

std::vector<Label> baseline_labels(std::span<const double> f_values, double baseline) {
  std::vector<Label> labels;
  labels.reserve(f_values.size());
  for (double f : f_values) labels.push_back(f >= baseline ? Label::Accept : Label::Reject);
  return labels;
}

std::vector<Label> best_worst_labels(std::span<const double> f_values) {
  if (f_values.size() < 2) throw InputError("best/worst labeling needs at least two samples");
  std::size_t best = 0;
  std::size_t worst = f_values.size() - 1;
  for (std::size_t i = 0; i < f_values.size(); ++i)
    if (f_values[i] > f_values[best]) best = i;
  for (std::size_t i = f_values.size(); i-- > 0;)
    if (f_values[i] < f_values[worst]) worst = i;
  std::vector<Label> labels(f_values.size(), Label::Ignored);
  labels[best] = Label::Accept;
  labels[worst] = Label::Reject;
  return labels;
}

std::vector<LabeledSampleSet<std::size_t>> label_advantage(std::span<const Transition> dataset,
                                                           const StateValueTable& v) {
  std::map<Condition, LabeledSampleSet<std::size_t>> groups;
  for (const auto& t : dataset) {
    if (t.condition >= v.size() || std::isnan(v[t.condition]))
      throw InputError("label_advantage: no state value for condition " + std::to_string(t.condition));
    auto& set = groups[t.condition];
    set.condition = t.condition;
    set.rule = AdvantageSign{};
    const double advantage = t.reward_to_go - v[t.condition];
    set.samples.push_back(t.output);
    set.f_values.push_back(advantage);
    set.labels.push_back(advantage > 0.0 ? Label::Accept : Label::Reject);
  }
  std::vector<LabeledSampleSet<std::size_t>> out;
  out.reserve(groups.size());
  for (auto& [x, set] : groups) out.push_back(std::move(set));
  return out;
}

}  // namespace pmpo
