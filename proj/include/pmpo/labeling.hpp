#pragma once

// Turning evaluation values into accept/reject partitions.
//
// Boundary conventions differ on purpose: the baseline rule accepts ties
// (f >= b) while the advantage rule needs a strictly positive advantage.
// Ties in the top-k rule are broken by the lower sample index.

#include "pmpo/objectives.hpp"
#include "pmpo/policy.hpp"

#include <json.hpp>

#include <cstdint>
#include <ostream>
#include <span>
#include <variant>
#include <vector>

namespace pmpo {

// Ignored only appears under BestWorstOnly, for samples that are neither the
// best nor the worst.
enum class Label : std::uint8_t { Reject = 0, Accept = 1, Ignored = 2 };

enum class BaselineKind { Mean, Median };

struct TopK {
  std::size_t k = 2;
};
struct Baseline {
  BaselineKind kind = BaselineKind::Mean;
};
struct AdvantageSign {};
struct BestWorstOnly {};

using LabelRule = std::variant<TopK, Baseline, AdvantageSign, BestWorstOnly>;

double compute_baseline(std::span<const double> f_values, BaselineKind kind);

std::vector<Label> topk_labels(std::span<const double> f_values, std::size_t k);
std::vector<Label> baseline_labels(std::span<const double> f_values, double baseline);
// Accept the first index holding the maximum, reject the last index holding
// the minimum, ignore the rest. Needs at least two samples.
std::vector<Label> best_worst_labels(std::span<const double> f_values);

template <class Output>
struct LabeledSampleSet {
  Condition condition = 0;
  std::vector<Output> samples;
  std::vector<double> f_values;
  std::vector<Label> labels;
  LabelRule rule;

  std::vector<Output> with_label(Label which) const {
    std::vector<Output> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (labels[i] == which) out.push_back(samples[i]);
    return out;
  }
  std::vector<Output> accepted() const { return with_label(Label::Accept); }
  std::vector<Output> rejected() const { return with_label(Label::Reject); }

  // Disjoint by sample index; repeated output values may appear on both sides.
  PreferenceBatch<Output> to_batch() const {
    PreferenceBatch<Output> batch;
    batch.condition = condition;
    std::vector<double> scores;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (labels[i] == Label::Accept) batch.accepted.push_back(samples[i]);
      if (labels[i] == Label::Reject) batch.rejected.push_back(samples[i]);
    }
    batch.scores = f_values;
    return batch;
  }
};

namespace detail {
void check_parallel(std::size_t samples, std::size_t f_values);
}

template <class Output>
LabeledSampleSet<Output> label_topk(Condition x, std::vector<Output> samples, std::vector<double> f_values,
                                    std::size_t k) {
  detail::check_parallel(samples.size(), f_values.size());
  auto labels = topk_labels(f_values, k);
  return {x, std::move(samples), std::move(f_values), std::move(labels), TopK{k}};
}

template <class Output>
LabeledSampleSet<Output> label_baseline(Condition x, std::vector<Output> samples, std::vector<double> f_values,
                                        double baseline, BaselineKind kind = BaselineKind::Mean) {
  detail::check_parallel(samples.size(), f_values.size());
  auto labels = baseline_labels(f_values, baseline);
  return {x, std::move(samples), std::move(f_values), std::move(labels), Baseline{kind}};
}

template <class Output>
LabeledSampleSet<Output> label_best_worst(Condition x, std::vector<Output> samples,
                                          std::vector<double> f_values) {
  detail::check_parallel(samples.size(), f_values.size());
  auto labels = best_worst_labels(f_values);
  return {x, std::move(samples), std::move(f_values), std::move(labels), BestWorstOnly{}};
}

// Applies any rule except AdvantageSign, which needs a value table.
template <class Output>
LabeledSampleSet<Output> label_samples(Condition x, std::vector<Output> samples, std::vector<double> f_values,
                                       const LabelRule& rule) {
  if (const auto* topk = std::get_if<TopK>(&rule))
    return label_topk(x, std::move(samples), std::move(f_values), topk->k);
  if (const auto* base = std::get_if<Baseline>(&rule)) {
    const double b = compute_baseline(f_values, base->kind);
    return label_baseline(x, std::move(samples), std::move(f_values), b, base->kind);
  }
  if (std::holds_alternative<BestWorstOnly>(rule))
    return label_best_worst(x, std::move(samples), std::move(f_values));
  throw InputError("label_samples: the advantage rule needs a state-value table");
}

struct Transition {
  Condition condition = 0;  // state
  std::size_t output = 0;   // action
  double reward_to_go = 0.0;
};

// Per-state values; NaN marks a state with no estimate.
using StateValueTable = std::vector<double>;

// Groups transitions by condition (ascending) and accepts those with
// reward_to_go - v(condition) > 0. The f_values field holds the advantage.
std::vector<LabeledSampleSet<std::size_t>> label_advantage(std::span<const Transition> dataset,
                                                           const StateValueTable& v);

// JSON Lines: one {"condition", "output", "f", "label"} record per sample.
// Ignored samples are written with "label": null.
template <class Output>
void write_labeled_jsonl(std::ostream& out, std::span<const LabeledSampleSet<Output>> sets) {
  for (const auto& set : sets) {
    for (std::size_t i = 0; i < set.samples.size(); ++i) {
      nlohmann::json rec;
      rec["condition"] = set.condition;
      rec["output"] = set.samples[i];
      rec["f"] = set.f_values[i];
      if (set.labels[i] == Label::Ignored)
        rec["label"] = nullptr;
      else
        rec["label"] = set.labels[i] == Label::Accept ? 1 : 0;
      out << rec.dump() << '\n';
    }
  }
}

}  // namespace pmpo
