#include "pmpo/labeling.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace pmpo;

namespace {
constexpr Label A = Label::Accept, R = Label::Reject, I = Label::Ignored;
}

TEST_SUITE("labeling") {
  TEST_CASE("top-k picks the largest values") {
    const std::vector<double> f = {1.0, 4.0, 2.0, 3.0};
    CHECK(topk_labels(f, 2) == std::vector<Label>{R, A, R, A});
  }

  TEST_CASE("top-k ties go to the lower index") {
    const std::vector<double> f = {1.0, 1.0, 1.0, 1.0};
    CHECK(topk_labels(f, 2) == std::vector<Label>{A, A, R, R});
    const std::vector<double> g = {0.0, 5.0, 5.0, 5.0};
    CHECK(topk_labels(g, 2) == std::vector<Label>{R, A, A, R});
  }

  TEST_CASE("top-k bounds") {
    const std::vector<double> f = {1.0, 2.0};
    CHECK_THROWS_AS(topk_labels(f, 0), InputError);
    CHECK_THROWS_AS(topk_labels(f, 3), InputError);
    CHECK(topk_labels(f, 2) == std::vector<Label>{A, A});
  }

  TEST_CASE("baselines") {
    const std::vector<double> f = {1.0, 2.0, 3.0, 10.0};
    CHECK(compute_baseline(f, BaselineKind::Mean) == doctest::Approx(4.0));
    CHECK(compute_baseline(f, BaselineKind::Median) == doctest::Approx(2.5));
    const std::vector<double> odd = {5.0, 1.0, 3.0};
    CHECK(compute_baseline(odd, BaselineKind::Median) == 3.0);
    // ties with the baseline are accepted
    CHECK(baseline_labels(odd, 3.0) == std::vector<Label>{A, R, A});
    CHECK_THROWS_AS(compute_baseline(std::vector<double>{}, BaselineKind::Mean), InputError);
  }

  TEST_CASE("best and worst only") {
    const std::vector<double> f = {3.0, 1.0, 3.0, 1.0, 2.0};
    CHECK(best_worst_labels(f) == std::vector<Label>{A, I, I, R, I});
    CHECK_THROWS_AS(best_worst_labels(std::vector<double>{1.0}), InputError);
  }

  TEST_CASE("labeled sets build disjoint batches") {
    const std::vector<std::size_t> ys = {7, 7, 8, 9};
    const auto set = label_samples(0, ys, {1.0, 0.0, 3.0, 2.0}, TopK{2});
    CHECK(set.accepted() == std::vector<std::size_t>{8, 9});
    CHECK(set.rejected() == std::vector<std::size_t>{7, 7});
    const auto batch = set.to_batch();
    CHECK(batch.accepted.size() + batch.rejected.size() == ys.size());
    CHECK(batch.scores->size() == 4);
    CHECK_THROWS_AS(label_samples(0, ys, {1.0, 2.0}, TopK{2}), InputError);
    CHECK_THROWS_AS(label_samples(0, ys, {1.0, 0.0, 3.0, 2.0}, AdvantageSign{}), InputError);
  }

  TEST_CASE("advantage labels need a strictly positive advantage") {
    const std::vector<Transition> data = {{1, 0, 2.0}, {0, 1, 1.0}, {1, 2, 1.0}, {0, 3, 0.5}};
    const StateValueTable v = {0.5, 1.0};
    const auto sets = label_advantage(data, v);
    REQUIRE(sets.size() == 2);
    CHECK(sets[0].condition == 0);
    CHECK(sets[0].labels == std::vector<Label>{A, R});
    CHECK(sets[0].f_values == std::vector<double>{0.5, 0.0});
    CHECK(sets[1].labels == std::vector<Label>{A, R});
  }

  TEST_CASE("advantage labels need a value for every condition") {
    const std::vector<Transition> data = {{2, 0, 1.0}};
    CHECK_THROWS_AS(label_advantage(data, StateValueTable{0.0, 0.0}), InputError);
    CHECK_THROWS_AS(label_advantage(data, StateValueTable{0.0, 0.0, std::nan("")}), InputError);
  }

  TEST_CASE("jsonl output marks ignored samples with null") {
    const auto set = label_samples(3, std::vector<std::size_t>{0, 1, 2}, {1.0, 2.0, 0.0}, BestWorstOnly{});
    std::ostringstream out;
    std::vector<LabeledSampleSet<std::size_t>> sets = {set};
    write_labeled_jsonl<std::size_t>(out, sets);
    CHECK(out.str() ==
          "{\"condition\":3,\"f\":1.0,\"label\":null,\"output\":0}\n"
          "{\"condition\":3,\"f\":2.0,\"label\":1,\"output\":1}\n"
          "{\"condition\":3,\"f\":0.0,\"label\":0,\"output\":2}\n");
  }
}
