#include <cmath>
#include <map>

#include "doctest.h"
#include "support.hpp"
#include "tpcl/dataset.hpp"

using namespace tpcl;

namespace {

double majority_accuracy(const Dataset& split, const std::vector<int>& majority) {
  std::size_t hit = 0;
  for (const auto& s : split.samples) hit += s.answer.front() == majority[static_cast<std::size_t>(s.task)];
  return static_cast<double>(hit) / static_cast<double>(split.size());
}

// Nearest class mean over the informative block, restricted to the task's labels.
struct NearestMean {
  std::map<int, std::vector<double>> mean;
  int T, L, K;
  NearestMean(const Dataset& train, const SyntheticSpec& spec)
      : T(spec.num_tasks), L(spec.labels_per_task), K(spec.informative_dim()) {
    std::map<int, int> count;
    for (const auto& s : train.samples) {
      auto& m = mean[s.answer.front()];
      m.resize(static_cast<std::size_t>(K), 0.0);
      for (int k = 0; k < K; ++k) m[static_cast<std::size_t>(k)] += s.features[static_cast<std::size_t>(T + k)];
      ++count[s.answer.front()];
    }
    for (auto& [label, m] : mean)
      for (auto& v : m) v /= count[label];
  }
  double accuracy(const Dataset& split) const {
    std::size_t hit = 0;
    for (const auto& s : split.samples) {
      int best = -1;
      double best_d = 0.0;
      for (int l = 0; l < L; ++l) {
        const int label = s.task * L + l;
        double d = 0.0;
        for (int k = 0; k < K; ++k) {
          const double diff = s.features[static_cast<std::size_t>(T + k)] - mean.at(label)[static_cast<std::size_t>(k)];
          d += diff * diff;
        }
        if (best < 0 || d < best_d) best = label, best_d = d;
      }
      hit += best == s.answer.front();
    }
    return static_cast<double>(hit) / static_cast<double>(split.size());
  }
};

}  // namespace

TEST_SUITE("synthetic") {
  TEST_CASE("shape, layout and label disjointness") {
    auto spec = testing::tiny_spec();
    const auto d = generate_synthetic(spec);
    CHECK(d.train.size() == 240);
    CHECK(d.test_id.size() == 120);
    CHECK(d.test_ood.size() == 120);
    CHECK(d.train.num_labels == 12);
    for (const auto& s : d.train.samples) {
      REQUIRE(s.features.size() == 12u);
      for (int t = 0; t < 4; ++t) CHECK(s.features[static_cast<std::size_t>(t)] == (t == s.task ? 1.0 : 0.0));
      REQUIRE(s.answer.size() == 1);
      CHECK(s.answer.front() / 3 == s.task);
      // spurious cue marks the training majority exactly
      CHECK((s.features.back() > 0.0) == (s.answer.front() == d.majority_label[static_cast<std::size_t>(s.task)]));
    }
  }

  TEST_CASE("deterministic given the seed") {
    const auto a = generate_synthetic(testing::tiny_spec(5));
    const auto b = generate_synthetic(testing::tiny_spec(5));
    const auto c = generate_synthetic(testing::tiny_spec(6));
    CHECK(samples_to_jsonl(a.train.samples) == samples_to_jsonl(b.train.samples));
    CHECK(samples_to_jsonl(a.test_ood.samples) == samples_to_jsonl(b.test_ood.samples));
    CHECK(samples_to_jsonl(a.train.samples) != samples_to_jsonl(c.train.samples));
  }

  TEST_CASE("majority frequency tracks bias strength within 2%") {
    SyntheticSpec spec;
    spec.samples_per_task = 2000;
    spec.bias_strength = 0.9;
    const auto d = generate_synthetic(spec);
    std::map<int, int> majority, total;
    for (const auto& s : d.train.samples) {
      ++total[s.task];
      majority[s.task] += s.answer.front() == d.majority_label[static_cast<std::size_t>(s.task)];
    }
    for (const auto& [task, n] : total) CHECK(std::abs(static_cast<double>(majority[task]) / n - 0.9) <= 0.02);
  }

  TEST_CASE("full bias: constant majority predictor is perfect in-distribution and fails OOD") {
    SyntheticSpec spec;
    spec.bias_strength = 1.0;
    spec.prior_shift = PriorShift::Reversed;
    spec.samples_per_task = 300;
    const auto d = generate_synthetic(spec);
    CHECK(majority_accuracy(d.test_id, d.majority_label) >= 0.99);
    CHECK(majority_accuracy(d.test_ood, d.majority_label) <= 0.01);
  }

  TEST_CASE("uniform prior: informative-only classifier agrees on ID and OOD") {
    SyntheticSpec spec;
    spec.bias_strength = 1.0 / 3.0;
    spec.samples_per_task = 2000;
    spec.test_samples_per_task = 1000;
    const auto d = generate_synthetic(spec);
    const NearestMean oracle(d.train, spec);
    const double id = oracle.accuracy(d.test_id);
    const double ood = oracle.accuracy(d.test_ood);
    // both splits hold 8000 samples: binomial sd ~ 0.005 each
    CHECK(id > 0.5);
    CHECK(std::abs(id - ood) <= 0.03);
  }

  TEST_CASE("OOD spurious cue is independent of the label") {
    SyntheticSpec spec;
    spec.samples_per_task = 200;
    spec.test_samples_per_task = 2000;
    const auto d = generate_synthetic(spec);
    std::map<bool, std::pair<int, int>> by_cue;  // cue -> (majority hits, count)
    for (const auto& s : d.test_ood.samples) {
      auto& e = by_cue[s.features.back() > 0.0];
      e.first += s.answer.front() == d.majority_label[static_cast<std::size_t>(s.task)];
      ++e.second;
    }
    const double p1 = static_cast<double>(by_cue[true].first) / by_cue[true].second;
    const double p0 = static_cast<double>(by_cue[false].first) / by_cue[false].second;
    CHECK(std::abs(p1 - p0) < 0.05);
  }

  TEST_CASE("spec validation") {
    SyntheticSpec spec;
    spec.num_tasks = 1;
    CHECK_THROWS_AS(generate_synthetic(spec), ValidationError);
    spec = SyntheticSpec{};
    spec.bias_strength = 1.5;
    CHECK_THROWS_AS(generate_synthetic(spec), ValidationError);
    spec = SyntheticSpec{};
    spec.feature_dim = spec.num_tasks + 1;
    CHECK_THROWS_AS(generate_synthetic(spec), ValidationError);
  }
}
