#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "tpcl/dataset.hpp"

using namespace tpcl;

namespace {
Sample make(SampleId id, TaskId task, int label = 0) {
  Sample s;
  s.id = id;
  s.task = task;
  s.features = {1.0, 0.5};
  s.answer = {label};
  return s;
}
}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("partition by type groups samples and keeps order") {
    std::vector<Sample> samples = {make(10, 2), make(11, 0), make(12, 2), make(13, 5)};
    const auto p = partition_by_type(samples);
    CHECK(p.total == 4);
    CHECK(p.tasks.size() == 3);
    CHECK(p.tasks.at(2) == std::vector<SampleId>{10, 12});
    CHECK(p.task_size(5) == 1);
    CHECK(p.task_size(7) == 0);
  }

  TEST_CASE("duplicate ids and negative tasks are rejected") {
    std::vector<Sample> dup = {make(1, 0), make(1, 1)};
    CHECK_THROWS_AS(partition_by_type(dup), ValidationError);
    std::vector<Sample> neg = {make(1, -1)};
    CHECK_THROWS_AS(partition_by_type(neg), ValidationError);
  }

  TEST_CASE("coarse partition buckets data tasks in lexicon order") {
    const auto& lex = TypeLexicon::default_lexicon();
    const TaskId how_many = *lex.find_prefix("how many");
    const TaskId what = *lex.find_prefix("what");
    const TaskId what_color = *lex.find_prefix("what color is the");
    std::vector<Sample> samples = {make(1, how_many), make(2, what), make(3, what_color)};
    const auto groups = coarse_partition(partition_by_type(samples), lex);
    CHECK(groups.of(CoarseGroup::Wh) == std::vector<TaskId>{what_color, what});
    CHECK(groups.of(CoarseGroup::Number) == std::vector<TaskId>{how_many});
    CHECK(groups.of(CoarseGroup::YesNo).empty());
  }

  TEST_CASE("partition json round trip and tamper detection") {
    std::vector<Sample> samples = {make(1, 0), make(2, 3), make(3, 0)};
    const auto p = partition_by_type(samples);
    const auto text = partition_to_json(p, TypeLexicon::default_lexicon());
    const auto back = partition_from_json(text);
    CHECK(back.tasks == p.tasks);
    CHECK(back.total == p.total);
    auto bad = text;
    bad.replace(bad.find("\"total\": 3"), 10, "\"total\": 4");
    CHECK_THROWS_AS(partition_from_json(bad), IntegrityError);
  }

  TEST_CASE("stratified subsample keeps ceil(f * n) per task") {
    std::vector<Sample> samples;
    for (int i = 0; i < 10; ++i) samples.push_back(make(i, 0));
    for (int i = 10; i < 13; ++i) samples.push_back(make(i, 1));
    const auto sub = subsample_stratified(samples, 0.5, 7);
    const auto p = partition_by_type(sub);
    CHECK(p.task_size(0) == 5);
    CHECK(p.task_size(1) == 2);
    for (std::size_t i = 1; i < sub.size(); ++i) CHECK(sub[i - 1].id < sub[i].id);
    CHECK(subsample_stratified(samples, 0.5, 7).size() == sub.size());
    CHECK_THROWS_AS(subsample_stratified(samples, 0.0, 7), ValidationError);
  }

  TEST_CASE("jsonl round trip") {
    std::vector<Sample> samples = {make(1, 0, 2), make(2, 1, 0)};
    samples[0].features = {0.1, 1e-17, -3.25};
    samples[0].answer = {0, 2};
    samples[0].answer_counts = {1, 3};
    const auto back = samples_from_jsonl(samples_to_jsonl(samples));
    REQUIRE(back.size() == 2);
    CHECK(back[0].features == samples[0].features);
    CHECK(back[0].answer == samples[0].answer);
    CHECK(back[0].answer_counts == samples[0].answer_counts);
    CHECK(back[1].task == 1);
  }

  TEST_CASE("malformed jsonl names the line") {
    const std::string text =
        "{\"sample_id\":1,\"features\":[1],\"answer\":[0],\"task_type\":0}\n{\"sample_id\":2,\"features\":[1]}\n";
    try {
      samples_from_jsonl(text);
      FAIL("expected an error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }

  TEST_CASE("finalize dataset checks feature widths and label range") {
    Dataset d;
    d.samples = {make(1, 0, 4), make(2, 0, 1)};
    finalize_dataset(d);
    CHECK(d.num_labels == 5);
    CHECK(d.feature_dim == 2);
    d.samples[1].features = {1.0};
    CHECK_THROWS_AS(finalize_dataset(d), ValidationError);
  }

  TEST_CASE("annotations apply the answer frequency floor") {
    std::string text = "[";
    for (int i = 0; i < 12; ++i) {
      if (i) text += ",";
      const char* answer = i < 10 ? "yes" : "blue";
      const char* q = i < 10 ? "Is this a dog?" : "What color is the car?";
      text += "{\"question_id\":" + std::to_string(i) + ",\"question\":\"" + q +
              "\",\"multiple_choice_answer\":\"" + answer + "\"}";
    }
    text += "]";
    const auto& lex = TypeLexicon::default_lexicon();
    const auto set = annotations_from_json(text, lex, 9);
    CHECK(set.samples.size() == 10);
    CHECK(set.dropped == 2);
    CHECK(set.vocabulary == std::vector<std::string>{"yes"});
    CHECK(set.samples[0].task == *lex.find_prefix("is this a"));
    const auto all = annotations_from_json(text, lex, 1);
    CHECK(all.samples.size() == 12);
    CHECK(all.vocabulary.size() == 2);
  }

  TEST_CASE("explicit question_type wins over inference") {
    const std::string text =
        "[{\"question_id\":1,\"question\":\"Is this a dog?\",\"question_type\":\"what\",\"multiple_choice_answer\":\"x\"}]";
    const auto& lex = TypeLexicon::default_lexicon();
    const auto set = annotations_from_json(text, lex, 1);
    REQUIRE(set.samples.size() == 1);
    CHECK(set.samples[0].task == *lex.find_prefix("what"));
  }
}
