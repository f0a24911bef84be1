#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tpcl/common.hpp"

namespace tpcl {

// ---------------------------------------------------------------------------
// Question-type lexicon
// ---------------------------------------------------------------------------

enum class CoarseGroup { Wh, YesNo, Number, Other };

// Order in which the fixed linguistic curriculum presents the coarse groups.
inline constexpr std::array<CoarseGroup, 4> kFixedCurriculumOrder = {
    CoarseGroup::Wh, CoarseGroup::YesNo, CoarseGroup::Other, CoarseGroup::Number};

std::string_view to_string(CoarseGroup group);
CoarseGroup coarse_group_from_string(std::string_view name);

struct LexiconEntry {
  TaskId type_id = 0;
  std::string prefix;
  CoarseGroup group = CoarseGroup::Other;
};

inline constexpr std::string_view kFallbackPrefix = "none of the above";

// Ordered set of question-type prefixes. Type ids are positions in the list.
class TypeLexicon {
 public:
  TypeLexicon() = default;
  // Throws ValidationError on duplicate or empty prefixes.
  explicit TypeLexicon(std::vector<LexiconEntry> entries);

  // The 65 VQA-CP question types in fixed-curriculum order.
  static const TypeLexicon& default_lexicon();

  static TypeLexicon from_json(std::string_view text);
  static TypeLexicon load(const std::filesystem::path& path);
  std::string to_json() const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<LexiconEntry>& entries() const { return entries_; }
  const LexiconEntry& at(TaskId id) const;
  bool contains(TaskId id) const { return id >= 0 && static_cast<std::size_t>(id) < entries_.size(); }

  std::optional<TaskId> find_prefix(std::string_view prefix) const;
  std::optional<TaskId> fallback_id() const { return fallback_; }

  // Lexicon restricted to entries of one group; ids are renumbered.
  TypeLexicon filtered(CoarseGroup group) const;

 private:
  std::vector<LexiconEntry> entries_;
  std::map<std::string, TaskId, std::less<>> by_prefix_;
  std::optional<TaskId> fallback_;
};

// Lowercases, collapses whitespace runs to one space, strips leading
// punctuation and whitespace.
std::string normalize_question(std::string_view text);

// Longest lexicon prefix that matches the normalized question on a word
// boundary; the fallback entry when nothing matches. Throws ValidationError
// when nothing matches and the lexicon has no fallback entry.
TaskId infer_question_type(std::string_view question_text, const TypeLexicon& lexicon);

// ---------------------------------------------------------------------------
// Samples and partitions
// ---------------------------------------------------------------------------

struct Sample {
  SampleId id = 0;
  std::vector<double> features;
  // Indices of the positive entries of the multi-hot answer vector, ascending.
  std::vector<int> answer;
  // Optional annotator agreement count per entry of `answer`.
  std::vector<int> answer_counts;
  TaskId task = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  int num_labels = 0;
  int feature_dim = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Validates shapes and infers num_labels/feature_dim when they are zero.
void finalize_dataset(Dataset& dataset, int min_labels = 0);

struct TaskPartition {
  std::map<TaskId, std::vector<SampleId>> tasks;
  std::size_t total = 0;

  std::size_t task_size(TaskId task) const;
};

// Throws ValidationError on duplicate sample ids or negative task ids.
TaskPartition partition_by_type(std::span<const Sample> samples);

// {"schema_version","total","tasks":[{"task","type","group","samples"}],"checksum"}
std::string partition_to_json(const TaskPartition& partition, const TypeLexicon& lexicon);
// Verifies version and checksum.
TaskPartition partition_from_json(std::string_view text);

struct CoarseGroups {
  // Indexed by position in kFixedCurriculumOrder.
  std::array<std::vector<TaskId>, 4> tasks;

  const std::vector<TaskId>& of(CoarseGroup group) const;
};

// Task ids of the partition bucketed by coarse group, in lexicon order.
CoarseGroups coarse_partition(const TaskPartition& partition, const TypeLexicon& lexicon);

// Coarse grouping of every lexicon entry, regardless of data.
CoarseGroups coarse_partition(const TypeLexicon& lexicon);

// Keeps ceil(fraction * n_task) samples per task, chosen by a seeded shuffle;
// relative order of kept samples is preserved.
std::vector<Sample> subsample_stratified(std::span<const Sample> samples, double fraction,
                                         std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic prior-shift benchmark
// ---------------------------------------------------------------------------

enum class PriorShift { None, Reversed };

struct SyntheticSpec {
  int num_tasks = 8;
  int samples_per_task = 2000;
  int test_samples_per_task = 500;
  // Total feature width: task one-hot + informative block + spurious feature.
  int feature_dim = 24;
  int labels_per_task = 3;
  double bias_strength = 0.9;
  PriorShift prior_shift = PriorShift::Reversed;
  // Std-dev of the Gaussian noise on the informative block, scaled per task
  // from informative_noise * (1 - noise_spread) to informative_noise * (1 + noise_spread).
  double informative_noise = 1.0;
  double noise_spread = 0.5;
  double spurious_scale = 1.0;
  std::uint64_t seed = 0;

  int num_labels() const { return num_tasks * labels_per_task; }
  int informative_dim() const { return feature_dim - num_tasks - 1; }
  void validate() const;
};

struct SyntheticData {
  Dataset train;
  Dataset test_id;
  Dataset test_ood;
  // Training-majority label of each task.
  std::vector<int> majority_label;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

std::string to_string(PriorShift shift);
PriorShift prior_shift_from_string(std::string_view name);

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

// JSON Lines: {"sample_id", "features", "answer", "task_type"[, "answer_counts"]}.
std::string samples_to_jsonl(std::span<const Sample> samples);
std::vector<Sample> samples_from_jsonl(std::string_view text);
void write_samples(const std::filesystem::path& path, std::span<const Sample> samples);
std::vector<Sample> read_samples(const std::filesystem::path& path);

struct AnnotationSet {
  std::vector<Sample> samples;
  std::vector<std::string> vocabulary;
  std::size_t dropped = 0;  // answers below the frequency floor
};

// JSON array of {"question_id", "question", ["question_type"], "multiple_choice_answer"}.
// Answers seen fewer than `min_answer_count` times are outside the vocabulary
// and their questions are dropped.
AnnotationSet annotations_from_json(std::string_view text, const TypeLexicon& lexicon,
                                    int min_answer_count = 9);
AnnotationSet load_annotations(const std::filesystem::path& path, const TypeLexicon& lexicon,
                               int min_answer_count = 9);

}  // namespace tpcl
