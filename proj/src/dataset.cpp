#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "tpcl/dataset.hpp"

namespace tpcl {

using json = nlohmann::json;

void finalize_dataset(Dataset& dataset, int min_labels) {
  int max_label = -1;
  std::optional<std::size_t> width;
  for (const auto& s : dataset.samples) {
    if (s.answer.empty())
      throw ValidationError("sample " + std::to_string(s.id) + " has no positive answer");
    for (int a : s.answer) {
      if (a < 0) throw ValidationError("sample " + std::to_string(s.id) + " has a negative answer index");
      max_label = std::max(max_label, a);
    }
    if (!s.answer_counts.empty() && s.answer_counts.size() != s.answer.size())
      throw ValidationError("sample " + std::to_string(s.id) + ": answer_counts length differs from answer");
    if (s.task < 0) throw ValidationError("sample " + std::to_string(s.id) + " has a negative task type");
    if (!width) width = s.features.size();
    if (s.features.size() != *width)
      throw ValidationError("sample " + std::to_string(s.id) + " has " + std::to_string(s.features.size()) +
                            " features, expected " + std::to_string(*width));
  }
  dataset.num_labels = std::max({dataset.num_labels, max_label + 1, min_labels});
  if (width) {
    if (dataset.feature_dim != 0 && static_cast<std::size_t>(dataset.feature_dim) != *width)
      throw ValidationError("feature dimension mismatch: dataset declares " +
                            std::to_string(dataset.feature_dim) + ", samples carry " + std::to_string(*width));
    dataset.feature_dim = static_cast<int>(*width);
  }
}

std::size_t TaskPartition::task_size(TaskId task) const {
  auto it = tasks.find(task);
  return it == tasks.end() ? 0 : it->second.size();
}

TaskPartition partition_by_type(std::span<const Sample> samples) {
  TaskPartition partition;
  std::unordered_set<SampleId> seen;
  seen.reserve(samples.size());
  for (const auto& s : samples) {
    if (!seen.insert(s.id).second) throw ValidationError("duplicate sample_id " + std::to_string(s.id));
    if (s.task < 0) throw ValidationError("sample " + std::to_string(s.id) + " has a negative task type");
    partition.tasks[s.task].push_back(s.id);
  }
  partition.total = samples.size();
  return partition;
}

const std::vector<TaskId>& CoarseGroups::of(CoarseGroup group) const {
  for (std::size_t i = 0; i < kFixedCurriculumOrder.size(); ++i)
    if (kFixedCurriculumOrder[i] == group) return tasks[i];
  return tasks.back();
}

namespace {
std::size_t order_slot(CoarseGroup group) {
  for (std::size_t i = 0; i < kFixedCurriculumOrder.size(); ++i)
    if (kFixedCurriculumOrder[i] == group) return i;
  return kFixedCurriculumOrder.size() - 1;
}
}  // namespace

CoarseGroups coarse_partition(const TaskPartition& partition, const TypeLexicon& lexicon) {
  CoarseGroups groups;
  for (const auto& [task, ids] : partition.tasks) {
    if (!lexicon.contains(task))
      throw ValidationError("task type " + std::to_string(task) + " is not in the lexicon");
  }
  // Lexicon order, not id order, within each group.
  for (const auto& e : lexicon.entries())
    if (partition.tasks.count(e.type_id)) groups.tasks[order_slot(e.group)].push_back(e.type_id);
  return groups;
}

CoarseGroups coarse_partition(const TypeLexicon& lexicon) {
  CoarseGroups groups;
  for (const auto& e : lexicon.entries()) groups.tasks[order_slot(e.group)].push_back(e.type_id);
  return groups;
}

std::vector<Sample> subsample_stratified(std::span<const Sample> samples, double fraction,
                                         std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("data fraction must lie in (0, 1]");
  std::map<TaskId, std::vector<std::size_t>> by_task;
  for (std::size_t i = 0; i < samples.size(); ++i) by_task[samples[i].task].push_back(i);
  std::vector<char> keep(samples.size(), 0);
  for (auto& [task, idx] : by_task) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(task), 0x5ab5));
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(idx.size()) - 1e-9));
    for (std::size_t k = 0; k < n; ++k) keep[idx[k]] = 1;
  }
  std::vector<Sample> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (keep[i]) out.push_back(samples[i]);
  return out;
}

// ---------------------------------------------------------------------------
// JSON Lines
// ---------------------------------------------------------------------------

std::string samples_to_jsonl(std::span<const Sample> samples) {
  std::string out;
  for (const auto& s : samples) {
    json line = {{"sample_id", s.id}, {"features", s.features}, {"answer", s.answer}, {"task_type", s.task}};
    if (!s.answer_counts.empty()) line["answer_counts"] = s.answer_counts;
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::vector<Sample> samples_from_jsonl(std::string_view text) {
  std::vector<Sample> samples;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      auto doc = json::parse(line);
      Sample s;
      s.id = doc.at("sample_id").get<SampleId>();
      s.features = doc.at("features").get<std::vector<double>>();
      s.answer = doc.at("answer").get<std::vector<int>>();
      std::sort(s.answer.begin(), s.answer.end());
      if (doc.contains("answer_counts")) s.answer_counts = doc.at("answer_counts").get<std::vector<int>>();
      s.task = doc.at("task_type").get<TaskId>();
      samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": malformed sample: " + e.what());
    }
  }
  return samples;
}

void write_samples(const std::filesystem::path& path, std::span<const Sample> samples) {
  write_file_atomic(path, samples_to_jsonl(samples));
}

std::vector<Sample> read_samples(const std::filesystem::path& path) {
  try {
    return samples_from_jsonl(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Annotation ingestion
// ---------------------------------------------------------------------------

AnnotationSet annotations_from_json(std::string_view text, const TypeLexicon& lexicon, int min_answer_count) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("annotations: ") + e.what());
  }
  if (!doc.is_array()) throw ValidationError("annotations: expected a JSON array");

  struct Raw {
    SampleId id;
    TaskId task;
    std::string answer;
  };
  std::vector<Raw> raw;
  std::map<std::string, int> frequency;
  std::size_t index = 0;
  for (const auto& item : doc) {
    try {
      Raw r;
      r.id = item.at("question_id").get<SampleId>();
      std::optional<TaskId> task;
      if (item.contains("question_type") && item.at("question_type").is_string())
        task = lexicon.find_prefix(normalize_question(item.at("question_type").get<std::string>()));
      if (!task) task = infer_question_type(item.at("question").get<std::string>(), lexicon);
      r.task = *task;
      r.answer = item.at("multiple_choice_answer").get<std::string>();
      ++frequency[r.answer];
      raw.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ValidationError("annotation " + std::to_string(index) + ": " + e.what());
    }
    ++index;
  }

  AnnotationSet out;
  std::map<std::string, int> vocab_index;
  for (const auto& [answer, count] : frequency) {
    if (count >= min_answer_count) {
      vocab_index[answer] = static_cast<int>(out.vocabulary.size());
      out.vocabulary.push_back(answer);
    }
  }
  for (const auto& r : raw) {
    auto it = vocab_index.find(r.answer);
    if (it == vocab_index.end()) {
      ++out.dropped;
      continue;
    }
    Sample s;
    s.id = r.id;
    s.task = r.task;
    s.answer = {it->second};
    out.samples.push_back(std::move(s));
  }
  return out;
}

AnnotationSet load_annotations(const std::filesystem::path& path, const TypeLexicon& lexicon,
                               int min_answer_count) {
  return annotations_from_json(read_file(path), lexicon, min_answer_count);
}

}  // namespace tpcl

namespace tpcl {

std::string partition_to_json(const TaskPartition& partition, const TypeLexicon& lexicon) {
  json tasks = json::array();
  for (const auto& [task, ids] : partition.tasks) {
    json t = {{"task", task}, {"samples", ids}};
    if (lexicon.contains(task)) {
      t["type"] = lexicon.at(task).prefix;
      t["group"] = std::string(to_string(lexicon.at(task).group));
    }
    tasks.push_back(std::move(t));
  }
  json j = {{"schema_version", kSchemaVersion}, {"total", partition.total}, {"tasks", std::move(tasks)}};
  j["checksum"] = checksum_hex(j.dump());
  return j.dump(2) + "\n";
}

TaskPartition partition_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("partition: ") + e.what());
  }
  if (j.value("schema_version", -1) != kSchemaVersion) throw IntegrityError("partition: unsupported schema_version");
  const auto stored = j.value("checksum", std::string{});
  j.erase("checksum");
  if (stored != checksum_hex(j.dump())) throw IntegrityError("partition: checksum mismatch");
  TaskPartition p;
  for (const auto& t : j.at("tasks")) {
    auto ids = t.at("samples").get<std::vector<SampleId>>();
    p.total += ids.size();
    p.tasks.emplace(t.at("task").get<TaskId>(), std::move(ids));
  }
  if (p.total != j.at("total").get<std::size_t>()) throw IntegrityError("partition: total does not match task sizes");
  return p;
}

}  // namespace tpcl
