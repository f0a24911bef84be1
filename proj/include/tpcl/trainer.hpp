#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tpcl/dataset.hpp"
#include "tpcl/difficulty.hpp"

namespace tpcl {

// Linear multi-label classifier: logit_k = bias_k + <weights_k, x>.
struct ToyModel {
  int features = 0;
  int labels = 0;
  std::vector<double> weights;  // labels x features, row-major
  std::vector<double> bias;     // labels

  ToyModel() = default;
  ToyModel(int features, int labels);

  double weight(int label, int feature) const {
    return weights[static_cast<std::size_t>(label) * static_cast<std::size_t>(features) +
                   static_cast<std::size_t>(feature)];
  }
  void logits(std::span<const double> x, std::span<double> out) const;
  int predict(std::span<const double> x) const;
  bool operator==(const ToyModel&) const = default;
};

// Mean over labels of the sigmoid cross-entropy against the multi-hot answer.
double sample_loss(const ToyModel& model, const Sample& sample);

// Mean sample loss over `batch` and its gradient (same shape as the model).
struct LossAndGradient {
  double loss = 0.0;
  ToyModel gradient;
};
LossAndGradient loss_and_gradient(const ToyModel& model, std::span<const Sample* const> batch);

struct TrainConfig {
  double learning_rate = 0.05;
  int batch_size = 64;
  std::uint64_t seed = 0;
  int passes_per_cycle = 1;

  void validate() const;
};

// One cycle of mini-batch gradient descent over `indices` (positions in
// `data`). The shuffle stream is derived from (seed, iteration, cycle), so a
// resumed run replays identically. Returns the mean mini-batch loss.
double train_cycle(ToyModel& model, const Dataset& data, std::span<const std::size_t> indices,
                   const TrainConfig& cfg, int iteration, int cycle);

// Loss of every sample in `data`, in dataset order.
LossReport score_all(const ToyModel& model, const Dataset& data, int iteration, int cycle);

struct EvalResult {
  std::string split;
  std::size_t count = 0;
  double overall = 0.0;
  // Indexed by CoarseGroup; groups without samples report 0 accuracy.
  std::array<double, 4> group_accuracy{};
  std::array<std::size_t, 4> group_count{};
  std::optional<double> vqa_score;
};

// Top-1 accuracy overall and per coarse group (tasks outside the lexicon
// count as Other). When samples carry annotator counts, also the mean
// min(n_a / 3, 1) score.
EvalResult evaluate(const ToyModel& model, const Dataset& split, const TypeLexicon& lexicon,
                    std::string split_name = "eval");

double vqa_score(int matching_annotators);

// {"schema_version","features","labels","weights","bias","checksum"}
std::string model_to_json(const ToyModel& model);
ToyModel model_from_json(std::string_view text);
void save_model(const std::filesystem::path& path, const ToyModel& model);
ToyModel load_model(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Trainer contract used by the scheduler
// ---------------------------------------------------------------------------

inline constexpr int kWarmupStage = -1;

struct CycleRequest {
  int iteration = 0;  // 0 = warm-up, k + 1 = curriculum stage k
  int stage = kWarmupStage;
  int cycle = 1;  // 1-based within the iteration
  std::span<const SampleId> samples;
};

class TrainerClient {
 public:
  virtual ~TrainerClient() = default;
  // Train one cycle on exactly the requested samples.
  virtual void train(const CycleRequest& request) = 0;
  // Score every sample of the full training set after the last train().
  virtual LossReport score(const CycleRequest& request) = 0;
};

struct MetricsRow {
  int stage = kWarmupStage;
  int cycle = 1;
  std::string split;
  double overall = 0.0;
  std::array<double, 4> group_accuracy{};
  double mean_train_loss = 0.0;
  double wall_ms = 0.0;
};

// The in-process linear trainer. Evaluates the attached splits after every
// training cycle and records one MetricsRow per split.
class EmbeddedTrainer : public TrainerClient {
 public:
  EmbeddedTrainer(const Dataset& train, TrainConfig cfg, const TypeLexicon& lexicon);

  void attach_eval_split(std::string name, const Dataset& split);

  void train(const CycleRequest& request) override;
  LossReport score(const CycleRequest& request) override;

  // Trains on arbitrary dataset positions (vanilla runs).
  void train_positions(std::span<const std::size_t> positions, int iteration, int stage, int cycle);

  const ToyModel& model() const { return model_; }
  void set_model(ToyModel model);
  const std::vector<MetricsRow>& metrics() const { return metrics_; }
  void clear_metrics() { metrics_.clear(); }
  void set_metrics(std::vector<MetricsRow> rows) { metrics_ = std::move(rows); }
  std::vector<EvalResult> evaluate_all() const;
  const TrainConfig& config() const { return cfg_; }

 private:
  const Dataset& train_;
  TrainConfig cfg_;
  const TypeLexicon& lexicon_;
  ToyModel model_;
  std::unordered_map<SampleId, std::size_t> position_;
  std::vector<std::pair<std::string, const Dataset*>> eval_splits_;
  std::vector<MetricsRow> metrics_;
};

}  // namespace tpcl
