#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tpcl/dataset.hpp"
#include "tpcl/scheduler.hpp"
#include "tpcl/trainer.hpp"

namespace tpcl {

enum class ArmKind { Vanilla, Fixed, Dynamic };

struct ArmSpec {
  std::string name;
  ArmKind kind = ArmKind::Dynamic;
  Direction direction = Direction::HardToEasy;
  DifficultyMode difficulty = DifficultyMode::Distributional;
};

// vanilla | fixed | dynamic (= dynamic_hard_to_easy) | dynamic_easy_to_hard | simple (mean difficulty)
ArmSpec parse_arm(std::string_view name);

struct RunConfig {
  std::optional<SyntheticSpec> synthetic;
  std::filesystem::path train_path;
  std::filesystem::path test_id_path;
  std::filesystem::path test_ood_path;
  std::filesystem::path lexicon_path;  // empty = built-in default
  SchedulerConfig scheduler;
  TrainConfig train;
  std::vector<std::string> arms = {"vanilla", "dynamic"};
  std::vector<double> data_fractions = {1.0};
  int replicates = 1;
  std::uint64_t seed = 0;
  std::string trainer_mode = "embedded";  // embedded | external
  std::filesystem::path output_dir;

  // Exactly one data source, valid sub-configs.
  void validate() const;
  // Seed of replicate `i`, derived from the master seed.
  std::uint64_t replicate_seed(int i) const;
};

std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(std::string_view text);

// The standard desk-scale prior-shift benchmark: 8 tasks x 2000 samples,
// 3 labels per task, bias 0.9, reversed OOD prior.
SyntheticSpec standard_synthetic_spec();
RunConfig standard_run_config();

struct LoadedData {
  Dataset train;
  Dataset test_id;
  Dataset test_ood;
};

// Generates (synthetic, with the replicate seed) or reads the splits, then
// applies the stratified data fraction to the training split.
LoadedData load_run_data(const RunConfig& cfg, std::uint64_t replicate_seed, double data_fraction);

struct RunOutcome {
  std::string arm;
  double data_fraction = 1.0;
  std::uint64_t seed = 0;
  double id_accuracy = 0.0;
  double ood_accuracy = 0.0;
  std::vector<CurriculumStage> stages;
  std::vector<MetricsRow> metrics;
  ToyModel model;
  std::filesystem::path directory;
  bool complete = true;
};

struct ArmOptions {
  // When set, manifests, difficulty exports, metrics, checkpoints and the
  // resumable state are written here.
  std::optional<std::filesystem::path> run_dir;
  // Dynamic arms only: stop after this many curriculum stages were trained.
  std::optional<int> stop_after_stage;
};

RunOutcome run_arm(const ArmSpec& arm, const LoadedData& data, const RunConfig& cfg, std::uint64_t seed,
                   double data_fraction, const ArmOptions& options = {});

// Continues an interrupted dynamic run in `run_dir`. Returns the outcome;
// `complete` is already true on entry when the run had finished (no-op).
RunOutcome resume_run(const std::filesystem::path& run_dir, bool* was_complete = nullptr);

// Reads run_dir/state.json, checks version and checksum; returns it without
// the checksum field. Throws IntegrityError.
std::string verified_run_state(const std::filesystem::path& run_dir);

struct ArmSummary {
  std::string key;  // arm name, with "@fraction" when below 1
  std::string arm;
  double data_fraction = 1.0;
  int runs = 0;
  double median_id = 0.0;
  double median_ood = 0.0;
};

struct SimulationSummary {
  std::uint64_t seed = 0;
  std::vector<RunOutcome> runs;
  std::vector<ArmSummary> arms;
};

std::vector<ArmSummary> summarize(const std::vector<RunOutcome>& runs);
std::string summary_to_json(const SimulationSummary& summary);

// Runs every arm x data fraction x replicate with the embedded trainer. When
// cfg.output_dir is set, writes the run directory tree and summary.json.
SimulationSummary simulate(const RunConfig& cfg,
                           const std::function<void(const RunOutcome&)>& on_run = {});

double median(std::vector<double> values);

// ---------------------------------------------------------------------------
// Metrics and reports
// ---------------------------------------------------------------------------

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);
MetricsRow parse_metrics_row(const std::string& line);
std::string metrics_csv(const std::vector<MetricsRow>& rows);
// First `rows` data rows of a metrics.csv; IntegrityError when there are fewer.
std::vector<MetricsRow> read_metrics_rows(const std::filesystem::path& path, std::size_t rows);

struct ReportResult {
  std::size_t rows = 0;
  std::vector<std::string> warnings;
  std::filesystem::path csv_path;
  std::filesystem::path markdown_path;
};

// Gathers every runs/<arm>/seed_<s>/metrics.csv under `run_root` into one
// tidy CSV and writes a markdown comparison table with an OOD delta column.
ReportResult write_report(const std::filesystem::path& run_root,
                          std::optional<std::filesystem::path> out_dir = std::nullopt);

}  // namespace tpcl
