#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tpcl/dataset.hpp"
#include "tpcl/difficulty.hpp"
#include "tpcl/pacing.hpp"
#include "tpcl/trainer.hpp"

namespace tpcl {

enum class Direction { HardToEasy, EasyToHard };
enum class DifficultyMode { Distributional, Mean };

std::string to_string(Direction direction);
Direction direction_from_string(std::string_view name);
std::string to_string(DifficultyMode mode);
DifficultyMode difficulty_mode_from_string(std::string_view name);

struct SchedulerConfig {
  int stages = 6;   // R
  int cycles = 5;   // B
  std::vector<double> alphas = {0.1, 0.1, 0.3, 0.5};
  PacingConfig pacing;
  Direction direction = Direction::HardToEasy;
  int warmup_cycles = 5;
  DifficultyMode difficulty_mode = DifficultyMode::Distributional;
  int histogram_bins = kDefaultBins;
  bool per_task_grid = false;
  std::uint64_t seed = 0;

  void validate() const;
  // Weights used for the warm-up window: `alphas` when warmup_cycles == B,
  // uniform otherwise.
  std::vector<double> warmup_alphas() const;
};

// Direction labels as they appear in manifests.
inline constexpr std::string_view kWarmupDirection = "warmup";
inline constexpr std::string_view kFixedDirection = "fixed";

struct CurriculumStage {
  int stage = 0;  // kWarmupStage for the warm-up
  double fraction = 1.0;
  std::string direction;
  std::vector<TaskId> tasks;
  std::vector<SampleId> samples;
  DifficultyVector difficulty;
  int cycles = 1;

  bool operator==(const CurriculumStage&) const = default;
};

// Sorts tasks by difficulty (descending for hard-to-easy, ascending for
// easy-to-hard, ties by ascending id) and takes the shortest prefix whose
// sample count reaches ceil(fraction * N). Whole tasks only.
CurriculumStage plan_stage(const DifficultyVector& difficulty, const TaskPartition& partition, double fraction,
                           Direction direction, int stage_index = 0);

// The full dataset, tasks in id order.
CurriculumStage warmup_stage(const TaskPartition& partition, int cycles);

struct FixedPlan {
  std::vector<CurriculumStage> stages;
  std::vector<std::string> warnings;
};

// Wh -> YesNo -> Other -> Number, cumulative. Groups absent from the data are
// skipped; their fraction rolls into the preceding emitted stage when no
// later group has data.
FixedPlan plan_fixed(const TaskPartition& partition, const TypeLexicon& lexicon, const PacingConfig& pacing,
                     int cycles);

// Offline planning from the B reports of one stage (cycles 1..B). The grid is
// the one fitted on the first scoring event of the run.
CurriculumStage plan_from_reports(std::span<const LossReport> reports, const TaskPartition& partition,
                                  const SchedulerConfig& cfg, int stage_index, const HistogramGrid& grid);

// {"schema_version","stage","fraction","direction","cycles","tasks","samples","difficulty","checksum"}
std::string manifest_to_json(const CurriculumStage& stage);
// Verifies schema version and checksum.
CurriculumStage manifest_from_json(std::string_view text);

// ---------------------------------------------------------------------------
// Dynamic scheduler state machine
// ---------------------------------------------------------------------------

// Drives warm-up, the B-cycle consolidation stages and stage planning. The
// caller trains the requested cycle and submits the full-dataset scores.
class CurriculumScheduler {
 public:
  CurriculumScheduler(SchedulerConfig cfg, TaskPartition partition);

  bool complete() const { return complete_; }
  int iteration() const { return iteration_; }
  int cycle() const { return cycle_; }
  const CurriculumStage& current() const { return current_; }
  CycleRequest next_request() const;

  // Consumes the scores of the cycle just trained. Returns the newly planned
  // stage when this report closed an iteration and another stage follows.
  std::optional<CurriculumStage> submit(const LossReport& report);

  const SchedulerConfig& config() const { return cfg_; }
  const TaskPartition& partition() const { return partition_; }
  const std::vector<CurriculumStage>& planned() const { return planned_; }
  // Difficulty computed at the end of each finished iteration (warm-up = 0).
  const std::map<int, DifficultyVector>& difficulties() const { return difficulties_; }

  std::string state_json() const;
  // Throws IntegrityError on version/checksum failure or when `partition`
  // differs from the one the state was written with.
  static CurriculumScheduler from_state_json(std::string_view text, TaskPartition partition);

 private:
  int cycles_in_iteration() const;
  void check_report(const LossReport& report) const;
  TaskHistograms histograms(const LossReport& report) const;

  SchedulerConfig cfg_;
  TaskPartition partition_;
  std::optional<HistogramGrid> grid_;
  std::map<TaskId, HistogramGrid> task_grids_;
  int iteration_ = 0;
  int cycle_ = 1;
  bool complete_ = false;
  CurriculumStage current_;
  TaskHistograms prev_;
  ConsolidationWindow window_;
  DifficultyVector last_means_;
  std::vector<CurriculumStage> planned_;
  std::map<int, DifficultyVector> difficulties_;
};

std::string partition_checksum(const TaskPartition& partition);

struct RunHooks {
  std::function<void(const CurriculumStage&)> on_stage;
  std::function<void(const CycleRequest&, const LossReport&)> on_report;
  std::function<void(int iteration, const DifficultyVector&)> on_difficulty;
  // After every submitted cycle; the place to persist resumable state.
  std::function<void(const CurriculumScheduler&)> on_cycle_end;
  // Return false to stop early (simulated interruption).
  std::function<bool(const CurriculumScheduler&)> keep_going;
};

// Runs the scheduler to completion. The warm-up stage is announced through
// on_stage before its first cycle when the run starts fresh.
void run_dynamic(CurriculumScheduler& scheduler, TrainerClient& trainer, const RunHooks& hooks = {});

// Trains every fixed stage for cycles(B) cycles. No scoring.
FixedPlan run_fixed(const SchedulerConfig& cfg, const TaskPartition& partition, const TypeLexicon& lexicon,
                    TrainerClient& trainer, const RunHooks& hooks = {});

// Full-data training for warmup_cycles + R*B cycles: the equal-pass baseline.
void run_vanilla(const SchedulerConfig& cfg, const TaskPartition& partition, TrainerClient& trainer);

}  // namespace tpcl
