#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tpcl/common.hpp"

namespace tpcl {

struct LossRecord {
  SampleId id = 0;
  TaskId task = 0;
  double loss = 0.0;
};

// Per-sample losses over the whole training set at one scoring event.
struct LossReport {
  int iteration = 0;
  int cycle = 1;
  std::vector<LossRecord> records;

  // Throws ValidationError on negative or non-finite losses or repeated ids.
  void validate() const;
};

// JSON Lines: header {"schema_version","iteration","cycle","n","checksum"}
// then one {"id","task","loss"} per line. The checksum covers the body bytes.
std::string loss_report_to_jsonl(const LossReport& report);
LossReport loss_report_from_jsonl(std::string_view text);
void write_loss_report(const std::filesystem::path& path, const LossReport& report);
LossReport read_loss_report(const std::filesystem::path& path);

inline constexpr int kDefaultBins = 100;
inline constexpr double kDegenerateUpperEdge = 1e-6;

// Uniform bins over [0, upper]; right-open except the last, which also
// absorbs every loss >= upper.
class HistogramGrid {
 public:
  HistogramGrid() = default;
  HistogramGrid(int bins, double upper);

  int bins() const { return bins_; }
  double upper() const { return upper_; }
  double width() const { return upper_ / bins_; }
  double center(int bin) const { return (bin + 0.5) * width(); }
  double edge(int i) const { return i * width(); }
  int bin_of(double loss) const;

  bool operator==(const HistogramGrid&) const = default;

 private:
  int bins_ = kDefaultBins;
  double upper_ = 1.0;
};

// Upper edge = max loss over the whole report (all tasks).
HistogramGrid fit_grid(const LossReport& first_report, int bins = kDefaultBins);
// Upper edge per task, for the per-task grid variant.
std::map<TaskId, HistogramGrid> fit_task_grids(const LossReport& first_report, int bins = kDefaultBins);

struct ScoreHistogram {
  HistogramGrid grid;
  std::vector<double> mass;
};

ScoreHistogram build_histogram(std::span<const double> losses, const HistogramGrid& grid);

using TaskHistograms = std::map<TaskId, ScoreHistogram>;

TaskHistograms build_task_histograms(const LossReport& report, const HistogramGrid& grid);
TaskHistograms build_task_histograms(const LossReport& report, const std::map<TaskId, HistogramGrid>& grids);

struct TransportPlan {
  struct Coupling {
    int source = 0;
    int target = 0;
    double mass = 0.0;
  };
  std::vector<Coupling> couplings;
  double cost = 0.0;
};

// Exact optimal transport between two histograms on the same grid with
// ground cost (center_i - center_j)^2. Returns the expected cost (W2 squared).
double ot_divergence(const ScoreHistogram& a, const ScoreHistogram& b);
TransportPlan ot_plan(const ScoreHistogram& a, const ScoreHistogram& b);

using DifficultyVector = std::map<TaskId, double>;

// phi_tau = OT(curr_tau, prev_tau) for every task. Key sets must match.
DifficultyVector divergence_vector(const TaskHistograms& prev, const TaskHistograms& curr);

enum class AlphaMode { Increasing, Decreasing, Uniform };

std::string to_string(AlphaMode mode);
AlphaMode alpha_mode_from_string(std::string_view name);

// Weights for a window of `cycles` (B - 1 entries). The increasing and
// decreasing presets are defined for B = 5 only.
std::vector<double> alpha_preset(AlphaMode mode, int cycles = 5);

// Holds the divergence vectors of cycles b = 2..B of one stage and folds them
// with the alpha weights.
class ConsolidationWindow {
 public:
  ConsolidationWindow() = default;
  explicit ConsolidationWindow(std::vector<double> alphas);

  void push(DifficultyVector divergences);
  void clear() { history_.clear(); }

  std::size_t capacity() const { return alphas_.size(); }
  std::size_t size() const { return history_.size(); }
  bool complete() const { return history_.size() == alphas_.size(); }
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<DifficultyVector>& history() const { return history_; }

  // sum_b alpha_b * Phi_b, elementwise. Throws Error when incomplete.
  DifficultyVector consolidate() const;

 private:
  std::vector<double> alphas_;
  std::vector<DifficultyVector> history_;
};

// Per-task arithmetic mean loss of one report (the TPCL_simple ablation).
DifficultyVector mean_difficulty(const LossReport& report);

// {"schema_version","iteration","scores":{task: value}}
std::string difficulty_to_json(int iteration, const DifficultyVector& scores);

}  // namespace tpcl
