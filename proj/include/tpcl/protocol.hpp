#pragma once

// File protocol between the scheduler and an out-of-process trainer.
//
// run_dir/
//   run_config.json            data paths + scheduler/train config
//   manifests/warmup.json      samples for iteration 0
//   manifests/stage_XX.json    samples for iteration XX + 1
//   reports/iter_II_cycle_CC.jsonl   written by the trainer after each cycle
//   COMPLETE                   written by the scheduler when done
//
// The trainer trains `cycles` cycles on each manifest in turn and scores the
// full training set after every cycle. Reports must be written atomically
// (temp file + rename); the scheduler also re-checks the checksum.

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

#include "tpcl/experiment.hpp"

namespace tpcl {

std::filesystem::path manifest_path(const std::filesystem::path& run_dir, int iteration);
std::filesystem::path report_path(const std::filesystem::path& run_dir, int iteration, int cycle);

struct PollOptions {
  std::chrono::milliseconds timeout{std::chrono::minutes(10)};
  std::chrono::milliseconds interval{20};
};

// Scheduler side: train() is a no-op, score() waits for the report file.
class FileProtocolTrainer : public TrainerClient {
 public:
  FileProtocolTrainer(std::filesystem::path run_dir, PollOptions poll = {});
  void train(const CycleRequest&) override {}
  LossReport score(const CycleRequest& request) override;

 private:
  std::filesystem::path run_dir_;
  PollOptions poll_;
};

// Writes the data splits and run_config.json into `run_dir` so an external
// trainer can pick them up. Returns the file-based config.
RunConfig materialize_external_run(const RunConfig& cfg, const LoadedData& data, const std::filesystem::path& run_dir);

// Runs one dynamic arm against an external trainer through the file protocol.
RunOutcome run_external(const ArmSpec& arm, const RunConfig& cfg, std::uint64_t seed, double data_fraction,
                        const std::filesystem::path& run_dir, PollOptions poll = {},
                        std::optional<int> stop_after_stage = std::nullopt);

// Continues an external run from its state.json.
RunOutcome resume_external(const std::filesystem::path& run_dir, bool* was_complete = nullptr, PollOptions poll = {});

struct ServeOptions {
  PollOptions poll;
  bool verbose = false;
  // Stop after this many trained cycles (the run stays open).
  std::optional<int> max_cycles;
};

struct ServeResult {
  int cycles_trained = 0;
  bool complete = false;
};

// Trainer side: the embedded trainer driven through the file protocol.
// Progress lives in run_dir/trainer/progress.json, so a restart continues
// where it stopped. Returns once COMPLETE appears.
ServeResult serve(const std::filesystem::path& run_dir, const ServeOptions& options = {});

}  // namespace tpcl
