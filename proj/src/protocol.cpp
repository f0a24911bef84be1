#include "tpcl/protocol.hpp"

#include <cstdio>
#include <iostream>
#include <thread>

#include "json.hpp"
#include "tpcl/config_json.hpp"

namespace tpcl {

using json = nlohmann::json;
namespace fs = std::filesystem;

fs::path manifest_path(const fs::path& run_dir, int iteration) {
  if (iteration == 0) return run_dir / "manifests" / "warmup.json";
  char buf[32];
  std::snprintf(buf, sizeof buf, "stage_%02d.json", iteration - 1);
  return run_dir / "manifests" / buf;
}

fs::path report_path(const fs::path& run_dir, int iteration, int cycle) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "iter_%02d_cycle_%02d.jsonl", iteration, cycle);
  return run_dir / "reports" / buf;
}

FileProtocolTrainer::FileProtocolTrainer(fs::path run_dir, PollOptions poll)
    : run_dir_(std::move(run_dir)), poll_(poll) {}

LossReport FileProtocolTrainer::score(const CycleRequest& request) {
  const auto path = report_path(run_dir_, request.iteration, request.cycle);
  const auto deadline = std::chrono::steady_clock::now() + poll_.timeout;
  std::string last_error;
  while (true) {
    if (fs::exists(path)) {
      try {
        auto report = read_loss_report(path);
        if (report.iteration != request.iteration || report.cycle != request.cycle)
          throw IntegrityError(path.string() + ": report is for iteration " + std::to_string(report.iteration) +
                               " cycle " + std::to_string(report.cycle));
        return report;
      } catch (const IntegrityError& e) {
        // possibly a non-atomic writer still busy; retry until the deadline
        last_error = e.what();
      } catch (const ValidationError& e) {
        last_error = e.what();
      }
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      std::string msg = "timed out waiting for " + path.string();
      if (!last_error.empty()) msg += " (last error: " + last_error + ")";
      throw Error(msg);
    }
    std::this_thread::sleep_for(poll_.interval);
  }
}

RunConfig materialize_external_run(const RunConfig& cfg, const LoadedData& data, const fs::path& run_dir) {
  fs::create_directories(run_dir / "data");
  const auto root = fs::absolute(run_dir);
  RunConfig out = cfg;
  out.synthetic.reset();
  out.train_path = root / "data" / "train.jsonl";
  out.test_id_path = root / "data" / "test_id.jsonl";
  out.test_ood_path = root / "data" / "test_ood.jsonl";
  out.data_fractions = {1.0};
  out.replicates = 1;
  out.trainer_mode = "external";
  out.output_dir = root;
  if (!cfg.lexicon_path.empty()) out.lexicon_path = fs::absolute(cfg.lexicon_path);
  write_samples(out.train_path, data.train.samples);
  write_samples(out.test_id_path, data.test_id.samples);
  write_samples(out.test_ood_path, data.test_ood.samples);
  write_file_atomic(run_dir / "run_config.json", run_config_to_json(out));
  return out;
}

namespace {

void save_external_state(const fs::path& run_dir, const CurriculumScheduler& s) {
  json state = {{"schema_version", kSchemaVersion},
                {"kind", "tpcl-run-state"},
                {"scheduler", json::parse(s.state_json())},
                {"model", nullptr},
                {"metrics_rows", 0}};
  state["checksum"] = checksum_hex(state.dump());
  write_file_atomic(run_dir / "state.json", state.dump() + "\n");
  if (s.complete()) write_file_atomic(run_dir / "COMPLETE", "complete\n");
}

RunHooks external_hooks(const fs::path& run_dir, std::optional<int> stop_after_stage) {
  RunHooks h;
  h.on_stage = [run_dir](const CurriculumStage& s) {
    write_file_atomic(manifest_path(run_dir, s.stage + 1), manifest_to_json(s));
  };
  h.on_difficulty = [run_dir](int iteration, const DifficultyVector& v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "iter_%02d.json", iteration);
    write_file_atomic(run_dir / "difficulty" / buf, difficulty_to_json(iteration, v));
  };
  h.on_cycle_end = [run_dir](const CurriculumScheduler& s) { save_external_state(run_dir, s); };
  if (stop_after_stage) {
    const int limit = *stop_after_stage;
    h.keep_going = [limit](const CurriculumScheduler& s) { return s.iteration() < limit + 1; };
  }
  return h;
}

SchedulerConfig arm_config(const ArmSpec& arm, const RunConfig& cfg, std::uint64_t seed) {
  auto sc = cfg.scheduler;
  sc.direction = arm.direction;
  sc.difficulty_mode = arm.difficulty;
  sc.seed = seed;
  return sc;
}

}  // namespace

RunOutcome run_external(const ArmSpec& arm, const RunConfig& cfg, std::uint64_t seed, double data_fraction,
                        const fs::path& run_dir, PollOptions poll, std::optional<int> stop_after_stage) {
  if (arm.kind != ArmKind::Dynamic)
    throw ValidationError("the external trainer protocol only drives dynamic arms ('" + arm.name + "' given)");
  const auto data = load_run_data(cfg, seed, data_fraction);
  auto file_cfg = materialize_external_run(cfg, data, run_dir);
  file_cfg.train.seed = seed;
  write_file_atomic(run_dir / "run_config.json", run_config_to_json(file_cfg));

  json desc = {{"schema_version", kSchemaVersion},
               {"arm", arm.name},
               {"seed", seed},
               {"data_fraction", 1.0},
               {"requested_data_fraction", data_fraction},
               {"trainer_mode", "external"},
               {"config", json::parse(run_config_to_json(file_cfg))}};
  write_file_atomic(run_dir / "run.json", desc.dump(2) + "\n");

  CurriculumScheduler scheduler(arm_config(arm, file_cfg, seed), partition_by_type(data.train.samples));
  FileProtocolTrainer trainer(run_dir, poll);
  run_dynamic(scheduler, trainer, external_hooks(run_dir, stop_after_stage));

  RunOutcome out;
  out.arm = arm.name;
  out.seed = seed;
  out.data_fraction = data_fraction;
  out.directory = run_dir;
  out.stages = scheduler.planned();
  out.complete = scheduler.complete();
  return out;
}

RunOutcome resume_external(const fs::path& run_dir, bool* was_complete, PollOptions poll) {
  const auto descriptor = json::parse(read_file(run_dir / "run.json"));
  const auto state = json::parse(verified_run_state(run_dir));
  const auto arm = parse_arm(descriptor.at("arm").get<std::string>());
  const auto cfg = run_config_from_json(descriptor.at("config").dump());
  const auto seed = descriptor.at("seed").get<std::uint64_t>();
  const auto data = load_run_data(cfg, seed, 1.0);
  auto scheduler =
      CurriculumScheduler::from_state_json(state.at("scheduler").dump(), partition_by_type(data.train.samples));
  if (was_complete) *was_complete = scheduler.complete();
  FileProtocolTrainer trainer(run_dir, poll);
  run_dynamic(scheduler, trainer, external_hooks(run_dir, std::nullopt));
  RunOutcome out;
  out.arm = arm.name;
  out.seed = seed;
  out.data_fraction = descriptor.value("requested_data_fraction", 1.0);
  out.directory = run_dir;
  out.stages = scheduler.planned();
  out.complete = scheduler.complete();
  return out;
}

// ---------------------------------------------------------------------------
// serve
// ---------------------------------------------------------------------------

namespace {

struct Progress {
  int iteration = 0;
  int cycle = 1;  // next cycle to train
  std::optional<ToyModel> model;
  std::size_t metrics_rows = 0;
};

Progress load_progress(const fs::path& path) {
  Progress p;
  if (!fs::exists(path)) return p;
  auto j = json::parse(read_file(path));
  const auto stored = j.value("checksum", std::string{});
  j.erase("checksum");
  if (j.value("schema_version", -1) != kSchemaVersion || stored != checksum_hex(j.dump()))
    throw IntegrityError(path.string() + ": corrupt trainer progress");
  p.iteration = j.at("iteration").get<int>();
  p.cycle = j.at("cycle").get<int>();
  p.model = model_from_json(j.at("model").dump());
  p.metrics_rows = j.at("metrics_rows").get<std::size_t>();
  return p;
}

void save_progress(const fs::path& path, const Progress& p) {
  json j = {{"schema_version", kSchemaVersion},
            {"iteration", p.iteration},
            {"cycle", p.cycle},
            {"model", json::parse(model_to_json(*p.model))},
            {"metrics_rows", p.metrics_rows}};
  j["checksum"] = checksum_hex(j.dump());
  write_file_atomic(path, j.dump() + "\n");
}

}  // namespace

ServeResult serve(const fs::path& run_dir, const ServeOptions& options) {
  // the scheduler may not have started yet
  const auto config_deadline = std::chrono::steady_clock::now() + options.poll.timeout;
  while (!fs::exists(run_dir / "run_config.json")) {
    if (std::chrono::steady_clock::now() > config_deadline)
      throw Error("timed out waiting for " + (run_dir / "run_config.json").string());
    std::this_thread::sleep_for(options.poll.interval);
  }
  const auto cfg = run_config_from_json(read_file(run_dir / "run_config.json"));
  const auto data = load_run_data(cfg, cfg.train.seed, 1.0);
  std::optional<TypeLexicon> lexicon_storage;
  if (!cfg.lexicon_path.empty()) lexicon_storage = TypeLexicon::load(cfg.lexicon_path);
  const auto& lexicon = lexicon_storage ? *lexicon_storage : TypeLexicon::default_lexicon();

  EmbeddedTrainer trainer(data.train, cfg.train, lexicon);
  trainer.attach_eval_split("id", data.test_id);
  trainer.attach_eval_split("ood", data.test_ood);

  const auto progress_file = run_dir / "trainer" / "progress.json";
  auto progress = load_progress(progress_file);
  if (progress.model) trainer.set_model(*progress.model);
  trainer.set_metrics(read_metrics_rows(run_dir / "metrics.csv", progress.metrics_rows));

  ServeResult result;
  auto idle_since = std::chrono::steady_clock::now();
  while (true) {
    if (options.max_cycles && result.cycles_trained >= *options.max_cycles) return result;
    const auto mpath = manifest_path(run_dir, progress.iteration);
    if (!fs::exists(mpath)) {
      if (fs::exists(run_dir / "COMPLETE")) {
        result.complete = true;
        return result;
      }
      if (std::chrono::steady_clock::now() - idle_since > options.poll.timeout)
        throw Error("timed out waiting for " + mpath.string());
      std::this_thread::sleep_for(options.poll.interval);
      continue;
    }
    const auto stage = manifest_from_json(read_file(mpath));
    const CycleRequest request{progress.iteration, stage.stage, progress.cycle, stage.samples};
    trainer.train(request);
    write_loss_report(report_path(run_dir, request.iteration, request.cycle), trainer.score(request));
    write_file_atomic(run_dir / "metrics.csv", metrics_csv(trainer.metrics()));
    write_file_atomic(run_dir / "checkpoints" / "model.json", model_to_json(trainer.model()));
    if (options.verbose)
      std::cerr << "trained iteration " << request.iteration << " cycle " << request.cycle << "\n";

    ++result.cycles_trained;
    if (progress.cycle >= stage.cycles) {
      ++progress.iteration;
      progress.cycle = 1;
    } else {
      ++progress.cycle;
    }
    progress.model = trainer.model();
    progress.metrics_rows = trainer.metrics().size();
    save_progress(progress_file, progress);
    idle_since = std::chrono::steady_clock::now();
  }
}

}  // namespace tpcl
