#include "tpcl/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "tpcl/config_json.hpp"
#include "tpcl/protocol.hpp"

namespace tpcl {

using json = nlohmann::json;
namespace fs = std::filesystem;

ArmSpec parse_arm(std::string_view name) {
  ArmSpec arm;
  arm.name = std::string(name);
  if (name == "vanilla") {
    arm.kind = ArmKind::Vanilla;
  } else if (name == "fixed") {
    arm.kind = ArmKind::Fixed;
  } else if (name == "dynamic" || name == "dynamic_hard_to_easy") {
    arm.kind = ArmKind::Dynamic;
  } else if (name == "dynamic_easy_to_hard") {
    arm.kind = ArmKind::Dynamic;
    arm.direction = Direction::EasyToHard;
  } else if (name == "simple") {
    arm.kind = ArmKind::Dynamic;
    arm.difficulty = DifficultyMode::Mean;
  } else {
    throw ValidationError("unknown arm '" + std::string(name) +
                          "' (expected vanilla, fixed, dynamic, dynamic_easy_to_hard or simple)");
  }
  return arm;
}

void RunConfig::validate() const {
  const bool files = !train_path.empty();
  if (synthetic.has_value() == files)
    throw ValidationError("run config: give exactly one dataset source (synthetic spec or train/test paths)");
  if (files && (test_id_path.empty() || test_ood_path.empty()))
    throw ValidationError("run config: file datasets need train, ID-test and OOD-test paths");
  if (synthetic) synthetic->validate();
  scheduler.validate();
  train.validate();
  if (arms.empty()) throw ValidationError("run config: no arms");
  for (const auto& a : arms) parse_arm(a);
  for (double f : data_fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ValidationError("run config: data fractions must lie in (0, 1]");
  if (replicates < 1) throw ValidationError("run config: replicates must be >= 1");
  if (trainer_mode != "embedded" && trainer_mode != "external")
    throw ValidationError("run config: trainer mode must be 'embedded' or 'external'");
}

std::uint64_t RunConfig::replicate_seed(int i) const { return mix_seed(seed, 0x7265706c, static_cast<std::uint64_t>(i)); }

std::string run_config_to_json(const RunConfig& cfg) {
  json j = {{"schema_version", kSchemaVersion},
            {"synthetic", cfg.synthetic ? json(*cfg.synthetic) : json(nullptr)},
            {"train_path", cfg.train_path.string()},
            {"test_id_path", cfg.test_id_path.string()},
            {"test_ood_path", cfg.test_ood_path.string()},
            {"lexicon_path", cfg.lexicon_path.string()},
            {"scheduler", cfg.scheduler},
            {"train", cfg.train},
            {"arms", cfg.arms},
            {"data_fractions", cfg.data_fractions},
            {"replicates", cfg.replicates},
            {"seed", cfg.seed},
            {"trainer_mode", cfg.trainer_mode},
            {"output_dir", cfg.output_dir.string()}};
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("run config: ") + e.what());
  }
  const int version = j.value("schema_version", kSchemaVersion);
  if (version != kSchemaVersion) throw IntegrityError("run config: unsupported schema_version " + std::to_string(version));
  RunConfig cfg;
  try {
    if (j.contains("synthetic") && !j.at("synthetic").is_null()) cfg.synthetic = j.at("synthetic").get<SyntheticSpec>();
    cfg.train_path = j.value("train_path", std::string{});
    cfg.test_id_path = j.value("test_id_path", std::string{});
    cfg.test_ood_path = j.value("test_ood_path", std::string{});
    cfg.lexicon_path = j.value("lexicon_path", std::string{});
    if (j.contains("scheduler")) j.at("scheduler").get_to(cfg.scheduler);
    if (j.contains("train")) j.at("train").get_to(cfg.train);
    if (j.contains("arms")) cfg.arms = j.at("arms").get<std::vector<std::string>>();
    if (j.contains("data_fractions")) cfg.data_fractions = j.at("data_fractions").get<std::vector<double>>();
    cfg.replicates = j.value("replicates", 1);
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.trainer_mode = j.value("trainer_mode", std::string("embedded"));
    cfg.output_dir = j.value("output_dir", std::string{});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("run config: ") + e.what());
  }
  return cfg;
}

SyntheticSpec standard_synthetic_spec() {
  SyntheticSpec spec;
  spec.num_tasks = 8;
  spec.samples_per_task = 2000;
  spec.test_samples_per_task = 500;
  spec.labels_per_task = 3;
  spec.bias_strength = 0.9;
  spec.prior_shift = PriorShift::Reversed;
  return spec;
}

RunConfig standard_run_config() {
  RunConfig cfg;
  cfg.synthetic = standard_synthetic_spec();
  cfg.arms = {"vanilla", "dynamic"};
  cfg.replicates = 5;
  return cfg;
}

namespace {

const TypeLexicon& lexicon_for(const RunConfig& cfg, std::optional<TypeLexicon>& storage) {
  if (cfg.lexicon_path.empty()) return TypeLexicon::default_lexicon();
  storage = TypeLexicon::load(cfg.lexicon_path);
  return *storage;
}

}  // namespace

LoadedData load_run_data(const RunConfig& cfg, std::uint64_t replicate_seed, double data_fraction) {
  LoadedData data;
  if (cfg.synthetic) {
    auto spec = *cfg.synthetic;
    spec.seed = replicate_seed;
    auto generated = generate_synthetic(spec);
    data.train = std::move(generated.train);
    data.test_id = std::move(generated.test_id);
    data.test_ood = std::move(generated.test_ood);
  } else {
    data.train.samples = read_samples(cfg.train_path);
    data.test_id.samples = read_samples(cfg.test_id_path);
    data.test_ood.samples = read_samples(cfg.test_ood_path);
    for (auto* d : {&data.train, &data.test_id, &data.test_ood}) finalize_dataset(*d);
    const int labels = std::max({data.train.num_labels, data.test_id.num_labels, data.test_ood.num_labels});
    for (auto* d : {&data.train, &data.test_id, &data.test_ood}) finalize_dataset(*d, labels);
    if (data.test_id.feature_dim != data.train.feature_dim || data.test_ood.feature_dim != data.train.feature_dim)
      throw ValidationError("train and test splits have different feature dimensions");
  }
  if (data.train.empty()) throw ValidationError("no samples in the training split");
  if (data_fraction < 1.0)
    data.train.samples = subsample_stratified(data.train.samples, data_fraction, mix_seed(replicate_seed, 0x66726163));
  return data;
}

// ---------------------------------------------------------------------------
// Metrics CSV
// ---------------------------------------------------------------------------

namespace {
std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}
}  // namespace

std::string metrics_csv_header() { return "stage,cycle,split,overall,wh,yesno,number,other,mean_train_loss,wall_ms"; }

std::string metrics_csv_row(const MetricsRow& r) {
  std::string out = std::to_string(r.stage) + "," + std::to_string(r.cycle) + "," + r.split + "," + fmt(r.overall);
  for (double g : r.group_accuracy) out += "," + fmt(g);
  out += "," + fmt(r.mean_train_loss) + "," + fmt(r.wall_ms, 3);
  return out;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

}  // namespace

MetricsRow parse_metrics_row(const std::string& line) {
  const auto c = split_csv(line);
  if (c.size() != 10) throw ValidationError("malformed metrics row: " + line);
  MetricsRow r;
  r.stage = std::stoi(c[0]);
  r.cycle = std::stoi(c[1]);
  r.split = c[2];
  r.overall = std::stod(c[3]);
  for (std::size_t g = 0; g < 4; ++g) r.group_accuracy[g] = std::stod(c[4 + g]);
  r.mean_train_loss = std::stod(c[8]);
  r.wall_ms = std::stod(c[9]);
  return r;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = metrics_csv_header() + "\n";
  for (const auto& r : rows) out += metrics_csv_row(r) + "\n";
  return out;
}

std::vector<MetricsRow> read_metrics_rows(const fs::path& path, std::size_t rows) {
  std::vector<MetricsRow> out;
  if (rows == 0) return out;
  const auto lines = read_lines(path);
  for (std::size_t i = 1; i < lines.size() && out.size() < rows; ++i) out.push_back(parse_metrics_row(lines[i]));
  if (out.size() != rows) throw IntegrityError(path.string() + ": fewer metrics rows than the saved state");
  return out;
}

namespace {

std::string stage_file_name(int stage) {
  if (stage == kWarmupStage) return "warmup.json";
  char buf[32];
  std::snprintf(buf, sizeof buf, "stage_%02d.json", stage);
  return buf;
}

std::string iteration_file_name(int iteration) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "iter_%02d.json", iteration);
  return buf;
}

// Everything a dynamic run needs to persist and resume.
class RunRecorder {
 public:
  RunRecorder(std::optional<fs::path> dir, EmbeddedTrainer& trainer) : dir_(std::move(dir)), trainer_(trainer) {}

  RunHooks hooks(std::optional<int> stop_after_stage) {
    RunHooks h;
    h.on_stage = [this](const CurriculumStage& s) {
      if (dir_) write_file_atomic(*dir_ / "manifests" / stage_file_name(s.stage), manifest_to_json(s));
    };
    h.on_difficulty = [this](int iteration, const DifficultyVector& v) {
      if (dir_) write_file_atomic(*dir_ / "difficulty" / iteration_file_name(iteration), difficulty_to_json(iteration, v));
    };
    h.on_cycle_end = [this](const CurriculumScheduler& s) { save(s); };
    if (stop_after_stage) {
      const int limit = *stop_after_stage;
      h.keep_going = [limit](const CurriculumScheduler& s) { return s.iteration() < limit + 1; };
    }
    return h;
  }

  void save(const CurriculumScheduler& s) {
    if (!dir_) return;
    write_file_atomic(*dir_ / "metrics.csv", metrics_csv(trainer_.metrics()));
    write_file_atomic(*dir_ / "checkpoints" / "model.json", model_to_json(trainer_.model()));
    json state = {{"schema_version", kSchemaVersion},
                  {"kind", "tpcl-run-state"},
                  {"scheduler", json::parse(s.state_json())},
                  {"model", json::parse(model_to_json(trainer_.model()))},
                  {"metrics_rows", trainer_.metrics().size()}};
    state["checksum"] = checksum_hex(state.dump());
    write_file_atomic(*dir_ / "state.json", state.dump() + "\n");
    if (s.complete()) write_file_atomic(*dir_ / "COMPLETE", "complete\n");
  }

  void finish_static() {
    if (!dir_) return;
    write_file_atomic(*dir_ / "metrics.csv", metrics_csv(trainer_.metrics()));
    write_file_atomic(*dir_ / "checkpoints" / "model.json", model_to_json(trainer_.model()));
    write_file_atomic(*dir_ / "COMPLETE", "complete\n");
  }

 private:
  std::optional<fs::path> dir_;
  EmbeddedTrainer& trainer_;
};

void write_run_descriptor(const fs::path& dir, const ArmSpec& arm, const RunConfig& cfg, std::uint64_t seed,
                          double data_fraction) {
  json j = {{"schema_version", kSchemaVersion},
            {"arm", arm.name},
            {"seed", seed},
            {"data_fraction", data_fraction},
            {"config", json::parse(run_config_to_json(cfg))}};
  write_file_atomic(dir / "run.json", j.dump(2) + "\n");
}

void fill_outcome(RunOutcome& out, const EmbeddedTrainer& trainer) {
  for (const auto& r : trainer.evaluate_all()) {
    if (r.split == "id") out.id_accuracy = r.overall;
    if (r.split == "ood") out.ood_accuracy = r.overall;
  }
  out.metrics = trainer.metrics();
  out.model = trainer.model();
}

SchedulerConfig arm_scheduler_config(const ArmSpec& arm, const RunConfig& cfg, std::uint64_t seed) {
  auto sc = cfg.scheduler;
  sc.direction = arm.direction;
  sc.difficulty_mode = arm.difficulty;
  sc.seed = seed;
  return sc;
}

}  // namespace

RunOutcome run_arm(const ArmSpec& arm, const LoadedData& data, const RunConfig& cfg, std::uint64_t seed,
                   double data_fraction, const ArmOptions& options) {
  std::optional<TypeLexicon> lexicon_storage;
  const auto& lexicon = lexicon_for(cfg, lexicon_storage);
  const auto sc = arm_scheduler_config(arm, cfg, seed);
  auto tc = cfg.train;
  tc.seed = seed;
  auto partition = partition_by_type(data.train.samples);

  EmbeddedTrainer trainer(data.train, tc, lexicon);
  trainer.attach_eval_split("id", data.test_id);
  trainer.attach_eval_split("ood", data.test_ood);

  RunOutcome out;
  out.arm = arm.name;
  out.seed = seed;
  out.data_fraction = data_fraction;
  if (options.run_dir) {
    out.directory = *options.run_dir;
    fs::create_directories(*options.run_dir);
    write_run_descriptor(*options.run_dir, arm, cfg, seed, data_fraction);
  }
  RunRecorder recorder(options.run_dir, trainer);

  switch (arm.kind) {
    case ArmKind::Vanilla:
      run_vanilla(sc, partition, trainer);
      recorder.finish_static();
      break;
    case ArmKind::Fixed: {
      RunHooks hooks = recorder.hooks(std::nullopt);
      auto plan = run_fixed(sc, partition, lexicon, trainer, hooks);
      for (const auto& w : plan.warnings) std::cerr << "warning: " << w << "\n";
      out.stages = plan.stages;
      recorder.finish_static();
      break;
    }
    case ArmKind::Dynamic: {
      CurriculumScheduler scheduler(sc, partition);
      run_dynamic(scheduler, trainer, recorder.hooks(options.stop_after_stage));
      out.stages = scheduler.planned();
      out.complete = scheduler.complete();
      break;
    }
  }
  fill_outcome(out, trainer);
  return out;
}

std::string verified_run_state(const fs::path& run_dir) {
  json state;
  try {
    state = json::parse(read_file(run_dir / "state.json"));
  } catch (const json::parse_error& e) {
    throw IntegrityError(std::string("state.json: ") + e.what());
  }
  if (state.value("schema_version", -1) != kSchemaVersion || state.value("kind", "") != "tpcl-run-state")
    throw IntegrityError("state.json: version mismatch or not a run state file");
  const auto stored = state.value("checksum", std::string{});
  state.erase("checksum");
  if (stored != checksum_hex(state.dump())) throw IntegrityError("state.json: checksum mismatch");
  return state.dump();
}

RunOutcome resume_run(const fs::path& run_dir, bool* was_complete) {
  const auto descriptor = json::parse(read_file(run_dir / "run.json"));
  if (descriptor.value("schema_version", -1) != kSchemaVersion)
    throw IntegrityError("run.json: unsupported schema_version");
  if (descriptor.value("trainer_mode", std::string("embedded")) == "external")
    return resume_external(run_dir, was_complete);
  const auto arm = parse_arm(descriptor.at("arm").get<std::string>());
  if (arm.kind != ArmKind::Dynamic) {
    if (fs::exists(run_dir / "COMPLETE")) {
      if (was_complete) *was_complete = true;
      RunOutcome out;
      out.arm = arm.name;
      out.directory = run_dir;
      return out;
    }
    throw ValidationError("only dynamic runs can be resumed; rerun '" + arm.name + "' from scratch");
  }
  const auto cfg = run_config_from_json(descriptor.at("config").dump());
  const auto seed = descriptor.at("seed").get<std::uint64_t>();
  const auto fraction = descriptor.at("data_fraction").get<double>();

  const auto state = json::parse(verified_run_state(run_dir));

  const auto data = load_run_data(cfg, seed, fraction);
  std::optional<TypeLexicon> lexicon_storage;
  const auto& lexicon = lexicon_for(cfg, lexicon_storage);
  auto tc = cfg.train;
  tc.seed = seed;
  EmbeddedTrainer trainer(data.train, tc, lexicon);
  trainer.attach_eval_split("id", data.test_id);
  trainer.attach_eval_split("ood", data.test_ood);
  trainer.set_model(model_from_json(state.at("model").dump()));

  auto scheduler =
      CurriculumScheduler::from_state_json(state.at("scheduler").dump(), partition_by_type(data.train.samples));

  // rows past the saved state are dropped
  auto metrics = read_metrics_rows(run_dir / "metrics.csv", state.at("metrics_rows").get<std::size_t>());

  RunOutcome out;
  out.arm = arm.name;
  out.seed = seed;
  out.data_fraction = fraction;
  out.directory = run_dir;
  if (was_complete) *was_complete = scheduler.complete();

  trainer.set_metrics(std::move(metrics));
  RunRecorder recorder(run_dir, trainer);
  run_dynamic(scheduler, trainer, recorder.hooks(std::nullopt));

  fill_outcome(out, trainer);
  out.stages = scheduler.planned();
  out.complete = scheduler.complete();
  return out;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {
std::string arm_key(const std::string& arm, double fraction) {
  if (fraction >= 1.0) return arm;
  char buf[32];
  std::snprintf(buf, sizeof buf, "@%.2f", fraction);
  return arm + buf;
}

std::string arm_dir_name(const std::string& arm, double fraction) {
  if (fraction >= 1.0) return arm;
  char buf[32];
  std::snprintf(buf, sizeof buf, "_f%.2f", fraction);
  return arm + buf;
}
}  // namespace

std::vector<ArmSummary> summarize(const std::vector<RunOutcome>& runs) {
  std::vector<ArmSummary> out;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> acc;
  for (const auto& r : runs) {
    const auto key = arm_key(r.arm, r.data_fraction);
    auto it = std::find_if(out.begin(), out.end(), [&](const ArmSummary& s) { return s.key == key; });
    if (it == out.end()) {
      out.push_back({key, r.arm, r.data_fraction, 0, 0.0, 0.0});
      it = out.end() - 1;
    }
    ++it->runs;
    acc[key].first.push_back(r.id_accuracy);
    acc[key].second.push_back(r.ood_accuracy);
  }
  for (auto& s : out) {
    s.median_id = median(acc[s.key].first);
    s.median_ood = median(acc[s.key].second);
  }
  return out;
}

std::string summary_to_json(const SimulationSummary& summary) {
  json runs = json::array();
  for (const auto& r : summary.runs)
    runs.push_back({{"arm", r.arm},
                    {"data_fraction", r.data_fraction},
                    {"seed", r.seed},
                    {"id_accuracy", r.id_accuracy},
                    {"ood_accuracy", r.ood_accuracy},
                    {"complete", r.complete},
                    {"dir", r.directory.string()}});
  json arms = json::object();
  for (const auto& a : summary.arms)
    arms[a.key] = {{"arm", a.arm},
                   {"data_fraction", a.data_fraction},
                   {"runs", a.runs},
                   {"median_id_accuracy", a.median_id},
                   {"median_ood_accuracy", a.median_ood}};
  return json{{"schema_version", kSchemaVersion}, {"seed", summary.seed}, {"runs", runs}, {"arms", arms}}.dump(2) + "\n";
}

SimulationSummary simulate(const RunConfig& cfg, const std::function<void(const RunOutcome&)>& on_run) {
  cfg.validate();
  SimulationSummary summary;
  summary.seed = cfg.seed;
  if (!cfg.output_dir.empty()) write_file_atomic(cfg.output_dir / "run_config.json", run_config_to_json(cfg));
  for (int rep = 0; rep < cfg.replicates; ++rep) {
    const auto seed = cfg.replicate_seed(rep);
    for (double fraction : cfg.data_fractions) {
      const auto data = load_run_data(cfg, seed, fraction);
      for (const auto& name : cfg.arms) {
        ArmOptions options;
        if (!cfg.output_dir.empty())
          options.run_dir = cfg.output_dir / "runs" / arm_dir_name(name, fraction) / ("seed_" + std::to_string(seed));
        auto outcome = run_arm(parse_arm(name), data, cfg, seed, fraction, options);
        outcome.model = ToyModel{};
        if (on_run) on_run(outcome);
        outcome.metrics.clear();
        summary.runs.push_back(std::move(outcome));
      }
    }
  }
  summary.arms = summarize(summary.runs);
  if (!cfg.output_dir.empty()) write_file_atomic(cfg.output_dir / "summary.json", summary_to_json(summary));
  return summary;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

ReportResult write_report(const fs::path& run_root, std::optional<fs::path> out_dir) {
  ReportResult result;
  const auto dir = out_dir.value_or(run_root / "report");
  result.csv_path = dir / "metrics.csv";
  result.markdown_path = dir / "summary.md";

  std::string csv = "arm,data_fraction,seed," + metrics_csv_header() + "\n";
  struct Final {
    double id = 0.0, ood = 0.0;
  };
  std::map<std::string, std::vector<Final>> finals;
  std::vector<std::string> order;

  const auto runs_dir = run_root / "runs";
  std::vector<fs::path> run_dirs;
  if (fs::exists(runs_dir)) {
    for (const auto& arm_entry : fs::directory_iterator(runs_dir)) {
      if (!arm_entry.is_directory()) continue;
      for (const auto& seed_entry : fs::directory_iterator(arm_entry.path()))
        if (seed_entry.is_directory()) run_dirs.push_back(seed_entry.path());
    }
  }
  std::sort(run_dirs.begin(), run_dirs.end());
  if (run_dirs.empty()) result.warnings.push_back("no runs found under " + runs_dir.string());

  for (const auto& rd : run_dirs) {
    if (!fs::exists(rd / "run.json") || !fs::exists(rd / "metrics.csv")) {
      result.warnings.push_back("missing metrics in " + rd.string() + "; skipped");
      continue;
    }
    const auto desc = json::parse(read_file(rd / "run.json"));
    const auto arm = desc.at("arm").get<std::string>();
    const auto fraction = desc.at("data_fraction").get<double>();
    const auto seed = desc.at("seed").get<std::uint64_t>();
    if (!fs::exists(rd / "COMPLETE")) result.warnings.push_back("run " + rd.string() + " is incomplete");
    const auto lines = read_lines(rd / "metrics.csv");
    Final last;
    bool have_id = false, have_ood = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto row = parse_metrics_row(lines[i]);
      csv += arm + "," + fmt(fraction, 2) + "," + std::to_string(seed) + "," + metrics_csv_row(row) + "\n";
      ++result.rows;
      if (row.split == "id") last.id = row.overall, have_id = true;
      if (row.split == "ood") last.ood = row.overall, have_ood = true;
    }
    if (!have_id || !have_ood) {
      result.warnings.push_back("run " + rd.string() + " has no final ID/OOD metrics");
      continue;
    }
    const auto key = arm_key(arm, fraction);
    if (!finals.count(key)) order.push_back(key);
    finals[key].push_back(last);
  }

  std::string md = "| arm | runs | median ID acc | median OOD acc | OOD delta vs vanilla |\n";
  md += "|---|---|---|---|---|\n";
  auto med = [](const std::vector<Final>& v, bool ood) {
    std::vector<double> xs;
    for (const auto& f : v) xs.push_back(ood ? f.ood : f.id);
    return median(xs);
  };
  std::optional<double> vanilla_ood;
  if (finals.count("vanilla")) vanilla_ood = med(finals["vanilla"], true);
  for (const auto& key : order) {
    const auto& v = finals[key];
    const double ood = med(v, true);
    md += "| " + key + " | " + std::to_string(v.size()) + " | " + fmt(med(v, false), 4) + " | " + fmt(ood, 4) + " | ";
    md += vanilla_ood ? fmt(ood - *vanilla_ood, 4) : std::string("n/a");
    md += " |\n";
  }
  if (order.empty()) md += "\n_No completed runs._\n";

  write_file_atomic(result.csv_path, csv);
  write_file_atomic(result.markdown_path, md);
  return result;
}

}  // namespace tpcl
