#include "tpcl/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "json.hpp"
#include "tpcl/config_json.hpp"

namespace tpcl {

using json = nlohmann::json;

std::string to_string(Direction direction) {
  return direction == Direction::HardToEasy ? "hard_to_easy" : "easy_to_hard";
}

Direction direction_from_string(std::string_view name) {
  if (name == "hard_to_easy" || name == "backward") return Direction::HardToEasy;
  if (name == "easy_to_hard" || name == "forward") return Direction::EasyToHard;
  throw ValidationError("unknown direction '" + std::string(name) + "'");
}

std::string to_string(DifficultyMode mode) { return mode == DifficultyMode::Mean ? "mean" : "distributional"; }

DifficultyMode difficulty_mode_from_string(std::string_view name) {
  if (name == "distributional") return DifficultyMode::Distributional;
  if (name == "mean") return DifficultyMode::Mean;
  throw ValidationError("unknown difficulty mode '" + std::string(name) + "'");
}

void SchedulerConfig::validate() const {
  if (stages < 1) throw ValidationError("scheduler: R (stages) must be >= 1");
  if (cycles < 2) throw ValidationError("scheduler: B (cycles) must be >= 2");
  if (alphas.size() != static_cast<std::size_t>(cycles - 1))
    throw ValidationError("scheduler: need B-1 = " + std::to_string(cycles - 1) + " alphas, got " +
                          std::to_string(alphas.size()));
  for (double a : alphas)
    if (!(a >= 0.0) || !std::isfinite(a)) throw ValidationError("scheduler: alphas must be finite and >= 0");
  const int min_warmup = difficulty_mode == DifficultyMode::Distributional ? 2 : 1;
  if (warmup_cycles < min_warmup)
    throw ValidationError("scheduler: warm-up needs at least " + std::to_string(min_warmup) + " cycles");
  if (histogram_bins < 2) throw ValidationError("scheduler: histogram needs >= 2 bins");
  pacing.validate();
  for (int k = 0; k < stages; ++k)
    if (!(pace(k, pacing) > 0.0))
      throw ValidationError("scheduler: pacing gives an empty stage " + std::to_string(k) +
                            "; lower R or raise lambda_grow");
}

std::vector<double> SchedulerConfig::warmup_alphas() const {
  if (warmup_cycles == cycles) return alphas;
  return std::vector<double>(static_cast<std::size_t>(warmup_cycles - 1), 1.0 / (warmup_cycles - 1));
}

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

namespace {
std::size_t target_count(double fraction, std::size_t total) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(total) - 1e-9));
}
}  // namespace

CurriculumStage plan_stage(const DifficultyVector& difficulty, const TaskPartition& partition, double fraction,
                           Direction direction, int stage_index) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ValidationError("stage fraction must lie in (0, 1], got " + std::to_string(fraction));
  std::vector<std::pair<TaskId, double>> order;
  for (const auto& [task, ids] : partition.tasks) {
    if (ids.empty()) continue;
    auto it = difficulty.find(task);
    if (it == difficulty.end()) throw ValidationError("no difficulty score for task " + std::to_string(task));
    order.emplace_back(task, it->second);
  }
  if (order.empty()) throw ValidationError("empty curriculum: the partition has no samples");
  std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    if (a.second != b.second)
      return direction == Direction::HardToEasy ? a.second > b.second : a.second < b.second;
    return a.first < b.first;
  });

  std::size_t total = 0;
  for (const auto& [task, s] : order) total += partition.task_size(task);

  CurriculumStage stage;
  stage.stage = stage_index;
  stage.fraction = fraction;
  stage.direction = to_string(direction);
  const auto target = target_count(fraction, total);
  std::size_t count = 0;
  for (const auto& [task, s] : order) {
    if (count >= target) break;
    const auto& ids = partition.tasks.at(task);
    stage.tasks.push_back(task);
    stage.samples.insert(stage.samples.end(), ids.begin(), ids.end());
    count += ids.size();
  }
  // excluded tasks keep their scores too, for auditing
  for (const auto& [task, s] : order) stage.difficulty[task] = s;
  return stage;
}

CurriculumStage warmup_stage(const TaskPartition& partition, int cycles) {
  CurriculumStage stage;
  stage.stage = kWarmupStage;
  stage.fraction = 1.0;
  stage.direction = std::string(kWarmupDirection);
  stage.cycles = cycles;
  for (const auto& [task, ids] : partition.tasks) {
    if (ids.empty()) continue;
    stage.tasks.push_back(task);
    stage.samples.insert(stage.samples.end(), ids.begin(), ids.end());
  }
  return stage;
}

FixedPlan plan_fixed(const TaskPartition& partition, const TypeLexicon& lexicon, const PacingConfig& pacing,
                     int cycles) {
  const auto data_groups = coarse_partition(partition, lexicon);
  std::vector<double> fractions;
  if (pacing.mode == PacingMode::Discrete && pacing.discrete_fractions.size() == kFixedCurriculumOrder.size()) {
    pacing.validate();
    fractions = pacing.discrete_fractions;
  } else {
    const auto type_groups = coarse_partition(lexicon);
    std::size_t cumulative = 0;
    for (const auto& g : type_groups.tasks) {
      cumulative += g.size();
      fractions.push_back(static_cast<double>(cumulative) / static_cast<double>(lexicon.size()));
    }
  }

  FixedPlan plan;
  std::vector<TaskId> tasks;
  std::vector<SampleId> samples;
  const std::size_t n_groups = kFixedCurriculumOrder.size();
  for (std::size_t g = 0; g < n_groups; ++g) {
    const auto& group_tasks = data_groups.tasks[g];
    if (group_tasks.empty()) {
      plan.warnings.push_back("no samples for group '" + std::string(to_string(kFixedCurriculumOrder[g])) +
                              "'; stage skipped");
      continue;
    }
    for (TaskId t : group_tasks) {
      tasks.push_back(t);
      const auto& ids = partition.tasks.at(t);
      samples.insert(samples.end(), ids.begin(), ids.end());
    }
    bool later_data = false;
    for (std::size_t h = g + 1; h < n_groups; ++h) later_data = later_data || !data_groups.tasks[h].empty();
    CurriculumStage stage;
    stage.stage = static_cast<int>(plan.stages.size());
    stage.fraction = later_data ? fractions[g] : fractions.back();
    stage.direction = std::string(kFixedDirection);
    stage.tasks = tasks;
    stage.samples = samples;
    stage.cycles = cycles;
    plan.stages.push_back(std::move(stage));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

namespace {

json stage_to_object(const CurriculumStage& s) {
  return json{{"schema_version", kSchemaVersion},
              {"stage", s.stage},
              {"fraction", s.fraction},
              {"direction", s.direction},
              {"cycles", s.cycles},
              {"tasks", s.tasks},
              {"samples", s.samples},
              {"difficulty", difficulty_to_json_object(s.difficulty)}};
}

CurriculumStage stage_from_object(const json& j) {
  CurriculumStage s;
  s.stage = j.at("stage").get<int>();
  s.fraction = j.at("fraction").get<double>();
  s.direction = j.at("direction").get<std::string>();
  s.cycles = j.value("cycles", 1);
  s.tasks = j.at("tasks").get<std::vector<TaskId>>();
  s.samples = j.at("samples").get<std::vector<SampleId>>();
  s.difficulty = difficulty_from_json_object(j.at("difficulty"));
  return s;
}

void check_version(const json& j, const char* what) {
  const int version = j.value("schema_version", -1);
  if (version != kSchemaVersion)
    throw IntegrityError(std::string(what) + ": unsupported schema_version " + std::to_string(version));
}

}  // namespace

std::string manifest_to_json(const CurriculumStage& stage) {
  auto obj = stage_to_object(stage);
  obj["checksum"] = checksum_hex(obj.dump());
  return obj.dump() + "\n";
}

CurriculumStage manifest_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
  check_version(j, "manifest");
  const auto stored = j.value("checksum", std::string{});
  j.erase("checksum");
  if (stored != checksum_hex(j.dump())) throw IntegrityError("manifest: checksum mismatch");
  try {
    return stage_from_object(j);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
}

std::string partition_checksum(const TaskPartition& partition) {
  std::string buf;
  for (const auto& [task, ids] : partition.tasks) {
    buf += std::to_string(task) + ":";
    for (SampleId id : ids) buf += std::to_string(id) + ",";
    buf += ";";
  }
  return checksum_hex(buf);
}

// ---------------------------------------------------------------------------
// CurriculumScheduler
// ---------------------------------------------------------------------------

CurriculumScheduler::CurriculumScheduler(SchedulerConfig cfg, TaskPartition partition)
    : cfg_(std::move(cfg)), partition_(std::move(partition)) {
  cfg_.validate();
  if (partition_.total == 0) throw ValidationError("scheduler: empty dataset");
  current_ = warmup_stage(partition_, cfg_.warmup_cycles);
  if (cfg_.difficulty_mode == DifficultyMode::Distributional) window_ = ConsolidationWindow(cfg_.warmup_alphas());
}

int CurriculumScheduler::cycles_in_iteration() const {
  return iteration_ == 0 ? cfg_.warmup_cycles : cfg_.cycles;
}

CycleRequest CurriculumScheduler::next_request() const {
  if (complete_) throw Error("scheduler: run is complete");
  return CycleRequest{iteration_, current_.stage, cycle_, current_.samples};
}

void CurriculumScheduler::check_report(const LossReport& report) const {
  if (report.iteration != iteration_ || report.cycle != cycle_)
    throw ValidationError("scheduler: expected report for iteration " + std::to_string(iteration_) + " cycle " +
                          std::to_string(cycle_) + ", got iteration " + std::to_string(report.iteration) +
                          " cycle " + std::to_string(report.cycle));
  if (report.records.size() != partition_.total)
    throw ValidationError("scheduler: report covers " + std::to_string(report.records.size()) + " samples, dataset has " +
                          std::to_string(partition_.total));
  std::unordered_map<SampleId, TaskId> task_of;
  task_of.reserve(partition_.total);
  for (const auto& [task, ids] : partition_.tasks)
    for (SampleId id : ids) task_of.emplace(id, task);
  for (const auto& r : report.records) {
    auto it = task_of.find(r.id);
    if (it == task_of.end()) throw ValidationError("scheduler: report names unknown sample " + std::to_string(r.id));
    if (it->second != r.task)
      throw ValidationError("scheduler: report assigns sample " + std::to_string(r.id) + " to task " +
                            std::to_string(r.task) + ", partition says " + std::to_string(it->second));
  }
  report.validate();
}

TaskHistograms CurriculumScheduler::histograms(const LossReport& report) const {
  return cfg_.per_task_grid ? build_task_histograms(report, task_grids_) : build_task_histograms(report, *grid_);
}

std::optional<CurriculumStage> CurriculumScheduler::submit(const LossReport& report) {
  if (complete_) throw Error("scheduler: run is already complete");
  check_report(report);

  if (cfg_.difficulty_mode == DifficultyMode::Distributional) {
    if (cfg_.per_task_grid) {
      if (task_grids_.empty()) task_grids_ = fit_task_grids(report, cfg_.histogram_bins);
    } else if (!grid_) {
      grid_ = fit_grid(report, cfg_.histogram_bins);
    }
    auto hist = histograms(report);
    if (cycle_ >= 2) window_.push(divergence_vector(prev_, hist));
    prev_ = std::move(hist);
  }

  if (++cycle_ <= cycles_in_iteration()) return std::nullopt;

  auto difficulty =
      cfg_.difficulty_mode == DifficultyMode::Distributional ? window_.consolidate() : mean_difficulty(report);
  difficulties_[iteration_] = difficulty;
  const int next_stage = iteration_;
  if (next_stage >= cfg_.stages) {
    complete_ = true;
    return std::nullopt;
  }
  auto stage = plan_stage(difficulty, partition_, pace(next_stage, cfg_.pacing), cfg_.direction, next_stage);
  stage.cycles = cfg_.cycles;
  planned_.push_back(stage);
  current_ = stage;
  ++iteration_;
  cycle_ = 1;
  prev_.clear();
  if (cfg_.difficulty_mode == DifficultyMode::Distributional) window_ = ConsolidationWindow(cfg_.alphas);
  return stage;
}

std::string CurriculumScheduler::state_json() const {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "tpcl-scheduler-state";
  j["config"] = cfg_;
  j["partition_checksum"] = partition_checksum(partition_);
  j["iteration"] = iteration_;
  j["cycle"] = cycle_;
  j["complete"] = complete_;
  j["grid"] = grid_ ? json(*grid_) : json(nullptr);
  json tg = json::object();
  for (const auto& [task, g] : task_grids_) tg[std::to_string(task)] = g;
  j["task_grids"] = tg;
  j["current"] = stage_to_object(current_);
  json prev = json::object();
  for (const auto& [task, h] : prev_) prev[std::to_string(task)] = h.mass;
  j["prev"] = prev;
  json window = json::array();
  for (const auto& v : window_.history()) window.push_back(difficulty_to_json_object(v));
  j["window"] = window;
  json planned = json::array();
  for (const auto& s : planned_) planned.push_back(stage_to_object(s));
  j["planned"] = planned;
  json diffs = json::object();
  for (const auto& [it, v] : difficulties_) diffs[std::to_string(it)] = difficulty_to_json_object(v);
  j["difficulties"] = diffs;
  j["checksum"] = checksum_hex(j.dump());
  return j.dump() + "\n";
}

CurriculumScheduler CurriculumScheduler::from_state_json(std::string_view text, TaskPartition partition) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IntegrityError(std::string("run state: ") + e.what());
  }
  check_version(j, "run state");
  const auto stored = j.value("checksum", std::string{});
  j.erase("checksum");
  if (stored != checksum_hex(j.dump())) throw IntegrityError("run state: checksum mismatch");
  if (j.at("partition_checksum").get<std::string>() != partition_checksum(partition))
    throw IntegrityError("run state: dataset partition differs from the one the run was started with");

  CurriculumScheduler s(j.at("config").get<SchedulerConfig>(), std::move(partition));
  s.iteration_ = j.at("iteration").get<int>();
  s.cycle_ = j.at("cycle").get<int>();
  s.complete_ = j.at("complete").get<bool>();
  if (!j.at("grid").is_null()) s.grid_ = grid_from_json(j.at("grid"));
  for (const auto& [key, g] : j.at("task_grids").items()) s.task_grids_.emplace(std::stoi(key), grid_from_json(g));
  s.current_ = stage_from_object(j.at("current"));
  for (const auto& [key, mass] : j.at("prev").items()) {
    const TaskId task = std::stoi(key);
    const HistogramGrid grid = s.cfg_.per_task_grid ? s.task_grids_.at(task) : *s.grid_;
    s.prev_.emplace(task, ScoreHistogram{grid, mass.get<std::vector<double>>()});
  }
  if (s.cfg_.difficulty_mode == DifficultyMode::Distributional) {
    s.window_ = ConsolidationWindow(s.iteration_ == 0 ? s.cfg_.warmup_alphas() : s.cfg_.alphas);
    for (const auto& v : j.at("window")) s.window_.push(difficulty_from_json_object(v));
  }
  for (const auto& p : j.at("planned")) s.planned_.push_back(stage_from_object(p));
  for (const auto& [key, v] : j.at("difficulties").items())
    s.difficulties_.emplace(std::stoi(key), difficulty_from_json_object(v));
  return s;
}

// ---------------------------------------------------------------------------
// Run loops
// ---------------------------------------------------------------------------

void run_dynamic(CurriculumScheduler& scheduler, TrainerClient& trainer, const RunHooks& hooks) {
  if (!scheduler.complete() && scheduler.iteration() == 0 && scheduler.cycle() == 1 && hooks.on_stage)
    hooks.on_stage(scheduler.current());
  while (!scheduler.complete()) {
    if (hooks.keep_going && !hooks.keep_going(scheduler)) return;
    const auto request = scheduler.next_request();
    trainer.train(request);
    auto report = trainer.score(request);
    if (hooks.on_report) hooks.on_report(request, report);
    const int iteration = request.iteration;
    auto planned = scheduler.submit(report);
    if (hooks.on_difficulty && (planned || scheduler.complete()))
      hooks.on_difficulty(iteration, scheduler.difficulties().at(iteration));
    if (planned && hooks.on_stage) hooks.on_stage(*planned);
    if (hooks.on_cycle_end) hooks.on_cycle_end(scheduler);
  }
}

FixedPlan run_fixed(const SchedulerConfig& cfg, const TaskPartition& partition, const TypeLexicon& lexicon,
                    TrainerClient& trainer, const RunHooks& hooks) {
  auto plan = plan_fixed(partition, lexicon, cfg.pacing, cfg.cycles);
  if (plan.stages.empty()) throw ValidationError("fixed curriculum: no coarse group has samples");
  for (const auto& stage : plan.stages) {
    if (hooks.on_stage) hooks.on_stage(stage);
    for (int b = 1; b <= cfg.cycles; ++b) trainer.train(CycleRequest{stage.stage + 1, stage.stage, b, stage.samples});
  }
  return plan;
}

void run_vanilla(const SchedulerConfig& cfg, const TaskPartition& partition, TrainerClient& trainer) {
  const auto all = warmup_stage(partition, cfg.warmup_cycles);
  for (int b = 1; b <= cfg.warmup_cycles; ++b) trainer.train(CycleRequest{0, kWarmupStage, b, all.samples});
  for (int k = 0; k < cfg.stages; ++k)
    for (int b = 1; b <= cfg.cycles; ++b) trainer.train(CycleRequest{k + 1, k, b, all.samples});
}

CurriculumStage plan_from_reports(std::span<const LossReport> reports, const TaskPartition& partition,
                                  const SchedulerConfig& cfg, int stage_index, const HistogramGrid& grid) {
  cfg.validate();
  if (static_cast<int>(reports.size()) != cfg.cycles)
    throw ValidationError("need b=2..B reports: got " + std::to_string(reports.size()) + " report(s), B = " +
                          std::to_string(cfg.cycles) + " (one per cycle, cycle 1 included as the baseline)");
  for (std::size_t i = 0; i < reports.size(); ++i) reports[i].validate();
  DifficultyVector difficulty;
  if (cfg.difficulty_mode == DifficultyMode::Mean) {
    difficulty = mean_difficulty(reports.back());
  } else {
    ConsolidationWindow window(cfg.alphas);
    auto prev = build_task_histograms(reports[0], grid);
    for (std::size_t b = 1; b < reports.size(); ++b) {
      auto curr = build_task_histograms(reports[b], grid);
      window.push(divergence_vector(prev, curr));
      prev = std::move(curr);
    }
    difficulty = window.consolidate();
  }
  auto stage = plan_stage(difficulty, partition, pace(stage_index, cfg.pacing), cfg.direction, stage_index);
  stage.cycles = cfg.cycles;
  return stage;
}

}  // namespace tpcl
