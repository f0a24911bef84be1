#include "tpcl/config_json.hpp"

namespace tpcl {

using json = nlohmann::json;

namespace {
template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}
}  // namespace

void to_json(json& j, const PacingConfig& c) {
  j = json{{"lambda0", c.lambda0}, {"lambda_grow", c.lambda_grow}, {"mode", to_string(c.mode)}};
  if (!c.discrete_fractions.empty()) j["discrete_fractions"] = c.discrete_fractions;
}

void from_json(const json& j, PacingConfig& c) {
  read_opt(j, "lambda0", c.lambda0);
  read_opt(j, "lambda_grow", c.lambda_grow);
  if (j.contains("mode")) c.mode = pacing_mode_from_string(j.at("mode").get<std::string>());
  read_opt(j, "discrete_fractions", c.discrete_fractions);
}

void to_json(json& j, const SchedulerConfig& c) {
  j = json{{"stages", c.stages},
           {"cycles", c.cycles},
           {"alphas", c.alphas},
           {"pacing", c.pacing},
           {"direction", to_string(c.direction)},
           {"warmup_cycles", c.warmup_cycles},
           {"difficulty_mode", to_string(c.difficulty_mode)},
           {"histogram_bins", c.histogram_bins},
           {"per_task_grid", c.per_task_grid},
           {"seed", c.seed}};
}

void from_json(const json& j, SchedulerConfig& c) {
  read_opt(j, "stages", c.stages);
  read_opt(j, "cycles", c.cycles);
  read_opt(j, "alphas", c.alphas);
  if (j.contains("pacing")) j.at("pacing").get_to(c.pacing);
  if (j.contains("direction")) c.direction = direction_from_string(j.at("direction").get<std::string>());
  read_opt(j, "warmup_cycles", c.warmup_cycles);
  if (j.contains("difficulty_mode"))
    c.difficulty_mode = difficulty_mode_from_string(j.at("difficulty_mode").get<std::string>());
  read_opt(j, "histogram_bins", c.histogram_bins);
  read_opt(j, "per_task_grid", c.per_task_grid);
  read_opt(j, "seed", c.seed);
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"learning_rate", c.learning_rate},
           {"batch_size", c.batch_size},
           {"seed", c.seed},
           {"passes_per_cycle", c.passes_per_cycle}};
}

void from_json(const json& j, TrainConfig& c) {
  read_opt(j, "learning_rate", c.learning_rate);
  read_opt(j, "batch_size", c.batch_size);
  read_opt(j, "seed", c.seed);
  read_opt(j, "passes_per_cycle", c.passes_per_cycle);
}

void to_json(json& j, const SyntheticSpec& c) {
  j = json{{"num_tasks", c.num_tasks},
           {"samples_per_task", c.samples_per_task},
           {"test_samples_per_task", c.test_samples_per_task},
           {"feature_dim", c.feature_dim},
           {"labels_per_task", c.labels_per_task},
           {"bias_strength", c.bias_strength},
           {"prior_shift", to_string(c.prior_shift)},
           {"informative_noise", c.informative_noise},
           {"noise_spread", c.noise_spread},
           {"spurious_scale", c.spurious_scale},
           {"seed", c.seed}};
}

void from_json(const json& j, SyntheticSpec& c) {
  read_opt(j, "num_tasks", c.num_tasks);
  read_opt(j, "samples_per_task", c.samples_per_task);
  read_opt(j, "test_samples_per_task", c.test_samples_per_task);
  read_opt(j, "feature_dim", c.feature_dim);
  read_opt(j, "labels_per_task", c.labels_per_task);
  read_opt(j, "bias_strength", c.bias_strength);
  if (j.contains("prior_shift")) c.prior_shift = prior_shift_from_string(j.at("prior_shift").get<std::string>());
  read_opt(j, "informative_noise", c.informative_noise);
  read_opt(j, "noise_spread", c.noise_spread);
  read_opt(j, "spurious_scale", c.spurious_scale);
  read_opt(j, "seed", c.seed);
}

void to_json(json& j, const HistogramGrid& g) { j = json{{"bins", g.bins()}, {"upper", g.upper()}}; }

HistogramGrid grid_from_json(const json& j) { return HistogramGrid(j.at("bins").get<int>(), j.at("upper").get<double>()); }

json difficulty_to_json_object(const DifficultyVector& v) {
  json out = json::object();
  for (const auto& [task, score] : v) out[std::to_string(task)] = score;
  return out;
}

DifficultyVector difficulty_from_json_object(const json& j) {
  DifficultyVector out;
  for (const auto& [key, value] : j.items()) out.emplace(std::stoi(key), value.get<double>());
  return out;
}

}  // namespace tpcl
