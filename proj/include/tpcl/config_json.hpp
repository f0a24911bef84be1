#pragma once

// JSON mappings for the configuration structs. Unknown keys are ignored and
// missing keys keep their defaults.

#include "json.hpp"
#include "tpcl/dataset.hpp"
#include "tpcl/pacing.hpp"
#include "tpcl/scheduler.hpp"
#include "tpcl/trainer.hpp"

namespace tpcl {

void to_json(nlohmann::json& j, const PacingConfig& c);
void from_json(const nlohmann::json& j, PacingConfig& c);

void to_json(nlohmann::json& j, const SchedulerConfig& c);
void from_json(const nlohmann::json& j, SchedulerConfig& c);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

void to_json(nlohmann::json& j, const SyntheticSpec& c);
void from_json(const nlohmann::json& j, SyntheticSpec& c);

void to_json(nlohmann::json& j, const HistogramGrid& g);
HistogramGrid grid_from_json(const nlohmann::json& j);

nlohmann::json difficulty_to_json_object(const DifficultyVector& v);
DifficultyVector difficulty_from_json_object(const nlohmann::json& j);

}  // namespace tpcl
