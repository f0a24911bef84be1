#include "tpcl/pacing.hpp"

#include <algorithm>
#include <cmath>

#include "tpcl/common.hpp"
#include "tpcl/dataset.hpp"

namespace tpcl {

std::string to_string(PacingMode mode) {
  switch (mode) {
    case PacingMode::Incremental: return "incremental";
    case PacingMode::Decremental: return "decremental";
    case PacingMode::Discrete: return "discrete";
  }
  return "incremental";
}

PacingMode pacing_mode_from_string(std::string_view name) {
  if (name == "incremental") return PacingMode::Incremental;
  if (name == "decremental") return PacingMode::Decremental;
  if (name == "discrete") return PacingMode::Discrete;
  throw ValidationError("unknown pacing mode '" + std::string(name) + "'");
}

void PacingConfig::validate() const {
  if (mode == PacingMode::Discrete) {
    if (discrete_fractions.empty()) return;  // lexicon defaults
    double prev = 0.0;
    for (double f : discrete_fractions) {
      if (!(f > prev) || f > 1.0) throw ValidationError("discrete fractions must be ascending within (0, 1]");
      prev = f;
    }
    if (discrete_fractions.back() != 1.0) throw ValidationError("discrete fractions must end at 1.0");
    return;
  }
  if (!(lambda0 > 0.0 && lambda0 <= 1.0)) throw ValidationError("lambda0 must lie in (0, 1]");
  if (!(lambda_grow > 0.0) || !std::isfinite(lambda_grow)) throw ValidationError("lambda_grow must be positive");
}

std::vector<double> default_discrete_fractions() {
  const auto groups = coarse_partition(TypeLexicon::default_lexicon());
  const double total = static_cast<double>(TypeLexicon::default_lexicon().size());
  std::vector<double> out;
  std::size_t cumulative = 0;
  for (const auto& g : groups.tasks) {
    cumulative += g.size();
    out.push_back(static_cast<double>(cumulative) / total);
  }
  return out;
}

namespace {
// Snap to 12 decimals so 0.1 + 0.2*1 prints and compares as 0.3.
double canonical(double f) { return std::round(f * 1e12) / 1e12; }

double step(const PacingConfig& cfg) { return (1.0 - cfg.lambda0) / cfg.lambda_grow; }
}  // namespace

double pace_incremental(int stage, const PacingConfig& cfg) {
  cfg.validate();
  if (stage < 0) throw ValidationError("stage index must be >= 0");
  return std::min(1.0, canonical(cfg.lambda0 + step(cfg) * stage));
}

double pace_decremental(int stage, const PacingConfig& cfg) {
  cfg.validate();
  if (stage < 0) throw ValidationError("stage index must be >= 0");
  return std::max(0.0, canonical(1.0 - step(cfg) * stage));
}

double pace_discrete(int stage, const PacingConfig& cfg) {
  cfg.validate();
  const auto fractions = cfg.discrete_fractions.empty() ? default_discrete_fractions() : cfg.discrete_fractions;
  if (stage < 0 || static_cast<std::size_t>(stage) >= fractions.size())
    throw ValidationError("discrete pacing has no stage " + std::to_string(stage));
  return fractions[static_cast<std::size_t>(stage)];
}

double pace(int stage, const PacingConfig& cfg) {
  switch (cfg.mode) {
    case PacingMode::Incremental: return pace_incremental(stage, cfg);
    case PacingMode::Decremental: return pace_decremental(stage, cfg);
    case PacingMode::Discrete: return pace_discrete(stage, cfg);
  }
  return 1.0;
}

std::vector<double> pacing_plan(const PacingConfig& cfg, int stages) {
  std::vector<double> out;
  for (int k = 0; k < stages; ++k) out.push_back(pace(k, cfg));
  return out;
}

}  // namespace tpcl
