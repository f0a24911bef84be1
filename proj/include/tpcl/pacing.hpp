#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tpcl {

enum class PacingMode { Incremental, Decremental, Discrete };

std::string to_string(PacingMode mode);
PacingMode pacing_mode_from_string(std::string_view name);

struct PacingConfig {
  double lambda0 = 0.1;
  double lambda_grow = 4.5;
  PacingMode mode = PacingMode::Incremental;
  // Cumulative fractions, ascending, ending at 1.0 (discrete mode only; empty
  // means the default lexicon groups).
  std::vector<double> discrete_fractions;

  void validate() const;
};

// Cumulative type-count fractions of the default lexicon's coarse groups in
// fixed-curriculum order: 32/65, 61/65, 62/65, 1.
std::vector<double> default_discrete_fractions();

// Stage indices are zero-based: stage 0 is the first post-warm-up stage.
double pace_incremental(int stage, const PacingConfig& cfg);
double pace_decremental(int stage, const PacingConfig& cfg);
double pace_discrete(int stage, const PacingConfig& cfg);
double pace(int stage, const PacingConfig& cfg);

// Fractions for stages 0..stages-1.
std::vector<double> pacing_plan(const PacingConfig& cfg, int stages);

}  // namespace tpcl
