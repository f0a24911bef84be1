#include "tpcl/difficulty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace tpcl {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// LossReport
// ---------------------------------------------------------------------------

void LossReport::validate() const {
  std::unordered_set<SampleId> seen;
  seen.reserve(records.size());
  for (const auto& r : records) {
    if (!std::isfinite(r.loss) || r.loss < 0.0)
      throw ValidationError("loss report: sample " + std::to_string(r.id) + " has invalid loss " +
                            std::to_string(r.loss));
    if (!seen.insert(r.id).second)
      throw ValidationError("loss report: sample " + std::to_string(r.id) + " appears twice");
  }
}

std::string loss_report_to_jsonl(const LossReport& report) {
  std::string body;
  body.reserve(report.records.size() * 48);
  for (const auto& r : report.records) {
    body += json{{"id", r.id}, {"task", r.task}, {"loss", r.loss}}.dump();
    body += '\n';
  }
  json header = {{"schema_version", kSchemaVersion},
                 {"iteration", report.iteration},
                 {"cycle", report.cycle},
                 {"n", report.records.size()},
                 {"checksum", checksum_hex(body)}};
  return header.dump() + "\n" + body;
}

LossReport loss_report_from_jsonl(std::string_view text) {
  const auto header_end = text.find('\n');
  if (text.empty() || header_end == std::string_view::npos)
    throw ValidationError("loss report: missing header line");
  LossReport report;
  json header;
  try {
    header = json::parse(text.substr(0, header_end));
    const int version = header.value("schema_version", kSchemaVersion);
    if (version != kSchemaVersion)
      throw ValidationError("loss report: unsupported schema_version " + std::to_string(version));
    report.iteration = header.at("iteration").get<int>();
    report.cycle = header.at("cycle").get<int>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("loss report header: ") + e.what());
  }
  const auto body = text.substr(header_end + 1);
  if (header.contains("checksum") && header.at("checksum").get<std::string>() != checksum_hex(body))
    throw IntegrityError("loss report: checksum mismatch");

  std::size_t pos = 0;
  std::size_t line_no = 1;
  while (pos < body.size()) {
    auto end = body.find('\n', pos);
    if (end == std::string_view::npos) end = body.size();
    auto line = body.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      auto doc = json::parse(line);
      report.records.push_back(
          {doc.at("id").get<SampleId>(), doc.at("task").get<TaskId>(), doc.at("loss").get<double>()});
    } catch (const json::exception& e) {
      throw ValidationError("loss report line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  const auto n = header.at("n").get<std::size_t>();
  if (n != report.records.size())
    throw ValidationError("loss report: header says n=" + std::to_string(n) + " but body has " +
                          std::to_string(report.records.size()) + " records");
  report.validate();
  return report;
}

void write_loss_report(const std::filesystem::path& path, const LossReport& report) {
  write_file_atomic(path, loss_report_to_jsonl(report));
}

LossReport read_loss_report(const std::filesystem::path& path) {
  try {
    return loss_report_from_jsonl(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Histograms
// ---------------------------------------------------------------------------

HistogramGrid::HistogramGrid(int bins, double upper) : bins_(bins), upper_(upper) {
  if (bins < 2) throw ValidationError("histogram grid needs at least 2 bins");
  if (!(upper > 0.0) || !std::isfinite(upper)) throw ValidationError("histogram upper edge must be positive");
}

int HistogramGrid::bin_of(double loss) const {
  if (loss >= upper_) return bins_ - 1;
  if (loss <= 0.0) return 0;
  int idx = static_cast<int>(std::floor(loss / width()));
  idx = std::clamp(idx, 0, bins_ - 1);
  // Settle division rounding against the edges themselves.
  if (idx + 1 < bins_ && loss >= edge(idx + 1)) ++idx;
  if (idx > 0 && loss < edge(idx)) --idx;
  return idx;
}

HistogramGrid fit_grid(const LossReport& first_report, int bins) {
  if (first_report.records.empty()) throw ValidationError("cannot fit a histogram grid to an empty report");
  double upper = 0.0;
  for (const auto& r : first_report.records) upper = std::max(upper, r.loss);
  if (!(upper > 0.0)) upper = kDegenerateUpperEdge;
  return HistogramGrid(bins, upper);
}

std::map<TaskId, HistogramGrid> fit_task_grids(const LossReport& first_report, int bins) {
  if (first_report.records.empty()) throw ValidationError("cannot fit a histogram grid to an empty report");
  std::map<TaskId, double> upper;
  for (const auto& r : first_report.records) {
    auto& u = upper[r.task];
    u = std::max(u, r.loss);
  }
  std::map<TaskId, HistogramGrid> grids;
  for (const auto& [task, u] : upper) grids.emplace(task, HistogramGrid(bins, u > 0.0 ? u : kDegenerateUpperEdge));
  return grids;
}

ScoreHistogram build_histogram(std::span<const double> losses, const HistogramGrid& grid) {
  if (losses.empty()) throw ValidationError("cannot build a histogram for an empty task");
  ScoreHistogram h{grid, std::vector<double>(static_cast<std::size_t>(grid.bins()), 0.0)};
  for (double loss : losses) h.mass[static_cast<std::size_t>(grid.bin_of(loss))] += 1.0;
  const double n = static_cast<double>(losses.size());
  for (auto& m : h.mass) m /= n;
  return h;
}

namespace {
std::map<TaskId, std::vector<double>> losses_by_task(const LossReport& report) {
  std::map<TaskId, std::vector<double>> by_task;
  for (const auto& r : report.records) by_task[r.task].push_back(r.loss);
  return by_task;
}
}  // namespace

TaskHistograms build_task_histograms(const LossReport& report, const HistogramGrid& grid) {
  TaskHistograms out;
  for (const auto& [task, losses] : losses_by_task(report)) out.emplace(task, build_histogram(losses, grid));
  return out;
}

TaskHistograms build_task_histograms(const LossReport& report, const std::map<TaskId, HistogramGrid>& grids) {
  TaskHistograms out;
  for (const auto& [task, losses] : losses_by_task(report)) {
    auto it = grids.find(task);
    if (it == grids.end()) throw ValidationError("no histogram grid for task " + std::to_string(task));
    out.emplace(task, build_histogram(losses, it->second));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Optimal transport
// ---------------------------------------------------------------------------

namespace {

// North-west corner walk over the two cumulative distributions. In 1D with a
// convex ground cost this monotone coupling is optimal.
template <typename Emit>
double monotone_transport(const ScoreHistogram& a, const ScoreHistogram& b, Emit&& emit) {
  if (!(a.grid == b.grid)) throw ValidationError("optimal transport needs histograms on the same grid");
  const auto n = a.mass.size();
  if (b.mass.size() != n || n != static_cast<std::size_t>(a.grid.bins()))
    throw ValidationError("histogram mass length does not match its grid");
  double sa = 0.0, sb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!(a.mass[k] >= 0.0) || !(b.mass[k] >= 0.0) || !std::isfinite(a.mass[k] + b.mass[k]))
      throw ValidationError("histogram masses must be finite and >= 0");
    sa += a.mass[k];
    sb += b.mass[k];
  }
  if (std::abs(sa - sb) > 1e-9 * std::max(1.0, sa)) throw ValidationError("optimal transport needs equal total mass");
  const double w = a.grid.width();
  double cost = 0.0;
  std::size_t i = 0, j = 0;
  double ra = n ? a.mass[0] : 0.0;
  double rb = n ? b.mass[0] : 0.0;
  while (i < n && j < n) {
    if (ra <= 0.0) {
      if (++i < n) ra = a.mass[i];
      continue;
    }
    if (rb <= 0.0) {
      if (++j < n) rb = b.mass[j];
      continue;
    }
    const double moved = std::min(ra, rb);
    const double d = (static_cast<double>(i) - static_cast<double>(j)) * w;
    cost += moved * d * d;
    emit(static_cast<int>(i), static_cast<int>(j), moved);
    if (ra <= rb) {
      rb -= ra;
      ra = 0.0;
    } else {
      ra -= rb;
      rb = 0.0;
    }
  }
  return cost;
}

}  // namespace

double ot_divergence(const ScoreHistogram& a, const ScoreHistogram& b) {
  return monotone_transport(a, b, [](int, int, double) {});
}

TransportPlan ot_plan(const ScoreHistogram& a, const ScoreHistogram& b) {
  TransportPlan plan;
  plan.cost = monotone_transport(a, b, [&](int i, int j, double m) { plan.couplings.push_back({i, j, m}); });
  return plan;
}

DifficultyVector divergence_vector(const TaskHistograms& prev, const TaskHistograms& curr) {
  std::string missing;
  for (const auto& [task, h] : prev)
    if (!curr.count(task)) missing += " " + std::to_string(task) + "(current)";
  for (const auto& [task, h] : curr)
    if (!prev.count(task)) missing += " " + std::to_string(task) + "(previous)";
  if (!missing.empty()) throw ValidationError("divergence: task sets differ; missing:" + missing);
  DifficultyVector out;
  for (const auto& [task, h] : curr) out.emplace(task, ot_divergence(h, prev.at(task)));
  return out;
}

// ---------------------------------------------------------------------------
// Consolidation
// ---------------------------------------------------------------------------

std::string to_string(AlphaMode mode) {
  switch (mode) {
    case AlphaMode::Increasing: return "increasing";
    case AlphaMode::Decreasing: return "decreasing";
    case AlphaMode::Uniform: return "uniform";
  }
  return "uniform";
}

AlphaMode alpha_mode_from_string(std::string_view name) {
  if (name == "increasing") return AlphaMode::Increasing;
  if (name == "decreasing") return AlphaMode::Decreasing;
  if (name == "uniform") return AlphaMode::Uniform;
  throw ValidationError("unknown alpha mode '" + std::string(name) + "'");
}

std::vector<double> alpha_preset(AlphaMode mode, int cycles) {
  if (cycles < 2) throw ValidationError("consolidation needs B >= 2");
  const auto n = static_cast<std::size_t>(cycles - 1);
  switch (mode) {
    case AlphaMode::Uniform: return std::vector<double>(n, 1.0 / static_cast<double>(n));
    case AlphaMode::Increasing:
      if (cycles == 5) return {0.1, 0.1, 0.3, 0.5};
      break;
    case AlphaMode::Decreasing:
      if (cycles == 5) return {0.5, 0.3, 0.1, 0.1};
      break;
  }
  throw ValidationError("alpha preset '" + to_string(mode) + "' is only defined for B = 5; pass explicit alphas");
}

ConsolidationWindow::ConsolidationWindow(std::vector<double> alphas) : alphas_(std::move(alphas)) {
  if (alphas_.empty()) throw ValidationError("consolidation window needs at least one weight (B >= 2)");
  for (double a : alphas_)
    if (!(a >= 0.0) || !std::isfinite(a)) throw ValidationError("consolidation weights must be finite and >= 0");
}

void ConsolidationWindow::push(DifficultyVector divergences) {
  if (complete()) throw Error("consolidation window already holds B-1 divergence vectors");
  history_.push_back(std::move(divergences));
}

DifficultyVector ConsolidationWindow::consolidate() const {
  if (!complete())
    throw Error("consolidation window incomplete: have " + std::to_string(history_.size()) + " of " +
                std::to_string(alphas_.size()) + " divergence vectors (need b=2..B)");
  DifficultyVector out;
  for (const auto& [task, v] : history_.front()) out[task] = 0.0;
  for (std::size_t b = 0; b < history_.size(); ++b) {
    if (history_[b].size() != out.size()) throw ValidationError("consolidation: task sets differ across cycles");
    for (const auto& [task, v] : history_[b]) {
      auto it = out.find(task);
      if (it == out.end()) throw ValidationError("consolidation: task sets differ across cycles");
      it->second += alphas_[b] * v;
    }
  }
  return out;
}

DifficultyVector mean_difficulty(const LossReport& report) {
  if (report.records.empty()) throw ValidationError("mean difficulty of an empty report");
  std::map<TaskId, std::pair<double, std::size_t>> acc;
  for (const auto& r : report.records) {
    auto& [sum, n] = acc[r.task];
    sum += r.loss;
    ++n;
  }
  DifficultyVector out;
  for (const auto& [task, sn] : acc) out.emplace(task, sn.first / static_cast<double>(sn.second));
  return out;
}

std::string difficulty_to_json(int iteration, const DifficultyVector& scores) {
  json s = json::object();
  for (const auto& [task, v] : scores) s[std::to_string(task)] = v;
  return json{{"schema_version", kSchemaVersion}, {"iteration", iteration}, {"scores", s}}.dump(2) + "\n";
}

}  // namespace tpcl
