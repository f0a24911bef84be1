// One PASS/FAIL line per acceptance criterion. Exit status counts the
// criteria that failed without being listed via --known-failure.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "oracles/gradcheck.hpp"
#include "oracles/lp_transport.hpp"
#include "tpcl/experiment.hpp"
#include "tpcl/scheduler.hpp"

using namespace tpcl;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

ScoreHistogram random_histogram(std::mt19937_64& rng, int bins, double upper, double zero_prob = 0.3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScoreHistogram h{HistogramGrid(bins, upper), std::vector<double>(static_cast<std::size_t>(bins), 0.0)};
  double total = 0.0;
  for (auto& m : h.mass) {
    m = u(rng) < zero_prob ? 0.0 : u(rng);
    total += m;
  }
  if (total == 0.0) {
    h.mass[0] = 1.0;
    total = 1.0;
  }
  for (auto& m : h.mass) m /= total;
  return h;
}

std::vector<double> centers(const HistogramGrid& g) {
  std::vector<double> c;
  for (int i = 0; i < g.bins(); ++i) c.push_back(g.center(i));
  return c;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); }

// ---------------------------------------------------------------------------

Outcome p1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> bins(2, 20);
  std::uniform_real_distribution<double> upper(0.1, 10.0);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const int M = bins(rng);
    const double U = upper(rng);
    const auto a = random_histogram(rng, M, U);
    const auto b = random_histogram(rng, M, U);
    const double fast = ot_divergence(a, b);
    const double lp = oracle::transport_cost(a.mass, centers(a.grid), b.mass, centers(b.grid));
    worst = std::max(worst, rel_err(fast, lp));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 10.0,
          "500 pairs, max rel err " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome p2() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> bins(2, 60), shift(1, 20);
  std::uniform_real_distribution<double> upper(0.1, 10.0);
  int failures = 0;
  for (int i = 0; i < 200; ++i) {
    const int M = bins(rng);
    const double U = upper(rng);
    const auto a = random_histogram(rng, M, U);
    const auto b = random_histogram(rng, M, U);
    const double ab = ot_divergence(a, b), ba = ot_divergence(b, a);
    if (ot_divergence(a, a) != 0.0 || ot_divergence(b, b) != 0.0) ++failures;
    if (rel_err(ab, ba) > 1e-12) ++failures;
    if (ab < 0.0) ++failures;
    // same pair moved s bins to the right on a wider grid with equal bin width
    const int s = shift(rng);
    const HistogramGrid wide(M + s, U / M * (M + s));
    ScoreHistogram as{wide, std::vector<double>(static_cast<std::size_t>(M + s), 0.0)}, bs = as;
    for (int k = 0; k < M; ++k) {
      as.mass[static_cast<std::size_t>(k + s)] = a.mass[static_cast<std::size_t>(k)];
      bs.mass[static_cast<std::size_t>(k + s)] = b.mass[static_cast<std::size_t>(k)];
    }
    if (rel_err(ot_divergence(as, bs), ab) > 1e-9 && std::abs(ot_divergence(as, bs) - ab) > 1e-15) ++failures;
  }
  return {failures == 0, "200 cases (identity, symmetry, nonnegativity, translation), " +
                             std::to_string(failures) + " violations"};
}

Outcome p3() {
  std::mt19937_64 rng(303);
  std::vector<double> times;
  double sink = 0.0;
  for (int i = 0; i < 1001; ++i) {
    const auto a = random_histogram(rng, 100, 5.0, 0.0);
    const auto b = random_histogram(rng, 100, 5.0, 0.0);
    const auto t0 = Clock::now();
    sink += ot_divergence(a, b);
    times.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  const double med = median(times);
  return {med <= 5.0 && std::isfinite(sink), "M=100 median " + fmt("%.4f", med) + " ms over 1001 pairs"};
}

Outcome p4() {
  const auto plan = pacing_plan(PacingConfig{}, 6);
  const std::vector<double> expected{0.10, 0.30, 0.50, 0.70, 0.90, 1.00};
  std::string shown;
  for (double f : plan) shown += fmt("%g ", f);
  return {plan == expected, "plan = [ " + shown + "]"};
}

Outcome p5() {
  const auto& lex = TypeLexicon::default_lexicon();
  const auto groups = coarse_partition(lex);
  std::vector<std::size_t> counts;
  for (const auto& g : groups.tasks) counts.push_back(g.size());
  const auto f = default_discrete_fractions();
  const std::vector<double> want{0.4923, 0.9385, 0.9538, 1.0};
  bool ok = counts == std::vector<std::size_t>{32, 29, 1, 3} && f.size() == 4;
  for (std::size_t i = 0; ok && i < 4; ++i) ok = std::abs(f[i] - want[i]) <= 1e-4;
  std::string shown;
  for (double x : f) shown += fmt("%.4f ", x);
  return {ok, "counts " + std::to_string(counts[0]) + "/" + std::to_string(counts[1]) + "/" +
                  std::to_string(counts[2]) + "/" + std::to_string(counts[3]) + ", fractions [ " + shown + "]"};
}

Outcome p6() {
  ConsolidationWindow w({0.1, 0.1, 0.3, 0.5});
  for (double v : {1.0, 2.0, 3.0, 4.0}) w.push(DifficultyVector{{0, v}});
  const double got = w.consolidate().at(0);
  bool ok = got == 3.2;
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    ConsolidationWindow r({0.1, 0.1, 0.3, 0.5});
    std::map<TaskId, std::pair<double, double>> range;
    for (int b = 0; b < 4; ++b) {
      DifficultyVector v;
      for (TaskId t = 0; t < 5; ++t) {
        v[t] = u(rng);
        auto [it, fresh] = range.emplace(t, std::make_pair(v[t], v[t]));
        if (!fresh) it->second = {std::min(it->second.first, v[t]), std::max(it->second.second, v[t])};
      }
      r.push(v);
    }
    for (const auto& [t, s] : r.consolidate())
      if (s < range[t].first - 1e-12 || s > range[t].second + 1e-12) ++violations;
  }
  ok = ok && violations == 0;
  return {ok, "[1,2,3,4] -> " + fmt("%g", got) + ", " + std::to_string(violations) + " bound violations in 100 windows"};
}

TaskPartition sized_partition(const std::vector<std::size_t>& sizes) {
  TaskPartition p;
  SampleId next = 0;
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    for (std::size_t i = 0; i < sizes[t]; ++i) p.tasks[static_cast<TaskId>(t)].push_back(next++);
    p.total += sizes[t];
  }
  return p;
}

Outcome p7() {
  const auto t0 = Clock::now();
  int violations = 0;
  // fixed example and ties
  {
    const auto p = sized_partition({50, 30, 20});
    if (plan_stage({{0, 0.1}, {1, 0.9}, {2, 0.5}}, p, 0.4, Direction::HardToEasy).tasks != std::vector<TaskId>{1, 2})
      ++violations;
    if (plan_stage({{0, 0.5}, {1, 0.5}, {2, 0.5}}, p, 0.4, Direction::HardToEasy).tasks != std::vector<TaskId>{0})
      ++violations;
  }
  std::mt19937_64 rng(707);
  std::uniform_int_distribution<int> ntasks(1, 15), size(1, 50);
  std::uniform_real_distribution<double> score(0.0, 1.0), scale(1e-3, 1e3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(ntasks(rng)));
    for (auto& s : sizes) s = static_cast<std::size_t>(size(rng));
    const auto p = sized_partition(sizes);
    DifficultyVector d, scaled;
    const double k = scale(rng);
    for (const auto& [t, ids] : p.tasks) {
      d[t] = std::round(score(rng) * 4.0) / 4.0;
      scaled[t] = d[t] * k;
    }
    for (auto dir : {Direction::HardToEasy, Direction::EasyToHard}) {
      std::vector<TaskId> prev;
      for (double f : pacing_plan(PacingConfig{}, 6)) {
        const auto s = plan_stage(d, p, f, dir);
        const auto target = static_cast<std::size_t>(std::ceil(f * static_cast<double>(p.total) - 1e-9));
        if (s.samples.size() < target) ++violations;
        if (s.samples.size() - p.task_size(s.tasks.back()) >= target) ++violations;
        if (!std::equal(prev.begin(), prev.end(), s.tasks.begin())) ++violations;
        // ties by ascending id
        for (std::size_t i = 1; i < s.tasks.size(); ++i)
          if (d[s.tasks[i - 1]] == d[s.tasks[i]] && s.tasks[i - 1] > s.tasks[i]) ++violations;
        if (plan_stage(scaled, p, f, dir).tasks != s.tasks) ++violations;
        prev = s.tasks;
      }
    }
  }
  // repeated seeded runs give identical manifest bytes
  auto manifests = [] {
    SyntheticSpec spec;
    spec.num_tasks = 6;
    spec.samples_per_task = 150;
    spec.test_samples_per_task = 50;
    spec.feature_dim = 16;
    spec.seed = 17;
    auto data = generate_synthetic(spec);
    CurriculumScheduler sched(SchedulerConfig{}, partition_by_type(data.train.samples));
    TrainConfig tc;
    tc.seed = 17;
    EmbeddedTrainer trainer(data.train, tc, TypeLexicon::default_lexicon());
    std::string bytes;
    RunHooks hooks;
    hooks.on_stage = [&](const CurriculumStage& s) { bytes += manifest_to_json(s); };
    run_dynamic(sched, trainer, hooks);
    return bytes;
  };
  const auto first = manifests();
  for (int i = 0; i < 2; ++i)
    if (manifests() != first) ++violations;
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 60.0,
          "2000 randomized plans + 3 seeded runs, " + std::to_string(violations) + " violations, " +
              fmt("%.2f", secs) + " s"};
}

Outcome p8() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) worst = std::max(worst, oracle::gradient_check(1000 + seed).max_rel_error);
  return {worst < 1e-5, "50 instances, max rel err " + fmt("%.2e", worst)};
}

struct P9Job {
  std::string arm;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  RunOutcome outcome;
};

Outcome p9() {
  const auto t0 = Clock::now();
  const auto cfg = standard_run_config();
  std::vector<P9Job> jobs;
  for (int r = 0; r < cfg.replicates; ++r) {
    const auto seed = cfg.replicate_seed(r);
    jobs.push_back({"vanilla", 1.0, seed, {}});
    jobs.push_back({"dynamic", 1.0, seed, {}});
    jobs.push_back({"dynamic", 0.5, seed, {}});
    jobs.push_back({"dynamic_easy_to_hard", 0.5, seed, {}});
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::string error;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        auto& j = jobs[i];
        const auto data = load_run_data(cfg, j.seed, j.fraction);
        j.outcome = run_arm(parse_arm(j.arm), data, cfg, j.seed, j.fraction);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mutex);
        error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (!error.empty()) return {false, "run failed: " + error};

  auto med = [&](const std::string& arm, double fraction, bool ood) {
    std::vector<double> v;
    for (const auto& j : jobs)
      if (j.arm == arm && j.fraction == fraction) v.push_back(ood ? j.outcome.ood_accuracy : j.outcome.id_accuracy);
    return median(v);
  };
  const double van_ood = med("vanilla", 1.0, true), dyn_ood = med("dynamic", 1.0, true);
  const double van_id = med("vanilla", 1.0, false), dyn_id = med("dynamic", 1.0, false);
  const double h2e_half = med("dynamic", 0.5, true), e2h_half = med("dynamic_easy_to_hard", 0.5, true);
  const double secs = seconds_since(t0);
  const bool a = dyn_ood > van_ood;
  const bool b = h2e_half >= e2h_half;
  const bool c = std::abs(dyn_id - van_id) <= 0.02;
  std::string d = std::to_string(cfg.replicates) + " seeds; (a) OOD dynamic " + fmt("%.4f", dyn_ood) + " vs vanilla " +
                  fmt("%.4f", van_ood) + (a ? " ok" : " FAIL") + "; (b) OOD@50% h2e " + fmt("%.4f", h2e_half) +
                  " vs e2h " + fmt("%.4f", e2h_half) + (b ? " ok" : " FAIL") + "; (c) ID dynamic " +
                  fmt("%.4f", dyn_id) + " vs vanilla " + fmt("%.4f", van_id) + (c ? " ok" : " FAIL") + "; " +
                  fmt("%.1f", secs) + " s";
  return {a && b && c && secs <= 300.0, d};
}

// Scripted losses for two tasks with equal means: task 0 keeps its spread,
// task 1's spread changes every cycle.
Outcome p10() {
  const auto partition = sized_partition({200, 200});
  std::vector<LossReport> reports;
  for (int b = 1; b <= 5; ++b) {
    LossReport r{0, b, {}};
    const double spread1 = 0.1 + 0.35 * (b % 2);
    for (int i = 0; i < 200; ++i) {
      const double u = (i + 0.5) / 200.0 - 0.5;  // mean zero
      r.records.push_back({i, 0, 1.0 + 0.3 * u});
      r.records.push_back({200 + i, 1, 1.0 + 2.0 * spread1 * u});
    }
    reports.push_back(r);
  }
  SchedulerConfig dist_cfg, mean_cfg;
  mean_cfg.difficulty_mode = DifficultyMode::Mean;
  const auto grid = fit_grid(reports.front());
  const auto dist = plan_from_reports(reports, partition, dist_cfg, 0, grid);
  const auto mean = plan_from_reports(reports, partition, mean_cfg, 0, grid);
  const bool differs = dist.tasks != mean.tasks;
  const bool equal_means = std::abs(mean.difficulty.at(0) - mean.difficulty.at(1)) < 1e-12;

  // end-to-end ablation run on a small benchmark
  RunConfig cfg;
  SyntheticSpec spec;
  spec.num_tasks = 4;
  spec.samples_per_task = 200;
  spec.test_samples_per_task = 50;
  spec.feature_dim = 12;
  cfg.synthetic = spec;
  cfg.arms = {"simple"};
  cfg.seed = 10;
  const auto summary = simulate(cfg);
  const auto& run = summary.runs.front();
  const bool ran = run.complete && run.stages.size() == 6;

  return {differs && equal_means && ran,
          std::string("equal means ") + (equal_means ? "yes" : "no") + ", first task distributional " +
              std::to_string(dist.tasks.front()) + " vs mean " + std::to_string(mean.tasks.front()) +
              ", simple arm " + (ran ? "completed 6 stages" : "did not complete")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> known, only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--known-failure" && i + 1 < argc) known.insert(argv[++i]);
    else if (arg == "--only" && i + 1 < argc) only.insert(argv[++i]);
    else {
      std::fprintf(stderr, "usage: %s [--only Pn]... [--known-failure Pn]...\n", argv[0]);
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"P1", p1}, {"P2", p2}, {"P3", p3}, {"P4", p4}, {"P5", p5},
      {"P6", p6}, {"P7", p7}, {"P8", p8}, {"P9", p9}, {"P10", p10}};
  int unexpected = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::string tag = o.pass ? "PASS" : "FAIL";
    if (known.count(id)) tag += o.pass ? " (listed as a known failure, now passing)" : " (known failure)";
    else if (!o.pass) ++unexpected;
    std::printf("%-3s %s  %s\n", id.c_str(), tag.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return unexpected;
}
