// tpcl command-line front end.

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tpcl/config_json.hpp"
#include "tpcl/experiment.hpp"
#include "tpcl/protocol.hpp"

using namespace tpcl;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitInvalid = 2;

fs::path default_output_root() {
  if (const char* env = std::getenv("TPCL_OUTPUT_DIR"); env && *env) return env;
  return "tpcl_runs";
}

// Options shared by commands that build a scheduler configuration.
struct SchedulerFlags {
  std::optional<int> stages, cycles, warmup_cycles, bins;
  std::optional<std::string> direction, difficulty, pacing, alpha_mode;
  std::optional<std::vector<double>> alphas;
  std::optional<double> lambda0, lambda_grow;
  bool per_task_grid = false;

  void add(CLI::App* app) {
    app->add_option("--stages", stages, "curriculum stages R");
    app->add_option("--cycles", cycles, "consolidation cycles B per stage");
    app->add_option("--warmup-cycles", warmup_cycles, "full-data warm-up cycles");
    app->add_option("--bins", bins, "histogram bins M");
    app->add_option("--direction", direction, "hard_to_easy | easy_to_hard");
    app->add_option("--difficulty", difficulty, "distributional | mean");
    app->add_option("--pacing", pacing, "incremental | decremental | discrete");
    app->add_option("--alphas", alphas, "consolidation weights (B-1 values)")->delimiter(',');
    app->add_option("--alpha-mode", alpha_mode, "increasing | decreasing | uniform")->excludes("--alphas");
    app->add_option("--lambda0", lambda0, "initial data fraction");
    app->add_option("--lambda-grow", lambda_grow, "data growth rate");
    app->add_flag("--per-task-grid", per_task_grid, "fit one histogram grid per task");
  }

  void apply(SchedulerConfig& c) const {
    if (stages) c.stages = *stages;
    if (cycles) c.cycles = *cycles;
    if (warmup_cycles) c.warmup_cycles = *warmup_cycles;
    if (bins) c.histogram_bins = *bins;
    if (direction) c.direction = direction_from_string(*direction);
    if (difficulty) c.difficulty_mode = difficulty_mode_from_string(*difficulty);
    if (pacing) c.pacing.mode = pacing_mode_from_string(*pacing);
    if (alphas) c.alphas = *alphas;
    if (alpha_mode) c.alphas = alpha_preset(alpha_mode_from_string(*alpha_mode), c.cycles);
    if (lambda0) c.pacing.lambda0 = *lambda0;
    if (lambda_grow) c.pacing.lambda_grow = *lambda_grow;
    if (per_task_grid) c.per_task_grid = true;
    if (cycles && !alphas && !alpha_mode && static_cast<int>(c.alphas.size()) != c.cycles - 1)
      c.alphas = alpha_preset(c.cycles == 5 ? AlphaMode::Increasing : AlphaMode::Uniform, c.cycles);
  }
};

void write_or_print(const std::optional<fs::path>& out, const std::string& text) {
  if (out)
    write_file_atomic(*out, text);
  else
    std::cout << text;
}

std::string fraction_str(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", f);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tpcl: task progressive curriculum learning engine"};
  app.require_subcommand(1);

  // partition ---------------------------------------------------------------
  auto* part = app.add_subcommand("partition", "split a dataset into question-type tasks");
  fs::path part_data, part_annotations, part_lexicon;
  std::optional<fs::path> part_out;
  int min_answer_count = 9;
  auto* part_src = part->add_option("--data", part_data, "samples JSONL")->check(CLI::ExistingFile);
  part->add_option("--annotations", part_annotations, "VQA-style annotation JSON")
      ->check(CLI::ExistingFile)
      ->excludes(part_src);
  part->add_option("--min-answer-count", min_answer_count, "answer frequency floor for annotations");
  part->add_option("--lexicon", part_lexicon, "question-type lexicon JSON")->check(CLI::ExistingFile);
  part->add_option("--out", part_out, "partition JSON (stdout if omitted)");

  // plan --------------------------------------------------------------------
  auto* plan = app.add_subcommand("plan", "plan a stage from the loss reports of one consolidation window");
  std::vector<fs::path> plan_reports;
  fs::path plan_partition;
  std::optional<fs::path> plan_grid_from, plan_out;
  std::optional<double> plan_grid_upper;
  int plan_stage_index = 0;
  SchedulerFlags plan_flags;
  plan->add_option("--reports", plan_reports, "B loss reports, cycles 1..B in order")->required()->check(CLI::ExistingFile);
  plan->add_option("--partition", plan_partition, "partition JSON")->required()->check(CLI::ExistingFile);
  plan->add_option("--stage", plan_stage_index, "index of the stage being planned (0-based)");
  plan->add_option("--grid-from", plan_grid_from, "report of the first scoring event (defaults to the first report)")
      ->check(CLI::ExistingFile);
  plan->add_option("--grid-upper", plan_grid_upper, "explicit histogram upper edge")->excludes("--grid-from");
  plan->add_option("--out", plan_out, "manifest path (stdout if omitted)");
  plan_flags.add(plan);

  // fixed-plan --------------------------------------------------------------
  auto* fixed = app.add_subcommand("fixed-plan", "emit the fixed Wh -> YesNo -> Other -> Number curriculum");
  fs::path fixed_partition, fixed_lexicon;
  std::optional<fs::path> fixed_out_dir;
  fixed->add_option("--partition", fixed_partition, "partition JSON (default: one task per lexicon type)")
      ->check(CLI::ExistingFile);
  fixed->add_option("--lexicon", fixed_lexicon, "question-type lexicon JSON")->check(CLI::ExistingFile);
  fixed->add_option("--out-dir", fixed_out_dir, "write stage manifests here");

  // simulate ----------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "run curriculum arms end to end");
  std::optional<fs::path> sim_config, sim_output, sim_train, sim_test_id, sim_test_ood, sim_lexicon;
  std::optional<std::vector<std::string>> sim_arms;
  std::optional<std::vector<double>> sim_fractions;
  std::optional<int> sim_replicates, sim_tasks, sim_samples, sim_labels, sim_feature_dim, sim_batch, sim_passes;
  std::optional<std::uint64_t> sim_seed;
  std::optional<double> sim_bias, sim_lr, sim_noise, sim_spread, sim_spurious;
  std::optional<std::string> sim_shift, sim_trainer;
  std::optional<int> sim_stop_after;
  double sim_timeout_s = 600.0;
  bool sim_dry_run = false;
  SchedulerFlags sim_flags;
  sim->add_option("--config", sim_config, "run_config.json to start from")->check(CLI::ExistingFile);
  sim->add_option("--output", sim_output, "output directory (default $TPCL_OUTPUT_DIR or ./tpcl_runs)");
  sim->add_option("--train", sim_train, "training samples JSONL")->check(CLI::ExistingFile);
  sim->add_option("--test-id", sim_test_id, "in-distribution test JSONL")->check(CLI::ExistingFile);
  sim->add_option("--test-ood", sim_test_ood, "out-of-distribution test JSONL")->check(CLI::ExistingFile);
  sim->add_option("--lexicon", sim_lexicon, "question-type lexicon JSON")->check(CLI::ExistingFile);
  sim->add_option("--arms", sim_arms, "vanilla,fixed,dynamic,dynamic_easy_to_hard,simple")->delimiter(',');
  sim->add_option("--data-fractions", sim_fractions, "training data fractions")->delimiter(',');
  sim->add_option("--replicates", sim_replicates, "seeds per arm");
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--tasks", sim_tasks, "synthetic: number of tasks");
  sim->add_option("--samples-per-task", sim_samples, "synthetic: training samples per task");
  sim->add_option("--labels-per-task", sim_labels, "synthetic: labels per task");
  sim->add_option("--feature-dim", sim_feature_dim, "synthetic: feature width");
  sim->add_option("--bias", sim_bias, "synthetic: bias strength");
  sim->add_option("--prior-shift", sim_shift, "synthetic: none | reversed");
  sim->add_option("--noise", sim_noise, "synthetic: informative noise");
  sim->add_option("--noise-spread", sim_spread, "synthetic: per-task noise spread");
  sim->add_option("--spurious-scale", sim_spurious, "synthetic: spurious feature magnitude");
  sim->add_option("--lr", sim_lr, "learning rate");
  sim->add_option("--batch-size", sim_batch, "mini-batch size");
  sim->add_option("--passes-per-cycle", sim_passes, "passes per training cycle");
  sim->add_option("--trainer", sim_trainer, "embedded | external");
  sim->add_option("--stop-after-stage", sim_stop_after, "dynamic arms: stop once this many stages were trained");
  sim->add_option("--timeout", sim_timeout_s, "external trainer: seconds to wait for each report");
  sim->add_flag("--dry-run", sim_dry_run, "print the schedule and exit");
  sim_flags.add(sim);

  // resume ------------------------------------------------------------------
  auto* res = app.add_subcommand("resume", "continue an interrupted dynamic run");
  fs::path res_dir;
  double res_timeout_s = 600.0;
  res->add_option("--run-dir", res_dir, "run directory holding state.json")->required()->check(CLI::ExistingDirectory);
  res->add_option("--timeout", res_timeout_s, "external trainer: seconds to wait for each report");

  // report ------------------------------------------------------------------
  auto* rep = app.add_subcommand("report", "aggregate run metrics into CSV and a markdown table");
  fs::path rep_root;
  std::optional<fs::path> rep_out;
  rep->add_option("--run-root", rep_root, "simulate output directory")->required();
  rep->add_option("--out", rep_out, "report directory (default <run-root>/report)");

  // serve -------------------------------------------------------------------
  auto* srv = app.add_subcommand("serve", "act as the external trainer for a run directory");
  fs::path srv_dir;
  double srv_timeout_s = 600.0;
  bool srv_verbose = false;
  srv->add_option("--run-dir", srv_dir, "run directory")->required();
  srv->add_option("--timeout", srv_timeout_s, "seconds to wait for the next manifest");
  srv->add_flag("-v,--verbose", srv_verbose, "log each trained cycle");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*part) {
      std::optional<TypeLexicon> lex_storage;
      if (!part_lexicon.empty()) lex_storage = TypeLexicon::load(part_lexicon);
      const auto& lexicon = lex_storage ? *lex_storage : TypeLexicon::default_lexicon();
      std::vector<Sample> samples;
      if (!part_annotations.empty()) {
        auto set = load_annotations(part_annotations, lexicon, min_answer_count);
        if (set.dropped) std::cerr << "dropped " << set.dropped << " question(s) below the answer frequency floor\n";
        samples = std::move(set.samples);
      } else if (!part_data.empty()) {
        samples = read_samples(part_data);
      } else {
        throw ValidationError("partition: give --data or --annotations");
      }
      const auto partition = partition_by_type(samples);
      write_or_print(part_out, partition_to_json(partition, lexicon));
      std::cerr << partition.tasks.size() << " task(s), " << partition.total << " sample(s)\n";
      return 0;
    }

    if (*plan) {
      SchedulerConfig cfg;
      plan_flags.apply(cfg);
      cfg.validate();
      std::vector<LossReport> reports;
      for (const auto& p : plan_reports) reports.push_back(read_loss_report(p));
      const auto partition = partition_from_json(read_file(plan_partition));
      HistogramGrid grid = plan_grid_upper ? HistogramGrid(cfg.histogram_bins, *plan_grid_upper)
                                           : fit_grid(plan_grid_from ? read_loss_report(*plan_grid_from) : reports.front(),
                                                      cfg.histogram_bins);
      const auto stage = plan_from_reports(reports, partition, cfg, plan_stage_index, grid);
      write_or_print(plan_out, manifest_to_json(stage) + (plan_out ? "" : "\n"));
      std::cerr << "stage " << stage.stage << ": fraction " << fraction_str(stage.fraction) << ", "
                << stage.tasks.size() << " task(s), " << stage.samples.size() << " sample(s)\n";
      return 0;
    }

    if (*fixed) {
      std::optional<TypeLexicon> lex_storage;
      if (!fixed_lexicon.empty()) lex_storage = TypeLexicon::load(fixed_lexicon);
      const auto& lexicon = lex_storage ? *lex_storage : TypeLexicon::default_lexicon();
      TaskPartition partition;
      if (!fixed_partition.empty()) {
        partition = partition_from_json(read_file(fixed_partition));
      } else {
        // one unit-size task per lexicon type
        for (std::size_t i = 0; i < lexicon.size(); ++i) partition.tasks[static_cast<TaskId>(i)] = {static_cast<SampleId>(i)};
        partition.total = lexicon.size();
      }
      SchedulerConfig cfg;
      const auto fp = plan_fixed(partition, lexicon, cfg.pacing, cfg.cycles);
      for (const auto& w : fp.warnings) std::cerr << "warning: " << w << "\n";
      for (const auto& s : fp.stages) {
        std::cout << "stage " << s.stage << ": fraction " << fraction_str(s.fraction) << ", " << s.tasks.size()
                  << " task(s), " << s.samples.size() << " sample(s)\n";
        if (fixed_out_dir) {
          char name[32];
          std::snprintf(name, sizeof name, "stage_%02d.json", s.stage);
          write_file_atomic(*fixed_out_dir / name, manifest_to_json(s));
        }
      }
      return 0;
    }

    if (*sim) {
      RunConfig cfg;
      if (sim_config) {
        cfg = run_config_from_json(read_file(*sim_config));
      } else if (!sim_train) {
        cfg = standard_run_config();
        cfg.replicates = 1;
      }
      if (sim_train) {
        cfg.synthetic.reset();
        cfg.train_path = *sim_train;
        if (sim_test_id) cfg.test_id_path = *sim_test_id;
        if (sim_test_ood) cfg.test_ood_path = *sim_test_ood;
      }
      if (sim_lexicon) cfg.lexicon_path = *sim_lexicon;
      if (cfg.synthetic) {
        auto& s = *cfg.synthetic;
        if (sim_tasks) s.num_tasks = *sim_tasks;
        if (sim_samples) s.samples_per_task = *sim_samples;
        if (sim_labels) s.labels_per_task = *sim_labels;
        if (sim_feature_dim) s.feature_dim = *sim_feature_dim;
        if (sim_bias) s.bias_strength = *sim_bias;
        if (sim_shift) s.prior_shift = prior_shift_from_string(*sim_shift);
        if (sim_noise) s.informative_noise = *sim_noise;
        if (sim_spread) s.noise_spread = *sim_spread;
        if (sim_spurious) s.spurious_scale = *sim_spurious;
        if (sim_tasks && !sim_feature_dim && s.feature_dim <= s.num_tasks + 1) s.feature_dim = s.num_tasks + 16;
      } else if (sim_tasks || sim_samples || sim_labels || sim_bias || sim_shift || sim_noise) {
        throw ValidationError("synthetic options given, but the dataset comes from files");
      }
      sim_flags.apply(cfg.scheduler);
      if (sim_arms) cfg.arms = *sim_arms;
      if (sim_fractions) cfg.data_fractions = *sim_fractions;
      if (sim_replicates) cfg.replicates = *sim_replicates;
      if (sim_seed) cfg.seed = *sim_seed;
      if (sim_lr) cfg.train.learning_rate = *sim_lr;
      if (sim_batch) cfg.train.batch_size = *sim_batch;
      if (sim_passes) cfg.train.passes_per_cycle = *sim_passes;
      if (sim_trainer) cfg.trainer_mode = *sim_trainer;
      cfg.output_dir = sim_output ? *sim_output : (cfg.output_dir.empty() ? default_output_root() : cfg.output_dir);
      cfg.validate();

      if (sim_dry_run) {
        const auto& sc = cfg.scheduler;
        const auto fractions = pacing_plan(sc.pacing, sc.stages);
        std::cout << "output: " << cfg.output_dir.string() << "\n";
        std::cout << "arms:";
        for (const auto& a : cfg.arms) std::cout << " " << a;
        std::cout << "\nreplicates: " << cfg.replicates << ", data fractions:";
        for (double f : cfg.data_fractions) std::cout << " " << f;
        std::cout << "\nwarm-up: " << sc.warmup_cycles << " cycle(s) on the full dataset\n";
        for (int k = 0; k < sc.stages; ++k)
          std::cout << "stage " << k << ": fraction " << fraction_str(fractions[static_cast<std::size_t>(k)]) << ", "
                    << sc.cycles << " cycle(s), " << to_string(sc.direction) << "\n";
        std::cout << "total training cycles per arm: " << sc.warmup_cycles + sc.stages * sc.cycles << "\n";
        return 0;
      }

      if (cfg.trainer_mode == "external") {
        if (cfg.arms.size() != 1 || cfg.replicates != 1 || cfg.data_fractions.size() != 1)
          throw ValidationError("external trainer mode drives exactly one arm, one replicate and one data fraction");
        PollOptions poll;
        poll.timeout = std::chrono::milliseconds(static_cast<long long>(sim_timeout_s * 1000));
        std::cerr << "waiting for an external trainer on " << cfg.output_dir.string()
                  << " (e.g. tpcl serve --run-dir " << cfg.output_dir.string() << ")\n";
        const auto out = run_external(parse_arm(cfg.arms.front()), cfg, cfg.replicate_seed(0),
                                      cfg.data_fractions.front(), cfg.output_dir, poll, sim_stop_after);
        std::cout << (out.complete ? "complete" : "stopped") << ": " << out.stages.size() << " stage(s) planned\n";
        return 0;
      }

      if (sim_stop_after) {
        if (cfg.arms.size() != 1 || cfg.replicates != 1 || cfg.data_fractions.size() != 1)
          throw ValidationError("--stop-after-stage needs exactly one arm, one replicate and one data fraction");
        const auto seed = cfg.replicate_seed(0);
        const auto fraction = cfg.data_fractions.front();
        write_file_atomic(cfg.output_dir / "run_config.json", run_config_to_json(cfg));
        const auto data = load_run_data(cfg, seed, fraction);
        ArmOptions options;
        options.run_dir = cfg.output_dir / "runs" / cfg.arms.front() / ("seed_" + std::to_string(seed));
        options.stop_after_stage = sim_stop_after;
        const auto out = run_arm(parse_arm(cfg.arms.front()), data, cfg, seed, fraction, options);
        std::cout << (out.complete ? "complete" : "stopped") << ": " << options.run_dir->string() << "\n";
        return 0;
      }

      const auto summary = simulate(cfg, [](const RunOutcome& r) {
        std::cerr << r.arm << " f=" << r.data_fraction << " seed=" << r.seed << ": ID " << fraction_str(r.id_accuracy)
                  << ", OOD " << fraction_str(r.ood_accuracy) << "\n";
      });
      for (const auto& a : summary.arms)
        std::cout << a.key << ": median ID " << fraction_str(a.median_id) << ", median OOD "
                  << fraction_str(a.median_ood) << " (" << a.runs << " run(s))\n";
      std::cout << "summary: " << (cfg.output_dir / "summary.json").string() << "\n";
      return 0;
    }

    if (*res) {
      bool was_complete = false;
      const auto out = resume_run(res_dir, &was_complete);
      if (was_complete) {
        std::cout << "complete: nothing to resume in " << res_dir.string() << "\n";
        return 0;
      }
      std::cout << (out.complete ? "complete" : "stopped") << ": ID " << fraction_str(out.id_accuracy) << ", OOD "
                << fraction_str(out.ood_accuracy) << "\n";
      return 0;
    }

    if (*rep) {
      const auto result = write_report(rep_root, rep_out);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << result.rows << " metric row(s) -> " << result.csv_path.string() << ", "
                << result.markdown_path.string() << "\n";
      return 0;
    }

    if (*srv) {
      ServeOptions options;
      options.poll.timeout = std::chrono::milliseconds(static_cast<long long>(srv_timeout_s * 1000));
      options.verbose = srv_verbose;
      const auto result = serve(srv_dir, options);
      std::cout << "trained " << result.cycles_trained << " cycle(s); run " << (result.complete ? "complete" : "open")
                << "\n";
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
