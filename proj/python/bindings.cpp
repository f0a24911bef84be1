#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "json.hpp"
#include "tpcl/config_json.hpp"
#include "tpcl/experiment.hpp"
#include "tpcl/protocol.hpp"

namespace py = pybind11;
using namespace tpcl;
using json = nlohmann::json;

namespace {

ScoreHistogram make_histogram(std::vector<double> mass, double upper) {
  const int bins = static_cast<int>(mass.size());
  if (bins < 1) throw ValidationError("histogram needs at least one bin");
  return ScoreHistogram{HistogramGrid(bins, upper), std::move(mass)};
}

TaskPartition make_partition(const std::map<TaskId, std::vector<SampleId>>& tasks) {
  TaskPartition p;
  for (const auto& [task, ids] : tasks) {
    p.total += ids.size();
    p.tasks.emplace(task, ids);
  }
  return p;
}

py::dict stage_dict(const CurriculumStage& s) {
  py::dict d;
  d["stage"] = s.stage;
  d["fraction"] = s.fraction;
  d["direction"] = s.direction;
  d["cycles"] = s.cycles;
  d["tasks"] = s.tasks;
  d["samples"] = s.samples;
  d["difficulty"] = s.difficulty;
  return d;
}

py::dict outcome_dict(const RunOutcome& r) {
  py::dict d;
  d["arm"] = r.arm;
  d["data_fraction"] = r.data_fraction;
  d["seed"] = r.seed;
  d["id_accuracy"] = r.id_accuracy;
  d["ood_accuracy"] = r.ood_accuracy;
  d["complete"] = r.complete;
  d["directory"] = r.directory.string();
  py::list stages;
  for (const auto& s : r.stages) stages.append(stage_dict(s));
  d["stages"] = stages;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Task progressive curriculum learning engine";

  static py::exception<IntegrityError> integrity_error(m, "IntegrityError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const IntegrityError& e) {
      py::set_error(integrity_error, e.what());
    }
  });

  m.attr("SCHEMA_VERSION") = kSchemaVersion;

  // difficulty
  m.def(
      "histogram",
      [](const std::vector<double>& losses, int bins, double upper) {
        return build_histogram(losses, HistogramGrid(bins, upper)).mass;
      },
      py::arg("losses"), py::arg("bins") = kDefaultBins, py::arg("upper"),
      "Unit-mass histogram of losses on a uniform grid over [0, upper].");
  m.def(
      "ot_divergence",
      [](std::vector<double> a, std::vector<double> b, double upper) {
        return ot_divergence(make_histogram(std::move(a), upper), make_histogram(std::move(b), upper));
      },
      py::arg("a"), py::arg("b"), py::arg("upper") = 1.0,
      "Exact 1-D optimal transport cost between two histograms on the same grid.");
  m.def(
      "ot_plan",
      [](std::vector<double> a, std::vector<double> b, double upper) {
        const auto plan = ot_plan(make_histogram(std::move(a), upper), make_histogram(std::move(b), upper));
        std::vector<std::tuple<int, int, double>> couplings;
        for (const auto& c : plan.couplings) couplings.emplace_back(c.source, c.target, c.mass);
        return py::make_tuple(plan.cost, couplings);
      },
      py::arg("a"), py::arg("b"), py::arg("upper") = 1.0, "Returns (cost, [(source, target, mass), ...]).");
  m.def(
      "consolidate",
      [](const std::vector<DifficultyVector>& window, std::vector<double> alphas) {
        ConsolidationWindow w(std::move(alphas));
        for (const auto& v : window) w.push(v);
        return w.consolidate();
      },
      py::arg("window"), py::arg("alphas") = std::vector<double>{0.1, 0.1, 0.3, 0.5});
  m.def("alpha_preset", [](const std::string& mode, int cycles) { return alpha_preset(alpha_mode_from_string(mode), cycles); },
        py::arg("mode"), py::arg("cycles") = 5);

  // pacing
  m.def(
      "pacing_plan",
      [](int stages, double lambda0, double lambda_grow, const std::string& mode) {
        PacingConfig c;
        c.lambda0 = lambda0;
        c.lambda_grow = lambda_grow;
        c.mode = pacing_mode_from_string(mode);
        return pacing_plan(c, stages);
      },
      py::arg("stages") = 6, py::arg("lambda0") = 0.1, py::arg("lambda_grow") = 4.5, py::arg("mode") = "incremental");
  m.def("default_discrete_fractions", &default_discrete_fractions);

  // scheduler
  m.def(
      "plan_stage",
      [](const DifficultyVector& difficulty, const std::map<TaskId, std::vector<SampleId>>& tasks, double fraction,
         const std::string& direction, int stage) {
        return stage_dict(plan_stage(difficulty, make_partition(tasks), fraction, direction_from_string(direction), stage));
      },
      py::arg("difficulty"), py::arg("tasks"), py::arg("fraction"), py::arg("direction") = "hard_to_easy",
      py::arg("stage") = 0);
  m.def(
      "fixed_plan",
      [](const std::map<TaskId, std::vector<SampleId>>& tasks) {
        SchedulerConfig cfg;
        const auto fp = plan_fixed(make_partition(tasks), TypeLexicon::default_lexicon(), cfg.pacing, cfg.cycles);
        py::list stages;
        for (const auto& s : fp.stages) stages.append(stage_dict(s));
        return py::make_tuple(stages, fp.warnings);
      },
      py::arg("tasks"));
  m.def("read_manifest", [](const std::string& text) { return stage_dict(manifest_from_json(text)); }, py::arg("text"),
        "Parses and verifies a stage manifest.");

  // dataset
  m.def("infer_question_type", [](const std::string& q) { return infer_question_type(q, TypeLexicon::default_lexicon()); },
        py::arg("question"));
  m.def("normalize_question", &normalize_question, py::arg("question"));
  m.def("default_lexicon", [] {
    const auto& lex = TypeLexicon::default_lexicon();
    std::vector<std::tuple<int, std::string, std::string>> out;
    for (std::size_t i = 0; i < lex.size(); ++i) {
      const auto& e = lex.at(static_cast<TaskId>(i));
      out.emplace_back(e.type_id, e.prefix, std::string(to_string(e.group)));
    }
    return out;
  });
  m.def(
      "generate_synthetic",
      [](const std::string& spec_json) {
        const auto spec = json::parse(spec_json.empty() ? "{}" : spec_json).get<SyntheticSpec>();
        const auto data = generate_synthetic(spec);
        py::dict d;
        d["train"] = samples_to_jsonl(data.train.samples);
        d["test_id"] = samples_to_jsonl(data.test_id.samples);
        d["test_ood"] = samples_to_jsonl(data.test_ood.samples);
        d["majority_label"] = data.majority_label;
        return d;
      },
      py::arg("spec_json") = "", "Returns the three splits as JSONL strings.");

  // loss reports
  m.def(
      "read_loss_report",
      [](const std::string& text) {
        const auto r = loss_report_from_jsonl(text);
        std::vector<std::tuple<SampleId, TaskId, double>> records;
        for (const auto& rec : r.records) records.emplace_back(rec.id, rec.task, rec.loss);
        return py::make_tuple(r.iteration, r.cycle, records);
      },
      py::arg("text"), "Parses and verifies a loss report: (iteration, cycle, [(id, task, loss)]).");
  m.def(
      "write_loss_report",
      [](int iteration, int cycle, const std::vector<std::tuple<SampleId, TaskId, double>>& records) {
        LossReport r{iteration, cycle, {}};
        for (const auto& [id, task, loss] : records) r.records.push_back({id, task, loss});
        return loss_report_to_jsonl(r);
      },
      py::arg("iteration"), py::arg("cycle"), py::arg("records"));

  // experiments
  m.def("standard_run_config", [] { return run_config_to_json(standard_run_config()); });
  m.def("validate_run_config", [](const std::string& text) {
    const auto cfg = run_config_from_json(text);
    cfg.validate();
    return run_config_to_json(cfg);
  });
  m.def(
      "simulate",
      [](const std::string& config_json) {
        const auto cfg = run_config_from_json(config_json);
        SimulationSummary summary;
        {
          py::gil_scoped_release release;
          summary = simulate(cfg);
        }
        return summary_to_json(summary);
      },
      py::arg("config_json"), "Runs every configured arm; returns the summary JSON.");
  m.def(
      "resume",
      [](const std::string& run_dir) {
        bool was_complete = false;
        RunOutcome out;
        {
          py::gil_scoped_release release;
          out = resume_run(run_dir, &was_complete);
        }
        auto d = outcome_dict(out);
        d["was_complete"] = was_complete;
        return d;
      },
      py::arg("run_dir"));
  m.def(
      "report",
      [](const std::string& run_root) {
        const auto r = write_report(run_root);
        py::dict d;
        d["rows"] = r.rows;
        d["warnings"] = r.warnings;
        d["csv"] = r.csv_path.string();
        d["markdown"] = r.markdown_path.string();
        return d;
      },
      py::arg("run_root"));
  m.def(
      "serve",
      [](const std::string& run_dir, double timeout_s) {
        ServeOptions o;
        o.poll.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000));
        ServeResult r;
        {
          py::gil_scoped_release release;
          r = serve(run_dir, o);
        }
        return py::make_tuple(r.cycles_trained, r.complete);
      },
      py::arg("run_dir"), py::arg("timeout") = 600.0);
}
