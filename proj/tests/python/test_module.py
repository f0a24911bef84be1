"""Smoke tests for the tpcl Python module."""

import json

import pytest

import tpcl


def test_ot_divergence_single_bin_shift():
    # two bins of width 0.5: moving all mass one bin costs 0.25
    assert tpcl.ot_divergence([1.0, 0.0], [0.0, 1.0], upper=1.0) == pytest.approx(0.25)
    assert tpcl.ot_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0
    cost, couplings = tpcl.ot_plan([0.5, 0.5], [0.0, 1.0])
    assert cost == pytest.approx(0.125)
    assert sum(m for _, _, m in couplings) == pytest.approx(1.0)


def test_ot_rejects_unequal_mass():
    with pytest.raises(ValueError):
        tpcl.ot_divergence([1.0, 0.0], [0.5, 0.0])


def test_histogram_has_unit_mass():
    h = tpcl.histogram([0.1, 0.2, 0.95, 5.0], bins=10, upper=1.0)
    assert len(h) == 10
    assert sum(h) == pytest.approx(1.0)
    assert h[9] == pytest.approx(0.5)


def test_consolidation_and_presets():
    window = [{0: v} for v in (1.0, 2.0, 3.0, 4.0)]
    assert tpcl.consolidate(window)[0] == 3.2
    assert tpcl.alpha_preset("uniform") == pytest.approx([0.25] * 4)
    with pytest.raises(RuntimeError):
        tpcl.consolidate(window[:2])


def test_pacing():
    assert tpcl.pacing_plan() == [0.1, 0.3, 0.5, 0.7, 0.9, 1.0]
    assert tpcl.pacing_plan(3, lambda0=1.0) == [1.0, 1.0, 1.0]
    assert tpcl.default_discrete_fractions()[0] == pytest.approx(32 / 65)


def test_plan_stage_example():
    tasks = {0: list(range(50)), 1: list(range(50, 80)), 2: list(range(80, 100))}
    stage = tpcl.plan_stage({0: 0.1, 1: 0.9, 2: 0.5}, tasks, 0.4)
    assert stage["tasks"] == [1, 2]
    assert len(stage["samples"]) == 50
    with pytest.raises(ValueError):
        tpcl.plan_stage({0: 0.1}, tasks, 0.4)


def test_fixed_plan_warns_on_missing_groups():
    stages, warnings = tpcl.fixed_plan({0: [1, 2], 40: [3]})
    assert len(stages) == 2
    assert stages[-1]["fraction"] == 1.0
    assert any("other" in w for w in warnings)


def test_lexicon_and_question_types():
    lex = tpcl.default_lexicon()
    assert len(lex) == 65
    assert tpcl.normalize_question("  What   COLOR is the car?") == "what color is the car?"
    assert lex[tpcl.infer_question_type("How many people are in the photo?")][1] == "how many people are in"
    assert lex[tpcl.infer_question_type("Whatever happened?")][1] == "none of the above"


def test_loss_report_round_trip_and_tamper():
    text = tpcl.write_loss_report(0, 1, [(1, 0, 0.5), (2, 0, 0.25)])
    assert tpcl.read_loss_report(text) == (0, 1, [(1, 0, 0.5), (2, 0, 0.25)])
    with pytest.raises(tpcl.IntegrityError):
        tpcl.read_loss_report(text.replace("0.25", "0.35"))


def test_synthetic_generation_is_deterministic():
    spec = json.dumps({"num_tasks": 3, "samples_per_task": 20, "test_samples_per_task": 5, "feature_dim": 8, "seed": 4})
    a, b = tpcl.generate_synthetic(spec), tpcl.generate_synthetic(spec)
    assert a["train"] == b["train"]
    assert len(a["train"].splitlines()) == 60


def test_simulate_report_resume(tmp_path):
    cfg = tpcl.standard_run_config()
    cfg["synthetic"].update({"num_tasks": 4, "samples_per_task": 60, "test_samples_per_task": 20, "feature_dim": 12})
    cfg["replicates"] = 1
    cfg["arms"] = ["vanilla", "dynamic", "simple"]
    cfg["output_dir"] = str(tmp_path)
    tpcl.validate_run_config(cfg)
    summary = tpcl.simulate(cfg)
    assert set(summary["arms"]) == {"vanilla", "dynamic", "simple"}
    rep = tpcl.report(str(tmp_path))
    assert rep["rows"] == 3 * 35 * 2
    run_dir = next((tmp_path / "runs" / "dynamic").iterdir())
    assert tpcl.resume(str(run_dir))["was_complete"] is True


def test_invalid_config_raises_value_error():
    cfg = tpcl.standard_run_config()
    cfg["arms"] = ["nope"]
    with pytest.raises(ValueError):
        tpcl.validate_run_config(cfg)
