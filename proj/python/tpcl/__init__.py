"""Python bindings for the tpcl curriculum engine."""

import json as _json

from . import _core
from ._core import (
    IntegrityError,
    SCHEMA_VERSION,
    alpha_preset,
    consolidate,
    default_discrete_fractions,
    default_lexicon,
    fixed_plan,
    generate_synthetic,
    histogram,
    infer_question_type,
    normalize_question,
    ot_divergence,
    ot_plan,
    pacing_plan,
    plan_stage,
    read_loss_report,
    read_manifest,
    report,
    resume,
    serve,
    write_loss_report,
)


def standard_run_config():
    """The standard synthetic benchmark configuration as a dict."""
    return _json.loads(_core.standard_run_config())


def simulate(config):
    """Run the configured arms. `config` is a dict or JSON string; returns the summary dict."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _json.loads(_core.simulate(text))


def validate_run_config(config):
    text = config if isinstance(config, str) else _json.dumps(config)
    return _json.loads(_core.validate_run_config(text))


__all__ = [name for name in dir() if not name.startswith("_")]
