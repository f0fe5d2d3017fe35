"""Python bindings for the scriptbench C++ core."""

import json
import os
from pathlib import Path

_data = Path(__file__).parent / "data"
if (_data / "dict" / "zh_words.txt").exists():
    os.environ.setdefault("SCRIPTBENCH_DATA_DIR", str(_data))

from . import _scriptbench as _core  # noqa: E402
from ._scriptbench import (  # noqa: E402,F401
    ConfigError,
    DependencyError,
    EncodingError,
    InputError,
    IoError,
    ScriptbenchError,
    StatsError,
    TransportError,
    VerdictError,
    char_count,
    clean_text,
    composite,
    effect_band,
    lcs_length,
    rouge_l,
    shapiro_wilk,
    split_halves,
    tokenize,
)


def detect_profile(text):
    """Format profile of a script as a dict of wire names plus examples."""
    return json.loads(_core._detect_profile(text))


def render_contract(profile):
    return _core._render_contract(json.dumps(profile))


def extract_features(text, profile):
    return json.loads(_core._extract_features(text, json.dumps(profile)))


def structural_similarity(generated, reference):
    return _core._structural_similarity(json.dumps(generated), json.dumps(reference))


def paired_test(a, b, metric="metric"):
    """Paired comparison of a minus b; returns the full result dict."""
    return json.loads(_core._compare(list(a), list(b), metric))


def parse_verdict(reply):
    return json.loads(_core._parse_verdict(reply))


def run_pipeline(config, input_dir, out_dir="runs", run_id="default", workers=1):
    """Runs every stage and returns the run directory."""
    return Path(_core._run_pipeline(str(config), str(input_dir), str(out_dir), run_id, workers))
