"""Synchrophasor FDI attack detection, classification and signal retrieval."""

import json

from . import _core
from ._core import (
    ConfigError,
    DegenerateFitError,
    DetectorParams,
    DimensionError,
    Ensemble,
    IoError,
    NonFiniteError,
    OriginDetector,
    ParseError,
    calibrate_gamma,
    cross_correlation,
    detect_and_retrieve,
    fit_circle,
    pattern_similarity,
    preset_names,
    retrieve_sample,
)

__all__ = [
    "ConfigError",
    "DegenerateFitError",
    "DetectorParams",
    "DimensionError",
    "Ensemble",
    "IoError",
    "NonFiniteError",
    "OriginDetector",
    "ParseError",
    "attack",
    "calibrate_gamma",
    "config",
    "cross_correlation",
    "detect_and_retrieve",
    "fit_circle",
    "generate",
    "noise_sweep",
    "pattern_similarity",
    "preset",
    "preset_names",
    "retrieve_sample",
    "run_scenario",
]


def preset(name):
    """Scenario config of a named preset as a dict."""
    return json.loads(_core._preset(name))


def config(overrides=None, preset_name=None):
    """Full scenario config: defaults, then a preset, then `overrides`."""
    base = preset(preset_name) if preset_name else {}
    base.update(overrides or {})
    return json.loads(_core._normalize_config(json.dumps(base)))


def run_scenario(cfg, jobs=1):
    """Run the full pipeline and return the metrics report as a dict."""
    return json.loads(_core._run_scenario(json.dumps(cfg), jobs))


def noise_sweep(cfg, sigmas, jobs=1):
    return json.loads(_core._noise_sweep(json.dumps(cfg), list(sigmas), jobs))


def generate(cfg):
    """Clean stream (samples x channels complex array) and grid model dict."""
    clean, model = _core._generate(json.dumps(cfg))
    return clean, json.loads(model)


def attack(cfg, clean):
    """Attacked stream and per-sample ground-truth class labels."""
    return _core._attack(json.dumps(cfg), clean)
