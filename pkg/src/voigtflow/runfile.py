"""Run-configuration files: strict schema, defaults, ModelConfig assembly.

A run file is a single YAML document with fixed sections; unknown sections or
keys are rejected with the offending key path so typos cannot silently fall
back to defaults.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path

import yaml

from .integrator import ModelConfig
from .kernels import ExponentialSum, load_table
from .spectral import Grid, forcing_from_modes

__all__ = ["RunFileError", "RunFile", "default_runfile", "load_runfile", "parse_runfile"]


class RunFileError(ValueError):
    """Malformed run configuration; message carries the key path."""


_DEFAULTS = {
    "domain": {"dim": 2, "n": 64},
    "model": {"alpha": 1.0, "varrho": 0.0},
    "kernel": {"variant": "exponential_sum", "coefficients": [[1.0, 1.0]], "epsilon": 1.0},
    "damping": {"beta": 0.5, "theta": 0.0},
    "forcing": {"modes": [{"k": [1, 0], "amplitude": 1.0}, {"k": [0, 2], "amplitude": 0.5}]},
    "time": {"dt": 1e-3, "t_end": 20.0, "stride": 10},
    "history": {"mode": "prony", "M": 256, "s_max_factor": 40.0, "mini_M": 24},
    "experiment": {"name": "selfcheck", "parameters": {}},
    "output": {"directory": "out", "formats": ["csv", "json"]},
}

_SCENARIO_TWEAKS = {
    "decay": {"forcing": {"modes": []}, "experiment": {"name": "decay", "parameters": {}}},
    "decay-nodamp": {
        "forcing": {"modes": []},
        "damping": {"beta": 0.0, "theta": 0.0},
        "experiment": {"name": "decay-nodamp", "parameters": {}},
    },
    "absorb": {"experiment": {"name": "absorb", "parameters": {}}},
    "split": {"experiment": {"name": "split", "parameters": {}}},
    "rescale": {
        "time": {"dt": 1e-3, "t_end": 5.0, "stride": 10},
        "experiment": {"name": "rescale", "parameters": {}},
    },
    "continuity": {
        "time": {"dt": 1e-3, "t_end": 10.0, "stride": 10},
        "experiment": {"name": "continuity", "parameters": {}},
    },
    "selfcheck": {"experiment": {"name": "selfcheck", "parameters": {}}},
    "refine": {"experiment": {"name": "refine", "parameters": {}}},
}


@dataclass
class RunFile:
    """Validated run configuration plus the pieces the runner needs."""

    raw: dict
    config: ModelConfig
    experiment: str
    parameters: dict
    output_dir: str
    formats: list


def default_runfile(scenario="selfcheck"):
    """The desk-scale default configuration for a named scenario."""
    if scenario not in _SCENARIO_TWEAKS:
        raise RunFileError(f"unknown scenario {scenario!r}")
    doc = copy.deepcopy(_DEFAULTS)
    for section, patch in _SCENARIO_TWEAKS[scenario].items():
        doc[section] = copy.deepcopy(patch) if section != "time" else {**doc[section], **patch}
    return doc


def _require(mapping, path, known):
    if not isinstance(mapping, dict):
        raise RunFileError(f"{path}: expected a mapping")
    for key in mapping:
        if key not in known:
            raise RunFileError(f"{path}.{key}: unknown key (allowed: {sorted(known)})")


def _merge_section(doc, name):
    base = copy.deepcopy(_DEFAULTS[name])
    if name in doc and doc[name] is not None:
        patch = doc[name]
        _require(patch, name, set(base))
        base.update(patch)
    return base


def parse_runfile(doc, base_dir="."):
    """Validate a raw mapping and build the model configuration."""
    if not isinstance(doc, dict):
        raise RunFileError("run file must be a mapping of sections")
    known_sections = set(_DEFAULTS)
    for key in doc:
        if key not in known_sections:
            raise RunFileError(f"{key}: unknown section (allowed: {sorted(known_sections)})")

    domain = _merge_section(doc, "domain")
    model = _merge_section(doc, "model")
    damping = _merge_section(doc, "damping")
    time_sec = _merge_section(doc, "time")
    history = _merge_section(doc, "history")
    experiment = _merge_section(doc, "experiment")
    output = _merge_section(doc, "output")

    kernel_sec = copy.deepcopy(_DEFAULTS["kernel"])
    if "kernel" in doc and doc["kernel"] is not None:
        _require(doc["kernel"], "kernel", {"variant", "coefficients", "table", "epsilon"})
        kernel_sec.update(doc["kernel"])
    forcing_sec = copy.deepcopy(_DEFAULTS["forcing"])
    if "forcing" in doc and doc["forcing"] is not None:
        _require(doc["forcing"], "forcing", {"modes", "zero"})
        if doc["forcing"].get("zero"):
            forcing_sec = {"modes": []}
        else:
            forcing_sec["modes"] = doc["forcing"].get("modes", forcing_sec["modes"])

    try:
        grid = Grid(int(domain["dim"]), int(domain["n"]))
    except ValueError as exc:
        raise RunFileError(f"domain: {exc}") from exc

    variant = kernel_sec.get("variant", "exponential_sum")
    eps = float(kernel_sec.get("epsilon", 1.0))
    if variant == "exponential_sum":
        kernel = ExponentialSum(kernel_sec["coefficients"], epsilon=eps)
    elif variant == "tabulated":
        table = kernel_sec.get("table")
        if table is None:
            raise RunFileError("kernel.table: required for the tabulated variant")
        kernel = load_table(Path(base_dir) / table, epsilon=eps)
    else:
        raise RunFileError(f"kernel.variant: unknown variant {variant!r}")

    modes = []
    for i, entry in enumerate(forcing_sec["modes"]):
        _require(entry, f"forcing.modes[{i}]", {"k", "amplitude", "phase"})
        modes.append((tuple(entry["k"]), float(entry["amplitude"]), float(entry.get("phase", 0.0))))
    forcing = forcing_from_modes(grid, modes) if modes else None

    try:
        cfg = ModelConfig(
            grid=grid,
            kernel=kernel,
            alpha=float(model["alpha"]),
            beta=float(damping["beta"]),
            theta=float(damping["theta"]),
            forcing=forcing,
            dt=float(time_sec["dt"]),
            t_end=float(time_sec["t_end"]),
            stride=int(time_sec["stride"]),
            history_mode=str(history["mode"]),
            history_m=int(history["M"]),
            s_max_factor=float(history["s_max_factor"]),
            mini_m=int(history["mini_M"]),
            varrho=float(model["varrho"]),
        )
    except ValueError as exc:
        raise RunFileError(str(exc)) from exc

    name = experiment["name"]
    if name not in _SCENARIO_TWEAKS:
        raise RunFileError(f"experiment.name: unknown scenario {name!r}")
    raw = {
        "domain": domain,
        "model": model,
        "kernel": kernel_sec,
        "damping": damping,
        "forcing": forcing_sec,
        "time": time_sec,
        "history": history,
        "experiment": experiment,
        "output": output,
    }
    return RunFile(
        raw=raw,
        config=cfg,
        experiment=name,
        parameters=experiment.get("parameters") or {},
        output_dir=str(output["directory"]),
        formats=list(output["formats"]),
    )


def load_runfile(path):
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise RunFileError(f"{path}: {exc}") from exc
    return parse_runfile(doc if doc is not None else {}, base_dir=path.parent)
