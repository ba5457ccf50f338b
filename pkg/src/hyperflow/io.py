"""File formats: curve JSON, flat key=value configs, trace CSV, run metadata.

Every writer here has a matching reader and round-trips exactly (floats are
serialized with shortest round-trip repr).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import platform
from pathlib import Path

import numpy as np

from .curves import ClosedCurve
from .errors import ConfigError
from .flow import CONFIG_KEYS, FlowConfig, FlowTrace

TRACE_COLUMNS = (
    "t",
    "energy",
    "grad_norm",
    "dt",
    "length",
    "bbox_diam",
    "max_k0",
    "max_k1",
    "max_k2",
)


# ----------------------------------------------------------------------
# Curve JSON
# ----------------------------------------------------------------------

def write_curve_json(path, curve: ClosedCurve):
    payload = {
        "n_vertices": curve.n,
        "vertices": [[float(x), float(y)] for x, y in curve.vertices],
    }
    Path(path).write_text(json.dumps(payload))


def read_curve_json(path) -> ClosedCurve:
    payload = json.loads(Path(path).read_text())
    vertices = np.asarray(payload["vertices"], dtype=float)
    if int(payload["n_vertices"]) != len(vertices):
        raise ValueError("n_vertices does not match the vertex list")
    if len(vertices) >= 2 and np.linalg.norm(vertices[0] - vertices[-1]) < 1e-12:
        raise ValueError(
            "repeated endpoint: curves are closed implicitly, drop the last vertex"
        )
    return ClosedCurve(vertices)


# ----------------------------------------------------------------------
# Flat key=value configuration
# ----------------------------------------------------------------------

_FIELD_TYPES = {f.name: f for f in dataclasses.fields(FlowConfig)}


def _coerce(key: str, raw: str):
    if key in ("m", "n_vertices", "sample_every", "snapshot_every", "seed"):
        return int(raw)
    if key in ("dt_init", "dt_max", "tol_grad", "t_max"):
        return float(raw)
    if key == "backend":
        return raw
    raise ConfigError(f"unknown config key {key!r}")


def parse_config_text(text: str) -> FlowConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate config key {key!r}")
        try:
            values[key] = _coerce(key, raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {raw!r}") from exc
    cfg = FlowConfig(**values)
    cfg.validate()
    return cfg


def parse_config(path) -> FlowConfig:
    return parse_config_text(Path(path).read_text())


def config_to_text(cfg: FlowConfig) -> str:
    lines = []
    for key in CONFIG_KEYS:
        value = getattr(cfg, key)
        if value is None:
            continue
        lines.append(f"{key} = {value!r}" if isinstance(value, str) else f"{key} = {value!r}")
    return "\n".join(line.replace("'", "") for line in lines) + "\n"


# ----------------------------------------------------------------------
# Trace CSV
# ----------------------------------------------------------------------

def write_trace_csv(path, trace: FlowTrace):
    arrays = trace.arrays()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for i in range(len(trace)):
            writer.writerow([repr(float(arrays[col][i])) for col in TRACE_COLUMNS])


def read_trace_csv(path) -> FlowTrace:
    trace = FlowTrace()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {header!r}")
        for row in reader:
            values = dict(zip(TRACE_COLUMNS, (float(x) for x in row)))
            trace.t.append(values["t"])
            trace.energy.append(values["energy"])
            trace.grad_norm.append(values["grad_norm"])
            trace.dt.append(values["dt"])
            trace.length.append(values["length"])
            trace.bbox.append(None)
            trace.bbox_diam.append(values["bbox_diam"])
            trace.max_k0.append(values["max_k0"])
            trace.max_k1.append(values["max_k1"])
            trace.max_k2.append(values["max_k2"])
    return trace


# ----------------------------------------------------------------------
# Run metadata
# ----------------------------------------------------------------------

def write_run_meta(path, cfg: FlowConfig, backend: str, wall_time: float, extra=None):
    from . import __version__

    payload = {
        "config": {key: getattr(cfg, key) for key in CONFIG_KEYS},
        "backend": backend,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "hyperflow": __version__,
        },
        "wall_time_s": wall_time,
    }
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True))


def read_run_meta(path) -> dict:
    return json.loads(Path(path).read_text())
