"""CSV/JSON persistence for traces, metrics and run manifests."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

import numpy as np

from .. import __version__
from ..numerics import Trace
from .config import ScenarioConfig
from .metrics import MetricReport

FLOAT_FMT = "%.8e"  # 9 significant digits, fixed layout


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return FLOAT_FMT % float(value)


def write_trace(trace: Trace, path) -> Path:
    path = Path(path)
    data = np.column_stack([trace.time] + [trace[n] for n in trace.names])
    header = ",".join(["time"] + trace.names)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            np.savetxt(fh, data, fmt=FLOAT_FMT, delimiter=",", header=header, comments="")
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc
    return path


def read_trace(path) -> Trace:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if not header or header[0] != "time":
        raise ValueError(f"{path}: first column must be 'time'")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    time = data[:, 0]
    dt = float(time[1] - time[0]) if len(time) > 1 else 1.0
    chans = {name: data[:, i + 1] for i, name in enumerate(header[1:])}
    tr = Trace(dt, float(time[0]), chans)
    if not np.allclose(tr.time, time, rtol=0, atol=1e-6 * dt):
        tr.time_override = time
    return tr


def write_metrics(report: MetricReport, path) -> Path:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["metric", "channel", "value"])
            for metric, channel, value in report.rows():
                w.writerow([metric, channel, _fmt(value)])
    except OSError as exc:
        raise OSError(f"cannot write metrics to {path}: {exc}") from exc
    return path


def manifest(cfg: Optional[ScenarioConfig], trace: Trace, report: MetricReport) -> dict:
    return {
        "tool": "obslab",
        "version": __version__,
        "config": None if cfg is None else cfg.to_dict(),
        "channels": ["time"] + trace.names,
        "samples": len(trace),
        "diverged": report.diverged,
        "divergence_time": report.divergence_time,
    }


def write_outputs(trace: Trace, report: MetricReport, out_dir, cfg: Optional[ScenarioConfig] = None) -> dict[str, Path]:
    """Write trace.csv, metrics.csv and manifest.json into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    paths = {
        "trace": write_trace(trace, out / "trace.csv"),
        "metrics": write_metrics(report, out / "metrics.csv"),
    }
    text = json.dumps(manifest(cfg, trace, report), indent=2, sort_keys=True, allow_nan=True,
                      default=_json_default)
    paths["manifest"] = out / "manifest.json"
    paths["manifest"].write_text(text + "\n", encoding="utf-8")
    return paths


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
