"""Scalar summaries of a trace: RMSE, steady-state bias, chattering, excitation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..excitation import ExcitationError, ExcitationReport, interval_excitation, phi_signal
from ..numerics import Trace


class MetricsError(ValueError):
    pass


def rmse(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise MetricsError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    return float(np.sqrt(np.mean((a - b) ** 2)))


def _window(trace: Trace, t0: float, t1: float) -> slice:
    time = trace.time
    eps = 1e-9 * max(1.0, abs(time[-1]))
    if t1 < t0 or t0 < time[0] - eps or t1 > time[-1] + eps:
        raise MetricsError(f"window [{t0:.9g}, {t1:.9g}] outside trace [{time[0]:.9g}, {time[-1]:.9g}]")
    i0 = int(np.searchsorted(time, t0 - eps))
    i1 = int(np.searchsorted(time, t1 + eps))
    return slice(i0, i1)


def chattering_index(trace: Trace, channel: str, t0: float, t1: float) -> float:
    """Total variation of ``channel`` over [t0, t1] divided by the window length."""
    if not t1 > t0:
        raise MetricsError("chattering window must have positive length")
    v = trace[channel][_window(trace, t0, t1)]
    return float(np.sum(np.abs(np.diff(v))) / (t1 - t0))


def is_error_channel(name: str) -> bool:
    return name.endswith("_tilde") or name == "e1"


def steady_window(trace: Trace, fraction: float) -> tuple[float, float]:
    """Final ``fraction`` of the horizon, snapped to the sample grid."""
    time = trace.time
    t_end = float(time[-1])
    start = t_end - fraction * (t_end - float(time[0]))
    i0 = int(np.searchsorted(time, start - 1e-9 * max(1.0, t_end)))
    i0 = min(i0, len(time) - 2) if len(time) > 1 else 0
    return float(time[i0]), t_end


@dataclass
class MetricReport:
    window: tuple[float, float] = (0.0, 0.0)
    rmse: dict[str, float] = field(default_factory=dict)
    rmse_final: dict[str, float] = field(default_factory=dict)
    bias_final: dict[str, float] = field(default_factory=dict)
    chattering: dict[str, float] = field(default_factory=dict)
    saturation_count: int = 0
    diverged: bool = False
    divergence_time: Optional[float] = None
    excitation: dict[str, ExcitationReport] = field(default_factory=dict)

    def rows(self) -> list[tuple[str, str, object]]:
        out: list[tuple[str, str, object]] = [
            ("window_start", "", self.window[0]),
            ("window_end", "", self.window[1]),
            ("saturation_count", "", self.saturation_count),
            ("diverged", "", int(self.diverged)),
            ("divergence_time", "", math.nan if self.divergence_time is None else self.divergence_time),
        ]
        for name in self.rmse:
            out.append(("rmse", name, self.rmse[name]))
            out.append(("rmse_final", name, self.rmse_final[name]))
            out.append(("bias_final", name, self.bias_final[name]))
        for name, value in self.chattering.items():
            out.append(("chattering_final", name, value))
        for name, rep in self.excitation.items():
            lam = rep.lambdas
            out.append(("excitation_windows", name, len(rep.windows)))
            out.append(("excitation_min_lambda", name, float(lam.min()) if lam.size else math.nan))
            out.append(("excitation_average_min_eig", name, rep.average_min_eig))
            out.append(("excitation_verdict", name, rep.verdict))
        return out


def compute_metrics(trace: Trace, steady_fraction: float = 0.2,
                    excitation: Sequence[tuple[str, float]] = (), excitation_window: float = 2.0,
                    excitation_stride: Optional[float] = None, excitation_floor: float = 1e-8) -> MetricReport:
    """Metrics shared by live runs and ``obslab metrics`` on a stored trace.

    ``excitation`` lists (x2hat channel, vartheta) pairs to diagnose.
    """
    report = MetricReport()
    if len(trace) < 2:
        return report
    t0, t1 = steady_window(trace, steady_fraction)
    report.window = (t0, t1)
    sl = _window(trace, t0, t1)
    for name, values in trace.channels.items():
        if is_error_channel(name):
            zero = np.zeros_like(values)
            report.rmse[name] = rmse(values, zero)
            report.rmse_final[name] = rmse(values[sl], zero[sl])
            report.bias_final[name] = float(np.mean(values[sl]))
        report.chattering[name] = chattering_index(trace, name, t0, t1)
    for channel, vartheta in excitation:
        if channel not in trace:
            continue
        try:
            report.excitation[channel] = interval_excitation(
                phi_signal(trace, channel, vartheta), excitation_window,
                excitation_stride or excitation_window, excitation_floor)
        except ExcitationError:
            # horizon shorter than one window
            continue
    return report
