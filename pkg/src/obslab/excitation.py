"""Windowed Gram-matrix diagnostics for the regressor (x2hat, tanh(vartheta*x2hat)).

Both richness conditions are asymptotic; on a finite trace we can only
report per-window minimum eigenvalues and an "on-horizon" verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import Trace

EXCITED = "excited"
NOT_EXCITED = "not-excited-on-horizon"


class ExcitationError(ValueError):
    pass


@dataclass
class ExcitationReport:
    windows: list[tuple[float, float, float]] = field(default_factory=list)
    average_gram: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    verdict: str = NOT_EXCITED
    floor: float = 0.0

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([w[2] for w in self.windows])

    @property
    def average_min_eig(self) -> float:
        return float(np.linalg.eigvalsh(self.average_gram)[0])


def phi_signal(trace: Trace, channel: str, vartheta: float) -> Trace:
    """Per-sample regressor (x2hat, tanh(vartheta * x2hat)) as a two-channel trace."""
    if channel not in trace:
        raise ExcitationError(f"trace has no channel {channel!r}")
    v = trace[channel]
    return Trace(trace.dt, trace.t0, {"phi1": v.copy(), "phi2": np.tanh(vartheta * v)},
                 trace.seed, trace.time_override)


def _index(trace: Trace, t: float) -> int:
    time = trace.time
    i = int(round((t - trace.t0) / trace.dt))
    tol = 1e-6 * trace.dt
    if i < 0 or i >= len(time) or abs(time[i] - t) > tol:
        raise ExcitationError(f"time {t:.9g} is outside the trace [{time[0]:.9g}, {time[-1]:.9g}] "
                              f"or off its sample grid")
    return i


def _gram(phi: Trace, i0: int, i1: int) -> np.ndarray:
    t = phi.time[i0:i1 + 1]
    a = phi["phi1"][i0:i1 + 1]
    b = phi["phi2"][i0:i1 + 1]
    g11 = np.trapezoid(a * a, t)
    g12 = np.trapezoid(a * b, t)
    g22 = np.trapezoid(b * b, t)
    return np.array([[g11, g12], [g12, g22]])


def gram_window(phi: Trace, t0: float, T: float) -> np.ndarray:
    """Trapezoidal approximation of the integral of phi phi^T over [t0, t0 + T]."""
    if T < 0:
        raise ExcitationError("window length must be non-negative")
    return _gram(phi, _index(phi, t0), _index(phi, t0 + T))


def gram_min_eig(G: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(G)[0])


def interval_excitation(phi: Trace, window: float, stride: float, floor: float = 1e-8) -> ExcitationReport:
    """Minimum eigenvalue of the Gram matrix on consecutive non-overlapping windows."""
    if not (window > 0 and stride > 0):
        raise ExcitationError("window and stride must be positive")
    if stride < window * (1 - 1e-12):
        raise ExcitationError("stride must be >= window so windows do not overlap")
    time = phi.time
    start, end = float(time[0]), float(time[-1])
    if end - start < window * (1 - 1e-12):
        raise ExcitationError(f"trace of length {end - start:.9g} s is shorter than one window ({window:.9g} s)")

    n_win = int(math.floor((end - start - window) / stride + 1e-9)) + 1
    w_steps = int(round(window / phi.dt))
    s_steps = int(round(stride / phi.dt))
    windows = []
    for k in range(n_win):
        i0 = k * s_steps
        i1 = min(i0 + w_steps, len(time) - 1)
        lam = max(gram_min_eig(_gram(phi, i0, i1)), 0.0)
        windows.append((float(time[i0]), float(time[i1] - time[i0]), lam))

    horizon = end - start
    average = _gram(phi, 0, len(time) - 1) / horizon if horizon > 0 else np.zeros((2, 2))
    verdict = EXCITED if windows and all(w[2] > floor for w in windows) else NOT_EXCITED
    return ExcitationReport(windows, average, verdict, floor)
