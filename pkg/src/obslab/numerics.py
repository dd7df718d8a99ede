"""Fixed-step integration, seeded noise and the nonsmooth primitives used by the observers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

Vector = np.ndarray
Field = Callable[[float, Vector], Vector]


class IntegrationFault(FloatingPointError):
    """A derivative or state became non-finite (or left the allowed bound)."""

    def __init__(self, t: float, state: Sequence[float], reason: str = "non-finite derivative"):
        self.t = float(t)
        self.state = np.array(state, dtype=float)
        super().__init__(f"{reason} at t={self.t:.9g}")


@dataclass
class Trace:
    """Uniformly sampled, named time series.

    ``time`` is only supplied explicitly when the last sample falls off the
    uniform grid (a shortened final step); otherwise it is ``t0 + i*dt``.
    """

    dt: float
    t0: float = 0.0
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    seed: Optional[int] = None
    time_override: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"Trace dt must be positive, got {self.dt}")
        self.channels = {str(k): np.asarray(v, dtype=float) for k, v in self.channels.items()}
        self._check_lengths()

    def _check_lengths(self):
        lengths = {len(v) for v in self.channels.values()}
        if self.time_override is not None:
            lengths.add(len(self.time_override))
        if len(lengths) > 1:
            raise ValueError(f"channel lengths differ: {sorted(lengths)}")

    def __len__(self) -> int:
        if self.time_override is not None:
            return len(self.time_override)
        for v in self.channels.values():
            return len(v)
        return 0

    @property
    def time(self) -> np.ndarray:
        if self.time_override is not None:
            return np.asarray(self.time_override, dtype=float)
        return self.t0 + self.dt * np.arange(len(self))

    @property
    def names(self) -> list[str]:
        return list(self.channels)

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.channels[name]
        except KeyError:
            raise KeyError(f"trace has no channel {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.channels

    def add(self, name: str, values) -> None:
        if name in self.channels:
            raise ValueError(f"duplicate channel name {name!r}")
        values = np.asarray(values, dtype=float)
        if self.channels or self.time_override is not None:
            if len(values) != len(self):
                raise ValueError(f"channel {name!r} has length {len(values)}, trace has {len(self)}")
        self.channels[name] = values

    def select(self, names: Optional[Sequence[str]]) -> "Trace":
        """Sub-trace restricted to ``names`` (all channels when None)."""
        if names is None:
            names = self.names
        chans = {n: self[n] for n in names}
        out = Trace(self.dt, self.t0, chans, self.seed, self.time_override)
        if not chans and self.time_override is None:
            # keep the time base alive for an empty selection
            out.time_override = self.time
        return out


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"
    variance: float = 0.0
    seed: int = 0
    target: str = "x1"

    def __post_init__(self):
        if self.kind not in ("none", "gaussian"):
            raise ValueError(f"noise kind must be 'none' or 'gaussian', got {self.kind!r}")
        if not self.variance >= 0:
            raise ValueError(f"noise variance must be >= 0, got {self.variance}")


def rk4_step(f: Field, x, t: float, h: float) -> Vector:
    """One classical Runge-Kutta step of ``x' = f(t, x)``."""
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    k1 = _checked(f(t, x), t, x)
    k2 = _checked(f(t + 0.5 * h, x + 0.5 * h * k1), t, x)
    k3 = _checked(f(t + 0.5 * h, x + 0.5 * h * k2), t, x)
    k4 = _checked(f(t + h, x + h * k3), t, x)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _checked(dx, t, x) -> Vector:
    dx = np.asarray(dx, dtype=float)
    if not np.all(np.isfinite(dx)):
        raise IntegrationFault(t, x)
    return dx


def integrate(f: Field, x0, t0: float, t_end: float, h: float, record_every: int = 1,
              names: Optional[Sequence[str]] = None) -> Trace:
    """Integrate ``x' = f(t, x)`` on ``[t0, t_end]`` with fixed RK4 steps.

    Samples are taken at ``t0`` and every ``record_every`` steps; the final
    step is shortened so the last sample sits exactly on ``t_end``.
    """
    if t_end < t0:
        raise ValueError("t_end must not precede t0")
    if not h > 0:
        raise ValueError("step must be positive")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")

    x = np.array(x0, dtype=float).ravel()
    span = t_end - t0
    n_full = int(math.floor(span / h + 1e-9))
    remainder = span - n_full * h
    if remainder <= 1e-12 * max(1.0, abs(t_end)):
        remainder = 0.0

    times = [t0]
    rows = [x.copy()]
    t = t0
    for i in range(1, n_full + 1):
        x = rk4_step(f, x, t, h)
        t = t0 + i * h
        if i % record_every == 0:
            times.append(t)
            rows.append(x.copy())
    if remainder > 0.0:
        x = rk4_step(f, x, t, remainder)
    if remainder > 0.0 or n_full % record_every != 0:
        times.append(t_end)
        rows.append(x.copy())

    data = np.array(rows)
    if names is None:
        names = [f"x{i}" for i in range(data.shape[1])]
    chans = {n: data[:, i] for i, n in enumerate(names)}
    dt = h * record_every
    uniform = np.allclose(np.diff(times), dt, rtol=1e-9, atol=0.0) if len(times) > 1 else True
    return Trace(dt, t0, chans, time_override=None if uniform else np.array(times))


def gaussian_noise(spec: NoiseSpec, n: int) -> np.ndarray:
    """``n`` i.i.d. zero-mean samples with ``spec.variance``, fully determined by ``spec.seed``."""
    if spec.kind == "none" or spec.variance == 0.0:
        return np.zeros(n)
    rng = np.random.default_rng(spec.seed)
    return rng.normal(0.0, math.sqrt(spec.variance), n)


def relay(x: float) -> float:
    """sign(x) with relay(0) = 0."""
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def frac_pow_sign(x: float, p: float) -> float:
    """|x|**p * sign(x)."""
    if x == 0.0:
        return 0.0
    return math.copysign(abs(x) ** p, x)


def log_cosh(z: float) -> float:
    """ln(cosh(z)) without overflow for large |z|."""
    a = abs(z)
    return a - math.log(2.0) + math.log1p(math.exp(-2.0 * a))
