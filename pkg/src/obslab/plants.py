"""Pendulum and hydro-mechanical plants with smoothed Coulomb friction, plus the canned test inputs."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .numerics import relay


class ConfigurationError(ValueError):
    pass


def _require_positive(obj, names):
    for name in names:
        value = getattr(obj, name)
        if not (math.isfinite(value) and value > 0):
            raise ConfigurationError(f"{type(obj).__name__}.{name} must be > 0, got {value}")


@dataclass(frozen=True)
class PendulumParams:
    """Single-link pendulum ``J q'' + th1 q' + th2 tanh(v q') + m lb g sin q = u``."""

    J: float = 0.7013
    m: float = 22.4466
    l_b: float = 0.0641
    g: float = 9.81
    theta1: float = 5.317
    theta2: float = 11.6403
    vartheta: float = 50.0

    def __post_init__(self):
        _require_positive(self, [f.name for f in fields(self)])

    @property
    def gravity_gain(self) -> float:
        return self.m * self.l_b * self.g


@dataclass(frozen=True)
class HydroParams:
    """Linearized hydro-mechanical cylinder with lumped constants a1..a3."""

    a1: float = 1.0
    a2: float = 1.0
    a3: float = 1.0
    theta1: float = 0.01
    theta2: float = 0.01
    vartheta: float = 100.0

    def __post_init__(self):
        _require_positive(self, [f.name for f in fields(self)])


PENDULUM_PRESETS = {
    # nominal physical parameters
    "nominal": PendulumParams(),
    # higher friction identified on the real rig
    "high_friction": PendulumParams(theta1=7.5816, theta2=16.5981),
}

HYDRO_PRESETS = {
    "nominal": HydroParams(),
}


def pendulum_preset(name: str, **overrides) -> PendulumParams:
    try:
        base = PENDULUM_PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown pendulum preset {name!r}; choose from {sorted(PENDULUM_PRESETS)}") from None
    return replace(base, **overrides)


def hydro_preset(name: str, **overrides) -> HydroParams:
    try:
        base = HYDRO_PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown hydro preset {name!r}; choose from {sorted(HYDRO_PRESETS)}") from None
    return replace(base, **overrides)


def pendulum_dynamics(s, u: float, p: PendulumParams) -> np.ndarray:
    x1, x2 = float(s[0]), float(s[1])
    acc = (u - p.theta1 * x2 - p.theta2 * math.tanh(p.vartheta * x2) - p.gravity_gain * math.sin(x1)) / p.J
    return np.array([x2, acc])


def hydro_dynamics(s, u: float, p: HydroParams) -> np.ndarray:
    x1, x2, x3 = float(s[0]), float(s[1]), float(s[2])
    return np.array([
        x2,
        -p.theta1 * x2 - p.theta2 * math.tanh(p.vartheta * x2) + p.a1 * x3,
        -p.a2 * x2 - p.a3 * x3 + u,
    ])


def pendulum_energy(s, p: PendulumParams) -> float:
    x1, x2 = float(s[0]), float(s[1])
    return 0.5 * p.J * x2 * x2 + p.gravity_gain * (1.0 - math.cos(x1))


INPUT_KINDS = ("zero", "sine25", "square14", "hydro_sine")


def test_input(kind: str, t: float) -> float:
    if kind == "sine25":
        return 25.0 * math.sin(5.0 * t)
    if kind == "square14":
        return 14.0 * relay(math.sin(math.pi * t / 3.0))
    if kind == "hydro_sine":
        return 15.0 * math.sin(200.0 * t)
    if kind == "zero":
        return 0.0
    raise ConfigurationError(f"unknown input kind {kind!r}; choose from {list(INPUT_KINDS)}")


# keep pytest from collecting the helper as a test
test_input.__test__ = False
