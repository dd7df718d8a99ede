"""Reference trajectories and the certainty-equivalent tracking controllers."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .plants import ConfigurationError, PendulumParams


@dataclass(frozen=True)
class ReferenceSample:
    xd: float
    xd_dot: float
    xd_ddot: float


@dataclass(frozen=True)
class ControllerGains:
    kp: float = 1600.0
    kv: float = 1100.0

    def __post_init__(self):
        if not (self.kp > 0 and self.kv > 0):
            raise ConfigurationError(f"controller gains must be positive, got kp={self.kp}, kv={self.kv}")


REFERENCE_KINDS = ("t2", "rich_sine")


def reference(kind: str, t: float) -> ReferenceSample:
    if kind == "t2":
        # xd = 0.3 (1 - g s) with g = exp(-2 t^3), s = sin(7 t)
        g = math.exp(-2.0 * t ** 3)
        dg = -6.0 * t ** 2 * g
        ddg = (-12.0 * t + 36.0 * t ** 4) * g
        s, c = math.sin(7.0 * t), math.cos(7.0 * t)
        ds, dds = 7.0 * c, -49.0 * s
        return ReferenceSample(
            0.3 * (1.0 - g * s),
            -0.3 * (dg * s + g * ds),
            -0.3 * (ddg * s + 2.0 * dg * ds + g * dds),
        )
    if kind == "rich_sine":
        return ReferenceSample(0.5 * math.sin(5.0 * t), 2.5 * math.cos(5.0 * t), -12.5 * math.sin(5.0 * t))
    raise ConfigurationError(f"unknown reference kind {kind!r}; choose from {list(REFERENCE_KINDS)}")


def ideal_control(s, r: ReferenceSample, p: PendulumParams, g: ControllerGains) -> float:
    """Exact-knowledge law: cancel friction and gravity, impose the linear error dynamics."""
    x1, x2 = float(s[0]), float(s[1])
    e1 = x1 - r.xd
    return (p.theta1 * x2 + p.theta2 * math.tanh(p.vartheta * x2) + p.gravity_gain * math.sin(x1)
            + p.J * (r.xd_ddot - g.kp * e1 - g.kv * (x2 - r.xd_dot)))


def adaptive_control(x1: float, x2hat: float, theta1hat: float, theta2hat: float, r: ReferenceSample,
                     p: PendulumParams, g: ControllerGains) -> float:
    """Certainty-equivalent version of :func:`ideal_control` driven by observer estimates."""
    e1 = x1 - r.xd
    return (theta1hat * x2hat + theta2hat * math.tanh(p.vartheta * x2hat) + p.gravity_gain * math.sin(x1)
            + p.J * (r.xd_ddot - g.kp * e1 - g.kv * (x2hat - r.xd_dot)))


def closed_loop_poles(g: ControllerGains) -> tuple[complex | float, complex | float]:
    """Roots of s^2 + kv s + kp, slow root first."""
    disc = g.kv * g.kv - 4.0 * g.kp
    if disc >= 0:
        root = math.sqrt(disc)
        # stable evaluation of the small root
        p2 = -(g.kv + root) / 2.0
        p1 = g.kp / p2
        return p1, p2
    root = math.sqrt(-disc) / 2.0
    return complex(-g.kv / 2.0, root), complex(-g.kv / 2.0, -root)


def saturate(u: float, limit: float) -> tuple[float, bool]:
    if u > limit:
        return limit, True
    if u < -limit:
        return -limit, True
    return u, False

