"""Adaptive velocity observers.

Four algorithms are provided, all sharing the same small surface so the
harness can stack any number of them on one plant:

* :class:`IIPendulumObserver` - immersion-and-invariance observer for the pendulum,
* :class:`SMObserver` - super-twisting observer with least-squares adaptation,
* :class:`IIHydroObserver` - immersion-and-invariance observer for the hydro cylinder,
* :class:`HOSMObserver` - fourth-order (fifth-generation) sliding-mode differentiator.

Each observer is an immutable value.  ``state`` packs the integrator states
into a vector, ``rhs`` maps (state vector, measurement, input, plant) to its
time derivative and ``estimates`` evaluates the algebraic outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import ClassVar, Union

import numpy as np

from .numerics import IntegrationFault, frac_pow_sign, log_cosh, relay, rk4_step
from .plants import ConfigurationError, HydroParams, PendulumParams


def _positive(obj, *names):
    for n in names:
        v = getattr(obj, n)
        if not v > 0:
            raise ConfigurationError(f"{type(obj).__name__}.{n} must be > 0, got {v}")


def _non_negative(obj, *names):
    # zero is the adaptation-freezing switch
    for n in names:
        v = getattr(obj, n)
        if not v >= 0:
            raise ConfigurationError(f"{type(obj).__name__}.{n} must be >= 0, got {v}")


class Observer:
    kind: ClassVar[str] = ""
    plant: ClassVar[str] = ""

    @property
    def state(self) -> np.ndarray:
        raise NotImplementedError

    def with_state(self, z) -> "Observer":
        raise NotImplementedError

    def rhs(self, z, x1: float, u: float, p) -> list[float]:
        raise NotImplementedError

    def estimates(self, z, x1: float, p) -> dict[str, float]:
        raise NotImplementedError

    def derivative(self, x1: float, u: float, p) -> np.ndarray:
        return np.array(self.rhs(self.state.tolist(), x1, u, p))


# --------------------------------------------------------------------------
# I&I observer, pendulum


@dataclass(frozen=True)
class IIPendulumObserver(Observer):
    k1: float = 1.0
    gamma1: float = 1.0
    gamma2: float = 1.0
    x2I: float = 0.0
    theta1I: float = 0.0
    theta2I: float = 0.0

    kind: ClassVar[str] = "ii_pendulum"
    plant: ClassVar[str] = "pendulum"

    def __post_init__(self):
        _positive(self, "k1")
        _non_negative(self, "gamma1", "gamma2")

    @classmethod
    def from_estimates(cls, x1: float, p: PendulumParams, x2hat: float = 0.0, theta1hat: float = 0.0,
                       theta2hat: float = 0.0, **gains) -> "IIPendulumObserver":
        """Build the internal states that reproduce the given initial estimates."""
        o = cls(**gains)
        return replace(
            o,
            x2I=x2hat - o.k1 / p.J * x1,
            theta1I=theta1hat + o.gamma1 * p.vartheta / (2 * o.k1) * x2hat ** 2,
            theta2I=theta2hat + o.gamma2 / o.k1 * log_cosh(p.vartheta * x2hat),
        )

    @property
    def state(self) -> np.ndarray:
        return np.array([self.x2I, self.theta1I, self.theta2I])

    def with_state(self, z) -> "IIPendulumObserver":
        return replace(self, x2I=float(z[0]), theta1I=float(z[1]), theta2I=float(z[2]))

    def _outputs(self, z, x1, p):
        x2hat = z[0] + self.k1 / p.J * x1
        th1 = z[1] - self.gamma1 * p.vartheta / (2 * self.k1) * x2hat * x2hat
        th2 = z[2] - self.gamma2 / self.k1 * log_cosh(p.vartheta * x2hat)
        return x2hat, th1, th2

    def estimates(self, z, x1, p):
        x2hat, th1, th2 = self._outputs(z, x1, p)
        return {"x2hat": x2hat, "theta1hat": th1, "theta2hat": th2}

    def rhs(self, z, x1, u, p):
        J, k1 = p.J, self.k1
        x2hat, th1, th2 = self._outputs(z, x1, p)
        th = math.tanh(p.vartheta * x2hat)
        dx2I = (u - p.gravity_gain * math.sin(x1) - (th1 + k1) * x2hat - th2 * th) / J
        bracket = k1 / J * x2hat + dx2I
        scale = p.vartheta / k1
        return [dx2I, self.gamma1 * scale * x2hat * bracket, self.gamma2 * scale * th * bracket]


def ii_pend_output(o: IIPendulumObserver, x1: float, p: PendulumParams) -> tuple[float, float, float]:
    return o._outputs(o.state.tolist(), x1, p)


def ii_pend_derivative(o: IIPendulumObserver, x1: float, u: float, p: PendulumParams) -> np.ndarray:
    return o.derivative(x1, u, p)


# --------------------------------------------------------------------------
# Super-twisting observer with least-squares parameter adaptation


@dataclass(frozen=True)
class SMObserver(Observer):
    """Super-twisting velocity observer with a least-squares estimator of the friction offset.

    ``Gamma`` is stored as its three independent entries so it stays exactly
    symmetric under integration.  The output-injection terms act on
    ``x1 - x1hat`` (restoring) unless ``literal_sign`` is set, in which case
    they act on ``x1hat - x1`` as the formula is usually printed.
    """

    alpha1: float = 10.0
    alpha2: float = 100.0
    theta_bar: tuple[float, float] = (7.0, 15.0)
    x1hat: float = 0.0
    x2hat: float = 0.0
    delta: tuple[float, float] = (0.0, 0.0)
    gamma: tuple[float, float, float] = (1.0, 0.0, 1.0)
    adapt: bool = True
    literal_sign: bool = False

    kind: ClassVar[str] = "sm_pendulum"
    plant: ClassVar[str] = "pendulum"

    def __post_init__(self):
        _positive(self, "alpha1", "alpha2")
        object.__setattr__(self, "theta_bar", tuple(float(v) for v in self.theta_bar))
        object.__setattr__(self, "delta", tuple(float(v) for v in self.delta))
        g = np.asarray(self.gamma, dtype=float)
        if g.shape == (2, 2):
            if not np.allclose(g, g.T):
                raise ConfigurationError("SMObserver.gamma must be symmetric")
            g = np.array([g[0, 0], g[0, 1], g[1, 1]])
        if g.shape != (3,):
            raise ConfigurationError("SMObserver.gamma must be a 2x2 matrix or (g11, g12, g22)")
        if not (g[0] > 0 and g[0] * g[2] - g[1] ** 2 > 0):
            raise ConfigurationError("SMObserver.gamma must be positive definite")
        object.__setattr__(self, "gamma", tuple(float(v) for v in g))

    @property
    def gamma_matrix(self) -> np.ndarray:
        g11, g12, g22 = self.gamma
        return np.array([[g11, g12], [g12, g22]])

    @property
    def state(self) -> np.ndarray:
        return np.array([self.x1hat, self.x2hat, *self.delta, *self.gamma])

    def with_state(self, z) -> "SMObserver":
        z = [float(v) for v in z]
        return replace(self, x1hat=z[0], x2hat=z[1], delta=(z[2], z[3]), gamma=(z[4], z[5], z[6]))

    def estimates(self, z, x1, p):
        return {
            "x1hat": z[0],
            "x2hat": z[1],
            "theta1hat": p.J * (z[2] + self.theta_bar[0]),
            "theta2hat": p.J * (z[3] + self.theta_bar[1]),
            "gamma11": z[4],
            "gamma12": z[5],
            "gamma22": z[6],
        }

    def rhs(self, z, x1, u, p):
        x1hat, x2hat, d1, d2, g11, g12, g22 = z
        err = x1hat - x1
        if not self.literal_sign:
            err = -err
        J = p.J
        th = math.tanh(p.vartheta * x2hat)
        inj = self.alpha1 * relay(err)
        dx1hat = x2hat + self.alpha2 * frac_pow_sign(err, 0.5)
        dx2hat = (u - p.gravity_gain * math.sin(x1) - self.theta_bar[0] * x2hat - self.theta_bar[1] * th) / J + inj
        if not self.adapt:
            return [dx1hat, dx2hat, 0.0, 0.0, 0.0, 0.0, 0.0]
        phi1, phi2 = -x2hat, -th
        v1 = g11 * phi1 + g12 * phi2
        v2 = g12 * phi1 + g22 * phi2
        s = -(phi1 * d1 + phi2 * d2) + inj
        return [dx1hat, dx2hat, v1 * s, v2 * s, -v1 * v1, -v1 * v2, -v2 * v2]


def sm_regressor(x2hat: float, vartheta: float) -> np.ndarray:
    return np.array([-x2hat, -math.tanh(vartheta * x2hat)])


def sm_gamma_rate(gamma, phi) -> np.ndarray:
    """Least-squares gain derivative -Gamma phi phi^T Gamma as a 2x2 matrix."""
    G = np.asarray(gamma, dtype=float)
    v = G @ np.asarray(phi, dtype=float)
    return -np.outer(v, v)


def sm_derivative(o: SMObserver, x1: float, u: float, p: PendulumParams) -> np.ndarray:
    return o.derivative(x1, u, p)


# --------------------------------------------------------------------------
# I&I observer, hydro-mechanical system


@dataclass(frozen=True)
class IIHydroObserver(Observer):
    k1: float = 0.005
    gamma1: float = 1.0
    gamma2: float = 1.0
    x2I: float = 0.0
    theta1I: float = 0.0
    theta2I: float = 0.0
    x3hat: float = 0.0

    kind: ClassVar[str] = "ii_hydro"
    plant: ClassVar[str] = "hydro"

    def __post_init__(self):
        _positive(self, "k1")
        _non_negative(self, "gamma1", "gamma2")

    @classmethod
    def from_estimates(cls, x1: float, p: HydroParams, x2hat: float = 0.0, x3hat: float = 0.0,
                       theta1hat: float = 0.0, theta2hat: float = 0.0, **gains) -> "IIHydroObserver":
        o = cls(**gains)
        return replace(
            o,
            x2I=x2hat - o.k1 * x1,
            theta1I=theta1hat + o.gamma1 * p.vartheta / (2 * o.k1) * x2hat ** 2,
            theta2I=theta2hat + o.gamma2 / o.k1 * log_cosh(p.vartheta * x2hat),
            x3hat=x3hat,
        )

    @property
    def state(self) -> np.ndarray:
        return np.array([self.x2I, self.theta1I, self.theta2I, self.x3hat])

    def with_state(self, z) -> "IIHydroObserver":
        return replace(self, x2I=float(z[0]), theta1I=float(z[1]), theta2I=float(z[2]), x3hat=float(z[3]))

    def _outputs(self, z, x1, p):
        x2hat = z[0] + self.k1 * x1
        th1 = z[1] - self.gamma1 * p.vartheta / (2 * self.k1) * x2hat * x2hat
        th2 = z[2] - self.gamma2 / self.k1 * log_cosh(p.vartheta * x2hat)
        return x2hat, th1, th2

    def estimates(self, z, x1, p):
        x2hat, th1, th2 = self._outputs(z, x1, p)
        return {"x2hat": x2hat, "x3hat": z[3], "theta1hat": th1, "theta2hat": th2}

    def rhs(self, z, x1, u, p):
        k1 = self.k1
        x2hat, th1, th2 = self._outputs(z, x1, p)
        x3hat = z[3]
        th = math.tanh(p.vartheta * x2hat)
        dx2I = p.a1 * x3hat - (th1 + k1) * x2hat - th2 * th
        bracket = k1 * x2hat + dx2I
        scale = p.vartheta / k1
        return [
            dx2I,
            self.gamma1 * scale * x2hat * bracket,
            self.gamma2 * scale * th * bracket,
            -p.a2 * x2hat - p.a3 * x3hat + u,
        ]


def ii_hydro_derivative(o: IIHydroObserver, x1: float, u: float, p: HydroParams) -> np.ndarray:
    return o.derivative(x1, u, p)


# --------------------------------------------------------------------------
# Fourth-order sliding-mode differentiator with input injection


@dataclass(frozen=True)
class HOSMObserver(Observer):
    """zeta2 estimates velocity, zeta3 estimates acceleration."""

    L: float = 650.0
    c1: float = 3.0
    c2: float = 4.16
    c3: float = 3.06
    c4: float = 1.1e-4
    a4: float = 1.0
    a5: float = 1.0
    zeta: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    kind: ClassVar[str] = "hosm"
    plant: ClassVar[str] = "hydro"

    def __post_init__(self):
        _positive(self, "L", "c1", "c2", "c3", "c4")
        object.__setattr__(self, "zeta", tuple(float(v) for v in self.zeta))
        if len(self.zeta) != 4:
            raise ConfigurationError("HOSMObserver.zeta needs four entries")

    @property
    def state(self) -> np.ndarray:
        return np.array(self.zeta)

    def with_state(self, z) -> "HOSMObserver":
        return replace(self, zeta=tuple(float(v) for v in z))

    def estimates(self, z, x1, p=None):
        return {"zeta1hat": z[0], "x2hat": z[1], "acc_hat": z[2], "zeta4hat": z[3]}

    def rhs(self, z, x1, u, p=None):
        z1, z2, z3, z4 = z
        e = z1 - x1
        L = self.L
        return [
            -L ** 0.25 * self.c1 * frac_pow_sign(e, 0.75) + z2,
            -L ** 0.5 * self.c2 * frac_pow_sign(e, 0.5) + z3,
            -L ** 0.75 * self.c3 * frac_pow_sign(e, 0.25) + z4 + self.a4 * u,
            -L * self.c4 * relay(e) - self.a5 * u,
        ]


def hosm_derivative(o: HOSMObserver, x1: float, u: float) -> np.ndarray:
    return o.derivative(x1, u, None)


AnyObserver = Union[IIPendulumObserver, SMObserver, IIHydroObserver, HOSMObserver]

OBSERVER_TYPES: dict[str, type] = {
    cls.kind: cls for cls in (IIPendulumObserver, SMObserver, IIHydroObserver, HOSMObserver)
}


def observer_step(obs: AnyObserver, x1: float, u: float, p, h: float) -> AnyObserver:
    """Advance ``obs`` by one RK4 step with ``x1`` and ``u`` held over the step."""
    z = rk4_step(lambda t, z: np.array(obs.rhs(z.tolist(), x1, u, p)), obs.state, 0.0, h)
    if not np.all(np.isfinite(z)):
        raise IntegrationFault(h, z, "non-finite observer state")
    return obs.with_state(z)
