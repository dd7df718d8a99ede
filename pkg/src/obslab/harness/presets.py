"""Canned scenarios for every simulated test protocol.

Pendulum presets run at the experimental 1 ms sample rate with a zero-order
hold on the measured angle and the applied torque.  The hydro presets use
continuous measurements (noise is still held per 1 ms sample).
"""

from __future__ import annotations

import copy
import math

from .config import ConfigError, ScenarioConfig, from_dict

_II_ZERO = {"x2hat": 0.0, "theta1hat": 0.0, "theta2hat": 0.0}
_SM_ZERO = {"x1hat": 0.0, "x2hat": 0.0, "delta": [0.0, 0.0]}


def _sm(name, alpha1, alpha2, theta_bar, gamma0):
    return {
        "name": name,
        "kind": "sm_pendulum",
        "gains": {"alpha1": alpha1, "alpha2": alpha2, "theta_bar": list(theta_bar)},
        "initial": {**_SM_ZERO, "gamma": [[gamma0, 0.0], [0.0, gamma0]]},
    }


def _ii(k1, gamma1, gamma2, name="ii"):
    return {"name": name, "kind": "ii_pendulum", "gains": {"k1": k1, "gamma1": gamma1, "gamma2": gamma2},
            "initial": dict(_II_ZERO)}


_PENDULUM_CLOCK = {"step": 1e-4, "sample_period": 1e-3, "hold": True}
_HYDRO_PLANT = {"kind": "hydro", "preset": "nominal", "params": {"vartheta": 100.0},
                "initial": {"x1": 0.0, "x2": 0.0, "x3": 0.0}}
_HYDRO_CLOCK = {"step": 1e-4, "sample_period": 1e-3, "hold": False, "duration": 10.0}


def _hosm(c4):
    return {"name": "hosm", "kind": "hosm",
            "gains": {"L": 650.0, "c1": 3.0, "c2": 4.16, "c3": 3.06, "c4": c4, "a4": 1.0, "a5": 1.0},
            "initial": {"zeta": [0.0, 0.0, 0.0, 0.0]}}


_HYDRO_II = {"name": "ii", "kind": "ii_hydro", "gains": {"k1": 0.005},
             "initial": {"x2hat": 0.0, "x3hat": 0.0, "theta1hat": 0.0, "theta2hat": 0.0}}


PRESETS: dict[str, dict] = {
    # open-loop sine input; one I&I and three SM settings ride on the same plant
    "sine_open_loop": {
        "name": "sine_open_loop",
        "plant": {"kind": "pendulum", "preset": "high_friction", "params": {"vartheta": 50.0}},
        "mode": "open_loop",
        "input": "sine25",
        "observers": [
            _ii(1.0, 1.0, 1.0),
            _sm("sm", 10.0, 100.0, (7.0, 15.0), 1.0),
            _sm("sm_poor_prior", 10.0, 100.0, (0.01, 0.01), 1.0),
            _sm("sm_high_gain", 100.0, 1000.0, (7.0, 15.0), 1.0),
        ],
        "integrator": {**_PENDULUM_CLOCK, "duration": 10.0},
        "metrics": {"excitation_window": 2 * math.pi / 5},  # one input period
    },
    # open-loop square input
    "square_open_loop": {
        "name": "square_open_loop",
        "plant": {"kind": "pendulum", "preset": "high_friction", "params": {"vartheta": 500.0}},
        "mode": "open_loop",
        "input": "square14",
        "observers": [
            _ii(0.7, 0.7, 1.0),
            _sm("sm", 200.0, 2000.0, (7.0, 15.0), 1000.0),
        ],
        "integrator": {**_PENDULUM_CLOCK, "duration": 24.0},
        "metrics": {"excitation_window": 6.0},
    },
}


def _tracking(name, reference, observer):
    return {
        "name": name,
        "plant": {"kind": "pendulum", "preset": "high_friction", "params": {"vartheta": 330.0}},
        "mode": "closed_loop",
        "reference": reference,
        "control": {"law": "adaptive", "observer": observer["name"], "kp": 1600.0, "kv": 1100.0},
        "observers": [observer],
        "integrator": {**_PENDULUM_CLOCK, "duration": 10.0},
        "saturation": {"enabled": True, "limit": 200.0},
        "metrics": {"excitation_window": 2.0},
    }


PRESETS.update({
    "tracking_ii": _tracking("tracking_ii", "t2", _ii(1.0, 0.03, 1.0)),
    "tracking_sm": _tracking("tracking_sm", "t2", _sm("sm", 100.0, 1500.0, (7.0, 15.0), 100.0)),
    "rich_tracking_ii": _tracking("rich_tracking_ii", "rich_sine", _ii(1.0, 0.03, 1.0)),
    "rich_tracking_sm": _tracking("rich_tracking_sm", "rich_sine", _sm("sm", 100.0, 1500.0, (7.0, 15.0), 100.0)),
    # hydro cylinder: the original HOSM gains (c4 = 1.1) and the retuned ones
    "hydro_hosm_c4_high": {
        "name": "hydro_hosm_c4_high",
        "plant": _HYDRO_PLANT,
        "mode": "open_loop",
        "input": "hydro_sine",
        "observers": [_HYDRO_II, _hosm(1.1)],
        "integrator": _HYDRO_CLOCK,
        "metrics": {"excitation_window": 1.0},
    },
    "hydro": {
        "name": "hydro",
        "plant": _HYDRO_PLANT,
        "mode": "open_loop",
        "input": "hydro_sine",
        "observers": [_HYDRO_II, _hosm(1.1e-4)],
        "integrator": _HYDRO_CLOCK,
        "metrics": {"excitation_window": 1.0},
    },
})
PRESETS["hydro_noise"] = {
    **copy.deepcopy(PRESETS["hydro"]),
    "name": "hydro_noise",
    "noise": {"kind": "gaussian", "variance": 1e-4, "target": "x1"},
}


def preset_names() -> list[str]:
    return list(PRESETS)


def preset_dict(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError(f"preset: unknown preset {name!r}; choose from {preset_names()}") from None


def get_preset(name: str) -> ScenarioConfig:
    return from_dict(preset_dict(name))
