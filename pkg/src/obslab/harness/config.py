"""Scenario configuration: dataclasses, YAML parsing and validation.

A scenario file is a YAML mapping.  ``preset: <name>`` pulls in a canned
scenario as the base and every other key overrides it (mappings merge
recursively, lists replace).  See ``docs/config.md`` for the grammar.
"""

from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from ..control import REFERENCE_KINDS, ControllerGains
from ..numerics import NoiseSpec
from ..observers import OBSERVER_TYPES, HOSMObserver, IIHydroObserver, IIPendulumObserver, SMObserver
from ..plants import INPUT_KINDS, ConfigurationError, hydro_preset, pendulum_preset


class ConfigError(ConfigurationError):
    """Invalid or unparsable scenario configuration."""


def _float(value, where: str) -> float:
    # PyYAML reads "1e-4" as a string, so coerce explicitly
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number, got {value!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"{where}: must be finite, got {value!r}")
    return out


def _floats(d: dict, where: str) -> dict:
    out = {}
    for k, v in (d or {}).items():
        if isinstance(v, (list, tuple)):
            out[k] = [_floats_list(x, f"{where}.{k}") if isinstance(x, (list, tuple)) else _float(x, f"{where}.{k}")
                      for x in v]
        elif isinstance(v, bool):
            out[k] = v
        else:
            out[k] = _float(v, f"{where}.{k}")
    return out


def _floats_list(v, where):
    return [_float(x, where) for x in v]


def _check_keys(d: dict, allowed, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(d).__name__}")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(unknown)}")


@dataclass
class PlantConfig:
    kind: str = "pendulum"
    preset: str = "nominal"
    params: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)

    def build(self):
        try:
            if self.kind == "pendulum":
                return pendulum_preset(self.preset, **self.params)
            return hydro_preset(self.preset, **self.params)
        except TypeError as exc:
            raise ConfigError(f"plant.params: {exc}") from None

    @property
    def state_names(self) -> list[str]:
        return ["x1", "x2"] if self.kind == "pendulum" else ["x1", "x2", "x3"]

    def initial_state(self) -> np.ndarray:
        return np.array([float(self.initial.get(n, 0.0)) for n in self.state_names])


@dataclass
class ObserverConfig:
    name: str
    kind: str
    gains: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)

    def build(self, x1_0: float, params):
        cls = OBSERVER_TYPES[self.kind]
        try:
            if cls is IIPendulumObserver or cls is IIHydroObserver:
                return cls.from_estimates(x1_0, params, **self.initial, **self.gains)
            if cls is SMObserver:
                return SMObserver(**self.gains, **self.initial)
            return HOSMObserver(**self.gains, **self.initial)
        except TypeError as exc:
            raise ConfigError(f"observers[{self.name}]: {exc}") from None


@dataclass
class IntegratorConfig:
    duration: float
    step: float = 1e-4
    sample_period: float = 1e-3
    record_period: Optional[float] = None
    hold: bool = True

    @property
    def steps_per_sample(self) -> int:
        return int(round(self.sample_period / self.step))

    @property
    def n_samples(self) -> int:
        return int(round(self.duration / self.sample_period))

    @property
    def record_every(self) -> int:
        """Recording interval in integration steps."""
        rp = self.record_period if self.record_period is not None else self.sample_period
        return int(round(rp / self.step))


@dataclass
class ControlConfig:
    law: str = "adaptive"
    observer: Optional[str] = None
    kp: float = 1600.0
    kv: float = 1100.0

    @property
    def gains(self) -> ControllerGains:
        return ControllerGains(self.kp, self.kv)


@dataclass
class SaturationConfig:
    enabled: bool = False
    limit: float = 200.0


@dataclass
class MetricsConfig:
    steady_fraction: float = 0.2
    excitation_window: float = 2.0
    excitation_stride: Optional[float] = None
    excitation_floor: float = 1e-8
    divergence_bound: float = 1e6


@dataclass
class ScenarioConfig:
    name: str
    plant: PlantConfig
    observers: list[ObserverConfig]
    integrator: IntegratorConfig
    mode: str = "open_loop"
    input: Optional[str] = None
    reference: Optional[str] = None
    control: Optional[ControlConfig] = None
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    saturation: SaturationConfig = field(default_factory=SaturationConfig)
    seed: int = 0
    outputs: Optional[list[str]] = None
    metrics: MetricsConfig = field(default_factory=MetricsConfig)

    def __post_init__(self):
        validate(self)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise"] = asdict(self.noise)
        return d

    def with_overrides(self, *, step=None, duration=None, seed=None) -> "ScenarioConfig":
        d = self.to_dict()
        if step is not None:
            d["integrator"]["step"] = step
        if duration is not None:
            d["integrator"]["duration"] = duration
        if seed is not None:
            d["seed"] = seed
            d["noise"]["seed"] = seed
        return from_dict(d)


_TOP_KEYS = ("name", "preset", "plant", "mode", "input", "reference", "control", "observers", "integrator",
             "noise", "saturation", "seed", "outputs", "metrics")


def _grid_multiple(a: float, b: float) -> bool:
    n = round(a / b)
    return n >= 1 and abs(n * b - a) <= 1e-9 * max(a, b)


def validate(cfg: ScenarioConfig) -> None:
    plant = cfg.plant
    if plant.kind not in ("pendulum", "hydro"):
        raise ConfigError(f"plant.kind: must be 'pendulum' or 'hydro', got {plant.kind!r}")
    params = plant.build()
    bad = sorted(set(plant.initial) - set(plant.state_names))
    if bad:
        raise ConfigError(f"plant.initial: unknown state(s) {', '.join(bad)}")

    if cfg.mode not in ("open_loop", "closed_loop"):
        raise ConfigError(f"mode: must be 'open_loop' or 'closed_loop', got {cfg.mode!r}")
    if cfg.mode == "open_loop":
        if cfg.input not in INPUT_KINDS:
            raise ConfigError(f"input: open-loop scenarios need one of {list(INPUT_KINDS)}, got {cfg.input!r}")
    else:
        if plant.kind != "pendulum":
            raise ConfigError("mode: closed_loop is only defined for the pendulum plant")
        if cfg.reference not in REFERENCE_KINDS:
            raise ConfigError(f"reference: closed-loop scenarios need one of {list(REFERENCE_KINDS)}, "
                              f"got {cfg.reference!r}")
        if cfg.control is None:
            raise ConfigError("control: required for closed_loop scenarios")
        if cfg.control.law not in ("adaptive", "ideal"):
            raise ConfigError(f"control.law: must be 'adaptive' or 'ideal', got {cfg.control.law!r}")
        cfg.control.gains  # validates kp, kv
        if cfg.control.law == "adaptive":
            if cfg.control.observer is None:
                cfg.control.observer = cfg.observers[0].name if cfg.observers else None
            names = [o.name for o in cfg.observers]
            if cfg.control.observer not in names:
                raise ConfigError(f"control.observer: {cfg.control.observer!r} is not one of the observers {names}")

    if not cfg.observers:
        raise ConfigError("observers: at least one observer is required")
    seen = set()
    for o in cfg.observers:
        if o.kind not in OBSERVER_TYPES:
            raise ConfigError(f"observers[{o.name}].kind: unknown observer {o.kind!r}; "
                              f"choose from {sorted(OBSERVER_TYPES)}")
        if OBSERVER_TYPES[o.kind].plant != plant.kind:
            raise ConfigError(f"observers[{o.name}]: {o.kind} observes the {OBSERVER_TYPES[o.kind].plant} plant, "
                              f"not {plant.kind}")
        if o.name in seen or not o.name or "." in o.name or "," in o.name:
            raise ConfigError(f"observers[{o.name}].name: names must be unique, non-empty, without '.' or ','")
        seen.add(o.name)
        o.build(plant.initial_state()[0], params)

    it = cfg.integrator
    if not it.duration > 0:
        raise ConfigError(f"integrator.duration: must be > 0, got {it.duration}")
    if not it.step > 0:
        raise ConfigError(f"integrator.step: must be > 0, got {it.step}")
    if not _grid_multiple(it.sample_period, it.step):
        raise ConfigError("integrator.sample_period: must be a positive integer multiple of integrator.step")
    if not _grid_multiple(it.duration, it.sample_period):
        raise ConfigError("integrator.duration: must be an integer multiple of integrator.sample_period")
    if it.record_period is not None and not _grid_multiple(it.record_period, it.step):
        raise ConfigError("integrator.record_period: must be an integer multiple of integrator.step")

    if cfg.noise.target != "x1":
        raise ConfigError(f"noise.target: only the measured position 'x1' can be corrupted, got {cfg.noise.target!r}")
    if not cfg.saturation.limit > 0:
        raise ConfigError("saturation.limit: must be > 0")
    m = cfg.metrics
    if not 0 < m.steady_fraction <= 1:
        raise ConfigError("metrics.steady_fraction: must be in (0, 1]")
    if not m.excitation_window > 0:
        raise ConfigError("metrics.excitation_window: must be > 0")
    if m.excitation_stride is not None and m.excitation_stride < m.excitation_window:
        raise ConfigError("metrics.excitation_stride: must be >= metrics.excitation_window")
    if not m.divergence_bound > 0:
        raise ConfigError("metrics.divergence_bound: must be > 0")


def _deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _observer_from(d: Any, i: int) -> ObserverConfig:
    where = f"observers[{i}]"
    _check_keys(d, ("name", "kind", "gains", "initial"), where)
    if "kind" not in d:
        raise ConfigError(f"{where}.kind: required field missing")
    name = str(d.get("name", d["kind"]))
    gains = dict(d.get("gains") or {})
    initial = dict(d.get("initial") or {})
    for key in ("adapt", "literal_sign"):
        if key in gains and not isinstance(gains[key], bool):
            raise ConfigError(f"{where}.gains.{key}: expected true/false")
    return ObserverConfig(name, str(d["kind"]), _floats(gains, f"{where}.gains"),
                          _floats(initial, f"{where}.initial"))


def from_dict(d: dict) -> ScenarioConfig:
    """Build and validate a config from a plain mapping (preset merge included)."""
    if not isinstance(d, dict):
        raise ConfigError("scenario file must be a mapping")
    _check_keys(d, _TOP_KEYS, "scenario")
    if d.get("preset") is not None:
        from .presets import preset_dict

        d = _deep_merge(preset_dict(d["preset"]), {k: v for k, v in d.items() if k != "preset"})

    for key in ("plant", "observers", "integrator"):
        if key not in d or d[key] is None:
            raise ConfigError(f"{key}: required field missing")

    p = d["plant"]
    _check_keys(p, ("kind", "preset", "params", "initial"), "plant")
    kind = str(p.get("kind", "pendulum"))
    plant = PlantConfig(kind, str(p.get("preset", "nominal")),
                        _floats(p.get("params"), "plant.params"), _floats(p.get("initial"), "plant.initial"))

    obs_raw = d["observers"]
    if not isinstance(obs_raw, list):
        raise ConfigError("observers: expected a list")
    observers = [_observer_from(o, i) for i, o in enumerate(obs_raw)]

    it = d["integrator"]
    _check_keys(it, ("duration", "step", "sample_period", "record_period", "hold"), "integrator")
    if "duration" not in it:
        raise ConfigError("integrator.duration: required field missing")
    hold = it.get("hold", True)
    if not isinstance(hold, bool):
        raise ConfigError("integrator.hold: expected true/false")
    integrator = IntegratorConfig(
        duration=_float(it["duration"], "integrator.duration"),
        step=_float(it.get("step", 1e-4), "integrator.step"),
        sample_period=_float(it.get("sample_period", 1e-3), "integrator.sample_period"),
        record_period=None if it.get("record_period") is None else _float(it["record_period"],
                                                                           "integrator.record_period"),
        hold=hold,
    )

    control = None
    if d.get("control") is not None:
        c = d["control"]
        _check_keys(c, ("law", "observer", "kp", "kv"), "control")
        control = ControlConfig(str(c.get("law", "adaptive")), c.get("observer"),
                                _float(c.get("kp", 1600.0), "control.kp"), _float(c.get("kv", 1100.0), "control.kv"))

    seed = d.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError(f"seed: expected a 64-bit non-negative integer, got {seed!r}")

    n = d.get("noise") or {}
    _check_keys(n, ("kind", "variance", "seed", "target"), "noise")
    nseed = n.get("seed", seed)
    if isinstance(nseed, bool) or not isinstance(nseed, int) or not 0 <= nseed < 2 ** 64:
        raise ConfigError(f"noise.seed: expected a 64-bit non-negative integer, got {nseed!r}")
    try:
        noise = NoiseSpec(str(n.get("kind", "none")), _float(n.get("variance", 0.0), "noise.variance"),
                          nseed, str(n.get("target", "x1")))
    except ValueError as exc:
        raise ConfigError(f"noise: {exc}") from None

    s = d.get("saturation") or {}
    _check_keys(s, ("enabled", "limit"), "saturation")
    if not isinstance(s.get("enabled", False), bool):
        raise ConfigError("saturation.enabled: expected true/false")
    saturation = SaturationConfig(s.get("enabled", False), _float(s.get("limit", 200.0), "saturation.limit"))

    m = d.get("metrics") or {}
    _check_keys(m, ("steady_fraction", "excitation_window", "excitation_stride", "excitation_floor",
                    "divergence_bound"), "metrics")
    metrics = MetricsConfig(**{k: (None if v is None else _float(v, f"metrics.{k}")) for k, v in m.items()})

    outputs = d.get("outputs")
    if outputs is not None:
        if not isinstance(outputs, list):
            raise ConfigError("outputs: expected a list of channel names or null")
        outputs = [str(o) for o in outputs]

    return ScenarioConfig(
        name=str(d.get("name", d.get("preset") or "scenario")),
        plant=plant,
        observers=observers,
        integrator=integrator,
        mode=str(d.get("mode", "open_loop")),
        input=d.get("input"),
        reference=d.get("reference"),
        control=control,
        noise=noise,
        saturation=saturation,
        seed=seed,
        outputs=outputs,
        metrics=metrics,
    )


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark is not None else source
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"{where}: YAML parse error: {problem}") from None
    if data is None:
        raise ConfigError(f"{source}: empty scenario file")
    try:
        return from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), str(path))


def dump_scenario(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)
