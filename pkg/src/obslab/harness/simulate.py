"""End-to-end scenario simulation on a shared sample clock."""

from __future__ import annotations

import logging

import numpy as np

from ..control import adaptive_control, ideal_control, reference, saturate
from ..numerics import IntegrationFault, Trace, gaussian_noise, rk4_step
from ..plants import hydro_dynamics, pendulum_dynamics, test_input
from .config import ConfigError, ScenarioConfig
from .metrics import MetricReport, compute_metrics

log = logging.getLogger(__name__)


class _Recorder:
    def __init__(self):
        self.times: list[float] = []
        self.rows: dict[str, list[float]] = {}

    def add(self, t: float, values: dict[str, float]):
        if not self.rows:
            self.rows = {k: [] for k in values}
        self.times.append(t)
        for k, v in values.items():
            self.rows[k].append(v)


def run_scenario(cfg: ScenarioConfig) -> tuple[Trace, MetricReport]:
    """Simulate plant, observers and (in closed loop) the tracking controller.

    Every observer sees the same measurement ``y = x1 + noise``.  With
    ``integrator.hold`` the measurement and the plant input are sampled once
    per sample period and held; otherwise they are evaluated at every RK4
    stage and only the noise is held.  A non-finite state, or one whose
    magnitude exceeds ``metrics.divergence_bound``, ends the run with a
    divergence verdict instead of an exception.
    """
    params = cfg.plant.build()
    x0 = cfg.plant.initial_state()
    n_plant = len(x0)
    plant_rhs = pendulum_dynamics if cfg.plant.kind == "pendulum" else hydro_dynamics
    closed = cfg.mode == "closed_loop"

    observers = [oc.build(float(x0[0]), params) for oc in cfg.observers]
    names = [oc.name for oc in cfg.observers]
    slices = []
    offset = n_plant
    for o in observers:
        n = len(o.state)
        slices.append((offset, offset + n))
        offset += n
    X = np.concatenate([x0] + [o.state for o in observers])

    it = cfg.integrator
    h = it.step
    ts = it.sample_period
    m = it.steps_per_sample
    n_samples = it.n_samples
    record_every = it.record_every
    noise = gaussian_noise(cfg.noise, n_samples + 1)
    bound = cfg.metrics.divergence_bound
    sat = cfg.saturation

    gains = cfg.control.gains if closed else None
    ctrl_idx = names.index(cfg.control.observer) if closed and cfg.control.law == "adaptive" else None

    def command(t, xs, y):
        """Plant input before saturation."""
        if not closed:
            return test_input(cfg.input, t)
        r = reference(cfg.reference, t)
        if ctrl_idx is None:
            return ideal_control(xs[:2], r, params, gains)
        a, b = slices[ctrl_idx]
        est = observers[ctrl_idx].estimates(xs[a:b], y, params)
        return adaptive_control(y, est["x2hat"], est["theta1hat"], est["theta2hat"], r, params, gains)

    def applied(t, xs, y):
        u = command(t, xs, y)
        if sat.enabled:
            return saturate(u, sat.limit)
        return u, False

    held = {"y": 0.0, "u": 0.0, "n": 0.0}

    def field(t, X):
        xs = X.tolist()
        if it.hold:
            y, u = held["y"], held["u"]
        else:
            y = xs[0] + held["n"]
            u = applied(t, xs, y)[0]
        out = plant_rhs(xs[:n_plant], u, params).tolist()
        for o, (a, b) in zip(observers, slices):
            out.extend(o.rhs(xs[a:b], y, u, params))
        return np.array(out)

    rec = _Recorder()
    true_theta = (params.theta1, params.theta2)

    def record(t, xs, y, u):
        row = {"u": u, "y": y}
        for i, n in enumerate(cfg.plant.state_names):
            row[n] = xs[i]
        if closed:
            r = reference(cfg.reference, t)
            row["xd"] = r.xd
            row["e1"] = xs[0] - r.xd
        acc = None
        for name, o, (a, b) in zip(names, observers, slices):
            est = o.estimates(xs[a:b], y, params)
            if o.kind == "hosm":
                if acc is None:
                    acc = float(plant_rhs(xs[:n_plant], u, params)[1])
                row[f"{name}.zeta2hat"] = est["x2hat"]
                row[f"{name}.zeta3hat"] = est["acc_hat"]
                row[f"{name}.zeta2_tilde"] = est["x2hat"] - xs[1]
                row[f"{name}.zeta3_tilde"] = est["acc_hat"] - acc
                continue
            row[f"{name}.x2hat"] = est["x2hat"]
            row[f"{name}.x2_tilde"] = est["x2hat"] - xs[1]
            if "x3hat" in est:
                row[f"{name}.x3hat"] = est["x3hat"]
                row[f"{name}.x3_tilde"] = est["x3hat"] - xs[2]
            for j in (1, 2):
                row[f"{name}.theta{j}hat"] = est[f"theta{j}hat"]
                row[f"{name}.theta{j}_tilde"] = est[f"theta{j}hat"] - true_theta[j - 1]
            if o.kind == "sm_pendulum":
                row[f"{name}.x1hat"] = est["x1hat"]
                for g in ("gamma11", "gamma12", "gamma22"):
                    row[f"{name}.{g}"] = est[g]
        rec.add(t, row)

    saturation_count = 0
    diverged = False
    divergence_time = None
    step_index = 0
    for k in range(n_samples + 1):
        t = k * ts
        xs = X.tolist()
        held["n"] = float(noise[k])
        y = xs[0] + held["n"]
        u, clipped = applied(t, xs, y)
        saturation_count += clipped
        held["y"], held["u"] = y, u
        if k == n_samples:
            # final sample is always kept, on or off the recording grid
            record(t, xs, y, u)
            break
        try:
            for j in range(m):
                tj = t + j * h
                if step_index % record_every == 0:
                    xs = X.tolist()
                    if it.hold:
                        record(tj, xs, y, u)
                    else:
                        yj = xs[0] + held["n"]
                        record(tj, xs, yj, applied(tj, xs, yj)[0])
                X = rk4_step(field, X, tj, h)
                step_index += 1
        except IntegrationFault as fault:
            diverged, divergence_time = True, fault.t
            break
        if not np.all(np.isfinite(X)) or np.max(np.abs(X)) > bound:
            diverged, divergence_time = True, (k + 1) * ts
            break

    if diverged:
        log.warning("scenario %s diverged at t=%.6g s", cfg.name, divergence_time)

    trace = Trace(h * record_every, 0.0, {k: np.array(v) for k, v in rec.rows.items()}, seed=cfg.seed)
    times = np.array(rec.times)
    if not np.allclose(times, trace.time, rtol=0, atol=1e-9 * max(1.0, times[-1])):
        trace.time_override = times

    excitation = [(f"{n}.x2hat", params.vartheta) for n, o in zip(names, observers) if o.kind != "hosm"]
    mc = cfg.metrics
    report = compute_metrics(trace, mc.steady_fraction, excitation, mc.excitation_window,
                             mc.excitation_stride, mc.excitation_floor)
    report.saturation_count = int(saturation_count)
    report.diverged = diverged
    report.divergence_time = divergence_time
    if cfg.outputs is not None:
        missing = [c for c in cfg.outputs if c not in trace]
        if missing:
            raise ConfigError(f"outputs: unknown channel(s) {', '.join(missing)}; available: {trace.names}")
        trace = trace.select(cfg.outputs)
    return trace, report


def channel_names(cfg: ScenarioConfig) -> list[str]:
    """Channels ``run_scenario`` records for ``cfg`` (before output selection)."""
    short = cfg.with_overrides(duration=cfg.integrator.sample_period)
    short.outputs = None
    return run_scenario(short)[0].names
