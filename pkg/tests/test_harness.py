import json
import math

import numpy as np
import pytest

from obslab.control import ControllerGains, closed_loop_poles, reference
from obslab.harness import (ConfigError, chattering_index, compute_metrics, dump_scenario, get_preset,
                            load_scenario, parse_scenario, preset_names, read_trace, rmse, run_scenario,
                            write_outputs)
from obslab.harness.cli import main
from obslab.harness.config import from_dict
from obslab.harness.metrics import MetricsError
from obslab.numerics import Trace
from obslab.plants import test_input as plant_input

MINIMAL = """\
name: quiet
plant: {kind: pendulum, preset: nominal}
input: zero
observers:
  - {name: ii, kind: ii_pendulum}
  - name: sm
    kind: sm_pendulum
integrator: {duration: 0.5}
"""


def scenario(**over):
    d = {
        "name": "t",
        "plant": {"kind": "pendulum", "preset": "high_friction", "params": {"vartheta": 50.0}},
        "input": "sine25",
        "observers": [{"name": "ii", "kind": "ii_pendulum"}, {"name": "sm", "kind": "sm_pendulum"}],
        "integrator": {"duration": 0.5},
    }
    d.update(over)
    return from_dict(d)


class TestConfig:
    def test_preset_file(self, tmp_path):
        path = tmp_path / "s.yaml"
        path.write_text("preset: sine_open_loop\n")
        cfg = load_scenario(path)
        assert cfg.plant.build().vartheta == 50.0
        ii = cfg.observers[0]
        assert ii.kind == "ii_pendulum"
        assert ii.gains == {"k1": 1.0, "gamma1": 1.0, "gamma2": 1.0}
        assert set(ii.initial.values()) == {0.0}
        assert cfg.plant.initial_state().tolist() == [0.0, 0.0]

    def test_preset_override_merges(self, tmp_path):
        path = tmp_path / "s.yaml"
        path.write_text("preset: sine_open_loop\nintegrator: {duration: 2.0}\nseed: 9\n")
        cfg = load_scenario(path)
        assert cfg.integrator.duration == 2.0
        assert cfg.integrator.step == 1e-4 and cfg.integrator.hold is True
        assert cfg.seed == 9 and cfg.noise.seed == 9

    def test_missing_duration(self):
        with pytest.raises(ConfigError, match="duration"):
            parse_scenario(MINIMAL.replace("integrator: {duration: 0.5}", "integrator: {step: 1e-4}"))

    def test_round_trip(self):
        for name in ("sine_open_loop", "tracking_sm", "hydro_noise"):
            cfg = get_preset(name)
            again = parse_scenario(dump_scenario(cfg))
            assert again == cfg
            assert dump_scenario(again) == dump_scenario(cfg)

    def test_yaml_error_location(self):
        with pytest.raises(ConfigError, match=r"bad\.yaml:\d+:\d+: YAML parse error"):
            parse_scenario("name: x\nplant: {kind: pendulum\ninput: zero\n", "bad.yaml")

    def test_unknown_field_named(self):
        with pytest.raises(ConfigError, match="integrator: unknown field.*stepsize"):
            parse_scenario(MINIMAL.replace("{duration: 0.5}", "{duration: 0.5, stepsize: 1}"))

    def test_string_numbers_coerced(self):
        cfg = parse_scenario(MINIMAL.replace("{duration: 0.5}", "{duration: 0.5, step: 1e-4}"))
        assert cfg.integrator.step == 1e-4

    @pytest.mark.parametrize("patch, message", [
        ({"mode": "closed_loop", "plant": {"kind": "hydro"}, "reference": "t2", "control": {},
          "observers": [{"name": "ii", "kind": "ii_hydro"}]}, "closed_loop is only defined for the pendulum"),
        ({"observers": []}, "at least one observer"),
        ({"observers": [{"name": "h", "kind": "hosm"}]}, "hydro plant"),
        ({"observers": [{"name": "a", "kind": "ii_pendulum"}, {"name": "a", "kind": "sm_pendulum"}]}, "unique"),
        ({"integrator": {"duration": 0.0}}, "duration"),
        ({"integrator": {"duration": 1.0, "sample_period": 1.5e-4}}, "sample_period"),
        ({"input": "triangle"}, "input"),
        ({"noise": {"kind": "gaussian", "variance": -1.0}}, "variance"),
        ({"seed": -3}, "seed"),
    ])
    def test_validation(self, patch, message):
        with pytest.raises(ConfigError, match=message):
            scenario(**patch)

    def test_presets_load(self):
        for name in preset_names():
            assert get_preset(name).name == name
        with pytest.raises(ConfigError, match="unknown preset"):
            get_preset("nope")


class TestMetrics:
    def test_rmse(self):
        a = np.linspace(-1, 1, 50)
        assert rmse(a, a) == 0.0
        assert rmse(a + 0.3, a) == pytest.approx(0.3)
        t = np.linspace(0, 4 * math.pi, 100_001)
        assert rmse(2.0 * np.sin(t), np.zeros_like(t)) == pytest.approx(2.0 / math.sqrt(2), abs=1e-3)
        with pytest.raises(MetricsError):
            rmse([1, 2], [1])

    def test_chattering(self):
        t = np.arange(1001) * 1e-3
        tr = Trace(1e-3, 0.0, {"c": np.full(1001, 4.0), "ramp": -3.0 * t,
                               "sq": 0.5 * np.sign(np.sin(2 * math.pi * t / 0.1 + 0.1))})
        assert chattering_index(tr, "c", 0.0, 1.0) == 0.0
        assert chattering_index(tr, "ramp", 0.0, 1.0) == pytest.approx(3.0)
        assert chattering_index(tr, "sq", 0.0, 1.0) == pytest.approx(4 * 0.5 / 0.1, rel=0.06)
        with pytest.raises(MetricsError):
            chattering_index(tr, "c", 0.5, 1.5)

    def test_steady_window_metrics(self):
        tr = Trace(0.1, 0.0, {"a.x2_tilde": np.r_[np.full(8, 5.0), np.full(3, 1.0)]})
        rep = compute_metrics(tr, steady_fraction=0.2)
        assert rep.window == (pytest.approx(0.8), pytest.approx(1.0))
        assert rep.rmse_final["a.x2_tilde"] == pytest.approx(1.0)
        assert rep.bias_final["a.x2_tilde"] == pytest.approx(1.0)


class TestRun:
    def test_equilibrium_all_zero(self):
        trace, report = run_scenario(parse_scenario(MINIMAL))
        # parameter channels carry the (constant) prior, everything else stays at rest
        moving = [n for n in trace.names if "theta" not in n and "gamma" not in n]
        assert "sm.x2_tilde" in moving and "ii.x2hat" in moving
        for name in moving:
            assert not np.any(trace[name]), name
        for name in trace.names:
            assert np.ptp(trace[name]) == 0.0, name
        assert not report.diverged

    def test_divergence_is_reported(self):
        cfg = scenario(observers=[{"name": "ii", "kind": "ii_pendulum"}], metrics={"divergence_bound": 0.05})
        trace, report = run_scenario(cfg)
        assert report.diverged
        assert 0 < report.divergence_time < 0.5
        assert len(trace) > 1 and trace.time[-1] < 0.5

    def test_clock_consistency(self):
        cfg = scenario()
        trace, _ = run_scenario(cfg)
        assert {len(trace[n]) for n in trace.names} == {len(trace.time)}
        np.testing.assert_allclose(trace.time, np.arange(501) * 1e-3, atol=1e-12)
        u = np.array([plant_input("sine25", t) for t in trace.time])
        np.testing.assert_array_equal(trace["u"], u)
        np.testing.assert_allclose(trace["ii.x2_tilde"], trace["ii.x2hat"] - trace["x2"], atol=1e-15)

    def test_closed_loop_reference_aligned(self):
        trace, _ = run_scenario(get_preset("tracking_ii").with_overrides(duration=0.2))
        xd = np.array([reference("t2", t).xd for t in trace.time])
        np.testing.assert_array_equal(trace["xd"], xd)
        np.testing.assert_allclose(trace["e1"], trace["x1"] - xd, atol=1e-15)

    def test_fine_recording(self):
        d = scenario().to_dict()
        d["integrator"]["record_period"] = 2e-4
        trace, _ = run_scenario(from_dict(d))
        assert len(trace) == 2501
        assert trace.dt == pytest.approx(2e-4)

    def test_output_selection(self):
        trace, _ = run_scenario(scenario(outputs=["ii.x2_tilde"]))
        assert trace.names == ["ii.x2_tilde"]
        with pytest.raises(ConfigError, match="nope"):
            run_scenario(scenario(outputs=["nope"]))

    def test_closed_loop_decay_matches_poles(self):
        # ideal control with exact parameters: e1 obeys e'' + kv e' + kp e = 0
        base = {"name": "cl", "plant": {"kind": "pendulum", "preset": "nominal"}, "mode": "closed_loop",
                "reference": "t2", "control": {"law": "ideal", "kp": 1600, "kv": 1100},
                "observers": [{"name": "ii", "kind": "ii_pendulum"}]}
        p1, p2 = closed_loop_poles(ControllerGains(1600.0, 1100.0))

        slow, _ = run_scenario(from_dict({**base, "integrator": {"duration": 3.0, "hold": False}}))
        m = (slow.time >= 0.5) & (slow.time <= 2.5)
        rate1 = np.polyfit(slow.time[m], np.log(np.abs(slow["e1"][m])), 1)[0]
        assert rate1 == pytest.approx(p1, rel=0.05)

        fast, _ = run_scenario(from_dict({**base, "integrator": {"duration": 0.01, "step": 1e-6,
                                                                 "sample_period": 1e-5, "hold": False}}))
        e2 = fast["x2"] - np.array([reference("t2", t).xd_dot for t in fast.time])
        w = e2 - rate1 * fast["e1"]
        m = fast.time <= 0.006
        rate2 = np.polyfit(fast.time[m], np.log(np.abs(w[m])), 1)[0]
        assert rate2 == pytest.approx(p2, rel=0.05)

    def test_noise_never_reduces_relay_chattering(self):
        quiet, _ = run_scenario(get_preset("hydro").with_overrides(duration=2.0))
        noisy, _ = run_scenario(get_preset("hydro_noise").with_overrides(duration=2.0))
        for ch in ("hosm.zeta2hat", "hosm.zeta3hat", "hosm.zeta2_tilde", "hosm.zeta3_tilde"):
            assert chattering_index(noisy, ch, 1.6, 2.0) >= chattering_index(quiet, ch, 1.6, 2.0), ch


class TestOutputs:
    def test_files_and_determinism(self, tmp_path):
        cfg = scenario()
        paths = []
        for sub in ("a", "b"):
            trace, report = run_scenario(cfg)
            paths.append(write_outputs(trace, report, tmp_path / sub, cfg))
        for key in ("trace", "metrics", "manifest"):
            assert paths[0][key].read_bytes() == paths[1][key].read_bytes()
        header, first = paths[0]["trace"].read_text().splitlines()[:2]
        assert header.split(",")[0] == "time"
        assert first.split(",")[0] == "0.00000000e+00"
        man = json.loads(paths[0]["manifest"].read_text())
        assert man["config"]["integrator"]["step"] == 1e-4
        assert man["version"]

    def test_empty_selection(self, tmp_path):
        trace, report = run_scenario(scenario(outputs=[]))
        write_outputs(trace, report, tmp_path, None)
        lines = (tmp_path / "trace.csv").read_text().splitlines()
        assert lines[0] == "time" and len(lines) == 502

    def test_single_channel(self, tmp_path):
        trace, report = run_scenario(scenario(outputs=["ii.x2_tilde"]))
        write_outputs(trace, report, tmp_path)
        lines = (tmp_path / "trace.csv").read_text().splitlines()
        assert lines[0] == "time,ii.x2_tilde"
        assert all(len(line.split(",")) == 2 for line in lines)
        back = read_trace(tmp_path / "trace.csv")
        np.testing.assert_allclose(back["ii.x2_tilde"], trace["ii.x2_tilde"], rtol=1e-8, atol=1e-300)

    def test_io_error_names_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        trace, report = run_scenario(scenario(outputs=[]))
        with pytest.raises(OSError, match="file"):
            write_outputs(trace, report, blocker / "out")


class TestCLI:
    def test_preset_list_and_show(self, capsys):
        assert main(["preset", "list"]) == 0
        assert "sine_open_loop" in capsys.readouterr().out.split()
        assert main(["preset", "show", "square_open_loop"]) == 0
        assert parse_scenario(capsys.readouterr().out) == get_preset("square_open_loop")

    def test_run_and_metrics(self, tmp_path, capsys):
        cfg_path = tmp_path / "s.yaml"
        cfg_path.write_text("preset: sine_open_loop\n")
        out = tmp_path / "out"
        assert main(["run", str(cfg_path), "--out", str(out), "--duration", "1.5"]) == 0
        assert (out / "trace.csv").exists()
        assert main(["metrics", str(out / "trace.csv"), "--out", str(tmp_path / "m.csv")]) == 0
        # recomputed from 9-digit CSV values, so agreement is to that precision
        live = (out / "metrics.csv").read_text().splitlines()
        again = (tmp_path / "m.csv").read_text().splitlines()
        assert len(live) == len(again)
        for a, b in zip(live[1:], again[1:]):
            ma, ca, va = a.split(",")
            mb, cb, vb = b.split(",")
            assert (ma, ca) == (mb, cb)
            try:
                assert float(vb) == pytest.approx(float(va), rel=1e-4, abs=1e-9, nan_ok=True), (ma, ca)
            except ValueError:
                assert va == vb

    def test_preset_run_seed_override(self, tmp_path):
        out = tmp_path / "o"
        assert main(["preset", "run", "hydro_noise", "--out", str(out), "--duration", "0.05",
                     "--seed", "5"]) == 0
        man = json.loads((out / "manifest.json").read_text())
        assert man["config"]["noise"]["seed"] == 5

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("plant: {kind: pendulum}\nobservers: []\nintegrator: {duration: 1}\ninput: zero\n")
        assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == 2
        assert "at least one observer" in capsys.readouterr().err
