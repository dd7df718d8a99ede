"""Command line entry point: ``obslab run | preset | metrics``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .. import __version__
from .config import ConfigError, dump_scenario, from_dict, load_scenario
from .io import read_trace, write_metrics, write_outputs
from .metrics import compute_metrics
from .presets import get_preset, preset_names
from .simulate import run_scenario


def _add_overrides(p: argparse.ArgumentParser):
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--step", type=float, help="override integrator.step (s)")
    p.add_argument("--duration", type=float, help="override integrator.duration (s)")
    p.add_argument("--seed", type=int, help="override scenario and noise seed")


def _run(cfg, args) -> int:
    cfg = cfg.with_overrides(step=args.step, duration=args.duration, seed=args.seed)
    trace, report = run_scenario(cfg)
    paths = write_outputs(trace, report, args.out, cfg)
    status = f"DIVERGED at t={report.divergence_time:.6g} s" if report.diverged else "ok"
    print(f"{cfg.name}: {status}; {len(trace)} samples -> {paths['trace'].parent}")
    for name in report.rmse:
        print(f"  {name:28s} rmse_final={report.rmse_final[name]:.4g}  chattering={report.chattering[name]:.4g}")
    return 0


def _metrics(args) -> int:
    trace = read_trace(args.trace)
    excitation = []
    kwargs = {}
    fraction = args.steady_fraction
    manifest_path = Path(args.trace).with_name("manifest.json")
    if manifest_path.exists():
        raw = json.loads(manifest_path.read_text(encoding="utf-8")).get("config")
        if raw:
            cfg = from_dict(raw)
            vartheta = cfg.plant.build().vartheta
            excitation = [(f"{o.name}.x2hat", vartheta) for o in cfg.observers if o.kind != "hosm"]
            m = cfg.metrics
            kwargs = {"excitation_window": m.excitation_window, "excitation_stride": m.excitation_stride,
                      "excitation_floor": m.excitation_floor}
            if fraction is None:
                fraction = m.steady_fraction
    report = compute_metrics(trace, fraction or 0.2, excitation, **kwargs)
    if args.out:
        write_metrics(report, args.out)
    else:
        for metric, channel, value in report.rows():
            print(f"{metric},{channel},{value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obslab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"obslab {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("config", type=Path)
    _add_overrides(p_run)

    p_preset = sub.add_parser("preset", help="list, show or run canned scenarios")
    psub = p_preset.add_subparsers(dest="preset_command", required=True)
    psub.add_parser("list", help="list preset names")
    p_show = psub.add_parser("show", help="print a preset as a scenario file")
    p_show.add_argument("name")
    p_prun = psub.add_parser("run", help="run a preset")
    p_prun.add_argument("name")
    _add_overrides(p_prun)

    p_met = sub.add_parser("metrics", help="recompute metrics from a stored trace.csv")
    p_met.add_argument("trace", type=Path)
    p_met.add_argument("--out", type=Path, help="write metrics CSV here instead of stdout")
    p_met.add_argument("--steady-fraction", type=float, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            return _run(load_scenario(args.config), args)
        if args.command == "preset":
            if args.preset_command == "list":
                for name in preset_names():
                    print(name)
                return 0
            if args.preset_command == "show":
                sys.stdout.write(dump_scenario(get_preset(args.name)))
                return 0
            return _run(get_preset(args.name), args)
        return _metrics(args)
    except ConfigError as exc:
        print(f"obslab: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"obslab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
