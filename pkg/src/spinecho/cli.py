"""Command-line interface.

Subcommands: run, spectrum, sweep, beats, analyze, validate.  Exit status is
0 on success, 1 on configuration or numerical errors (the message names the
offending key or file), and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import SpinEchoError
from .scenarios import (ScenarioConfig, SweepConfig, apply_overrides, config_from_dict,
                        get_scenario, load_config)
from .storage import read_csv
from ._version import __version__


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--config", default=None, help="YAML config file overriding the builtin")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY.PATH=VALUE", help="override a single config value")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinecho",
                                     description="Driven spin-ensemble cavity simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a trajectory scenario")
    p_run.add_argument("scenario", help="builtin scenario name")
    p_run.add_argument("--stage-validation", action="store_true",
                       help="also time-step the preparation stages against closed forms")
    _add_common(p_run)

    p_spec = sub.add_parser("spectrum", help="reflection spectrum of a scenario")
    p_spec.add_argument("scenario")
    p_spec.add_argument("--method", choices=("linearized", "time-domain"),
                        default="linearized")
    _add_common(p_spec)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep")
    p_sweep.add_argument("sweep_config", help="builtin sweep name or YAML file path")
    p_sweep.add_argument("--workers", type=int, default=None)
    _add_common(p_sweep)

    p_beats = sub.add_parser("beats", help="free evolution of a discrete comb")
    p_beats.add_argument("--classes", type=int, required=True)
    p_beats.add_argument("--tau", type=float, required=True, help="seconds; spacing is 1/tau")
    _add_common(p_beats)

    p_an = sub.add_parser("analyze", help="recompute reports from a saved trajectory")
    p_an.add_argument("trajectory_file", help="a power_trace.csv written by 'run'")
    p_an.add_argument("--out", default=None, help="output directory (default: alongside input)")

    sub.add_parser("validate", help="run the analytic-oracle check suite")
    return parser


def _resolve_scenario(args, expect_sweep: bool = False):
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    else:
        name = args.sweep_config if expect_sweep else args.scenario
        if expect_sweep and Path(name).suffix in (".yml", ".yaml"):
            cfg = load_config(name)
        else:
            cfg = get_scenario(name)
    if args.overrides:
        cfg = apply_overrides(cfg, args.overrides)
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            from .runner import run_scenario
            cfg = _resolve_scenario(args)
            if not isinstance(cfg, ScenarioConfig):
                raise SpinEchoError(f"{args.scenario} is a sweep; use the sweep subcommand")
            result = run_scenario(cfg, args.out, stage_validation=args.stage_validation)
            for name, path in sorted(result["paths"].items()):
                print(f"wrote {path}")
        elif args.command == "spectrum":
            from .runner import run_spectrum_scenario
            cfg = _resolve_scenario(args)
            if isinstance(cfg, SweepConfig):
                raise SpinEchoError(f"{args.scenario} is a sweep; use the sweep subcommand")
            result = run_spectrum_scenario(cfg, args.out, method=args.method)
            rep = result["report"]
            print(f"g_eff = {rep['g_eff_hz']:.4g} Hz ({rep['regime']})")
            for name, path in sorted(result["paths"].items()):
                print(f"wrote {path}")
        elif args.command == "sweep":
            from .runner import run_sweep
            cfg = _resolve_scenario(args, expect_sweep=True)
            if not isinstance(cfg, SweepConfig):
                raise SpinEchoError(f"{args.sweep_config} is not a sweep configuration")
            result = run_sweep(cfg, args.out, workers=args.workers)
            print(f"swept {len(result['rows'])} points along {cfg.axis}")
            for name, path in sorted(result["paths"].items()):
                print(f"wrote {path}")
        elif args.command == "beats":
            from .runner import run_scenario
            from .scenarios import get_scenario
            base = get_scenario("fig4-beats-3")
            cfg = apply_overrides(base, [f"ensemble.n_classes={args.classes}",
                                         f"ensemble.spacing_hz={1.0 / args.tau}",
                                         f"free.t_end_s={5.0 * args.tau}"]
                                  + args.overrides)
            cfg.name = f"beats-{args.classes}-tau{args.tau:g}"
            result = run_scenario(cfg, args.out)
            beats = result["report"]["beats"]
            print(f"strong peaks at {[f'{t*1e6:.2f}us' for t in beats['strong_times_s']]}")
            for name, path in sorted(result["paths"].items()):
                print(f"wrote {path}")
        elif args.command == "analyze":
            _analyze(args)
        elif args.command == "validate":
            from .validation import run_all
            if not run_all(verbose=True):
                return 1
    except SpinEchoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _analyze(args) -> None:
    from .analysis import detect_echoes
    from .observables import PowerTrace, noise_floor_dbm
    from .scenarios import materialize
    from .storage import write_json
    from .errors import ConfigError

    meta, cols = read_csv(args.trajectory_file)
    if "config" not in meta:
        raise ConfigError(f"{args.trajectory_file} carries no embedded config")
    cfg = config_from_dict(meta["config"])
    mat = materialize(cfg)
    trace = PowerTrace(times=cols["t_s"], photon_number=cols["photon_n"],
                       power_dbm=cols["power_dbm"],
                       noise_floor_dbm=noise_floor_dbm(mat.cavity))
    outdir = Path(args.out) if args.out else Path(args.trajectory_file).parent
    if cfg.kind == "hahn":
        echoes = detect_echoes(trace, mat.sequence)
        payload = {"echoes": {
            "peak_times_s": echoes.peak_times, "peak_powers_dbm": echoes.peak_powers_dbm,
            "visible": echoes.visible, "n_visible": echoes.n_visible,
            "period_estimate_s": echoes.period_estimate,
            "noise_floor_dbm": echoes.noise_floor_dbm}}
        path = write_json(outdir / "echo_report.json", payload,
                          {"scenario": cfg.name, "config": meta["config"],
                           "recomputed_from": str(args.trajectory_file)})
        print(f"{echoes.n_visible} visible echoes; wrote {path}")
    else:
        from .analysis import detect_beats
        beats = detect_beats(trace, 1.0 / cfg.ensemble.spacing_hz)
        payload = {"beats": {"strong_times_s": beats.strong_times,
                             "weak_times_s": beats.weak_times,
                             "period_s": beats.period}}
        path = write_json(outdir / "beat_report.json", payload,
                          {"scenario": cfg.name, "config": meta["config"],
                           "recomputed_from": str(args.trajectory_file)})
        print(f"{len(beats.strong_times)} strong peaks; wrote {path}")


if __name__ == "__main__":
    sys.exit(main())
