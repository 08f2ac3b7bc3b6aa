"""Command line entry point: ``absorbwave [--config FILE] [overrides]``."""

from __future__ import annotations

import argparse
import sys

from absorbwave.config import ConfigError, RunConfig, load_config
from absorbwave.runner import EXIT_ERROR, EXIT_OK, EXIT_REGIME, StageError, run_scenario, run_sweep, sweep_values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="absorbwave",
        description="Husimi distribution of a Gaussian packet behind a time-dependent absorbing barrier.",
    )
    p.add_argument("--config", metavar="PATH", help="key = value configuration file")
    p.add_argument("--scenario", choices=["free", "shift", "split", "squeeze", "exponential", "custom"])
    p.add_argument("--gamma", type=float, metavar="1/s", help="aperture rate")
    p.add_argument("--sweep", metavar="gamma=a:b:n", help="run n values of gamma from a to b")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--grid", metavar="nx,nv", help="grid points in x_tilde and v_tilde")
    state = p.add_mutually_exclusive_group()
    state.add_argument("--pure", dest="state", action="store_const", const="pure")
    state.add_argument("--thermal", dest="state", action="store_const", const="thermal")
    p.add_argument("--rel-tol", type=float, metavar="x", help="quadrature relative tolerance")
    p.add_argument("--workers", type=int, metavar="N", help="threads for grid evaluation")
    p.add_argument("--figures", action="store_true", help="also render PNG figures")
    return p


def _grid(text: str):
    try:
        nx, nv = (int(s) for s in text.split(","))
    except ValueError:
        raise ConfigError("grid", f"--grid expects nx,nv, got {text!r}") from None
    return nx, nv


def config_from_args(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {}
    if args.scenario is not None:
        over["scenario__name"] = args.scenario
    if args.gamma is not None:
        over["scenario__gamma_per_s"] = args.gamma
    if args.state is not None:
        over["scenario__state"] = args.state
    if args.out is not None:
        over["outputs__directory"] = args.out
    if args.grid is not None:
        over["grid__nx"], over["grid__nv"] = _grid(args.grid)
    if args.rel_tol is not None:
        over["quadrature__rel_tol"] = args.rel_tol
    if args.workers is not None:
        over["grid__workers"] = args.workers
    if args.figures and "png" not in cfg.outputs.formats:
        over["outputs__formats"] = cfg.outputs.formats + ("png",)
    return cfg.with_values(**over) if over else cfg


def _line(summary) -> str:
    o = summary.observables
    return (f"peak=({o.peak_x:.6e} m, {o.peak_v:.6e} m/s) mean=({o.mean_x:.6e}, {o.mean_v:.6e}) "
            f"uncertainty={o.uncertainty:.4f} hbar transmission={o.transmission:.6g} modes={o.n_modes}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigError, OSError) as exc:
        print(f"error: config stage failed: {exc}", file=sys.stderr)
        return EXIT_ERROR

    if args.sweep:
        try:
            gammas = sweep_values(args.sweep)
        except ValueError as exc:
            print(f"error: config stage failed: {exc}", file=sys.stderr)
            return EXIT_ERROR

        def report(g, summary, err):
            if summary is None:
                print(f"gamma={g:g}: error: {err}", file=sys.stderr)
            else:
                print(f"gamma={g:g}: {_line(summary)}")
                for w in summary.warnings:
                    print(f"  warning: {w}", file=sys.stderr)

        try:
            rows, errors = run_sweep(cfg, gammas, on_result=report)
        except (ConfigError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_ERROR
        if errors:
            return EXIT_ERROR
        return EXIT_REGIME if any(r["exit_code"] == EXIT_REGIME for r in rows) else EXIT_OK

    try:
        summary = run_scenario(cfg)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(_line(summary))
    print(f"wrote {cfg.outputs.directory} ({summary.wall_clock_s:.1f} s)")
    for w in summary.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return summary.exit_code


if __name__ == "__main__":
    sys.exit(main())
