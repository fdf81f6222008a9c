"""Command-line driver: ``chaoscope run | preset | list-presets | plot``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config
from .errors import ChaoscopeError
from .runner import RunManifest, emit_plot_data, run

PRESET_DIR = Path(__file__).parent / "presets"


def preset_names() -> list[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.ini"))


def load_preset(name: str) -> ExperimentConfig:
    path = PRESET_DIR / f"{name}.ini"
    if not path.is_file():
        raise ChaoscopeError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return load_config(path)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", metavar="DIR", help="output root (default: $CHAOSCOPE_OUT or ./chaoscope-out)")
    p.add_argument("--jobs", type=int, default=1, metavar="N", help="parallel sweep entries")
    p.add_argument("--seed-grid", metavar="SPEC", help="override the section seed grid, e.g. 8x8 or 6x10@0.9")
    p.add_argument("--plot", action="store_true", help="also write gnuplot scripts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chaoscope", description="Inflaton and Yang-Mills-Higgs chaos experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config file")
    p_run.add_argument("config", type=Path)
    _add_run_flags(p_run)
    p_pre = sub.add_parser("preset", help="run a named preset")
    p_pre.add_argument("name")
    _add_run_flags(p_pre)
    sub.add_parser("list-presets", help="list the shipped presets")
    p_plot = sub.add_parser("plot", help="write gnuplot scripts for a finished run")
    p_plot.add_argument("manifest", type=Path, help="manifest.json or its run directory")
    return parser


def _execute(cfg: ExperimentConfig, args) -> None:
    if args.seed_grid:
        cfg = cfg.with_seed_grid(args.seed_grid)
    if args.jobs < 1:
        raise ChaoscopeError("--jobs must be >= 1")
    manifest = run(cfg, args.out, jobs=args.jobs)
    print(f"{cfg.name}: {len(manifest.outputs)} file(s) in {manifest.directory} ({manifest.wall_time:.2f} s)")
    for out in manifest.outputs:
        print(f"  {out.path}  {out.sha256[:12]}")
    if args.plot:
        for script in emit_plot_data(manifest):
            print(f"  {script.name}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-presets":
            for name in preset_names():
                cfg = load_preset(name)
                print(f"{name}\t{cfg.kind}")
        elif args.command == "run":
            _execute(load_config(args.config), args)
        elif args.command == "preset":
            _execute(load_preset(args.name), args)
        elif args.command == "plot":
            for script in emit_plot_data(RunManifest.load(args.manifest)):
                print(script)
    except (ChaoscopeError, ValueError, OSError) as exc:
        print(f"chaoscope: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
