"""Command line front end.

Loads a JSON config (or scenario defaults), applies dotted overrides,
runs the scenario and writes CSV/SVG/JSON artifacts.

Exit codes: 0 clean run, 1 solver failure mid-run, 2 run with no usable
rows or unwritable output, 3 configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .scenarios import (
    SCENARIOS,
    ConfigError,
    apply_overrides,
    config_from_dict,
    default_config,
    run_scenario,
)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lubricontact",
        description="Lubricated-contact benchmarks: squeeze films, sliding "
        "friction and Stribeck sweeps on 2D plane-strain bodies.",
    )
    ap.add_argument(
        "--config",
        type=Path,
        default=None,
        help="JSON config file; omitted keys fall back to scenario defaults",
    )
    ap.add_argument(
        "--scenario",
        choices=sorted(SCENARIOS),
        default=None,
        help="scenario name; required unless the config file names one",
    )
    ap.add_argument(
        "--out",
        type=Path,
        default=Path("out"),
        help="output directory for artifacts (default: ./out)",
    )
    ap.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="config override, e.g. solver.dt=0.025; repeatable",
    )
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            try:
                raw = json.loads(args.config.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read {args.config}: {exc}") from exc
            if not isinstance(raw, dict):
                raise ConfigError("config file must hold a JSON object")
            if args.scenario is not None:
                raw["scenario"] = args.scenario
        elif args.scenario is not None:
            raw = default_config(args.scenario).to_dict()
        else:
            raise ConfigError("provide --scenario or --config")
        raw = apply_overrides(raw, args.override)
        cfg = config_from_dict(raw)
        art = run_scenario(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    for failure in art.failures:
        print(f"failure: {failure}", file=sys.stderr)
    try:
        written = art.write(args.out)
    except OSError as exc:
        print(f"cannot write artifacts: {exc}", file=sys.stderr)
        return 2
    print(f"{art.scenario}: {art.n_rows} rows -> {args.out}")
    for name in written:
        print(f"  {name}")
    return art.exit_code()


if __name__ == "__main__":
    raise SystemExit(main())
