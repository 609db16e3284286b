"""Command line interface.

Exit codes: 0 success, 1 a checked property failed, 2 bad configuration or usage.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..adversary import STRATEGY_NAMES
from .checkers import check_counting, default_window
from .config import EXAMPLE_CONFIG, ConfigError, load_config


def _cmd_run(args) -> int:
    from .simulate import run_simulation, stabilization, summarize, write_outputs
    cfg = load_config(args.config)
    if args.engine:
        cfg.engine = args.engine
    trace = run_simulation(cfg)
    rep = stabilization(trace)
    s = summarize(trace, rep)
    written = write_outputs(cfg, trace, args.out) if (args.out or cfg.output.dir) else []
    stab = "none" if s.stabilization_round is None else s.stabilization_round
    print(f"n={s.n} f={s.f} strategy={s.strategy} seed={s.seed} stack={s.stack} "
          f"engine={trace.meta['engine']} H={s.horizon} S={stab} ({s.seconds:.2f}s)")
    for p in written:
        print(f"wrote {p}")
    return 0 if rep.stabilized else 1


def _cmd_sweep(args) -> int:
    from .sweep import grid, run_sweep, worst_by
    base = {}
    if args.config:
        base = load_config(args.config).to_dict()
    if args.H:
        base["H"] = args.H
    cells = grid(args.n, args.f, args.strategies, range(args.seed0, args.seed0 + args.seeds),
                 args.stack, rotate=args.rotate)

    def progress(row):
        if not args.quiet:
            print(f"{row['key']}: S={row['stabilization_round']} ({row.get('seconds', 0):.2f}s)", flush=True)

    rows = run_sweep(cells, args.results, base or None, progress=progress, jobs=args.jobs)
    for row in rows:
        if "error" in row:
            print(f"{row['key']}: error {row['error']}", file=sys.stderr)
    worst = worst_by(rows, "stack", "n", "f")
    print("stack n f worst_S")
    for (stack, n, f), s in sorted(worst.items()):
        print(f"{stack} {n} {f} {'none' if s is None else s}")
    return 0 if all(v is not None for v in worst.values()) else 1


def _cmd_check(args) -> int:
    from .trace import ExecutionTrace
    try:
        trace = ExecutionTrace.load(args.trace)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    cfg = trace.meta["config"]
    window = args.window or cfg["checker"]["min_window"] or default_window(
        trace.meta["tree"]["X_max"], cfg["faults"]["f"])
    rep = check_counting(trace.correct_outputs(), cfg["C"], window)
    stab = "none" if rep.stabilization_round is None else rep.stabilization_round
    print(f"rounds={trace.H} last_violation={rep.last_violation} window={window} S={stab}")
    for v in rep.violations[-args.show:] if args.show else []:
        print(f"  round {v.round}: {v.kind} nodes={v.nodes} values={v.values}")
    return 0 if rep.stabilized else 1


def _cmd_calibrate(args) -> int:
    from .calibrate import FROZEN_PATH, calibrate

    def progress(row):
        if args.verbose:
            print(f"{row['key']}: S={row['stabilization_round']}", flush=True)

    frozen = calibrate(args.out or FROZEN_PATH, args.results, progress)
    print(json.dumps(frozen, indent=2))
    return 0


def _cmd_expander(args) -> int:
    from fractions import Fraction
    from ..primitives.expander import (build_expander, circulant_offsets, circulant_ports,
                                       exact_edge_expansion, spectral_certificate)
    if args.n < 2:
        print("error: n must be at least 2", file=sys.stderr)
        return 2
    g = build_expander(args.n)
    print(f"n={g.n} offsets={g.offsets} degree={g.degree} method={g.method} epsilon={g.epsilon:.6f}")
    if g.lambda2 is not None:
        print(f"lambda2={g.lambda2:.9f} residual={g.residual:.3e} iterations={g.iterations}")
    ok = g.epsilon > 0
    if args.compare and args.n <= 24:
        ports = circulant_ports(args.n, circulant_offsets(args.n))
        h = exact_edge_expansion(ports)
        eps = spectral_certificate(ports)[0]
        print(f"exact h={h} ({float(h):.6f}) spectral epsilon={eps:.6f}")
        ok = ok and Fraction(eps) <= h
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="earlycount", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="simulate one configuration")
    p.add_argument("config", help="TOML experiment file")
    p.add_argument("--out", help="directory for trace and CSV (overrides [output].dir)")
    p.add_argument("--engine", choices=("auto", "compiled", "python"))
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="grid of runs, resumable")
    p.add_argument("--n", type=int, nargs="+", default=[4, 8])
    p.add_argument("--f", type=int, nargs="+", help="fault counts (default 0..t)")
    p.add_argument("--strategies", nargs="+", choices=STRATEGY_NAMES, default=["random"])
    p.add_argument("--rotate", action="store_true", help="one strategy per seed, rotating")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed0", type=int, default=0)
    p.add_argument("--stack", nargs="+", choices=("efficient", "naive"), default=["efficient"])
    p.add_argument("--H", type=int)
    p.add_argument("--config", help="base TOML file for the remaining settings")
    p.add_argument("--results", help="JSON-lines file; finished cells are skipped on rerun")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("check", help="re-check a saved trace")
    p.add_argument("trace")
    p.add_argument("--window", type=int, help="required clean suffix")
    p.add_argument("--show", type=int, default=5, help="violations to print")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("calibrate", help="refit the frozen regression constants")
    p.add_argument("--out", help="destination (default: the packaged frozen_constants.json)")
    p.add_argument("--results", help="resumable sweep cache")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("expander", help="build and certify the degree-8 expander")
    p.add_argument("n", type=int)
    p.add_argument("--compare", action="store_true", help="also compare against exact h(G) (n <= 24)")
    p.set_defaults(func=_cmd_expander)

    p = sub.add_parser("example-config", help="print an annotated configuration file")
    p.set_defaults(func=lambda args: print(EXAMPLE_CONFIG, end="") or 0)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
