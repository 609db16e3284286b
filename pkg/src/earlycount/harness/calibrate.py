"""Fit and freeze the regression constants used by the acceptance tests.

Constants are fitted on a calibration seed range and checked by the tests on
a disjoint seed range with 25% slack.
"""
from __future__ import annotations

import json
import math
from datetime import date
from pathlib import Path

import numpy as np

from ..adversary import STRATEGY_NAMES, Strategy
from ..filtering import FilterParams
from .checkers import check_crusader
from .config import config_from_dict
from .filterlab import jumping_clock, run_filter
from .metrics import measure_bits, slope
from .simulate import run_simulation, stabilization
from .sweep import grid, run_sweep, worst_by

FROZEN_PATH = Path(__file__).with_name("frozen_constants.json")
SLACK = 1.25
ROTATION = tuple(s for s in STRATEGY_NAMES if s != "silent")
CAL_SEEDS = range(1000, 1050)


def load_frozen(path: str | Path = FROZEN_PATH) -> dict:
    with open(path) as fh:
        return json.load(fh)


def fit_line(worst: dict[int, int]) -> tuple[float, float]:
    """(alpha, beta) with alpha*(f+1)+beta >= worst[f] for all f, tight at f=0."""
    s0 = worst[0]
    alpha = max([(s - s0) / f for f, s in worst.items() if f > 0] + [0.0])
    return alpha, s0 - alpha


def stabilization_sweep(seeds=CAL_SEEDS, ns=(4, 8, 16), results=None, progress=None) -> list[dict]:
    cells = grid(ns, None, ROTATION, seeds, rotate=True)
    return run_sweep(cells, results, progress=progress)


def fit_stabilization(rows: list[dict]) -> dict:
    per_nf = worst_by(rows, "n", "f")
    if any(v is None for v in per_nf.values()):
        raise RuntimeError("calibration run did not stabilize")
    per_f: dict[int, int] = {}
    for (n, f), s in per_nf.items():
        per_f[f] = max(per_f.get(f, 0), s)
    alpha, beta = fit_line(per_f)
    return {"alpha": alpha, "beta": beta, "worst_S": {str(f): s for f, s in sorted(per_f.items())},
            "worst_S_nf": {f"{n},{f}": s for (n, f), s in sorted(per_nf.items())}}


def bits_point(n: int, C: int, f: int, seed: int, stack: str = "efficient",
               strategy: str = "random", H: int = 1500) -> float:
    """Amortized bits over the n rounds following stabilization."""
    cfg = config_from_dict({"n": n, "C": C, "seed": seed, "H": H, "stack": stack,
                            "faults": {"f": f, "strategy": strategy}, "checker": {"min_window": n}})
    trace = run_simulation(cfg)
    rep = stabilization(trace)
    if rep.stabilization_round is None:
        raise RuntimeError(f"n={n} f={f} seed={seed} did not stabilize")
    s = rep.stabilization_round
    return measure_bits(trace, (s, s + n - 1)).amortized


def bits_profile(n: int = 16, C: int = 1024, fs=range(5), seeds=range(3), stack: str = "efficient") -> dict[int, float]:
    return {f: float(np.mean([bits_point(n, C, f, s, stack) for s in seeds])) for f in fs}


def fit_bits(profile: dict[int, float], n: int, C: int) -> dict:
    fs = sorted(profile)
    return {"c0": profile[0] / (n * math.log2(n) ** 2),
            "c1": slope(fs, [profile[f] for f in fs]) / (n * math.log2(C)),
            "bits_by_f": {str(f): profile[f] for f in fs}}


def crusader_setup(efficient: bool = True, H: int = 5000, seed: int = 1, delta: int = 1,
                   period: int | None = None):
    """f >= |T|/2: 16 nodes, T = 0..7, faulty 0..3 jump their clocks and
    correct node 4's input follows them, so the T-majority jumps."""
    C, X = 1024, 48
    p = FilterParams(16, C, X, tuple(range(8)))
    period = period or X + 1
    jump = jumping_clock(C, 5, period, delta)
    clock = lambda r, v: jump(r, v) if v == 4 else (5 + r) % C
    run = run_filter(p, efficient, H, faulty=range(4), strategy=Strategy("clockjump", seed, delta),
                     seed=seed, clock=clock, jump_period=period)
    return run, check_crusader(run.correct_outputs(), C, X)


def fit_crusader(seeds=range(1, 4), periods=(None, 98)) -> dict:
    """Smallest c such that no violation occurs after round c*n.  The default
    period jumps once per cooldown, which keeps the efficient filter at bottom;
    the second period lets its outputs move between jumps."""
    last = 0
    for s in seeds:
        for period in periods:
            run, rep = crusader_setup(seed=s, period=period)
            if rep.violations:
                last = max(last, rep.violations[-1].round)
    n = 16
    return {"c": max(1, math.ceil(last / n)), "last_violation": last,
            "periods": [p or 49 for p in periods]}


def calibrate(out: str | Path = FROZEN_PATH, results: str | Path | None = None, progress=None) -> dict:
    stab = fit_stabilization(stabilization_sweep(results=results, progress=progress))
    bits = fit_bits(bits_profile(seeds=range(1000, 1003)), 16, 1024)
    frozen = {"calibrated": date.today().isoformat(), "slack": SLACK,
              "calibration_seeds": [CAL_SEEDS.start, CAL_SEEDS.stop - 1],
              "stabilization": stab, "bits": bits, "crusader": fit_crusader()}
    Path(out).write_text(json.dumps(frozen, indent=2) + "\n")
    return frozen
