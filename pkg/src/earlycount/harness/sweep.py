"""Parameter sweeps with per-cell resumption.

Each finished run is appended as one JSON line; rerunning a sweep with the
same results file skips cells that are already present.
"""
from __future__ import annotations

import copy
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable

from ..adversary import max_faults
from .config import ExperimentConfig, config_from_dict
from .metrics import measure_bits
from .simulate import run_simulation, stabilization


@dataclass
class Cell:
    n: int
    f: int
    strategy: str
    seed: int
    stack: str = "efficient"

    @property
    def key(self) -> str:
        return f"{self.stack}/n{self.n}/f{self.f}/{self.strategy}/s{self.seed}"


def grid(ns: Iterable[int], fs: Iterable[int] | None = None, strategies: Iterable[str] = ("random",),
         seeds: Iterable[int] = range(10), stacks: Iterable[str] = ("efficient",),
         rotate: bool = False) -> list[Cell]:
    """Cells of the cross product; ``fs=None`` means 0..t for each n.

    With ``rotate`` the strategy of a cell is strategies[seed % len] instead of
    one cell per strategy.
    """
    strategies = tuple(strategies)
    seeds = tuple(seeds)
    out = []
    for stack, n in itertools.product(stacks, ns):
        f_list = range(max_faults(n) + 1) if fs is None else [f for f in fs if f <= max_faults(n)]
        for f in f_list:
            if rotate:
                out.extend(Cell(n, f, strategies[s % len(strategies)], s, stack) for s in seeds)
            else:
                out.extend(Cell(n, f, st, s, stack) for st in strategies for s in seeds)
    return out


def cell_config(cell: Cell, base: dict | None = None) -> ExperimentConfig:
    data = copy.deepcopy(base or {})
    data.update(n=cell.n, seed=cell.seed, stack=cell.stack)
    data.setdefault("faults", {}).update(f=cell.f, strategy=cell.strategy)
    return config_from_dict(data)


def run_cell(cell: Cell, base: dict | None = None, bits_window: int | None = None) -> dict:
    try:
        return _run_cell(cell, base, bits_window)
    except Exception as exc:      # recorded per cell; the sweep goes on
        row = asdict(cell)
        row.update(key=cell.key, stabilization_round=None, error=f"{type(exc).__name__}: {exc}")
        return row


def _run_cell(cell: Cell, base, bits_window) -> dict:
    cfg = cell_config(cell, base)
    trace = run_simulation(cfg)
    rep = stabilization(trace)
    row = asdict(cell)
    row.update(key=cell.key, H=trace.H, stabilization_round=rep.stabilization_round,
               last_violation=rep.last_violation, stabilized=rep.stabilized,
               seconds=trace.meta["seconds"])
    if bits_window:
        row["bits"] = measure_bits(trace, bits_window).amortized
    return row


def load_results(path: str | Path) -> dict[str, dict]:
    path = Path(path)
    done = {}
    if path.exists():
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    row = json.loads(line)
                    done[row["key"]] = row
    return done


def run_sweep(cells: list[Cell], results: str | Path | None = None, base: dict | None = None,
              bits_window: int | None = None, progress: Callable[[dict], None] | None = None,
              jobs: int = 1) -> list[dict]:
    """Rows in cell order.  ``jobs`` > 1 runs cells in worker processes; rows
    are still written and returned in cell order."""
    done = load_results(results) if results else {}
    todo = [c for c in cells if c.key not in done]
    fh = open(results, "a") if results else None

    def finish(row):
        done[row["key"]] = row
        if fh and "error" not in row:
            fh.write(json.dumps(row) + "\n")
            fh.flush()
        if progress:
            progress(row)

    try:
        if jobs > 1 and len(todo) > 1:
            with ProcessPoolExecutor(jobs) as pool:
                for row in pool.map(run_cell, todo, itertools.repeat(base), itertools.repeat(bits_window)):
                    finish(row)
        else:
            for cell in todo:
                finish(run_cell(cell, base, bits_window))
    finally:
        if fh:
            fh.close()
    return [done[c.key] for c in cells]


def worst_by(rows: list[dict], *keys: str) -> dict:
    """Worst (largest) stabilization round per group; None if any run did not stabilize."""
    out: dict = {}
    for row in rows:
        k = tuple(row[x] for x in keys)
        s = row["stabilization_round"]
        if k in out and out[k] is None:
            continue
        out[k] = None if s is None else max(out.get(k, 0), s)
    return out
