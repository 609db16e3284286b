"""Run one configured experiment end to end."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from .. import __version__
from ..adversary import inject_initial_states, max_faults
from ..counting import build_combined
from ..engine import get_engine
from .checkers import StabilizationReport, check_counting, default_window
from .config import ExperimentConfig
from .metrics import measure_bits
from .trace import ExecutionTrace


def tree_X(tree) -> int:
    """Largest filter cooldown in the tree (0 when there is none)."""
    xs = [s.config.X for s in tree.instances if s.config is not None]
    return max(xs, default=0)


def build_tree(cfg: ExperimentConfig):
    return build_combined(cfg.n, cfg.C, cfg.R, cfg.eps, cfg.stack)


def run_simulation(cfg: ExperimentConfig, tree=None) -> ExecutionTrace:
    tree = tree or build_tree(cfg)
    faulty = cfg.faulty()
    snap = inject_initial_states(tree, cfg.init.mode, cfg.init_seed(), cfg.init.spec)
    engine_cls = get_engine(cfg.engine)
    t0 = time.perf_counter()
    engine = engine_cls(tree, faulty, cfg.strategy(), snap, cfg.seed)
    arrays = engine.run(cfg.horizon)
    meta = {"config": cfg.to_dict(), "engine": engine_cls.name, "version": __version__,
            "tree": dict(tree.meta, X_max=tree_X(tree), t=max_faults(cfg.n),
                         instances=[{"path": list(s.path), "kind": s.kind, "lo": s.lo, "m": s.m,
                                     "C": s.C} for s in tree.instances]),
            "seconds": round(time.perf_counter() - t0, 3)}
    return ExecutionTrace(arrays, tuple(faulty), meta)


def stabilization(trace: ExecutionTrace, min_window: int | None = None) -> StabilizationReport:
    cfg = trace.meta["config"]
    if min_window is None:
        min_window = cfg["checker"]["min_window"]
    if min_window is None:
        min_window = default_window(trace.meta["tree"]["X_max"], cfg["faults"]["f"])
    return check_counting(trace.correct_outputs(), cfg["C"], min_window)


@dataclass
class RunSummary:
    n: int
    f: int
    strategy: str
    seed: int
    stack: str
    stabilization_round: int | None
    last_violation: int
    horizon: int
    seconds: float

    @property
    def stabilized(self) -> bool:
        return self.stabilization_round is not None


def summarize(trace: ExecutionTrace, report: StabilizationReport) -> RunSummary:
    cfg = trace.meta["config"]
    return RunSummary(cfg["n"], cfg["faults"]["f"], cfg["faults"]["strategy"], cfg["seed"],
                      cfg["stack"], report.stabilization_round, report.last_violation,
                      trace.H, trace.meta["seconds"])


def write_outputs(cfg: ExperimentConfig, trace: ExecutionTrace, outdir: str | Path | None = None) -> list[Path]:
    outdir = Path(outdir or cfg.output.dir or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    stem = f"n{cfg.n}_f{cfg.faults.f}_{cfg.faults.strategy}_s{cfg.seed}"
    written = []
    if cfg.output.trace:
        written.append(trace.save(outdir / f"{stem}.npz"))
    if cfg.output.csv:
        p = outdir / f"{stem}.csv"
        trace.write_csv(p, per_node=cfg.output.per_node_csv)
        written.append(p)
    rep = stabilization(trace)
    bits = measure_bits(trace, min(cfg.n, trace.H))
    summary = dict(asdict(summarize(trace, rep)), engine=trace.meta["engine"],
                   amortized_bits_last_n=bits.amortized, violations_reported=len(rep.violations))
    p = outdir / f"{stem}.summary.json"
    p.write_text(json.dumps(summary, indent=2) + "\n")
    written.append(p)
    return written
