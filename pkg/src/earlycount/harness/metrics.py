"""Communication measurements."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trace import ExecutionTrace


@dataclass
class BitsReport:
    start: int              # first round of the window
    end: int                # last round of the window
    amortized: float        # mean bits per node per round, correct nodes
    max_node: float         # largest per-node mean
    total: int


def measure_bits(trace: ExecutionTrace, window: tuple[int, int] | int | None = None) -> BitsReport:
    """Bits sent by correct nodes, averaged over a window of rounds.

    ``window`` is (first, last) in 1-based rounds, or an int k for the last k
    rounds; default is the whole trace.
    """
    H = trace.H
    if window is None:
        lo, hi = 1, H
    elif isinstance(window, int):
        lo, hi = max(H - window + 1, 1), H
    else:
        lo, hi = window
    if not 1 <= lo <= hi <= H:
        raise ValueError(f"window {lo}..{hi} outside 1..{H}")
    b = trace.arrays["bits"][lo - 1:hi][:, trace.correct]
    per_node = b.mean(axis=0)
    return BitsReport(lo, hi, float(per_node.mean()), float(per_node.max()), int(b.sum()))


def slope(xs, ys) -> float:
    """Least-squares slope."""
    return float(np.polyfit(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float), 1)[0])
