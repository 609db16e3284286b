"""Property checkers over recorded traces.

Rounds are 1-based: row h of an array holds round h+1.  Bottom is -1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Violation:
    round: int
    kind: str
    nodes: tuple
    values: tuple


@dataclass
class StabilizationReport:
    stabilization_round: int | None
    last_violation: int
    horizon: int
    window: int
    violations: list = field(default_factory=list)

    @property
    def suffix(self) -> int:
        return self.horizon - self.last_violation

    @property
    def stabilized(self) -> bool:
        return self.stabilization_round is not None


def default_window(X: int, f: int) -> int:
    return max(4 * X, 10 * (f + 1), 100)


def check_counting(rows, C: int, window: int = 1, max_witnesses: int = 50) -> StabilizationReport:
    """Agreement and +1 validity on a (rounds, correct nodes) array.

    Node ids in witnesses are column positions of ``rows``.  A disagreement
    (or a bottom value) in round r and a failed increment from
    r to r+1 are both charged to round r; the stabilization round is the last
    charged round plus one, or None when the clean suffix is shorter than
    ``window``.
    """
    a = np.asarray(rows, dtype=np.int64)
    H = a.shape[0]
    if a.ndim != 2 or H == 0:
        raise ValueError("expected a nonempty (rounds, nodes) array")
    bad_agree = (a != a[:, :1]).any(axis=1) | (a < 0).any(axis=1)
    bad_valid = np.zeros(H, dtype=bool)
    if H > 1:
        bad_valid[:-1] = ((a[1:] - (a[:-1] + 1) % C) != 0).any(axis=1)
    bad = bad_agree | bad_valid
    idx = np.flatnonzero(bad)
    last = int(idx[-1]) + 1 if idx.size else 0
    witnesses = []
    for h in idx[-max_witnesses:]:
        r = int(h) + 1
        if bad_agree[h]:
            nodes = tuple(int(v) for v in np.flatnonzero(a[h] != a[h, 0])[:4])
            witnesses.append(Violation(r, "agreement", (0,) + nodes, tuple(int(a[h, v]) for v in (0,) + nodes)))
        if bad_valid[h]:
            v = int(np.flatnonzero(a[h + 1] != (a[h] + 1) % C)[0])
            witnesses.append(Violation(r, "validity", (v,), (int(a[h, v]), int(a[h + 1, v]))))
    stab = last + 1
    if H - last < window:
        stab_round = None
    else:
        stab_round = stab
    return StabilizationReport(stab_round, last, H, window, witnesses)


@dataclass
class VirtualClock:
    start: int
    X: int
    C: int
    intervals: list      # (first round, last round, anchor round or None, anchor value or None)

    def phases(self) -> list:
        return [None if a is None else (val - a) % self.C for _s, _e, a, val in self.intervals]

    def value(self, r: int):
        for s, e, a, val in self.intervals:
            if s <= r <= e:
                return None if a is None else (val + r - a) % self.C
        return None

    def jumps(self) -> list[int]:
        """Indices of anchored intervals whose phase differs from the previous anchored one."""
        out, prev = [], None
        for i, p in enumerate(self.phases()):
            if p is None:
                continue
            if prev is not None and p != prev:
                out.append(i)
            prev = p
        return out


@dataclass
class CrusaderReport:
    ok: bool
    violations: list
    checked_from: int
    clock: VirtualClock


def check_crusader(F, C: int, X: int, start: int = 1, max_witnesses: int = 50) -> CrusaderReport:
    """X-round crusader agreement, anchored at the earlier round.

    For every correct v and round r' >= start with F_{v,r'} = c, every correct w
    and round r in [r', r'+X] must have F_{w,r} in {c + r - r' mod C, bottom}.
    Phases (value - round mod C) therefore must agree between any two non-bottom
    outputs at most X rounds apart; checking consecutive non-bottom rounds is
    enough because the relation chains.
    """
    a = np.asarray(F, dtype=np.int64)
    H = a.shape[0]
    rounds = np.arange(1, H + 1, dtype=np.int64)[:, None]
    phase = np.where(a >= 0, (a - rounds) % C, -1)
    violations = []
    prev_round, prev_node, prev_phase = None, None, None
    for h in range(max(start, 1) - 1, H):
        row = phase[h]
        present = np.flatnonzero(row >= 0)
        if present.size == 0:
            continue
        r = h + 1
        ph = row[present]
        if (ph != ph[0]).any():
            w = int(present[np.flatnonzero(ph != ph[0])[0]])
            v = int(present[0])
            if len(violations) < max_witnesses:
                violations.append(Violation(r, "crusader", (v, w), (int(a[h, v]), int(a[h, w]))))
        if prev_round is not None and r - prev_round <= X and ph[0] != prev_phase:
            if len(violations) < max_witnesses:
                v = int(present[0])
                violations.append(Violation(r, "crusader", (prev_node, v),
                                            (int(a[prev_round - 1, prev_node]), int(a[h, v]))))
        prev_round, prev_node, prev_phase = r, int(present[0]), int(ph[0])
    return CrusaderReport(not violations, violations, start, virtual_clock(a, C, X, start))


def virtual_clock(F, C: int, X: int, start: int = 1) -> VirtualClock:
    a = np.asarray(F, dtype=np.int64)
    H = a.shape[0]
    intervals = []
    s = max(start, 1)
    while s <= H:
        e = min(s + X - 1, H)
        anchor = val = None
        for r in range(s, e + 1):
            nz = np.flatnonzero(a[r - 1] >= 0)
            if nz.size:
                anchor, val = r, int(a[r - 1, nz[0]])
                break
        intervals.append((s, e, anchor, val))
        s = e + 1
    return VirtualClock(max(start, 1), X, C, intervals)


def detect_unimpeded(lead, correct, R: int, streams=(0, 1)) -> list[tuple[int, int, int]]:
    """(round, stream, leader) of instances seeded with a common correct leader
    while every other instance seeded during its lifetime r..r+R-1 has bottom
    everywhere.  Only rounds whose whole window lies inside the trace are
    reported.

    ``lead`` is (rounds, nodes, streams) with -1 for bottom; ``correct`` is a
    boolean mask (or index list) of correct nodes.
    """
    a = np.asarray(lead, dtype=np.int64)
    correct = np.asarray(correct)
    if correct.dtype == bool:
        mask = correct.copy()
    else:
        mask = np.zeros(a.shape[1], dtype=bool)
        mask[correct.astype(np.int64)] = True
    sub = a[:, mask, :]
    H = sub.shape[0]
    anyset = (sub >= 0).any(axis=1)                       # (H, streams)
    out = []
    for b in streams:
        col = sub[:, :, b]
        agreed = (col == col[:, :1]).all(axis=1) & (col[:, 0] >= 0)
        for h in np.flatnonzero(agreed[:max(H - R + 1, 0)]):
            leader = int(col[h, 0])
            if leader >= mask.size or not mask[leader]:
                continue
            hi = h + R - 1
            others = False
            for b2 in range(anyset.shape[1]):
                rng = anyset[h:hi + 1, b2]
                if b2 == b:
                    rng = anyset[h + 1:hi + 1, b2]
                if rng.any():
                    others = True
                    break
            if not others:
                out.append((int(h) + 1, int(b), leader))
    out.sort()
    return out
