"""Wrapper around the compiled round kernel."""
from __future__ import annotations

import numpy as np

from ..adversary import MASK64, Strategy
from ..counting import ProtocolTree
from .plan import build_plan, flatten, unflatten
from .snapshot import default_snapshot, sanitize_snapshot

from ._cengine import Core  # noqa: E402  (ImportError signals a missing build)


class CEngine:
    name = "compiled"

    def __init__(self, tree: ProtocolTree, faulty=(), strategy: Strategy | None = None,
                 snapshot: dict | None = None, seed: int = 0):
        self.tree = tree
        self.n = tree.n
        self.faulty = frozenset(faulty)
        self.strategy = strategy or Strategy()
        self.seed = seed
        self.plan = build_plan(tree)
        snap = sanitize_snapshot(snapshot if snapshot is not None else default_snapshot(tree), tree)
        mask = np.zeros(self.n, dtype=np.int64)
        for g in self.faulty:
            mask[g] = 1
        st = self.strategy
        p = self.plan
        self.core = Core(p.inst, p.chan, p.nbr, p.span, p.defs, flatten(snap, p), p.msg_size, mask,
                         self.n, tree.R, tree.stack == "efficient", st.code, st.seed & MASK64,
                         st.delta, st.split)

    @property
    def round(self) -> int:
        return self.core.round

    def export(self) -> dict:
        return unflatten(np.asarray(self.core.state_arr), self.plan)

    def run(self, H: int) -> dict:
        n = self.n
        nb = 2 if self.tree.root.kind == "A" else 1
        rec = {"C": np.zeros((H, n), dtype=np.int64),
               "bits": np.zeros((H, n), dtype=np.int64),
               "inst": np.zeros((H, self.plan.inst_total), dtype=np.int64),
               "F": np.zeros((H, n, nb), dtype=np.int64),
               "lead": np.zeros((H, n, 2), dtype=np.int64),
               "kout": np.zeros((H, n, 2), dtype=np.int64),
               "adv_items": np.zeros(H, dtype=np.int64)}
        if H:
            self.core.run(H, rec["C"], rec["bits"], rec["inst"], rec["F"], rec["lead"],
                          rec["kout"], rec["adv_items"])
        return rec

    def step(self) -> dict:
        rec = self.run(1)
        out = {k: v[0] for k, v in rec.items()}
        out["adv_items"] = int(out["adv_items"])
        return out
