"""Execution traces: per-round arrays plus JSON metadata in one .npz file."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FORMAT = "earlycount-trace/1"
ARRAYS = ("C", "bits", "inst", "F", "lead", "kout", "adv_items")


@dataclass
class ExecutionTrace:
    """Rounds 1..H of one simulation.

    C[h, v]          output of node v in round h+1
    bits[h, v]       bits sent by correct node v (0 for faulty nodes)
    inst[h, :]       output of every node of every instance of the tree
    F[h, v, b]       root filter outputs (-1 for bottom)
    lead[h, v, s]    leader seeded into root stream s (-1 for none)
    kout[h, v, s]    root stream s output (-1 for bottom)
    adv_items[h]     items injected by faulty nodes
    """
    arrays: dict
    faulty: tuple
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.arrays["C"].shape[1]

    @property
    def H(self) -> int:
        return self.arrays["C"].shape[0]

    @property
    def correct(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[list(self.faulty)] = False
        return mask

    def correct_outputs(self) -> np.ndarray:
        return self.arrays["C"][:, self.correct]

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        meta = dict(self.meta, format=FORMAT, faulty=list(self.faulty))
        np.savez_compressed(path, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
                            **{k: self.arrays[k] for k in ARRAYS if k in self.arrays})
        return path if path.suffix == ".npz" else path.with_name(path.name + ".npz")

    @classmethod
    def load(cls, path: str | Path) -> "ExecutionTrace":
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta"]).decode())
            if meta.get("format") != FORMAT:
                raise ValueError(f"{path}: not an {FORMAT} file")
            arrays = {k: data[k] for k in ARRAYS if k in data.files}
        faulty = tuple(meta.pop("faulty"))
        meta.pop("format")
        return cls(arrays, faulty, meta)

    def write_csv(self, path: str | Path, per_node: bool = False):
        """One row per round: correct-node bits, agreement and validity flags
        (validity compares with the previous round), faulty items; optionally
        every node's output."""
        C = self.arrays["C"]
        mod = self.meta.get("config", {}).get("C")
        ok = self.correct
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            head = ["round", "bits", "agreement_ok", "validity_ok", "min_C", "max_C", "adv_items"]
            if per_node:
                head += [f"C{v}" for v in range(self.n)]
            w.writerow(head)
            for h in range(self.H):
                row = C[h, ok]
                valid = 1
                if h and mod:
                    valid = int(((C[h - 1, ok] + 1) % mod == row).all())
                out = [h + 1, int(self.arrays["bits"][h].sum()), int(row.min() == row.max()), valid,
                       int(row.min()), int(row.max()), int(self.arrays["adv_items"][h])]
                if per_node:
                    out += [int(c) for c in C[h]]
                w.writerow(out)
