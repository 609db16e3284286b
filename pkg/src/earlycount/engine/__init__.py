"""Simulation engines.

``Engine`` is the compiled kernel when it has been built, otherwise the
pure-Python reference engine.  Set ``EARLYCOUNT_ENGINE=python`` to force the
reference engine.
"""
from __future__ import annotations

import os

import numpy as np

from .pyengine import PyEngine


def _pyrun(self, H: int) -> dict:
    rows = [self.step() for _ in range(H)]
    n = self.n
    nb = 2 if self.tree.root.kind == "A" else 1
    if not rows:
        return {"C": np.zeros((0, n), dtype=np.int64), "bits": np.zeros((0, n), dtype=np.int64),
                "inst": np.zeros((0, sum(s.m for s in self.tree.instances)), dtype=np.int64),
                "F": np.zeros((0, n, nb), dtype=np.int64), "lead": np.zeros((0, n, 2), dtype=np.int64),
                "kout": np.zeros((0, n, 2), dtype=np.int64), "adv_items": np.zeros(0, dtype=np.int64)}
    return {k: np.asarray([r[k] for r in rows], dtype=np.int64) for k in rows[0]}


PyEngine.run = _pyrun

try:
    from .cengine import CEngine
except ImportError:          # extension not built
    CEngine = None

ENGINES = {"python": PyEngine}
if CEngine is not None:
    ENGINES["compiled"] = CEngine

_choice = os.environ.get("EARLYCOUNT_ENGINE", "").strip().lower()
if _choice and _choice not in ENGINES:
    raise ImportError(f"EARLYCOUNT_ENGINE={_choice!r} is not available; have {sorted(ENGINES)}")
Engine = ENGINES[_choice] if _choice else (CEngine or PyEngine)
BACKEND = Engine.name


def get_engine(name: str | None = None):
    if name is None or name == "auto":
        return Engine
    if name not in ENGINES:
        raise ValueError(f"engine {name!r} not available; have {sorted(ENGINES)}")
    return ENGINES[name]
