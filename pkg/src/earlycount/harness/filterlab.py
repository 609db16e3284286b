"""Stand-alone filter runs: one filter instance on m nodes with externally
supplied clocks, used to measure filter stabilization and crusader behaviour
without the surrounding counter."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..adversary import Strategy, adversarial_code, channel_info
from ..filtering import (BasicFilterState, EfficientFilterState, FilterParams, basic_filter_payload,
                         basic_filter_receive, basic_filter_send, efficient_filter_payload,
                         efficient_filter_receive, efficient_filter_send)
from ..runtime import NO_MSG, ceil_log2

ClockFn = Callable[[int, int], "int | None"]


@dataclass
class FilterRun:
    params: FilterParams
    efficient: bool
    F: np.ndarray          # (H, m), -1 for bottom
    inputs: np.ndarray     # (H, m), -1 where no clock is supplied
    correct: np.ndarray    # (m,) bool
    bits: np.ndarray       # (H,) bits sent by correct nodes

    def correct_outputs(self) -> np.ndarray:
        return self.F[:, self.correct]


def random_filter_state(p: FilterParams, efficient: bool, rng: np.random.Generator):
    C, m = p.C, p.m
    if efficient:
        return EfficientFilterState([int(c) for c in rng.integers(0, C, m)],
                                    [int(s) for s in rng.integers(0, 2, m)],
                                    int(rng.integers(0, C)), int(rng.integers(0, p.X + 2)),
                                    int(rng.integers(0, m)), int(rng.integers(0, p.tsize)),
                                    int(rng.integers(0, 2)), int(rng.integers(0, C + 1)))
    return BasicFilterState(int(rng.integers(0, C + 1)), int(rng.integers(0, C + 1)),
                            int(rng.integers(0, p.X + 1)), int(rng.integers(0, C + 1)))


def counting_clock(C: int, offset: int) -> ClockFn:
    """Clock that counts from round 1: value offset + r mod C."""
    return lambda r, v: (offset + r) % C


def jumping_clock(C: int, offset: int, period: int, delta: int = 1) -> ClockFn:
    """The clock the clock-jump strategy advertises: shifted by delta every ``period`` rounds."""
    return lambda r, v: (offset + r + delta * (r // period)) % C


def run_filter(p: FilterParams, efficient: bool, H: int, faulty=(), strategy: Strategy | None = None,
               seed: int = 0, clock: ClockFn | None = None, init="random",
               jump_period: int | None = None, observer: Callable | None = None) -> FilterRun:
    """Simulate H rounds.  ``clock(r, v)`` is the input of node v in round r
    (only used for v in T); by default all of T counts from round 1.
    ``init`` is "random", "defaults" or a list of per-node states.

    ``jump_period`` overrides the clock-jump period (default X+1).
    ``observer(r, states)`` is called with the end-of-round states.
    """
    rng = np.random.default_rng(seed)
    m, C = p.m, p.C
    strategy = strategy or Strategy()
    faulty = frozenset(faulty)
    if clock is None:
        clock = counting_clock(C, int(rng.integers(0, C)))
    if not isinstance(init, str):
        states = list(init)
    elif init == "random":
        states = [random_filter_state(p, efficient, rng) for _ in range(m)]
    elif init == "defaults":
        from ..filtering import basic_filter_default, efficient_filter_default
        states = [(efficient_filter_default if efficient else basic_filter_default)(p) for _ in range(m)]
    else:
        raise ValueError(f"unknown init {init!r}")
    send = efficient_filter_send if efficient else basic_filter_send
    recv = efficient_filter_receive if efficient else basic_filter_receive
    schema = efficient_filter_payload(p) if efficient else basic_filter_payload(p)
    info = channel_info(schema, "filter", C, (jump_period or p.X + 1) - 1)
    item = max(ceil_log2(schema.size), 1)
    tset = set(p.T)

    def ref(st):
        if efficient:
            return st.Fh
        return st.M if st.M < C else 0

    F = np.full((H, m), -1, dtype=np.int64)
    inputs = np.full((H, m), -1, dtype=np.int64)
    bits = np.zeros(H, dtype=np.int64)
    for h in range(H):
        r = h + 1
        staged, outbound = [], []
        for v in range(m):
            cin = clock(r, v) if v in tset else None
            if cin is not None:
                inputs[h, v] = cin
            st, out = send(states[v], p, v, cin)
            staged.append(st)
            outbound.append(out)
        inboxes = [dict() for _ in range(m)]
        for v in range(m):
            if v in faulty:
                honest = dict(outbound[v])
                sref = ref(staged[v])
                for w in range(m):
                    code = adversarial_code(strategy.code, strategy.seed, strategy.delta, strategy.split,
                                            r, 0, v, w, w, m, info, honest.get(w, NO_MSG), sref,
                                            ref(staged[w]))
                    if 0 <= code < schema.size:
                        inboxes[w][v] = code
                continue
            for w, code in outbound[v]:
                inboxes[w][v] = code
            bits[h] += item * len(outbound[v])
        for v in range(m):
            states[v], out = recv(staged[v], p, v, inboxes[v])
            F[h, v] = -1 if out is None else out
        if observer is not None:
            observer(r, states)
    correct = np.array([v not in faulty for v in range(m)])
    return FilterRun(p, efficient, F, inputs, correct, bits)
