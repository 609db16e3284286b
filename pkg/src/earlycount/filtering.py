"""Clock filtering: the broadcast filter and the round-robin filter.

Both filters take an input clock C_v at nodes of the clock set T and produce
F_v, which is either a clock value or bottom.  Bottom is stored as code C in
state and reported as ``None`` by the step functions.

Each filter is split into a send phase (pure in the end-of-previous-round
state and this round's input) and a receive phase.  ``*_step`` composes the
two for callers that already know the inbox.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

from .runtime import Field, PayloadSchema, StateSchema, ceil_log2


@dataclass(frozen=True)
class FilterParams:
    m: int                      # nodes in V (local ids 0..m-1)
    C: int                      # clock modulus
    X: int                      # cooldown length
    T: tuple[int, ...]          # sorted local ids of the clock set

    def __post_init__(self):
        if self.C < 2 or self.X < 1:
            raise ValueError("need C >= 2 and X >= 1")
        if not self.T or list(self.T) != sorted(set(self.T)) or self.T[-1] >= self.m or self.T[0] < 0:
            raise ValueError("T must be a nonempty sorted subset of range(m)")

    @property
    def t(self) -> int:
        return (self.m - 1) // 3

    @property
    def tsize(self) -> int:
        return len(self.T)


# --------------------------------------------------------------------------
# broadcast filter

@dataclass
class BasicFilterState:
    mlast: int          # [C] or C for bottom
    M: int              # [C] or C for bottom
    X: int              # [X+1]
    F: int              # [C] or C for bottom


def basic_filter_schema(p: FilterParams) -> StateSchema:
    C = p.C
    return StateSchema((Field("mlast", C + 1, C), Field("M", C + 1, C),
                        Field("X", p.X + 1, 0), Field("F", C + 1, C)))


def basic_filter_payload(p: FilterParams) -> PayloadSchema:
    return PayloadSchema("clock_pair", (p.C + 1) ** 2)


def basic_filter_default(p: FilterParams) -> BasicFilterState:
    return BasicFilterState(p.C, p.C, 0, p.C)


def basic_filter_send(state: BasicFilterState, p: FilterParams, v: int, clock_in):
    """Every node broadcasts (own clock or bottom, last majority)."""
    cv = clock_in if (v in p.T and clock_in is not None and 0 <= clock_in < p.C) else p.C
    code = cv * (p.C + 1) + state.mlast
    return state, [(w, code) for w in range(p.m)]


def basic_filter_receive(state: BasicFilterState, p: FilterParams, v: int, inbox: Mapping[int, int]):
    C = p.C
    tset = set(p.T)
    tally: dict[int, int] = {}
    mtally: dict[int, int] = {}
    for w, code in inbox.items():
        cv, mm = divmod(code, C + 1)
        if w in tset and cv < C:
            tally[cv] = tally.get(cv, 0) + 1
        mtally[mm] = mtally.get(mm, 0) + 1
    new_m = C
    for c, k in tally.items():
        if 2 * k > p.tsize:
            new_m = c
    X, M = state.X, state.M
    support = [mm for mm, k in mtally.items() if k >= p.m - p.t]
    if support:
        mm = support[0]
        if mm < C and M < C and mm == (M + 1) % C:
            X = max(X - 1, 0)
        else:
            X = p.X
        M = mm
    else:
        X = p.X
    F = M if X == 0 else C
    new = BasicFilterState(new_m, M, X, F)
    return new, (None if F == C else F)


def basic_filter_step(state, p, v, clock_in, inbox):
    staged, outbound = basic_filter_send(state, p, v, clock_in)
    new, out = basic_filter_receive(staged, p, v, inbox)
    return new, out, outbound


# --------------------------------------------------------------------------
# round-robin filter

@dataclass
class EfficientFilterState:
    mem: list[int]      # believed clock of every w, [C]
    s: list[int]        # pending response flag per w
    Fh: int             # own filtered clock [C]
    X: int              # [X+2]
    N: int              # round-robin pointer over V, [m]
    Tc: int             # round-robin pointer over T, [|T|]
    a: int              # announce flag
    F: int = 0          # output, C for bottom
    # filled during the send phase
    sent_to: list = field(default_factory=list)


def efficient_filter_schema(p: FilterParams) -> StateSchema:
    C, m = p.C, p.m
    fields = [Field(f"mem{w}", C) for w in range(m)]
    fields += [Field(f"s{w}", 2) for w in range(m)]
    fields += [Field("Fh", C), Field("X", p.X + 2), Field("N", m), Field("Tc", p.tsize),
               Field("a", 2), Field("F", C + 1, C)]
    return StateSchema(tuple(fields))


def efficient_filter_payload(p: FilterParams) -> PayloadSchema:
    """Code c + C*req: the sender's clock with an optional request bit."""
    return PayloadSchema("clock+req", 2 * p.C, ("req",))


def efficient_filter_default(p: FilterParams) -> EfficientFilterState:
    return EfficientFilterState([0] * p.m, [0] * p.m, 0, 0, 0, 0, 0, p.C)


def efficient_filter_send(state: EfficientFilterState, p: FilterParams, v: int, clock_in):
    """Local updates of the round followed by the sends; returns (staged, outbound)."""
    C, m, T = p.C, p.m, p.T
    st = replace(state, mem=list(state.mem), s=list(state.s))
    st.X = max(st.X - 1, 0)
    tally: dict[int, int] = {}
    for w in T:
        c = st.mem[w]
        tally[c] = tally.get(c, 0) + 1
    for c, k in tally.items():
        if c != st.Fh and 2 * k > p.tsize:
            st.X = p.X + 1
            st.a = 1
            st.Fh = c
            break
    differ = sum(1 for w in range(m) if st.mem[w] != st.Fh)
    if 3 * differ > m:
        st.X = p.X + 1
        st.a = 1
    probe = T[(st.Tc - 2) % p.tsize]
    if st.mem[probe] != st.Fh:
        st.a = 1
    in_t = v in T and clock_in is not None and 0 <= clock_in < C
    if in_t and clock_in != (st.Fh + 1) % C:
        st.X = p.X + 1
        st.a = 1
        st.Fh = clock_in
    else:
        st.Fh = (st.Fh + 1) % C
    st.N = (st.N + 1) % m
    st.Tc = (st.Tc + 1) % p.tsize
    target_t = T[st.Tc]
    outbound = []
    for w in range(m):
        st.mem[w] = (st.mem[w] + 1) % C
        respond = st.s[w]
        st.s[w] = 0
        req = st.a == 1 or st.mem[w] != st.Fh or w == st.N or w == target_t
        if respond or req:
            outbound.append((w, st.Fh + (C if req else 0)))
    return st, outbound


def efficient_filter_receive(st: EfficientFilterState, p: FilterParams, v: int, inbox: Mapping[int, int]):
    C = p.C
    for w, code in inbox.items():
        c, req = code % C, code // C
        st.mem[w] = c
        if req:
            st.s[w] = 1
    st.a = 0
    st.F = st.Fh if st.X == 0 else C
    return st, (None if st.F == C else st.F)


def efficient_filter_step(state, p, v, clock_in, inbox):
    staged, outbound = efficient_filter_send(state, p, v, clock_in)
    new, out = efficient_filter_receive(staged, p, v, inbox)
    return new, out, outbound


def filter_payload_bits(p: FilterParams, efficient: bool) -> int:
    schema = efficient_filter_payload(p) if efficient else basic_filter_payload(p)
    return ceil_log2(schema.size)
