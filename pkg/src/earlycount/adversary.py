"""Byzantine behaviour and transient-fault injection.

Strategies are pure functions of (seed, round, channel, sender, receiver)
and of a read-only view of the system (the honest code the faulty node's
shadow copy would send, and reference values of sender and receiver).  The
same function is mirrored by the compiled engine, so both engines produce
identical faulty traffic.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .runtime import NO_MSG, PayloadSchema, RRoundProtocol

MASK64 = (1 << 64) - 1

SILENT, RANDOM, EQUIVOCATE, CLOCKJUMP, LEADERSPOOF, MINORITYSPLIT = range(6)
STRATEGY_NAMES = ("silent", "random", "equivocate", "clockjump", "leaderspoof", "minoritysplit")

KIND_GENERIC, KIND_FLAG, KIND_EFILT, KIND_BFILT = range(4)
ROLE_OTHER, ROLE_VALUE, ROLE_ECHO, ROLE_LEADER = range(4)
_ROLE_CODES = {"value": ROLE_VALUE, "echo": ROLE_ECHO, "leader": ROLE_LEADER}


def mix64(z: int) -> int:
    """splitmix64 finalizer."""
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def adv_random(seed: int, r: int, tagid: int, sender: int, receiver: int) -> int:
    u = mix64(seed & MASK64)
    for part in (r, tagid, sender, receiver):
        u = mix64(u ^ (part & MASK64))
    return u


@dataclass(frozen=True)
class Strategy:
    name: str = "silent"
    seed: int = 0
    delta: int = 1          # clockjump shift per interval
    split: int = 50         # equivocate: percentage of receivers in the first group

    def __post_init__(self):
        if self.name not in STRATEGY_NAMES:
            raise ValueError(f"unknown strategy {self.name!r}; choose from {STRATEGY_NAMES}")
        if not 0 <= self.split <= 100:
            raise ValueError("split must be a percentage")

    @property
    def code(self) -> int:
        return STRATEGY_NAMES.index(self.name)


@dataclass(frozen=True)
class ChannelInfo:
    kind: int
    size: int
    role: int
    C: int = 0          # clock modulus of filter channels
    X: int = 0          # filter cooldown, used by the clock jumper


def channel_info(schema: PayloadSchema, role: str, C: int = 0, X: int = 0) -> ChannelInfo:
    if schema.name == "clock+req":
        kind = KIND_EFILT
    elif schema.name == "clock_pair":
        kind = KIND_BFILT
    elif schema.size == 1:
        kind = KIND_FLAG
    else:
        kind = KIND_GENERIC
    return ChannelInfo(kind, schema.size, _ROLE_CODES.get(role, ROLE_OTHER), C, X)


def adversarial_code(strategy: int, seed: int, delta: int, split: int, r: int, tagid: int,
                     sender: int, receiver: int, local_recv: int, m: int, ch: ChannelInfo,
                     honest: int, sender_ref: int, recv_ref: int) -> int:
    """Code the faulty ``sender`` puts on channel ``tagid`` to ``receiver`` (NO_MSG = silence).

    Codes outside the channel's schema are legal outputs; receivers drop them.
    """
    size = ch.size
    if strategy == SILENT:
        return NO_MSG
    u = adv_random(seed, r, tagid, sender, receiver)
    if strategy == RANDOM:
        if u & 3 == 0:
            return NO_MSG
        return (u >> 2) % (size + 2)
    low = local_recv < (m * split) // 100
    if strategy == EQUIVOCATE:
        a = honest if honest != NO_MSG else sender_ref % size
        if ch.kind == KIND_FLAG:
            return 0 if low else NO_MSG
        if ch.kind == KIND_EFILT:
            c = a % ch.C
            return c + ch.C if low else (c + 1) % ch.C + ch.C
        if ch.kind == KIND_BFILT:
            if low:
                return a
            cv, mm = divmod(a, ch.C + 1)
            return ((cv + 1) % (ch.C + 1)) * (ch.C + 1) + (mm + 1) % (ch.C + 1)
        return a if low else (a + 1) % size
    if strategy == CLOCKJUMP:
        if ch.kind not in (KIND_EFILT, KIND_BFILT):
            return honest
        shift = delta * (r // (ch.X + 1))
        if ch.kind == KIND_EFILT:
            base = honest % ch.C if honest != NO_MSG else sender_ref % ch.C
            return (base + shift) % ch.C + ch.C
        if honest != NO_MSG:
            cv, mm = divmod(honest, ch.C + 1)
        else:
            cv, mm = ch.C, ch.C
        if cv >= ch.C:
            cv = sender_ref % ch.C
        return ((cv + shift) % ch.C) * (ch.C + 1) + mm
    if strategy == LEADERSPOOF:
        if ch.role == ROLE_LEADER:
            return u % size
        return honest
    if strategy == MINORITYSPLIT:
        if ch.role in (ROLE_VALUE, ROLE_ECHO):
            return recv_ref % size
        return honest
    raise ValueError(f"unknown strategy code {strategy}")


def instance_adversary(strategy: Strategy, protocol: RRoundProtocol, refs: Sequence[int] | None = None):
    """Adapter for ``run_instance``: faulty behaviour against a single instance."""
    m = protocol.m
    infos = [channel_info(protocol.schema(j), protocol.role(j)) for j in range(protocol.R)]

    def adversary(j, sender, receiver, honest, states):
        sref = protocol.reference(j, states[sender])
        rref = protocol.reference(j, states[receiver])
        return adversarial_code(strategy.code, strategy.seed, strategy.delta, strategy.split,
                                j, j, sender, receiver, receiver, m, infos[j], honest, sref, rref)
    return adversary


# --------------------------------------------------------------------------
# fault configuration

def max_faults(n: int) -> int:
    return (n - 1) // 3


def choose_faulty(n: int, f: int, placement: str = "last", seed: int = 0) -> tuple[int, ...]:
    if not 0 <= f <= n:
        raise ValueError("need 0 <= f <= n")
    if placement == "first":
        return tuple(range(f))
    if placement == "last":
        return tuple(range(n - f, n))
    if placement == "random":
        return tuple(sorted(random.Random(seed).sample(range(n), f)))
    raise ValueError(f"unknown placement {placement!r}")


@dataclass(frozen=True)
class FaultConfig:
    n: int
    faulty: tuple[int, ...] = ()
    strategy: Strategy = field(default_factory=Strategy)
    init_mode: str = "random"           # defaults | random | adversarial
    init_spec: dict | None = None
    allow_excess: bool = False          # permit f > t for subset-instance stress

    def __post_init__(self):
        if any(not 0 <= g < self.n for g in self.faulty) or len(set(self.faulty)) != len(self.faulty):
            raise ValueError("faulty set must be distinct node ids in range(n)")
        if len(self.faulty) > max_faults(self.n) and not self.allow_excess:
            raise ValueError(f"f={len(self.faulty)} exceeds t={max_faults(self.n)}")
        if self.init_mode not in ("defaults", "random", "adversarial"):
            raise ValueError(f"unknown init mode {self.init_mode!r}")

    @property
    def t(self) -> int:
        return max_faults(self.n)

    @property
    def f(self) -> int:
        return len(self.faulty)


# --------------------------------------------------------------------------
# initial states

_INIT_KEYS = {"base", "clocks", "pipelines", "filters", "phase", "overrides"}
_INIT_CHOICES = {
    "base": ("defaults", "random"),
    "clocks": ("keep", "random", "distinct", "equal"),
    "pipelines": ("keep", "random", "max"),
    "filters": ("keep", "random", "max", "stale"),
    "phase": ("keep", "random", "distinct"),
}


def inject_initial_states(tree, init_mode: str = "random", seed: int = 0, spec: dict | None = None):
    """Snapshot assigning every state variable of every node (pipeline slots included).

    ``spec`` (adversarial mode) may contain ``base``, ``clocks``, ``pipelines``,
    ``filters``, ``phase`` and ``overrides``; overrides map snapshot keys such
    as ``"0.C"`` to a scalar or a full array.
    """
    from .engine.snapshot import sanitize_snapshot, state_layout

    layout = state_layout(tree)
    rng = np.random.default_rng(seed)
    if init_mode == "defaults":
        return {e.key: e.default_array() for e in layout}
    if init_mode == "random":
        return {e.key: rng.integers(0, np.broadcast_to(e.sizes, e.shape)) for e in layout}
    if init_mode != "adversarial":
        raise ValueError(f"unknown init mode {init_mode!r}")
    spec = dict(spec or {})
    unknown = set(spec) - _INIT_KEYS
    if unknown:
        raise ValueError(f"unknown adversarial init keys: {sorted(unknown)}")
    for key, allowed in _INIT_CHOICES.items():
        if key in spec and spec[key] not in allowed:
            raise ValueError(f"{key} must be one of {allowed}")
    base = spec.get("base", "random")
    snap = {}
    for e in layout:
        sizes = np.broadcast_to(e.sizes, e.shape)
        snap[e.key] = rng.integers(0, sizes) if base == "random" else e.default_array()
    for e in layout:
        sizes = np.broadcast_to(e.sizes, e.shape)
        idx, name = e.key.split(".", 1)
        m = e.shape[0]
        if e.group == "clock":
            mode = spec.get("clocks", "keep")
            if mode == "random":
                snap[e.key] = rng.integers(0, sizes)
            elif mode == "distinct":
                C = int(sizes[0])
                snap[e.key] = (np.arange(m, dtype=np.int64) * C) // m % C
            elif mode == "equal":
                snap[e.key] = np.full(m, int(rng.integers(0, int(sizes[0]))), dtype=np.int64)
        elif e.group == "pipeline":
            mode = spec.get("pipelines", "keep")
            if mode == "random":
                snap[e.key] = rng.integers(0, sizes)
            elif mode == "max":
                snap[e.key] = (sizes - 1).astype(np.int64).copy()
        elif e.group == "filter":
            mode = spec.get("filters", "keep")
            if mode == "random":
                snap[e.key] = rng.integers(0, sizes)
            elif mode == "max":
                snap[e.key] = (sizes - 1).astype(np.int64).copy()
        elif e.group == "phase":
            mode = spec.get("phase", "keep")
            if mode == "random":
                snap[e.key] = rng.integers(0, sizes)
            elif mode == "distinct":
                snap[e.key] = np.arange(m, dtype=np.int64) % sizes
    if spec.get("filters") == "stale":
        _stale_filters(snap, layout)
    for key, value in (spec.get("overrides") or {}).items():
        if key not in snap:
            raise ValueError(f"override references unknown variable {key!r}")
        snap[key] = np.broadcast_to(np.asarray(value, dtype=np.int64), snap[key].shape).copy()
    return sanitize_snapshot(snap, tree)


def _stale_filters(snap, layout):
    """Filters that output pairwise different clock values right away."""
    for e in layout:
        if e.group != "filter" or not e.key.endswith(".X"):
            continue
        prefix = e.key[:-2]
        m = e.shape[0]
        snap[e.key] = np.zeros(m, dtype=np.int64)
        F = prefix + ".F"
        C = int(np.broadcast_to(next(x for x in layout if x.key == F).sizes, (m,))[0]) - 1
        vals = (np.arange(m, dtype=np.int64) * C) // m % C
        snap[F] = vals
        if prefix + ".Fh" in snap:
            snap[prefix + ".Fh"] = vals.copy()
        else:
            snap[prefix + ".M"] = vals.copy()


# --------------------------------------------------------------------------
# exhaustive enumeration of faulty behaviour

class BudgetExceeded(RuntimeError):
    pass


@dataclass
class Verdict:
    ok: bool
    behaviors: int          # weighted count of enumerated behaviours
    expected: int           # analytic count: prod_j |alphabet_j|^(f * #correct)
    distinct_final: int
    counterexample: dict | None = None

    @property
    def count_matches(self) -> bool:
        return self.behaviors == self.expected


def _alphabet(protocol: RRoundProtocol, j: int, alphabet) -> list[int]:
    if alphabet is None:
        return list(range(protocol.schema(j).size)) + [NO_MSG]
    return list(alphabet)


def exhaustive_adversary_check(protocol: RRoundProtocol, inputs: Sequence, faulty: Sequence[int],
                               check: Callable[[dict], str | None], alphabet=None,
                               budget: int = 5_000_000) -> Verdict:
    """Enumerate every faulty behaviour of one instance.

    In each round every faulty node independently picks, for every correct
    receiver, one letter from the alphabet (default: all in-schema codes plus
    silence).  Faulty nodes are stateless.  Global correct states are merged
    with multiplicities, so the enumeration is exhaustive but memoized.
    ``check(outputs)`` returns None or a description of the violated property.
    """
    m = protocol.m
    faulty = tuple(sorted(set(faulty)))
    correct = tuple(v for v in range(m) if v not in faulty)
    init = tuple(protocol.initial(v, inputs[v]) for v in correct)
    layer = {init: (1, None, None)}
    history = [layer]
    expected = 1
    work = 0
    for j in range(protocol.R):
        letters = _alphabet(protocol, j, alphabet)
        schema = protocol.schema(j)
        expected *= len(letters) ** (len(faulty) * len(correct))
        nxt: dict = {}
        for key, (mult, _p, _c) in layer.items():
            mail = [dict() for _ in range(m)]
            for pos, v in enumerate(correct):
                for w, c in protocol.send(j, v, key[pos]):
                    mail[w][v] = c
            options = []
            for pos, v in enumerate(correct):
                seen: dict = {}
                for combo in itertools.product(letters, repeat=len(faulty)):
                    work += 1
                    box = dict(mail[v])
                    for w, c in zip(faulty, combo):
                        if c != NO_MSG:
                            box[w] = c
                    box = {w: c for w, c in sorted(box.items()) if schema.valid(c)}
                    st = protocol.receive(j, v, key[pos], box)
                    if st in seen:
                        seen[st][0] += 1
                    else:
                        seen[st] = [1, combo]
                options.append(list(seen.items()))
            for choice in itertools.product(*options):
                work += 1
                if work > budget:
                    raise BudgetExceeded(f"enumeration exceeded budget {budget}")
                new = tuple(st for st, _ in choice)
                weight = mult
                for _, (cnt, _combo) in choice:
                    weight *= cnt
                combos = tuple(combo for _, (_cnt, combo) in choice)
                if new in nxt:
                    old = nxt[new]
                    nxt[new] = (old[0] + weight, old[1], old[2])
                else:
                    nxt[new] = (weight, key, combos)
        layer = nxt
        history.append(layer)
    total = 0
    bad = None
    for key, (mult, _p, _c) in layer.items():
        total += mult
        outputs = {v: protocol.output(key[pos]) for pos, v in enumerate(correct)}
        problem = check(outputs)
        if problem and bad is None:
            bad = _reconstruct(history, key, correct, faulty, outputs, problem)
    return Verdict(bad is None, total, expected, len(layer), bad)


def _reconstruct(history, key, correct, faulty, outputs, problem):
    rounds = []
    for depth in range(len(history) - 1, 0, -1):
        _mult, parent, combos = history[depth][key]
        rounds.append({v: dict(zip(faulty, combo)) for v, combo in zip(correct, combos)})
        key = parent
    rounds.reverse()
    return {"problem": problem, "outputs": outputs, "letters_to": rounds}


# --------------------------------------------------------------------------
# property checkers for single instances

def check_graded(inputs, strong_only: bool = False):
    """Validity and graded agreement on outputs {v: (y, g)}."""
    def check(outputs):
        xs = {inputs[v][0] if isinstance(inputs[v], tuple) else inputs[v] for v in outputs}
        if len(xs) == 1:
            x = next(iter(xs))
            if any(o != (x, 1) for o in outputs.values()):
                return "validity"
        ones = {y for y, g in outputs.values() if g == 1}
        if ones:
            y = next(iter(ones))
            if len(ones) > 1 or any(o[0] != y for o in outputs.values()):
                return "graded agreement"
        return None
    return check


def check_king(inputs, faulty):
    """Validity, default and king agreement on outputs {v: y or None}."""
    faulty = set(faulty)

    def check(outputs):
        xs = {inputs[v][0] for v in outputs}
        leads = {inputs[v][1] for v in outputs}
        if len(xs) == 1:
            x = next(iter(xs))
            if any(o not in (x, None) for o in outputs.values()):
                return "validity"
        if leads == {None} and any(o is not None for o in outputs.values()):
            return "default"
        if len(leads) == 1:
            lead = next(iter(leads))
            if lead is not None and lead not in faulty:
                vals = set(outputs.values())
                if len(vals) != 1 or None in vals:
                    return "king agreement"
        return None
    return check


def check_graded_king(inputs, faulty):
    """Validity, king validity and graded king agreement on outputs {v: (y, g)}."""
    faulty = set(faulty)

    def check(outputs):
        xs = {inputs[v][0] for v in outputs}
        leads = {inputs[v][1] for v in outputs}
        if len(xs) == 1:
            x = next(iter(xs))
            if any(o[0] != x for o in outputs.values()):
                return "validity"
        if len(leads) != 1:
            return None
        lead = next(iter(leads))
        if lead is None or lead in faulty or lead not in outputs:
            return None
        if len(xs) == 1 and outputs[lead][1] != 1:
            return "king validity"
        if outputs[lead][1] == 1 and any(o[0] != outputs[lead][0] for o in outputs.values()):
            return "graded king agreement"
        return None
    return check


def check_weak_king(inputs, faulty):
    """Validity, default, and agreement when f = 0 and a common leader exists."""
    def check(outputs):
        xs = {inputs[v][0] for v in outputs}
        leads = {inputs[v][1] for v in outputs}
        if len(xs) == 1:
            x = next(iter(xs))
            if any(o not in (x, None) for o in outputs.values()):
                return "validity"
        if leads == {None} and any(o is not None for o in outputs.values()):
            return "default"
        if not faulty and len(leads) == 1 and None not in leads:
            vals = set(outputs.values())
            if len(vals) != 1 or None in vals:
                return "weak king agreement"
        return None
    return check
