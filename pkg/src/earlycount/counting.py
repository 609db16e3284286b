"""Synchronous C-counting: trivial counter, the two recursion templates and
their alternating composition.

Conventions shared by both templates (see the decisions ledger shipped with
the repository sources for rationale):

* every pipeline is seeded with end-of-previous-round values so that the
  sends of a round depend only on the previous round's state;
* an instance seeded in round r runs rounds r..r+R-1 and its output, if it
  is a clock value, becomes C_v at the end of round r+R-1;
* when no stream produces a clock value C_v simply increments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .filtering import (FilterParams, basic_filter_default, basic_filter_payload,
                        basic_filter_receive, basic_filter_send, efficient_filter_default,
                        efficient_filter_payload, efficient_filter_receive, efficient_filter_send)
from .primitives.king import BasicKing, EfficientKing
from .primitives.weak_king import WeakKing
from .runtime import Padded, PayloadSchema, RRoundProtocol, Tag, TagCodec, ceil_log2

DEFAULT_R = 8
DEFAULT_EPS = Fraction(1, 4)
LMAX_FLOOR = 4

STREAM_KING0, STREAM_KING1, STREAM_FILT0, STREAM_FILT1 = 0, 1, 2, 3
STREAM_KING, STREAM_WEAK, STREAM_FILT, STREAM_P = 0, 1, 2, 3


# --------------------------------------------------------------------------
# constants

def derive_constants(R: int, epsilon, check_guard: bool = False) -> tuple[int, int, int]:
    """(k0, k1, X) from the formulas; optionally reject a failing L_max guard."""
    eps = Fraction(epsilon).limit_denominator(10 ** 6) if not isinstance(epsilon, Fraction) else epsilon
    if not (0 < eps < 1) or R < 1:
        raise ValueError("need 0 < epsilon < 1 and R >= 1")
    q = Fraction(R + 1) / eps
    k0 = -((-q.numerator) // q.denominator)
    k1 = k0 + R + 1
    X = 5 * max(k0, k1) + R
    if check_guard:
        bad = [k for k in (k0, k1) if lmax(X, R, k) <= LMAX_FLOOR]
        if bad:
            raise ValueError(f"L_max guard fails for k={bad} with X={X}")
    return k0, k1, X


def lmax(X: int, R: int, k: int) -> int:
    return (X - R) // k - 1


def guarded_X(R: int, k0: int, k1: int, X: int) -> int:
    """Least X' >= X with L_max > 4 for both k_b."""
    need = max(R + (LMAX_FLOOR + 2) * k for k in (k0, k1))
    return max(X, need)


def multiplier(X: int, k: int, m: int) -> int:
    return max(1, math.ceil(2 * X / (k * m)))


@dataclass(frozen=True)
class TemplateAConfig:
    m: int
    C: int
    R: int
    k: tuple[int, int]
    X: int
    mult: tuple[int, int]

    def __post_init__(self):
        if self.m < 2 or self.C < 2:
            raise ValueError("template A needs m >= 2 and C >= 2")
        if min(self.k) <= self.R:
            raise ValueError("need k_b > R")

    @property
    def split(self) -> int:
        return self.m // 2

    def part(self, b: int) -> tuple[int, ...]:
        return tuple(range(self.split)) if b == 0 else tuple(range(self.split, self.m))

    def child_modulus(self, b: int) -> int:
        return self.mult[b] * self.k[b] * self.m


@dataclass(frozen=True)
class TemplateBConfig:
    m: int
    C: int
    R: int
    mult: int

    def __post_init__(self):
        if self.m < 2 or self.C < 2:
            raise ValueError("template B needs m >= 2 and C >= 2")

    @property
    def k(self) -> int:
        return 3 * self.R

    @property
    def X(self) -> int:
        return 6 * self.R

    def child_modulus(self) -> int:
        return self.mult * self.k * self.m


# --------------------------------------------------------------------------
# tree

@dataclass
class InstanceSpec:
    index: int
    kind: str                     # "trivial" | "A" | "B"
    path: tuple[int, ...]
    lo: int
    m: int
    C: int
    R: int
    parent: int | None
    children: list = field(default_factory=list)
    config: object = None

    def nodes(self) -> range:
        return range(self.lo, self.lo + self.m)


@dataclass
class ProtocolTree:
    n: int
    C: int
    R: int
    stack: str
    instances: list
    meta: dict

    @property
    def root(self) -> InstanceSpec:
        return self.instances[0]

    @property
    def max_depth(self) -> int:
        return max(len(s.path) for s in self.instances)

    def codec(self) -> TagCodec:
        return TagCodec.for_tree(self.max_depth, self.R)

    def chain(self, g: int) -> list[int]:
        """Instances containing global node g, root first."""
        out, idx = [], 0
        while True:
            spec = self.instances[idx]
            out.append(idx)
            nxt = [c for c in spec.children if g in self.instances[c].nodes()]
            if not nxt:
                return out
            idx = nxt[0]

    def channels(self) -> list[tuple[Tag, InstanceSpec, int, int]]:
        """All (tag, instance, stream, slot) of the composed protocol."""
        out = []
        for spec in self.instances:
            if spec.kind == "trivial":
                continue
            for stream in range(4):
                slots = spec.R if stream < 2 else 1
                for j in range(slots):
                    out.append((Tag(spec.path, stream, j), spec, stream, j))
        return out

    def schemas(self) -> dict[Tag, PayloadSchema]:
        table = {}
        for tag, spec, stream, j in self.channels():
            table[tag] = channel_schema(self, spec, stream, j)
        return table

    def tag_id(self, spec: InstanceSpec, stream: int, slot: int) -> int:
        return (spec.index * 4 + stream) * 16 + slot


def build_combined(n: int, C: int, R: int = DEFAULT_R, epsilon=DEFAULT_EPS,
                   stack: str = "efficient") -> ProtocolTree:
    if n < 1:
        raise ValueError("n >= 1 required")
    if C < 2:
        raise ValueError("C >= 2 required")
    if stack not in ("efficient", "naive"):
        raise ValueError(f"unknown stack {stack!r}")
    k0, k1, X_formula = derive_constants(R, epsilon)
    X_A = guarded_X(R, k0, k1, X_formula)
    instances: list[InstanceSpec] = []

    def build(lo, m, modulus, level, path, parent):
        idx = len(instances)
        if m == 1:
            spec = InstanceSpec(idx, "trivial", path, lo, 1, modulus, R, parent)
            instances.append(spec)
            return idx
        if level % 2 == 0:
            cfg = TemplateBConfig(m, modulus, R, multiplier(6 * R, 3 * R, m))
            spec = InstanceSpec(idx, "B", path, lo, m, modulus, R, parent, [], cfg)
            instances.append(spec)
            spec.children.append(build(lo, m, cfg.child_modulus(), level + 1, path + (0,), idx))
        else:
            cfg = TemplateAConfig(m, modulus, R, (k0, k1), X_A,
                                  (multiplier(X_A, k0, m), multiplier(X_A, k1, m)))
            spec = InstanceSpec(idx, "A", path, lo, m, modulus, R, parent, [], cfg)
            instances.append(spec)
            h = cfg.split
            spec.children.append(build(lo, h, cfg.child_modulus(0), level + 1, path + (0,), idx))
            spec.children.append(build(lo + h, m - h, cfg.child_modulus(1), level + 1, path + (1,), idx))
        return idx

    build(0, n, C, 0, (), None)
    meta = {"k0": k0, "k1": k1, "X_formula": X_formula, "X_A": X_A,
            "X_raised": X_A != X_formula, "k_B": 3 * R, "X_B": 6 * R,
            "epsilon": str(Fraction(epsilon)), "R": R}
    tree = ProtocolTree(n, C, R, stack, instances, meta)
    check_modulus_chain(tree)
    return tree


def check_modulus_chain(tree: ProtocolTree) -> None:
    for spec in tree.instances:
        for pos, c in enumerate(spec.children):
            child = tree.instances[c]
            if spec.kind == "A":
                want = spec.config.child_modulus(pos)
            else:
                want = spec.config.child_modulus()
            if child.C != want:
                raise AssertionError(f"modulus mismatch at {child.path}: {child.C} != {want}")


# --------------------------------------------------------------------------
# per-instance protocol objects (shared by the engines)

_PROTO_CACHE: dict = {}


def king_protocol(stack: str, m: int, D: int, R: int) -> RRoundProtocol:
    key = ("king", stack, m, D, R)
    if key not in _PROTO_CACHE:
        base = EfficientKing(m, D) if stack == "efficient" else BasicKing(m, D)
        _PROTO_CACHE[key] = base if base.R == R else Padded(base, R)
    return _PROTO_CACHE[key]


def weak_protocol(stack: str, m: int, D: int, R: int) -> RRoundProtocol:
    key = ("weak", stack, m, D, R)
    if key not in _PROTO_CACHE:
        base = WeakKing(m, D) if stack == "efficient" else BasicKing(m, D)
        _PROTO_CACHE[key] = base if base.R == R else Padded(base, R)
    return _PROTO_CACHE[key]


def filter_params(spec: InstanceSpec, stream: int) -> FilterParams:
    cfg = spec.config
    if spec.kind == "A":
        b = stream - STREAM_FILT0
        return FilterParams(spec.m, cfg.child_modulus(b), cfg.X, cfg.part(b))
    return FilterParams(spec.m, cfg.child_modulus(), cfg.X, tuple(range(spec.m)))


def stream_protocol(tree: ProtocolTree, spec: InstanceSpec, stream: int) -> RRoundProtocol:
    D = spec.C + 1
    if spec.kind == "B" and stream == STREAM_WEAK:
        return weak_protocol(tree.stack, spec.m, D, spec.R)
    return king_protocol(tree.stack, spec.m, D, spec.R)


def channel_schema(tree: ProtocolTree, spec: InstanceSpec, stream: int, slot: int) -> PayloadSchema:
    if stream < 2:
        return stream_protocol(tree, spec, stream).schema(slot)
    if spec.kind == "B" and stream == STREAM_P:
        return PayloadSchema("phase", spec.R)
    p = filter_params(spec, stream if spec.kind == "A" else STREAM_FILT)
    return efficient_filter_payload(p) if tree.stack == "efficient" else basic_filter_payload(p)


def leader_from_filter(F: int, Cf: int, k: int, m: int):
    if F >= Cf or F % k:
        return None
    return (F // k) % m


# --------------------------------------------------------------------------
# per-node machines

class TrivialNode:
    def __init__(self, tree, spec: InstanceSpec, g: int):
        self.spec = spec
        self.C = 0

    @property
    def output(self) -> int:
        return self.C

    def send(self):
        return []

    def receive(self, inbox):
        self.C = (self.C + 1) % self.spec.C

    def reference(self, tag):
        return 0

    def walk(self):
        yield self


def trivial_counter_step(C_v, C: int) -> int:
    if type(C_v) is not int or not 0 <= C_v < C:
        C_v = 0
    return (C_v + 1) % C


class _FilterSlot:
    """One filter instance at one node (either variant)."""

    def __init__(self, params: FilterParams, efficient: bool):
        self.p = params
        self.efficient = efficient
        self.state = efficient_filter_default(params) if efficient else basic_filter_default(params)

    @property
    def F(self) -> int:
        return self.state.F

    def send(self, v, clock_in):
        if self.efficient:
            self.state, out = efficient_filter_send(self.state, self.p, v, clock_in)
        else:
            self.state, out = basic_filter_send(self.state, self.p, v, clock_in)
        return out

    def receive(self, v, box):
        if self.efficient:
            self.state, _ = efficient_filter_receive(self.state, self.p, v, box)
        else:
            self.state, _ = basic_filter_receive(self.state, self.p, v, box)

    def reference(self):
        if self.efficient:
            return self.state.Fh
        M = self.state.M
        return M if M < self.p.C else 0


class _Stream:
    """Pipeline of one R-round protocol at one node."""

    def __init__(self, proto: RRoundProtocol):
        self.proto = proto
        d = tuple(f.default for f in proto.state_schema().fields)
        self.slots = [d] * proto.R
        self.seed_lead = None

    def send(self, v, x, lead):
        self.seed_lead = lead
        self.slots[0] = self.proto.initial(v, (x, lead))
        out = []
        for j in range(self.proto.R):
            for w, code in self.proto.send(j, v, self.slots[j]):
                out.append((j, w, code))
        return out

    def receive(self, v, boxes):
        proto = self.proto
        result = None
        for j in range(proto.R - 1, -1, -1):
            nxt = proto.receive(j, v, self.slots[j], boxes.get(j, {}))
            if j == proto.R - 1:
                result = proto.output(nxt)
            else:
                self.slots[j + 1] = nxt
        return result


def _local_box(inbox, tag, lo):
    box = inbox.get(tag)
    if not box:
        return {}
    return {w - lo: c for w, c in box.items()}


class TemplateANode:
    def __init__(self, tree: ProtocolTree, spec: InstanceSpec, g: int, make_child):
        cfg = spec.config
        self.spec, self.cfg, self.tree = spec, cfg, tree
        self.v = g - spec.lo
        self.C = 0
        self.streams = [_Stream(stream_protocol(tree, spec, b)) for b in (0, 1)]
        eff = tree.stack == "efficient"
        self.filters = [_FilterSlot(filter_params(spec, STREAM_FILT0 + b), eff) for b in (0, 1)]
        self.side = 0 if self.v < cfg.split else 1
        child_spec = tree.instances[spec.children[self.side]]
        self.child = make_child(child_spec, g)
        self.last_out = [None, None]

    @property
    def output(self) -> int:
        return self.C

    def send(self):
        spec, cfg, v, lo = self.spec, self.cfg, self.v, self.spec.lo
        out = []
        x = (self.C + spec.R) % spec.C
        for b in (0, 1):
            Cf = cfg.child_modulus(b)
            lead = leader_from_filter(self.filters[b].F, Cf, cfg.k[b], spec.m)
            for j, w, code in self.streams[b].send(v, x, lead):
                out.append((Tag(spec.path, b, j), lo + w, code))
        for b in (0, 1):
            clock_in = self.child.output if b == self.side else None
            for w, code in self.filters[b].send(v, clock_in):
                out.append((Tag(spec.path, STREAM_FILT0 + b, 0), lo + w, code))
        out.extend(self.child.send())
        return out

    def receive(self, inbox):
        spec, lo, v = self.spec, self.spec.lo, self.v
        for b in (0, 1):
            boxes = {}
            for j in range(spec.R):
                box = _local_box(inbox, Tag(spec.path, b, j), lo)
                if box:
                    boxes[j] = box
            self.last_out[b] = self.streams[b].receive(v, boxes)
        for b in (0, 1):
            self.filters[b].receive(v, _local_box(inbox, Tag(spec.path, STREAM_FILT0 + b, 0), lo))
        self.child.receive(inbox)
        o0, o1 = self.last_out
        if o1 is not None and o1 < spec.C:
            self.C = o1
        elif o0 is not None and o0 < spec.C:
            self.C = o0
        else:
            self.C = (self.C + 1) % spec.C

    def reference(self, tag):
        stream, j = tag.stream, tag.slot
        if stream < 2:
            s = self.streams[stream]
            return s.proto.reference(j, s.slots[j])
        return self.filters[stream - STREAM_FILT0].reference()

    def walk(self):
        yield self
        yield from self.child.walk()


class TemplateBNode:
    def __init__(self, tree: ProtocolTree, spec: InstanceSpec, g: int, make_child):
        cfg = spec.config
        self.spec, self.cfg, self.tree = spec, cfg, tree
        self.v = g - spec.lo
        self.C = 0
        self.P = 0
        self.L = 0
        self.streams = [_Stream(stream_protocol(tree, spec, STREAM_KING)),
                        _Stream(stream_protocol(tree, spec, STREAM_WEAK))]
        self.filter = _FilterSlot(filter_params(spec, STREAM_FILT), tree.stack == "efficient")
        self.child = make_child(tree.instances[spec.children[0]], g)
        self.last_out = [None, None]

    @property
    def output(self) -> int:
        return self.C

    def send(self):
        spec, cfg, v, lo, R = self.spec, self.cfg, self.v, self.spec.lo, self.spec.R
        out = []
        lead = leader_from_filter(self.filter.F, cfg.child_modulus(), cfg.k, spec.m)
        for j, w, code in self.streams[0].send(v, (self.C + R) % spec.C, lead):
            out.append((Tag(spec.path, STREAM_KING, j), lo + w, code))
        self.P = (self.P + 1) % R
        if v == 0:
            for w in range(spec.m):
                out.append((Tag(spec.path, STREAM_P, 0), lo + w, self.P))
        if lead is not None:
            self.L = R
        weak_lead = 0 if (self.P == 0 and self.L == 0) else None
        self.L = max(self.L - 1, 0)
        for j, w, code in self.streams[1].send(v, (self.C + R) % spec.C, weak_lead):
            out.append((Tag(spec.path, STREAM_WEAK, j), lo + w, code))
        for w, code in self.filter.send(v, self.child.output):
            out.append((Tag(spec.path, STREAM_FILT, 0), lo + w, code))
        out.extend(self.child.send())
        return out

    def receive(self, inbox):
        spec, lo, v = self.spec, self.spec.lo, self.v
        for s in (0, 1):
            boxes = {}
            for j in range(spec.R):
                box = _local_box(inbox, Tag(spec.path, s, j), lo)
                if box:
                    boxes[j] = box
            self.last_out[s] = self.streams[s].receive(v, boxes)
        self.filter.receive(v, _local_box(inbox, Tag(spec.path, STREAM_FILT, 0), lo))
        self.child.receive(inbox)
        pbox = _local_box(inbox, Tag(spec.path, STREAM_P, 0), lo)
        if v != 0 and 0 in pbox:
            self.P = pbox[0]
        ok, ow = self.last_out
        if ow is not None and ow < spec.C:
            self.C = ow
        elif ok is not None and ok < spec.C:
            self.C = ok
        else:
            self.C = (self.C + 1) % spec.C

    def reference(self, tag):
        stream, j = tag.stream, tag.slot
        if stream < 2:
            s = self.streams[stream]
            return s.proto.reference(j, s.slots[j])
        if stream == STREAM_P:
            return self.P
        return self.filter.reference()

    def walk(self):
        yield self
        yield from self.child.walk()


def make_node(tree: ProtocolTree, spec: InstanceSpec, g: int):
    def make_child(child_spec, gg):
        return make_node(tree, child_spec, gg)
    if spec.kind == "trivial":
        return TrivialNode(tree, spec, g)
    if spec.kind == "A":
        return TemplateANode(tree, spec, g, make_child)
    return TemplateBNode(tree, spec, g, make_child)
