"""Lock-step round runtime.

Payload schemas, subroutine tags, envelope multiplexing with validation,
bit accounting, state sanitization and the pipeline that keeps one
instance of an R-round subroutine in every round slot.

Payloads are small non-negative integers ("codes").  Every channel declares
a schema with a finite number of codes; anything else a receiver sees on
that channel is dropped before the protocol code runs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

NO_MSG = -1


def ceil_log2(x: int) -> int:
    """Smallest k with 2**k >= x (0 for x <= 1)."""
    if x <= 1:
        return 0
    return (x - 1).bit_length()


class ProtocolError(RuntimeError):
    """Raised on contract violations inside correct-node code."""


@dataclass(frozen=True)
class PayloadSchema:
    name: str
    size: int
    specials: tuple[str, ...] = ()

    def valid(self, code) -> bool:
        return type(code) is int and 0 <= code < self.size

    @property
    def bits(self) -> int:
        return ceil_log2(self.size)


@dataclass(frozen=True, order=True)
class Tag:
    """Position of one channel in the protocol tree.

    ``path`` lists child indices from the root instance, ``stream`` selects
    a pipeline or filter inside that instance and ``slot`` the pipeline round.
    """
    path: tuple[int, ...] = ()
    stream: int = 0
    slot: int = 0


@dataclass(frozen=True)
class TagCodec:
    """Fixed-width encoding of tags; charged once per envelope item."""
    depth_bits: int = 4
    stream_bits: int = 2
    slot_bits: int = 3

    def bits(self, tag: Tag) -> int:
        return self.depth_bits + len(tag.path) + self.stream_bits + self.slot_bits

    def encode(self, tag: Tag) -> int:
        depth = len(tag.path)
        if depth >= 1 << self.depth_bits:
            raise ProtocolError(f"tag too deep: {tag}")
        if tag.stream >= 1 << self.stream_bits or tag.slot >= 1 << self.slot_bits:
            raise ProtocolError(f"tag field overflow: {tag}")
        word = depth
        for idx in tag.path:
            if idx not in (0, 1):
                raise ProtocolError(f"tag path index out of range: {tag}")
            word = (word << 1) | idx
        word = (word << self.stream_bits) | tag.stream
        return (word << self.slot_bits) | tag.slot

    @classmethod
    def for_tree(cls, max_depth: int, R: int) -> "TagCodec":
        return cls(depth_bits=max(1, ceil_log2(max_depth + 1)),
                   slot_bits=max(1, ceil_log2(R)))


@dataclass(frozen=True)
class Envelope:
    sender: int
    receiver: int
    items: tuple[tuple[Tag, int], ...]

    def __post_init__(self):
        if not self.items:
            raise ProtocolError("empty envelopes are never transmitted")


def multiplex(sender: int, outbound: Iterable[tuple[Tag, int, int]]) -> list[Envelope]:
    """Group (tag, receiver, code) triples into one envelope per receiver."""
    per_receiver: dict[int, dict[Tag, int]] = {}
    for tag, receiver, code in outbound:
        box = per_receiver.setdefault(receiver, {})
        if tag in box:
            raise ProtocolError(f"duplicate item for tag {tag} to node {receiver} from {sender}")
        box[tag] = code
    return [Envelope(sender, rcv, tuple(sorted(box.items())))
            for rcv, box in sorted(per_receiver.items())]


SchemaLookup = Callable[[Tag], "PayloadSchema | None"]


def _lookup(schemas) -> SchemaLookup:
    if callable(schemas):
        return schemas
    return schemas.get


def demultiplex_and_validate(envelopes: Iterable[Envelope], schemas) -> dict[Tag, dict[int, int]]:
    """Build the per-tag inbox of one receiver.

    Envelopes are processed in ascending sender order; for every (tag, sender)
    only the first payload is kept.  Unknown tags and out-of-schema payloads
    are dropped silently.
    """
    find = _lookup(schemas)
    inbox: dict[Tag, dict[int, int]] = {}
    ordered = sorted(envelopes, key=lambda e: e.sender)
    for env in ordered:
        for item in env.items:
            try:
                tag, code = item
            except (TypeError, ValueError):
                continue
            if not isinstance(tag, Tag):
                continue
            schema = find(tag)
            if schema is None or not schema.valid(code):
                continue
            box = inbox.setdefault(tag, {})
            if env.sender not in box:
                box[env.sender] = code
    return inbox


def item_bits(schema: PayloadSchema, tag_bits: int, n: int) -> int:
    return tag_bits + max(schema.bits, ceil_log2(n))


def account_bits(envelope: Envelope, n: int, codec: TagCodec, schemas) -> int:
    find = _lookup(schemas)
    total = 0
    for tag, _code in envelope.items:
        schema = find(tag)
        if schema is None:
            raise ProtocolError(f"no schema for tag {tag}")
        total += item_bits(schema, codec.bits(tag), n)
    return total


# --------------------------------------------------------------------------
# state schemas

@dataclass(frozen=True)
class Field:
    name: str
    size: int
    default: int = 0


@dataclass(frozen=True)
class StateSchema:
    fields: tuple[Field, ...]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.fields)

    def defaults(self) -> dict[str, int]:
        return {f.name: f.default for f in self.fields}

    def index(self, name: str) -> int:
        return self.names.index(name)


def _in_domain(value, size: int) -> bool:
    return type(value) is int and 0 <= value < size


def sanitize_state(raw: Mapping, schema: StateSchema) -> dict[str, int]:
    """Replace every missing or out-of-domain variable by its default."""
    out = {}
    for f in schema.fields:
        value = raw.get(f.name) if isinstance(raw, Mapping) else None
        out[f.name] = value if _in_domain(value, f.size) else f.default
    return out


def sanitize_vector(raw: Sequence, schema: StateSchema) -> tuple[int, ...]:
    """Positional variant of :func:`sanitize_state` used for pipeline slots."""
    out = []
    for i, f in enumerate(schema.fields):
        value = raw[i] if i < len(raw) else None
        if hasattr(value, "item"):
            value = value.item()
        out.append(value if _in_domain(value, f.size) else f.default)
    return tuple(out)


# --------------------------------------------------------------------------
# state machines and pipelines

class RRoundProtocol:
    """Terminating protocol with rounds 0..R-1 (zero-based).

    Node state is a fixed-width tuple of integers laid out by
    ``state_schema``.  ``send`` must depend on the state only; ``receive``
    returns the state for the next round.  After round R-1 ``output``
    extracts the result.
    """
    name = "rround"
    R = 1

    def __init__(self, m: int, domain: int):
        if m < 1:
            raise ValueError("need at least one node")
        self.m = m
        self.t = (m - 1) // 3
        self.D = domain

    def state_schema(self) -> StateSchema:
        raise NotImplementedError

    def initial(self, v: int, inp) -> tuple:
        raise NotImplementedError

    def schema(self, j: int) -> PayloadSchema:
        raise NotImplementedError

    def send(self, j: int, v: int, st: tuple) -> list[tuple[int, int]]:
        raise NotImplementedError

    def receive(self, j: int, v: int, st: tuple, inbox: Mapping[int, int]) -> tuple:
        raise NotImplementedError

    def output(self, st: tuple):
        raise NotImplementedError

    def reference(self, j: int, st: tuple) -> int:
        """Value an omniscient adversary tailors its messages against."""
        return st[0]

    def role(self, j: int) -> str:
        return "value"

    def payload_budget_bits(self) -> int:
        """Declared per-item payload budget: 2*ceil(log2(|V|+1)) + 2 bits."""
        return 2 * ceil_log2(self.D + 1) + 2


class Padded(RRoundProtocol):
    """Run ``inner`` and idle for the remaining rounds up to R."""

    def __init__(self, inner: RRoundProtocol, R: int):
        if R < inner.R:
            raise ValueError("padding cannot shorten a protocol")
        self.inner = inner
        self.m, self.t, self.D = inner.m, inner.t, inner.D
        self.R = R
        self.name = f"{inner.name}+pad{R}"

    def state_schema(self):
        return self.inner.state_schema()

    def initial(self, v, inp):
        return self.inner.initial(v, inp)

    def schema(self, j):
        if j < self.inner.R:
            return self.inner.schema(j)
        return PayloadSchema("idle", 1)

    def send(self, j, v, st):
        return self.inner.send(j, v, st) if j < self.inner.R else []

    def receive(self, j, v, st, inbox):
        return self.inner.receive(j, v, st, inbox) if j < self.inner.R else st

    def output(self, st):
        return self.inner.output(st)

    def reference(self, j, st):
        return self.inner.reference(min(j, self.inner.R - 1), st)

    def role(self, j):
        return self.inner.role(j) if j < self.inner.R else "idle"

    def payload_budget_bits(self):
        return self.inner.payload_budget_bits()


@dataclass
class PipelineSlots:
    """Slot j holds the state of the instance about to run round j."""
    slots: list = field(default_factory=list)

    @classmethod
    def blank(cls, protocol: RRoundProtocol) -> "PipelineSlots":
        d = tuple(f.default for f in protocol.state_schema().fields)
        return cls([d] * protocol.R)


def pipeline_send(slots: PipelineSlots, protocol: RRoundProtocol, v: int, fresh_input):
    """Seed slot 0 and collect this round's sends: list of (slot, receiver, code)."""
    schema = protocol.state_schema()
    staged = [sanitize_vector(s, schema) for s in slots.slots]
    if len(staged) != protocol.R:
        staged = (staged + [tuple(f.default for f in schema.fields)] * protocol.R)[:protocol.R]
    staged[0] = protocol.initial(v, fresh_input)
    outbound = []
    for j in range(protocol.R):
        for receiver, code in protocol.send(j, v, staged[j]):
            outbound.append((j, receiver, code))
    return PipelineSlots(staged), outbound


def pipeline_receive(staged: PipelineSlots, protocol: RRoundProtocol, v: int,
                     inboxes: Mapping[int, Mapping[int, int]]):
    """Advance every slot; returns (slots', output of the finishing instance)."""
    s = list(staged.slots)
    out = None
    for j in range(protocol.R - 1, -1, -1):
        box = inboxes.get(j, {})
        schema = protocol.schema(j)
        box = {w: c for w, c in box.items() if schema.valid(c)}
        nxt = protocol.receive(j, v, s[j], box)
        if j == protocol.R - 1:
            out = protocol.output(nxt)
        else:
            s[j + 1] = nxt
    return PipelineSlots(s), out


def pipeline_step(slots: PipelineSlots, protocol: RRoundProtocol, v: int, fresh_input,
                  inboxes: Mapping[int, Mapping[int, int]]):
    """One full round for a single node whose inbox is already known."""
    staged, outbound = pipeline_send(slots, protocol, v, fresh_input)
    new_slots, out = pipeline_receive(staged, protocol, v, inboxes)
    return new_slots, outbound, out


class PipelineSystem:
    """All m nodes of one pipelined protocol, stepped in lock-step.

    Optional ``faulty`` nodes have their outgoing messages produced by
    ``adversary(round, slot, sender, receiver, honest_code) -> code``.
    """

    def __init__(self, protocol: RRoundProtocol, slots=None, faulty=(), adversary=None):
        self.protocol = protocol
        m = protocol.m
        self.slots = slots if slots is not None else [PipelineSlots.blank(protocol) for _ in range(m)]
        self.faulty = frozenset(faulty)
        self.adversary = adversary
        self.round = 0

    def step(self, inputs: Sequence):
        p = self.protocol
        self.round += 1
        staged = []
        mail: list[dict[int, dict[int, int]]] = [dict() for _ in range(p.m)]
        for v in range(p.m):
            st, outbound = pipeline_send(self.slots[v], p, v, inputs[v])
            staged.append(st)
            if v in self.faulty:
                continue
            for j, receiver, code in outbound:
                mail[receiver].setdefault(j, {})[v] = code
        if self.faulty and self.adversary is not None:
            for v in sorted(self.faulty):
                honest = {}
                for j in range(p.R):
                    for receiver, code in p.send(j, v, staged[v].slots[j]):
                        honest[(j, receiver)] = code
                for j in range(p.R):
                    for receiver in range(p.m):
                        code = self.adversary(self.round, j, v, receiver, honest.get((j, receiver), NO_MSG))
                        if code != NO_MSG:
                            mail[receiver].setdefault(j, {})[v] = code
        outputs = []
        for v in range(p.m):
            self.slots[v], out = pipeline_receive(staged[v], p, v, mail[v])
            outputs.append(out)
        return outputs


@dataclass
class InstanceRun:
    """Result of running one R-round instance on all nodes."""
    outputs: dict
    rounds: int
    sent: list            # per round: {correct sender: [(receiver, code), ...]}
    bits: list            # per round: bits sent by correct nodes
    item_bits: list       # per round: largest single item charged
    states: list          # final state tuple of every node


def run_instance(protocol: RRoundProtocol, inputs: Sequence, faulty=(), adversary=None,
                 n_sys: int | None = None, codec: TagCodec | None = None) -> InstanceRun:
    """Run a single instance for exactly ``protocol.R`` rounds.

    ``adversary(j, sender, receiver, honest_code, states)`` returns the code a
    faulty sender delivers (``NO_MSG`` for silence).  Faulty nodes keep an
    honest shadow state so that ``honest_code`` is meaningful.
    """
    m = protocol.m
    faulty = frozenset(faulty)
    n_sys = n_sys or m
    codec = codec or TagCodec()
    states = [protocol.initial(v, inputs[v]) for v in range(m)]
    sent, bits, biggest = [], [], []
    for j in range(protocol.R):
        schema = protocol.schema(j)
        tag = Tag((), 0, j)
        mail: list[dict[int, int]] = [dict() for _ in range(m)]
        round_sent: dict[int, list] = {}
        round_bits = 0
        big = 0
        for v in range(m):
            out = protocol.send(j, v, states[v])
            if v in faulty:
                honest = dict(out)
                if adversary is None:
                    continue
                for w in range(m):
                    code = adversary(j, v, w, honest.get(w, NO_MSG), states)
                    if code != NO_MSG:
                        mail[w][v] = code
                continue
            round_sent[v] = list(out)
            for env in multiplex(v, ((tag, w, c) for w, c in out)):
                b = account_bits(env, n_sys, codec, {tag: schema})
                round_bits += b
                big = max(big, b)
            for w, c in out:
                mail[w][v] = c
        for v in range(m):
            box = {w: c for w, c in sorted(mail[v].items()) if schema.valid(c)}
            states[v] = protocol.receive(j, v, states[v], box)
        sent.append(round_sent)
        bits.append(round_bits)
        biggest.append(big)
    outputs = {v: protocol.output(states[v]) for v in range(m) if v not in faulty}
    return InstanceRun(outputs, protocol.R, sent, bits, biggest, states)
