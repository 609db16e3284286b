import random

import pytest
from hypothesis import given, settings, strategies as st

from earlycount.primitives import BasicKing
from earlycount.runtime import (NO_MSG, Envelope, Field, PayloadSchema, PipelineSlots, PipelineSystem,
                                ProtocolError, RRoundProtocol, StateSchema, Tag, TagCodec, account_bits,
                                ceil_log2, demultiplex_and_validate, multiplex, pipeline_step,
                                sanitize_state, sanitize_vector)


def test_ceil_log2():
    assert [ceil_log2(x) for x in (0, 1, 2, 3, 4, 5, 1024, 1025)] == [0, 0, 1, 2, 2, 3, 10, 11]


def test_sanitize_out_of_domain_reset():
    X = 5
    schema = StateSchema((Field("X", X + 2, 0), Field("C", 8, 0)))
    assert sanitize_state({"X": 7, "C": 3}, schema) == {"X": 0, "C": 3}


def test_sanitize_garbage_gives_defaults():
    schema = StateSchema((Field("a", 4, 1), Field("b", 9, 8), Field("c", 2, 0)))
    assert sanitize_state({"a": -1, "b": "x", "c": 2.0}, schema) == schema.defaults()
    assert sanitize_vector((None, 99), schema) == (1, 8, 0)


def test_multiplex_groups_by_receiver():
    a, b = Tag((), 0, 0), Tag((), 0, 1)
    envs = multiplex(0, [(b, 3, 1), (a, 3, 0), (a, 5, 1)])
    assert [e.receiver for e in envs] == [3, 5]
    assert envs[0].items == ((a, 0), (b, 1))        # sorted by tag
    assert multiplex(0, []) == []


def test_multiplex_rejects_duplicates():
    a = Tag((), 0, 0)
    with pytest.raises(ProtocolError):
        multiplex(1, [(a, 2, 0), (a, 2, 1)])


def test_empty_envelope_unrepresentable():
    with pytest.raises(ProtocolError):
        Envelope(0, 1, ())


def test_demultiplex_keeps_first_and_drops_invalid():
    tag = Tag((), 0, 0)
    schemas = {tag: PayloadSchema("clock", 8)}
    envs = [Envelope(2, 0, ((tag, 5), (tag, 6))),      # faulty duplicate: first wins
            Envelope(1, 0, ((tag, 8),)),               # clock = C is out of schema
            Envelope(3, 0, ((Tag((1,), 0, 0), 1), "junk"))]
    assert demultiplex_and_validate(envs, schemas) == {tag: {2: 5}}


def test_demultiplex_n_minus_one_senders():
    tag = Tag((), 1, 0)
    schemas = {tag: PayloadSchema("v", 4)}
    envs = [Envelope(s, 0, ((tag, s % 4),)) for s in range(1, 7)]
    assert len(demultiplex_and_validate(envs, schemas)[tag]) == 6


def test_account_bits_examples():
    codec = TagCodec()
    tag = Tag()
    tb = codec.bits(tag)
    env = Envelope(0, 1, ((tag, 0),))
    assert account_bits(env, 16, codec, {tag: PayloadSchema("bit", 2)}) == tb + 4
    assert account_bits(env, 16, codec, {tag: PayloadSchema("clock", 2 ** 20)}) == tb + 20


def test_account_bits_full_broadcast_round():
    # every correct node sends one 4-bit item to all 16 nodes
    codec = TagCodec()
    tag = Tag()
    schemas = {tag: PayloadSchema("v", 16)}
    total = sum(account_bits(e, 16, codec, schemas)
                for s in range(16) for e in multiplex(s, [(tag, w, 1) for w in range(16)]))
    assert total == 16 * 16 * (codec.bits(tag) + 4)


def test_tag_codec_roundtrip_unique():
    codec = TagCodec.for_tree(3, 8)
    tags = [Tag(p, s, j) for p in [(), (0,), (1,), (0, 1), (1, 1, 0)] for s in range(4) for j in range(8)]
    assert len({codec.encode(t) for t in tags}) == len(tags)


class _Const(RRoundProtocol):
    """Two rounds, ignores messages, outputs 1."""
    name = "const"
    R = 2

    def state_schema(self):
        return StateSchema((Field("a", 2),))

    def initial(self, v, inp):
        return (1,)

    def schema(self, j):
        return PayloadSchema("bit", 2)

    def send(self, j, v, st):
        return []

    def receive(self, j, v, st, inbox):
        return st

    def output(self, st):
        return st[0]


def test_pipeline_flush_constant_protocol():
    p = _Const(3, 2)
    sys = PipelineSystem(p, slots=[PipelineSlots([(0,), (7,)]) for _ in range(3)])
    outs = [sys.step([None] * 3) for _ in range(4)]
    assert outs[0] == [0, 0, 0]          # corrupted slot finishes in round 1
    assert all(o == [1, 1, 1] for o in outs[1:])


def test_king_pipeline_one_output_per_round_from_round_R():
    p = BasicKing(4, 8)
    sys = PipelineSystem(p, slots=[PipelineSlots([(1, 0, 0, 0, 0, 0)] * 3) for _ in range(4)])
    outs = [sys.step([(5, 0)] * 4) for _ in range(8)]
    assert all(o == [5] * 4 for o in outs[2:])


def test_slot_corruption_is_isolated():
    p = BasicKing(4, 8)
    sys = PipelineSystem(p)
    for _ in range(5):
        sys.step([(3, 1)] * 4)
    sys.slots[2].slots[1] = (6, 4, 1, 6, 1, 6)       # corrupt one node's slot 1
    outs = [sys.step([(3, 1)] * 4) for _ in range(4)]
    bad = sum(o != [3] * 4 for o in outs)
    assert bad <= p.R - 1


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_pipeline_flush_property(data):
    """Outputs from round R+1 on do not depend on the initial slot contents."""
    p = BasicKing(4, 4)
    schema = p.state_schema()
    rnd = random.Random(data.draw(st.integers(0, 10 ** 6)))

    def garbage():
        return [PipelineSlots([tuple(rnd.randrange(-1, f.size + 2) for f in schema.fields)
                               for _ in range(p.R)]) for _ in range(4)]

    inputs = [[(rnd.randrange(4), rnd.choice([None, 0, 1, 2, 3])) for _ in range(4)] for _ in range(8)]
    a, b = PipelineSystem(p, garbage()), PipelineSystem(p, garbage())
    ra = [a.step(i) for i in inputs]
    rb = [b.step(i) for i in inputs]
    assert ra[p.R:] == rb[p.R:]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-5, 40), min_size=6, max_size=6), st.integers(0, 2))
def test_send_purity_and_drop_safety(raw, j):
    p = BasicKing(4, 8)
    schema = p.state_schema()
    state = sanitize_vector(raw, schema)
    assert p.send(j, 0, state) == p.send(j, 0, state)
    inbox = {w: c for w, c in enumerate(raw[:4]) if p.schema(j).valid(c)}
    new = p.receive(j, 0, state, inbox)
    assert sanitize_vector(new, schema) == tuple(new)


def test_pipeline_step_single_node_matches_send():
    p = BasicKing(4, 8)
    slots = PipelineSlots.blank(p)
    new, outbound, out = pipeline_step(slots, p, 0, (2, 0), {})
    assert {(j, w) for j, w, _ in outbound} >= {(0, w) for w in range(4)}
    assert all(c != NO_MSG for _, _, c in outbound)
