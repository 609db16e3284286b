"""Reference engine: per-node machines driven through the runtime's
multiplexing, validation and bit accounting."""
from __future__ import annotations

import numpy as np

from ..adversary import Strategy, adversarial_code, channel_info
from ..counting import (STREAM_FILT, STREAM_P, ProtocolTree, TemplateANode, TemplateBNode,
                        TrivialNode, make_node)
from ..filtering import BasicFilterState, EfficientFilterState
from ..runtime import NO_MSG, Envelope, account_bits, demultiplex_and_validate, multiplex
from .snapshot import sanitize_snapshot


def _load_filter(slot, snap, prefix, v):
    if isinstance(slot.state, EfficientFilterState):
        slot.state = EfficientFilterState(
            [int(c) for c in snap[prefix + ".mem"][v]], [int(c) for c in snap[prefix + ".s"][v]],
            int(snap[prefix + ".Fh"][v]), int(snap[prefix + ".X"][v]), int(snap[prefix + ".N"][v]),
            int(snap[prefix + ".Tc"][v]), int(snap[prefix + ".a"][v]), int(snap[prefix + ".F"][v]))
    else:
        slot.state = BasicFilterState(int(snap[prefix + ".mlast"][v]), int(snap[prefix + ".M"][v]),
                                      int(snap[prefix + ".X"][v]), int(snap[prefix + ".F"][v]))


def _dump_filter(slot, out, prefix, v):
    st = slot.state
    if isinstance(st, EfficientFilterState):
        out[prefix + ".mem"][v] = st.mem
        out[prefix + ".s"][v] = st.s
        for name in ("Fh", "X", "N", "Tc", "a", "F"):
            out[f"{prefix}.{name}"][v] = getattr(st, name)
    else:
        for name in ("mlast", "M", "X", "F"):
            out[f"{prefix}.{name}"][v] = getattr(st, name)


def _load_stream(stream, arr, v):
    stream.slots = [tuple(int(c) for c in arr[v, j]) for j in range(arr.shape[1])]


def load_machine(mach, snap):
    spec = mach.spec
    i = spec.index
    v = getattr(mach, "v", 0)
    mach.C = int(snap[f"{i}.C"][v])
    if isinstance(mach, TemplateANode):
        for b in (0, 1):
            _load_stream(mach.streams[b], snap[f"{i}.king{b}"], v)
            _load_filter(mach.filters[b], snap, f"{i}.filt{b}", v)
    elif isinstance(mach, TemplateBNode):
        mach.P = int(snap[f"{i}.P"][v])
        mach.L = int(snap[f"{i}.L"][v])
        _load_stream(mach.streams[0], snap[f"{i}.king"], v)
        _load_stream(mach.streams[1], snap[f"{i}.weak"], v)
        _load_filter(mach.filter, snap, f"{i}.filt", v)


def dump_machine(mach, out):
    spec = mach.spec
    i = spec.index
    v = getattr(mach, "v", 0)
    out[f"{i}.C"][v] = mach.C
    if isinstance(mach, TemplateANode):
        for b in (0, 1):
            out[f"{i}.king{b}"][v] = np.asarray(mach.streams[b].slots)
            _dump_filter(mach.filters[b], out, f"{i}.filt{b}", v)
    elif isinstance(mach, TemplateBNode):
        out[f"{i}.P"][v] = mach.P
        out[f"{i}.L"][v] = mach.L
        out[f"{i}.king"][v] = np.asarray(mach.streams[0].slots)
        out[f"{i}.weak"][v] = np.asarray(mach.streams[1].slots)
        _dump_filter(mach.filter, out, f"{i}.filt", v)


def _role(tree, spec, stream, slot):
    from ..counting import stream_protocol
    if stream < 2:
        return stream_protocol(tree, spec, stream).role(slot)
    return "phase" if (spec.kind == "B" and stream == STREAM_P) else "filter"


class PyEngine:
    """One simulation; ``step()`` executes one synchronous round."""
    name = "python"

    def __init__(self, tree: ProtocolTree, faulty=(), strategy: Strategy | None = None,
                 snapshot: dict | None = None, seed: int = 0):
        self.tree = tree
        self.n = tree.n
        self.faulty = frozenset(faulty)
        self.strategy = strategy or Strategy()
        self.seed = seed
        self.round = 0
        self.schemas = tree.schemas()
        self.codec = tree.codec()
        self.nodes = [make_node(tree, tree.root, g) for g in range(self.n)]
        self.machines = []
        for g, node in enumerate(self.nodes):
            table = {}
            for mach in node.walk():
                mach.v = g - mach.spec.lo
                table[mach.spec.index] = mach
            self.machines.append(table)
        self.offsets = np.cumsum([0] + [s.m for s in tree.instances])
        self.channels = []
        for tag, spec, stream, slot in tree.channels():
            schema = self.schemas[tag]
            C, X = 0, 0
            if stream >= 2 and not (spec.kind == "B" and stream == STREAM_P):
                from ..counting import filter_params
                p = filter_params(spec, stream if spec.kind == "A" else STREAM_FILT)
                C, X = p.C, p.X
            info = channel_info(schema, _role(tree, spec, stream, slot), C, X)
            self.channels.append((tag, spec, tree.tag_id(spec, stream, slot), info))
        self.by_instance: dict[int, list] = {}
        for ch in self.channels:
            self.by_instance.setdefault(ch[1].index, []).append(ch)
        if snapshot is not None:
            self.load(snapshot)

    def load(self, snapshot):
        snap = sanitize_snapshot(snapshot, self.tree)
        for table in self.machines:
            for mach in table.values():
                load_machine(mach, snap)

    def export(self) -> dict:
        from .snapshot import default_snapshot
        out = default_snapshot(self.tree)
        for table in self.machines:
            for mach in table.values():
                dump_machine(mach, out)
        return out

    def _faulty_items(self, g, honest, r):
        st = self.strategy
        items: dict[int, list] = {}
        for idx in self.tree.chain(g):
            for tag, spec, tagid, info in self.by_instance.get(idx, ()):
                sref = self.machines[g][idx].reference(tag)
                for w in spec.nodes():
                    rref = self.machines[w][idx].reference(tag)
                    code = adversarial_code(st.code, st.seed, st.delta, st.split, r, tagid, g, w,
                                            w - spec.lo, spec.m, info,
                                            honest.get((tag, w), NO_MSG), sref, rref)
                    if code != NO_MSG:
                        items.setdefault(w, []).append((tag, code))
        return items

    def step(self) -> dict:
        self.round += 1
        r = self.round
        n = self.n
        outbound = [node.send() for node in self.nodes]
        mailbox: list[list[Envelope]] = [[] for _ in range(n)]
        bits = np.zeros(n, dtype=np.int64)
        adv_items = 0
        for g in range(n):
            if g in self.faulty:
                honest = {(tag, w): c for tag, w, c in outbound[g]}
                for w, items in sorted(self._faulty_items(g, honest, r).items()):
                    mailbox[w].append(Envelope(g, w, tuple(sorted(items))))
                    adv_items += len(items)
                continue
            for env in multiplex(g, outbound[g]):
                bits[g] += account_bits(env, n, self.codec, self.schemas)
                mailbox[env.receiver].append(env)
        for g in range(n):
            self.nodes[g].receive(demultiplex_and_validate(mailbox[g], self.schemas))
        return self.record(bits, adv_items)

    def record(self, bits, adv_items) -> dict:
        tree, n = self.tree, self.n
        root = tree.root
        inst = np.zeros(int(self.offsets[-1]), dtype=np.int64)
        for table in self.machines:
            for idx, mach in table.items():
                inst[self.offsets[idx] + mach.v] = mach.C
        nb = 2 if root.kind == "A" else 1
        F = np.full((n, nb), -1, dtype=np.int64)
        lead = np.full((n, 2), -1, dtype=np.int64)
        kout = np.full((n, 2), -1, dtype=np.int64)
        for g, node in enumerate(self.nodes):
            if isinstance(node, TrivialNode):
                continue
            filters = node.filters if isinstance(node, TemplateANode) else [node.filter]
            for b, fs in enumerate(filters):
                F[g, b] = fs.F if fs.F < fs.p.C else -1
            for s in (0, 1):
                sl = node.streams[s].seed_lead
                lead[g, s] = -1 if sl is None else sl
                o = node.last_out[s]
                kout[g, s] = -1 if o is None else o
        return {"C": np.array([node.output for node in self.nodes], dtype=np.int64),
                "bits": bits, "inst": inst, "F": F, "lead": lead, "kout": kout,
                "adv_items": adv_items}
