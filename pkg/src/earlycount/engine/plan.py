"""Integer tables describing a composed protocol for the compiled engine."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..adversary import channel_info
from ..counting import STREAM_FILT, STREAM_P, ProtocolTree, filter_params, stream_protocol
from ..primitives.king import BasicKing, EfficientKing
from ..primitives.weak_king import WeakKing
from ..runtime import Padded, item_bits
from .snapshot import state_layout

# instance table columns (mirrored in _cengine.pyx)
(K_KIND, K_LO, K_M, K_C, K_CH0, K_CH1, K_K0, K_K1, K_X, K_CF0, K_CF1, K_SPLIT,
 K_OFF_C, K_OFF_S0, K_OFF_S1, K_OFF_F0, K_OFF_F1, K_OFF_P, K_OFF_L, K_W0, K_W1,
 K_T0, K_T1, K_MSG, K_NBR, K_SPAN, K_DEF0, K_DEF1, K_CHAN) = range(29)
NCOL = 29
KIND_TRIVIAL, KIND_A, KIND_B = 0, 1, 2
PROTO_BASIC, PROTO_EFFICIENT, PROTO_WEAK = 0, 1, 2
CH_SIZE, CH_KIND, CH_ROLE, CH_CF, CH_X, CH_TAGID, CH_BITS = range(7)
NCHCOL = 7
MAX_M = 62


def _proto_type(proto) -> int:
    base = proto.inner if isinstance(proto, Padded) else proto
    if isinstance(base, EfficientKing):
        return PROTO_EFFICIENT
    if isinstance(base, WeakKing):
        return PROTO_WEAK
    if isinstance(base, BasicKing):
        return PROTO_BASIC
    raise TypeError(f"no compiled kernel for {type(base).__name__}")


@dataclass
class Plan:
    inst: np.ndarray
    chan: np.ndarray
    nbr: np.ndarray          # per instance: m rows of (count, 8 neighbors)
    span: np.ndarray
    defs: np.ndarray
    state_size: int
    msg_size: int
    keys: list               # (key, offset, shape) in layout order
    inst_total: int          # sum of instance sizes


def build_plan(tree: ProtocolTree) -> Plan:
    from .pyengine import _role
    R, n = tree.R, tree.n
    if max(s.m for s in tree.instances) > MAX_M:
        raise ValueError(f"compiled engine supports instances of at most {MAX_M} nodes")
    layout = state_layout(tree)
    offsets, keys, pos = {}, [], 0
    for e in layout:
        offsets[e.key] = pos
        keys.append((e.key, pos, e.shape))
        pos += int(np.prod(e.shape))
    schemas = tree.schemas()
    codec = tree.codec()
    nchan = 2 * R + 2
    inst = np.zeros((len(tree.instances), NCOL), dtype=np.int64)
    chan = np.zeros((len(tree.instances) * nchan, NCHCOL), dtype=np.int64)
    chan[:, CH_SIZE] = 1
    nbr_rows, span_rows, defs = [], [], []
    msg_pos = nbr_pos = span_pos = 0
    for spec in tree.instances:
        i, m = spec.index, spec.m
        row = inst[i]
        row[K_KIND] = {"trivial": KIND_TRIVIAL, "A": KIND_A, "B": KIND_B}[spec.kind]
        row[K_LO], row[K_M], row[K_C] = spec.lo, m, spec.C
        row[K_OFF_C] = offsets[f"{i}.C"]
        row[K_CH0] = spec.children[0] if spec.children else -1
        row[K_CH1] = spec.children[1] if len(spec.children) > 1 else -1
        row[K_CHAN] = i * nchan
        if spec.kind == "trivial":
            continue
        cfg = spec.config
        row[K_MSG] = msg_pos
        msg_pos += nchan * m * m
        if spec.kind == "A":
            row[K_K0], row[K_K1], row[K_X] = cfg.k[0], cfg.k[1], cfg.X
            row[K_CF0], row[K_CF1], row[K_SPLIT] = cfg.child_modulus(0), cfg.child_modulus(1), cfg.split
            row[K_OFF_S0], row[K_OFF_S1] = offsets[f"{i}.king0"], offsets[f"{i}.king1"]
            row[K_OFF_F0], row[K_OFF_F1] = offsets[f"{i}.filt0.{_first(tree)}"], offsets[f"{i}.filt1.{_first(tree)}"]
        else:
            row[K_K0], row[K_X], row[K_CF0], row[K_SPLIT] = cfg.k, cfg.X, cfg.child_modulus(), 0
            row[K_OFF_S0], row[K_OFF_S1] = offsets[f"{i}.king"], offsets[f"{i}.weak"]
            row[K_OFF_F0] = offsets[f"{i}.filt.{_first(tree)}"]
            row[K_OFF_P], row[K_OFF_L] = offsets[f"{i}.P"], offsets[f"{i}.L"]
        for s, (kw, kt, kd) in enumerate(((K_W0, K_T0, K_DEF0), (K_W1, K_T1, K_DEF1))):
            proto = stream_protocol(tree, spec, s)
            fields = proto.state_schema().fields
            row[kw] = len(fields)
            row[kt] = _proto_type(proto)
            row[kd] = len(defs)
            defs.extend(f.default for f in fields)
            if row[kt] == PROTO_WEAK:
                base = proto.inner if isinstance(proto, Padded) else proto
                row[K_NBR] = nbr_pos
                for v in range(m):
                    nb = base.nbrs[v]
                    nbr_rows.append([len(nb)] + list(nb) + [0] * (8 - len(nb)))
                nbr_pos += m
                row[K_SPAN] = span_pos
                span_rows.extend(base.span)
                span_pos += m + 1
        for tag, spec2, stream, slot in [c for c in tree.channels() if c[1] is spec]:
            c = stream * R + slot if stream < 2 else 2 * R + (stream - 2)
            schema = schemas[tag]
            Cf = X = 0
            if stream >= 2 and not (spec.kind == "B" and stream == STREAM_P):
                p = filter_params(spec, stream if spec.kind == "A" else STREAM_FILT)
                Cf, X = p.C, p.X
            info = channel_info(schema, _role(tree, spec, stream, slot), Cf, X)
            crow = chan[i * nchan + c]
            crow[CH_SIZE], crow[CH_KIND], crow[CH_ROLE] = info.size, info.kind, info.role
            crow[CH_CF], crow[CH_X] = Cf, X
            crow[CH_TAGID] = tree.tag_id(spec, stream, slot)
            crow[CH_BITS] = item_bits(schema, codec.bits(tag), n)
    return Plan(inst, chan,
                np.asarray(nbr_rows or [[0] * 9], dtype=np.int64),
                np.asarray(span_rows or [0], dtype=np.int64),
                np.asarray(defs or [0], dtype=np.int64),
                pos, max(msg_pos, 1), keys, sum(s.m for s in tree.instances))


def _first(tree) -> str:
    return "mem" if tree.stack == "efficient" else "mlast"


def flatten(snapshot: dict, plan: Plan) -> np.ndarray:
    flat = np.zeros(plan.state_size, dtype=np.int64)
    for key, off, shape in plan.keys:
        size = int(np.prod(shape))
        flat[off:off + size] = np.asarray(snapshot[key], dtype=np.int64).reshape(-1)
    return flat


def unflatten(flat: np.ndarray, plan: Plan) -> dict:
    out = {}
    for key, off, shape in plan.keys:
        size = int(np.prod(shape))
        out[key] = flat[off:off + size].reshape(shape).copy()
    return out
