"""Flat, engine-neutral layout of the complete state of a composed protocol.

A snapshot is a ``dict`` mapping ``"<instance index>.<field>"`` to an int64
array whose first axis is the local node index of the instance.  Both
engines load and export this format, which is what makes them comparable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..counting import (ProtocolTree, STREAM_FILT, STREAM_FILT0, STREAM_KING, STREAM_WEAK,
                        filter_params, stream_protocol)


@dataclass(frozen=True)
class Entry:
    key: str
    shape: tuple
    sizes: np.ndarray       # broadcastable to shape; values live in [0, size)
    defaults: np.ndarray    # broadcastable to shape
    group: str              # clock | pipeline | filter | phase

    def default_array(self) -> np.ndarray:
        return np.broadcast_to(self.defaults, self.shape).astype(np.int64).copy()


def _scalar(key, m, size, default, group):
    return Entry(key, (m,), np.asarray(size, dtype=np.int64), np.asarray(default, dtype=np.int64), group)


def _pipeline(key, m, proto):
    fields = proto.state_schema().fields
    sizes = np.array([f.size for f in fields], dtype=np.int64)
    defaults = np.array([f.default for f in fields], dtype=np.int64)
    return Entry(key, (m, proto.R, len(fields)), sizes, defaults, "pipeline")


def _filter_entries(prefix, m, p, efficient):
    C = p.C
    if not efficient:
        return [_scalar(f"{prefix}.mlast", m, C + 1, C, "filter"),
                _scalar(f"{prefix}.M", m, C + 1, C, "filter"),
                _scalar(f"{prefix}.X", m, p.X + 1, 0, "filter"),
                _scalar(f"{prefix}.F", m, C + 1, C, "filter")]
    two = np.asarray(2, dtype=np.int64)
    return [Entry(f"{prefix}.mem", (m, m), np.asarray(C, dtype=np.int64), np.asarray(0, dtype=np.int64), "filter"),
            Entry(f"{prefix}.s", (m, m), two, np.asarray(0, dtype=np.int64), "filter"),
            _scalar(f"{prefix}.Fh", m, C, 0, "filter"),
            _scalar(f"{prefix}.X", m, p.X + 2, 0, "filter"),
            _scalar(f"{prefix}.N", m, m, 0, "filter"),
            _scalar(f"{prefix}.Tc", m, p.tsize, 0, "filter"),
            _scalar(f"{prefix}.a", m, 2, 0, "filter"),
            _scalar(f"{prefix}.F", m, C + 1, C, "filter")]


def state_layout(tree: ProtocolTree) -> list[Entry]:
    out: list[Entry] = []
    eff = tree.stack == "efficient"
    for spec in tree.instances:
        i, m = spec.index, spec.m
        out.append(_scalar(f"{i}.C", m, spec.C, 0, "clock"))
        if spec.kind == "A":
            for b in (0, 1):
                out.append(_pipeline(f"{i}.king{b}", m, stream_protocol(tree, spec, b)))
            for b in (0, 1):
                out += _filter_entries(f"{i}.filt{b}", m, filter_params(spec, STREAM_FILT0 + b), eff)
        elif spec.kind == "B":
            out.append(_scalar(f"{i}.P", m, spec.R, 0, "phase"))
            out.append(_scalar(f"{i}.L", m, spec.R + 1, 0, "phase"))
            out.append(_pipeline(f"{i}.king", m, stream_protocol(tree, spec, STREAM_KING)))
            out.append(_pipeline(f"{i}.weak", m, stream_protocol(tree, spec, STREAM_WEAK)))
            out += _filter_entries(f"{i}.filt", m, filter_params(spec, STREAM_FILT), eff)
    return out


def default_snapshot(tree: ProtocolTree) -> dict[str, np.ndarray]:
    return {e.key: e.default_array() for e in state_layout(tree)}


def sanitize_snapshot(snap: dict, tree: ProtocolTree) -> dict[str, np.ndarray]:
    """Missing entries take defaults, out-of-domain values are reset to defaults."""
    out = {}
    for e in state_layout(tree):
        d = e.default_array()
        if e.key not in snap:
            out[e.key] = d
            continue
        a = np.asarray(snap[e.key])
        if a.shape != e.shape:
            raise ValueError(f"snapshot entry {e.key} has shape {a.shape}, expected {e.shape}")
        if a.dtype.kind not in "iu":
            raise ValueError(f"snapshot entry {e.key} must be integer")
        a = a.astype(np.int64)
        ok = (a >= 0) & (a < np.broadcast_to(e.sizes, e.shape))
        out[e.key] = np.where(ok, a, d)
    unknown = set(snap) - set(out)
    if unknown:
        raise ValueError(f"unknown snapshot entries: {sorted(unknown)[:5]}")
    return out


def snapshots_equal(a: dict, b: dict) -> bool:
    return a.keys() == b.keys() and all(np.array_equal(a[k], b[k]) for k in a)
