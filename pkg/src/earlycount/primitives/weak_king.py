"""Weak king consensus (6 rounds) over an expander.

Agreement is only promised without faults; validity always holds.  The
query span for k alerts is ceil(2k / eps_node) where eps_node is the
certified edge expansion divided by the degree, i.e. a lower bound on the
fraction of any small set that has a neighbor outside it.
"""
from __future__ import annotations

from ..runtime import Field, PayloadSchema, RRoundProtocol, StateSchema
from .expander import ExpanderGraph, build_expander
from .king import leader_code


def query_set(v: int, m: int, span: int) -> list[int]:
    if span + 1 >= m:
        return list(range(m))
    return [(v + i) % m for i in range(span + 1)]


class WeakKing(RRoundProtocol):
    """Fields: x, lead, alert, z (D = none), k, reqfrom, reqall, req5, out."""
    name = "king_weak"
    R = 6

    def __init__(self, m: int, domain: int, expander: ExpanderGraph | None = None):
        super().__init__(m, domain)
        if m >= 2:
            self.graph = expander if expander is not None else build_expander(m)
            if self.graph.n != m:
                raise ValueError("expander size mismatch")
            nbrs = self.graph.neighbors
        else:
            self.graph = None
            nbrs = (frozenset(),)
        self.nbrs = tuple(tuple(sorted(s)) for s in nbrs)
        self.span = tuple(self.graph.query_span(k) if self.graph else 0 for k in range(m + 1))
        self.queries = tuple(tuple(query_set(v, m, self.span[k]) if k else ()
                                   for k in range(m + 1)) for v in range(m))
        self._tail = tuple(f.default for f in self.state_schema().fields[2:])

    def state_schema(self):
        D, m = self.D, self.m
        return StateSchema((Field("x", D), Field("lead", m + 1, m), Field("alert", 2),
                            Field("z", D + 1, D), Field("k", m + 1), Field("reqfrom", 1 << m),
                            Field("reqall", 2), Field("req5", 1 << m), Field("out", D + 1, D)))

    def initial(self, v, inp):
        x, lead = inp
        return (x, leader_code(lead, self.m)) + self._tail

    def schema(self, j):
        if j in (1, 2, 4):
            return PayloadSchema(("alert", "req", "", "req")[j - 1], 1)
        return PayloadSchema("value", self.D)

    def send(self, j, v, st):
        m = self.m
        x, lead = st[0], st[1]
        if j == 0:
            dest = set(self.nbrs[v])
            if lead != m:
                dest.add(lead)
            return [(w, x) for w in sorted(dest)]
        if j == 1:
            return [(w, 0) for w in range(m)] if st[2] else []
        if j == 2:
            return [(w, 0) for w in self.queries[v][st[4]]]
        if j == 3:
            mask = st[5]
            return [(w, x) for w in range(m) if mask >> w & 1]
        if j == 4:
            return [(w, 0) for w in range(m)] if st[6] else []
        if lead != v:
            mask = st[7]
            return [(w, x) for w in range(m) if mask >> w & 1]
        if st[3] != self.D:
            return [(w, st[3]) for w in range(m)]
        return []

    def receive(self, j, v, st, inbox):
        st = list(st)
        m = self.m
        x, lead = st[0], st[1]
        if j == 0:
            st[2] = int(any(w in inbox and inbox[w] != x for w in self.nbrs[v]))
            z = self.D
            if lead == v and len(inbox) == m:
                counts: dict[int, int] = {}
                for c in inbox.values():
                    counts[c] = counts.get(c, 0) + 1
                z = min(counts, key=lambda c: (-counts[c], c))
            st[3] = z
        elif j == 1:
            st[4] = len(inbox)
        elif j == 2:
            mask = 0
            for w in inbox:
                mask |= 1 << w
            st[5] = mask
        elif j == 3:
            q = self.queries[v][st[4]]
            differ = sum(1 for w in q if w in inbox and inbox[w] != x)
            st[6] = int(len(q) > 0 and 2 * differ >= len(q))
        elif j == 4:
            mask = 0
            for w in inbox:
                mask |= 1 << w
            st[7] = mask
        else:
            if lead == m:
                st[8] = self.D
            else:
                differ = sum(1 for c in inbox.values() if c != x)
                if differ >= self.t + 1 and lead in inbox:
                    st[8] = inbox[lead]
                else:
                    st[8] = x
        return tuple(st)

    def output(self, st):
        out = st[8]
        return None if out >= self.D else out

    def role(self, j):
        return ("value", "alert", "req", "reply", "req", "leader")[j]
