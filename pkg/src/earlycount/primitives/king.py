"""King consensus: the 3-round basic protocol, graded king consensus and the
8-round protocol built from graded king consensus plus weak graded agreement.

Leader inputs use local index ``m`` for "no leader"; outputs use ``None``
for the king-consensus bottom (stored as code ``D`` in the ``out`` field).
"""
from __future__ import annotations

from ..runtime import Field, PayloadSchema, RRoundProtocol, StateSchema
from .graded import count_equal, graded_decision, least_with_support


def leader_code(lead, m: int) -> int:
    return m if lead is None else int(lead)


class _KingBase(RRoundProtocol):
    def lead_field(self):
        return Field("lead", self.m + 1, self.m)

    def output(self, st):
        out = st[-1]
        return None if out >= self.D else out

    def initial(self, v, inp):
        x, lead = inp
        tail = self.__dict__.get("_tail")
        if tail is None:
            tail = self._tail = tuple(f.default for f in self.state_schema().fields[2:])
        return (x, leader_code(lead, self.m)) + tail


class BasicKing(_KingBase):
    """Fields: x, lead, echo, z, g, out."""
    name = "king_basic"
    R = 3

    def state_schema(self):
        D, m = self.D, self.m
        return StateSchema((Field("x", D), self.lead_field(), Field("echo", 2),
                            Field("z", D), Field("g", 2), Field("out", D + 1, D)))

    def schema(self, j):
        return PayloadSchema("value", self.D)

    def send(self, j, v, st):
        m = self.m
        if j == 0:
            return [(w, st[0]) for w in range(m)]
        if j == 1:
            return [(w, st[0]) for w in range(m)] if st[2] else []
        if st[1] == v:
            return [(w, st[3]) for w in range(m)]
        return []

    def receive(self, j, v, st, inbox):
        x, lead, echo, z, g, out = st
        if j == 0:
            echo = int(count_equal(inbox, x) >= self.m - self.t)
        elif j == 1:
            z, g = graded_decision(inbox, x, self.D, self.m, self.t, strong=True)
        else:
            if lead == self.m:
                out = self.D
            elif g == 0 and lead in inbox:
                out = inbox[lead]
            else:
                out = z
        return (x, lead, echo, z, g, out)

    def reference(self, j, st):
        return st[3] if j == 2 else st[0]

    def role(self, j):
        return ("value", "echo", "leader")[j]


def _graded_king_round(self, j, v, st, inbox):
    """Rounds 0..3 shared by GradedKing and EfficientKing (fields 0..5)."""
    st = list(st)
    x, lead = st[0], st[1]
    m = self.m
    if j == 0:
        st[2] = int(lead == v and count_equal(inbox, x) >= m - self.t)
    elif j == 1:
        fwd = self.D
        if lead != m and lead in inbox and inbox[lead] != x:
            fwd = inbox[lead]
        st[3] = fwd
    elif j == 2:
        mask = 0
        for w, c in inbox.items():
            if c == x:
                mask |= 1 << w
        st[4] = mask
    else:
        y = least_with_support(inbox, self.D, self.t + 1)
        st[5] = x if y is None else y
    return st


def _graded_king_send(self, j, v, st):
    x, lead = st[0], st[1]
    m = self.m
    if j == 0:
        return [(lead, x)] if lead != m else []
    if j == 1:
        return [(w, x) for w in range(m)] if (lead == v and st[2]) else []
    if j == 2:
        return [(w, st[3]) for w in range(m)] if st[3] != self.D else []
    mask = st[4]
    return [(w, x) for w in range(m) if mask >> w & 1]


_GK_ROLES = ("to_leader", "leader", "forward", "reply")


class GradedKing(_KingBase):
    """Fields: x, lead, h, fwd, resp (bitmask of repliers), y.  Output (y, h)."""
    name = "graded_king"
    R = 4

    def state_schema(self):
        D, m = self.D, self.m
        return StateSchema((Field("x", D), self.lead_field(), Field("h", 2),
                            Field("fwd", D + 1, D), Field("resp", 1 << m), Field("y", D)))

    def schema(self, j):
        return PayloadSchema("value", self.D)

    def send(self, j, v, st):
        return _graded_king_send(self, j, v, st)

    def receive(self, j, v, st, inbox):
        return tuple(_graded_king_round(self, j, v, st, inbox))

    def output(self, st):
        return (st[5], st[2])

    def role(self, j):
        return _GK_ROLES[j]


class EfficientKing(_KingBase):
    """Fields: x, lead, h, fwd, resp, k, s, wsend, z, gz, out."""
    name = "king_efficient"
    R = 8

    def state_schema(self):
        D, m = self.D, self.m
        return StateSchema((Field("x", D), self.lead_field(), Field("h", 2),
                            Field("fwd", D + 1, D), Field("resp", 1 << m), Field("k", D),
                            Field("s", 2), Field("wsend", 3), Field("z", D), Field("gz", 2),
                            Field("out", D + 1, D)))

    def schema(self, j):
        if j == 4:
            return PayloadSchema("runGC", 1, ("runGC",))
        if j == 6:
            return PayloadSchema("value|NACK", self.D + 1, ("NACK",))
        return PayloadSchema("value", self.D)

    def send(self, j, v, st):
        m = self.m
        if j < 4:
            return _graded_king_send(self, j, v, st)
        if j == 4:
            return [(w, 0) for w in range(m)] if (st[1] == v and st[2] == 0) else []
        if j == 5:
            return [(w, st[5]) for w in range(m)] if st[6] else []
        if j == 6:
            if st[7] == 1:
                return [(w, st[5]) for w in range(m)]
            if st[7] == 2:
                return [(w, self.D) for w in range(m)]
            return []
        return [(w, st[8]) for w in range(m)] if st[1] == v else []

    def receive(self, j, v, st, inbox):
        if j < 4:
            return tuple(_graded_king_round(self, j, v, st, inbox))
        st = list(st)
        lead, k = st[1], st[5]
        if j == 4:
            st[6] = int(lead != self.m and lead in inbox)
        elif j == 5:
            if st[6]:
                differ = sum(1 for c in inbox.values() if c != k)
                st[7] = 1 if differ <= self.t else 2
            else:
                st[7] = 0
        elif j == 6:
            st[8], st[9] = graded_decision(inbox, k, self.D, self.m, self.t, strong=False)
        else:
            if lead == self.m:
                st[10] = self.D
            elif st[9] == 0 and lead in inbox:
                st[10] = inbox[lead]
            else:
                st[10] = st[8]
        return tuple(st)

    def reference(self, j, st):
        if j < 4:
            return st[0]
        if j < 7:
            return st[5]
        return st[8]

    def role(self, j):
        if j < 4:
            return _GK_ROLES[j]
        return ("leader_flag", "value", "echo", "leader")[j - 4]
