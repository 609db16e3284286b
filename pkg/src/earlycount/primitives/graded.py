"""Graded agreement (2 rounds) and its weak variant with a participation bit."""
from __future__ import annotations

from ..runtime import Field, PayloadSchema, RRoundProtocol, StateSchema


def count_equal(inbox, x) -> int:
    return sum(1 for c in inbox.values() if c == x)


def least_with_support(inbox, domain: int, threshold: int):
    """Least value in [domain] received at least ``threshold`` times, else None."""
    counts: dict[int, int] = {}
    for c in inbox.values():
        if c < domain:
            counts[c] = counts.get(c, 0) + 1
    best = None
    for value, k in counts.items():
        if k >= threshold and (best is None or value < best):
            best = value
    return best


def graded_decision(inbox, x: int, domain: int, n: int, t: int, strong: bool):
    """Shared output rule.

    ``strong`` selects the graded-agreement test (x received n-t times);
    otherwise the weak test (at most t received messages differ from x).
    """
    if strong:
        top = count_equal(inbox, x) >= n - t
    else:
        top = sum(1 for c in inbox.values() if c != x) <= t
    if top:
        return x, 1
    y = least_with_support(inbox, domain, t + 1)
    if y is not None:
        return y, 0
    return x, 0


class GradedAgreement(RRoundProtocol):
    """Fields: x, echo, y, g."""
    name = "graded_agreement"
    R = 2

    def state_schema(self):
        D = self.D
        return StateSchema((Field("x", D), Field("echo", 2), Field("y", D), Field("g", 2)))

    def initial(self, v, inp):
        return (inp, 0, 0, 0)

    def schema(self, j):
        return PayloadSchema("value", self.D)

    def send(self, j, v, st):
        if j == 0 or st[1]:
            return [(w, st[0]) for w in range(self.m)]
        return []

    def receive(self, j, v, st, inbox):
        x = st[0]
        if j == 0:
            return (x, int(count_equal(inbox, x) >= self.m - self.t), 0, 0)
        y, g = graded_decision(inbox, x, self.D, self.m, self.t, strong=True)
        return (x, st[1], y, g)

    def output(self, st):
        return (st[2], st[3])

    def role(self, j):
        return "value" if j == 0 else "echo"


class WeakGradedAgreement(RRoundProtocol):
    """Fields: x, s, wsend (0 silent / 1 value / 2 NACK), y, g.

    The round-2 schema has one extra code, ``D``, for NACK.
    """
    name = "weak_graded_agreement"
    R = 2

    def state_schema(self):
        D = self.D
        return StateSchema((Field("x", D), Field("s", 2), Field("wsend", 3),
                            Field("y", D), Field("g", 2)))

    def initial(self, v, inp):
        x, s = inp
        return (x, int(bool(s)), 0, 0, 0)

    def schema(self, j):
        if j == 0:
            return PayloadSchema("value", self.D)
        return PayloadSchema("value|NACK", self.D + 1, ("NACK",))

    def send(self, j, v, st):
        if j == 0:
            return [(w, st[0]) for w in range(self.m)] if st[1] else []
        if st[2] == 1:
            return [(w, st[0]) for w in range(self.m)]
        if st[2] == 2:
            return [(w, self.D) for w in range(self.m)]
        return []

    def receive(self, j, v, st, inbox):
        x, s = st[0], st[1]
        if j == 0:
            if not s:
                return (x, s, 0, 0, 0)
            differ = sum(1 for c in inbox.values() if c != x)
            return (x, s, 1 if differ <= self.t else 2, 0, 0)
        y, g = graded_decision(inbox, x, self.D, self.m, self.t, strong=False)
        return (x, s, st[2], y, g)

    def output(self, st):
        return (st[3], st[4])

    def role(self, j):
        return "value" if j == 0 else "echo"
