"""Independent reference implementations used as test oracles.

These are written directly from the protocol listings, whole-system and
round by round, without sharing code with the package.  Faulty traffic is
given as explicit tables: faulty[j][(sender, receiver)] = code or None.
"""
from collections import Counter


def graded_agreement_oracle(n, inputs, faulty_set, faulty_msgs):
    t = (n - 1) // 3
    correct = [v for v in range(n) if v not in faulty_set]

    def deliver(j, honest):
        boxes = {v: {} for v in correct}
        for v in correct:
            for s in range(n):
                if s in faulty_set:
                    c = faulty_msgs[j].get((s, v))
                else:
                    c = honest.get(s)
                if c is not None:
                    boxes[v][s] = c
        return boxes

    r1 = deliver(0, {v: inputs[v] for v in correct})
    echo = {v: inputs[v] for v in correct if Counter(r1[v].values())[inputs[v]] >= n - t}
    r2 = deliver(1, echo)
    out = {}
    for v in correct:
        cnt = Counter(r2[v].values())
        if cnt[inputs[v]] >= n - t:
            out[v] = (inputs[v], 1)
            continue
        cands = sorted(x for x, k in cnt.items() if k >= t + 1)
        out[v] = (cands[0], 0) if cands else (inputs[v], 0)
    return out


def basic_filter_oracle(m, C, X, T, clocks, states, inboxes_faulty, faulty_set):
    """One round of the broadcast filter for all correct nodes.

    states[v] = (mlast, M, X, F) with C meaning bottom; clocks[v] for v in T.
    inboxes_faulty[v] maps faulty sender -> (clock-or-C, m-or-C).
    Returns the new states.
    """
    t = (m - 1) // 3
    correct = [v for v in range(m) if v not in faulty_set]
    sent = {v: (clocks[v] if v in T else C, states[v][0]) for v in correct}
    new = {}
    for v in correct:
        msgs = dict(sent)
        msgs.update(inboxes_faulty.get(v, {}))
        tc = Counter(c for w, (c, _) in msgs.items() if w in T and c < C)
        maj = [c for c, k in tc.items() if 2 * k > len(T)]
        mnew = maj[0] if maj else C
        mc = Counter(mm for _, (_, mm) in msgs.items())
        sup = [mm for mm, k in mc.items() if k >= m - t]
        _, M, x, _ = states[v]
        if sup:
            if sup[0] < C and M < C and sup[0] == (M + 1) % C:
                x = max(x - 1, 0)
            else:
                x = X
            M = sup[0]
        else:
            x = X
        new[v] = (mnew, M, x, M if x == 0 else C)
    return new
