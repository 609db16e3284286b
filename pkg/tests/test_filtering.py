import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from earlycount.adversary import Strategy
from earlycount.filtering import (BasicFilterState, EfficientFilterState, FilterParams, basic_filter_receive,
                                  basic_filter_send, basic_filter_step, efficient_filter_payload,
                                  efficient_filter_step)
from earlycount.harness.checkers import check_counting, check_crusader
from earlycount.harness.filterlab import random_filter_state, run_filter

from oracles import basic_filter_oracle


def test_params_validation():
    with pytest.raises(ValueError):
        FilterParams(4, 8, 3, (2, 1))
    with pytest.raises(ValueError):
        FilterParams(4, 1, 3, (0,))
    assert FilterParams(7, 8, 3, (0, 1, 2)).t == 2


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_basic_filter_matches_oracle(data):
    m = data.draw(st.sampled_from([4, 7]))
    C, X = 6, 3
    T = tuple(sorted(data.draw(st.sets(st.integers(0, m - 1), min_size=1))))
    p = FilterParams(m, C, X, T)
    t = (m - 1) // 3
    faulty = set(data.draw(st.lists(st.integers(0, m - 1), max_size=t, unique=True)))
    cval = st.integers(0, C)
    states = {v: (data.draw(cval), data.draw(cval), data.draw(st.integers(0, X)), C) for v in range(m)}
    clocks = {v: data.draw(st.integers(0, C - 1)) for v in range(m)}
    fin = {v: {s: (data.draw(cval), data.draw(cval)) for s in faulty} for v in range(m) if v not in faulty}
    want = basic_filter_oracle(m, C, X, set(T), clocks, states, fin, faulty)
    # the package implementation, driven by the same traffic
    sent = {}
    staged = {}
    for v in range(m):
        if v in faulty:
            continue
        st_v = BasicFilterState(*states[v])
        cin = clocks[v] if v in T else None
        staged[v], out = basic_filter_send(st_v, p, v, cin)
        sent[v] = dict(out)
    for v in staged:
        inbox = {w: sent[w][v] for w in sent}
        for s, (c, mm) in fin[v].items():
            inbox[s] = c * (C + 1) + mm
        new, _ = basic_filter_receive(staged[v], p, v, dict(sorted(inbox.items())))
        assert (new.mlast, new.M, new.X, new.F) == want[v]


@pytest.mark.parametrize("efficient", [False, True])
@pytest.mark.parametrize("m", [4, 7])
def test_filter_counts_from_X_plus_2(efficient, m):
    X = 12
    p = FilterParams(m, 32, X, tuple(range(m)))
    f = (m - 1) // 3
    for seed in range(10):
        strat = Strategy(("random", "equivocate")[seed % 2], seed)
        run = run_filter(p, efficient, 3 * X, faulty=range(f), strategy=strat, seed=seed)
        rep = check_counting(run.correct_outputs(), 32)
        bound = X + 2 if not efficient else f + X + 5
        assert rep.stabilization_round <= bound


def test_basic_filter_no_support_outputs_bottom():
    p = FilterParams(4, 8, 3, (0, 1, 2, 3))
    st_ = BasicFilterState(8, 2, 0, 2)
    for _ in range(p.X + 1):
        st_, out, _ = basic_filter_step(st_, p, 0, None, {})
        assert out is None


def test_efficient_reset_on_disagreement():
    m, C, X = 7, 16, 5
    p = FilterParams(m, C, X, tuple(range(m)))
    st_ = EfficientFilterState([9] * 4 + [3] * 3, [0] * m, 3, 0, 0, 0, 0, 3)
    outs = []
    for r in range(X + 1):
        st_, out, _ = efficient_filter_step(st_, p, 0, None, {})
        outs.append(out)
        assert st_.X == X + 1          # no support: the counter is held at its reset value
    assert outs == [None] * (X + 1)


def test_efficient_payload_schema():
    p = FilterParams(4, 10, 3, (0, 1, 2, 3))
    assert efficient_filter_payload(p).size == 20


@pytest.mark.parametrize("efficient", [False, True])
def test_crusader_safety_majority_jumping(efficient):
    # f >= |T|/2: the faulty half of T sends random or jumping clocks
    m, C, X = 10, 64, 8
    T = tuple(range(4))
    p = FilterParams(m, C, X, T)
    for seed in range(25):
        strat = Strategy(("random", "clockjump", "equivocate")[seed % 3], seed)
        run = run_filter(p, efficient, 200, faulty=(0, 1, 2), strategy=strat, seed=seed)
        assert check_crusader(run.correct_outputs(), C, X).ok


def test_memory_tracking_invariant():
    n, f = 16, 5
    p = FilterParams(n, 1024, 48, tuple(range(n)))
    init = [EfficientFilterState([100 * v] * n, [0] * n, 100 * v, 0, v, v, 0, 1024) for v in range(n)]
    correct = range(f, n)
    for strat in ("random", "equivocate"):
        last = [0]

        def obs(r, states):
            if any(states[w].mem[v] != states[v].Fh for v in correct for w in correct):
                last[0] = r

        run_filter(p, True, 3 * n, faulty=range(f), strategy=Strategy(strat, 1), seed=1, init=init,
                   clock=lambda r, v: (7 * v + r) % 1024, observer=obs)
        assert last[0] < n
        last[0] = 0
        run_filter(p, True, 3 * n, faulty=range(f), strategy=Strategy(strat, 1), seed=2, observer=obs)
        assert last[0] < f + 4


def test_efficient_steady_state_quiescence():
    n, C = 16, 1024
    p = FilterParams(n, C, 20, tuple(range(n)))
    run = run_filter(p, True, 200, seed=3)
    item = 11          # ceil(log2(2C)) bits per item
    tail = run.bits[100:]
    # per round: the two round-robin probes per node plus their responses
    assert tail.max() <= 4 * n * item
    assert tail.max() <= 4 * n * np.log2(C) * 1.2


def test_random_state_in_domain():
    rng = np.random.default_rng(0)
    p = FilterParams(5, 9, 4, (0, 2, 4))
    for _ in range(50):
        s = random_filter_state(p, True, rng)
        assert all(0 <= c < 9 for c in s.mem) and 0 <= s.X < p.X + 2 and 0 <= s.Tc < 3
