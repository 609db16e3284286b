import itertools
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from earlycount.adversary import (Strategy, check_graded, check_graded_king, check_king, check_weak_king,
                                  exhaustive_adversary_check, instance_adversary)
from earlycount.primitives import (BasicKing, EfficientKing, GradedAgreement, GradedKing,
                                   WeakGradedAgreement, WeakKing, build_expander)
from earlycount.primitives.expander import (DEGREE, circulant_offsets, circulant_ports,
                                            closed_form_lambda2, exact_edge_expansion,
                                            spectral_certificate)
from earlycount.runtime import NO_MSG, ceil_log2, run_instance

from oracles import graded_agreement_oracle

ALL_STRATEGIES = ("silent", "random", "equivocate", "clockjump", "leaderspoof", "minoritysplit")


def test_declared_round_counts():
    assert [p.R for p in (GradedAgreement, WeakGradedAgreement, BasicKing, GradedKing,
                          EfficientKing, WeakKing)] == [2, 2, 3, 4, 8, 6]


# graded agreement ----------------------------------------------------------

def test_ga_validity_faulty_silent():
    r = run_instance(GradedAgreement(4, 8), [5] * 4, faulty=[3])
    assert set(r.outputs.values()) == {(5, 1)}


def test_ga_faulty_pushes_other_value():
    adv = lambda j, s, w, honest, states: 1
    r = run_instance(GradedAgreement(4, 2), [0, 0, 0, 0], faulty=[3], adversary=adv)
    assert set(r.outputs.values()) == {(0, 1)}


def test_ga_exhaustive_mixed_inputs():
    inputs = [0, 0, 1, 0]
    v = exhaustive_adversary_check(GradedAgreement(4, 2), inputs, [3], check_graded(inputs), (0, 1, NO_MSG))
    assert v.ok and v.count_matches


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_ga_matches_independent_oracle(data):
    n = data.draw(st.sampled_from([4, 5, 7]))
    D = 3
    t = (n - 1) // 3
    faulty = set(data.draw(st.lists(st.integers(0, n - 1), max_size=t, unique=True)))
    inputs = data.draw(st.lists(st.integers(0, D - 1), min_size=n, max_size=n))
    letter = st.one_of(st.none(), st.integers(0, D - 1))
    table = [{(s, w): data.draw(letter) for s in faulty for w in range(n)} for _ in range(2)]
    adv = lambda j, s, w, honest, states: NO_MSG if table[j][(s, w)] is None else table[j][(s, w)]
    got = run_instance(GradedAgreement(n, D), inputs, faulty, adv).outputs
    assert got == graded_agreement_oracle(n, inputs, faulty, table)


# weak graded agreement -----------------------------------------------------

def test_wga_silent_inputs():
    r = run_instance(WeakGradedAgreement(4, 8), [(6, 0)] * 4)
    assert set(r.outputs.values()) == {(6, 1)}
    assert sum(r.bits) == 0


def test_wga_all_participating():
    r = run_instance(WeakGradedAgreement(4, 8), [(2, 1)] * 4)
    assert set(r.outputs.values()) == {(2, 1)}


def test_wga_exhaustive():
    inputs = [(0, 1), (0, 1), (1, 1), (0, 1)]
    v = exhaustive_adversary_check(WeakGradedAgreement(4, 2), inputs, [3], check_graded(inputs), (0, 1, 2, NO_MSG))
    assert v.ok


@pytest.mark.parametrize("strategy", ALL_STRATEGIES)
def test_wga_silence_invariant_under_adversaries(strategy):
    p = WeakGradedAgreement(7, 4)
    rnd = random.Random(strategy)
    for _ in range(20):
        inputs = [(rnd.randrange(4), rnd.randrange(2)) for _ in range(7)]
        r = run_instance(p, inputs, [5, 6], instance_adversary(Strategy(strategy, rnd.randrange(99)), p))
        for rnd_sent in r.sent:
            for v, msgs in rnd_sent.items():
                if inputs[v][1] == 0:
                    assert msgs == []


# king consensus ------------------------------------------------------------

@pytest.mark.parametrize("proto", [BasicKing, EfficientKing])
def test_king_validity_and_default(proto):
    assert set(run_instance(proto(4, 8), [(7, 2)] * 4).outputs.values()) == {7}
    assert set(run_instance(proto(4, 8), [(7, None)] * 4).outputs.values()) == {None}


@pytest.mark.parametrize("proto", [BasicKing, EfficientKing])
def test_king_agreement_exhaustive_correct_leader(proto):
    inputs = [(0, 0), (0, 0), (1, 0), (0, 0)]
    p = proto(4, 2)
    v = exhaustive_adversary_check(p, inputs, [3], check_king(inputs, [3]))
    assert v.ok and v.count_matches
    assert v.expected == math.prod((p.schema(j).size + 1) ** 3 for j in range(p.R))


def test_graded_king_communication_contract():
    r = run_instance(GradedKing(4, 8), [(5, 1)] * 4)
    assert r.outputs[1] == (5, 1) and all(y == 5 for y, _ in r.outputs.values())
    for rd in r.sent:
        for v, msgs in rd.items():
            if v != 1:
                assert {w for w, _ in msgs} <= {1}


def test_graded_king_validity_without_leader():
    r = run_instance(GradedKing(4, 8), [(4, None)] * 4)
    assert all(y == 4 for y, _ in r.outputs.values())


def test_graded_king_silent_fault_mixed():
    inputs = [(0, 0), (0, 0), (1, 0), (0, 0)]
    r = run_instance(GradedKing(4, 2), inputs, [3])
    if r.outputs[0][1] == 1:
        assert all(y == r.outputs[0][0] for y, _ in r.outputs.values())


def test_graded_king_exhaustive():
    inputs = [(0, 0), (0, 0), (1, 0), (0, 0)]
    v = exhaustive_adversary_check(GradedKing(4, 2), inputs, [3], check_graded_king(inputs, [3]))
    assert v.ok


def test_efficient_king_f0_traffic_pattern():
    r = run_instance(EfficientKing(8, 16), [(5, 3)] * 8)
    assert set(r.outputs.values()) == {5}
    for rd in r.sent:
        for v, msgs in rd.items():
            if v != 3:
                assert {w for w, _ in msgs} <= {3}
    leader_rounds = [j for j, rd in enumerate(r.sent) if rd.get(3)]
    assert leader_rounds[-1] == EfficientKing.R - 1


def test_efficient_king_bits_linear_in_n():
    # all correct share (x, l): bits / (n log|V|) stays bounded as n grows
    ratios = []
    for n in (8, 32, 128):
        r = run_instance(EfficientKing(n, 1024), [(9, 0)] * n, n_sys=n)
        ratios.append(sum(r.bits) / (n * 10))
    assert max(ratios) < 12
    assert ratios[-1] <= ratios[0] * 1.5


# weak king consensus -------------------------------------------------------

def test_weak_king_leader_most_frequent():
    r = run_instance(WeakKing(8, 16), [(x, 2) for x in (3, 3, 3, 3, 3, 9, 9, 9)])
    assert r.outputs == {v: 3 for v in range(8)}


def test_weak_king_default():
    assert set(run_instance(WeakKing(8, 16), [(1, None)] * 8).outputs.values()) == {None}


def test_weak_king_f0_bits_bound():
    # constant 20 frozen from direct runs (measured ratio ~16.3 at n=16, |V|=1024)
    for n in (16, 64, 256):
        r = run_instance(WeakKing(n, 1024), [(5, 1)] * n, n_sys=n)
        assert set(r.outputs.values()) == {5}
        assert sum(r.bits) <= 20 * n * ceil_log2(1024)


@pytest.mark.parametrize("strategy", ["random", "equivocate", "leaderspoof", "minoritysplit"])
def test_weak_king_alert_soundness(strategy):
    n, f = 16, 5
    p = WeakKing(n, 64)
    faulty = list(range(n - f, n))
    for seed in range(10):
        r = run_instance(p, [(7, 0)] * n, faulty, instance_adversary(Strategy(strategy, seed), p))
        alerts = [v for v, msgs in r.sent[1].items() if msgs]
        assert len(alerts) <= DEGREE * f
        assert set(r.outputs.values()) <= {7, None}


def test_weak_king_all_inputs_f0():
    p = WeakKing(4, 2)
    configs = 0
    for xs in itertools.product((0, 1), repeat=4):
        for leads in itertools.product((None, 0, 1, 2, 3), repeat=4):
            inputs = list(zip(xs, leads))
            out = run_instance(p, inputs).outputs
            assert check_weak_king(inputs, ())(out) is None, (inputs, out)
            configs += 1
    assert configs == 10 ** 4


# expander ------------------------------------------------------------------

def test_expander_n2():
    g = build_expander(2)
    assert g.degree == DEGREE and g.epsilon == DEGREE
    assert all(len(p) == DEGREE for p in g.ports)


def test_expander_rejects_small():
    with pytest.raises(ValueError):
        build_expander(1)


def test_expander_n8_exact():
    g = build_expander(8)
    assert g.epsilon_exact == exact_edge_expansion(g.ports)


def test_expander_exact_is_brute_force():
    # independent brute force over all subsets of size <= 4
    ports = circulant_ports(8, circulant_offsets(8))
    best = None
    for k in range(1, 5):
        for S in itertools.combinations(range(8), k):
            s = set(S)
            b = sum(1 for v in S for w in ports[v] if w not in s)
            best = b / k if best is None else min(best, b / k)
    assert float(exact_edge_expansion(ports)) == best


def test_expander_regular_and_deterministic():
    for n in (2, 3, 5, 16, 37, 100):
        a, b = build_expander(n), build_expander(n)
        assert a.ports == b.ports
        assert all(len(p) == DEGREE for p in a.ports)
        counts = [0] * n
        for p in a.ports:
            for w in p:
                counts[w] += 1
        assert counts == [DEGREE] * n


@pytest.mark.parametrize("n", range(2, 21))
def test_spectral_certificate_below_exact(n):
    ports = circulant_ports(n, circulant_offsets(n))
    eps = spectral_certificate(ports)[0]
    assert eps <= float(exact_edge_expansion(ports)) + 1e-12


def test_expander_1024_spectral():
    g = build_expander(1024)
    assert g.method == "spectral" and g.epsilon > 0
    assert g.residual < 1e-6
    assert abs(g.lambda2 - closed_form_lambda2(1024, g.offsets)) < 1e-6
