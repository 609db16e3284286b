"""The compiled kernel must reproduce the reference engine bit for bit."""
import numpy as np
import pytest

from earlycount.adversary import STRATEGY_NAMES, Strategy, choose_faulty, inject_initial_states, max_faults
from earlycount.counting import build_combined
from earlycount.engine import ENGINES, PyEngine, get_engine

pytestmark = pytest.mark.skipif("compiled" not in ENGINES, reason="extension not built")


def _pair(n, stack, strategy, seed, init="random", spec=None, C=256):
    tree = build_combined(n, C, stack=stack)
    faulty = choose_faulty(n, max_faults(n), "random", seed)
    snap = inject_initial_states(tree, init, seed, spec)
    st = Strategy(strategy, seed)
    return (PyEngine(tree, faulty, st, snap, seed), ENGINES["compiled"](tree, faulty, st, snap, seed))


def _same(a, b):
    for k in a:
        assert np.array_equal(np.asarray(a[k]), np.asarray(b[k])), k


@pytest.mark.parametrize("strategy", STRATEGY_NAMES)
@pytest.mark.parametrize("n", [4, 7])
def test_engines_agree_efficient(n, strategy):
    py, c = _pair(n, "efficient", strategy, seed=n)
    _same(py.run(120), c.run(120))
    _same(py.export(), c.export())


@pytest.mark.parametrize("strategy", ["random", "equivocate", "clockjump"])
def test_engines_agree_naive(strategy):
    py, c = _pair(5, "naive", strategy, seed=2)
    _same(py.run(120), c.run(120))
    _same(py.export(), c.export())


def test_engines_agree_n16_adversarial_init():
    spec = {"clocks": "distinct", "pipelines": "max", "filters": "stale"}
    py, c = _pair(16, "efficient", "minoritysplit", seed=5, init="adversarial", spec=spec, C=1024)
    _same(py.run(60), c.run(60))
    _same(py.export(), c.export())


def test_step_matches_run():
    _, a = _pair(4, "efficient", "random", seed=1)
    _, b = _pair(4, "efficient", "random", seed=1)
    rows = [a.step() for _ in range(30)]
    whole = b.run(30)
    for k in whole:
        assert np.array_equal(np.asarray([r[k] for r in rows]), whole[k]), k


def test_export_load_resume():
    # continue both engines from their own exported snapshots
    py, c = _pair(7, "efficient", "equivocate", seed=3)
    py.run(40)
    c.run(40)
    quiet = Strategy("silent")
    x = ENGINES["compiled"](c.tree, c.faulty, quiet, c.export(), 0)
    y = PyEngine(py.tree, py.faulty, quiet, py.export(), 0)
    _same(x.run(50), y.run(50))


def test_get_engine():
    assert get_engine("python") is PyEngine
    assert get_engine(None) is get_engine("auto")
    with pytest.raises(ValueError):
        get_engine("fortran")
