import json

import numpy as np
import pytest

from earlycount.harness.checkers import (check_counting, check_crusader, default_window, detect_unimpeded,
                                         virtual_clock)
from earlycount.harness.cli import main
from earlycount.harness.config import EXAMPLE_CONFIG, ConfigError, config_from_dict, load_config
from earlycount.harness.metrics import measure_bits, slope
from earlycount.harness.simulate import run_simulation, stabilization, write_outputs
from earlycount.harness.sweep import Cell, grid, load_results, run_sweep, worst_by
from earlycount.harness.trace import ExecutionTrace


def _counting(H, C, start=0, nodes=4):
    return np.array([[(start + h) % C] * nodes for h in range(H)])


# counting checker ----------------------------------------------------------

def test_check_counting_all_good():
    rep = check_counting(_counting(50, 8), 8)
    assert rep.stabilization_round == 1 and rep.last_violation == 0 and not rep.violations


def test_check_counting_disagreement():
    rows = _counting(50, 8)
    rows[8, 2] = 5                  # round 9
    rep = check_counting(rows, 8)
    assert rep.stabilization_round == 10
    kinds = {(v.round, v.kind) for v in rep.violations}
    assert (9, "agreement") in kinds


def test_check_counting_bottom_and_short_suffix():
    rows = _counting(30, 8)
    rows[20, :] = -1
    rep = check_counting(rows, 8, window=20)
    assert rep.stabilization_round is None and rep.last_violation == 21
    assert check_counting(rows, 8, window=9).stabilization_round == 22


def test_check_counting_wraparound():
    assert check_counting(_counting(20, 3, start=2), 3).stabilization_round == 1
    # counting mod 4 checked against C=5: every 3 -> 0 step fails, the last at round 16
    assert check_counting(_counting(20, 4), 5).last_violation == 16


def test_check_counting_rejects_empty():
    with pytest.raises(ValueError):
        check_counting(np.zeros((0, 3)), 4)


def test_default_window():
    assert default_window(278, 0) == 1112
    assert default_window(10, 20) == 210
    assert default_window(0, 0) == 100


# crusader checker ----------------------------------------------------------

def test_crusader_bottoms_are_fine():
    F = np.full((30, 3), -1)
    F[5] = [3, -1, 3]
    F[9] = [-1, 7, 7]
    assert check_crusader(F, 16, 5).ok


def test_crusader_phase_mismatch_within_X():
    F = np.full((30, 3), -1)
    F[5] = [3, 3, 3]
    F[8] = [7, -1, -1]              # expected 6
    rep = check_crusader(F, 16, 5)
    assert not rep.ok and rep.violations[0].round == 9


def test_crusader_jump_after_gap_allowed():
    F = np.full((40, 2), -1)
    F[2] = [5, 5]
    F[20] = [1, 1]
    rep = check_crusader(F, 16, 5)
    assert rep.ok
    assert rep.clock.jumps() != []


def test_crusader_same_round_disagreement():
    F = np.full((10, 2), -1)
    F[4] = [1, 2]
    assert not check_crusader(F, 8, 3).ok


def test_virtual_clock_values():
    F = np.full((12, 2), -1)
    F[1] = [4, -1]
    vc = virtual_clock(F, 10, 4)
    assert [iv[:2] for iv in vc.intervals] == [(1, 4), (5, 8), (9, 12)]
    assert vc.value(2) == 4 and vc.value(4) == 6 and vc.value(6) is None
    assert vc.phases()[0] == (4 - 2) % 10


# unimpeded detection -------------------------------------------------------

def _lead(H, n=4):
    return np.full((H, n, 2), -1)


def test_unimpeded_clean_seed():
    lead = _lead(30)
    lead[4, :, 0] = 2
    assert detect_unimpeded(lead, [0, 1, 2, 3], 8) == [(5, 0, 2)]


def test_unimpeded_faulty_leader_ignored():
    lead = _lead(30)
    lead[4, :, 0] = 3
    assert detect_unimpeded(lead, [0, 1, 2], 8) == []


def test_unimpeded_impeded_by_other_stream_or_disagreement():
    lead = _lead(30)
    lead[4, :, 0] = 2
    lead[9, 1, 1] = 0
    assert detect_unimpeded(lead, range(4), 8) == []
    lead = _lead(30)
    lead[4, :3, 0] = 2
    lead[4, 3, 0] = 1
    assert detect_unimpeded(lead, range(4), 8) == []


def test_unimpeded_window_boundaries():
    lead = _lead(30)
    lead[4, :, 0] = 2
    lead[12, :, 0] = 1                  # seeded R rounds later: outside the lifetime
    assert (5, 0, 2) in detect_unimpeded(lead, range(4), 8)
    lead[11, 0, 1] = 1
    assert (5, 0, 2) not in detect_unimpeded(lead, range(4), 8)
    tail = _lead(10)
    tail[5, :, 0] = 0                   # window runs past the end of the trace
    assert detect_unimpeded(tail, range(4), 8) == []


# configuration -------------------------------------------------------------

def test_config_unknown_keys():
    with pytest.raises(ConfigError):
        config_from_dict({"n": 4, "colour": "red"})
    with pytest.raises(ConfigError):
        config_from_dict({"n": 4, "faults": {"f": 1, "bogus": 2}})
    with pytest.raises(ConfigError):
        config_from_dict({"n": 4, "protocol": {"R": 8, "k": 3}})


def test_config_validation():
    for bad in ({"n": 0}, {"n": 4, "C": 1}, {"n": 4, "faults": {"f": 2}}, {"n": 4, "R": 6},
                {"n": 4, "epsilon": "3/2"}, {"n": 4, "stack": "fast"}):
        with pytest.raises(ConfigError):
            config_from_dict(bad)
    assert config_from_dict({"n": 4, "faults": {"f": 2, "allow_excess": True}}).faults.f == 2


def test_example_config_loads(tmp_path):
    p = tmp_path / "ex.toml"
    p.write_text(EXAMPLE_CONFIG)
    cfg = load_config(p)
    assert cfg.n >= 1
    assert config_from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


def test_horizon_default():
    assert config_from_dict({"n": 4}).horizon == 5000
    assert config_from_dict({"n": 400}).horizon == 8000


# traces, metrics, outputs --------------------------------------------------

def _small(**kw):
    d = {"n": 4, "C": 64, "H": 400, "seed": 2, "faults": {"f": 1, "strategy": "random"}}
    d.update(kw)
    return config_from_dict(d)


def test_trace_roundtrip(tmp_path):
    trace = run_simulation(_small())
    p = trace.save(tmp_path / "t.npz")
    back = ExecutionTrace.load(p)
    assert back.meta == json.loads(json.dumps(trace.meta))
    assert back.faulty == trace.faulty
    for k in trace.arrays:
        assert np.array_equal(back.arrays[k], trace.arrays[k])
    a = stabilization(trace, 100)
    b = stabilization(back, 100)
    assert (a.stabilization_round, a.last_violation) == (b.stabilization_round, b.last_violation)


def test_trace_load_rejects_foreign(tmp_path):
    p = tmp_path / "x.npz"
    np.savez(p, a=np.zeros(3))
    with pytest.raises((ValueError, KeyError)):
        ExecutionTrace.load(p)


def test_csv_columns(tmp_path):
    trace = run_simulation(_small(H=50))
    p = tmp_path / "t.csv"
    trace.write_csv(p, per_node=True)
    lines = p.read_text().splitlines()
    header = lines[0].split(",")
    assert header[:7] == ["round", "bits", "agreement_ok", "validity_ok", "min_C", "max_C", "adv_items"]
    assert header[7:] == [f"C{v}" for v in range(4)]
    assert len(lines) == 51


def test_measure_bits_windows():
    trace = run_simulation(_small(H=100))
    b = trace.arrays["bits"][:, trace.correct]
    whole = measure_bits(trace)
    assert whole.total == int(b.sum()) and whole.start == 1 and whole.end == 100
    last = measure_bits(trace, 10)
    assert last.start == 91 and last.amortized == pytest.approx(b[-10:].mean())
    assert measure_bits(trace, (5, 5)).total == int(b[4].sum())
    with pytest.raises(ValueError):
        measure_bits(trace, (0, 5))


def test_faulty_bits_not_counted():
    trace = run_simulation(_small(H=100))
    assert measure_bits(trace).total == int(trace.arrays["bits"][:, trace.correct].sum())
    assert trace.arrays["bits"].sum() >= measure_bits(trace).total


def test_slope():
    assert slope([0, 1, 2, 3], [1, 3, 5, 7]) == pytest.approx(2.0)


def test_write_outputs(tmp_path):
    cfg = _small(H=200, output={"trace": True, "csv": True})
    trace = run_simulation(cfg)
    paths = write_outputs(cfg, trace, tmp_path)
    names = sorted(p.name for p in paths)
    assert any(n.endswith(".npz") for n in names) and any(n.endswith(".csv") for n in names)
    summary = json.loads(next(p for p in paths if p.name.endswith(".summary.json")).read_text())
    assert summary["n"] == 4 and summary["f"] == 1


# determinism and end-to-end ------------------------------------------------

def test_runs_are_reproducible():
    a, b = run_simulation(_small()), run_simulation(_small())
    assert all(np.array_equal(a.arrays[k], b.arrays[k]) for k in a.arrays)
    c = run_simulation(_small(seed=3))
    assert not np.array_equal(a.arrays["C"], c.arrays["C"])


def test_n4_silent_fault_stabilizes():
    cfg = config_from_dict({"n": 4, "C": 1024, "H": 5000, "faults": {"f": 1, "strategy": "silent"}})
    rep = stabilization(run_simulation(cfg))
    assert rep.stabilized


def test_single_node_modulus_5():
    trace = run_simulation(config_from_dict({"n": 1, "C": 5, "H": 30}))
    assert check_counting(trace.correct_outputs(), 5).stabilization_round == 1


# sweeps --------------------------------------------------------------------

def test_grid_shapes():
    assert len(grid([4, 8], seeds=range(3))) == 2 * 3 + 3 * 3
    cells = grid([4], [1], ["random", "silent"], range(4), rotate=True)
    assert [c.strategy for c in cells] == ["random", "silent", "random", "silent"]
    assert grid([4], [5]) == []


def test_sweep_resumable(tmp_path):
    res = tmp_path / "r.jsonl"
    base = {"C": 64, "H": 300}
    cells = [Cell(4, 1, "random", 0), Cell(4, 0, "silent", 1)]
    rows = run_sweep(cells, res, base)
    assert [r["key"] for r in rows] == [c.key for c in cells]
    assert len(load_results(res)) == 2
    seen = []
    again = run_sweep(cells + [Cell(4, 1, "equivocate", 2)], res, base, progress=seen.append)
    assert len(seen) == 1 and len(again) == 3
    assert again[0] == rows[0]


def test_sweep_records_errors(tmp_path):
    rows = run_sweep([Cell(4, 1, "random", 0)], tmp_path / "r.jsonl", {"C": 1})
    assert "error" in rows[0] and rows[0]["stabilization_round"] is None
    assert load_results(tmp_path / "r.jsonl") == {}


def test_worst_by():
    rows = [{"n": 4, "f": 0, "stabilization_round": 5}, {"n": 4, "f": 0, "stabilization_round": 9},
            {"n": 4, "f": 1, "stabilization_round": None}, {"n": 4, "f": 1, "stabilization_round": 3}]
    assert worst_by(rows, "n", "f") == {(4, 0): 9, (4, 1): None}


# command line --------------------------------------------------------------

def test_cli_exit_codes(tmp_path, capsys):
    cfgp = tmp_path / "c.toml"
    cfgp.write_text('n = 4\nC = 64\nH = 400\n[faults]\nf = 1\nstrategy = "random"\n'
                    '[checker]\nmin_window = 100\n[output]\ntrace = true\n')
    assert main(["run", str(cfgp), "--out", str(tmp_path)]) == 0
    npz = next(tmp_path.glob("*.npz"))
    assert main(["check", str(npz), "--window", "100"]) == 0
    assert main(["check", str(npz), "--window", "100000"]) == 1
    assert main(["check", str(tmp_path / "missing.npz")]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("n = 4\nwat = 1\n")
    assert main(["run", str(bad)]) == 2
    assert main(["run", str(tmp_path / "nope.toml")]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["expander", "1"]) == 2
    assert main(["expander", "10", "--compare"]) == 0
    assert main(["example-config"]) == 0
    out = capsys.readouterr().out
    assert "S=" in out and "n = " in out
