import numpy as np

from fmm2d import bench
from fmm2d.engine import PHASE_NAMES


def total_row(rows, experiment=None):
    picks = [r for r in rows if r.phase == "total"
             and (experiment is None or r.experiment == experiment)]
    assert len(picks) == 1
    return picks[0]


def test_accuracy_rows_schema_and_tol():
    rows = bench.run_accuracy(n=1500, repeats=1)
    assert {r.phase for r in rows} == set(PHASE_NAMES) | {"total"}
    tot = total_row(rows)
    assert tot.experiment == "accuracy" and tot.n == tot.m == 1500
    assert tot.tol is not None and tot.tol <= 1e-5
    # phase rows sum to total within timer resolution
    phase_sum = sum(r.seconds for r in rows if r.phase != "total")
    assert abs(phase_sum - tot.seconds) <= 0.02 * max(tot.seconds, 0.01)


def test_accuracy_tol_decreases_with_terms():
    tol4 = total_row(bench.run_accuracy(n=1500, p=4, repeats=1)).tol
    tol17 = total_row(bench.run_accuracy(n=1500, p=17, repeats=1)).tol
    assert tol4 > tol17


def test_accuracy_rows_reproducible():
    r1 = bench.run_accuracy(n=800, repeats=1)
    r2 = bench.run_accuracy(n=800, repeats=1)
    assert total_row(r1).tol == total_row(r2).tol
    assert [r.phase for r in r1] == [r.phase for r in r2]
    assert [r.levels for r in r1] == [r.levels for r in r2]


def test_calibration_trivial_sweep_reports_that_nd():
    rows = bench.run_calibration([40], n=1500, repeats=1)
    optimal = [r for r in rows if r.phase == "optimal"]
    assert len(optimal) == 1 and optimal[0].nd == 40
    normalized = [r for r in rows if r.phase == "normalized"]
    assert len(normalized) == 1 and normalized[0].seconds == 1.0


def test_calibration_sweep_over_p_values():
    rows = bench.run_calibration([20, 60], n=1500, p_values=(4, 8), repeats=1)
    optimal = [r for r in rows if r.phase == "optimal"]
    assert [r.p for r in optimal] == [4, 8]
    assert all(r.nd in (20, 60) for r in optimal)
    totals = [r for r in rows if r.phase == "total"]
    assert len(totals) == 4


def test_breakeven_rows_and_asymptotic_order():
    rows = bench.run_breakeven([256, 8192], repeats=1)
    fmm = {r.n: r.seconds for r in rows if r.phase == "fmm"}
    direct = {r.n: r.seconds for r in rows if r.phase == "direct"}
    assert set(fmm) == set(direct) == {256, 8192}
    # far above the crossover the tree method wins
    assert fmm[8192] < direct[8192]
    assert any(r.phase == "crossover" for r in rows)


def test_adaptivity_normalization_against_uniform():
    rows = bench.run_adaptivity(n=2000, kinds=("uniform", "normal"),
                                repeats=1)
    normalized = {r.experiment: r.seconds for r in rows
                  if r.phase == "normalized"}
    assert normalized["adaptivity-uniform"] == 1.0
    assert normalized["adaptivity-normal"] > 0
    totals = [r for r in rows if r.phase == "total"]
    assert all(r.tol is not None and r.tol <= 1e-5 for r in totals)


def test_adaptivity_skip_tol():
    rows = bench.run_adaptivity(n=1000, kinds=("uniform",), repeats=1,
                                compute_tol=False)
    assert all(r.tol is None for r in rows)
