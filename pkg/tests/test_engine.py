import numpy as np
import pytest

from fmm2d import operators as ops
from fmm2d.datasets import DistributionSpec, sample_points
from fmm2d.engine import (PHASE_NAMES, direct_evaluate, fmm_evaluate,
                          max_rel_error)
from fmm2d.tree import DegenerateInputError, ParticleSet, TreeConfig, build_tree


def uniform(n, seed=0):
    return sample_points(DistributionSpec("uniform", seed=seed), n)


# --- direct evaluation --------------------------------------------------------

def test_direct_two_particles():
    pts = ParticleSet(np.array([0j, 1.0 + 0j]), np.ones(2))
    np.testing.assert_allclose(direct_evaluate(pts), [1.0, -1.0], rtol=1e-15)


def test_direct_three_collinear():
    pts = ParticleSet(np.array([0j, 1.0 + 0j, 2.0 + 0j]), np.ones(3))
    phi = direct_evaluate(pts)
    assert phi[0] == pytest.approx(1.0 + 0.5)


def test_direct_symmetric_matches_asymmetric():
    pts = uniform(500, seed=4)
    asym = direct_evaluate(pts, symmetric=False)
    sym = direct_evaluate(pts, symmetric=True)
    assert max_rel_error(sym, asym) <= 1e-13


def test_direct_symmetric_requires_aliasing():
    pts = ParticleSet(np.array([0j, 1j]), np.ones(2), np.array([2.0 + 0j]))
    with pytest.raises(ValueError, match="alias"):
        direct_evaluate(pts, symmetric=True)


def test_direct_separate_eval_points():
    src = np.array([0j, 1.0 + 0j])
    pts = ParticleSet(src, np.array([2.0, -1.0]), np.array([0.5 + 0j, 3.0 + 0j]))
    phi = direct_evaluate(pts)
    expected = [2.0 / (0 - 0.5) - 1.0 / (1 - 0.5),
                2.0 / (0 - 3.0) - 1.0 / (1 - 3.0)]
    np.testing.assert_allclose(phi, expected, rtol=1e-15)


# --- error metric ---------------------------------------------------------------

def test_max_rel_error_semantics():
    exact = np.array([1.0, 2.0, 4.0], dtype=complex)
    assert max_rel_error(exact, exact) == 0.0
    assert max_rel_error(1.01 * exact, exact) == pytest.approx(0.01, rel=1e-12)
    bumped = exact.copy()
    bumped[2] *= 1.5
    assert max_rel_error(bumped, exact) == pytest.approx(0.5, rel=1e-12)


def test_max_rel_error_skips_zero_entries():
    exact = np.array([0.0, 2.0], dtype=complex)
    approx = np.array([123.0, 2.2], dtype=complex)
    assert max_rel_error(approx, exact) == pytest.approx(0.1, rel=1e-12)
    with pytest.raises(ValueError, match="zero"):
        max_rel_error(np.ones(2), np.zeros(2))
    with pytest.raises(ValueError, match="shapes"):
        max_rel_error(np.ones(2), np.ones(3))


# --- pipeline correctness -------------------------------------------------------

def test_zero_level_pipeline_equals_direct():
    pts = uniform(100, seed=8)
    cfg = TreeConfig(n_desired_per_box=100)  # forces a single box
    values, report = fmm_evaluate(pts, cfg)
    assert report.n_levels == 0
    exact = direct_evaluate(pts)
    assert max_rel_error(values, exact) <= 1e-14


def test_accuracy_small_uniform():
    pts = uniform(3000, seed=5)
    values, report = fmm_evaluate(pts)
    exact = direct_evaluate(pts, symmetric=True)
    assert max_rel_error(values, exact) <= 1e-5
    assert report.n_levels >= 2


def test_accuracy_separate_eval_points():
    rng = np.random.default_rng(12)
    pts = ParticleSet(rng.uniform(size=4000) + 1j * rng.uniform(size=4000),
                      rng.uniform(-1, 1, 4000),
                      rng.uniform(size=700) + 1j * rng.uniform(size=700))
    values, _ = fmm_evaluate(pts)
    exact = direct_evaluate(pts)
    assert max_rel_error(values, exact) <= 1e-5


def test_strength_doubling_scales_exactly():
    pts = uniform(2000, seed=6)
    doubled = ParticleSet(pts.positions, 2.0 * pts.strengths)
    v1, _ = fmm_evaluate(pts)
    v2, _ = fmm_evaluate(doubled)
    np.testing.assert_array_equal(v2, 2.0 * v1)


def test_sequential_determinism_bitwise():
    pts = uniform(3000, seed=7)
    v1, _ = fmm_evaluate(pts)
    v2, _ = fmm_evaluate(pts)
    np.testing.assert_array_equal(v1, v2)


def test_parallel_matches_sequential():
    pts = uniform(6000, seed=9)
    seq, _ = fmm_evaluate(pts, parallel=False)
    par, rep = fmm_evaluate(pts, parallel=True, n_workers=4)
    assert rep.parallel
    assert max_rel_error(par, seq) <= 1e-13


def test_degenerate_input_propagates():
    pts = ParticleSet(np.full(64, 0.25 + 0.75j), np.ones(64))
    with pytest.raises(DegenerateInputError):
        fmm_evaluate(pts, TreeConfig(n_desired_per_box=1))


def test_coincident_sources_are_skipped_consistently():
    # duplicated positions: both routes apply the same exclusion rule
    rng = np.random.default_rng(10)
    base = rng.uniform(size=600) + 1j * rng.uniform(size=600)
    z = np.concatenate([base, base[:25]])
    g = rng.uniform(-1, 1, z.size)
    pts = ParticleSet(z, g)
    values, report = fmm_evaluate(pts, TreeConfig(n_desired_per_box=20))
    exact = direct_evaluate(pts)
    assert max_rel_error(values, exact) <= 1e-5
    assert report.coincident_skips == 2 * 25


# --- engine internals against the unit operators --------------------------------

def test_batched_p2m_matches_operator():
    from fmm2d.engine import _p2m_all

    pts = uniform(500, seed=11)
    cfg = TreeConfig(n_desired_per_box=30)
    tree = build_tree(pts, cfg)
    batched = _p2m_all(tree, cfg.p_terms)
    lv = tree.finest
    for k in range(lv.n_boxes):
        s0, s1 = lv.src_offsets[k], lv.src_offsets[k + 1]
        single = ops.p2m(tree.src_pos[s0:s1], tree.src_strength[s0:s1],
                         lv.center[k], cfg.p_terms)
        np.testing.assert_allclose(batched[k], single, rtol=1e-13, atol=1e-13)


# --- report ---------------------------------------------------------------------

def test_report_contents():
    pts = uniform(2000, seed=13)
    _, report = fmm_evaluate(pts)
    assert set(report.phase_seconds) == set(PHASE_NAMES)
    assert all(t >= 0 for t in report.phase_seconds.values())
    assert report.total_seconds >= sum(report.phase_seconds.values()) - 1e-6
    assert report.n_boxes == sum(4**l for l in range(report.n_levels + 1))
    assert report.finest_src_min >= 1
    assert report.finest_src_min <= report.finest_src_mean <= report.finest_src_max
    for kind in ("weak", "p2p", "p2l", "m2p"):
        assert kind in report.list_histograms
    p2p_hist = report.list_histograms["p2p"]
    assert sum(p2p_hist.values()) == 4**report.n_levels
