"""Experiment runners: accuracy, per-box calibration, break-even, adaptivity.

Timing protocol: a warm-up run is discarded, then each measurement is the
mean over ``repeats`` repetitions of a monotonic wall clock read at phase
boundaries.  The direct-summation oracle feeds the ``tol`` column and is
evaluated once per configuration; it is never part of a timing mean except in
the break-even experiment where it is itself the subject.
"""

from __future__ import annotations

import time

import numpy as np

from .datasets import DistributionSpec, sample_points
from .engine import PHASE_NAMES, direct_evaluate, fmm_evaluate, max_rel_error
from .fileio import BenchmarkRow
from .tree import TreeConfig

DEFAULT_REPEATS = 5


def _run_fmm(points, cfg, repeats, parallel):
    """Warm up once, then average phase and total times over repeats."""
    fmm_evaluate(points, cfg, parallel=parallel)
    reports = []
    values = None
    for _ in range(max(1, repeats)):
        values, rep = fmm_evaluate(points, cfg, parallel=parallel)
        reports.append(rep)
    phases = {
        name: float(np.mean([r.phase_seconds[name] for r in reports]))
        for name in PHASE_NAMES
    }
    total = float(np.mean([r.total_seconds for r in reports]))
    return values, phases, total, reports[-1]


def _time_direct(points, repeats, symmetric):
    direct_evaluate(points, symmetric=symmetric)
    times = []
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        direct_evaluate(points, symmetric=symmetric)
        times.append(time.perf_counter() - t0)
    return float(np.mean(times))


def _base(experiment, points, cfg, levels):
    return dict(experiment=experiment, n=points.n_sources, m=points.n_evals,
                p=cfg.p_terms, nd=cfg.n_desired_per_box, theta=cfg.theta,
                levels=levels)


def _phase_rows(experiment, points, cfg, levels, phases, total, tol=None):
    rows = [BenchmarkRow(**_base(experiment, points, cfg, levels),
                         phase=name, seconds=seconds)
            for name, seconds in phases.items()]
    rows.append(BenchmarkRow(**_base(experiment, points, cfg, levels),
                             phase="total", seconds=total, tol=tol))
    return rows


def run_accuracy(n=10_000, kind="uniform", sigma2=0.01, p=17, nd=35,
                 theta=0.5, seed=0, repeats=DEFAULT_REPEATS, parallel=False):
    """FMM against the direct oracle; the total row carries the tolerance."""
    points = sample_points(DistributionSpec(kind, sigma2, seed), n)
    cfg = TreeConfig(n_desired_per_box=nd, theta=theta, p_terms=p)
    values, phases, total, report = _run_fmm(points, cfg, repeats, parallel)
    exact = direct_evaluate(points, symmetric=True)
    tol = max_rel_error(values, exact)
    return _phase_rows("accuracy", points, cfg, report.n_levels,
                       phases, total, tol)


def run_calibration(nd_values, n=200_000, kind="uniform", sigma2=0.01,
                    p_values=(17,), theta=0.5, seed=0,
                    repeats=DEFAULT_REPEATS, parallel=False):
    """Sweep the per-box population target; repeatable over several p.

    Emits one ``total`` row per (p, nd), a ``normalized`` row whose seconds
    column holds total/min-total within that p sweep, and one ``optimal`` row
    per p whose nd column names the winner.
    """
    points = sample_points(DistributionSpec(kind, sigma2, seed), n)
    rows = []
    for p in p_values:
        totals = []
        cfgs = []
        for nd in nd_values:
            cfg = TreeConfig(n_desired_per_box=nd, theta=theta, p_terms=p)
            _, _, total, report = _run_fmm(points, cfg, repeats, parallel)
            rows.append(BenchmarkRow(**_base("calibrate", points, cfg,
                                             report.n_levels),
                                     phase="total", seconds=total))
            totals.append(total)
            cfgs.append((cfg, report.n_levels))
        best = int(np.argmin(totals))
        for (cfg, levels), total in zip(cfgs, totals):
            rows.append(BenchmarkRow(**_base("calibrate", points, cfg, levels),
                                     phase="normalized",
                                     seconds=total / totals[best]))
        cfg, levels = cfgs[best]
        rows.append(BenchmarkRow(**_base("calibrate", points, cfg, levels),
                                 phase="optimal", seconds=totals[best]))
    return rows


def run_breakeven(n_values, kind="uniform", sigma2=0.01, p=17, nd=35,
                  theta=0.5, seed=0, repeats=DEFAULT_REPEATS, parallel=False):
    """Total FMM and direct times per N plus the crossover where FMM wins.

    The direct reference uses the symmetric pairwise mode (evaluation points
    alias the sources here).  A ``crossover`` row is emitted only when some
    swept N has the FMM faster than the direct sum.
    """
    rows = []
    crossover = None
    for n in n_values:
        points = sample_points(DistributionSpec(kind, sigma2, seed), n)
        cfg = TreeConfig(n_desired_per_box=nd, theta=theta, p_terms=p)
        _, _, fmm_total, report = _run_fmm(points, cfg, repeats, parallel)
        direct_total = _time_direct(points, repeats, symmetric=True)
        base = _base("breakeven", points, cfg, report.n_levels)
        rows.append(BenchmarkRow(**base, phase="fmm", seconds=fmm_total))
        rows.append(BenchmarkRow(**base, phase="direct", seconds=direct_total))
        if crossover is None and fmm_total < direct_total:
            crossover = (base, fmm_total)
    if crossover is not None:
        base, fmm_total = crossover
        rows.append(BenchmarkRow(**base, phase="crossover", seconds=fmm_total))
    return rows


def run_adaptivity(n=100_000, kinds=("uniform", "normal", "layer"),
                   sigma2=0.01, p=17, nd=35, theta=0.5, seed=0,
                   repeats=DEFAULT_REPEATS, parallel=False, compute_tol=True):
    """Robustness under non-uniform inputs at equal N.

    One ``total`` row per distribution (tol from the direct oracle unless
    disabled) plus a ``normalized`` row against the uniform run when uniform
    is part of the sweep.
    """
    rows = []
    totals = {}
    for kind in kinds:
        points = sample_points(DistributionSpec(kind, sigma2, seed), n)
        cfg = TreeConfig(n_desired_per_box=nd, theta=theta, p_terms=p)
        values, _, total, report = _run_fmm(points, cfg, repeats, parallel)
        tol = None
        if compute_tol:
            exact = direct_evaluate(points, symmetric=True)
            tol = max_rel_error(values, exact)
        totals[kind] = (total, _base(f"adaptivity-{kind}", points, cfg,
                                     report.n_levels))
        rows.append(BenchmarkRow(**totals[kind][1], phase="total",
                                 seconds=total, tol=tol))
    if "uniform" in totals:
        uniform_total = totals["uniform"][0]
        for kind in kinds:
            total, base = totals[kind]
            rows.append(BenchmarkRow(**base, phase="normalized",
                                     seconds=total / uniform_total))
    return rows
