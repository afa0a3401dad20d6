"""Full pipeline: sort, connect, upward pass, downward pass, near field.

Phases run in order with a barrier between them; inside a phase every write
belongs to exactly one target box (its expansion or its points' potentials),
so targets can be processed concurrently.  The sequential mode (default) is
the bit-exact reference; the parallel mode distributes target chunks over a
thread pool and reproduces the sequential results exactly because each
target's accumulation chain is unchanged.

Accumulation over any interaction list runs in ascending source-box order,
which pins the floating-point result for a given input.
"""

from __future__ import annotations

import os
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .connectivity import InteractionLists, build_connectivity
from .tree import FmmTree, ParticleSet, TreeConfig, build_tree

PHASE_NAMES = ("sort", "connect", "p2m", "m2m", "m2l", "l2l", "l2p", "p2p", "other")

_TARGET_CHUNK = 1024
_SOURCE_CHUNK = 8192


@dataclass
class EngineReport:
    """Per-phase wall times plus tree and interaction-list statistics."""

    phase_seconds: dict[str, float]
    total_seconds: float
    n_levels: int
    n_boxes: int
    finest_src_min: int
    finest_src_max: int
    finest_src_mean: float
    list_histograms: dict[str, dict[int, int]] = field(default_factory=dict)
    coincident_skips: int = 0
    parallel: bool = False


def _chunk_ranges(n_items: int, n_chunks: int):
    bounds = np.linspace(0, n_items, n_chunks + 1).astype(int)
    return [(int(bounds[i]), int(bounds[i + 1]))
            for i in range(n_chunks) if bounds[i] < bounds[i + 1]]


def _run_chunked(n_items, worker, parallel, n_workers):
    """Run worker(lo, hi) over chunks of 0..n_items; results are summed."""
    if n_items == 0:
        return 0
    if not parallel:
        return worker(0, n_items)
    chunks = _chunk_ranges(n_items, 4 * n_workers)
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return sum(pool.map(lambda c: worker(*c), chunks))


def _p2m_all(tree: FmmTree, p: int) -> np.ndarray:
    """Outgoing coefficients of every finest-level box at once.

    Same recurrence as :func:`fmm2d.operators.p2m`, with the per-box sums
    done by segmented reduction over the contiguous box ranges.
    """
    lv = tree.finest
    counts = lv.src_counts()
    c = tree.src_pos - np.repeat(lv.center, counts)
    starts = lv.src_offsets[:-1]
    out = np.zeros((lv.n_boxes, p + 1), dtype=np.complex128)
    w = tree.src_strength.astype(np.complex128)
    for j in range(1, p + 1):
        out[:, j] = -np.add.reduceat(w, starts)
        w = w * c
    return out


def _p2l_phase(tree, lists, local, p):
    """Shift particles of p2l-listed source boxes into target local expansions."""
    lv = tree.finest
    for b, sources in enumerate(lists.p2l):
        for a in sources:
            s0, s1 = lv.src_offsets[a], lv.src_offsets[a + 1]
            local[b] += ops.p2l(
                tree.src_pos[s0:s1], tree.src_strength[s0:s1], lv.center[b], p
            )


def _m2m_level(tree, child_coeffs, lev, p):
    """Shift the four children of each level-``lev`` box and sum them."""
    shifts = tree.levels[lev + 1].center - np.repeat(tree.levels[lev].center, 4)
    shifted = ops.m2m(child_coeffs, shifts)
    return shifted.reshape(-1, 4, p + 1).sum(axis=1)


def _m2l_level(tree, weak, mult, local, lev, parallel, n_workers):
    """Accumulate far-field translations for one level, target-major."""
    centers = tree.levels[lev].center
    counts = np.array([w.size for w in weak], dtype=np.int64)
    targets = np.flatnonzero(counts)
    if targets.size == 0:
        return
    src_idx = np.concatenate([weak[t] for t in targets])
    tgt_idx = np.repeat(targets, counts[targets])
    group_off = np.concatenate([[0], np.cumsum(counts[targets])])

    def worker(g0, g1):
        lo, hi = group_off[g0], group_off[g1]
        contrib = ops.m2l(
            mult[src_idx[lo:hi]], centers[src_idx[lo:hi]] - centers[tgt_idx[lo:hi]]
        )
        sums = np.add.reduceat(contrib, group_off[g0:g1] - lo, axis=0)
        local[targets[g0:g1]] += sums
        return 0

    _run_chunked(targets.size, worker, parallel, n_workers)


def _l2l_level(tree, parent_local, lev, p):
    """Push accumulated local expansions from level ``lev`` to its children."""
    shifts = np.repeat(tree.levels[lev].center, 4) - tree.levels[lev + 1].center
    return ops.l2l(np.repeat(parent_local, 4, axis=0), shifts)


def _l2p_phase(tree, local, phi, parallel, n_workers):
    """Evaluate each finest box's local expansion at its evaluation points."""
    lv = tree.finest
    p = local.shape[1] - 1

    def worker(b0, b1):
        e0, e1 = lv.eval_offsets[b0], lv.eval_offsets[b1]
        if e0 == e1:
            return 0
        counts = np.diff(lv.eval_offsets[b0 : b1 + 1])
        w = tree.eval_pos[e0:e1] - np.repeat(lv.center[b0:b1], counts)
        acc = np.repeat(local[b0:b1, p], counts)
        for j in range(p - 1, -1, -1):
            acc = acc * w + np.repeat(local[b0:b1, j], counts)
        phi[e0:e1] += acc
        return 0

    _run_chunked(lv.n_boxes, worker, parallel, n_workers)


def _m2p_phase(tree, lists, mult, phi):
    """Evaluate m2p-listed source expansions directly at target points."""
    lv = tree.finest
    for b, sources in enumerate(lists.m2p):
        e0, e1 = lv.eval_offsets[b], lv.eval_offsets[b + 1]
        if e0 == e1:
            continue
        for a in sources:
            phi[e0:e1] += ops.m2p(mult[a], lv.center[a], tree.eval_pos[e0:e1])


def _p2p_phase(tree, lists, phi, parallel, n_workers):
    """Direct near-field evaluation over the finest strong lists."""
    lv = tree.finest
    soff = lv.src_offsets

    def worker(b0, b1):
        skips = 0
        for b in range(b0, b1):
            e0, e1 = lv.eval_offsets[b], lv.eval_offsets[b + 1]
            if e0 == e1:
                continue
            src = lists.p2p[b]
            zs = np.concatenate([tree.src_pos[soff[a] : soff[a + 1]] for a in src])
            gs = np.concatenate([tree.src_strength[soff[a] : soff[a + 1]] for a in src])
            contrib, n_skip = ops.kernel_block(zs, gs, tree.eval_pos[e0:e1])
            phi[e0:e1] += contrib
            skips += n_skip
        return skips

    return _run_chunked(lv.n_boxes, worker, parallel, n_workers)


def _histogram(lengths) -> dict[int, int]:
    return dict(sorted(Counter(int(n) for n in lengths).items()))


def _report_stats(tree: FmmTree, lists: InteractionLists) -> dict:
    counts = tree.finest.src_counts()
    weak_lengths = [w.size for per in lists.weak for w in per]
    return dict(
        n_levels=tree.n_levels,
        n_boxes=sum(lv.n_boxes for lv in tree.levels),
        finest_src_min=int(counts.min()),
        finest_src_max=int(counts.max()),
        finest_src_mean=float(counts.mean()),
        list_histograms={
            "weak": _histogram(weak_lengths),
            "p2p": _histogram(w.size for w in lists.p2p),
            "p2l": _histogram(w.size for w in lists.p2l),
            "m2p": _histogram(w.size for w in lists.m2p),
        },
    )


def fmm_evaluate(points: ParticleSet, cfg: TreeConfig | None = None, *,
                 parallel: bool = False, n_workers: int | None = None):
    """Evaluate the potential field at all evaluation points.

    Returns ``(values, report)`` with values in the original input order.
    """
    cfg = cfg or TreeConfig()
    if n_workers is None:
        n_workers = min(8, os.cpu_count() or 1)
    p = cfg.p_terms
    times: dict[str, float] = {}
    t_start = time.perf_counter()

    t0 = time.perf_counter()
    tree = build_tree(points, cfg)
    times["sort"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    lists = build_connectivity(tree, cfg.theta)
    times["connect"] = time.perf_counter() - t0

    n_lev = tree.n_levels
    mult: list[np.ndarray | None] = [None] * (n_lev + 1)
    local = [np.zeros((lv.n_boxes, p + 1), dtype=np.complex128)
             for lv in tree.levels]

    t0 = time.perf_counter()
    if n_lev > 0:
        mult[n_lev] = _p2m_all(tree, p)
        _p2l_phase(tree, lists, local[n_lev], p)
    times["p2m"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    for lev in range(n_lev - 1, 0, -1):
        mult[lev] = _m2m_level(tree, mult[lev + 1], lev, p)
    times["m2m"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    for lev in range(1, n_lev + 1):
        _m2l_level(tree, lists.weak[lev], mult[lev], local[lev], lev,
                   parallel, n_workers)
    times["m2l"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    for lev in range(1, n_lev):
        local[lev + 1] += _l2l_level(tree, local[lev], lev, p)
    times["l2l"] = time.perf_counter() - t0

    phi = np.zeros(points.n_evals, dtype=np.complex128)
    t0 = time.perf_counter()
    if n_lev > 0:
        _l2p_phase(tree, local[n_lev], phi, parallel, n_workers)
        _m2p_phase(tree, lists, mult[n_lev], phi)
    times["l2p"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    skips = _p2p_phase(tree, lists, phi, parallel, n_workers)
    times["p2p"] = time.perf_counter() - t0

    values = np.empty_like(phi)
    values[tree.eval_perm] = phi

    total = time.perf_counter() - t_start
    times["other"] = max(0.0, total - sum(times.values()))
    expected_self = points.n_evals if points.evals_alias_sources else 0
    report = EngineReport(
        phase_seconds=times,
        total_seconds=total,
        coincident_skips=max(0, skips - expected_self),
        parallel=parallel,
        **_report_stats(tree, lists),
    )
    return values, report


def direct_evaluate(points: ParticleSet, symmetric: bool = False) -> np.ndarray:
    """Direct pairwise summation oracle; O(N*M) work.

    The symmetric mode shares each pairwise reciprocal between the two
    directions and is only permitted when the evaluation points alias the
    sources; it matches the asymmetric mode to roundoff.
    """
    zs = points.positions
    g = points.strengths
    if not symmetric:
        ze = points.eval_positions
        phi = np.zeros(ze.size, dtype=np.complex128)
        for t0 in range(0, ze.size, _TARGET_CHUNK):
            t1 = min(t0 + _TARGET_CHUNK, ze.size)
            for s0 in range(0, zs.size, _SOURCE_CHUNK):
                s1 = min(s0 + _SOURCE_CHUNK, zs.size)
                block, _ = ops.kernel_block(zs[s0:s1], g[s0:s1], ze[t0:t1])
                phi[t0:t1] += block
        return phi

    if not points.evals_alias_sources:
        raise ValueError("symmetric mode requires evaluation points to alias "
                         "the sources")
    n = zs.size
    gr = points.strengths
    phi_re = np.zeros(n)
    phi_im = np.zeros(n)
    step = 2048
    for i0 in range(0, n, step):
        i1 = min(i0 + step, n)
        block, _ = ops.kernel_block(zs[i0:i1], gr[i0:i1], zs[i0:i1])
        phi_re[i0:i1] += block.real
        phi_im[i0:i1] += block.imag
        for j0 in range(i1, n, step):
            j1 = min(j0 + step, n)
            # one reciprocal block serves both directions with opposite sign
            re_part, im_part, _ = ops.reciprocal_parts(zs[j0:j1], zs[i0:i1])
            phi_re[i0:i1] += re_part.dot(gr[j0:j1])
            phi_im[i0:i1] -= im_part.dot(gr[j0:j1])
            phi_re[j0:j1] -= gr[i0:i1].dot(re_part)
            phi_im[j0:j1] += gr[i0:i1].dot(im_part)
    return phi_re + 1j * phi_im


def max_rel_error(approx, exact) -> float:
    """Infinity norm of (approx - exact) / exact over nonzero references.

    Zero-valued reference entries are skipped; if every entry is zero the
    metric is undefined and a ValueError is raised.
    """
    approx = np.asarray(approx)
    exact = np.asarray(exact)
    if approx.shape != exact.shape:
        raise ValueError("field shapes differ")
    admissible = exact != 0
    if not admissible.any():
        raise ValueError("all reference values are zero; relative error "
                         "undefined")
    err = np.abs(approx[admissible] - exact[admissible])
    return float(np.max(err / np.abs(exact[admissible])))
