"""Balanced pyramid tree built by successive median splits of the source points.

Level ``l`` holds exactly ``4**l`` boxes.  Each box owns one contiguous range of
the permuted source arrays and one of the permuted evaluation arrays; box ``k``
at level ``l`` has children ``4k .. 4k+3`` at level ``l+1`` (no stored links).
Children are produced by two successive median splits, so sibling populations
differ by at most one source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Box, split_direction


class DegenerateInputError(ValueError):
    """All points in a box coincide while further levels are still required."""


@dataclass
class ParticleSet:
    """Sources in the complex plane with real strengths, plus evaluation points.

    ``eval_positions=None`` makes the evaluation points alias the sources,
    which is what the symmetric direct evaluation requires.
    """

    positions: np.ndarray
    strengths: np.ndarray
    eval_positions: np.ndarray | None = None

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=np.complex128)
        self.strengths = np.ascontiguousarray(self.strengths, dtype=np.float64)
        if self.eval_positions is None or self.eval_positions is self.positions:
            self.eval_positions = self.positions
        else:
            self.eval_positions = np.ascontiguousarray(
                self.eval_positions, dtype=np.complex128
            )
        if self.positions.ndim != 1 or self.positions.size < 1:
            raise ValueError("positions must be a non-empty 1-d complex array")
        if self.strengths.shape != self.positions.shape:
            raise ValueError("strengths must be index-aligned with positions")
        if not np.isfinite(self.strengths).all():
            raise ValueError("strengths must be finite")
        for name in ("positions", "eval_positions"):
            arr = getattr(self, name)
            if not (np.isfinite(arr.real).all() and np.isfinite(arr.imag).all()):
                raise ValueError(f"{name} must be finite")

    @property
    def n_sources(self) -> int:
        return self.positions.size

    @property
    def n_evals(self) -> int:
        return self.eval_positions.size

    @property
    def evals_alias_sources(self) -> bool:
        return self.eval_positions is self.positions


@dataclass(frozen=True)
class TreeConfig:
    """Tuning knobs: target sources per finest box, separation parameter, terms."""

    n_desired_per_box: int = 35
    theta: float = 0.5
    p_terms: int = 17

    def __post_init__(self):
        if self.n_desired_per_box < 1:
            raise ValueError("n_desired_per_box must be >= 1")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if self.p_terms < 1:
            raise ValueError("p_terms must be >= 1")


def num_levels(n_sources: int, n_desired: int) -> int:
    """Tree depth for ``n_sources`` points at ``n_desired`` sources per box.

    max(0, ceil(0.5 * log2((5/8) * n_sources / n_desired))).
    """
    if n_sources < 1 or n_desired < 1:
        raise ValueError("n_sources and n_desired must be >= 1")
    raw = 0.5 * math.log2(0.625 * n_sources / n_desired)
    return max(0, math.ceil(raw))


def partition_median(coords: np.ndarray, *companions: np.ndarray) -> int:
    """Partition ``coords`` in place around its median; returns the split index.

    After the call every element before the split index is <= every element at
    or after it, and the left part holds ceil(n/2) elements.  Each companion
    array is reordered by the same permutation.  Deterministic for a given
    input (selection-based, no randomization).
    """
    n = coords.shape[0]
    if n < 1:
        raise ValueError("cannot partition an empty array")
    k = (n + 1) // 2
    if n > 1:
        order = np.argpartition(coords, k - 1)
        coords[:] = coords[order]
        for comp in companions:
            comp[:] = comp[order]
    return k


@dataclass
class LevelBoxes:
    """Struct-of-arrays for one tree level (all arrays of length 4**l)."""

    center: np.ndarray
    half_width: np.ndarray
    half_height: np.ndarray
    src_offsets: np.ndarray
    eval_offsets: np.ndarray

    @property
    def n_boxes(self) -> int:
        return self.center.size

    def boxes(self) -> Box:
        """Array-valued Box view for vectorized predicates."""
        return Box(self.center, self.half_width, self.half_height)

    def src_counts(self) -> np.ndarray:
        return np.diff(self.src_offsets)

    def eval_counts(self) -> np.ndarray:
        return np.diff(self.eval_offsets)


@dataclass(frozen=True)
class BoxNode:
    """Single-box view: geometry plus its source and evaluation ranges."""

    geometry: Box
    src_begin: int
    src_end: int
    eval_begin: int
    eval_end: int


@dataclass
class FmmTree:
    """Pyramid tree over permuted point arrays.

    ``src_pos[i]`` is the original source ``positions[src_perm[i]]``; the same
    relation ties ``eval_pos`` to ``eval_perm``.
    """

    n_levels: int
    levels: list[LevelBoxes] = field(repr=False)
    src_pos: np.ndarray = field(repr=False)
    src_strength: np.ndarray = field(repr=False)
    eval_pos: np.ndarray = field(repr=False)
    src_perm: np.ndarray = field(repr=False)
    eval_perm: np.ndarray = field(repr=False)

    @property
    def finest(self) -> LevelBoxes:
        return self.levels[self.n_levels]

    def box(self, level: int, k: int) -> BoxNode:
        lv = self.levels[level]
        return BoxNode(
            geometry=Box(
                lv.center[k], float(lv.half_width[k]), float(lv.half_height[k])
            ),
            src_begin=int(lv.src_offsets[k]),
            src_end=int(lv.src_offsets[k + 1]),
            eval_begin=int(lv.eval_offsets[k]),
            eval_end=int(lv.eval_offsets[k + 1]),
        )


def _clamped_levels(n_sources: int, n_desired: int) -> int:
    # Never allow more levels than 4**l <= N supports: the median-split floor
    # chain then guarantees every box keeps at least one source.
    lev = num_levels(n_sources, n_desired)
    while lev > 0 and 4**lev > n_sources:
        lev -= 1
    return lev


def _split_sources(xs, ys, gs, perm, s0, s1, axis):
    """Median-split sources in [s0, s1) along axis; returns (mid, cut value)."""
    if axis == "x":
        coords, other = xs[s0:s1], ys[s0:s1]
    else:
        coords, other = ys[s0:s1], xs[s0:s1]
    k = partition_median(coords, other, gs[s0:s1], perm[s0:s1])
    return s0 + k, float(coords[k - 1])


def _split_evals(ex, ey, perm, e0, e1, axis, cut):
    """Stable two-way split of evaluation points against the source cut."""
    if e1 == e0:
        return e0
    coords = ex[e0:e1] if axis == "x" else ey[e0:e1]
    left = coords <= cut
    order = np.concatenate([np.flatnonzero(left), np.flatnonzero(~left)])
    ex[e0:e1] = ex[e0:e1][order]
    ey[e0:e1] = ey[e0:e1][order]
    perm[e0:e1] = perm[e0:e1][order]
    return e0 + int(np.count_nonzero(left))


def _cut_rect(rect, axis, cut):
    x0, x1, y0, y1 = rect
    if axis == "x":
        return (x0, cut, y0, y1), (cut, x1, y0, y1)
    return (x0, x1, y0, cut), (x0, x1, cut, y1)


def _rect_box(rect) -> Box:
    x0, x1, y0, y1 = rect
    return Box(complex((x0 + x1) / 2, (y0 + y1) / 2), (x1 - x0) / 2, (y1 - y0) / 2)


def build_tree(points: ParticleSet, cfg: TreeConfig) -> FmmTree:
    """Build the pyramid tree, permuting the point arrays level by level.

    The root box is the tight bounding rectangle of sources and evaluation
    points together.  Each box is split twice in succession; both split axes
    follow the eccentricity of the rectangle being cut, the cut coordinate is
    the source median, and evaluation points follow by comparison against that
    same cut.

    Raises :class:`DegenerateInputError` when a box whose points all coincide
    must be split further.
    """
    n = points.n_sources
    m = points.n_evals
    n_lev = _clamped_levels(n, cfg.n_desired_per_box)

    xs = points.positions.real.copy()
    ys = points.positions.imag.copy()
    gs = points.strengths.copy()
    if points.evals_alias_sources:
        ex, ey = points.positions.real.copy(), points.positions.imag.copy()
    else:
        ex, ey = points.eval_positions.real.copy(), points.eval_positions.imag.copy()
    sperm = np.arange(n, dtype=np.int64)
    eperm = np.arange(m, dtype=np.int64)

    x0 = min(xs.min(), ex.min())
    x1 = max(xs.max(), ex.max())
    y0 = min(ys.min(), ey.min())
    y1 = max(ys.max(), ey.max())

    rects = [(x0, x1, y0, y1)]
    root = _rect_box(rects[0])
    levels = [
        LevelBoxes(
            center=np.array([root.center], dtype=np.complex128),
            half_width=np.array([root.half_width]),
            half_height=np.array([root.half_height]),
            src_offsets=np.array([0, n], dtype=np.int64),
            eval_offsets=np.array([0, m], dtype=np.int64),
        )
    ]

    for lev in range(n_lev):
        cur = levels[lev]
        nb = cur.n_boxes
        child_rects = []
        src_off = np.empty(4 * nb + 1, dtype=np.int64)
        eval_off = np.empty(4 * nb + 1, dtype=np.int64)
        src_off[0] = 0
        eval_off[0] = 0

        for k in range(nb):
            s0, s1 = int(cur.src_offsets[k]), int(cur.src_offsets[k + 1])
            e0, e1 = int(cur.eval_offsets[k]), int(cur.eval_offsets[k + 1])
            if np.all(xs[s0:s1] == xs[s0]) and np.all(ys[s0:s1] == ys[s0]):
                raise DegenerateInputError(
                    f"all {s1 - s0} source points in box {k} at level {lev} "
                    f"coincide at ({xs[s0]}, {ys[s0]}) but {n_lev - lev} more "
                    "level(s) are required; reduce the level count or perturb "
                    "the input"
                )
            rect = rects[k]
            axis = split_direction(_rect_box(rect))
            sm, cut = _split_sources(xs, ys, gs, sperm, s0, s1, axis)
            em = _split_evals(ex, ey, eperm, e0, e1, axis, cut)
            half_rects = _cut_rect(rect, axis, cut)
            src_bounds = ((s0, sm), (sm, s1))
            eval_bounds = ((e0, em), (em, e1))
            for h in range(2):
                h0, h1 = src_bounds[h]
                f0, f1 = eval_bounds[h]
                hrect = half_rects[h]
                haxis = split_direction(_rect_box(hrect))
                hm, hcut = _split_sources(xs, ys, gs, sperm, h0, h1, haxis)
                fm = _split_evals(ex, ey, eperm, f0, f1, haxis, hcut)
                left_rect, right_rect = _cut_rect(hrect, haxis, hcut)
                child_rects.extend([left_rect, right_rect])
                c = 4 * k + 2 * h
                src_off[c + 1], src_off[c + 2] = hm, h1
                eval_off[c + 1], eval_off[c + 2] = fm, f1

        cb = np.array([_rect_box(r).center for r in child_rects], dtype=np.complex128)
        hw = np.array([(r[1] - r[0]) / 2 for r in child_rects])
        hh = np.array([(r[3] - r[2]) / 2 for r in child_rects])
        levels.append(
            LevelBoxes(
                center=cb,
                half_width=hw,
                half_height=hh,
                src_offsets=src_off,
                eval_offsets=eval_off,
            )
        )
        rects = child_rects

    return FmmTree(
        n_levels=n_lev,
        levels=levels,
        src_pos=xs + 1j * ys,
        src_strength=gs,
        eval_pos=ex + 1j * ey,
        src_perm=sperm,
        eval_perm=eperm,
    )
