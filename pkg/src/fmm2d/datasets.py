"""Seeded point-cloud generators for the benchmark experiments.

Randomness comes from the counter-based Philox bit generator, whose streams
are stable across platforms and numpy releases.  One seed is split into two
independent child streams, positions first and strengths second, so the same
seed always reproduces the same particle set bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tree import ParticleSet

KINDS = ("uniform", "normal", "layer")


@dataclass(frozen=True)
class DistributionSpec:
    """Point distribution: all samples end up inside the unit square."""

    kind: str = "uniform"
    sigma2: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


def _streams(seed: int):
    children = np.random.SeedSequence(seed).spawn(2)
    return (np.random.Generator(np.random.Philox(children[0])),
            np.random.Generator(np.random.Philox(children[1])))


def _rejected_normal(rng, n, sigma, lo=0.0, hi=1.0):
    """N(0.5, sigma^2) samples redrawn until they land in [lo, hi]."""
    out = np.empty(0)
    while out.size < n:
        draw = rng.normal(0.5, sigma, size=max(n - out.size, 128))
        keep = draw[(draw >= lo) & (draw <= hi)]
        out = np.concatenate([out, keep])
    return out[:n]


def sample_points(spec: DistributionSpec, n: int) -> ParticleSet:
    """Draw ``n`` sources (evaluation points alias them) plus strengths.

    uniform: i.i.d. on the unit square.  normal: isotropic about (0.5, 0.5)
    with variance ``sigma2`` per coordinate, rejected to the square.  layer:
    uniform x, normal y rejected to [0, 1].  Strengths are uniform on [-1, 1].
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    pos_rng, g_rng = _streams(spec.seed)
    sigma = float(np.sqrt(spec.sigma2))
    if spec.kind == "uniform":
        x = pos_rng.uniform(0.0, 1.0, n)
        y = pos_rng.uniform(0.0, 1.0, n)
    elif spec.kind == "normal":
        pts = np.empty((0, 2))
        while pts.shape[0] < n:
            draw = pos_rng.normal(0.5, sigma, size=(max(n - pts.shape[0], 128), 2))
            inside = np.all((draw >= 0.0) & (draw <= 1.0), axis=1)
            pts = np.concatenate([pts, draw[inside]])
        x, y = pts[:n, 0], pts[:n, 1]
    else:
        x = pos_rng.uniform(0.0, 1.0, n)
        y = _rejected_normal(pos_rng, n, sigma)
    strengths = g_rng.uniform(-1.0, 1.0, n)
    return ParticleSet(positions=x + 1j * y, strengths=strengths)
