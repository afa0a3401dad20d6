"""Per-level interaction lists derived from the separation criterion.

Coupling is inherited: the candidates for a box are the children of the boxes
strongly coupled to its parent.  Candidates passing the separation test become
weak (far-field) partners at that level, the rest stay strong.  At the finest
level the strong pairs are reclassified once more with the radii exchanging
roles, which peels off particle-to-local and multipole-to-point work from the
direct near field.

All lists are directed: a list entry names a *source* box contributing to the
*target* box that owns the list, and every list is sorted ascending by source
box index so that accumulation order is deterministic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .geometry import Box, well_separated, well_separated_swapped
from .tree import FmmTree


@dataclass
class InteractionLists:
    """Directed interaction lists for one tree.

    ``weak[l][b]`` holds the far-field source boxes of target ``b`` at level
    ``l`` (empty at level 0).  The finest level additionally carries ``p2p``
    (near-field sources, always containing ``b`` itself), ``p2l`` (sources
    whose particles shift straight into ``b``'s incoming expansion) and
    ``m2p`` (sources whose outgoing expansion is evaluated at ``b``'s points).
    """

    n_levels: int
    weak: list[list[np.ndarray]]
    p2p: list[np.ndarray]
    p2l: list[np.ndarray]
    m2p: list[np.ndarray]


_EMPTY = np.empty(0, dtype=np.int64)


def classify_level(tree: FmmTree, level: int, parent_strong: list[np.ndarray],
                   theta: float):
    """Split each box's inherited candidates into weak and strong lists.

    ``parent_strong`` are the strong lists of level ``level - 1``.  The
    candidates of box ``b`` are the children of the boxes strongly coupled to
    ``b``'s parent; a box is always among its own candidates because strong
    coupling includes self-coupling.
    """
    lv = tree.levels[level]
    centers, hw, hh = lv.center, lv.half_width, lv.half_height
    strong: list[np.ndarray] = []
    weak: list[np.ndarray] = []
    for b in range(lv.n_boxes):
        parents = parent_strong[b // 4]
        cand = (parents[:, None] * 4 + np.arange(4, dtype=np.int64)).ravel()
        target = Box(centers[b], hw[b], hh[b])
        sources = Box(centers[cand], hw[cand], hh[cand])
        far = well_separated(target, sources, theta)
        weak.append(cand[far])
        strong.append(cand[~far])
    return strong, weak


def reclassify_finest(tree: FmmTree, strong: list[np.ndarray], theta: float):
    """Refine finest-level strong pairs with the radii exchanging roles.

    For a non-self strong pair that passes the swapped test, the larger source
    box moves to the target's p2l list and the smaller source box to the m2p
    list; equal radii (where the swapped test cannot pass for a strong pair)
    and self pairs stay in the direct near field.
    """
    lv = tree.levels[tree.n_levels]
    centers, hw, hh = lv.center, lv.half_width, lv.half_height
    radius = np.hypot(hw, hh)
    p2p: list[np.ndarray] = []
    p2l: list[np.ndarray] = []
    m2p: list[np.ndarray] = []
    for b in range(lv.n_boxes):
        src = strong[b]
        target = Box(centers[b], hw[b], hh[b])
        sources = Box(centers[src], hw[src], hh[src])
        swapped = well_separated_swapped(target, sources, theta)
        moved = swapped & (src != b) & (radius[src] != radius[b])
        larger = moved & (radius[src] > radius[b])
        smaller = moved & (radius[src] < radius[b])
        p2p.append(src[~moved])
        p2l.append(src[larger])
        m2p.append(src[smaller])
    return p2p, p2l, m2p


def build_connectivity(tree: FmmTree, theta: float) -> InteractionLists:
    """Run the level-by-level classification and the finest reclassification.

    Weak lists are kept for every level; intermediate strong lists are
    transient working state and only the finest level's survive, split into
    p2p/p2l/m2p.
    """
    weak: list[list[np.ndarray]] = [[_EMPTY]]
    strong = [np.array([0], dtype=np.int64)]
    for level in range(1, tree.n_levels + 1):
        strong, wk = classify_level(tree, level, strong, theta)
        weak.append(wk)
    p2p, p2l, m2p = reclassify_finest(tree, strong, theta)
    return InteractionLists(
        n_levels=tree.n_levels, weak=weak, p2p=p2p, p2l=p2l, m2p=m2p
    )


def write_lists_csv(lists: InteractionLists, path) -> None:
    """Dump all lists as ``level,target_box,kind,source_box`` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "target_box", "kind", "source_box"])
        for level, per_box in enumerate(lists.weak):
            for b, sources in enumerate(per_box):
                for a in sources:
                    writer.writerow([level, b, "weak", int(a)])
        finest = lists.n_levels
        for kind, per_box in (("p2p", lists.p2p), ("p2l", lists.p2l),
                              ("m2p", lists.m2p)):
            for b, sources in enumerate(per_box):
                for a in sources:
                    writer.writerow([finest, b, kind, int(a)])
