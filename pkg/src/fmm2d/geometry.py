"""Complex-plane box geometry and the separation predicates driving connectivity.

Boxes are axis-aligned rectangles described by a complex center and two half
extents.  A box "radius" is the half-diagonal of its rectangle, i.e. the radius
of the tightest disc enclosing it.  All predicates broadcast over numpy arrays,
so a ``Box`` may hold scalars or equally shaped arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Default separation parameter; values in (0, 1) are valid.
DEFAULT_THETA = 0.5


@dataclass(frozen=True)
class Box:
    """Rectangle with complex center and non-negative half extents."""

    center: complex | np.ndarray
    half_width: float | np.ndarray
    half_height: float | np.ndarray

    def radius(self):
        """Half-diagonal of the rectangle."""
        return np.hypot(self.half_width, self.half_height)


def well_separated(a: Box, b: Box, theta: float = DEFAULT_THETA):
    """Separation test: max(r_a, r_b) + theta*min(r_a, r_b) <= theta*d.

    Boundary equality counts as separated.  Symmetric in (a, b) and total for
    finite inputs; broadcasts elementwise over array-valued boxes.
    """
    ra = a.radius()
    rb = b.radius()
    d = np.abs(a.center - b.center)
    return np.maximum(ra, rb) + theta * np.minimum(ra, rb) <= theta * d


def well_separated_swapped(a: Box, b: Box, theta: float = DEFAULT_THETA):
    """Separation test with the two radii exchanging roles.

    min(r_a, r_b) + theta*max(r_a, r_b) <= theta*d.  Weaker than
    :func:`well_separated` for theta <= 1: whenever the normal test passes,
    this one does too.
    """
    ra = a.radius()
    rb = b.radius()
    d = np.abs(a.center - b.center)
    return np.minimum(ra, rb) + theta * np.maximum(ra, rb) <= theta * d


def split_direction(box: Box) -> str:
    """Axis along which the box is longer: ``"x"`` or ``"y"``.

    Splitting across the longer side drives children toward squares.  Exact
    ties split along x.
    """
    return "y" if box.half_height > box.half_width else "x"
