"""Adaptive two-dimensional fast multipole method for the harmonic kernel.

The library evaluates all pairwise potentials Phi(y_i) = sum_j g_j/(z_j - y_i)
in near-linear time: sources are organized into a balanced pyramid tree by
successive median splits, box pairs are coupled weakly or strongly by a
separation criterion, and far fields travel through outgoing/incoming
expansion shifts while the residual near field is summed directly.
"""

from .connectivity import (InteractionLists, build_connectivity,
                           classify_level, reclassify_finest, write_lists_csv)
from .datasets import DistributionSpec, sample_points
from .engine import EngineReport, direct_evaluate, fmm_evaluate, max_rel_error
from .geometry import Box, split_direction, well_separated, well_separated_swapped
from .tree import (BoxNode, DegenerateInputError, FmmTree, ParticleSet,
                   TreeConfig, build_tree, num_levels, partition_median)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "BoxNode",
    "DegenerateInputError",
    "DistributionSpec",
    "EngineReport",
    "FmmTree",
    "InteractionLists",
    "ParticleSet",
    "TreeConfig",
    "build_connectivity",
    "build_tree",
    "classify_level",
    "direct_evaluate",
    "fmm_evaluate",
    "max_rel_error",
    "num_levels",
    "partition_median",
    "reclassify_finest",
    "sample_points",
    "split_direction",
    "well_separated",
    "well_separated_swapped",
    "write_lists_csv",
    "__version__",
]
