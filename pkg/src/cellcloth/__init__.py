"""Statistical topology of random cell complexes.

Cell complexes are represented by typed adjacency graphs.  The local
topology around a root vertex is captured by a swatch (a rooted ball of
bounded graph radius); aggregating swatch types over all roots gives a
cloth (one frequency distribution per radius).  Cloths of two complexes
are compared by an earth mover's distance whose ground metric is the
reciprocal size of the largest common subswatch.

The :mod:`cellcloth.grainsim` subpackage contains a front-tracking
simulator of 2D grain-boundary networks on the unit torus which produces
evolving cell complexes, and :mod:`cellcloth.harness` drives convergence
experiments against reference states.
"""

__version__ = "0.1.0"

from cellcloth.graphcore import AdjacencyGraph, DegreeConstraint, GRAIN_CONSTRAINT
from cellcloth.swatch import Swatch, SwatchType, extract_swatch, canonicalize, restrict
from cellcloth.cloth import Cloth, SwatchTypeTree, compute_cloth, build_tree
from cellcloth.metric import (
    swatch_distance,
    cloth_distance,
    cloth_distance_flow_oracle,
    limit_distance,
)

__all__ = [
    "AdjacencyGraph",
    "DegreeConstraint",
    "GRAIN_CONSTRAINT",
    "Swatch",
    "SwatchType",
    "extract_swatch",
    "canonicalize",
    "restrict",
    "Cloth",
    "SwatchTypeTree",
    "compute_cloth",
    "build_tree",
    "swatch_distance",
    "cloth_distance",
    "cloth_distance_flow_oracle",
    "limit_distance",
]
