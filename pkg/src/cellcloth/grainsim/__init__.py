"""Front-tracking simulator of 2D grain-boundary networks on the unit torus."""

from cellcloth.grainsim.network import (
    ExportInfo,
    Network2D,
    NetworkError,
    load_network,
    mic,
    save_network,
)
from cellcloth.grainsim.generators import (
    generate_perturbed_lattice,
    generate_voronoi,
    make_honeycomb,
    make_loop,
    voronoi_of_points,
)
from cellcloth.grainsim.dynamics import (
    adaptive_timestep,
    node_velocities,
    junction_velocities,
    refine,
    step_finite_mobility,
    step_vnm,
    total_boundary_length,
)
from cellcloth.grainsim.surgery import (
    PreconditionError,
    apply_events,
    delete_digon,
    delete_loop,
    delete_monogon,
    detect_events,
    flip_edge,
)
from cellcloth.grainsim.evolve import EvolveResult, SimConfig, evolve

__all__ = [
    "Network2D",
    "NetworkError",
    "ExportInfo",
    "mic",
    "save_network",
    "load_network",
    "generate_voronoi",
    "generate_perturbed_lattice",
    "make_honeycomb",
    "make_loop",
    "voronoi_of_points",
    "adaptive_timestep",
    "node_velocities",
    "junction_velocities",
    "refine",
    "step_finite_mobility",
    "step_vnm",
    "total_boundary_length",
    "PreconditionError",
    "apply_events",
    "delete_digon",
    "delete_loop",
    "delete_monogon",
    "detect_events",
    "flip_edge",
    "SimConfig",
    "EvolveResult",
    "evolve",
]
