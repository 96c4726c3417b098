"""Decomposition spaces on stratified Lie groups.

Group laws and homogeneous quasi-norms, lattices, intermediate (alpha)
coverings and their chain metrics, bounded admissible partitions of unity,
decomposition-space norms and the embedding diagnostics built on them.
"""

from .reports import VERSION as __version__
from .groups import StratifiedGroup, build_group, builtin, group_from_json
from .quasinorm import QuasiNorm
from .lattice import Lattice, default_lattice, make_lattice
from .covering import (
    Covering,
    admissibility_estimate,
    build_alpha,
    build_besov,
    build_uniform,
    intersect,
)
from .metric import build_graph, chain_distance, distortion_report
from .grid import GridFunction, GridSpec, dft, idft
from .bapu import Bapu, build_alpha_bapu, build_besov_bapu, validate_bapu
from .modnorm import NormParams, alpha_mod_norm, besov_norm, decomposition_norm, gaussian_packet
from .embeddings import compatibility_sup, engel_blowup_witness, geometric_embed

__all__ = [
    "__version__", "StratifiedGroup", "build_group", "builtin", "group_from_json", "QuasiNorm",
    "Lattice", "default_lattice", "make_lattice", "Covering", "admissibility_estimate",
    "build_alpha", "build_besov", "build_uniform", "intersect", "build_graph",
    "chain_distance", "distortion_report", "GridFunction", "GridSpec", "dft", "idft", "Bapu",
    "build_alpha_bapu", "build_besov_bapu", "validate_bapu", "NormParams", "alpha_mod_norm",
    "besov_norm", "decomposition_norm", "gaussian_packet", "compatibility_sup",
    "engel_blowup_witness", "geometric_embed",
]
