"""Random cluster models with an external field: exact sums, the rank-2
extended Ising reformulation, Bethe bounds and the d-regular phase diagram."""

from __future__ import annotations

from .errors import RCLabError
from .exact import (
    EIsingParams,
    RCParams,
    TwoSpinWeights,
    eising_partition,
    potts_partition,
    rank2_partition,
    rc_partition,
    rc_partition_no_field,
    sandwich_check,
    two_spin_partition,
)
from .graphs import Graph, build_graph, cycle_graph, cyclic_components_max, gen_gw_tree, gen_random_regular, path_graph
from .mapping import assemble_identities, rc_to_eising, rc_to_two_spin, two_spin_to_eising
from .bethe import bethe_max, bp_run, tree_pressure_mc
from .regular import find_B_plus, maximize_G, phi_ising, phi_rc_regular, transition_probe, w_c

__version__ = "0.1.0"

__all__ = [
    "RCLabError",
    "EIsingParams",
    "RCParams",
    "TwoSpinWeights",
    "eising_partition",
    "potts_partition",
    "rank2_partition",
    "rc_partition",
    "rc_partition_no_field",
    "sandwich_check",
    "two_spin_partition",
    "Graph",
    "build_graph",
    "cycle_graph",
    "path_graph",
    "cyclic_components_max",
    "gen_gw_tree",
    "gen_random_regular",
    "assemble_identities",
    "rc_to_eising",
    "rc_to_two_spin",
    "two_spin_to_eising",
    "bethe_max",
    "bp_run",
    "tree_pressure_mc",
    "find_B_plus",
    "maximize_G",
    "phi_ising",
    "phi_rc_regular",
    "transition_probe",
    "w_c",
]
