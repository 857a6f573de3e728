"""Grouped Pauli measurement with confidence-bound shot allocation."""

from .allocation import (
    Allocation,
    AllocationError,
    BoundKind,
    BoundSpec,
    OperatorStats,
    conf_bound,
    even_shots,
    naive_epsilon,
    optimize_weights,
    overlap_weights,
    weights_to_shots,
)
from .estimation import EnergyEstimate, IntegrityError, MoMConfig, estimate_energy, extract_signs, median_of_means
from .grouping import Group, GroupSet, build_qwc_graph, maxmin_grouping, min_clique_cover
from .pauli import Hamiltonian, HamiltonianParseError, PauliString, covered_by, load_hamiltonian, parse_hamiltonian, qwc
from .simulator import MeasurementRecord, StateVector, execute_recipe, ground_state, sample_basis

__version__ = "0.1.0"
