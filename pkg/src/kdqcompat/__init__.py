"""Classical compatibility of disjoint quantum measurements.

Exact structure and nested-commutator checks on Pauli-string Hamiltonians,
plus Kirkwood-Dirac quasiprobability and two-point-measurement distributions.
"""
from .compat import CompatReport, Witness, bch_partial, check_closure, check_enumerated
from .kdq import MeasurementSpec, QuasiDistribution, Scenario, kdq_distribution, marginal
from .model import Model, Partition, classify, format_hamiltonian, interaction_decomposition, parse_hamiltonian
from .pauli import PauliString, PauliSum
from .witness import SearchBudget, Verdict, screen_darwinism, search

__version__ = "0.1.0"
