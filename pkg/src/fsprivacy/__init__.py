"""Zero-sum cost masking for distributed optimization, with privacy analysis.

Agents hide the affine part of their local costs behind correlated Gaussian
masks that cancel in the sum, then run distributed gradient descent on the
masked costs. The package simulates both phases and measures what a passive
coalition of agents can learn.
"""
__version__ = "0.1.0"

from ._backend import BACKEND
from .adversary import (
    NO_GUARANTEE,
    AdversaryView,
    CorruptedSet,
    PrivacyReport,
    ReducedView,
    ScenarioPair,
    corollary_epsilon,
    corollary_table,
    degree_privacy_epsilon,
    empirical_kl,
    extract_view,
    random_scenario,
    reduce_view,
    reduced_view_batch,
    sampled_corollary_epsilon,
    theoretical_epsilon,
    validate_scenario,
)
from .costs import Box, PolynomialCost, QuadraticCost, aggregate_minimizer, project
from .errors import DivergenceError, DomainError, ScenarioError, SupportMismatchError
from .graph import (
    Topology,
    complete_graph,
    cycle_graph,
    induced_subgraph,
    is_connected,
    is_vertex_cut,
    path_graph,
    random_graph,
    vertex_connectivity,
)
from .obfuscation import (
    MaskSet,
    PairwiseNoise,
    compute_masks,
    draw_noise,
    effective_costs,
    mask_all_degrees,
    mask_degree,
    run_phase_one,
)
from .optimizer import DgdConfig, ExecutionTrace, consensus_weights, dgd_run, disagreement
from .rng import CounterRNG
from .spectral import (
    DegenerateGaussian,
    algebraic_connectivity,
    degenerate_density,
    eigendecompose,
    gaussian_kl,
    generalized_inverse,
    laplacian,
    pseudo_determinant,
    sample_mask_vectors,
)

__all__ = [
    "BACKEND",
    "NO_GUARANTEE",
    "AdversaryView",
    "CorruptedSet",
    "PrivacyReport",
    "ReducedView",
    "ScenarioPair",
    "corollary_epsilon",
    "corollary_table",
    "degree_privacy_epsilon",
    "empirical_kl",
    "extract_view",
    "random_scenario",
    "reduce_view",
    "reduced_view_batch",
    "sampled_corollary_epsilon",
    "theoretical_epsilon",
    "validate_scenario",
    "Box",
    "PolynomialCost",
    "QuadraticCost",
    "aggregate_minimizer",
    "project",
    "DivergenceError",
    "DomainError",
    "ScenarioError",
    "SupportMismatchError",
    "Topology",
    "complete_graph",
    "cycle_graph",
    "induced_subgraph",
    "is_connected",
    "is_vertex_cut",
    "path_graph",
    "random_graph",
    "vertex_connectivity",
    "MaskSet",
    "PairwiseNoise",
    "compute_masks",
    "draw_noise",
    "effective_costs",
    "mask_all_degrees",
    "mask_degree",
    "run_phase_one",
    "DgdConfig",
    "ExecutionTrace",
    "consensus_weights",
    "dgd_run",
    "disagreement",
    "CounterRNG",
    "DegenerateGaussian",
    "algebraic_connectivity",
    "degenerate_density",
    "eigendecompose",
    "gaussian_kl",
    "generalized_inverse",
    "laplacian",
    "pseudo_determinant",
    "sample_mask_vectors",
]
