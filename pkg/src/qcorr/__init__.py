"""Correlation and entanglement measures for bipartite quantum states, and
entanglement production along a jump-type XXZ chain dynamics."""

from .bipartite import (
    DensityMatrix,
    PureEnsemble,
    bell_state,
    ensemble_from_isometry,
    gns_orthogonal_decomposition,
    max_entangled,
    partial_trace,
    partial_transpose,
    product_state,
    separable_from_ensemble,
    singlet_state,
)
from .correlations import (
    DiscreteJoint,
    classical_correlation,
    quantum_correlation_coefficient,
    quantum_correlation_distance,
    quantum_correlation_profile,
    separable_shadow,
)
from .ensemble_search import OptimizerSettings
from .entanglement import (
    EntropyFunctional,
    cp_cocp_verdict,
    entanglement_mapping,
    entropy,
    eof,
    m_a,
    ppt_direct,
)
from .numerics import HermitianOperator, kron, matrix_function, trace_norm
from .xxz import ChainConfig, evolve, gibbs_state, jump_maps, production_experiment, xxz_hamiltonian

__version__ = "0.1.0"
