"""Trotterized kicked-top simulation, Floquet Hamiltonian learning and chaos diagnostics."""

from .diagnostics import (
    AccuracyTrace,
    EigenphaseSpectrum,
    eigenphases,
    fit_accuracy_series,
    overlap_matrix,
    participation_ratio,
    simulation_accuracy,
    spacing_ratio,
)
from .kicked_top import (
    DEFAULT_PARAMS,
    FloquetVariant,
    ModelParams,
    TrotterStep,
    build_hamiltonians,
    evolve,
    exact_step,
    floquet_operator,
)
from .learning import (
    ConstraintMatrix,
    ReconstructionResult,
    constraint_matrix,
    parameter_distance,
    reconstruct,
    sample_initial_states,
    trotter_threshold,
)
from .magnus import AnsatzSet, FMCoefficients, ansatz_set, magnus_term, project_fm_coefficients
from .rmt_oracle import (
    QMatrix,
    analytic_q_a0,
    ise_average_Q,
    lambda_rmt,
    monte_carlo_lambda,
    q_cue_element,
    sample_haar_unitary,
)
from .spin_algebra import (
    SpinSize,
    build_spin_operators,
    coherent_state,
    coherent_states,
    expm_hermitian,
    hs_inner,
    operator_product,
)

__version__ = "0.1.0"
