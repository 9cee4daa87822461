"""Delta-operator consensus over randomly switching networks with faulty agents."""
from .analysis import (
    BoundReport,
    ExpectedTransition,
    StationaryVector,
    bound_corollary1,
    bound_theorem4,
    bound_theorem5,
    consensus_value,
    expected_transition,
    group_inverse,
    lambda_bar,
    norm_sq_mat,
    norm_sq_vec,
    perturbation_shift,
    stationary_vector,
)
from .dynamics import (
    SamplingScheme,
    StateVector,
    delta_step,
    dwell_transition,
    expm,
    lyapunov_delta,
    lyapunov_quadratic,
    matrix_power,
)
from .errors import ConsensusError, ConvergenceError, HypothesisError, SamplingPeriodError
from .graph import (
    FaultSpec,
    Graph,
    Laplacian,
    apply_fault,
    build_laplacian,
    is_strongly_connected,
    laplacian_spectrum,
    max_degree,
)
from .kernels import BACKEND
from .switching import (
    Scenario,
    SwitchingEnsemble,
    Trajectory,
    expected_graph,
    sample_switch_sequence,
    scenario_ensemble,
    simulate,
)
from .verify import EnsembleStats, check_almost_sure, estimate_mean_consensus, estimate_probability_consensus

__version__ = "0.1.0"
