"""Learning-based distributed observer and adaptive leader-following
synchronization of two-link arms, with numerical diagnostics."""
from .analysis import (
    PEReport,
    agent_lyapunov,
    convergence_metrics,
    estimate_period,
    observer_lyapunov,
    pe_measure,
)
from .config import build_config, reference_scenario
from .controller import (
    ControllerGains,
    control_torque,
    ref_acceleration,
    ref_velocity,
    sliding_error,
    theta_hat_derivative,
)
from .errors import *  # noqa: F401,F403
from .graph import CommGraph, build_graph, default_topology, h_matrix, laplacian
from .lagrange import (
    ArmState,
    TwoLinkArmParams,
    coriolis_matrix,
    forward_dynamics,
    gravity_vector,
    mass_matrix,
    mass_matrix_rate,
    regressor_Y,
)
from .leader import LeaderModel, eval_p, eval_phi, eval_phi_rate, leader_output, polynomial_leader, van_der_pol
from .observer import (
    ObserverBank,
    ObserverNodeState,
    RhoSpec,
    default_rho_for_polynomial_leader,
    neighborhood_error,
    neighborhood_errors,
    observer_derivatives,
    reference_rho,
    rho_eval,
)
from .sim import SimConfig, SimLog, rk4_step, run

__version__ = "0.1.0"
