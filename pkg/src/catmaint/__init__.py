"""Deterministic closed-loop simulator for local catalog maintenance.

A chief spacecraft with attitude-only control keeps Kalman-filtered
estimates of several co-orbiting deputies below an entropy bound by
pointing a conical sensor at whichever deputy a supervisor selects,
using a constrained model predictive controller.
"""

from .attitude import (
    PITCH_GUARD,
    ChiefAttitudeState,
    InertiaMatrix,
    NearSingularPitch,
    TorqueCommand,
    euler_rates,
    omega_dot,
    orbital_rate_body,
    step_attitude,
)
from .estimation import (
    BeliefCatalog,
    DegenerateCovariance,
    Measurement,
    SingularInnovation,
    discrete_process_noise,
    entropies,
    entropy,
    log_det_psd,
    make_belief,
    propagate_belief,
    update_belief,
)
from .frames import (
    AzEl,
    EulerAngles321,
    GimbalLock,
    ZeroVector,
    azel,
    euler_to_rotmat,
    is_rotation_matrix,
    rotmat_to_euler,
    skew,
    wrap_angle,
)
from .mpc import (
    ELEVATION_TO_PITCH,
    ControlSequence,
    MaxIterations,
    MpcConfig,
    ReferenceTrajectory,
    SolverConfig,
    SolverFailure,
    build_reference,
    mpc_cost,
    rollout,
    shift_warm_start,
    solve_mpc,
)
from .relmotion import (
    DeputyState,
    Ellipse,
    InvalidSpec,
    LineSegment,
    NmtVariant,
    OrbitParams,
    StationaryPoint,
    cw_matrix,
    cw_matrix_from_eta,
    cw_transition,
    propagate_deputy,
    propagate_deputy_rk4,
    sample_nmt,
    validate_nmt,
)
from .sensing import (
    ConstraintBounds,
    ObservationMatrix,
    SensorConfig,
    ZeroRange,
    build_observation,
    constraint_vector,
    in_fov,
)
from .simloop import (
    InitConfig,
    NoiseConfig,
    ScenarioConfig,
    SimLog,
    SimulationAbort,
    run_scenario,
    summarize,
)
from .supervisor import (
    SupervisorConfig,
    SupervisorState,
    initial_state,
    select_target,
)

__version__ = "0.1.0"
