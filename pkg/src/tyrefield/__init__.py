"""Single-track vehicle models with distributed tyre friction.

Steady-state friction curves, nonlinear ODE-PDE time simulation,
equilibrium finding, linearisation, spectral stability charts, and
transfer-function frequency response, with a batch CLI on top.
"""

from .friction import (
    BristleEnv,
    FrictionLaw,
    FrictionRangeError,
    PressureProfile,
    QuadratureError,
    SteadyBristle,
    abs_sgn_eps,
    eval_friction,
    eval_g,
    eval_pressure,
    steady_bristle,
    steady_force,
)
from .vehicle import (
    FLEXIBLE,
    GRAVITY,
    RIGID,
    AxleConfig,
    DerivedParams,
    DissipativityReport,
    GridFunction,
    StateSpaceModel,
    VehicleConfig,
    apply_nonlocal,
    assemble_model,
    axle_forces,
    check_dissipativity,
    derived_params,
    eval_sources,
    growth_bound,
    slip_kinematics,
)
from .simulate import (
    Scenario,
    SimGrid,
    SimState,
    SimulationBlowUp,
    Trajectory,
    build_scenario,
    discrete_equilibrium,
    simulate,
    step,
    substeps_for_cfl,
)
from .linearize import Equilibrium, EquilibriumError, LinearModel, find_equilibrium, linearize
from .spectral import (
    BodeData,
    CharMatrix,
    ContourError,
    PoleError,
    Rect,
    bode_sweep,
    char_det,
    char_matrix,
    count_unstable_roots,
    discretize_generator,
    find_unstable_roots,
    make_chart_factory,
    stability_chart,
    transfer_function,
    transfer_function_many,
    zero_equilibrium_linear_model,
)

__version__ = "0.1.0"
