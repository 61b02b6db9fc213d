"""Selection contests with strategic candidates: equilibria, fairness
metrics, dynamics, and the Monte Carlo oracles that validate them."""

from .best_response import (
    DropoutInfo,
    StationaryPoints,
    SubcriticalReward,
    best_response,
    critical_reward,
    dropout_threshold,
    payoff,
    selection_probability,
    stationary_points,
)
from .dynamics import DynamicsState, DynamicsTrace, br_step, fp_step, induced_threshold
from .dynamics import run as run_dynamics
from .equilibrium import (
    ExcessMassEvaluation,
    SolverError,
    excess_mass,
    max_deviation_gain,
    solve_demographic_parity,
    solve_unconstrained,
    solver_bracket,
)
from .kernel import (
    DomainError,
    NoBracket,
    NoConvergence,
    RootConfig,
    find_root,
    lambert_w,
    normal_cdf,
    normal_pdf,
    normal_quantile,
)
from .mc import (
    McEstimate,
    grid_argmax_payoff,
    mc_selection_probability,
    mc_selection_quality,
)
from .metrics import (
    AmbiguousRegime,
    AsymptoticPrediction,
    DegenerateVariance,
    SmallSCrossings,
    SubcriticalityViolated,
    asymptotic_predictions,
    average_effort,
    selection_quality,
    selection_rate,
    small_s_crossings,
)
from .model import (
    EffortDistribution,
    EquilibriumReport,
    GameConfig,
    GroupOutcome,
    GroupParams,
    GroupView,
    config_from_dict,
    config_hash,
    config_to_dict,
    correlation_coefficient,
    effective_groups,
    load_config,
    posterior_variance,
    validate,
)

__version__ = "0.1.0"
