"""Continuous-time distributed optimization simulator.

Thin Python face over the C++ core: build a communication graph and a cost
ensemble, assemble one of the coupled algorithms, integrate it, and measure
convergence rates against the closed-form oracles.
"""

from distopt._core import (
    Algorithm,
    BetaGains,
    CostEnsemble,
    CouplingConfig,
    CouplingMode,
    Graph,
    HeavyBallEquilibrium,
    LyapunovParams,
    NetworkSystem,
    OutputMap,
    QuadraticLocal,
    RateEstimate,
    SpectralData,
    ThetaConstants,
    Trajectory,
    VarthetaConstants,
    assemble,
    beta_rule,
    default_rate_window,
    error_metric,
    estimate_rate,
    heavy_ball_equilibrium,
    integrate,
    kp_double_star,
    kp_star,
    message_dimension,
    minimizer,
    phi_star_bound,
    random_quadratic_ensemble,
    split_output_map,
    theta_constants,
    vartheta_constants,
)

__all__ = [
    "Algorithm",
    "BetaGains",
    "CostEnsemble",
    "CouplingConfig",
    "CouplingMode",
    "Graph",
    "HeavyBallEquilibrium",
    "LyapunovParams",
    "NetworkSystem",
    "OutputMap",
    "QuadraticLocal",
    "RateEstimate",
    "SpectralData",
    "ThetaConstants",
    "Trajectory",
    "VarthetaConstants",
    "assemble",
    "beta_rule",
    "default_rate_window",
    "error_metric",
    "estimate_rate",
    "heavy_ball_equilibrium",
    "integrate",
    "kp_double_star",
    "kp_star",
    "message_dimension",
    "minimizer",
    "phi_star_bound",
    "random_quadratic_ensemble",
    "split_output_map",
    "theta_constants",
    "vartheta_constants",
]

__version__ = "0.1.0"
