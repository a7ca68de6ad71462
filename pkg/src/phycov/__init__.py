"""Integrated-covariance estimation lab for noisy, endogenously sampled data.

Simulation of latent bivariate semimartingales, endogenous/nonsynchronous
sampling schemes, microstructure-noise models, pre-averaging estimators with
feasible asymptotic-variance estimation, and a reproducible Monte Carlo
harness.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .paths import LatentPath, ModelConfig, RngSeed, TimeGrid, simulate_bridge, simulate_ito, simulate_wiener
from .sampling import (
    LoMacKinlayConfig,
    PoissonChangePointConfig,
    RefreshData,
    SamplingTimes,
    duration_diagnostics,
    gen_barrier_hitting,
    gen_equidistant,
    gen_general_return,
    gen_lo_mackinlay,
    gen_mixed_hitting,
    gen_poisson_changepoint,
    refresh,
)
from .noise import NoiseConfig, ObservationSeries, observe, observe_linear_process, observe_pair
from .estimators import (
    EstimatorResult,
    PreAvgConfig,
    WeightFn,
    as_series,
    gamma1,
    min_xx,
    mrc,
    msrv,
    msrv_weights,
    phy,
    phy_refresh,
    preavg,
    quartic_f,
    rq,
    rv,
    xi,
    xi_f,
)
from .inference import (
    AvarResult,
    KernelConstants,
    LimitSpec,
    ModelSpots,
    SpotConfig,
    avar_hat,
    kernel_constants,
    msrv_tuning,
    psi_ab,
    rv_limit_law,
    spot_estimators,
    studentize,
    studentize_inv,
    studentize_log,
    studentize_msrv,
    studentize_rv,
    theoretical_w2,
)
from .montecarlo import McReport, ScenarioConfig, bias_rmse_table, quantile_coverage_table, run_scenario
