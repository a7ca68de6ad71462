"""Latent bivariate semimartingale paths on a fine deterministic grid.

Simulates the driving Wiener pair, the bridge model used throughout the
Monte Carlo design, and generic Euler-Maruyama paths, with exact bookkeeping
of martingale parts, running quadratic (co)variations and spot (co)volatility.
All functions are pure in (inputs, seed).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SimulationError

__all__ = [
    "TimeGrid",
    "ModelConfig",
    "RngSeed",
    "LatentPath",
    "as_generator",
    "simulate_wiener",
    "simulate_bridge",
    "simulate_ito",
    "bridge_on_times",
]


@dataclass(frozen=True)
class TimeGrid:
    """Equally spaced simulation grid on [t0, t1] with n_fine steps."""

    t0: float = 0.0
    t1: float = 1.0
    n_fine: int = 36_000

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ParameterError(f"need t1 > t0, got [{self.t0}, {self.t1}]")
        if self.n_fine < 1:
            raise ParameterError(f"n_fine must be >= 1, got {self.n_fine}")

    @property
    def mesh(self) -> float:
        return (self.t1 - self.t0) / self.n_fine

    def times(self) -> np.ndarray:
        return self.t0 + self.mesh * np.arange(self.n_fine + 1)


@dataclass(frozen=True)
class ModelConfig:
    """Parameters of the latent bivariate model.

    sigma is the per-unit-time volatility, x1 the bridge endpoint (both assets
    share the marginal design), corr the correlation of the driving Wiener
    processes, and endo_factor_x/y the scalar factors defining the endogenous
    noise drivers as multiples of the latent processes.
    """

    sigma: float = 0.02
    x1: float = 0.01
    corr: float = 0.0
    drift_kind: str = "bridge"  # none | bridge | linear | custom
    endo_factor_x: float = 0.0
    endo_factor_y: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        if not abs(self.corr) <= 1.0:
            raise ParameterError(f"corr must lie in [-1, 1], got {self.corr}")
        if self.drift_kind not in ("none", "bridge", "linear", "custom"):
            raise ParameterError(f"unknown drift_kind {self.drift_kind!r}")


@dataclass(frozen=True)
class RngSeed:
    """Deterministic, non-overlapping random stream id.

    (master_seed, stream_id) maps to an independent PCG64 stream via
    numpy's SeedSequence spawn keys; identical ids give bit-identical draws
    regardless of process or thread layout.
    """

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        )

    def spawn(self, child: int) -> np.random.Generator:
        """Independent sub-stream, e.g. one each for path / sampling / noise."""
        return np.random.default_rng(
            np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id, child))
        )


def as_generator(seed) -> np.random.Generator:
    """Coerce RngSeed | Generator | int into a numpy Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, RngSeed):
        return seed.generator()
    return RngSeed(int(seed)).generator()


@dataclass
class LatentPath:
    """Latent trajectories with martingale-part and quadratic-variation bookkeeping.

    All arrays have length grid.n_fine + 1. qv_* are cumulative sums of squared
    martingale increments (qc_xy of cross products); spot_* hold the model spot
    (co)volatility at grid points. x == ax + mx and y == ay + my hold exactly
    (elementwise in floating point) by construction, except at a pinned bridge
    endpoint where the identity holds to one ulp (the endpoint itself is exact).
    """

    grid: TimeGrid
    x: np.ndarray
    y: np.ndarray
    mx: np.ndarray
    my: np.ndarray
    ax: np.ndarray
    ay: np.ndarray
    qv_x: np.ndarray
    qv_y: np.ndarray
    qc_xy: np.ndarray
    spot_x: np.ndarray
    spot_y: np.ndarray
    spot_xy: np.ndarray
    endo_factor_x: float = 0.0
    endo_factor_y: float = 0.0
    drift_kind: str = "none"
    x1: float = 0.0

    def times(self) -> np.ndarray:
        return self.grid.times()

    def interp(self, field: str, at: np.ndarray) -> np.ndarray:
        """Linear interpolation of a stored array at arbitrary times."""
        return np.interp(at, self.times(), getattr(self, field))

    def qv_at(self, t: float, field: str = "qv_x") -> float:
        arr = getattr(self, field)
        idx = int(np.searchsorted(self.times(), t, side="right")) - 1
        return float(arr[min(max(idx, 0), len(arr) - 1)])

    def to_csv(self, path) -> None:
        from .io import write_csv

        cols = ["t", "x", "y", "mx", "my", "qv_x", "qv_y", "qc_xy"]
        data = np.column_stack(
            [self.times(), self.x, self.y, self.mx, self.my, self.qv_x, self.qv_y, self.qc_xy]
        )
        write_csv(path, cols, data)


def _correlated_increments(n, corr, rng, scale):
    z = rng.standard_normal((2, n))
    d1 = scale * z[0]
    d2 = scale * (corr * z[0] + np.sqrt(1.0 - corr * corr) * z[1])
    return d1, d2


def simulate_wiener(grid: TimeGrid, corr: float, seed) -> tuple[np.ndarray, np.ndarray]:
    """Two discretized standard Wiener paths with correlated increments.

    Per-step increments are N(0, mesh) with cross-correlation corr; both paths
    start at 0 and have length n_fine + 1.
    """
    if not abs(corr) <= 1.0:
        raise ParameterError(f"corr must lie in [-1, 1], got {corr}")
    rng = as_generator(seed)
    d1, d2 = _correlated_increments(grid.n_fine, corr, rng, np.sqrt(grid.mesh))
    w1 = np.concatenate(([0.0], np.cumsum(d1)))
    w2 = np.concatenate(([0.0], np.cumsum(d2)))
    return w1, w2


def _assemble(grid, cfg, x, y, mx, my):
    dmx = np.diff(mx)
    dmy = np.diff(my)
    qv_x = np.concatenate(([0.0], np.cumsum(dmx * dmx)))
    qv_y = np.concatenate(([0.0], np.cumsum(dmy * dmy)))
    qc_xy = np.concatenate(([0.0], np.cumsum(dmx * dmy)))
    s2 = cfg.sigma**2
    npts = grid.n_fine + 1
    # canonicalize x = drift part + martingale part elementwise, so the
    # decomposition identity holds exactly in floating point
    ax = x - mx
    ay = y - my
    x = ax + mx
    y = ay + my
    return LatentPath(
        grid=grid,
        x=x,
        y=y,
        mx=mx,
        my=my,
        ax=ax,
        ay=ay,
        qv_x=qv_x,
        qv_y=qv_y,
        qc_xy=qc_xy,
        spot_x=np.full(npts, s2),
        spot_y=np.full(npts, s2),
        spot_xy=np.full(npts, cfg.corr * s2),
        endo_factor_x=cfg.endo_factor_x,
        endo_factor_y=cfg.endo_factor_y,
        drift_kind=cfg.drift_kind,
        x1=cfg.x1,
    )


def _pin_endpoint(x, ax, mx, target):
    """Pin the final value at the bridge endpoint exactly.

    The stored drift endpoint absorbs the conditioned landing; at this single
    point the additive decomposition can be off by one ulp (the float lattice
    of ax + mx need not contain the target), which the bookkeeping docstring
    records.
    """
    ax[-1] = target - mx[-1]
    x[-1] = target


def simulate_bridge(grid: TimeGrid, cfg: ModelConfig, seed) -> LatentPath:
    """Bridge path pinned at x1, driven by sigma * W.

    Solves the Euler recursion of dX = (x1 - X)/(t1 - t) dt + sigma dW in
    closed form up to the penultimate grid point (the telescoping product of
    the per-step contraction factors), and sets X(t1) = x1 exactly: the final
    drift step absorbs the conditioned landing, avoiding the 1/(t1 - t)
    blow-up. The martingale part is sigma * W, so spot volatility is sigma^2
    throughout. Both assets use the same construction with correlated drivers.
    """
    if cfg.drift_kind not in ("bridge", "none"):
        raise ParameterError("simulate_bridge needs drift_kind 'bridge' (or 'none')")
    rng = as_generator(seed)
    n = grid.n_fine
    d1, d2 = _correlated_increments(n, cfg.corr, rng, cfg.sigma * np.sqrt(grid.mesh))
    mx = np.concatenate(([0.0], np.cumsum(d1)))
    my = np.concatenate(([0.0], np.cumsum(d2)))
    if cfg.drift_kind == "none":
        return _assemble(grid, cfg, mx.copy(), my.copy(), mx, my)

    def bridge_from(dm):
        # x_k = (n-k) * sum_{j<k} b_j/(n-j-1), b_j = x1/(n-j) + dm_j; x_n = x1
        j = np.arange(n - 1)
        b = cfg.x1 / (n - j) + dm[: n - 1]
        c = np.concatenate(([0.0], np.cumsum(b / (n - j - 1))))
        x = np.empty(n + 1)
        x[: n] = (n - np.arange(n)) * c
        x[n] = cfg.x1
        return x

    x = bridge_from(d1)
    y = bridge_from(d2)
    path = _assemble(grid, cfg, x, y, mx, my)
    _pin_endpoint(path.x, path.ax, path.mx, cfg.x1)
    _pin_endpoint(path.y, path.ay, path.my, cfg.x1)
    return path


def simulate_ito(grid: TimeGrid, drift_fn, vol_fn, corr: float, seed, cfg: ModelConfig | None = None) -> LatentPath:
    """Euler-Maruyama path for user drift/volatility coefficients.

    drift_fn and vol_fn are callables (t, state) -> float applied to each
    asset, or plain floats for the constant-coefficient fast path (a float
    drift of 0.0/None means no drift). Martingale parts and spot volatility
    arrays are populated from vol_fn evaluations.
    """
    if not abs(corr) <= 1.0:
        raise ParameterError(f"corr must lie in [-1, 1], got {corr}")
    rng = as_generator(seed)
    n = grid.n_fine
    h = grid.mesh
    times = grid.times()
    dw1, dw2 = _correlated_increments(n, corr, rng, np.sqrt(h))

    drift_const = None
    if drift_fn is None:
        drift_const = 0.0
    elif isinstance(drift_fn, (int, float)):
        drift_const = float(drift_fn)
    vol_const = float(vol_fn) if isinstance(vol_fn, (int, float)) else None

    def one_asset(dw):
        if drift_const is not None and vol_const is not None:
            m = np.concatenate(([0.0], np.cumsum(vol_const * dw)))
            x = drift_const * (times - grid.t0) + m
            spot = np.full(n + 1, vol_const**2)
            return x, m, spot
        x = np.empty(n + 1)
        m = np.empty(n + 1)
        spot = np.empty(n + 1)
        x[0] = 0.0
        m[0] = 0.0
        xv = 0.0
        mv = 0.0
        for k in range(n):
            tk = times[k]
            mu = drift_const if drift_const is not None else float(drift_fn(tk, xv))
            sv = vol_const if vol_const is not None else float(vol_fn(tk, xv))
            spot[k] = sv * sv
            dm = sv * float(dw[k])
            xv = xv + mu * h + dm
            mv = mv + dm
            if xv != xv:  # NaN from a user callable
                raise SimulationError(f"NaN state at step {k} (t={tk:.6g})")
            x[k + 1] = xv
            m[k + 1] = mv
        spot[n] = spot[n - 1]
        return x, m, spot

    x, mx, spot_x = one_asset(dw1)
    y, my, spot_y = one_asset(dw2)
    dmx = np.diff(mx)
    dmy = np.diff(my)
    base = cfg if cfg is not None else ModelConfig(sigma=1.0, x1=0.0, corr=corr, drift_kind="none")
    path = _assemble(grid, base, x, y, mx, my)
    # overwrite constant-sigma spots with the evaluated coefficients
    path.spot_x = spot_x
    path.spot_y = spot_y
    path.spot_xy = corr * np.sqrt(spot_x * spot_y)
    path.qv_x = np.concatenate(([0.0], np.cumsum(dmx * dmx)))
    path.qv_y = np.concatenate(([0.0], np.cumsum(dmy * dmy)))
    path.qc_xy = np.concatenate(([0.0], np.cumsum(dmx * dmy)))
    return path


def bridge_on_times(tau: np.ndarray, mart_at: np.ndarray, x1: float, t1: float) -> np.ndarray:
    """Bridge values advanced by Euler steps on the given epochs.

    Solves x_{i+1} = x_i + (x1 - x_i)/(t1 - tau_i) * (tau_{i+1} - tau_i) + dm_i
    with the drift frozen over each sampling interval (observation-resolution
    discretization of the bridge), via the telescoping closed form of the
    linear recursion; the final step is taken explicitly so an epoch at t1 is
    well defined. All epochs except the last must lie strictly before t1.
    """
    tau = np.asarray(tau, dtype=np.float64)
    n = tau.size - 1
    x = np.zeros(tau.size)
    if n < 1:
        return x
    if np.any(tau[:n] >= t1):
        raise ParameterError("bridge epochs (except the last) must lie before the terminal time")
    dm = np.diff(mart_at)
    denom = t1 - tau
    if n >= 2:
        j = np.arange(n - 1)
        b = x1 * (tau[j + 1] - tau[j]) / denom[j] + dm[j]
        c = np.concatenate(([0.0], np.cumsum(b / denom[j + 1])))
        x[:n] = denom[:n] * c
    xp = x[n - 1]
    x[n] = xp + (x1 - xp) * (tau[n] - tau[n - 1]) / denom[n - 1] + dm[n - 1]
    return x
