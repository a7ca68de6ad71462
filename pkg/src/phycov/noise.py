"""Noisy observation assembly.

Builds observed series from latent paths and sampling times: i.i.d. (possibly
time-varying) Gaussian noise, endogenous noise proportional to scaled driver
increments, and tick-time linear-process (moving-average) noise for the
synchronous case.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .paths import LatentPath, as_generator, bridge_on_times
from .sampling import SamplingTimes

__all__ = ["NoiseConfig", "ObservationSeries", "observe", "observe_pair", "observe_linear_process"]


@dataclass(frozen=True)
class NoiseConfig:
    """Noise channels added on top of the latent values.

    psi is the 2x2 covariance of the i.i.d. component (None or 0 disables it;
    a scalar means that variance on both diagonal entries; a callable t ->
    2x2 array makes it time-varying). endo_scale_* multiply the endogenous
    term b_n^{-1/2} * (driver increment); the drivers themselves are the
    scalar multiples endo_factor_* * (X, Y) stored on the path, or the
    custom_driver_* arrays (values on the fine grid) when supplied. lambda_* /
    mu_* are the finite moving-average weight sequences of the linear-process
    model (finite length makes the summability requirement automatic).
    """

    psi: object = None
    endo_scale_x: float = 1.0
    endo_scale_y: float = 1.0
    lambda1: tuple = (1.0,)
    lambda2: tuple = (1.0,)
    mu1: tuple = (1.0,)
    mu2: tuple = (1.0,)
    custom_driver_x: object = None
    custom_driver_y: object = None

    def psi_at(self, t: float) -> np.ndarray:
        if self.psi is None:
            return np.zeros((2, 2))
        if callable(self.psi):
            m = np.asarray(self.psi(t), dtype=np.float64)
        elif np.isscalar(self.psi):
            m = np.diag([float(self.psi), float(self.psi)])
        else:
            m = np.asarray(self.psi, dtype=np.float64)
        if m.shape != (2, 2):
            raise ParameterError("psi must be a 2x2 covariance")
        return m

    def validate(self) -> None:
        m = self.psi_at(0.0)
        if not np.allclose(m, m.T):
            raise ParameterError("psi must be symmetric")
        if np.min(np.linalg.eigvalsh(m)) < -1e-12:
            raise ParameterError("psi must be positive semidefinite")


@dataclass
class ObservationSeries:
    """Observed values at sampling epochs, with the latent values retained."""

    times: np.ndarray
    values: np.ndarray
    latent: np.ndarray
    b_n: float
    eps: np.ndarray | None = None

    def __post_init__(self):
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ParameterError("observation times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("observed values must be finite")

    def __len__(self):
        return self.times.size

    def n_returns(self) -> int:
        return self.times.size - 1

    def to_csv(self, path) -> None:
        from .io import write_csv

        write_csv(path, ["index", "time", "value", "latent"],
                  np.column_stack([np.arange(len(self)), self.times, self.values, self.latent]))


def _mart_at(path: LatentPath, times: SamplingTimes, asset: str) -> np.ndarray:
    if times.driver_values is not None and getattr(times, "driver_asset", "x") == asset:
        return times.driver_values
    mart = path.mx if asset == "x" else path.my
    return np.interp(times.times, path.times(), mart)


def _latent_at(path: LatentPath, times: SamplingTimes, asset: str,
               mode: str = "fine") -> np.ndarray:
    """Latent values at the epochs.

    mode "fine" reads the fine-grid path: exact martingale level (available
    for barrier-generated times) plus linearly interpolated drift part. mode
    "sampling" advances the drift by Euler steps between consecutive epochs
    (drift frozen per observation interval) on top of the same martingale
    values; for a driftless model both modes coincide with the exact
    martingale values.
    """
    grid_t = path.times()
    if times.times[-1] > grid_t[-1] * (1 + 1e-12) + 1e-12:
        raise ParameterError("sampling times extend beyond the simulated grid")
    if mode not in ("fine", "sampling"):
        raise ParameterError(f"unknown latent mode {mode!r}")
    mart = path.mx if asset == "x" else path.my
    level = path.x if asset == "x" else path.y
    if mode == "sampling":
        m_at = _mart_at(path, times, asset)
        if path.drift_kind == "none":
            return m_at
        if path.drift_kind == "linear":
            return path.x1 * (times.times - path.grid.t0) + m_at
        if path.drift_kind == "bridge":
            return bridge_on_times(times.times, m_at, path.x1, path.grid.t1)
        raise ParameterError(
            f"latent mode 'sampling' supports drift_kind none/bridge/linear, not {path.drift_kind!r}"
        )
    if times.driver_values is not None and getattr(times, "driver_asset", "x") == asset:
        drift = path.ax if asset == "x" else path.ay
        return np.interp(times.times, grid_t, drift) + times.driver_values
    return np.interp(times.times, grid_t, level)


def _driver_at(path: LatentPath, times: SamplingTimes, cfg: NoiseConfig, asset: str,
               mode: str = "fine") -> np.ndarray:
    custom = cfg.custom_driver_x if asset == "x" else cfg.custom_driver_y
    if custom is not None:
        arr = np.asarray(custom, dtype=np.float64)
        if arr.size != path.grid.n_fine + 1:
            raise ParameterError("custom driver must live on the fine grid")
        return np.interp(times.times, path.times(), arr)
    factor = path.endo_factor_x if asset == "x" else path.endo_factor_y
    if factor == 0.0:
        return np.zeros(times.times.size)
    return factor * _latent_at(path, times, asset, mode)


def _draw_eps(times_arr: np.ndarray, cfg: NoiseConfig, rng) -> np.ndarray:
    """Joint (2, n) mean-zero Gaussian draws with covariance psi at each epoch."""
    n = times_arr.size
    z = rng.standard_normal((2, n))
    if cfg.psi is None:
        return np.zeros((2, n))
    if callable(cfg.psi):
        out = np.empty((2, n))
        for i, t in enumerate(times_arr):
            m = cfg.psi_at(float(t))
            ll = np.linalg.cholesky(m + 1e-30 * np.eye(2))
            out[:, i] = ll @ z[:, i]
        return out
    ll = np.linalg.cholesky(cfg.psi_at(0.0) + 1e-30 * np.eye(2))
    return ll @ z


def _endo_term(path, times, cfg, asset, mode="fine"):
    scale = cfg.endo_scale_x if asset == "x" else cfg.endo_scale_y
    under = _driver_at(path, times, cfg, asset, mode)
    # S^{-1} = S^0 = 0 convention: the first increment is empty
    du = np.concatenate(([0.0], np.diff(under)))
    return scale * du / np.sqrt(times.b_n)


def observe_pair(path: LatentPath, s_times: SamplingTimes, t_times: SamplingTimes,
                 cfg: NoiseConfig, seed,
                 latent_mode: str = "fine") -> tuple[ObservationSeries, ObservationSeries]:
    """Observed series for both assets with a common canonical noise process.

    The i.i.d. component is drawn once per epoch of the union of the two time
    sets, so epochs shared by both assets receive a jointly psi-distributed
    pair. Endogenous terms are per-asset scaled driver increments. latent_mode
    selects the fine-grid or the observation-resolution latent values (see
    _latent_at).
    """
    cfg.validate()
    rng = as_generator(seed)
    union = np.union1d(s_times.times, t_times.times)
    eps = _draw_eps(union, cfg, rng)
    out = []
    for axis, times in ((0, s_times), (1, t_times)):
        asset = "x" if axis == 0 else "y"
        latent = _latent_at(path, times, asset, latent_mode)
        idx = np.searchsorted(union, times.times)
        e = eps[axis, idx]
        values = latent + _endo_term(path, times, cfg, asset, latent_mode) + e
        out.append(ObservationSeries(times=times.times.copy(), values=values,
                                     latent=latent, b_n=times.b_n, eps=e))
    return out[0], out[1]


def observe(path: LatentPath, times: SamplingTimes, cfg: NoiseConfig, seed,
            asset: str = "x", latent_mode: str = "fine") -> ObservationSeries:
    """Observed series for one asset (see observe_pair for the joint draw)."""
    xs, ys = observe_pair(path, times, times, cfg, seed, latent_mode)
    return xs if asset == "x" else ys


def observe_linear_process(path: LatentPath, times: SamplingTimes, cfg: NoiseConfig,
                           seed, t_times: SamplingTimes | None = None
                           ) -> tuple[ObservationSeries, ObservationSeries]:
    """Observed series under tick-time moving-average noise (synchronous only).

    Both assets are observed on the common epochs; weight sequences lambda_l /
    mu_l apply to the i.i.d. draws and to the scaled driver increments. With
    lambda = mu = (1,) this reduces to observe_pair draw-for-draw.
    """
    if t_times is not None and not np.array_equal(t_times.times, times.times):
        raise ParameterError("linear-process noise supports synchronous sampling only")
    cfg.validate()
    rng = as_generator(seed)
    n = times.times.size
    eps = _draw_eps(times.times, cfg, rng)
    out = []
    for axis, lam, mu in ((0, cfg.lambda1, cfg.mu1), (1, cfg.lambda2, cfg.mu2)):
        asset = "x" if axis == 0 else "y"
        latent = _latent_at(path, times, asset)
        under = _driver_at(path, times, cfg, asset)
        du = np.concatenate(([0.0], np.diff(under)))
        scale = cfg.endo_scale_x if asset == "x" else cfg.endo_scale_y
        lam = np.asarray(lam, dtype=np.float64)
        mu_w = np.asarray(mu, dtype=np.float64)
        ma_eps = np.convolve(eps[axis], lam)[:n] if lam.size else np.zeros(n)
        ma_endo = np.convolve(du, mu_w)[:n] if mu_w.size else np.zeros(n)
        values = latent + ma_eps + scale * ma_endo / np.sqrt(times.b_n)
        out.append(ObservationSeries(times=times.times.copy(), values=values,
                                     latent=latent, b_n=times.b_n, eps=eps[axis]))
    return out[0], out[1]
