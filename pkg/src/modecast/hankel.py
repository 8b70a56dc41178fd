"""Delay embedding and the Hankel-DMD forecaster.

The original state is augmented with time-delayed copies of itself, stacked
so the top block holds the newest samples, and the decomposition is fitted
on the resulting Hankel matrices. Training runs on a z-scored window of the
record; predictions extract the undelayed top block and map it back to
physical units.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dmd import DEFAULT_RANK_POLICY, DmdModel, RankPolicy, SnapshotPair, fit_exact_dmd
from .errors import InstabilityWarning, ValidationError
from .series import GRID_EPS, MultivariateSeries, ZScoreStats, zscore_fit

__all__ = [
    "HdmdConfig",
    "HdmdForecaster",
    "n_samples_floor",
    "build_hankel_pair",
    "fit_hdmd",
    "predict",
]

# Stds below this are treated as constant channels and bypassed with unit
# scale instead of rejected, so flat channels forecast their own constant.
EPS_STD = 1e-12


def n_samples_floor(length_s: float, dt: float) -> int:
    """Duration in seconds to sample count, taking the integer part."""
    if not (dt > 0):
        raise ValidationError(f"dt must be positive, got {dt}")
    return int(math.floor(length_s / dt + GRID_EPS))


@dataclass(frozen=True)
class HdmdConfig:
    """Training-window length and delay depth, in samples.

    n_tr is the number of training samples, n_d the number of delayed
    copies embedded in the augmented state. The Hankel matrices built from
    the window have n_tr - 1 - n_d columns, which must be at least 1.
    """

    n_tr: int
    n_d: int
    rank_policy: RankPolicy = DEFAULT_RANK_POLICY

    def __post_init__(self):
        if self.n_tr < 2:
            raise ValidationError(f"n_tr must be >= 2, got {self.n_tr}")
        if self.n_d < 0:
            raise ValidationError(f"n_d must be >= 0, got {self.n_d}")
        if self.n_tr - 1 - self.n_d < 1:
            raise ValidationError(
                f"n_tr={self.n_tr}, n_d={self.n_d} leaves "
                f"{self.n_tr - 1 - self.n_d} Hankel columns; need at least 1"
            )

    @classmethod
    def from_seconds(
        cls,
        l_tr: float,
        l_d: float,
        dt: float,
        rank_policy: RankPolicy = DEFAULT_RANK_POLICY,
    ) -> "HdmdConfig":
        return cls(n_samples_floor(l_tr, dt), n_samples_floor(l_d, dt), rank_policy)


@dataclass(frozen=True)
class HdmdForecaster:
    """Fitted decomposition over the augmented state plus everything needed
    to turn its forecasts back into physical-unit series."""

    config: HdmdConfig
    model: DmdModel
    stats: ZScoreStats
    channels: tuple[str, ...]
    dt: float
    t_end: float

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def to_dict(self) -> dict:
        doc = self.model.to_dict()
        doc["n_d"] = self.config.n_d
        doc["n_tr"] = self.config.n_tr
        doc["channels"] = list(self.channels)
        return doc

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def build_hankel_pair(series: MultivariateSeries, n_d: int) -> SnapshotPair:
    """Arrange a series and n_d delayed copies as a shifted Hankel pair.

    The top block row holds the most recent copy and each block below is
    delayed one more sample; the companion matrix is the same embedding
    shifted one sample forward. Shapes: n_channels * (n_d + 1) rows and
    m - 1 - n_d columns for a series of m samples.
    """
    if n_d < 0:
        raise ValidationError(f"n_d must be >= 0, got {n_d}")
    m = series.n_samples
    # m = n_d + 2 would leave a single column, below the snapshot-pair minimum.
    if m < n_d + 3:
        raise ValidationError(
            f"series of {m} samples cannot embed n_d={n_d} delays; need at least {n_d + 3}"
        )
    n = series.n_channels
    width = m - n_d  # columns of the full embedding; the pair shares m-1-n_d
    emb = np.empty((n * (n_d + 1), width))
    for j in range(n_d + 1):
        emb[j * n : (j + 1) * n] = series.values[:, n_d - j : m - j]
    return SnapshotPair(emb[:, :-1], emb[:, 1:], series.dt)


def fit_hdmd(
    series: MultivariateSeries,
    config: HdmdConfig,
    t_end: float,
    eps_std: float = EPS_STD,
) -> HdmdForecaster:
    """Fit on the window of config.n_tr samples ending at t_end.

    The window is z-scored with its own statistics, embedded per the
    config's delay depth, and decomposed; amplitudes are initialized with
    the final augmented snapshot so predictions continue the window.
    """
    i_end = series.sample_index(t_end)
    i_start = i_end - config.n_tr + 1
    if i_start < 0:
        raise ValidationError(
            f"training window of {config.n_tr} samples ending at t={t_end} "
            "starts before the record"
        )
    window = series.window(i_start, i_end + 1)
    stats = zscore_fit(window, eps_std=eps_std)
    normalized = (window.values - stats.mean[:, None]) / stats.std[:, None]
    pair = build_hankel_pair(window.with_values(normalized), config.n_d)
    model = fit_exact_dmd(pair, config.rank_policy)
    return HdmdForecaster(
        config=config,
        model=model,
        stats=stats,
        channels=series.channels,
        dt=series.dt,
        t_end=series.t0 + i_end * series.dt,
    )


def predict(forecaster: HdmdForecaster, horizon: float) -> MultivariateSeries:
    """Forecast the undelayed state over the given horizon in seconds.

    The augmented state is propagated by discrete eigenvalue powers; only
    the top (most recent) block is retained and mapped back to physical
    units. The first output sample sits at t_end + dt.
    """
    if horizon < forecaster.dt:
        raise ValidationError(
            f"horizon {horizon} shorter than one sample interval {forecaster.dt}"
        )
    n_steps = n_samples_floor(horizon, forecaster.dt)
    model = forecaster.model
    if model.is_unstable():
        warnings.warn(
            f"eigenvalue magnitude {float(np.max(np.abs(model.eigenvalues))):.4f} "
            "exceeds the growth guard; forecast may diverge",
            InstabilityWarning,
            stacklevel=2,
        )
    # Propagating only the top block equals slicing the full augmented
    # forecast: the block rows of Phi act independently on the modal
    # dynamics.
    powers = model.eigenvalues[:, None] ** np.arange(1, n_steps + 1)
    top = np.real(
        model.modes[: forecaster.n_channels] @ (powers * model.amplitudes[:, None])
    )
    values = top * forecaster.stats.std[:, None] + forecaster.stats.mean[:, None]
    return MultivariateSeries(
        forecaster.channels, forecaster.dt, values, t0=forecaster.t_end + forecaster.dt
    )
