"""Invasion-point tracking and asymptotic speed fits."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y, check_array

from .exceptions import InsufficientSamples, NotCrossed, WindowClipped
from .simulator import FieldState

CLIP_CELLS = 50
MIN_SAMPLES = 10


def invasion_point(state: FieldState, component: Literal["u", "v"] = "u", level: float = 0.5,
                   clip_cells: int = CLIP_CELLS) -> float:
    """Rightmost x with field >= level, linearly interpolated to the crossing."""
    f = state.u if component == "u" else state.v
    idx = np.flatnonzero(f >= level)
    if idx.size == 0:
        raise NotCrossed(f"{component} never reaches {level}")
    i = int(idx[-1])
    if i >= len(f) - 1 - clip_cells:
        raise WindowClipped(f"{component} crossing at cell {i} is within {clip_cells} cells of the right edge")
    frac = (f[i] - level) / (f[i] - f[i + 1])
    return state.x_origin + state.dx * (i + frac)


def _design(t, with_log):
    t = np.asarray(t, dtype=float)
    cols = [t, np.log(t), np.ones_like(t)] if with_log else [t, np.ones_like(t)]
    return np.column_stack(cols)


class SpeedRegressor(RegressorMixin, BaseEstimator):
    """Least-squares fit kappa(t) ~ s t (+ b log t) + c.

    Parameters
    ----------
    with_log_correction : bool
        Include the log t term.
    window : tuple or None
        Only samples with window[0] <= t <= window[1] are used.
    """

    def __init__(self, with_log_correction: bool = False, window: Optional[tuple] = None):
        self.with_log_correction = with_log_correction
        self.window = window

    def fit(self, t, kappa):
        t = check_array(np.asarray(t, dtype=float).reshape(-1, 1)).ravel()
        kappa = np.asarray(kappa, dtype=float)
        check_X_y(t.reshape(-1, 1), kappa)
        if self.window is not None:
            lo, hi = self.window
            keep = (t >= lo) & (t <= hi)
            t, kappa = t[keep], kappa[keep]
        if t.size < MIN_SAMPLES:
            raise InsufficientSamples(f"need >= {MIN_SAMPLES} samples in the window, got {t.size}")
        if self.with_log_correction and np.any(t <= 0):
            raise ValueError("log correction needs t > 0")
        A = _design(t, self.with_log_correction)
        coef, *_ = np.linalg.lstsq(A, kappa, rcond=None)
        self.coef_ = coef
        self.speed_ = float(coef[0])
        self.log_coeff_ = float(coef[1]) if self.with_log_correction else None
        self.intercept_ = float(coef[-1])
        self.rmse_ = float(np.sqrt(np.mean((A @ coef - kappa) ** 2)))
        self.fit_window_ = (float(t.min()), float(t.max()))
        self.n_samples_ = int(t.size)
        return self

    def predict(self, t):
        check_is_fitted(self, "coef_")
        t = check_array(np.asarray(t, dtype=float).reshape(-1, 1)).ravel()
        return _design(t, self.with_log_correction) @ self.coef_


@dataclass(frozen=True)
class SpeedEstimate:
    level: float
    samples: tuple
    fit_window: tuple
    s_fit: float
    log_coeff: Optional[float]
    rmse: float


def fit_speed(samples, window=None, with_log_correction: bool = False, level: float = 0.5) -> SpeedEstimate:
    """Fit the asymptotic speed from (t, kappa) samples."""
    arr = np.asarray(samples, dtype=float).reshape(-1, 2)
    t, kappa = arr[:, 0], arr[:, 1]
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample times must be strictly increasing")
    if not np.all(np.isfinite(kappa)):
        raise ValueError("kappa samples must be finite")
    reg = SpeedRegressor(with_log_correction, window).fit(t, kappa)
    return SpeedEstimate(level, tuple(map(tuple, arr)), reg.fit_window_, reg.speed_,
                         reg.log_coeff_, reg.rmse_)


def default_window(t_end: float, t_start: float = 0.0) -> tuple[float, float]:
    """Last third of the run."""
    return (t_end - (t_end - t_start) / 3.0, t_end)


@dataclass
class InvasionObserver:
    """Run observer recording kappa at the given levels.

    ``levels`` maps a series name to its threshold; ``fields`` maps a series
    name to the component it tracks (default: the name itself). Samples where
    the crossing is missing or clipped are recorded as NaN and dropped by
    ``series``.
    """

    levels: dict = field(default_factory=lambda: {"u": 0.5, "v": 0.5})
    fields: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    def __call__(self, t, state):
        row = {"t": t}
        for key, lvl in self.levels.items():
            try:
                row[key] = invasion_point(state, self.fields.get(key, key), lvl)
            except (NotCrossed, WindowClipped):
                row[key] = np.nan
        self.records.append(row)
        return None

    def series(self, component: str):
        t = np.array([r["t"] for r in self.records])
        k = np.array([r[component] for r in self.records])
        ok = np.isfinite(k) & (t > 0)
        return t[ok], k[ok]

    def estimate(self, component: str, window, with_log_correction: bool) -> SpeedEstimate:
        t, k = self.series(component)
        return fit_speed(np.column_stack([t, k]), window, with_log_correction,
                         self.levels[component])
