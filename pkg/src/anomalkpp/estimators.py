"""Estimator-style wrappers around the analysis and simulation pipeline."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .linear_analysis import Params, classify_regime, linear_spreading_speed
from .simulator import InitialDataSpec, WindowPolicy, dt_max, init_state, run
from .speed_tracker import InvasionObserver, SpeedEstimate, SpeedRegressor, default_window

REGIMES = np.array(["I", "II", "III", "IV", "Boundary"])


class RegimeClassifier(ClassifierMixin, BaseEstimator):
    """Label (d, alpha) rows with their region of parameter space.

    Nothing is learned; ``fit`` only validates input and records the classes.
    """

    def fit(self, X, y=None):
        check_array(X)
        self.classes_ = REGIMES
        return self

    def predict(self, X):
        check_is_fitted(self, "classes_")
        X = check_array(X)
        if X.shape[1] != 2:
            raise ValueError("expected columns (d, alpha)")
        return np.array([classify_regime(float(d), float(a)).tag for d, a in X])


def linear_speed(params: Params, component: str = "u") -> float:
    """Linear spreading speed of one component (u decoupled when beta = 0)."""
    if component == "v":
        return 2.0
    if params.beta == 0:
        return params.s_u
    return linear_spreading_speed(params).s_lin


def expected_speed(params: Params, component: str = "u") -> float:
    """Predicted selected speed: the linear one, except that outside region IV
    the anomalous double root is irrelevant and u moves at max(s_u, s_v)."""
    if component == "v" or params.beta == 0:
        return linear_speed(params, component)
    if classify_regime(params.d, params.alpha).tag == "IV":
        return linear_spreading_speed(params).s_lin
    return max(params.s_u, 2.0)


@dataclass
class Measurement:
    params: Params
    t_end: float
    dx: float
    dt: float
    window: tuple
    observer: InvasionObserver
    fits: dict
    manifest: dict

    def kappa_table(self) -> np.ndarray:
        """Rows (t, kappa_u, kappa_v, kappa_u at u_c/2); NaN where untracked."""
        recs = self.observer.records
        return np.array([[r["t"], r["u"], r["v"], r["u_half"]] for r in recs])

    def summary(self) -> dict:
        out = {"params": {"d": self.params.d, "alpha": self.params.alpha, "beta": self.params.beta},
               "t_end": self.t_end, "dx": self.dx, "dt": self.dt, "window": list(self.window)}
        for comp in ("u", "v", "u_half"):
            lin, log = self.fits.get((comp, False)), self.fits.get((comp, True))
            out[comp] = {
                "level": self.observer.levels[comp],
                "s_fit_linear": lin.s_fit if lin else None,
                "s_fit_log": log.s_fit if log else None,
                "log_coeff": log.log_coeff if log else None,
                "rmse_linear": lin.rmse if lin else None,
                "rmse_log": log.rmse if log else None,
            }
        pred = {c: expected_speed(self.params, c) for c in ("u", "v")}
        out["s_expected"] = pred
        out["s_lin"] = {c: linear_speed(self.params, c) for c in ("u", "v")}
        out["discrepancy_log"] = {c: out[c]["s_fit_log"] - pred[c] for c in ("u", "v")
                                  if out[c]["s_fit_log"] is not None}
        return out


def measure(params: Params, t_end: float = 300.0, dx: float = 0.05,
            domain: tuple[float, float] = (-50.0, 150.0), window: Optional[tuple] = None,
            sample_interval: float = 0.5, policy: WindowPolicy = WindowPolicy(),
            init: InitialDataSpec = InitialDataSpec(), extra_observers=()) -> Measurement:
    """Simulate from Heaviside-type data and fit the invasion speeds."""
    state = init_state(params, (domain[0], domain[1], dx), init)
    dt = dt_max(params, dx)
    stride = max(1, int(round(sample_interval / dt)))
    obs = InvasionObserver({"u": 0.5, "v": 0.5, "u_half": 0.5 * params.u_c}, {"u_half": "u"})
    res = run(params, state, t_end, observers=(obs, *extra_observers), stride=stride, window=policy)
    window = default_window(t_end) if window is None else tuple(window)
    fits = {}
    for comp in ("u", "v", "u_half"):
        for log in (False, True):
            try:
                fits[(comp, log)] = obs.estimate(comp, window, log)
            except ValueError:
                fits[(comp, log)] = None
    return Measurement(params, t_end, dx, res.dt, window, obs, fits, res.manifest())


class SpreadingSpeedEstimator(BaseEstimator):
    """Measure the selected spreading speed by direct simulation.

    ``fit`` takes no data: the system is fully specified by the
    hyperparameters. ``predict(t)`` returns the fitted invasion point.
    """

    def __init__(self, d=0.5, alpha=2.0, beta=1.0, t_end=300.0, dx=0.05, window=None,
                 component="u", with_log_correction=True, sample_interval=0.5):
        self.d = d
        self.alpha = alpha
        self.beta = beta
        self.t_end = t_end
        self.dx = dx
        self.window = window
        self.component = component
        self.with_log_correction = with_log_correction
        self.sample_interval = sample_interval

    def fit(self, X=None, y=None):
        if self.component not in ("u", "v"):
            raise ValueError("component must be 'u' or 'v'")
        params = Params(self.d, self.alpha, self.beta)
        self.measurement_ = measure(params, self.t_end, self.dx, window=self.window,
                                    sample_interval=self.sample_interval)
        t, k = self.measurement_.observer.series(self.component)
        self.regressor_ = SpeedRegressor(self.with_log_correction, self.measurement_.window).fit(t, k)
        self.speed_ = self.regressor_.speed_
        self.log_coeff_ = self.regressor_.log_coeff_
        self.expected_speed_ = expected_speed(params, self.component)
        return self

    def predict(self, t):
        check_is_fitted(self, "regressor_")
        return self.regressor_.predict(t)

    def estimate(self) -> SpeedEstimate:
        check_is_fitted(self, "measurement_")
        return self.measurement_.fits[(self.component, self.with_log_correction)]
