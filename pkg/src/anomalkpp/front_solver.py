"""Supercritical traveling fronts of d U'' + s U' + alpha (U - U^2) = 0.

The front is the heteroclinic orbit leaving the saddle U = 1 along its
one-dimensional unstable manifold and entering the stable node U = 0 along the
weak eigendirection. Near U = 0 the integration switches to the variables
(log U, U'/U) so several tens of decades of tail can be resolved without
losing relative accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .exceptions import ExpansionViolated, NonMonotone, StrongDecayOrbit, SubcriticalSpeed
from .linear_analysis import Params, nu_u_real

SWITCH_LEVEL = 1e-3


def unstable_eigenvalue(params: Params, s: float) -> float:
    """Positive eigenvalue of the linearization at U = 1."""
    d = params.d
    return (-s + math.sqrt(s * s + 4.0 * d * params.alpha)) / (2.0 * d)


@dataclass(frozen=True)
class FrontProfile:
    speed: float
    params: Params
    y: np.ndarray
    U: np.ndarray
    Uprime: np.ndarray
    decay_rate_fit: float
    r: float = 0.0
    launch_eps: float = 1e-8
    tail_window: tuple[float, float] = (1e-30, 1e-20)
    _spline: CubicHermiteSpline = field(default=None, repr=False, compare=False)
    _dspline: CubicHermiteSpline = field(default=None, repr=False, compare=False)

    @property
    def y_min(self) -> float:
        return float(self.y[0])

    @property
    def y_max(self) -> float:
        return float(self.y[-1])

    @property
    def weak_rate(self) -> float:
        return nu_u_real(self.params, self.speed, "+")

    def second_derivative(self, U, Up):
        p = self.params
        return -(self.speed * Up + p.alpha * (U - U * U)) / p.d


def _rhs_phys(params, s):
    d, a = params.d, params.alpha

    def f(_, z):
        U, Up = z
        return [Up, -(s * Up + a * (U - U * U)) / d]
    return f


def _rhs_log(params, s):
    d, a = params.d, params.alpha

    def f(_, z):
        w, p = z
        U = math.exp(w)
        return [p, -(s * p + a * (1.0 - U)) / d - p * p]
    return f


def solve_front(params: Params, s: float, *, eps: float = 1e-8, rtol: float = 1e-12,
                u_end: float = 1e-32, tail_window: tuple[float, float] = (1e-30, 1e-20),
                h: float = 0.01) -> FrontProfile:
    """Compute the weakly decaying front moving with speed ``s``.

    The orbit is launched a distance ``eps`` from U = 1 along the unstable
    eigenvector and integrated with DOP853 until U drops below ``u_end``.
    Samples are taken on a uniform grid of spacing ``h`` and translated so
    that U(0) = 1/2.
    """
    s_crit = params.s_u
    if not s > s_crit + 1e-6:
        raise SubcriticalSpeed(f"s = {s} must exceed 2 sqrt(d alpha) = {s_crit} by at least 1e-6")
    e = unstable_eigenvalue(params, s)

    def below_switch(_, z):
        return z[0] - SWITCH_LEVEL
    below_switch.terminal = True
    below_switch.direction = -1

    span = 50.0 / e + 200.0
    sol1 = solve_ivp(_rhs_phys(params, s), (0.0, span), [1.0 - eps, -eps * e],
                     method="DOP853", rtol=rtol, atol=1e-15, dense_output=True,
                     events=below_switch)
    if sol1.status != 1:
        raise NonMonotone(f"front did not reach U = {SWITCH_LEVEL} (status {sol1.status})")
    y_switch = float(sol1.t_events[0][0])
    U_sw, Up_sw = sol1.y_events[0][0]

    def below_end(_, z):
        return z[0] - math.log(u_end)
    below_end.terminal = True
    below_end.direction = -1

    w_end = math.log(u_end)
    span2 = 4.0 * abs(w_end) / abs(nu_u_real(params, s, "+")) + 100.0
    sol2 = solve_ivp(_rhs_log(params, s), (y_switch, y_switch + span2),
                     [math.log(U_sw), Up_sw / U_sw], method="DOP853", rtol=rtol,
                     atol=1e-14, dense_output=True, events=below_end)
    if sol2.status != 1:
        raise NonMonotone("tail integration did not reach the end level")
    y_end = float(sol2.t_events[0][0])

    y_half = brentq(lambda y: sol1.sol(y)[0] - 0.5, 0.0, y_switch, xtol=1e-14, rtol=1e-15)
    n_left = int(math.floor(y_half / h))
    n_right = int(math.floor((y_end - y_half) / h))
    grid = np.arange(-n_left, n_right + 1) * h
    yy = grid + y_half
    U = np.empty_like(yy)
    Up = np.empty_like(yy)
    first = yy <= y_switch
    z1 = sol1.sol(yy[first])
    U[first], Up[first] = z1[0], z1[1]
    z2 = sol2.sol(yy[~first])
    U[~first] = np.exp(z2[0])
    Up[~first] = z2[1] * U[~first]

    if np.any(Up > 0):
        raise NonMonotone(f"U' > 0 at {int(np.sum(Up > 0))} samples; step-size failure")

    lo, hi = tail_window
    mask = (U > lo) & (U < hi)
    if mask.sum() < 10:
        raise NonMonotone("too few samples inside the tail fit window")
    slope = float(np.polyfit(grid[mask], np.log(U[mask]), 1)[0])
    weak = nu_u_real(params, s, "+")
    strong = nu_u_real(params, s, "-")
    if abs(slope - strong) < abs(slope - weak):
        raise StrongDecayOrbit(f"tail rate {slope} matches the strong root {strong}")

    return _build_profile(params, s, grid, U, Up, slope, eps, tail_window)


def _build_profile(params, s, y, U, Up, slope, eps, tail_window):
    for arr in (y, U, Up):
        arr.setflags(write=False)
    proto = FrontProfile(s, params, y, U, Up, slope, 0.0, eps, tail_window)
    Upp = proto.second_derivative(U, Up)
    spline = CubicHermiteSpline(y, U, Up, extrapolate=False)
    dspline = CubicHermiteSpline(y, Up, Upp, extrapolate=False)
    return FrontProfile(s, params, y, U, Up, slope, 0.0, eps, tail_window, spline, dspline)


def _eval(profile: FrontProfile, z, which: int):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    left = z < profile.y_min
    right = z > profile.y_max
    mid = ~(left | right)
    nu = profile.weak_rate
    if which == 0:
        out[left] = 1.0
        out[mid] = profile._spline(z[mid])
        out[right] = profile.U[-1] * np.exp(nu * (z[right] - profile.y_max))
    else:
        out[left] = 0.0
        out[mid] = profile._dspline(z[mid])
        out[right] = nu * profile.U[-1] * np.exp(nu * (z[right] - profile.y_max))
    return out if out.ndim else float(out)


def evaluate_front(profile: FrontProfile, r: float, y):
    """U_r(y) = U(y - r): 1 left of the samples, exponential tail right of them."""
    return _eval(profile, np.asarray(y, dtype=float) - r, 0)


def evaluate_front_derivative(profile: FrontProfile, r: float, y):
    return _eval(profile, np.asarray(y, dtype=float) - r, 1)


def ode_residual(profile: FrontProfile) -> np.ndarray:
    """|d U'' + s U' + alpha (U - U^2)| on interior samples.

    U'' is rebuilt by sixth-order central differences of the sampled U', so the
    check is independent of the right-hand side used by the integrator.
    """
    h = profile.y[1] - profile.y[0]
    Up = profile.Uprime
    c = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / (60.0 * h)
    Upp = np.convolve(Up, c[::-1], mode="valid")
    U = profile.U[3:-3]
    p = profile.params
    return np.abs(p.d * Upp + profile.speed * Up[3:-3] + p.alpha * (U - U * U))


@dataclass(frozen=True)
class ExpansionReport:
    C: float
    max_ratio: float
    max_violation: float
    exponent: float
    n_samples: int


def front_derivative_expansion_check(profile: FrontProfile, u_max: float = 1e-2,
                                     u_floor: float = 1e-8, fit_max: float = 1e-4,
                                     slack: float = 0.10) -> ExpansionReport:
    """Check U' = nu (1 + R(U)) U with |R| <= C U on the tail.

    C is fitted by least squares on ``fit_max < U < u_max``; the bound is then
    checked down to ``u_floor`` (below it R is at the integrator's noise level).
    """
    nu = profile.weak_rate
    U, Up = profile.U, profile.Uprime
    tail = (U < u_max) & (U > u_floor)
    R = Up[tail] / (nu * U[tail]) - 1.0
    Ut = U[tail]
    fit = Ut > fit_max
    C = float(np.sum(np.abs(R[fit]) * Ut[fit]) / np.sum(Ut[fit] ** 2))
    ratio = np.abs(R) / Ut
    keep = np.abs(R) > 0
    exponent = float(np.polyfit(np.log(Ut[keep]), np.log(np.abs(R[keep])), 1)[0]) if keep.sum() > 2 else math.nan
    report = ExpansionReport(C, float(ratio.max()), float(max(0.0, ratio.max() - C)),
                             exponent, int(tail.sum()))
    if ratio.max() > (1.0 + slack) * C:
        raise ExpansionViolated(
            f"|R|/U reaches {ratio.max():.3g} > {(1 + slack) * C:.3g}; fitted |R| ~ U^{exponent:.3f}")
    return report
