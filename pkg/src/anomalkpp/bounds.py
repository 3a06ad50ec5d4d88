"""Explicit sub- and super-solutions and their numerical certification.

All bound functions live in a frame shifted by ``x0``: the moving coordinate
is ``y = x - x0 - sigma t`` (or ``x - x0 - s t`` for fronts). A negative
``x0`` lets a seed supported on y > 0 sit under Heaviside data for v.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect, brentq

from .exceptions import (
    CUTooSmall, InvalidParameters, NoBracket, NonpositiveD, NotFoundWithinHorizon,
    OutOfRegime, QuadratureFailure,
)
from .front_solver import FrontProfile, evaluate_front, evaluate_front_derivative, solve_front
from .linear_analysis import Params, anomalous_speed, classify_regime, d_u, nu_u_real, nu_v_real

QUAD_RTOL = 1e-10
Z_TOL = 1e-10
RESIDUAL_TOL = 1e-8
SAFETY = 1.5
_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)


# ---------------------------------------------------------------------------
# seed profile q0


@dataclass(frozen=True)
class SeedProfile:
    """Compactly supported seed on [a, b] with 0 < a < b.

    Either a raised cosine of the given height or a piecewise-linear
    interpolant of samples (``ys``, ``vals``) that vanish at both ends.
    """

    a: float = 1.0
    b: float = 3.0
    height: float = 0.5
    ys: Optional[tuple] = None
    vals: Optional[tuple] = None

    def __post_init__(self):
        if not (0 < self.a < self.b):
            raise InvalidParameters("seed support must satisfy 0 < a < b")
        if self.ys is not None:
            ys, vals = np.asarray(self.ys, float), np.asarray(self.vals, float)
            if ys.shape != vals.shape or ys.size < 2 or np.any(np.diff(ys) <= 0):
                raise InvalidParameters("seed samples must be strictly increasing and paired")
            if np.any(vals < 0) or np.any(vals > 1):
                raise InvalidParameters("seed values must lie in [0, 1]")
        elif not 0 <= self.height <= 1:
            raise InvalidParameters("seed height must lie in [0, 1]")

    @classmethod
    def from_samples(cls, ys, vals) -> "SeedProfile":
        ys = tuple(float(v) for v in ys)
        return cls(ys[0], ys[-1], 0.0, ys, tuple(float(v) for v in vals))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.ys is not None:
            return np.interp(y, self.ys, self.vals, left=0.0, right=0.0)
        inside = (y >= self.a) & (y <= self.b)
        phase = 2 * np.pi * (y - self.a) / (self.b - self.a)
        return np.where(inside, 0.5 * self.height * (1 - np.cos(phase)), 0.0)

    def scaled(self, lam: float) -> "SeedProfile":
        if self.ys is not None:
            return SeedProfile.from_samples(self.ys, np.asarray(self.vals) * lam)
        return SeedProfile(self.a, self.b, self.height * lam)

    @property
    def breakpoints(self) -> np.ndarray:
        if self.ys is not None:
            return np.asarray(self.ys, dtype=float)
        return np.linspace(self.a, self.b, 9)

    @cached_property
    def _nodes(self):
        # composite 32-point Gauss-Legendre on panels between breakpoints
        e = self.breakpoints
        lo, hi = e[:-1, None], e[1:, None]
        y = (0.5 * (hi - lo) * _GL_X + 0.5 * (hi + lo)).ravel()
        w = (0.5 * (hi - lo) * _GL_W).ravel()
        return y, w * self(y)

    @property
    def is_zero(self) -> bool:
        return not np.any(self._nodes[1] > 0)


# ---------------------------------------------------------------------------
# Dirichlet sub-solution for v


def _log_kernel_integral(seed: SeedProfile, rho: float, z) -> np.ndarray:
    """log of int exp(-(y' rho)^2/4) sinh(z y') q0(y') dy' (vectorized in z >= 0).

    sinh is written as exp(z b) * (exp(z (y'-b)) - exp(-z (y'+b))) / 2 so that
    the summand stays bounded for every z.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    yq, wq = seed._nodes
    b = seed.b
    damp = np.exp(-0.25 * (yq * rho) ** 2) * wq
    zz = z[:, None]
    core = np.exp(zz * (yq - b)) * (-np.expm1(-2.0 * zz * yq)) * 0.5
    with np.errstate(divide="ignore"):
        return z * b + np.log(core @ damp)


def _log_kernel_integral_quad(seed: SeedProfile, rho: float, z: float) -> float:
    if z <= 0:
        return -math.inf
    b = seed.b

    def f(yp):
        return math.exp(-0.25 * (yp * rho) ** 2 + z * (yp - b)) * (-math.expm1(-2 * z * yp)) * 0.5 * float(seed(yp))

    pts = seed.breakpoints[1:-1] if seed.ys is not None and len(seed.ys) < 50 else None
    val, err, *rest = quad(f, seed.a, seed.b, epsabs=0.0, epsrel=QUAD_RTOL, limit=200,
                           points=pts, full_output=1)
    if val <= 0 or err > QUAD_RTOL * abs(val) * 10:
        raise QuadratureFailure(f"quadrature error {err:.3g} for value {val:.3g}")
    return z * b + math.log(val)


@dataclass(frozen=True)
class EnvelopeConstants:
    C_bound: float
    omega: float
    raw_max: float
    safety: float = SAFETY

    def __iter__(self):
        return iter((self.C_bound, self.omega))


def _log_qtilde(sigma, seed, t, y, use_quad=False):
    """log of the Dirichlet heat-kernel solution (amplitude 1) at y >= 0."""
    y = np.asarray(y, dtype=float)
    rho = t ** -0.5
    z = y / (2.0 * t)
    if use_quad:
        li = np.array([_log_kernel_integral_quad(seed, rho, zi) for zi in np.atleast_1d(z)])
    else:
        li = _log_kernel_integral(seed, rho, z)
    li = li.reshape(y.shape)
    return (1 - sigma**2 / 4) * t - 0.5 * sigma * y - y * y / (4 * t) + math.log(rho / math.sqrt(math.pi)) + li


def estimate_envelope_constants(sigma: float, q0: SeedProfile, n_t: int = 50, n_y: int = 400) -> EnvelopeConstants:
    """C with |q~(t, y)| <= C exp(-omega t), omega = sigma^2/4 - 1, from a sampled maximum."""
    if not sigma > 2:
        raise InvalidParameters("sigma must exceed 2")
    omega = sigma**2 / 4 - 1
    if q0.is_zero:
        return EnvelopeConstants(0.0, omega, 0.0)
    best = 0.0
    for t in np.geomspace(0.1, 50.0, n_t):
        y = np.linspace(0.0, q0.b + 20 * math.sqrt(t), n_y)[1:]
        best = max(best, float(np.exp(_log_qtilde(sigma, q0, t, y) + omega * t).max()))
    return EnvelopeConstants(SAFETY * best, omega, best)


@dataclass(frozen=True)
class VSubSolutionSpec:
    sigma: float
    delta: float
    q0: SeedProfile = field(default_factory=SeedProfile)
    A0: float = 1.0
    C_bound: float = 0.0
    omega: float = 0.0
    x0: float = 0.0

    def __post_init__(self):
        if not self.sigma > 2:
            raise InvalidParameters("sigma must exceed 2")
        if not self.delta > 0:
            raise InvalidParameters("delta must be positive")
        if self.q0.is_zero:
            raise InvalidParameters("seed q0 is identically zero")
        if abs(self.omega - (self.sigma**2 / 4 - 1)) > 1e-12:
            raise InvalidParameters("omega must equal sigma^2/4 - 1")

    @classmethod
    def build(cls, sigma: float, delta: float, q0: Optional[SeedProfile] = None,
              A0: float = 1.0, x0: float = 0.0) -> "VSubSolutionSpec":
        q0 = q0 or SeedProfile()
        env = estimate_envelope_constants(sigma, q0)
        return cls(sigma, delta, q0, A0, env.C_bound, env.omega, x0)

    @property
    def nu(self) -> float:
        return nu_v_real(self.sigma, "-")


def v_exponential_subsolution(spec: VSubSolutionSpec, t, x):
    y = np.asarray(x, dtype=float) - spec.x0 - spec.sigma * t
    return np.exp(spec.nu * y - spec.delta * t)


def amplitude_A(spec: VSubSolutionSpec, t):
    w, C, A0 = spec.omega, spec.C_bound, spec.A0
    return A0 * w / (w + C * A0 * (1 - np.exp(-w * np.asarray(t, dtype=float))))


def log_q(spec: VSubSolutionSpec, t: float, y, use_quad: bool = False):
    """log of the Dirichlet sub-solution q = A(t) q~(t, y); -inf at y = 0."""
    if not t > 0:
        raise InvalidParameters("t must be positive")
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise InvalidParameters("q is defined for y >= 0")
    return math.log(amplitude_A(spec, t)) + _log_qtilde(spec.sigma, spec.q0, t, y, use_quad)


def dirichlet_subsolution_q(spec: VSubSolutionSpec, t: float, y):
    """q(t, y) by adaptive quadrature (relative tolerance 1e-10)."""
    return np.exp(log_q(spec, t, y, use_quad=True))


# ---------------------------------------------------------------------------
# wedge


def _F(spec: VSubSolutionSpec, t: float, z):
    """F(rho, z) with rho = t^-1/2; v_lower <= q exactly where F <= 0."""
    z = np.asarray(z, dtype=float)
    rho = t ** -0.5
    s, nu = spec.sigma, spec.nu
    log_rhoH = (math.log(amplitude_A(spec, t) * rho / math.sqrt(math.pi))
                + _log_kernel_integral(spec.q0, rho, z).reshape(z.shape))
    return z * z + (s + 2 * nu) * z - (1 - s * s / 4 + spec.delta) - rho * rho * log_rhoH


def wedge_tau(spec: VSubSolutionSpec, t: float) -> tuple[float, float]:
    """(tau_-, tau_+) in the moving frame, from the roots of F around z_mid."""
    z_mid = 0.5 * math.sqrt(spec.sigma**2 - 4)
    f = lambda z: float(_F(spec, t, z))
    if not f(z_mid) < 0:
        raise NoBracket(f"F(z_mid) >= 0 at t = {t}")
    z_lo = z_mid * 1e-9
    if not f(z_lo) > 0:
        raise NoBracket(f"no sign change below z_mid at t = {t}")
    zm = bisect(f, z_lo, z_mid, xtol=Z_TOL)
    step = max(math.sqrt(spec.delta), 0.1)
    z_hi = z_mid + step
    while f(z_hi) <= 0:
        z_hi += step
        if z_hi > 1e3:
            raise NoBracket(f"no sign change above z_mid at t = {t}")
    zp = bisect(f, z_mid, z_hi, xtol=Z_TOL)
    return 2 * t * zm, 2 * t * zp


def wedge_tau_asymptotic(spec: VSubSolutionSpec, t: float) -> tuple[float, float]:
    g = math.sqrt(spec.sigma**2 - 4)
    r = 2 * math.sqrt(spec.delta)
    return (g - r) * t, (g + r) * t


def _q_dominates(spec, t, n=201) -> bool:
    try:
        lo, hi = wedge_tau(spec, t)
    except NoBracket:
        return False
    z = np.linspace(lo, hi, n) / (2 * t)
    return bool(np.all(_F(spec, t, z[1:-1]) <= 0))


def _first_true(pred: Callable[[float], bool], t0: float, horizon: float, resolution: float) -> float:
    if pred(t0):
        return t0
    lo, hi = t0, 2 * t0
    while not pred(hi):
        lo, hi = hi, 2 * hi
        if hi > horizon:
            raise NotFoundWithinHorizon(f"predicate never held for t <= {horizon}")
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if pred(mid) else (mid, hi)
    return hi


def compute_T_star(spec: VSubSolutionSpec, horizon: float = 1e4, resolution: float = 1e-2) -> float:
    """Earliest time at which the wedge exists and v_lower <= q across it."""
    return _first_true(lambda t: _q_dominates(spec, t), 0.01, horizon, resolution)


# ---------------------------------------------------------------------------
# u sub-solution


def delta_c(params: Params, sigma: float) -> float:
    if classify_regime(params.d, params.alpha).tag != "IV":
        raise OutOfRegime(f"(d, alpha) = ({params.d}, {params.alpha}) is not in region IV")
    lo, hi = max(2.0, params.s_u), anomalous_speed(params)
    if not lo < sigma < hi:
        raise OutOfRegime(f"sigma = {sigma} must lie in ({lo}, {hi})")
    return math.sqrt(sigma**2 - 4) * (nu_v_real(sigma, "-") - nu_u_real(params, sigma, "+"))


def default_sigma(params: Params, s: float) -> float:
    return 0.5 * (s + anomalous_speed(params))


@dataclass(frozen=True)
class USubSolutionSpec:
    params: Params
    s: float
    sigma: float
    delta_c: float
    r: float
    front: FrontProfile = field(repr=False)
    vspec: VSubSolutionSpec = field(repr=False)

    @classmethod
    def build(cls, params: Params, s: float, sigma: Optional[float] = None, r: float = 0.0,
              q0: Optional[SeedProfile] = None, x0: float = 0.0,
              front: Optional[FrontProfile] = None) -> "USubSolutionSpec":
        sigma = default_sigma(params, s) if sigma is None else sigma
        lo = max(2.0, params.s_u)
        if not lo < s < sigma:
            raise OutOfRegime(f"need {lo} < s < sigma, got s = {s}, sigma = {sigma}")
        dc = delta_c(params, sigma)
        if front is None or front.speed != s:
            front = solve_front(params, s)
        vspec = VSubSolutionSpec.build(sigma, dc, q0, x0=x0)
        return cls(params, s, sigma, dc, r, front, vspec)

    def __post_init__(self):
        if not self.D > 0:
            raise NonpositiveD(f"D(nu_v^-(sigma)) = {self.D} <= 0")

    def with_r(self, r: float) -> "USubSolutionSpec":
        return USubSolutionSpec(self.params, self.s, self.sigma, self.delta_c, r, self.front, self.vspec)

    @property
    def x0(self) -> float:
        return self.vspec.x0

    @property
    def nu_u(self) -> float:
        return nu_u_real(self.params, self.sigma, "+")

    @property
    def nu_v(self) -> float:
        return nu_v_real(self.sigma, "-")

    @property
    def D(self) -> float:
        p, n = self.params, nu_v_real(self.sigma, "-")
        return p.d * n * n + self.sigma * n + p.alpha + self.delta_c

    @property
    def B(self) -> float:
        return self.params.beta / self.D


def _psi_terms(spec: USubSolutionSpec, y, t):
    """psi and its derivatives (psi, psi_t, psi_y, psi_yy)."""
    y = np.asarray(y, dtype=float)
    nu, nv, dl, B = spec.nu_u, spec.nu_v, spec.delta_c, spec.B
    decay = math.exp(-dl * t)
    c1 = 1 + B * decay
    eu = np.exp(nu * y)
    ev = np.exp(nv * y) * decay
    psi = c1 * eu - B * ev
    psi_t = -dl * B * decay * eu + dl * B * ev
    psi_y = c1 * nu * eu - B * nv * ev
    psi_yy = c1 * nu * nu * eu - B * nv * nv * ev
    return psi, psi_t, psi_y, psi_yy


def psi(spec: USubSolutionSpec, y, t):
    return _psi_terms(spec, y, t)[0]


def theta_plus(spec: USubSolutionSpec, t):
    t = np.asarray(t, dtype=float)
    if spec.params.beta == 0:
        return np.full(t.shape, np.inf)[()]  # psi is a pure exponential and never vanishes
    gap = spec.nu_v - spec.nu_u
    return (spec.delta_c * t + np.log(spec.D / spec.params.beta + np.exp(-spec.delta_c * t))) / gap


def _front_amp(spec, t):
    # U_r((sigma - s) t) and its derivative
    arg = (spec.sigma - spec.s) * t
    return float(evaluate_front(spec.front, spec.r, arg)), float(evaluate_front_derivative(spec.front, spec.r, arg))


def u_subsolution(spec: USubSolutionSpec, t: float, x):
    x = np.asarray(x, dtype=float)
    y = x - spec.x0 - spec.sigma * t
    out = np.zeros_like(x)
    left = y < 0
    out[left] = evaluate_front(spec.front, spec.r, y[left] + (spec.sigma - spec.s) * t)
    mid = (~left) & (y < theta_plus(spec, t))
    a, _ = _front_amp(spec, t)
    out[mid] = a * psi(spec, y[mid], t)
    return out


def residual_u(spec: USubSolutionSpec, t: float, x, v):
    """N(u_lower) = u_t - d u_xx - alpha u (1 - u) - beta v, analytic on each branch."""
    p = spec.params
    x = np.asarray(x, dtype=float)
    v = np.broadcast_to(np.asarray(v, dtype=float), x.shape)
    y = x - spec.x0 - spec.sigma * t
    N = -p.beta * v.copy()
    left = y < 0
    xi = y[left] + (spec.sigma - spec.s) * t
    U = evaluate_front(spec.front, spec.r, xi)
    Up = evaluate_front_derivative(spec.front, spec.r, xi)
    Upp = spec.front.second_derivative(U, Up)
    N[left] += -spec.s * Up - p.d * Upp - p.alpha * (U - U * U)
    mid = (~left) & (y < theta_plus(spec, t))
    a, ap = _front_amp(spec, t)
    ps, ps_t, ps_y, ps_yy = _psi_terms(spec, y[mid], t)
    N[mid] += ((spec.sigma - spec.s) * ap * ps
               + a * (ps_t - spec.sigma * ps_y - p.d * ps_yy - p.alpha * ps)
               + p.alpha * (a * ps) ** 2)
    return N


def residual_u_grouped(spec: USubSolutionSpec, t: float, y, v):
    """Middle-branch residual in the grouped form
    (sigma-s) U' psi + U c1' e^{nu_u y} + U beta v_lower - beta v + alpha (U psi)^2."""
    p = spec.params
    y = np.asarray(y, dtype=float)
    a, ap = _front_amp(spec, t)
    dl, B = spec.delta_c, spec.B
    c1p = -dl * B * math.exp(-dl * t)
    ps = psi(spec, y, t)
    vl = np.exp(spec.nu_v * y - dl * t)
    return ((spec.sigma - spec.s) * ap * ps + a * c1p * np.exp(spec.nu_u * y)
            + a * p.beta * vl - p.beta * np.asarray(v) + p.alpha * (a * ps) ** 2)


@dataclass(frozen=True)
class DerivativeReport:
    t: float
    left: float
    right: float
    holds: bool
    threshold_time: float
    printed_holds: bool


def derivative_threshold(spec: USubSolutionSpec) -> float:
    """Time after which nu_u^+(s) < nu_u^+(sigma) + (nu_u - nu_v) B e^{-delta_c t}."""
    lhs = nu_u_real(spec.params, spec.s, "+")
    gain = spec.nu_u - lhs  # > 0
    coef = (spec.nu_v - spec.nu_u) * spec.B  # > 0
    if coef <= gain or coef == 0:
        return 0.0
    return math.log(coef / gain) / spec.delta_c


def derivative_condition_check(spec: USubSolutionSpec, t: float) -> DerivativeReport:
    a, ap = _front_amp(spec, t)
    dl = spec.delta_c
    right = a * (spec.nu_u + (spec.nu_u - spec.nu_v) * spec.B * math.exp(-dl * t))
    lhs = nu_u_real(spec.params, spec.s, "+")
    printed = lhs < spec.nu_u + (spec.nu_u - spec.nu_v) * spec.B * math.exp(-dl * t)
    return DerivativeReport(t, ap, right, bool(ap < right < 0), derivative_threshold(spec), bool(printed))


def T_delta(spec: USubSolutionSpec, t_star: Optional[float] = None, horizon: float = 1e4,
            resolution: float = 1e-2) -> float:
    """Earliest time after T_star with tau_- < Theta_+ < tau_+."""
    t0 = compute_T_star(spec.vspec) if t_star is None else t_star

    def pred(t):
        try:
            lo, hi = wedge_tau(spec.vspec, t)
        except NoBracket:
            return False
        th = float(theta_plus(spec, t))
        return lo < th < hi

    return _first_true(pred, t0, horizon, resolution)


# ---------------------------------------------------------------------------
# super-solutions


@dataclass(frozen=True)
class SuperSolutionSpec:
    params: Params
    s: float
    C_u: float
    C_v: float
    theta: float
    kappa: float
    u_c: float
    x0: float = 0.0

    @property
    def nu_u(self) -> float:
        return nu_u_real(self.params, self.s, "+")

    @property
    def nu_v(self) -> float:
        return nu_v_real(self.s, "-")

    @classmethod
    def build(cls, params: Params, s: float, C_v: float = 1.0, C_u: Optional[float] = None,
              theta_target: float = 1.0, x0: float = 0.0) -> "SuperSolutionSpec":
        s_anom = anomalous_speed(params)
        if not s > s_anom:
            raise OutOfRegime(f"s = {s} must exceed s_anom = {s_anom}")
        nu_u, nu_v = nu_u_real(params, s, "+"), nu_v_real(s, "-")
        du = d_u(params, nu_v, 0.0, s)
        if not du < 0:
            raise OutOfRegime(f"d_u(nu_v^-(s), 0) = {du} is not negative")
        kappa = -params.beta / du
        u_c = params.u_c
        y_v = math.log(1.0 / C_v) / nu_v
        if C_u is None:
            th = max(theta_target, y_v + 1.0)
            C_u = (u_c - C_v * kappa * math.exp(nu_v * th)) / math.exp(nu_u * th)
            if C_u <= 0:
                raise CUTooSmall("no positive C_u places theta at the requested point")
        branch = lambda y: C_u * math.exp(nu_u * y) + C_v * kappa * math.exp(nu_v * y) - u_c
        if not branch(y_v) > 0:
            raise CUTooSmall(f"C_u = {C_u} gives no theta > y_v = {y_v}")
        hi = y_v + 1.0
        while branch(hi) > 0:
            hi += 2 * (hi - y_v)
        theta = brentq(branch, y_v, hi, xtol=1e-14, rtol=1e-15)
        return cls(params, s, C_u, C_v, theta, kappa, u_c, x0)


def super_solution_v(C_v: float, s: float, t: float, x, x0: float = 0.0):
    y = np.asarray(x, dtype=float) - x0 - s * t
    return np.exp(np.minimum(0.0, math.log(C_v) + nu_v_real(s, "-") * y))


def super_solution_u(spec: SuperSolutionSpec, t: float, x):
    y = np.asarray(x, dtype=float) - spec.x0 - spec.s * t
    yy = np.maximum(y, spec.theta)
    exp_branch = spec.C_u * np.exp(spec.nu_u * yy) + spec.C_v * spec.kappa * np.exp(spec.nu_v * yy)
    return np.where(y < spec.theta, spec.u_c, exp_branch)


def residual_super_u(spec: SuperSolutionSpec, t: float, x, v):
    """N(u_upper) = u_t - d u_xx - alpha u (1 - u) - beta v."""
    p = spec.params
    y = np.asarray(x, dtype=float) - spec.x0 - spec.s * t
    v = np.asarray(v, dtype=float)
    nu, nv = spec.nu_u, spec.nu_v
    yy = np.maximum(y, spec.theta)
    eu = spec.C_u * np.exp(nu * yy)
    ev = spec.C_v * spec.kappa * np.exp(nv * yy)
    U = eu + ev
    Uy = nu * eu + nv * ev
    Uyy = nu * nu * eu + nv * nv * ev
    N_exp = -spec.s * Uy - p.d * Uyy - p.alpha * (U - U * U) - p.beta * v
    N_plat = -p.alpha * (spec.u_c - spec.u_c**2) - p.beta * v
    return np.where(y < spec.theta, N_plat, N_exp)


# ---------------------------------------------------------------------------
# certificate


@dataclass
class RegionStats:
    min_residual: float = math.inf
    max_residual: float = -math.inf
    n_samples: int = 0

    def add(self, N):
        if N.size:
            self.min_residual = min(self.min_residual, float(N.min()))
            self.max_residual = max(self.max_residual, float(N.max()))
            self.n_samples += int(N.size)


@dataclass
class CertificateReport:
    params: Params
    s: float
    sigma: float
    s_super: float
    delta_c: float
    r: float
    r_c: float
    T_star: float
    T_delta: float
    T_derivative: float
    T_u: float
    times: list
    regions: dict
    checks: dict
    wedge: dict
    super_solution: dict
    n_samples: int
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "params": asdict(self.params), "s": self.s, "sigma": self.sigma,
            "s_super": self.s_super, "delta_c": self.delta_c, "r": self.r, "r_c": self.r_c,
            "T_star": self.T_star, "T_delta": self.T_delta, "T_derivative": self.T_derivative,
            "T_u": self.T_u, "times": list(self.times),
            "regions": {k: asdict(v) for k, v in self.regions.items()},
            "wedge": self.wedge, "super": self.super_solution, "checks": self.checks,
            "n_samples": self.n_samples, "n_violations": len(self.violations),
            "pass": self.passed,
        }


MAX_VIOLATIONS = 10000


def _record(viol, check, t, x, val, mask):
    for xi, vi in zip(np.asarray(x)[mask], np.asarray(val)[mask]):
        if len(viol) >= MAX_VIOLATIONS:
            return
        viol.append({"check": check, "t": float(t), "x": float(xi), "value": float(vi)})


def sub_ordering_holds(spec: USubSolutionSpec, state, tol: float = 1e-12) -> bool:
    return bool(np.all(u_subsolution(spec, state.t, state.x) <= state.u + tol))


def _sign_condition(spec: USubSolutionSpec, t: float) -> bool:
    # (sigma - s) U'/U + alpha U psi < 0 at the matching point, where psi = 1
    a, ap = _front_amp(spec, t)
    return a > 0 and (spec.sigma - spec.s) * ap / a + spec.params.alpha * a < 0


def choose_r(spec: USubSolutionSpec, state, r_start: float = 0.0, r_min: float = -500.0,
             later: Sequence[float] = ()) -> float:
    """Largest integer r <= r_start meeting the matching conditions at state.t.

    ``later`` lists further times at which the derivative and sign conditions
    must also hold.
    """
    r = r_start
    while r >= r_min:
        cand = spec.with_r(r)
        times = [state.t, *later]
        if (all(derivative_condition_check(cand, t).holds and _sign_condition(cand, t) for t in times)
                and sub_ordering_holds(cand, state)):
            return r
        r -= 1.0
    raise NotFoundWithinHorizon(f"no admissible r >= {r_min}")


def theta_slope(spec: USubSolutionSpec, t_range=(1e3, 1e4), n: int = 50) -> float:
    t = np.linspace(*t_range, n)
    return float(np.polyfit(t, theta_plus(spec, t), 1)[0])


def certify_bounds(spec: USubSolutionSpec, sup: SuperSolutionSpec, states: Sequence,
                   t_star: float, t_delta: float, t_u: float, r_c: float,
                   min_samples: int = 100_000, tol: float = RESIDUAL_TOL) -> CertificateReport:
    """Check every sign condition at every grid node of every snapshot.

    ``spec`` must already carry the chosen translate r. Failures are
    reported, never raised.
    """
    p = spec.params
    regions = {k: RegionStats() for k in ("Ia", "Ib", "Ic", "Id")}
    viol: list = []
    ok = dict(residual_sign=True, strict_negative_Ib_Ic=True, wedge_bracketing=True,
              tau_minus_positive=True, v_lower_below_q=True, q_below_v=True,
              derivative_condition=True, sub_ordering=True, super_residual=True,
              super_u_ordering=True, super_v_ordering=True)
    wedge_rows = []
    sup_min = math.inf
    for st in states:
        t, x, u, v = st.t, st.x, st.u, st.v
        h = st.dx
        y = x - spec.x0 - spec.sigma * t
        th = float(theta_plus(spec, t))
        try:
            tm, tp = wedge_tau(spec.vspec, t)
        except NoBracket:
            tm, tp = math.nan, math.nan
        bracket = bool(tm < th < tp)
        wedge_rows.append({"t": t, "tau_minus": tm, "theta_plus": th, "tau_plus": tp, "bracketed": bracket})
        if t > t_delta and not bracket:
            ok["wedge_bracketing"] = False
        if not tm > 0:
            ok["tau_minus_positive"] = False

        # residual of the u sub-solution, junction cells excluded
        keep = (np.abs(y) > h) & (np.abs(y - th) > h)
        N = residual_u(spec, t, x[keep], v[keep])
        yk = y[keep]
        labels = {"Ia": yk <= 0, "Ib": (yk > 0) & (yk <= tm), "Ic": (yk > tm) & (yk <= th), "Id": yk > th}
        for name, m in labels.items():
            regions[name].add(N[m])
            if name in ("Ib", "Ic") and np.any(N[m] >= 0):
                ok["strict_negative_Ib_Ic"] = False
        bad = N > tol
        if bad.any():
            ok["residual_sign"] = False
            _record(viol, "residual_u", t, x[keep], N, bad)

        # v_lower <= q <= v on the wedge
        w = (y >= tm) & (y <= tp) & (y > 0)
        if w.any():
            lq = log_q(spec.vspec, t, y[w])
            lvl = spec.nu_v * y[w] - spec.delta_c * t
            b1 = lvl > lq + 1e-12
            with np.errstate(divide="ignore"):
                b2 = lq > np.log(v[w]) + 1e-10
            if b1.any():
                ok["v_lower_below_q"] = False
                _record(viol, "v_lower_le_q", t, x[w], lvl - lq, b1)
            if b2.any():
                ok["q_below_v"] = False
                _record(viol, "q_le_v", t, x[w], lq, b2)

        if not derivative_condition_check(spec, t).holds:
            ok["derivative_condition"] = False

        ul = u_subsolution(spec, t, x)
        b = ul > u + 1e-12
        if b.any():
            ok["sub_ordering"] = False
            _record(viol, "u_lower_le_u", t, x, ul - u, b)

        # super-solution
        ys = x - sup.x0 - sup.s * t
        y_v = math.log(1.0 / sup.C_v) / sup.nu_v
        ks = (np.abs(ys - sup.theta) > h) & (np.abs(ys - y_v) > h)
        Ns = residual_super_u(sup, t, x[ks], v[ks])
        sup_min = min(sup_min, float(Ns.min()))
        b = Ns < -tol
        if b.any():
            ok["super_residual"] = False
            _record(viol, "residual_super_u", t, x[ks], Ns, b)
        b = super_solution_u(sup, t, x) < u - 1e-12
        if b.any():
            ok["super_u_ordering"] = False
            _record(viol, "u_le_u_upper", t, x, u, b)
        b = super_solution_v(sup.C_v, sup.s, t, x, sup.x0) < v - 1e-12
        if b.any():
            ok["super_v_ordering"] = False
            _record(viol, "v_le_v_upper", t, x, v, b)

    n = sum(r.n_samples for r in regions.values())
    ok["enough_samples"] = n >= min_samples
    slope = theta_slope(spec)
    g = math.sqrt(spec.sigma**2 - 4)
    ok["theta_slope_identity"] = abs(slope - g) <= 1e-6
    wedge = {"theta_slope": slope, "sqrt_sigma2_minus_4": g, "samples": wedge_rows}
    sup_info = {"s": sup.s, "C_u": sup.C_u, "C_v": sup.C_v, "theta": sup.theta,
                "kappa": sup.kappa, "min_residual": sup_min}
    return CertificateReport(p, spec.s, spec.sigma, sup.s, spec.delta_c, spec.r, r_c, t_star,
                             t_delta, derivative_threshold(spec), t_u, [s.t for s in states],
                             regions, ok, wedge, sup_info, n, viol)


def run_certificate(params: Params, s: float = 2.02, sigma: float = 2.1, s_super: float = 2.3,
                    dx: float = 0.05, n_snapshots: int = 21, q0: Optional[SeedProfile] = None,
                    x0: float = -4.0, states: Optional[Sequence] = None) -> CertificateReport:
    """Build all bounds, simulate (unless ``states`` is given) and certify on [T_u, 2 T_u].

    With ``states`` supplied, the earliest snapshot at or after T_u fixes r and
    every snapshot up to twice that time is certified.
    """
    from .simulator import InitialDataSpec, init_state, run

    spec = USubSolutionSpec.build(params, s, sigma, q0=q0, x0=x0)
    t_star = compute_T_star(spec.vspec)
    t_del = T_delta(spec, t_star)
    t_u = max(t_star, t_del, derivative_threshold(spec))
    sup = SuperSolutionSpec.build(params, s_super)

    if states is None:
        t_end = 2 * t_u
        _, tp = wedge_tau(spec.vspec, t_end)
        x_right = x0 + sigma * t_end + tp + 60.0
        st0 = init_state(params, (-50.0, x_right, dx), InitialDataSpec())
        yq = np.linspace(spec.vspec.q0.a, spec.vspec.q0.b, 401)
        seed_ok = bool(np.all(spec.vspec.q0(yq) <= np.interp(yq + x0, st0.x, st0.v)))
        first = run(params, st0, t_u, window=None).state
        snaps = []
        dt_steps = (t_end - t_u) / (n_snapshots - 1)
        cur = first
        snaps.append(cur)
        for k in range(1, n_snapshots):
            cur = run(params, cur, t_u + k * dt_steps, window=None).state
            snaps.append(cur)
        states = snaps
    else:
        seed_ok = None
        states = sorted(states, key=lambda st: st.t)
        start = [st for st in states if st.t >= t_u]
        if not start:
            raise NotFoundWithinHorizon(f"no snapshot at or after T_u = {t_u}")
        t_u = start[0].t
        states = [st for st in start if st.t <= 2 * t_u + 1e-9]

    later = [st.t for st in states[1:]]
    r_c = choose_r(spec, states[0], later=later)
    spec = spec.with_r(r_c - 1.0)
    rep = certify_bounds(spec, sup, states, t_star, t_del, t_u, r_c)
    if seed_ok is not None:
        rep.checks["seed_below_v0"] = seed_ok
    return rep
