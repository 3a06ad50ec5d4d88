"""Dispersion relation of the linearization about (u, v) = (0, 0).

In a frame moving with speed ``s`` the linearized system is triangular and its
dispersion relation factors as ``d_u(nu, lam) * d_v(nu, lam)`` with

    d_u = d nu^2 + s nu + alpha - lam
    d_v =   nu^2 + s nu + 1     - lam

All four spatial roots are explicit, so double roots, pinching and the
parameter-regime map are computed in closed form here.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .exceptions import InvalidParameters, NotApplicable

Branch = Literal["+", "-"]
Component = Literal["u", "v"]

BOUNDARY_RTOL = 1e-12
_DOUBLE_ROOT_TOL = 1e-14


@dataclass(frozen=True)
class Params:
    """Parameters (d, alpha, beta) of the coupled system."""

    d: float
    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        for name in ("d", "alpha", "beta"):
            val = getattr(self, name)
            if not np.isfinite(val):
                raise InvalidParameters(f"{name} must be finite, got {val!r}")
        if self.d <= 0:
            raise InvalidParameters(f"d must be positive, got {self.d}")
        if self.alpha <= 0:
            raise InvalidParameters(f"alpha must be positive, got {self.alpha}")
        if self.beta < 0:
            raise InvalidParameters(f"beta must be nonnegative, got {self.beta}")

    @property
    def u_c(self) -> float:
        """Positive root of alpha*u*(1-u) + beta = 0 (the plateau of u behind the front)."""
        return 0.5 + 0.5 * math.sqrt(1.0 + 4.0 * self.beta / self.alpha)

    @property
    def s_u(self) -> float:
        return 2.0 * math.sqrt(self.d * self.alpha)

    @property
    def s_v(self) -> float:
        return 2.0


@dataclass(frozen=True)
class Regime:
    tag: Literal["I", "II", "III", "IV", "Boundary"]
    boundary_detail: Optional[str] = None

    def __str__(self):
        return self.tag


@dataclass(frozen=True)
class DoubleRoot:
    nu_star: complex
    lambda_star: complex
    speed: float
    branch_pair: tuple[str, str]
    pinched: bool
    residual: float = 0.0
    derivative_residual: float = 0.0


@dataclass(frozen=True)
class SpeedPrediction:
    s_u: float
    s_v: float
    s_anom: Optional[float]
    s_lin: float
    regime: Regime
    double_roots: list[DoubleRoot] = field(default_factory=list)


def _csqrt(z: complex) -> complex:
    if abs(z) < _DOUBLE_ROOT_TOL:
        return 0j
    return cmath.sqrt(z)


def _maybe_real(z: complex):
    # keep real-valued inputs real-valued on output
    return z.real if z.imag == 0.0 else z


def nu_u(params: Params, s: float, lam: complex = 0.0, branch: Branch = "+") -> complex:
    """Root of d*nu^2 + s*nu + alpha - lam = 0 on the requested branch."""
    d = params.d
    disc = s * s - 4.0 * d * params.alpha + 4.0 * d * lam
    root = _csqrt(complex(disc))
    sign = 1.0 if branch == "+" else -1.0
    return (-s + sign * root) / (2.0 * d)


def nu_v(s: float, lam: complex = 0.0, branch: Branch = "+") -> complex:
    """Root of nu^2 + s*nu + 1 - lam = 0 on the requested branch."""
    root = _csqrt(complex(s * s - 4.0 + 4.0 * lam))
    sign = 1.0 if branch == "+" else -1.0
    return (-s + sign * root) / 2.0


def nu_u_real(params: Params, s: float, branch: Branch = "+") -> float:
    """Real root of d_u(., 0); only defined for s >= 2 sqrt(d alpha)."""
    z = nu_u(params, s, 0.0, branch)
    if abs(z.imag) > 0:
        raise NotApplicable(f"nu_u^{branch}({s}, 0) is complex")
    return z.real


def nu_v_real(s: float, branch: Branch = "+") -> float:
    z = nu_v(s, 0.0, branch)
    if abs(z.imag) > 0:
        raise NotApplicable(f"nu_v^{branch}({s}, 0) is complex")
    return z.real


def d_u(params: Params, nu, lam, s):
    return params.d * nu * nu + s * nu + params.alpha - lam


def d_v(nu, lam, s):
    return nu * nu + s * nu + 1.0 - lam


def dispersion_factors(params: Params, nu, lam, s):
    return d_u(params, nu, lam, s), d_v(nu, lam, s)


def dispersion_eval(params: Params, nu, lam, s):
    du, dv = dispersion_factors(params, nu, lam, s)
    return du * dv


def dispersion_dnu(params: Params, nu, lam, s):
    du, dv = dispersion_factors(params, nu, lam, s)
    return (2.0 * params.d * nu + s) * dv + du * (2.0 * nu + s)


def envelope_velocity(params: Params, nu: float, component: Component = "u") -> float:
    if nu >= 0:
        raise ValueError(f"envelope velocity needs nu < 0, got {nu}")
    if component == "u":
        return -params.d * nu - params.alpha / nu
    if component == "v":
        return -nu - 1.0 / nu
    raise ValueError(f"unknown component {component!r}")


def group_velocity_v(nu: float) -> float:
    return -2.0 * nu


def anomalous_speed(params: Params) -> float:
    """Speed of the mixed u/v double root; raises NotApplicable when it has no real nu."""
    d, alpha = params.d, params.alpha
    if d == 1.0 or alpha == 1.0:
        raise NotApplicable("anomalous speed undefined for d == 1 or alpha == 1")
    ratio = (alpha - 1.0) / (1.0 - d)
    if ratio <= 0:
        raise NotApplicable("(alpha-1)/(1-d) <= 0: no real mixed double root")
    return math.sqrt(ratio) + math.sqrt(1.0 / ratio)


def mixed_root_nu(params: Params) -> float:
    """Common negative root of d_u(., 0) and d_v(., 0) at s = s_anom."""
    ratio = (params.alpha - 1.0) / (1.0 - params.d)
    if not ratio > 0 or not np.isfinite(ratio):
        raise NotApplicable("no real mixed double root")
    return -math.sqrt(ratio)


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= BOUNDARY_RTOL * max(1.0, abs(a), abs(b))


def classify_regime(d: float, alpha: float) -> Regime:
    if not (d > 0 and alpha > 0):
        raise InvalidParameters(f"classify_regime needs d, alpha > 0, got ({d}, {alpha})")
    details = []
    if _close(alpha, 2.0 - d):
        details.append("alpha = 2 - d")
    if d > 0.5 and _close(alpha, d / (2.0 * d - 1.0)):
        details.append("alpha = d/(2d-1)")
    if details:
        return Regime("Boundary", "; ".join(details))

    upper = d / (2.0 * d - 1.0) if d > 0.5 else math.inf
    in_I = d > 0.5 and alpha >= upper
    in_II = alpha <= 2.0 - d
    in_III = d > 1.0 and 2.0 - d < alpha < upper
    in_IV = (d <= 0.5 and alpha > 2.0 - d) or (0.5 < d < 1.0 and 2.0 - d < alpha < upper)
    hits = [tag for tag, ok in (("I", in_I), ("II", in_II), ("III", in_III), ("IV", in_IV)) if ok]
    if len(hits) != 1:
        # only reachable at the corner d == 1, alpha == 1 after rounding
        return Regime("Boundary", f"region predicates matched {hits or 'none'}")
    return Regime(hits[0])


def _root_residuals(params: Params, nu: float, s: float) -> tuple[float, float]:
    return abs(dispersion_eval(params, nu, 0.0, s)), abs(dispersion_dnu(params, nu, 0.0, s))


def _order_pair(a: str, b: str) -> tuple[str, str]:
    # '+' branch first; u before v when the signs agree
    return tuple(sorted((a, b), key=lambda lab: (lab[1] != "+", lab[0])))


def _mixed_branch_labels(params: Params, nu_star: float, s: float) -> tuple[str, str]:
    # a root right of the branch point -s/(2d) sits on the '+' branch
    u_lab = "u+" if nu_star > -s / (2.0 * params.d) else "u-"
    v_lab = "v+" if nu_star > -s / 2.0 else "v-"
    return _order_pair(u_lab, v_lab)


def find_pinched_double_roots(params: Params) -> list[DoubleRoot]:
    """All real-speed, lambda = 0 double roots with their pinching verdicts.

    The mixed root is listed whenever it exists at real negative nu; it is
    pinched only if the colliding roots come from opposite branches.
    """
    roots = []
    s_u = params.s_u
    nu_uu = -s_u / (2.0 * params.d)
    res, dres = _root_residuals(params, nu_uu, s_u)
    roots.append(DoubleRoot(nu_uu, 0.0, s_u, ("u+", "u-"), True, res, dres))
    res, dres = _root_residuals(params, -1.0, 2.0)
    roots.append(DoubleRoot(-1.0, 0.0, 2.0, ("v+", "v-"), True, res, dres))
    try:
        s_anom = anomalous_speed(params)
    except NotApplicable:
        return roots
    nu_star = mixed_root_nu(params)
    pair = _mixed_branch_labels(params, nu_star, s_anom)
    pinched = pair[0][-1] != pair[1][-1]
    res, dres = _root_residuals(params, nu_star, s_anom)
    roots.append(DoubleRoot(nu_star, 0.0, s_anom, pair, pinched, res, dres))
    return roots


def continuation_branch_labels(params: Params, nu_star: float, s: float,
                               lam_star: float = 0.0, lam_start: float = 10.0,
                               n_steps: int = 4000) -> tuple[str, str]:
    """Slow cross-check of branch labels by following all four roots in lambda.

    Roots are labelled at ``lam_star + lam_start`` by the sign of their real
    part relative to the rest (the two with Re nu -> +inf are '+'), then tracked
    down to ``lam_star`` by nearest-neighbour matching. Returns the labels of
    the two tracked roots that end closest to ``nu_star``.
    """
    lams = np.linspace(lam_star + lam_start, lam_star, n_steps + 1)

    def all_roots(lam):
        return {
            "u+": nu_u(params, s, lam, "+"), "u-": nu_u(params, s, lam, "-"),
            "v+": nu_v(s, lam, "+"), "v-": nu_v(s, lam, "-"),
        }

    current = all_roots(lams[0])
    for lam in lams[1:]:
        fresh = all_roots(lam)
        nxt = {}
        # match within each factor; u- and v-roots cross freely
        for comp in "uv":
            a, b = current[comp + "+"], current[comp + "-"]
            fa, fb = fresh[comp + "+"], fresh[comp + "-"]
            if abs(fa - a) + abs(fb - b) <= abs(fb - a) + abs(fa - b):
                nxt[comp + "+"], nxt[comp + "-"] = fa, fb
            else:
                nxt[comp + "+"], nxt[comp + "-"] = fb, fa
        current = nxt
    ranked = sorted(current, key=lambda lab: abs(current[lab] - nu_star))
    return _order_pair(ranked[0], ranked[1])


def linear_spreading_speed(params: Params) -> SpeedPrediction:
    regime = classify_regime(params.d, params.alpha)
    roots = find_pinched_double_roots(params)
    candidates = [r.speed for r in roots if r.pinched and r.lambda_star.real >= 0]
    s_anom = None
    if regime.tag in ("III", "IV"):
        s_anom = anomalous_speed(params)
    return SpeedPrediction(
        s_u=params.s_u, s_v=2.0, s_anom=s_anom, s_lin=max(candidates),
        regime=regime, double_roots=roots,
    )


def analyze_report(params: Params) -> dict:
    """JSON-ready summary used by the ``analyze`` subcommand."""
    pred = linear_spreading_speed(params)
    report = {
        "params": {"d": params.d, "alpha": params.alpha, "beta": params.beta},
        "regime": pred.regime.tag,
        "s_u": pred.s_u,
        "s_v": pred.s_v,
        "s_lin": pred.s_lin,
        "double_roots": [
            {"s": r.speed, "nu": _maybe_real(complex(r.nu_star)),
             "branches": list(r.branch_pair), "pinched": r.pinched}
            for r in pred.double_roots
        ],
    }
    if pred.regime.boundary_detail:
        report["boundary_detail"] = pred.regime.boundary_detail
    if pred.s_anom is not None:
        report["s_anom"] = pred.s_anom
    return report
