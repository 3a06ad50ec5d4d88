"""Explicit monotone finite-difference solver for the coupled system

    u_t = d u_xx + alpha u (1 - u) + beta v
    v_t =   v_xx + v (1 - v)

on a uniform grid that slides right with the invading fronts. Forward Euler
with central differences is order preserving when dt <= dt_max, which gives
the discrete comparison principle used by the certificate checks.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Optional, Sequence

import numba
import numpy as np

from .exceptions import DataOutOfRange, InvalidParameters, StabilityViolation
from .linear_analysis import Params

BOX_TOL = 1e-12


@dataclass(frozen=True)
class FieldState:
    t: float
    x_origin: float
    dx: float
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.dx <= 0:
            raise InvalidParameters("dx must be positive")
        if len(self.u) != len(self.v) or len(self.u) < 16:
            raise InvalidParameters("u and v must have equal length >= 16")

    @property
    def x(self) -> np.ndarray:
        return self.x_origin + self.dx * np.arange(len(self.u))

    @property
    def n(self) -> int:
        return len(self.u)

    def copy(self) -> "FieldState":
        return replace(self, u=self.u.copy(), v=self.v.copy())


@dataclass(frozen=True)
class Bump:
    center: float
    width: float
    amplitude: float
    target: Literal["u", "v"] = "u"

    def __call__(self, x):
        z = (np.asarray(x) - self.center) / self.width
        return np.where(np.abs(z) < 0.5, self.amplitude * np.cos(np.pi * z) ** 2, 0.0)


@dataclass(frozen=True)
class InitialDataSpec:
    kind: Literal["heaviside", "heaviside_plus_bump"] = "heaviside"
    step_location: float = 0.0
    bump: Optional[Bump] = None


@dataclass(frozen=True)
class WindowPolicy:
    """Slide the grid right when an invasion point nears the right edge.

    Lengths are in x units. The grid shifts by ``shift`` once either component
    reaches ``level`` within ``margin`` of the right edge. Left cells are
    dropped only while the trailing invasion point stays at least ``trail``
    from the left edge; otherwise the grid grows on the right.
    """

    margin: float = 200.0
    shift: float = 1.25
    trail: float = 50.0
    level: float = 0.5

    def cells(self, dx: float) -> tuple[int, int, int]:
        return (int(round(self.margin / dx)), max(1, int(round(self.shift / dx))),
                int(round(self.trail / dx)))


def dt_max(params: Params, dx: float) -> float:
    lip = params.alpha * (2.0 * params.u_c - 1.0) + params.beta + 3.0
    return 0.9 / (2.0 * max(params.d, 1.0) / dx**2 + lip)


def init_state(params: Params, domain: tuple[float, float, float],
               init: InitialDataSpec = InitialDataSpec()) -> FieldState:
    x_left, x_right, dx = domain
    if dx <= 0:
        raise InvalidParameters("dx must be positive")
    if x_right - x_left < 100 * dx:
        raise InvalidParameters("domain must span at least 100 cells")
    n = int(round((x_right - x_left) / dx)) + 1
    x = x_left + dx * np.arange(n)
    behind = (x < init.step_location).astype(float)
    u = params.u_c * behind
    v = behind.copy()
    if init.kind == "heaviside_plus_bump" and init.bump is not None:
        pert = init.bump(x)
        if init.bump.target == "u":
            u = u + pert
        else:
            v = v + pert
    if u.min() < 0 or u.max() > params.u_c or v.min() < 0 or v.max() > 1.0:
        raise DataOutOfRange("initial data leaves the box [0, u_c] x [0, 1]")
    return FieldState(0.0, float(x_left), float(dx), u, v)


@numba.njit(cache=True)
def _advance(u, v, n_steps, dt, dx, d, alpha, beta, evolve_u, trig, level, u_hi):
    """Advance in place; stop early once a field reaches ``level`` at index >= trig.

    Returns (steps taken, box flag, hit flag). The box flag is 1 if any value
    left the box or became non-finite (checked after each step).
    """
    n = u.shape[0]
    ru = dt * d / (dx * dx)
    rv = dt / (dx * dx)
    lo = -1e-12
    for k in range(n_steps):
        pu = u[0]
        pv = v[0]
        bad = False
        hit = False
        for i in range(1, n - 1):
            cu = u[i]
            cv = v[i]
            nv = cv + rv * (pv - 2.0 * cv + v[i + 1]) + dt * cv * (1.0 - cv)
            if evolve_u:
                nu = cu + ru * (pu - 2.0 * cu + u[i + 1]) + dt * (alpha * cu * (1.0 - cu) + beta * cv)
            else:
                nu = cu
            u[i] = nu
            v[i] = nv
            pu = cu
            pv = cv
            if not (nu >= lo and nu <= u_hi + 1e-12 and nv >= lo and nv <= 1.0 + 1e-12):
                bad = True
            if i >= trig and (nu >= level or nv >= level):
                hit = True
        if bad:
            return k + 1, 1, 0
        if hit:
            return k + 1, 0, 1
    return n_steps, 0, 0


def _check(state, params, flag):
    if flag:
        raise StabilityViolation(
            f"field left [0, u_c] x [0, 1] at t = {state.t}; is dt above dt_max?")


def step(params: Params, state: FieldState, dt: float, check: bool = True) -> FieldState:
    """One explicit Euler step; returns a new state."""
    u, v = state.u.copy(), state.v.copy()
    _, flag, _ = _advance(u, v, 1, dt, state.dx, params.d, params.alpha, params.beta,
                       True, u.shape[0] + 1, math.inf, params.u_c)
    out = FieldState(state.t + dt, state.x_origin, state.dx, u, v)
    if check:
        _check(out, params, flag)
    return out


def _rightmost_at_or_above(f, level):
    idx = np.flatnonzero(f >= level)
    return int(idx[-1]) if idx.size else -1


@dataclass
class RunResult:
    state: FieldState
    dt: float
    n_steps: int
    shifts: int
    wall_time: float
    observer_outputs: list = field(default_factory=list)

    def manifest(self) -> dict:
        s = self.state
        return {
            "t_end": s.t, "dt": self.dt, "n_steps": self.n_steps,
            "shift_count": self.shifts, "wall_time": self.wall_time,
            "grid": {"x_origin": s.x_origin, "dx": s.dx, "n": s.n},
        }


def _apply_shift(state: FieldState, policy: WindowPolicy) -> FieldState:
    _, W, trail_cells = policy.cells(state.dx)
    trail = min(
        max(_rightmost_at_or_above(state.u, policy.level), 0),
        max(_rightmost_at_or_above(state.v, policy.level), 0),
    )
    pad = np.zeros(W)
    if trail - W >= trail_cells:
        u = np.concatenate([state.u[W:], pad])
        v = np.concatenate([state.v[W:], pad])
        return FieldState(state.t, state.x_origin + W * state.dx, state.dx, u, v)
    u = np.concatenate([state.u, pad])
    v = np.concatenate([state.v, pad])
    return FieldState(state.t, state.x_origin, state.dx, u, v)


def run(params: Params, state: FieldState, t_end: float, *, dt: Optional[float] = None,
        observers: Sequence[Callable] = (), stride: int = 500,
        window: Optional[WindowPolicy] = WindowPolicy(), evolve_u: bool = True,
        check: bool = True) -> RunResult:
    """Advance ``state`` to ``t_end`` with a fixed step.

    The step is the largest dt' <= dt (default dt_max) that divides the
    interval evenly. Observers are called as ``obs(t, state)`` at the start,
    every ``stride`` steps and at the end; their return values are collected.
    """
    t0 = state.t
    dt = dt_max(params, state.dx) if dt is None else dt
    span = t_end - t0
    n_total = int(math.ceil(span / dt - 1e-9)) if span > 0 else 0
    dt_eff = span / n_total if n_total else dt
    u, v = state.u.copy(), state.v.copy()
    x_origin = state.x_origin
    outputs = []
    shifts = 0
    done = 0
    wall = time.perf_counter()

    def snapshot():
        return FieldState(t0 + done * dt_eff, x_origin, state.dx, u.copy(), v.copy())

    def notify():
        cur = snapshot()
        for obs in observers:
            outputs.append(obs(cur.t, cur))

    notify()
    since_obs = 0
    while done < n_total:
        chunk = min(stride - since_obs, n_total - done)
        trig = max(u.shape[0] - 1 - window.cells(state.dx)[0], 1) if window else u.shape[0] + 1
        lvl = window.level if window else math.inf
        k, bad, hit = _advance(u, v, chunk, dt_eff, state.dx, params.d, params.alpha,
                               params.beta, evolve_u, trig, lvl, params.u_c)
        done += k
        since_obs += k
        if check and bad:
            _check(snapshot(), params, bad)
        if hit:
            shifted = _apply_shift(FieldState(0.0, x_origin, state.dx, u, v), window)
            u, v, x_origin = shifted.u, shifted.v, shifted.x_origin
            shifts += 1
        if since_obs >= stride or done == n_total:
            notify()
            since_obs = 0
    final = snapshot()
    return RunResult(final, dt_eff, n_total, shifts, time.perf_counter() - wall, outputs)


@dataclass(frozen=True)
class OrderingReport:
    max_violation: float
    passed: bool
    n_steps: int
    dt: float
    note: str = ""


def ordering_test(params: Params, state_a: FieldState, state_b: FieldState, t_end: float,
                  dt: Optional[float] = None, tol: float = 1e-12) -> OrderingReport:
    """Co-evolve two ordered states on a fixed grid and track max(0, A - B)."""
    if state_a.n != state_b.n or state_a.dx != state_b.dx:
        raise InvalidParameters("states must share a grid")
    dt = dt_max(params, state_a.dx) if dt is None else dt
    n_steps = int(math.ceil((t_end - state_a.t) / dt - 1e-9))
    ua, va = state_a.u.copy(), state_a.v.copy()
    ub, vb = state_b.u.copy(), state_b.v.copy()
    worst = max(0.0, float(np.max(ua - ub)), float(np.max(va - vb)))
    note = ""
    for _ in range(n_steps):
        for uu, vv in ((ua, va), (ub, vb)):
            _advance(uu, vv, 1, dt, state_a.dx, params.d, params.alpha, params.beta,
                     True, uu.shape[0] + 1, math.inf, params.u_c)
        with np.errstate(invalid="ignore", over="ignore"):
            diff = max(float(np.max(ua - ub)), float(np.max(va - vb)))
        if not np.isfinite(diff) or not (np.all(np.isfinite(ua)) and np.all(np.isfinite(ub))):
            worst, note = math.inf, "non-finite values"
            break
        worst = max(worst, diff)
    return OrderingReport(worst, worst <= tol, n_steps, dt, note)
