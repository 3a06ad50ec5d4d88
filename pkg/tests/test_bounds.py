import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anomalkpp.bounds import (
    SeedProfile, SuperSolutionSpec, USubSolutionSpec, VSubSolutionSpec, amplitude_A,
    compute_T_star, delta_c, derivative_condition_check, derivative_threshold,
    dirichlet_subsolution_q, estimate_envelope_constants, log_q, psi, residual_super_u,
    residual_u, residual_u_grouped, super_solution_u, super_solution_v, theta_plus,
    theta_slope, u_subsolution, v_exponential_subsolution, wedge_tau, wedge_tau_asymptotic,
    _log_qtilde, _q_dominates,
)
from anomalkpp.exceptions import CUTooSmall, InvalidParameters, NoBracket, NonpositiveD, OutOfRegime
from anomalkpp.front_solver import evaluate_front
from anomalkpp.linear_analysis import Params, anomalous_speed

P_IV = Params(0.5, 2.0, 1.0)


def nv_minus(s):
    return (-s - math.sqrt(s * s - 4)) / 2


def nu_plus(d, a, s):
    return (-s + math.sqrt(s * s - 4 * d * a)) / (2 * d)


@pytest.fixture(scope="module")
def v25():
    return VSubSolutionSpec.build(2.5, 0.1)


@pytest.fixture(scope="module")
def usub():
    return USubSolutionSpec.build(P_IV, 2.02, 2.1, x0=-4.0)


# --- v sub-solutions ---------------------------------------------------------


def test_v_exponential_values(v25):
    assert v_exponential_subsolution(v25, 0.0, 1.0) == pytest.approx(0.1353353, abs=1e-7)
    for t in (1.0, 7.5):
        assert v_exponential_subsolution(v25, t, 2.5 * t) == pytest.approx(math.exp(-0.1 * t), rel=1e-14)
    a = v_exponential_subsolution(v25, 0.0, 1.0)
    b = v_exponential_subsolution(v25, 0.0, 2.0)
    assert b == pytest.approx(a * math.exp(v25.nu * 1.0), rel=1e-14)


def test_amplitude():
    spec = VSubSolutionSpec(2.5, 0.1, SeedProfile(), 1.0, 1.0, 0.5625)
    assert amplitude_A(spec, 0.0) == 1.0
    assert amplitude_A(spec, 200.0) == pytest.approx(0.36, abs=1e-12)
    t = np.linspace(0, 20, 100)
    assert np.all(np.diff(amplitude_A(spec, t)) < 0)
    flat = VSubSolutionSpec(2.5, 0.1, SeedProfile(), 1.0, 0.0, 0.5625)
    assert np.all(amplitude_A(flat, t) == 1.0)


def test_q_vanishes_at_boundary_and_is_nonnegative(v25):
    for t in (0.5, 5.0, 50.0):
        assert dirichlet_subsolution_q(v25, t, 0.0) == 0.0
        q = np.exp(log_q(v25, t, np.linspace(0.0, 60.0, 300)))
        assert np.all(q >= 0)


def test_gauss_legendre_matches_adaptive_quadrature(v25):
    for t in (0.3, 4.0, 40.0, 400.0):
        y = np.linspace(0.01, 2.0 * t + 10, 25)
        np.testing.assert_allclose(log_q(v25, t, y), log_q(v25, t, y, use_quad=True), atol=1e-9)


def test_qtilde_solves_linear_equation():
    # q_t = q_yy + sigma q_y + q, checked by central differences
    sigma, seed = 2.5, SeedProfile()
    f = lambda t, y: np.exp(_log_qtilde(sigma, seed, t, y))
    t, y = 3.0, np.linspace(0.5, 8.0, 16)
    ht, hy = 1e-4, 1e-3
    qt = (f(t + ht, y) - f(t - ht, y)) / (2 * ht)
    qy = (f(t, y + hy) - f(t, y - hy)) / (2 * hy)
    qyy = (f(t, y + hy) - 2 * f(t, y) + f(t, y - hy)) / hy**2
    res = qt - qyy - sigma * qy - f(t, y)
    assert np.max(np.abs(res)) <= 1e-5 * np.max(np.abs(f(t, y)))


def test_single_source_kernel():
    # a narrow bump at y' = 1 acts as a point source of its mass
    sigma, eps, h = 2.5, 0.01, 1.0
    seed = SeedProfile(1 - eps, 1 + eps, h)
    mass = h * eps
    t = 30.0
    y = np.linspace(0.5, 40.0, 30)
    kern = (np.exp(-(y - 1) ** 2 / (4 * t)) - np.exp(-(y + 1) ** 2 / (4 * t))) / math.sqrt(4 * math.pi * t)
    oracle = mass * np.exp((1 - sigma**2 / 4) * t - sigma * y / 2) * kern
    np.testing.assert_allclose(np.exp(_log_qtilde(sigma, seed, t, y)), oracle, rtol=1e-4)


def test_envelope_constants():
    env = estimate_envelope_constants(2.5, SeedProfile(1.0, 2.0, 1.0))
    assert env.omega == pytest.approx(0.5625)
    assert env.C_bound == pytest.approx(1.5 * env.raw_max)
    assert estimate_envelope_constants(2.5, SeedProfile(1.0, 2.0, 0.0)).C_bound == 0.0
    half = estimate_envelope_constants(2.5, SeedProfile(1.0, 2.0, 0.5))
    assert half.C_bound == pytest.approx(0.5 * env.C_bound, rel=1e-12)


def test_envelope_holds_on_denser_grid():
    seed = SeedProfile(1.0, 2.0, 1.0)
    env = estimate_envelope_constants(2.5, seed)
    for t in np.geomspace(0.1, 50.0, 500):
        y = np.linspace(0.0, seed.b + 20 * math.sqrt(t), 4000)[1:]
        assert np.exp(_log_qtilde(2.5, seed, t, y)).max() <= env.C_bound * math.exp(-env.omega * t)


def test_seed_validation():
    with pytest.raises(InvalidParameters):
        SeedProfile(-1.0, 2.0)
    with pytest.raises(InvalidParameters):
        SeedProfile.from_samples([1, 2, 3], [0, 1.5, 0])
    with pytest.raises(InvalidParameters):
        VSubSolutionSpec.build(2.5, 0.1, SeedProfile(1.0, 2.0, 0.0))
    s = SeedProfile.from_samples([1, 2, 3], [0, 0.5, 0])
    assert s(2.0) == 0.5 and s(0.5) == 0.0


# --- wedge ------------------------------------------------------------------------


def test_wedge_tends_to_asymptote(v25):
    for t in (1e3, 1e4, 1e5):
        lo, hi = wedge_tau(v25, t)
        alo, ahi = wedge_tau_asymptotic(v25, t)
        assert lo < hi
        assert abs(lo / t - alo / t) < 2.0 / math.sqrt(t)
        assert abs(hi / t - ahi / t) < 2.0 / math.sqrt(t)


def test_wedge_slopes_over_late_window(v25):
    t = np.linspace(5e3, 1e4, 20)
    taus = np.array([wedge_tau(v25, ti) for ti in t])
    g, r = math.sqrt(2.5**2 - 4), 2 * math.sqrt(0.1)
    assert np.polyfit(t, taus[:, 0], 1)[0] == pytest.approx(g - r, abs=1e-2)
    assert np.polyfit(t, taus[:, 1], 1)[0] == pytest.approx(g + r, abs=1e-2)


def test_wedge_collapses_as_delta_shrinks():
    t = 1e4
    widths = []
    for delta in (0.1, 0.01, 0.001):
        lo, hi = wedge_tau(VSubSolutionSpec.build(2.5, delta), t)
        widths.append((hi - lo) / t)
    assert widths[0] > widths[1] > widths[2]
    assert widths[2] < 4 * math.sqrt(0.001) * 1.2


def test_wedge_group_velocity(v25):
    t = 1e4
    lo, hi = wedge_tau(v25, t)
    assert 2.5 + 0.5 * (lo + hi) / t == pytest.approx(-2 * nv_minus(2.5), abs=1e-3)


def test_no_bracket_at_tiny_times(v25):
    with pytest.raises(NoBracket):
        wedge_tau(v25, 0.01)


def test_T_star_self_consistent_and_seed_monotone(v25):
    ts = compute_T_star(v25)
    assert _q_dominates(v25, 2 * ts)
    big = VSubSolutionSpec.build(2.5, 0.1, SeedProfile(1.0, 3.0, 0.05).scaled(10.0))
    small = VSubSolutionSpec.build(2.5, 0.1, SeedProfile(1.0, 3.0, 0.05))
    assert compute_T_star(big) <= compute_T_star(small)


# --- u sub-solution ------------------------------------------------------------


def test_delta_c_value_and_limits():
    oracle = math.sqrt(2.1**2 - 4) * (nv_minus(2.1) - nu_plus(0.5, 2.0, 2.1))
    assert nv_minus(2.1) == pytest.approx(-1.3701562, abs=1e-7)
    assert nu_plus(0.5, 2.0, 2.1) == pytest.approx(-1.4596876, abs=1e-7)
    assert delta_c(P_IV, 2.1) == pytest.approx((-1.3701562 + 1.4596876) * math.sqrt(0.41), abs=1e-7)
    assert delta_c(P_IV, 2.1) == pytest.approx(oracle, rel=1e-12)
    sa = anomalous_speed(P_IV)
    assert delta_c(P_IV, sa - 1e-7) < 1e-5
    assert delta_c(Params(0.5, 1.9, 1.0), 2 + 1e-9) < 1e-3


def test_delta_c_out_of_regime():
    with pytest.raises(OutOfRegime):
        delta_c(Params(3.0, 0.5, 1.0), 2.45)
    with pytest.raises(OutOfRegime):
        delta_c(P_IV, 2.2)


def test_theta_plus_slope_and_limit(usub):
    g = math.sqrt(2.1**2 - 4)
    assert g == pytest.approx(0.6403124, abs=1e-7)
    for t in (1e3, 1e4):
        assert theta_plus(usub, t) / t == pytest.approx(g, abs=0.05)
    assert abs(theta_slope(usub) - g) <= 1e-6
    limit = math.log(usub.D / P_IV.beta) / (usub.nu_v - usub.nu_u)
    assert theta_plus(usub, 1e4) - g * 1e4 == pytest.approx(limit, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 300.0))
def test_psi_normalisation_and_zero(usub, t):
    assert psi(usub, 0.0, t) == pytest.approx(1.0, abs=1e-14)
    assert abs(psi(usub, theta_plus(usub, t), t)) <= 1e-10
    y = np.linspace(0.0, float(theta_plus(usub, t)), 50)[:-1]
    assert np.all(psi(usub, y, t) > 0)


def test_psi_pure_exponential_when_uncoupled():
    spec = USubSolutionSpec.build(Params(0.5, 2.0, 0.0), 2.02, 2.1)
    y = np.linspace(0, 10, 21)
    np.testing.assert_allclose(psi(spec, y, 3.0), np.exp(spec.nu_u * y), rtol=1e-14)
    assert derivative_threshold(spec) == 0.0
    assert all(derivative_condition_check(spec, t).printed_holds for t in (0.1, 1.0, 10.0))


def test_u_subsolution_branches(usub):
    t = 120.0
    y0 = usub.x0 + usub.sigma * t
    a = u_subsolution(usub, t, np.array([y0]))[0]
    assert a == pytest.approx(float(evaluate_front(usub.front, usub.r, (usub.sigma - usub.s) * t)), rel=1e-12)
    th = float(theta_plus(usub, t))
    assert np.all(u_subsolution(usub, t, y0 + th + np.array([0.0, 1.0, 50.0])) == 0)
    far_left = u_subsolution(usub, t, np.array([usub.x0 + usub.s * t - 200.0]))[0]
    assert far_left == pytest.approx(1.0, abs=1e-6)


def test_residual_outer_regions_equal_minus_beta_v(usub):
    t = 120.0
    rng = np.random.default_rng(0)
    th = float(theta_plus(usub, t))
    x_far = usub.x0 + usub.sigma * t + th + rng.uniform(0.1, 50, 20)
    v = rng.uniform(0, 1, 20)
    np.testing.assert_allclose(residual_u(usub, t, x_far, v), -P_IV.beta * v, rtol=0, atol=1e-15)
    x_front = usub.x0 + usub.sigma * t - rng.uniform(0.5, 30, 20)
    np.testing.assert_allclose(residual_u(usub, t, x_front, v), -P_IV.beta * v, atol=1e-8)


def test_residual_front_branch_is_zero_without_coupling():
    spec = USubSolutionSpec.build(Params(0.5, 2.0, 0.0), 2.02, 2.1)
    x = spec.x0 + spec.sigma * 50.0 - np.linspace(0.5, 30, 40)
    assert np.max(np.abs(residual_u(spec, 50.0, x, 0.7))) <= 1e-8


def test_residual_matches_grouped_form(usub):
    t = 150.0
    th = float(theta_plus(usub, t))
    y = np.linspace(0.1, th - 0.1, 40)
    v = np.linspace(0.0, 0.3, 40)
    direct = residual_u(usub, t, usub.x0 + usub.sigma * t + y, v)
    np.testing.assert_allclose(direct, residual_u_grouped(usub, t, y, v), rtol=1e-9, atol=1e-14)


def test_derivative_condition(usub):
    thr = derivative_threshold(usub)
    assert 0 < thr < math.inf
    assert not derivative_condition_check(usub, 0.5 * thr).printed_holds
    assert derivative_condition_check(usub, 1.01 * thr).printed_holds
    late = derivative_condition_check(usub.with_r(-1.0), 1e3)
    assert late.holds and late.left < late.right < 0


def test_nonpositive_D_rejected(usub):
    with pytest.raises(NonpositiveD):
        USubSolutionSpec(usub.params, usub.s, usub.sigma, -10.0, 0.0, usub.front, usub.vspec)


def test_u_spec_speed_ordering():
    with pytest.raises(OutOfRegime):
        USubSolutionSpec.build(P_IV, 2.1, 2.05)


# --- super-solutions -----------------------------------------------------------


def test_super_solution_constants():
    sup = SuperSolutionSpec.build(P_IV, 2.3)
    n = nv_minus(2.3)
    du = 0.5 * n * n + 2.3 * n + 2.0
    assert du == pytest.approx(-0.475574, abs=1e-6)
    assert sup.kappa == pytest.approx(2.1027, abs=1e-4)
    assert sup.kappa == pytest.approx(-1 / du, rel=1e-12)
    assert sup.u_c == pytest.approx((1 + math.sqrt(3)) / 2, abs=1e-12)
    assert sup.u_c == pytest.approx(1.3660254, abs=1e-7)
    branch = sup.C_u * math.exp(sup.nu_u * sup.theta) + sup.C_v * sup.kappa * math.exp(sup.nu_v * sup.theta)
    assert branch == pytest.approx(sup.u_c, rel=1e-12)


def test_super_solution_tail():
    sup = SuperSolutionSpec.build(P_IV, 2.3)
    y = np.array([5.0, 10.0, 20.0, 80.0])
    u = super_solution_u(sup, 0.0, y)
    assert np.all(u > 0) and np.all(np.diff(u) < 0)
    ratio = u / (sup.C_u * np.exp(sup.nu_u * y))
    assert np.all(ratio[:-1] > 1) and np.all(np.diff(ratio) < 0) and ratio[-1] - 1 < 1e-12
    assert super_solution_v(1.0, 2.3, 0.0, -5.0) == 1.0
    assert super_solution_v(1.0, 2.3, 0.0, 2.0) == pytest.approx(math.exp(nv_minus(2.3) * 2.0))


def test_super_residual_nonnegative_against_its_own_v():
    sup = SuperSolutionSpec.build(P_IV, 2.3)
    x = np.linspace(-30, 80, 2000)
    x = x[np.abs(x - sup.theta) > 1e-3]
    N = residual_super_u(sup, 0.0, x, super_solution_v(1.0, 2.3, 0.0, x))
    assert N.min() >= -1e-8


def test_super_solution_errors():
    with pytest.raises(OutOfRegime):
        SuperSolutionSpec.build(P_IV, 2.1)
    # with kappa > u_c every C_u > 0 works, so use weaker coupling
    weak = Params(0.5, 2.0, 0.1)
    assert SuperSolutionSpec.build(weak, 2.3).kappa < weak.u_c
    with pytest.raises(CUTooSmall):
        SuperSolutionSpec.build(weak, 2.3, C_u=1e-12)


# --- certificate ---------------------------------------------------------------------


def test_canonical_certificate(canonical_certificate):
    rep = canonical_certificate
    failed = [k for k, ok in rep.checks.items() if not ok]
    assert rep.passed, failed
    assert rep.n_samples >= 100_000
    assert rep.delta_c == pytest.approx(0.0573280, abs=1e-7)
    assert rep.T_u >= max(rep.T_star, rep.T_delta)
    for row in rep.wedge["samples"]:
        assert row["tau_minus"] < row["theta_plus"] < row["tau_plus"]
    d = rep.to_dict()
    assert d["pass"] is True and d["n_violations"] == 0
