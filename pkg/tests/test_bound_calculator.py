import math

import numpy as np
import pytest

from addlab import bound_calculator as bc
from addlab.entropy_geometry import scalar_f
from addlab.errors import AddlabError, DomainError


# ---------------------------------------------------------------------------
# M_d
# ---------------------------------------------------------------------------

def test_md_zero_and_domain():
    sol = bc.m_d(0.0, 5)
    assert sol.z_star == 1.0 and sol.value == 0.0
    with pytest.raises(DomainError):
        bc.m_d(-0.5, 3)
    with pytest.raises(DomainError):
        bc.m_d(10.0, 2)  # above d ln d = 1.386
    with pytest.raises(DomainError):
        bc.m_d(0.5, 1)


def test_md_constraint_residual_and_objective_form():
    for d, x in ((2, 0.5), (3, 1.0), (100, 3.0), (10 ** 4, 10.0)):
        sol = bc.m_d(x, d)
        assert sol.constraint_residual < 1e-10
        z = sol.z_star
        expected = -math.log(z) - (d - 1) * math.log((d - z) / (d - 1))
        assert abs(sol.value - expected) < 1e-12
        assert 1.0 < z < d


def test_md_against_brute_force_oracle_d2():
    got = bc.m_d(0.5, 2).value
    oracle = bc.m_d_oracle(0.5, 2, 1e-4)
    assert abs(got - oracle) < 1e-3


def test_md_against_brute_force_oracle_d3():
    got = bc.m_d(1.0, 3).value
    oracle = bc.m_d_oracle(1.0, 3, 2.5e-3)
    assert abs(got - oracle) < 2e-2


def test_md_oracle_trivial_and_domain():
    assert bc.m_d_oracle(0.0, 2, 1e-3) >= 0.0
    with pytest.raises(DomainError):
        bc.m_d_oracle(0.5, 4, 1e-2)


def test_md_increasing_in_x():
    for d in (2, 10, 10 ** 4):
        xs = np.linspace(0.0, 0.9 * d * math.log(d), 40)
        vals = [bc.m_d(float(x), d).value for x in xs]
        assert np.all(np.diff(vals) > -1e-12)


def test_md_lower_bound_lemma():
    # M_d(x) >= ln(x-1) - ln(2 e^2 - 1) for 2 e^2 <= x <= d ln d.
    d = 10 ** 4
    xs = np.linspace(bc.TWO_E_SQ, d * math.log(d), 50)
    for x in xs:
        lower = math.log(x - 1.0) - math.log(bc.TWO_E_SQ - 1.0)
        assert bc.m_d(float(x), d).value >= lower - 1e-9


def test_md_at_right_endpoint_is_large_but_finite():
    d = 100
    sol = bc.m_d(d * math.log(d), d)
    assert math.isfinite(sol.value)
    assert sol.value > 100.0


# ---------------------------------------------------------------------------
# f-ratio supremum and h_min
# ---------------------------------------------------------------------------

def test_f_ratio_sup_matches_closed_form():
    for gamma in (0.25, 0.5, 0.762):
        expected = 1.0 / scalar_f(1.0 - gamma)
        got = bc.f_ratio_sup(gamma)
        assert got <= expected * (1.0 + 1e-6)
        assert abs(got - expected) < 1e-6 * expected
    # Spec-level hand value: 1/f(0.5) = 6.51778...
    assert abs(bc.f_ratio_sup(0.5) - 6.517782706541858) < 1e-6


def test_f_ratio_sup_monotone_decreasing_in_gamma():
    # sup = 1/f(1-gamma) and f is decreasing on (0,1) with f(0) = 1, so the
    # supremum blows up as gamma -> 0+ and falls to 1 as gamma -> 1-.
    assert bc.f_ratio_sup(0.25) > bc.f_ratio_sup(0.5) > bc.f_ratio_sup(0.9) > 1.0
    assert bc.f_ratio_sup(0.01) > 100.0
    with pytest.raises(DomainError):
        bc.f_ratio_sup(1.0)


def test_h_min_curve_shape_and_minimum():
    with pytest.raises(DomainError):
        bc.h_min_curve(0.0)
    mid = bc.h_min_curve(0.72)
    assert bc.h_min_curve(1e-4) > 10 * mid
    assert bc.h_min_curve(1.0 - 1e-4) > 10 * mid
    gammas = np.linspace(0.05, 0.95, 181)
    vals = np.array([bc.h_min_curve(g) for g in gammas])
    # Unimodal: the forward differences change sign exactly once.
    signs = np.sign(np.diff(vals))
    flips = np.sum(np.abs(np.diff(signs)) > 0)
    assert flips == 1
    gamma_star, h_star = bc.minimize_h_min()
    assert abs(gamma_star - 0.72) <= 0.005
    assert abs(h_star - 138.1) <= 0.5
    assert h_star <= vals.min() + 1e-9


# ---------------------------------------------------------------------------
# Counterexample condition and the dimension search
# ---------------------------------------------------------------------------

def test_counterexample_condition_small_cases():
    assert not bc.counterexample_condition(2, 0.762)
    assert not bc.counterexample_condition(38578, 1e-6)


def test_counterexample_condition_flip_at_critical_dimension():
    assert bc.counterexample_margin(38577, 0.762) < 0.0
    assert bc.counterexample_margin(38578, 0.762) > 0.0


def test_neighboring_gammas_need_larger_d():
    assert bc.smallest_counterexample_d(0.6) > 38578
    assert bc.smallest_counterexample_d(0.9) > 38578


def test_dmin_search_reproduces_critical_pair():
    res = bc.dmin_search()
    assert abs(res.gamma_star - 0.762) < 1e-12
    assert res.d_star == 38578
    assert bc.counterexample_condition(res.d_star, res.gamma_star)
    assert not bc.counterexample_condition(res.d_star - 1, res.gamma_star)
    with pytest.raises(DomainError):
        bc.dmin_search(gamma_grid_resolution=0.01)


# ---------------------------------------------------------------------------
# alpha, beta, certificate
# ---------------------------------------------------------------------------

def test_alpha_term_values_and_flags():
    a = bc.alpha_term(2.0, 1000.0, 3)
    assert abs(a.value - (4.0 * 997.0 / 3000.0 - 1.0)) < 1e-15
    assert a.positive
    assert a.side_condition_ok  # 1000 >= 4*9*ln(1000) = 248.7
    small = bc.alpha_term(2.0, 100.0, 3)
    assert not small.side_condition_ok  # 100 < 4*9*ln(100) = 165.8
    with pytest.raises(DomainError):
        bc.alpha_term(2.0, 3.0, 3)


def test_beta_term_values_and_flags():
    n = 10_000
    expected = 0.5 - 11.0 * math.exp((n - 1) * math.log1p(-3.0 * math.log(3.0) / n))
    got = bc.beta_term(3, float(n))
    assert abs(got.value - expected) < 1e-12
    assert got.positive
    # d = 2 never admits a positive floor at large n: (d^2+2) e^{-d ln d} = 3/2.
    assert not bc.beta_term(2, 100.0).positive
    assert bc.beta_term(2, 100.0).value < 0.0


def test_certificate_at_reference_point():
    d = 50_000
    n = float(d) ** 7
    rep = bc.certificate_evaluate(n, d, math.log(d) / 2.0, 0.762, 2.0, 6.0)
    assert rep.valid
    assert rep.violated_preconditions == []
    assert rep.total < 1.0
    assert rep.existence_established
    assert abs(rep.alpha - 1.0 / 3.0) < 1e-4
    assert abs(rep.beta - 0.5) < 1e-12
    assert not rep.masymp_applicable  # h f(1-gamma) - eta = 2.24 < 2 e^2
    assert rep.log_term_main < -1e30
    assert abs(rep.smin_lower_if_established
               - (math.log(d) - math.log(d) / (2 * d))) < 1e-12


def test_certificate_flags_small_configuration():
    rep = bc.certificate_evaluate(100.0, 3, 5.0, 0.762, 2.0, 6.0)
    assert not rep.valid
    assert "n_ge_b2d2_logn" in rep.violated_preconditions
    assert "dt_condition" in rep.violated_preconditions
    assert "eps_m_lt_1" in rep.violated_preconditions
    assert len(rep.violated_preconditions) >= 2


def test_certificate_monotone_improving_in_n():
    d = 50_000
    n0 = float(d) ** 7
    reps = [bc.certificate_evaluate(n0 * s, d, math.log(d) / 2.0, 0.762, 2.0, 6.0)
            for s in (1.0, 2.0, 4.0)]
    for rep in reps:
        assert rep.valid
    typ = [r.log_term_typicality for r in reps]
    main = [r.log_term_main for r in reps]
    assert typ[0] > typ[1] > typ[2]
    assert main[0] > main[1] > main[2]
    totals = [r.total for r in reps]
    assert totals[0] >= totals[1] >= totals[2]


def test_certificate_domain_errors():
    with pytest.raises(DomainError):
        bc.certificate_evaluate(100.0, 3, 5.0, 1.5, 2.0, 6.0)
    with pytest.raises(DomainError):
        bc.certificate_evaluate(2.0, 3, 5.0, 0.5, 2.0, 6.0)


# ---------------------------------------------------------------------------
# Delta S max
# ---------------------------------------------------------------------------

def test_delta_s_max_bound():
    rep = bc.delta_s_max_bound()
    # Regression pin: d = floor(38590 e) on first computation.
    assert rep.d == 104898
    assert rep.value >= 9.5e-6
    assert rep.margin > 0.0
    assert abs(rep.value - 1.0 / rep.d) < 1e-18
    # Gap algebra at the maximizer: (ln d - 2h) = 1 up to the floor rounding.
    assert abs((math.log(rep.d) - 2.0 * rep.h) - 1.0) < 1e-4


# ---------------------------------------------------------------------------
# The k = d-1 reduction: dQ/dt < 0 along the constraint manifold
# ---------------------------------------------------------------------------

def _q_derivative_closed_form(w, z):
    r = math.log(z / w)
    return -(1.0 / r) * ((z - w) ** 2 / (z * w) - r * r)


def test_reduction_derivative_negative_on_random_feasible_points():
    g = np.random.default_rng(99)
    checked = 0
    while checked < 25:
        t = g.uniform(0.1, 0.9)
        w = g.uniform(0.05, 0.95)
        z = (1.0 - t * w) / (1.0 - t)
        if z <= 1.0 or z > 50.0:
            continue
        assert _q_derivative_closed_form(w, z) < 0.0
        checked += 1


def test_reduction_derivative_matches_implicit_differentiation():
    # Solve the two constraints for (w, z) at t +- delta with Newton, then
    # compare the central difference of Q with the closed form at d = 5.
    d = 5
    t0, w0 = 0.4, 0.3
    z0 = (1.0 - t0 * w0) / (1.0 - t0)
    h_over_d = t0 * w0 * math.log(w0) + (1.0 - t0) * z0 * math.log(z0)

    def solve(t, w_init, z_init):
        w, z = w_init, z_init
        for _ in range(60):
            f1 = t * w * math.log(w) + (1 - t) * z * math.log(z) - h_over_d
            f2 = t * w + (1 - t) * z - 1.0
            j11 = t * (math.log(w) + 1.0)
            j12 = (1 - t) * (math.log(z) + 1.0)
            j21, j22 = t, (1 - t)
            det = j11 * j22 - j12 * j21
            dw = (f1 * j22 - f2 * j12) / det
            dz = (f2 * j11 - f1 * j21) / det
            w, z = w - dw, z - dz
        return w, z

    delta = 1e-6
    wp, zp = solve(t0 + delta, w0, z0)
    wm, zm = solve(t0 - delta, w0, z0)

    def q(t, w, z):
        return -t * math.log(w) - (1 - t) * math.log(z)

    numeric = (q(t0 + delta, wp, zp) - q(t0 - delta, wm, zm)) / (2 * delta)
    closed = _q_derivative_closed_form(w0, z0)
    assert closed < 0.0
    assert abs(numeric - closed) < 1e-4 * abs(closed)
