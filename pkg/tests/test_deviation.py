import math

import numpy as np
import pytest

from crplocal import DomainError, cgf, lambda_fn, minimize_ray, moments, solve_saddle
from crplocal.deviation import clt_local, solve_saddle_batch
from crplocal.lattice import _eval_core
from bruteforce import legendre_grid, ray_min_grid


def _refined_1d_sup(f, lo, hi, n=2001, refinements=3):
    # pure grid supremum with window refinement, used for 1-D conjugates
    best, arg = -math.inf, 0.5 * (lo + hi)
    for _ in range(refinements + 1):
        xs = np.linspace(lo, hi, n)
        vals = f(xs)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, arg = float(vals[i]), float(xs[i])
        d = 2 * (xs[1] - xs[0])
        lo, hi = arg - d, arg + d
    return best


def test_saddle_at_mean_is_origin(dist4):
    s = solve_saddle(dist4, 1.5, 0.5)
    assert s.converged
    assert (s.lam, s.mu) == (0.0, 0.0)
    assert s.Lambda == 0.0


def test_saddle_deviation_point_vs_grid(dist4):
    s = solve_saddle(dist4, 1.4, 0.6)
    assert s.Lambda > 0
    assert abs(s.Lambda - legendre_grid(dist4, 1.4, 0.6)) < 1e-6


def test_saddle_outside_region_raises(dist4):
    with pytest.raises(DomainError):
        solve_saddle(dist4, 3.0, 0.5)   # waiting times never exceed 2
    with pytest.raises(DomainError):
        solve_saddle(dist4, 1.5, -0.5)  # rewards are nonnegative
    with pytest.raises(DomainError):
        solve_saddle(dist4, -1.0, 0.5)


def test_round_trip_bijection(dist4, dist_tail):
    rng = np.random.default_rng(3)
    for dist in (dist4, dist_tail):
        count = 0
        while count < 1000:
            lam = rng.uniform(-2.0, 0.5)
            mu = rng.uniform(-2.0, 2.0)
            if dist.tail is not None and lam > math.log(2.0) - 0.1:
                continue
            tp = cgf(dist, lam, mu)
            s = solve_saddle(dist, tp.grad[0], tp.grad[1])
            assert abs(s.lam - lam) < 1e-8
            assert abs(s.mu - mu) < 1e-8
            count += 1


def test_lambda_dominates_inner_products(dist4):
    rng = np.random.default_rng(5)
    theta, alpha = 1.4, 0.6
    val = lambda_fn(dist4, theta, alpha)
    lam = rng.uniform(-20, 20, size=10_000)
    mu = rng.uniform(-20, 20, size=10_000)
    _, a_val, *_ = _eval_core(dist4, lam, mu)
    assert np.all(val >= lam * theta + mu * alpha - a_val - 1e-12)


def test_independent_factors_add(dist4):
    # tau and zeta independent: the transform splits, so the conjugate adds
    theta, alpha = 1.7, 0.3
    total = lambda_fn(dist4, theta, alpha)

    def conj_tau(lams):
        return lams * theta - np.log(0.5 * (np.exp(lams) + np.exp(2 * lams)))

    def conj_zeta(mus):
        return mus * alpha - np.log(0.5 * (1 + np.exp(mus)))

    part = _refined_1d_sup(conj_tau, -30, 30) + _refined_1d_sup(conj_zeta, -30, 30)
    assert abs(total - part) < 1e-8


def test_lambda_convex_on_segments(dist4):
    rng = np.random.default_rng(11)
    done = 0
    while done < 100:
        t1, a1 = rng.uniform(1.05, 1.95), rng.uniform(0.05, 0.95)
        t2, a2 = rng.uniform(1.05, 1.95), rng.uniform(0.05, 0.95)
        if not (t1 * 0.05 < a1 < t1 * 0.95 and t2 * 0.05 < a2 < t2 * 0.95):
            continue
        try:
            v1 = lambda_fn(dist4, t1, a1)
            v2 = lambda_fn(dist4, t2, a2)
            vm = lambda_fn(dist4, 0.5 * (t1 + t2), 0.5 * (a1 + a2))
        except DomainError:
            continue
        assert vm <= 0.5 * (v1 + v2) + 1e-10
        done += 1


def test_lambda_nonnegative_zero_only_at_mean(dist4):
    m = moments(dist4)
    assert lambda_fn(dist4, m.a_tau, m.a_zeta) <= 1e-10
    rng = np.random.default_rng(13)
    for _ in range(50):
        t = rng.uniform(1.1, 1.9)
        a = rng.uniform(0.1, 0.9)
        if not t * 0.06 < a < t * 0.94:
            continue
        v = lambda_fn(dist4, t, a)
        assert v >= 0
        if abs(t - m.a_tau) + abs(a - m.a_zeta) > 0.05:
            assert v > 1e-10


def test_hessian_inverse_identity(dist4):
    s = solve_saddle(dist4, 1.4, 0.6)
    h = cgf(dist4, s.lam, s.mu).hess
    prod = s.Lambda_hess @ h
    assert np.allclose(prod, np.eye(2), atol=1e-8)


def test_minimize_ray_at_drift(dist4):
    m = moments(dist4)
    rm = minimize_ray(dist4, 1.0, m.a)
    assert rm.r_star == pytest.approx(1.0 / m.a_tau, abs=1e-10)
    assert abs(rm.L_value) < 1e-10
    assert rm.L_second > 0


def test_minimize_ray_example(dist4):
    rm = minimize_ray(dist4, 1.0, 1 / 3)
    assert rm.r_star == pytest.approx(2 / 3, abs=1e-10)


def test_minimize_ray_vs_grid(dist4):
    rng = np.random.default_rng(17)
    for _ in range(5):
        theta = rng.uniform(0.5, 2.0)
        alpha = theta * rng.uniform(0.1, 0.9)
        rm = minimize_ray(dist4, theta, alpha)
        brute = ray_min_grid(dist4, theta, alpha)
        assert abs(rm.L_value - brute) < 1e-6


def test_minimize_ray_scales_linearly(dist4):
    rm1 = minimize_ray(dist4, 1.0, 0.45)
    rm2 = minimize_ray(dist4, 2.0, 0.9)
    assert rm2.r_star == pytest.approx(2 * rm1.r_star, rel=1e-12)
    assert rm2.L_value == pytest.approx(2 * rm1.L_value, rel=1e-12)


def test_batch_solver_matches_scalar(dist4, dist_beta):
    rng = np.random.default_rng(19)
    for dist in (dist4, dist_beta):
        thetas, alphas = [], []
        while len(thetas) < 50:
            t = rng.uniform(1.05, 1.95)
            a = rng.uniform(-0.9, 0.9)
            if dist is dist4 and not (0.05 * t < a < 0.95 * t):
                continue
            if dist is dist_beta and not (-0.9 * t < a < 0.9 * t):
                continue
            thetas.append(t)
            alphas.append(a)
        lam, mu, val, conv = solve_saddle_batch(dist, np.array(thetas), np.array(alphas))
        some_inside = 0
        for i in range(len(thetas)):
            try:
                s = solve_saddle(dist, thetas[i], alphas[i])
            except DomainError:
                assert not conv[i]
                continue
            some_inside += 1
            assert conv[i]
            assert abs(val[i] - s.Lambda) < 1e-10
            assert abs(lam[i] - s.lam) < 1e-7
        assert some_inside > 10


def test_batch_solver_marks_outside_points(dist4):
    lam, mu, val, conv = solve_saddle_batch(
        dist4, np.array([1.5, 5.0, -1.0]), np.array([0.5, 0.5, 0.2]))
    assert conv[0] and not conv[1] and not conv[2]
    assert math.isinf(val[1]) and math.isinf(val[2])


def test_clt_local_positive_finite(dist4):
    # the analyticity region of the four-atom law is the open box (1,2)x(0,1)
    for n in (8, 16, 32):
        for t in range(n + 1, 2 * n):
            for x in (max(1, int(0.3 * n)), min(n - 1, int(0.7 * n))):
                v = clt_local(dist4, n, t, x)
                assert v > 0 and math.isfinite(v)


def test_clt_local_requires_arithmetic(dist_line):
    from crplocal import ConditionError
    with pytest.raises(ConditionError):
        clt_local(dist_line, 16, 24, 24)
    # the override skips the gate; the degenerate Hessian then surfaces as a
    # domain failure rather than a silent wrong number
    with pytest.raises(DomainError):
        clt_local(dist_line, 16, 28, 28, unsafe=True)
