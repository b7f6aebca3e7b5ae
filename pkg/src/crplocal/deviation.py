"""First deviation function: Legendre transform of the cumulant function.

Lambda(theta, alpha) = sup {lam*theta + mu*alpha - A(lam, mu)} is attained
at the unique tilt where grad A = (theta, alpha); `solve_saddle` finds it by
damped Newton iteration.  The Hessian of Lambda is the inverse of the
cumulant Hessian at that tilt, which also provides the prefactor of the
two-dimensional lattice local limit of the jump sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConditionError, DomainError
from .lattice import JumpDistribution, _eval_core, cgf, lambda_plus, validate_arithmetic

RESIDUAL_TOL = 1e-12
MAX_ITER = 60
BOX_LIMIT = 50.0
EDGE_GAP = 1e-9

__all__ = ["SaddleSolution", "RayMinimum", "solve_saddle", "lambda_fn",
           "minimize_ray", "clt_local", "solve_saddle_batch"]


@dataclass(frozen=True)
class SaddleSolution:
    lam: float
    mu: float
    theta: float
    alpha: float
    Lambda: float
    Lambda_hess: np.ndarray
    converged: bool
    iterations: int


@dataclass(frozen=True)
class RayMinimum:
    """Minimum of L(r) = r * Lambda(theta/r, alpha/r) over r > 0."""

    r_star: float
    L_value: float
    L_second: float
    theta_hat: float
    alpha_hat: float
    lambda_hat: float
    mu_hat: float


def _inv2(h: np.ndarray) -> np.ndarray:
    det = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
    inv = np.array([[h[1, 1], -h[0, 1]], [-h[1, 0], h[0, 0]]]) / det
    inv.setflags(write=False)
    return inv


def solve_saddle(dist: JumpDistribution, theta: float, alpha: float,
                 start=(0.0, 0.0)) -> SaddleSolution:
    """Solve grad A(lam, mu) = (theta, alpha) by damped Newton from ``start``.

    Steps are halved until the residual max-norm decreases; convergence is a
    residual below 1e-12 in at most 60 iterations.  Divergence, leaving the
    box |lam|,|mu| <= 50, or approaching the transform edge closer than 1e-9
    raises DomainError: the target is outside the analyticity region.
    """
    if theta <= 0:
        raise DomainError(f"theta must be positive, got {theta}")
    lp = lambda_plus(dist)
    slope = dist.tail.zslope if dist.tail is not None else 0
    lam, mu = float(start[0]), float(start[1])

    def edge_ok(l_, m_):
        if dist.tail is None:
            return True
        return l_ + slope * m_ < lp - EDGE_GAP

    if not edge_ok(lam, mu):
        raise DomainError("start point outside the transform domain", upper=lp)
    tp = cgf(dist, lam, mu)
    res = max(abs(tp.grad[0] - theta), abs(tp.grad[1] - alpha))
    iterations = 0
    while res > RESIDUAL_TOL and iterations < MAX_ITER:
        iterations += 1
        h = tp.hess
        det = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
        r1, r2 = tp.grad[0] - theta, tp.grad[1] - alpha
        with np.errstate(invalid="ignore", divide="ignore"):
            dlam = -(h[1, 1] * r1 - h[0, 1] * r2) / det
            dmu = -(-h[0, 1] * r1 + h[0, 0] * r2) / det
        if not (math.isfinite(dlam) and math.isfinite(dmu)):
            raise DomainError(
                f"singular curvature at ({lam:.3g}, {mu:.3g}); the law is "
                "degenerate or the target lies outside the analyticity region")
        step = 1.0
        while True:
            cand_lam, cand_mu = lam + step * dlam, mu + step * dmu
            if edge_ok(cand_lam, cand_mu):
                cand = cgf(dist, cand_lam, cand_mu)
                cand_res = max(abs(cand.grad[0] - theta), abs(cand.grad[1] - alpha))
                if cand_res < res:
                    break
            step *= 0.5
            if step < 1e-14:
                raise DomainError(
                    f"saddle iteration stalled at residual {res:.3e}; "
                    f"({theta}, {alpha}) appears to lie outside the analyticity region"
                )
        lam, mu, tp, res = cand_lam, cand_mu, cand, cand_res
        if abs(lam) > BOX_LIMIT or abs(mu) > BOX_LIMIT:
            raise DomainError(
                f"saddle left the search box at ({lam:.2f}, {mu:.2f}); "
                f"({theta}, {alpha}) outside the analyticity region"
            )
    if res > RESIDUAL_TOL:
        raise DomainError(
            f"saddle iteration did not converge for ({theta}, {alpha}); residual {res:.3e}"
        )
    value = lam * theta + mu * alpha - tp.A
    return SaddleSolution(lam, mu, theta, alpha, value, _inv2(tp.hess), True, iterations)


def lambda_fn(dist: JumpDistribution, theta: float, alpha: float) -> float:
    """Value Lambda(theta, alpha) of the Legendre transform."""
    return solve_saddle(dist, theta, alpha).Lambda


def solve_saddle_batch(dist: JumpDistribution, theta, alpha):
    """Vectorized damped Newton for many (theta, alpha) targets at once.

    Returns (lam, mu, value, converged).  Non-converged entries (outside the
    analyticity region, stalled, or out of the search box) have value +inf.
    All points start from the origin tilt; the iteration is the same halving
    scheme as the scalar solver, applied with masks.
    """
    theta = np.asarray(theta, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    shape = np.broadcast_shapes(theta.shape, alpha.shape)
    theta = np.broadcast_to(theta, shape).ravel()
    alpha = np.broadcast_to(alpha, shape).ravel()
    n = theta.size
    lam = np.zeros(n)
    mu = np.zeros(n)
    alive = theta > 0

    ok, A, g1, g2, h11, h12, h22 = _eval_core(dist, lam, mu)
    res = np.where(alive, np.maximum(np.abs(g1 - theta), np.abs(g2 - alpha)), 0.0)
    done = res <= RESIDUAL_TOL

    lp = lambda_plus(dist)
    slope = dist.tail.zslope if dist.tail is not None else 0.0

    def in_domain(l_, m_):
        if dist.tail is None:
            return np.ones_like(l_, dtype=bool)
        return l_ + slope * m_ < lp - EDGE_GAP

    for _ in range(MAX_ITER):
        sub = np.flatnonzero(alive & ~done)
        if sub.size == 0:
            break
        det = h11[sub] * h22[sub] - h12[sub] * h12[sub]
        r1, r2 = g1[sub] - theta[sub], g2[sub] - alpha[sub]
        with np.errstate(invalid="ignore", divide="ignore"):
            dlam = -(h22[sub] * r1 - h12[sub] * r2) / det
            dmu = -(-h12[sub] * r1 + h11[sub] * r2) / det
        step = np.ones(sub.size)
        accepted = np.zeros(sub.size, dtype=bool)
        for _half in range(45):
            open_j = np.flatnonzero(~accepted)
            if open_j.size == 0:
                break
            rows = sub[open_j]
            with np.errstate(invalid="ignore", over="ignore"):
                cl = lam[rows] + step[open_j] * dlam[open_j]
                cm = mu[rows] + step[open_j] * dmu[open_j]
            dom = np.isfinite(cl) & np.isfinite(cm) & in_domain(cl, cm)
            t_ok, t_A, t_g1, t_g2, t_h11, t_h12, t_h22 = _eval_core(
                dist, np.where(dom, cl, 0.0), np.where(dom, cm, 0.0))
            t_res = np.maximum(np.abs(t_g1 - theta[rows]), np.abs(t_g2 - alpha[rows]))
            good = dom & t_ok & np.isfinite(t_res) & (t_res < res[rows])
            tgt = rows[good]
            lam[tgt] = cl[good]
            mu[tgt] = cm[good]
            for dst, src in ((g1, t_g1), (g2, t_g2), (h11, t_h11),
                             (h12, t_h12), (h22, t_h22), (A, t_A), (res, t_res)):
                dst[tgt] = src[good]
            accepted[open_j[good]] = True
            step[open_j[~good]] *= 0.5
        stalled = np.zeros(n, dtype=bool)
        stalled[sub[~accepted]] = True
        out_of_box = np.zeros(n, dtype=bool)
        out_of_box[sub] = (np.abs(lam[sub]) > BOX_LIMIT) | (np.abs(mu[sub]) > BOX_LIMIT)
        alive &= ~(stalled | out_of_box)
        done = res <= RESIDUAL_TOL

    converged = alive & done
    value = np.where(converged, lam * theta + mu * alpha - A, np.inf)
    return (lam.reshape(shape), mu.reshape(shape),
            value.reshape(shape), converged.reshape(shape))


def minimize_ray(dist: JumpDistribution, theta: float, alpha: float) -> RayMinimum:
    """Minimize L(r) = r * Lambda(theta/r, alpha/r) in closed form.

    The minimizer is r = theta / theta_hat, where (theta_hat, alpha_hat) is
    the cumulant gradient at the zero-level tilt of slope alpha/theta; the
    second derivative at the minimum is the quadratic form of the Lambda
    Hessian at the hatted point, divided by r.
    """
    from .second_deviation import rate_point

    if theta <= 0:
        raise DomainError(f"theta must be positive, got {theta}")
    rp = rate_point(dist, alpha / theta)
    tp = cgf(dist, rp.lambda_alpha, rp.mu_alpha)
    theta_hat, alpha_hat = tp.grad
    r_star = theta / theta_hat
    lam_hat_val = rp.lambda_alpha * theta_hat + rp.mu_alpha * alpha_hat - tp.A
    inv = _inv2(tp.hess)
    qf = (theta_hat * theta_hat * inv[0, 0]
          + 2.0 * theta_hat * alpha_hat * inv[0, 1]
          + alpha_hat * alpha_hat * inv[1, 1])
    return RayMinimum(
        r_star=r_star,
        L_value=r_star * lam_hat_val,
        L_second=qf / r_star,
        theta_hat=theta_hat,
        alpha_hat=alpha_hat,
        lambda_hat=rp.lambda_alpha,
        mu_hat=rp.mu_alpha,
    )


def require_arithmetic(dist: JumpDistribution, unsafe: bool = False) -> None:
    """Gate for asymptotic formulas: refuse laws violating condition [Z]."""
    if unsafe:
        return
    report = validate_arithmetic(dist)
    if not report.arithmetic_ok:
        detail = "; ".join(report.messages) or "support lattice is not all of Z^2"
        raise ConditionError(f"condition [Z] violated: {detail}", condition="[Z]")


def clt_local(dist: JumpDistribution, n: int, t: int, x: int,
              unsafe: bool = False) -> float:
    """Local limit value for P(sum of n jumps = (t, x)).

    Returns C1 * exp(-n*Lambda(t/n, x/n)) / n with the lattice prefactor
    C1 = sqrt(det Lambda_hess) / (2*pi).
    """
    require_arithmetic(dist, unsafe)
    if n <= 0:
        raise DomainError(f"n must be positive, got {n}")
    sol = solve_saddle(dist, t / n, x / n)
    det = sol.Lambda_hess[0, 0] * sol.Lambda_hess[1, 1] - sol.Lambda_hess[0, 1] ** 2
    c1 = math.sqrt(det) / (2.0 * math.pi)
    return c1 * math.exp(-n * sol.Lambda) / n
