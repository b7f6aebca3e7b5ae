"""Second deviation function D and the domain geometry around it.

A(mu) is defined through the zero level of the cumulant function: lam =
-A(mu) is the unique root of A(lam, mu) = 0 in lam.  Its Legendre transform
D(alpha) = sup_mu {mu*alpha - A(mu)} is the rate function of the reward
process per unit time; the supremum point mu(alpha) solves A'(mu) = alpha,
and lam(alpha) = -A(mu(alpha)) is the exponent that the prefactor series
compares against the waiting-time radius lambda_plus.  D(theta, alpha) =
theta * D(alpha/theta) extends D along rays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from scipy.optimize import brentq

from .errors import DomainError
from .lattice import JumpDistribution, cgf, lambda_plus

MU_PROBE = 40.0        # probe point standing in for mu -> +-infinity
ALPHA_GUARD = 1e-6     # refuse alpha this close to the boundary
ROOT_TOL = 1e-13

__all__ = ["RatePoint", "DomainSummary", "A_of_mu", "A_prime_of_mu",
           "rate_point", "D_two_arg", "domain"]


@dataclass(frozen=True)
class RatePoint:
    """Rate function bundle at one slope alpha."""

    alpha: float
    mu_alpha: float
    lambda_alpha: float
    D: float
    D1: float
    D2: float
    in_domain: bool


@dataclass(frozen=True)
class DomainSummary:
    mu_minus: float
    mu_plus: float
    alpha_minus: float
    alpha_plus: float
    lambda_plus: float
    beta_minus: Optional[float]
    beta_plus: Optional[float]
    D0: Optional[float]
    warnings: tuple = ()

    @property
    def beta_empty(self) -> bool:
        return self.beta_minus is None


def _root_lambda(dist: JumpDistribution, mu: float) -> float:
    """Root of A(lam, mu) = 0 in lam; A is increasing and convex in lam.

    Doubling finds an upper point with A > 0 (the transform blows up towards
    the edge, so one always exists); Newton from above then converges
    monotonically.  Residual |A| is driven below 1e-13.
    """
    mu = float(mu)
    if dist.tail is not None:
        edge = lambda_plus(dist) - dist.tail.zslope * mu
        try:
            hi = edge - 1e-8
            val = cgf(dist, hi, mu).A
            while val <= 0.0:
                hi = edge - (edge - hi) * 1e-3
                val = cgf(dist, hi, mu).A
        except DomainError:
            raise DomainError(f"no zero-level root at mu={mu}", upper=edge) from None
    else:
        hi = 1.0
        val = cgf(dist, hi, mu).A
        grow = 1.0
        while val <= 0.0:
            grow *= 2.0
            hi += grow
            val = cgf(dist, hi, mu).A
            if hi > 1e6:
                raise DomainError(f"no zero-level root at mu={mu}")
    lam = hi
    for _ in range(200):
        tp = cgf(dist, lam, mu)
        if abs(tp.A) < ROOT_TOL:
            return lam
        lam -= tp.A / tp.grad[0]
    return lam


def A_of_mu(dist: JumpDistribution, mu: float) -> float:
    """A(mu) = -lam_root where A(lam_root, mu) = 0."""
    return -_root_lambda(dist, mu)


def A_prime_of_mu(dist: JumpDistribution, mu: float) -> float:
    """Derivative A'(mu): ratio of tilted means of zeta and tau on the zero level.

    Strictly increasing in mu; equals the drift a at mu = 0.
    """
    lam = _root_lambda(dist, mu)
    tp = cgf(dist, lam, mu)
    return tp.grad[1] / tp.grad[0]


@lru_cache(maxsize=1024)
def _alpha_limits(dist: JumpDistribution) -> tuple:
    """Numeric slope limits of A' at the +-MU_PROBE stand-ins."""
    return (A_prime_of_mu(dist, -MU_PROBE), A_prime_of_mu(dist, MU_PROBE))


def _support_slope_limits(dist: JumpDistribution) -> tuple:
    slopes = [z / t for t, z, _ in dist.atoms]
    if dist.tail is not None:
        tl = dist.tail
        slopes.append(tl.z0 / tl.k0)       # first tail point
        slopes.append(float(tl.zslope))    # limit slope along the tail
    return (min(slopes), max(slopes))


@lru_cache(maxsize=16384)
def _rate_point_cached(dist: JumpDistribution, alpha: float) -> RatePoint:
    lo, hi = -1.0, 1.0
    flo = A_prime_of_mu(dist, lo)
    fhi = A_prime_of_mu(dist, hi)
    while flo > alpha and lo > -MU_PROBE:
        lo = max(lo * 2.0, -MU_PROBE)
        flo = A_prime_of_mu(dist, lo)
    while fhi < alpha and hi < MU_PROBE:
        hi = min(hi * 2.0, MU_PROBE)
        fhi = A_prime_of_mu(dist, hi)
    if flo > alpha or fhi < alpha:
        a_lo, a_hi = _alpha_limits(dist)
        raise DomainError(
            f"alpha={alpha} outside the open slope interval ({a_lo}, {a_hi})",
            lower=a_lo, upper=a_hi,
        )
    a_lo, a_hi = _alpha_limits(dist)
    if alpha < a_lo + ALPHA_GUARD or alpha > a_hi - ALPHA_GUARD:
        raise DomainError(
            f"alpha={alpha} within the guard band {ALPHA_GUARD} of the slope "
            f"boundary ({a_lo}, {a_hi})", lower=a_lo, upper=a_hi,
        )
    mu = brentq(lambda m: A_prime_of_mu(dist, m) - alpha, lo, hi,
                xtol=1e-14, rtol=8.9e-16, maxiter=200)
    lam = _root_lambda(dist, mu)
    d_val = lam + alpha * mu
    # curvature by Richardson-extrapolated central differences of A'
    h = 1e-5 * (1.0 + abs(mu))
    d1 = (A_prime_of_mu(dist, mu + h) - A_prime_of_mu(dist, mu - h)) / (2.0 * h)
    d2 = (A_prime_of_mu(dist, mu + h / 2) - A_prime_of_mu(dist, mu - h / 2)) / h
    a2 = (4.0 * d2 - d1) / 3.0
    return RatePoint(alpha, mu, lam, d_val, mu, 1.0 / a2, True)


def rate_point(dist: JumpDistribution, alpha: float) -> RatePoint:
    """Rate bundle {mu(alpha), lam(alpha), D, D', D''} at one slope.

    mu(alpha) solves A'(mu) = alpha by bracketed root finding, lam(alpha) is
    the zero-level root at that mu, D = lam + alpha*mu, D' = mu, and D'' is
    the reciprocal of the numeric curvature of A at mu(alpha).  Raises
    DomainError outside the open interval (alpha-, alpha+) or within 1e-6 of
    its ends (the solve conditioning degrades there).
    """
    return _rate_point_cached(dist, float(alpha))


def D_two_arg(dist: JumpDistribution, theta: float, alpha: float) -> tuple:
    """Ray extension D(theta, alpha) = theta * D(alpha/theta) with gradient.

    Returns (value, (lam(alpha/theta), mu(alpha/theta))); the gradient pair
    is constant along each ray.
    """
    if theta <= 0:
        raise DomainError(f"theta must be positive, got {theta}")
    rp = rate_point(dist, alpha / theta)
    return theta * rp.D, (rp.lambda_alpha, rp.mu_alpha)


def _mu_boundary(dist: JumpDistribution, sign: float) -> float:
    """Largest |mu| (signed) at which the zero-level root still exists.

    For the supported families the transform blows up toward its edge for
    every mu, so the root always exists and the boundary is infinite; the
    expanding probe keeps the check honest should that ever change.
    """
    mu = sign
    good = 0.0
    while abs(mu) <= MU_PROBE:
        try:
            _root_lambda(dist, mu)
        except DomainError:
            lo, hi = good, mu
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                try:
                    _root_lambda(dist, mid)
                    lo = mid
                except DomainError:
                    hi = mid
            return lo
        good = mu
        mu *= 2.0
    return sign * math.inf


def domain(dist: JumpDistribution) -> DomainSummary:
    """Boundaries of the rate-function machinery for one step law.

    alpha+- are the numeric limits of A' at mu = +-40, cross-checked against
    the extreme support slopes (disagreement beyond 1e-4 is reported as a
    warning, not an error).  The interval [beta-, beta+] collects the slopes
    whose exponent lam(alpha) reaches lambda_plus; it is empty exactly when
    lambda_plus > D(0).
    """
    warnings = []
    lp = lambda_plus(dist)
    mu_minus = _mu_boundary(dist, -1.0)
    mu_plus = _mu_boundary(dist, 1.0)
    a_lo, a_hi = _alpha_limits(dist)
    s_lo, s_hi = _support_slope_limits(dist)
    if abs(a_lo - s_lo) > 1e-4 or abs(a_hi - s_hi) > 1e-4:
        warnings.append(
            f"numeric slope limits ({a_lo:.6g}, {a_hi:.6g}) disagree with the "
            f"support extremes ({s_lo:.6g}, {s_hi:.6g})"
        )

    d0 = None
    if a_lo + ALPHA_GUARD < 0.0 < a_hi - ALPHA_GUARD:
        d0 = rate_point(dist, 0.0).D

    beta_minus = beta_plus = None
    if math.isfinite(lp) and d0 is not None and lp <= d0:
        # lam(alpha) peaks at alpha = 0 with value D(0) and decays on both
        # sides; bracket each crossing of the level lambda_plus.
        def lam_of(v):
            return rate_point(dist, v).lambda_alpha - lp

        lo = a_lo + 2 * ALPHA_GUARD
        if lam_of(lo) < 0.0:
            beta_minus = brentq(lam_of, lo, 0.0, xtol=1e-12)
        else:
            warnings.append("no lower crossing of lambda_plus found above alpha-")
        hi = a_hi - 2 * ALPHA_GUARD
        if lam_of(hi) < 0.0:
            beta_plus = brentq(lam_of, 0.0, hi, xtol=1e-12)
        else:
            warnings.append("no upper crossing of lambda_plus found below alpha+")

    return DomainSummary(mu_minus, mu_plus, a_lo, a_hi, lp,
                         beta_minus, beta_plus, d0, tuple(warnings))

