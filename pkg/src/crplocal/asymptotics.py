"""Local-theorem approximations for the reward pmf and the renewal measure.

Three pieces assemble every estimate: the saddle prefactor C_H built from
the ray minimum of the first deviation function, the waiting-time series
I(alpha) = sum_m exp(lam(alpha)*m) P(tau >= m), and the first-jump factor
psi_1 evaluated at the zero-level tilt.  Exponents are handled in log space
so that estimates survive n*D far beyond the underflow threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .deviation import minimize_ray, require_arithmetic
from .errors import ConditionError, DivergenceError, DomainError
from .lattice import CrpModel, JumpDistribution, cgf, lambda_plus, moments, survival
from .second_deviation import domain, rate_point

__all__ = ["ConditionFlags", "AsymptoticEstimate", "c_h", "I_alpha",
           "approx_crp_pmf", "approx_clt_zone", "approx_renewal", "central_zone_check"]


@dataclass(frozen=True)
class ConditionFlags:
    in_domain: bool
    heterogeneity_ok: bool
    zero_alpha_tail_ok: bool
    beta_clear: bool


@dataclass(frozen=True)
class AsymptoticEstimate:
    """One local-theorem value, with its factors reported separately.

    ``value`` is composed exactly as

        psi1_factor * prefactor * I_factor * exp(-exponent) / sqrt(n)

    (I_factor treated as 1 when absent); ``log_value`` carries the same
    number in log space for exponents past the underflow threshold.
    """

    value: float
    log_value: float
    exponent: float
    prefactor: float
    psi1_factor: float
    I_factor: Optional[float]
    n: int
    target: tuple
    conditions: ConditionFlags


def _compose(psi1: float, prefactor: float, i_factor: Optional[float],
             exponent: float, n: int) -> tuple:
    i_val = 1.0 if i_factor is None else i_factor
    value = psi1 * prefactor * i_val * math.exp(-exponent) / math.sqrt(n)
    log_value = (math.log(psi1) + math.log(prefactor) + math.log(i_val)
                 - exponent - 0.5 * math.log(n))
    return value, log_value


def c_h(dist: JumpDistribution, theta: float, alpha: float) -> float:
    """Saddle prefactor of the renewal-measure local theorem.

    C_H = sqrt( r/(2*pi) * det(Lh) / qform((theta, alpha), Lh) ) where Lh is
    the Hessian of the first deviation function at the hatted point of the
    ray through (theta, alpha) and r the ray minimizer.  Scales like
    1/sqrt(r): C_H(2*theta, 2*alpha) = C_H(theta, alpha)/sqrt(2).
    """
    rm = minimize_ray(dist, theta, alpha)
    tp = cgf(dist, rm.lambda_hat, rm.mu_hat)
    h = tp.hess
    det_h = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
    # inverse Hessian (of Lambda) and its quadratic form at the raw point
    l11 = h[1, 1] / det_h
    l12 = -h[0, 1] / det_h
    l22 = h[0, 0] / det_h
    det_l = 1.0 / det_h
    qf = theta * theta * l11 + 2.0 * theta * alpha * l12 + alpha * alpha * l22
    return math.sqrt(rm.r_star / (2.0 * math.pi) * det_l / qf)


def I_alpha(dist: JumpDistribution, alpha: float) -> float:
    """Waiting-time prefactor series sum_{m>=1} exp(lam(alpha)*m) P(tau >= m).

    Closed-form geometric remainder past the last atom; diverges (and
    raises) when exp(lam(alpha)) * q reaches 1, i.e. when alpha falls in the
    excluded interval [beta-, beta+].
    """
    rp = rate_point(dist, alpha)
    return _i_series(dist, rp.lambda_alpha)


def _i_series(dist: JumpDistribution, lam: float) -> float:
    cut = dist.max_atom_t
    if dist.tail is not None:
        cut = max(cut, dist.tail.k0)
        rho = math.exp(lam) * dist.tail.q
        if rho >= 1.0 - 1e-12:
            summary = domain(dist)
            raise DivergenceError(
                f"prefactor series diverges: exp(lam)={math.exp(lam):.6g} reaches "
                f"the waiting-time radius 1/q={1.0 / dist.tail.q:.6g}; excluded "
                f"interval [beta-, beta+] = [{summary.beta_minus}, {summary.beta_plus}]",
                beta_minus=summary.beta_minus, beta_plus=summary.beta_plus,
            )
    total = math.fsum(math.exp(lam * m) * survival(dist, m) for m in range(1, cut + 1))
    if dist.tail is not None:
        tl = dist.tail
        # P(tau >= m) = c q^m/(1-q) for m > cut
        total += (tl.c / (1.0 - tl.q)) * rho ** (cut + 1) / (1.0 - rho)
    return total


def _psi1_at(first: JumpDistribution, lam: float, mu: float) -> float:
    """First-jump transform at the tilt; None signals an infinite value."""
    if first.tail is not None:
        logw = math.log(first.tail.q) + lam + first.tail.zslope * mu
        if logw >= -1e-12:
            return None
    return math.exp(cgf(first, lam, mu).A)


def _beta_guard(dist: JumpDistribution, rp) -> None:
    lp = lambda_plus(dist)
    if math.isfinite(lp) and rp.lambda_alpha >= lp - 1e-12:
        summary = domain(dist)
        raise DivergenceError(
            f"alpha={rp.alpha:.6g} lies in the excluded interval "
            f"[{summary.beta_minus}, {summary.beta_plus}] where the prefactor "
            "series diverges",
            beta_minus=summary.beta_minus, beta_plus=summary.beta_plus,
        )


def approx_crp_pmf(model: CrpModel, n: int, x: int,
                   unsafe: bool = False) -> AsymptoticEstimate:
    """Local-theorem approximation of P(Z(n) = x) at slope alpha = x/n.

    value = psi1(lam(alpha), mu(alpha)) * C_H(1, alpha) * I(alpha)
            * exp(-n*D(alpha)) / sqrt(n),
    all four factors reported separately.  Raises DomainError outside the
    slope interval, DivergenceError inside [beta-, beta+], ConditionError
    when the first-jump transform is infinite at the tilt (admissible
    heterogeneity) or, at x = 0, when the first-jump tail decays too slowly.
    """
    require_arithmetic(model.step, unsafe)
    if n <= 0:
        raise DomainError(f"n must be positive, got {n}")
    alpha = x / n
    rp = rate_point(model.step, alpha)
    _beta_guard(model.step, rp)
    psi1 = _psi1_at(model.first, rp.lambda_alpha, rp.mu_alpha)
    if psi1 is None:
        raise ConditionError(
            "admissible-heterogeneity condition fails: first-jump transform "
            f"is infinite at the tilt ({rp.lambda_alpha:.6g}, {rp.mu_alpha:.6g})",
            condition="admissible-heterogeneity",
        )
    if x == 0 and model.first.tail is not None:
        d0 = rate_point(model.step, 0.0).D
        lp1 = lambda_plus(model.first)
        if not lp1 > d0:
            raise ConditionError(
                f"zero-slope first-jump tail condition fails: first-jump radius "
                f"{lp1:.6g} does not exceed D(0) = {d0:.6g}",
                condition="zero-slope-first-jump-tail",
            )
    prefactor = c_h(model.step, 1.0, alpha)
    i_factor = _i_series(model.step, rp.lambda_alpha)
    exponent = n * rp.D
    value, log_value = _compose(psi1, prefactor, i_factor, exponent, n)
    return AsymptoticEstimate(
        value=value, log_value=log_value, exponent=exponent,
        prefactor=prefactor, psi1_factor=psi1, I_factor=i_factor,
        n=n, target=(x,),
        conditions=ConditionFlags(True, True, True, True),
    )


def approx_clt_zone(model: CrpModel, n: int, x: int, unsafe: bool = False) -> float:
    """Central-zone form exp(-n*D(alpha)) / (sigma * sqrt(2*pi*n))."""
    require_arithmetic(model.step, unsafe)
    if n <= 0:
        raise DomainError(f"n must be positive, got {n}")
    rp = rate_point(model.step, x / n)
    sigma = math.sqrt(moments(model.step).sigma2)
    return math.exp(-n * rp.D) / (sigma * math.sqrt(2.0 * math.pi * n))


def approx_renewal(model: CrpModel, n: int, t: int, x: int,
                   unsafe: bool = False) -> AsymptoticEstimate:
    """Local-theorem approximation of the renewal mass H({t} x {x}).

    value = psi1(lam, mu) * C_H(theta, alpha) * exp(-n*D(theta, alpha)) / sqrt(n)
    with (theta, alpha) = (t/n, x/n) and the tilt taken at slope alpha/theta.
    """
    require_arithmetic(model.step, unsafe)
    if n <= 0:
        raise DomainError(f"n must be positive, got {n}")
    theta, alpha = t / n, x / n
    if theta <= 0:
        raise DomainError(f"t must be positive, got {t}")
    rp = rate_point(model.step, alpha / theta)
    psi1 = _psi1_at(model.first, rp.lambda_alpha, rp.mu_alpha)
    if psi1 is None:
        raise ConditionError(
            "admissible-heterogeneity condition fails: first-jump transform "
            f"is infinite at the tilt ({rp.lambda_alpha:.6g}, {rp.mu_alpha:.6g})",
            condition="admissible-heterogeneity",
        )
    prefactor = c_h(model.step, theta, alpha)
    exponent = n * theta * rp.D
    value, log_value = _compose(psi1, prefactor, None, exponent, n)
    return AsymptoticEstimate(
        value=value, log_value=log_value, exponent=exponent,
        prefactor=prefactor, psi1_factor=psi1, I_factor=None,
        n=n, target=(t, x),
        conditions=ConditionFlags(True, True, True, True),
    )


def central_zone_check(dist: JumpDistribution) -> tuple:
    """Residuals of the two central-zone identities.

    Returns (|C(a)*I(a)*sigma*sqrt(2*pi) - 1|, |sigma^2 * D''(a) - 1|);
    both vanish analytically, so the residuals measure the numeric error of
    the prefactor pipeline at the drift point.
    """
    m = moments(dist)
    sigma = math.sqrt(m.sigma2)
    ca = c_h(dist, 1.0, m.a)
    ia = I_alpha(dist, m.a)
    d2 = rate_point(dist, m.a).D2
    residual_identity = abs(ca * ia * sigma * math.sqrt(2.0 * math.pi) - 1.0)
    residual_sigma = abs(m.sigma2 * d2 - 1.0)
    return residual_identity, residual_sigma
