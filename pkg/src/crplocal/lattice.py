"""Integer-lattice jump distributions and their cumulant function.

A jump is a pair (tau, zeta): tau >= 1 is the integer waiting time between
renewals, zeta the integer reward collected at the renewal.  A distribution
is a finite table of atoms plus an optional geometric tail in tau,

    P(tau = k, zeta = z0 + zslope*(k - k0)) = c * q**k   for k >= k0,

which keeps the two-dimensional moment generating function and all of its
derivatives in closed form.  ``zslope = 0`` gives a tail with constant
reward z0; a nonzero slope tilts the domain of the transform and is the
only way a finite radius in tau can be exceeded by the zero-level tilt.

The cumulant function is A(lam, mu) = ln E exp(lam*tau + mu*zeta); `cgf`
evaluates it together with its gradient and Hessian using log-sum-exp, so
probes at large |mu| stay finite.
"""

from __future__ import annotations

import json
import math
from dataclasses import InitVar, dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DomainError, ModelError

MASS_TOL = 1e-12

__all__ = [
    "GeometricTail",
    "JumpDistribution",
    "CrpModel",
    "TiltPoint",
    "Moments",
    "ValidationReport",
    "cgf",
    "moments",
    "lambda_plus",
    "validate_arithmetic",
    "survival",
    "model_from_dict",
    "model_to_dict",
    "load_model",
]


@dataclass(frozen=True)
class GeometricTail:
    """Geometric tail P(tau=k, zeta=z0+zslope*(k-k0)) = c*q**k for k >= k0."""

    q: float
    k0: int
    z0: int
    c: float
    zslope: int = 0

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ModelError(f"tail.q must lie in (0,1), got {self.q}")
        if self.k0 < 1 or self.k0 != int(self.k0):
            raise ModelError(f"tail.k0 must be an integer >= 1, got {self.k0}")
        if self.c <= 0.0:
            raise ModelError(f"tail.c must be positive, got {self.c}")
        if self.z0 != int(self.z0) or self.zslope != int(self.zslope):
            raise ModelError("tail.z0 and tail.zslope must be integers")

    @property
    def mass(self) -> float:
        return self.c * self.q ** self.k0 / (1.0 - self.q)

    def zeta_at(self, k: int) -> int:
        return self.z0 + self.zslope * (k - self.k0)


@dataclass(frozen=True)
class JumpDistribution:
    """Probability table on the integer lattice with optional geometric tail.

    ``atoms`` is a sequence of (t, z, p) with integer t >= min_t, integer z
    and p > 0.  Total mass (atoms plus tail) must equal 1 within 1e-12 and
    is then renormalized exactly.  Instances are immutable and hashable.
    """

    atoms: tuple
    tail: Optional[GeometricTail] = None
    min_t: InitVar[int] = 1

    # dense views for vectorized evaluation; excluded from eq/hash
    _t: np.ndarray = field(init=False, repr=False, compare=False)
    _z: np.ndarray = field(init=False, repr=False, compare=False)
    _p: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self, min_t):
        if not self.atoms and self.tail is None:
            raise ModelError("distribution has empty support")
        seen = set()
        norm = []
        for entry in self.atoms:
            if len(entry) != 3:
                raise ModelError(f"atom {entry!r} must be a (t, z, p) triple")
            t, z, p = entry
            if t != int(t) or z != int(z):
                raise ModelError(f"atom ({t},{z}) is not on the integer lattice")
            t, z = int(t), int(z)
            if t < min_t:
                raise ModelError(f"atom t={t} below the minimum waiting time {min_t}")
            if not 0.0 < p <= 1.0:
                raise ModelError(f"atom ({t},{z}) has probability {p} outside (0,1]")
            if (t, z) in seen:
                raise ModelError(f"duplicate atom at ({t},{z})")
            seen.add((t, z))
            if self.tail is not None and t >= self.tail.k0 and z == self.tail.zeta_at(t):
                raise ModelError(f"atom ({t},{z}) overlaps the geometric tail support")
            norm.append((t, z, float(p)))
        total = math.fsum(p for _, _, p in norm)
        if self.tail is not None:
            total += self.tail.mass
        if abs(total - 1.0) > MASS_TOL:
            raise ModelError(f"total mass {total!r} deviates from 1 by more than {MASS_TOL}")
        norm = [(t, z, p / total) for t, z, p in norm]
        tail = self.tail
        if tail is not None and total != 1.0:
            tail = GeometricTail(tail.q, tail.k0, tail.z0, tail.c / total, tail.zslope)
        if norm:
            # push the last rounding ulps into the largest atom so the
            # compensated total is exactly 1
            tail_mass = tail.mass if tail is not None else 0.0
            imax = max(range(len(norm)), key=lambda i: norm[i][2])
            for _ in range(3):
                resid = 1.0 - math.fsum([p for _, _, p in norm] + [tail_mass])
                if resid == 0.0:
                    break
                t, z, p = norm[imax]
                norm[imax] = (t, z, p + resid)
        object.__setattr__(self, "atoms", tuple(norm))
        object.__setattr__(self, "tail", tail)
        t = np.array([a[0] for a in norm], dtype=float)
        z = np.array([a[1] for a in norm], dtype=float)
        p = np.array([a[2] for a in norm], dtype=float)
        for name, arr in (("_t", t), ("_z", z), ("_p", p)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def max_atom_t(self) -> int:
        return max((a[0] for a in self.atoms), default=0)

    def support_points(self, t_max: int) -> list:
        """All lattice support points with t <= t_max (tail expanded)."""
        pts = [(t, z) for t, z, _ in self.atoms if t <= t_max]
        if self.tail is not None:
            pts.extend((k, self.tail.zeta_at(k)) for k in range(self.tail.k0, t_max + 1))
        return pts


class TiltPoint(NamedTuple):
    """Cumulant function value with gradient and Hessian at one tilt."""

    lam: float
    mu: float
    A: float
    grad: tuple
    hess: np.ndarray


class Moments(NamedTuple):
    """First moments and the per-unit-time variance of the reward rate."""

    a_tau: float
    a_zeta: float
    a: float
    sigma2: float

    @property
    def degenerate(self) -> bool:
        return self.sigma2 <= 1e-14


class ValidationReport(NamedTuple):
    arithmetic_ok: bool
    lattice_basis: Optional[tuple]
    cramer_ok: bool
    lambda_plus: float
    messages: tuple


@dataclass(frozen=True)
class CrpModel:
    """A compound renewal process: step law plus (possibly different) first jump."""

    step: JumpDistribution
    first: JumpDistribution = None

    def __post_init__(self):
        if self.first is None:
            object.__setattr__(self, "first", self.step)

    @property
    def homogeneous(self) -> bool:
        return self.first.atoms == self.step.atoms and self.first.tail == self.step.tail


def lambda_plus(dist: JumpDistribution) -> float:
    """Radius of the waiting-time transform: sup{lam : E exp(lam*tau) finite}."""
    if dist.tail is None:
        return math.inf
    return -math.log(dist.tail.q)


def _eval_core(dist: JumpDistribution, lam, mu):
    """Vectorized cumulant evaluation.

    Returns (ok, A, g1, g2, h11, h12, h22) broadcast over lam/mu.  ``ok`` is
    False where (lam, mu) leaves the finiteness domain; the other outputs are
    NaN there.  Log-sum-exp keeps the evaluation finite for |mu| up to ~300.
    """
    lam_in = np.asarray(lam, dtype=float)
    mu_in = np.asarray(mu, dtype=float)
    shape = np.broadcast_shapes(lam_in.shape, mu_in.shape)
    lam = np.broadcast_to(lam_in, shape).reshape(-1, 1)
    mu = np.broadcast_to(mu_in, shape).reshape(-1, 1)

    t, z, p = dist._t, dist._z, dist._p
    s = lam * t + mu * z + np.log(p)  # log of each atom term

    if dist.tail is not None:
        tl = dist.tail
        d = float(tl.zslope)
        b = float(tl.z0 - tl.zslope * tl.k0)
        logw = math.log(tl.q) + lam[..., 0] + mu[..., 0] * d
        ok = logw < -1e-12
        wsafe = np.where(ok, np.exp(np.minimum(logw, -1e-12)), 0.5)
        # log of total tail weight c * e^{mu*b} * w^k0 / (1-w)
        s_tail = math.log(tl.c) + mu[..., 0] * b + tl.k0 * logw - np.log1p(-wsafe)
        s_all = np.concatenate([s, s_tail[..., None]], axis=-1)
        M = np.max(s_all, axis=-1, keepdims=True)
        expn = np.exp(s_all - M)
        psi_scaled = expn.sum(axis=-1)
        A = M[..., 0] + np.log(psi_scaled)
        wgt = expn / psi_scaled[..., None]
        w_atom, w_tail = wgt[..., :-1], wgt[..., -1]
        # tail tau-moments from the normalized geometric on k >= k0
        g = wsafe / (1.0 - wsafe)
        m1 = tl.k0 + g
        m2 = tl.k0 ** 2 + 2.0 * tl.k0 * g + wsafe * (1.0 + wsafe) / (1.0 - wsafe) ** 2
        g1 = (w_atom * t).sum(axis=-1) + w_tail * m1
        g2 = (w_atom * z).sum(axis=-1) + w_tail * (d * m1 + b)
        h11 = (w_atom * t * t).sum(axis=-1) + w_tail * m2
        h12 = (w_atom * t * z).sum(axis=-1) + w_tail * (d * m2 + b * m1)
        h22 = (w_atom * z * z).sum(axis=-1) + w_tail * (d * d * m2 + 2 * d * b * m1 + b * b)
    else:
        ok = np.ones(lam.shape[0], dtype=bool)
        M = np.max(s, axis=-1, keepdims=True)
        expn = np.exp(s - M)
        psi_scaled = expn.sum(axis=-1)
        A = M[..., 0] + np.log(psi_scaled)
        wgt = expn / psi_scaled[..., None]
        g1 = (wgt * t).sum(axis=-1)
        g2 = (wgt * z).sum(axis=-1)
        h11 = (wgt * t * t).sum(axis=-1)
        h12 = (wgt * t * z).sum(axis=-1)
        h22 = (wgt * z * z).sum(axis=-1)

    h11 = h11 - g1 * g1
    h12 = h12 - g1 * g2
    h22 = h22 - g2 * g2
    bad = ~ok
    if bad.any():
        for arr in (A, g1, g2, h11, h12, h22):
            arr[bad] = np.nan
    return tuple(arr.reshape(shape) for arr in (ok, A, g1, g2, h11, h12, h22))


def cgf(dist: JumpDistribution, lam: float, mu: float) -> TiltPoint:
    """Cumulant function A(lam, mu) with gradient and Hessian (closed form).

    The gradient is the mean of (tau, zeta) under the exponential tilt
    exp(lam*tau + mu*zeta - A); the Hessian is its covariance matrix.

    Raises DomainError when a geometric tail makes the transform infinite,
    i.e. lam + zslope*mu >= -ln q.
    """
    ok, A, g1, g2, h11, h12, h22 = _eval_core(dist, float(lam), float(mu))
    if not bool(ok):
        lp = lambda_plus(dist)
        raise DomainError(
            f"({lam}, {mu}) outside the transform domain (lambda_plus={lp})",
            upper=lp,
        )
    hess = np.array([[float(h11), float(h12)], [float(h12), float(h22)]])
    hess.setflags(write=False)
    return TiltPoint(float(lam), float(mu), float(A), (float(g1), float(g2)), hess)


def moments(dist: JumpDistribution) -> Moments:
    """Means of tau and zeta, drift a = E zeta / E tau, and sigma^2.

    sigma^2 = E(zeta - a*tau)^2 / E tau is the variance rate of the reward
    process per unit time; zero flags a degenerate (deterministic-slope) law.
    """
    tp = cgf(dist, 0.0, 0.0)
    a_tau, a_zeta = tp.grad
    a = a_zeta / a_tau
    # raw second moments from covariance + means (psi(0,0) = 1)
    e_tt = tp.hess[0, 0] + a_tau * a_tau
    e_tz = tp.hess[0, 1] + a_tau * a_zeta
    e_zz = tp.hess[1, 1] + a_zeta * a_zeta
    sigma2 = (e_zz - 2.0 * a * e_tz + a * a * e_tt) / a_tau
    return Moments(a_tau, a_zeta, a, max(sigma2, 0.0))


def survival(dist: JumpDistribution, m: int) -> float:
    """P(tau >= m), exact (closed-form geometric remainder for tails)."""
    if m <= dist_min_t(dist):
        return 1.0
    s = math.fsum(p for t, _, p in dist.atoms if t >= m)
    if dist.tail is not None:
        tl = dist.tail
        s += tl.c * tl.q ** max(m, tl.k0) / (1.0 - tl.q)
    return s


def dist_min_t(dist: JumpDistribution) -> int:
    lo = min((t for t, _, _ in dist.atoms), default=None)
    if dist.tail is not None:
        lo = dist.tail.k0 if lo is None else min(lo, dist.tail.k0)
    return lo


def _hnf_basis(vecs: Sequence[tuple]) -> list:
    """Row-style Hermite basis of the subgroup of Z^2 generated by ``vecs``."""
    rows = [(int(a), int(b)) for a, b in vecs if (a, b) != (0, 0)]
    pivot = None  # vector with smallest positive first component achievable
    rest = []
    for v in rows:
        if pivot is None:
            pivot = v
            continue
        a, b = pivot
        c, d = v
        # fold first components with the extended Euclid step
        while c != 0:
            k = a // c
            a, b, c, d = c, d, a - k * c, b - k * d
        pivot = (a, b)
        if d != 0:
            rest.append(d)
    basis = []
    if pivot is not None and pivot[0] != 0:
        basis.append(pivot)
        g2 = 0
        for d in rest:
            g2 = math.gcd(g2, d)
        if g2:
            basis.append((0, g2))
    else:
        if pivot is not None and pivot[1] != 0:
            rest.append(pivot[1])
        g2 = 0
        for d in rest:
            g2 = math.gcd(g2, abs(d))
        if g2:
            basis.append((0, g2))
    return basis


def validate_arithmetic(dist: JumpDistribution) -> ValidationReport:
    """Check that the support differences generate all of Z^2.

    The law is arithmetic in the strict sense iff the subgroup of Z^2
    generated by {s - s0 : s in support} is the whole lattice; support on a
    line or on a proper sublattice fails.  A geometric tail contributes the
    unit step (1, zslope) between consecutive tail points.
    """
    pts = dist.support_points(t_max=dist.max_atom_t + (dist.tail.k0 + 1 if dist.tail else 0))
    if not pts:
        raise ModelError("distribution has empty support")
    s0 = pts[0]
    gens = [(t - s0[0], z - s0[1]) for t, z in pts[1:]]
    if dist.tail is not None:
        gens.append((1, dist.tail.zslope))
    basis = _hnf_basis(gens)
    messages = []
    if len(basis) < 2:
        ok = False
        if len(basis) == 0:
            messages.append("support is a single lattice point")
        else:
            messages.append("support differences lie on a line; condition [Z] fails")
        basis_out = tuple(basis) if basis else None
    else:
        det = abs(basis[0][0] * basis[1][1])
        ok = det == 1
        if not ok:
            messages.append(
                f"support differences generate a sublattice of index {det}; condition [Z] fails"
            )
        basis_out = (basis[0], basis[1])
    return ValidationReport(ok, basis_out, True, lambda_plus(dist), tuple(messages))


# ---------------------------------------------------------------------------
# model file handling


def _dist_from_dict(d: dict, name: str, min_t: int) -> JumpDistribution:
    if not isinstance(d, dict):
        raise ModelError(f"'{name}' must be an object")
    unknown = set(d) - {"atoms", "tail"}
    if unknown:
        raise ModelError(f"unknown field(s) {sorted(unknown)} in '{name}'")
    atoms = d.get("atoms", [])
    tail = None
    if "tail" in d and d["tail"] is not None:
        td = d["tail"]
        unknown = set(td) - {"q", "k0", "z0", "c", "zslope"}
        if unknown:
            raise ModelError(f"unknown field(s) {sorted(unknown)} in '{name}.tail'")
        for key in ("q", "k0", "z0", "c"):
            if key not in td:
                raise ModelError(f"missing field '{name}.tail.{key}'")
        tail = GeometricTail(td["q"], td["k0"], td["z0"], td["c"], td.get("zslope", 0))
    try:
        return JumpDistribution(tuple(tuple(a) for a in atoms), tail, min_t=min_t)
    except ModelError as exc:
        raise ModelError(f"in '{name}': {exc}") from None


def model_from_dict(d: dict) -> CrpModel:
    if not isinstance(d, dict):
        raise ModelError("model file must contain a JSON object")
    unknown = set(d) - {"step", "first"}
    if unknown:
        raise ModelError(f"unknown top-level field(s) {sorted(unknown)}")
    if "step" not in d:
        raise ModelError("missing required field 'step'")
    step = _dist_from_dict(d["step"], "step", min_t=1)
    first = None
    if "first" in d and d["first"] is not None:
        first = _dist_from_dict(d["first"], "first", min_t=0)
    return CrpModel(step, first)


def _dist_to_dict(dist: JumpDistribution) -> dict:
    out = {"atoms": [[t, z, p] for t, z, p in dist.atoms]}
    if dist.tail is not None:
        tl = dist.tail
        out["tail"] = {"q": tl.q, "k0": tl.k0, "z0": tl.z0, "c": tl.c}
        if tl.zslope:
            out["tail"]["zslope"] = tl.zslope
    return out


def model_to_dict(model: CrpModel) -> dict:
    out = {"step": _dist_to_dict(model.step)}
    if not model.homogeneous:
        out["first"] = _dist_to_dict(model.first)
    return out


def load_model(path) -> CrpModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file {path} is not valid JSON: {exc}") from None
    return model_from_dict(data)
