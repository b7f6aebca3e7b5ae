"""Exact and simulated ground truth for the reward process.

The law of the partial sums S_k = (T_k, Z_k) is computed by iterated
lattice convolution on a dense (time x reward) array restricted to
t <= T_max; geometric tails are unrolled until the remaining mass drops
below a cutoff (default 1e-14) and every unit of dropped mass is recorded.
The renewal table accumulates these laws over k, and P(Z(n) = x) follows
from the renewal decomposition: the no-jump term plus the sum over the last
renewal epoch m of H({m} x {x}) P(tau >= n - m), with the k = 0 unit mass
at the origin excluded from H (the no-jump term already accounts for it).

`simulate` draws seeded reproducible paths (counter-based Philox streams,
alias tables for the atom part, inverse-transform for the geometric tail)
and optionally applies the exponential change of measure at the zero-level
tilt of a chosen slope, scoring every renewal epoch the path visits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .lattice import (CrpModel, GeometricTail, JumpDistribution, cgf, survival)
from .second_deviation import rate_point

TAIL_CUTOFF = 1e-14

__all__ = ["SparsePmf", "RenewalTable", "step_pmf", "renewal_measure_exact",
           "crp_pmf_exact", "simulate", "tilt_distribution"]


@dataclass(frozen=True)
class SparsePmf:
    """Sparse pmf over lattice points (t, x) with the dropped mass recorded."""

    entries: dict
    truncation_mass: float = 0.0

    def total(self) -> float:
        return math.fsum(self.entries.values())


@dataclass(frozen=True)
class RenewalTable:
    """Renewal masses H({t} x {x}) for 0 <= t <= T_max.

    ``truncation_mass`` is an upper bound on the mass lost to the geometric
    tail cutoff inside the table range (restriction past T_max is exact).
    """

    H: dict
    T_max: int
    truncation_mass: float = 0.0

    def value(self, t: int, x: int) -> float:
        return self.H.get((t, x), 0.0)


def _expanded(dist: JumpDistribution, t_max: int, cutoff: float) -> tuple:
    """Unroll the tail: returns (entries, beyond_range, in_range_cut)."""
    entries = [(t, z, p) for t, z, p in dist.atoms if t <= t_max]
    beyond = math.fsum(p for t, _, p in dist.atoms if t > t_max)
    cut = 0.0
    if dist.tail is not None:
        tl = dist.tail
        remaining = tl.mass
        k = tl.k0
        while k <= t_max and remaining > cutoff:
            pk = tl.c * tl.q ** k
            entries.append((k, tl.zeta_at(k), pk))
            remaining -= pk
            k += 1
        if k <= t_max:
            cut = max(remaining, 0.0)
        else:
            beyond += max(remaining, 0.0)
    return entries, beyond, cut


def _x_bounds(step_entries, first_entries, t_max: int) -> tuple:
    """Column range certain to contain every reachable reward value."""
    z1 = [z for _, z, _ in first_entries]
    z1_min, z1_max = min(z1, default=0), max(z1, default=0)
    up = max((-(-z // t) for t, z, _ in step_entries), default=0)
    dn = min((z // t for t, z, _ in step_entries), default=0)
    x_min = min(0, z1_min) + t_max * min(0, dn)
    x_max = max(0, z1_max) + t_max * max(0, up)
    return x_min, x_max


def _convolve(arr: np.ndarray, entries, t_max: int) -> np.ndarray:
    out = np.zeros_like(arr)
    width = arr.shape[1]
    for dt, dz, p in entries:
        src = arr[: t_max + 1 - dt]
        if dz >= 0:
            out[dt:, dz:] += p * src[:, : width - dz]
        else:
            out[dt:, : width + dz] += p * src[:, -dz:]
    return out


class _DenseLaw:
    """Iterated-convolution workspace restricted to t <= T_max."""

    def __init__(self, model: CrpModel, t_max: int, cutoff: float = TAIL_CUTOFF):
        if t_max < 0:
            raise DomainError(f"T_max must be nonnegative, got {t_max}")
        self.t_max = t_max
        self.step_entries, _, self.step_cut = _expanded(model.step, t_max, cutoff)
        self.first_entries, _, self.first_cut = _expanded(model.first, t_max, cutoff)
        self.x_min, self.x_max = _x_bounds(
            self.step_entries, self.first_entries, t_max)
        self.width = self.x_max - self.x_min + 1

    def delta(self) -> np.ndarray:
        arr = np.zeros((self.t_max + 1, self.width))
        arr[0, -self.x_min] = 1.0
        return arr

    def advance(self, arr: np.ndarray, k: int) -> np.ndarray:
        entries = self.first_entries if k == 1 else self.step_entries
        return _convolve(arr, entries, self.t_max)

    def to_sparse(self, arr: np.ndarray) -> dict:
        tt, jj = np.nonzero(arr)
        return {(int(t), int(j) + self.x_min): float(arr[t, j])
                for t, j in zip(tt, jj)}


def step_pmf(model: CrpModel, k: int, T_max: int,
             tail_cutoff: float = TAIL_CUTOFF) -> SparsePmf:
    """Exact law of S_k = (T_k, Z_k) restricted to t <= T_max.

    The first factor uses the first-jump law, the remaining k-1 the step
    law.  ``truncation_mass`` is 1 minus the retained mass: everything that
    escaped past T_max or fell under the tail cutoff.
    """
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    ws = _DenseLaw(model, T_max, tail_cutoff)
    arr = ws.delta()
    for j in range(1, k + 1):
        arr = ws.advance(arr, j)
    total = float(arr.sum())
    return SparsePmf(ws.to_sparse(arr), truncation_mass=max(0.0, 1.0 - total))


def _renewal_dense(model: CrpModel, t_max: int,
                   tail_cutoff: float = TAIL_CUTOFF) -> tuple:
    ws = _DenseLaw(model, t_max, tail_cutoff)
    live = ws.delta()
    h = live.copy()
    cut_bound = 0.0
    for k in range(1, t_max + 2):
        mass_before = float(live.sum())
        if mass_before < 1e-300:
            break
        live = ws.advance(live, k)
        cut_bound += mass_before * (ws.first_cut if k == 1 else ws.step_cut)
        h += live
    return h, ws, cut_bound


def renewal_measure_exact(model: CrpModel, T_max: int,
                          tail_cutoff: float = TAIL_CUTOFF) -> RenewalTable:
    """Renewal table H({t} x {x}) = sum_k P(S_k = (t, x)) for t <= T_max.

    The k = 0 term contributes a unit mass at the origin.  The sum stops at
    k = T_max + 1: step waiting times are >= 1, so later terms cannot land
    in the table.
    """
    h, ws, cut = _renewal_dense(model, T_max, tail_cutoff)
    return RenewalTable(ws.to_sparse(h), T_max, truncation_mass=cut)


def crp_pmf_exact(model: CrpModel, n: int) -> dict:
    """Exact pmf of Z(n) via the renewal decomposition.

    P(Z(n) = x) = 1{x=0} P(tau_1 >= n)
                  + sum_{m=0}^{n-1} H*({m} x {x}) P(tau >= n - m),

    where H* counts renewal epochs k >= 1 only (the k = 0 unit mass at the
    origin corresponds to the no-jump event captured by the first term).
    Returns {x: probability}; the values sum to 1 up to the geometric-tail
    cutoff.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    h, ws, _ = _renewal_dense(model, n - 1)
    h[0, -ws.x_min] -= 1.0  # drop the k = 0 origin mass
    weights = np.array([survival(model.step, n - m) for m in range(n)])
    pvec = weights @ h
    pvec[-ws.x_min] += survival(model.first, n)
    jj = np.nonzero(pvec)[0]
    return {int(j) + ws.x_min: float(pvec[j]) for j in jj}


# ---------------------------------------------------------------------------
# sampling


def tilt_distribution(dist: JumpDistribution, lam: float, mu: float) -> JumpDistribution:
    """Exponentially tilted law p*exp(lam*t + mu*z - A(lam, mu)).

    A geometric tail stays geometric with ratio q*exp(lam + zslope*mu); on
    the zero level of the cumulant function the tilt needs no normalizer.
    """
    tp = cgf(dist, lam, mu)
    atoms = tuple((t, z, p * math.exp(lam * t + mu * z - tp.A))
                  for t, z, p in dist.atoms)
    tail = None
    if dist.tail is not None:
        tl = dist.tail
        q_t = tl.q * math.exp(lam + tl.zslope * mu)
        c_t = tl.c * math.exp(mu * (tl.z0 - tl.zslope * tl.k0) - tp.A)
        tail = GeometricTail(q_t, tl.k0, tl.z0, c_t, tl.zslope)
    return JumpDistribution(atoms, tail, min_t=0)


class _JumpSampler:
    """Walker-alias sampler over the atoms plus geometric-tail branch.

    Draws a fixed three uniforms per jump (branch, position, accept) so the
    stream layout does not depend on the branch taken.
    """

    def __init__(self, dist: JumpDistribution):
        self.tail = dist.tail
        self.p_tail = dist.tail.mass if dist.tail is not None else 0.0
        t = np.array([a[0] for a in dist.atoms], dtype=np.int64)
        z = np.array([a[1] for a in dist.atoms], dtype=np.int64)
        p = np.array([a[2] for a in dist.atoms], dtype=float)
        self.t, self.z = t, z
        self.n_atoms = len(t)
        if self.n_atoms:
            w = p / p.sum()
            n = self.n_atoms
            scaled = w * n
            accept = np.ones(n)
            alias = np.arange(n)
            small = [i for i in range(n) if scaled[i] < 1.0]
            large = [i for i in range(n) if scaled[i] >= 1.0]
            while small and large:
                s = small.pop()
                g = large.pop()
                accept[s] = scaled[s]
                alias[s] = g
                scaled[g] = (scaled[g] + scaled[s]) - 1.0
                (small if scaled[g] < 1.0 else large).append(g)
            self.accept, self.alias = accept, alias

    def draw(self, rng: np.random.Generator, m: int) -> tuple:
        u_branch = rng.random(m)
        u_pos = rng.random(m)
        u_acc = rng.random(m)
        if self.n_atoms:
            i = np.minimum((u_pos * self.n_atoms).astype(np.int64), self.n_atoms - 1)
            j = np.where(u_acc < self.accept[i], i, self.alias[i])
            t = self.t[j]
            z = self.z[j]
        else:
            t = np.zeros(m, dtype=np.int64)
            z = np.zeros(m, dtype=np.int64)
        if self.tail is not None:
            is_tail = u_branch < self.p_tail
            # inverse transform on the integer geometric: P(G >= g) = q^g
            g = np.floor(np.log1p(-u_pos) / math.log(self.tail.q)).astype(np.int64)
            t_tail = self.tail.k0 + g
            z_tail = self.tail.z0 + self.tail.zslope * g
            t = np.where(is_tail, t_tail, t)
            z = np.where(is_tail, z_tail, z)
        return t, z


def simulate(model: CrpModel, n: int, paths: int, seed: int,
             tilted: bool = False, alpha: float = None) -> dict:
    """Empirical pmf of Z(n) from ``paths`` seeded paths.

    Returns {x: (estimate, std_error)}.  The stream is a counter-based
    Philox generator keyed by ``seed``; identical seeds reproduce the output
    bit for bit.

    Naive mode counts the reward accumulated by the jumps landing strictly
    before n.  Tilted mode draws jumps from the zero-level exponential tilt
    at slope ``alpha`` and scores every renewal epoch (T_k, Z_k) with
    exp(log psi1 - lam*T_k - mu*Z_k) * P(tau >= n - T_k), the importance
    weight of the visited epoch times the true survival of the next waiting
    time; summing over epochs reproduces the renewal decomposition without
    ever weighting an overshooting jump.  Standard errors in tilted mode
    come from 64 path blocks.
    """
    if paths < 1:
        raise DomainError(f"paths must be >= 1, got {paths}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    rng = np.random.Generator(np.random.Philox(seed))
    if tilted:
        if alpha is None:
            raise DomainError("tilted mode requires a target slope alpha")
        return _simulate_tilted(model, n, paths, rng, alpha)

    first_sampler = _JumpSampler(model.first)
    step_sampler = _JumpSampler(model.step)
    t_cur = np.zeros(paths, dtype=np.int64)
    z_n = np.zeros(paths, dtype=np.int64)
    active = np.ones(paths, dtype=bool)
    first_round = True
    while active.any():
        idx = np.flatnonzero(active)
        sampler = first_sampler if first_round else step_sampler
        t, z = sampler.draw(rng, idx.size)
        t_new = t_cur[idx] + t
        t_cur[idx] = t_new
        cont = t_new < n
        z_n[idx[cont]] += z[cont]
        active[idx[~cont]] = False
        first_round = False

    vals, counts = np.unique(z_n, return_counts=True)
    out = {}
    for v, c in zip(vals, counts):
        est = c / paths
        out[int(v)] = (float(est), float(math.sqrt(est * (1.0 - est) / paths)))
    return out


def _simulate_tilted(model: CrpModel, n: int, paths: int,
                     rng: np.random.Generator, alpha: float) -> dict:
    rp = rate_point(model.step, alpha)
    lam, mu = rp.lambda_alpha, rp.mu_alpha
    log_psi1 = cgf(model.first, lam, mu).A
    first_sampler = _JumpSampler(tilt_distribution(model.first, lam, mu))
    step_sampler = _JumpSampler(tilt_distribution(model.step, lam, mu))
    surv_step = np.array([0.0] + [survival(model.step, j) for j in range(1, n + 1)])

    # reward bounds over epochs with T_k < n (same slope argument as the
    # dense oracle grids)
    f_ent, _, _ = _expanded(model.first, n - 1, TAIL_CUTOFF)
    s_ent, _, _ = _expanded(model.step, n - 1, TAIL_CUTOFF)
    x_min, x_max = _x_bounds(s_ent, f_ent, n - 1)
    width = x_max - x_min + 1
    n_blocks = min(64, paths)
    block_of = (np.arange(paths, dtype=np.int64) * n_blocks) // paths
    block_count = np.bincount(block_of, minlength=n_blocks).astype(float)
    acc = np.zeros(n_blocks * width)

    t_cur = np.zeros(paths, dtype=np.int64)
    z_cur = np.zeros(paths, dtype=np.int64)
    active = np.ones(paths, dtype=bool)
    first_round = True
    while active.any():
        idx = np.flatnonzero(active)
        sampler = first_sampler if first_round else step_sampler
        t, z = sampler.draw(rng, idx.size)
        t_new = t_cur[idx] + t
        z_new = z_cur[idx] + z
        t_cur[idx] = t_new
        z_cur[idx] = z_new
        cont = t_new < n
        live = idx[cont]
        scores = np.exp(log_psi1 - lam * t_new[cont] - mu * z_new[cont]) \
            * surv_step[n - t_new[cont]]
        flat = block_of[live] * width + (z_new[cont] - x_min)
        acc += np.bincount(flat, weights=scores, minlength=n_blocks * width)
        active[idx[~cont]] = False
        first_round = False

    acc = acc.reshape(n_blocks, width)
    sums = acc.sum(axis=0)
    p0 = survival(model.first, n)  # no-jump term, common to every path
    out = {}
    for j in np.nonzero(sums)[0]:
        est = sums[j] / paths
        means = acc[:, j] / block_count
        dev = means - est
        var_est = float((dev * dev) @ (block_count / paths) ** 2)
        se = math.sqrt(var_est * n_blocks / max(n_blocks - 1, 1))
        x = int(j) + x_min
        val = est + (p0 if x == 0 else 0.0)
        out[x] = (float(val), se)
    if p0 > 0.0:
        out.setdefault(0, (p0, 0.0))
    return out
