"""Adaptive selection of the per-step runtime amplifying factor.

Each step multiplies the evolution-time scale by a factor that must keep every
nonzero integer shift of the (padded) current estimate disjoint from the
estimate itself, so aliased windows unfold uniquely.  The continuous-time
model searches a real factor in ``[2, 4]`` by materializing the set of
violating values pair by pair; the integer-power model certifies a prime from
a fixed pool, where a pigeonhole argument guarantees one prime always works.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .intervals import IntervalSet, TorusIntervalSet, torus_distance


class NoFeasibleFactor(Exception):
    """No admissible factor in [2, 4] exists: a selection precondition failed."""


class NoFeasiblePrime(Exception):
    """No pool prime separates the shifted estimate from itself."""


@dataclass(frozen=True)
class ForbiddenSet:
    """Factors in ``[2, 4]`` that would let some shifted component collide."""

    intervals: IntervalSet

    def measure(self) -> float:
        return self.intervals.measure()


def forbidden_factor_set(
    centers: Sequence[float], half_widths: Sequence[float], scale: float
) -> ForbiddenSet:
    """Factors ``m`` for which some pair of padded components collides.

    Component ``i`` occupies ``[centers[i] - half_widths[i], centers[i] +
    half_widths[i]]``.  Factor ``m`` is forbidden when for some pair ``(i, j)``
    and nonzero integer ``q`` the shift by ``q / (scale * m)`` brings the two
    components within touching range.  Components must be pairwise disjoint,
    so only positive shifts can collide and the enumeration is finite.
    """
    if len(centers) != len(half_widths):
        raise ValueError("centers and half_widths must align")
    n = len(centers)
    lo_all = min(c - h for c, h in zip(centers, half_widths))
    hi_all = max(c + h for c, h in zip(centers, half_widths))
    diam = hi_all - lo_all
    zeta_max = max(h * scale for h in half_widths)
    q_cap = math.ceil(4.0 * (scale * diam + 2.0 * zeta_max)) + 1
    pieces: list[tuple[float, float]] = []
    for i in range(n):
        for j in range(i, n):
            width = half_widths[i] + half_widths[j]
            delta = abs(centers[i] - centers[j])
            if i != j and delta <= width:
                raise NoFeasibleFactor(
                    f"padded components {i} and {j} overlap before shifting"
                )
            if delta + width <= 0:
                continue
            # Shifts q / (scale * m) with m in [2, 4] reach the pair only for
            # q between 2*scale*(delta - width) and 4*scale*(delta + width).
            q_lo = max(1, math.floor(2.0 * scale * (delta - width)))
            q_hi = min(q_cap, math.ceil(4.0 * scale * (delta + width)) + 1)
            if q_hi < q_lo:
                continue
            qs = np.arange(q_lo, q_hi + 1, dtype=float)
            m_lo = np.maximum(2.0, qs / (scale * (delta + width)))
            if delta > width:
                m_hi = np.minimum(4.0, qs / (scale * (delta - width)))
            else:
                m_hi = np.full_like(qs, 4.0)
            keep = m_lo <= m_hi
            pieces.extend(zip(m_lo[keep].tolist(), m_hi[keep].tolist()))
    return ForbiddenSet(IntervalSet(tuple(pieces)))


def select_real_factor(
    prior: IntervalSet,
    scale: float,
    half_widths: Sequence[float],
    *,
    margin: float = 1e-4,
    prefer: float | None = None,
) -> float:
    """Choose a collision-free real factor in ``[2, 4]``.

    ``half_widths`` pads each component of ``prior`` about its center before
    the collision analysis.  By default returns the largest admissible factor
    at distance at least ``margin`` from the forbidden set (fewer steps, lower
    final depth).  With ``prefer`` set, returns the smallest admissible factor
    at or above it, which lets the final step land just past the target
    precision instead of overshooting by up to 4x.

    Raises:
        NoFeasibleFactor: the admissible set (after the margin) is empty.
    """
    if prior.is_empty:
        raise ValueError("prior estimate must be nonempty")
    centers = [0.5 * (lo + hi) for lo, hi in prior.intervals]
    forbidden = forbidden_factor_set(centers, list(half_widths), scale)
    allowed = forbidden.intervals.complement_within(2.0, 4.0)
    ranges = []
    for lo, hi in allowed.intervals:
        inner_lo = lo + margin if lo > 2.0 else lo
        inner_hi = hi - margin if hi < 4.0 else hi
        if inner_lo <= inner_hi:
            ranges.append((inner_lo, inner_hi))
    if prefer is not None:
        target = max(prefer, 2.0)
        for inner_lo, inner_hi in ranges:
            if inner_hi >= target:
                return max(inner_lo, target)
    if ranges:
        return ranges[-1][1]
    raise NoFeasibleFactor("the whole admissible range [2, 4] is forbidden")


def first_primes(n: int) -> list[int]:
    """First ``n`` primes via a sieve sized from the standard upper bound."""
    if n < 1:
        raise ValueError("n must be >= 1")
    limit = math.ceil(2.0 * n * (math.log(n) + 1.0)) + 2
    sieve = bytearray([1]) * (limit + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, int(limit**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
    primes = [i for i, flag in enumerate(sieve) if flag]
    if len(primes) < n:
        raise RuntimeError(f"sieve limit {limit} produced only {len(primes)} primes")
    return primes[:n]


@dataclass(frozen=True)
class PrimePool:
    """Candidate primes for the integer-power model plus the pigeonhole margin.

    For ``s`` spikes the pool holds the first ``s*(s-1)/2 + 1`` primes; at
    least one of them keeps every center difference at distance ``bound`` from
    the nonzero multiples of its reciprocal.
    """

    primes: tuple[int, ...]
    bound: float


def prime_pool(n_spikes: int) -> PrimePool:
    if n_spikes < 1:
        raise ValueError("n_spikes must be >= 1")
    count = n_spikes * (n_spikes - 1) // 2 + 1
    primes = first_primes(count)
    # Index convention: the 0-th "prime" is 1, so for a single spike the
    # margin is 1 / (2 * 1 * 2).
    p_a = 1 if count == 1 else primes[count - 2]
    p_b = primes[count - 1]
    return PrimePool(primes=tuple(primes), bound=1.0 / (2.0 * p_a * p_b))


def _difference_arcs(padded: TorusIntervalSet) -> TorusIntervalSet:
    """Arc set of pairwise differences ``a - b mod 1`` of points of ``padded``."""
    arcs = []
    for lo1, len1 in padded.arcs:
        for lo2, len2 in padded.arcs:
            arcs.append((lo1 - lo2 - len2, len1 + len2))
    return TorusIntervalSet(tuple(arcs))


def _prime_is_feasible(
    diff: TorusIntervalSet, prime: int, scale: int, tol: float = 1e-9
) -> bool:
    """No fraction ``r / (prime*scale)`` with ``prime*scale`` not dividing ``r`` hits ``diff``."""
    total = prime * scale
    if diff.is_full:
        return False
    for lo, length in diff.arcs:
        r_lo = math.ceil(lo * total - tol)
        r_hi = math.floor((lo + length) * total + tol)
        for r in range(r_lo, r_hi + 1):
            if r % total != 0:
                return False
    return True


def _prime_margin(prime: int, scaled_centers: Sequence[float]) -> float:
    """Worst-case distance of center differences from the prime's fraction grid."""
    worst = math.inf
    n = len(scaled_centers)
    for i in range(n):
        for j in range(i, n):
            d = abs(scaled_centers[i] - scaled_centers[j]) % 1.0
            for k in range(1, prime):
                worst = min(worst, torus_distance(d, k / prime))
    return worst


def select_prime_factor(
    prior: TorusIntervalSet,
    scale: int,
    eta: float,
    pool: PrimePool,
    *,
    n_spikes: int | None = None,
) -> int:
    """Choose a pool prime whose shifts cannot alias the padded estimate.

    Certifies directly that every shift of ``B(prior, eta/scale)`` by
    ``q / (prime * scale)`` with ``prime * scale`` not dividing ``q`` misses
    the padded set (mod 1).  Among the certified primes, returns the one whose
    center differences clear the fraction grid by the widest margin, breaking
    ties toward the smaller prime.

    Raises:
        NoFeasiblePrime: no pool prime passes the certificate.
    """
    if scale < 1 or scale != int(scale):
        raise ValueError("scale must be a positive integer")
    if n_spikes is not None:
        # Equality is admitted: the single-spike cap 1/6 touches the pool bound
        # exactly, and the direct certificate below decides feasibility anyway.
        cap = 2.0 * pool.bound / (3.0 * n_spikes)
        if eta > cap * (1.0 + 1e-12):
            raise ValueError(
                f"eta = {eta} exceeds the pool admissibility cap {cap}"
            )
    padded = prior.neighborhood(eta / scale)
    if padded.is_full:
        raise NoFeasiblePrime("padded estimate covers the whole circle")
    diff = _difference_arcs(padded)
    scaled_centers = [((lo + length / 2.0) * scale) % 1.0 for lo, length in prior.arcs]
    best: tuple[float, int] | None = None
    for prime in pool.primes:
        if _prime_is_feasible(diff, prime, int(scale)):
            margin = _prime_margin(prime, scaled_centers)
            if best is None or margin > best[0] + 1e-15:
                best = (margin, prime)
    if best is None:
        raise NoFeasiblePrime(
            f"none of the pool primes {pool.primes} separates the estimate at "
            f"scale {scale}"
        )
    return best[1]


def eta_cap(model_kind: str, n_spikes: int) -> float:
    """Admissible ceiling of the window parameter for each driver family."""
    s = n_spikes
    if s < 1:
        raise ValueError("n_spikes must be >= 1")
    if model_kind == "real":
        return 1.0 / (8.0 * s * (2.0 * s - 1.0))
    if model_kind == "integer":
        return min(1.0 / 6.0, 1.0 / (3.0 * s**5 * (0.31 + 2.0 * math.log(s)) ** 2))
    if model_kind == "gapped-real":
        return 1.0 / (8.0 * s * (2.0 * s - 1.0))
    if model_kind == "gapped-int":
        pool = prime_pool(s)
        return pool.bound / (2.0 * s)
    raise ValueError(f"unknown model kind {model_kind!r}")
