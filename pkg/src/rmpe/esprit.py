"""Subspace spike localization (ESPRIT) for the gap-separated regime.

A square Hankel matrix of the moment record is factored by SVD; the rotation
between the two row-shifted copies of the leading singular subspace carries the
spike positions in the arguments of its eigenvalues.  With a known lower bound
on the (scaled) spike separation, the recovery error is proportional to the
per-moment noise, independent of the record length.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .intervals import TorusIntervalSet, torus_distance
from .gapless import SpectralWindowSet
from .measurement import MomentSignal

#: Hankel sizes above this use an iterative partial SVD instead of a dense one.
_DENSE_SVD_LIMIT = 700

#: Relative singular-value cutoff for rank checks and pseudo-inversion.
_RANK_RCOND = 1e-12


class RankDeficiency(Exception):
    """Fewer effective spikes than requested at this resolution."""


@dataclass(frozen=True)
class EspritEstimate:
    """Estimated spike positions (sorted, in ``[0, 1)``) plus SVD diagnostics."""

    locations: tuple[float, ...]
    singular_values: tuple[float, ...]


def _normalize_phases(u: np.ndarray) -> np.ndarray:
    """Rotate each column so its first significant entry is positive real.

    The rotation is a diagonal unitary similarity of the shift operator, so it
    leaves the recovered locations unchanged; it pins the stored basis to a
    platform-independent representative.
    """
    out = u.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        scale = np.max(np.abs(col))
        if scale == 0.0:
            continue
        idx = int(np.argmax(np.abs(col) > 1e-12 * scale))
        pivot = col[idx]
        if pivot != 0:
            out[:, j] = col * (np.conj(pivot) / abs(pivot))
    return out


def esprit_estimate(
    signal: MomentSignal, n_spikes: int, *, require_full_rank: bool = False
) -> EspritEstimate:
    """Recover ``n_spikes`` spike positions from the moment record.

    Builds the ``(k_max/2 + 1)``-square Hankel matrix ``H[r, c] = y(r + c)``,
    takes the ``n_spikes`` leading left singular vectors, and solves the
    rotational-invariance eigenproblem between their first and last
    ``k_max/2`` rows.  ``k_max`` must be even and at least ``4 * n_spikes``.

    Raises:
        RankDeficiency: with ``require_full_rank``, when the ``n_spikes``-th
            singular value is negligible relative to the leading one.
    """
    if n_spikes < 1:
        raise ValueError("n_spikes must be >= 1")
    k_max = signal.k_max
    if k_max % 2 != 0 or k_max < 4 * n_spikes:
        raise ValueError(f"k_max must be even and >= 4*n_spikes, got {k_max}")
    half = k_max // 2
    y = np.asarray(signal.values)
    hankel = scipy.linalg.hankel(y[: half + 1], y[half:])
    if half + 1 <= _DENSE_SVD_LIMIT:
        u, s, _ = np.linalg.svd(hankel)
        u = u[:, :n_spikes]
        s = s[:n_spikes]
    else:
        # Deterministic start vector keeps the iterative path reproducible.
        v0 = np.ones(half + 1) / math.sqrt(half + 1)
        u, s, _ = scipy.sparse.linalg.svds(hankel, k=n_spikes, v0=v0, which="LM")
        order = np.argsort(s)[::-1]
        u, s = u[:, order], s[order]
    if require_full_rank and s[-1] < _RANK_RCOND * s[0]:
        raise RankDeficiency(
            f"singular value {n_spikes} is {s[-1]:.3e} vs leading {s[0]:.3e}"
        )
    u = _normalize_phases(u)
    rotation = np.linalg.pinv(u[:-1, :], rcond=_RANK_RCOND) @ u[1:, :]
    eigenvalues = np.linalg.eigvals(rotation)
    locations = np.sort((-np.angle(eigenvalues) / (2.0 * np.pi)) % 1.0)
    return EspritEstimate(
        locations=tuple(float(x) for x in locations),
        singular_values=tuple(float(x) for x in s),
    )


def matching_distance(a: list[float] | tuple[float, ...], b: list[float] | tuple[float, ...]) -> float:
    """Best-pairing bottleneck distance between equal-size position multisets.

    Minimum over pairings of the maximum wrap-around distance between matched
    points.  Brute-forces all pairings, so the size is capped at 10.
    """
    if len(a) != len(b):
        raise ValueError(f"size mismatch: {len(a)} vs {len(b)}")
    if len(a) > 10:
        raise ValueError("matching_distance is limited to sets of size <= 10")
    if not a:
        return 0.0
    best = math.inf
    for perm in itertools.permutations(range(len(b))):
        worst = max(torus_distance(a[i], b[perm[i]]) for i in range(len(a)))
        if worst < best:
            best = worst
    return best


def windows_from_esprit(estimate: EspritEstimate, eta: float) -> SpectralWindowSet:
    """Half-``eta`` neighborhoods of the estimated positions as spike windows.

    Windows of estimates closer than ``eta`` merge, which is sound: the merged
    arc still meets the true spike set whenever the recovery error is below
    ``eta / 2``.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    points = TorusIntervalSet.from_points(estimate.locations)
    return SpectralWindowSet(points.neighborhood(eta / 2.0), eta)


def esprit_error_bound(
    n_spikes: int, k_max: int, c_const: float, beta: float, noise: float
) -> float:
    """Guaranteed matching-distance ceiling for per-moment noise ``noise``.

    Valid when the noise ceiling of :func:`noise_admissibility_bound` holds and
    the scaled spike separation stays above ``2 * c_const / k_max``.
    """
    s, k, c = n_spikes, k_max, c_const
    lead = 40.0 * s * s / beta
    shape = math.sqrt(c**3 * (2.0 + k) / ((c - 1.0) ** 3 * k))
    slack = 1.0 - 2.0 * c * s / ((c - 1.0) * k)
    if slack <= 0:
        raise ValueError("k_max too small for this c_const and n_spikes")
    return lead * shape * noise / slack


def noise_admissibility_bound(n_spikes: int, k_max: int, c_const: float, beta: float) -> float:
    """Largest total perturbation (residual + sampling) the guarantee tolerates."""
    s, k, c = n_spikes, k_max, c_const
    inner = 1.0 - 2.0 * (c - 1.0) * s / (c * k)
    if inner <= 0:
        raise ValueError("k_max too small for this c_const and n_spikes")
    return c * beta / (8.0 * (c - 1.0) * math.sqrt(2.0 * s)) * math.sqrt(inner)


def default_c_const(k_max: int, delta_tilde: float) -> float:
    """Default rotation constant: modest, clamped inside ``(2, k_max*delta_tilde/2)``."""
    hi = k_max * delta_tilde / 2.0
    if hi <= 2.0:
        raise ValueError("k_max * delta_tilde / 2 must exceed 2")
    c = min(4.0, math.sqrt(2.0 * hi))
    return min(max(c, 2.0 + 1e-6), hi - 1e-6)


@dataclass(frozen=True)
class GappedParams:
    """Constants of one ESPRIT stage, validated against the admissibility bounds."""

    n_spikes: int
    k_max: int
    delta_tilde: float
    c_const: float
    eta: float
    alpha: float
    beta: float
    omega: float

    def __post_init__(self):
        s, k = self.n_spikes, self.k_max
        if k % 2 != 0 or k < 4 * s:
            raise ValueError("k_max must be even and >= 4*n_spikes")
        if k * self.delta_tilde < 4.0:
            raise ValueError("k_max must be at least 4 / delta_tilde")
        if not 2.0 < self.c_const < k * self.delta_tilde / 2.0:
            raise ValueError("c_const must lie in (2, k_max*delta_tilde/2)")
        ceiling = noise_admissibility_bound(s, k, self.c_const, self.beta)
        if self.omega + self.alpha > ceiling + 1e-12:
            raise ValueError(
                f"omega + alpha = {self.omega + self.alpha:.3e} exceeds the "
                f"admissible total perturbation {ceiling:.3e}"
            )
        window_need = 2.0 * esprit_error_bound(s, k, self.c_const, self.beta, self.omega + self.alpha)
        if self.eta <= window_need:
            raise ValueError(
                f"eta = {self.eta:.3e} does not dominate twice the recovery "
                f"bound {window_need:.3e}"
            )
