"""Gap-free spike localization from noisy moments via a Gaussian-filtered level set.

The magnitude of the Gaussian-tapered trigonometric sum of the measured
moments is compared against a fixed threshold; the superlevel set hugs the
folded spike positions to within ``tau / k_max`` without any separation
assumption.  Components of the level set that are separated by less than
``tau / k_max`` are then bridged, which yields at most one window per spike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft

from .intervals import TorusIntervalSet
from .measurement import MomentSignal

#: Individual taper terms below this are dropped from the normalization sum.
GAUSS_TAIL = 1e-18

#: Hard cap on the scan-grid size used by :func:`level_set`.
MAX_GRID = 2**24

_FFT_WORKERS = 2


class EmptyLevelSet(Exception):
    """No grid point exceeded the detection threshold: noise outside the admissible regime."""


class TooManyWindows(Exception):
    """The merged level set has more components than spikes: a noise assumption failed."""


@dataclass(frozen=True)
class GaplessParams:
    """Derived constants of the filtered level-set detector.

    ``sigma`` is the Gaussian taper width, ``tau = sigma**2`` the resolution
    constant, ``phi_s`` the full taper normalization sum, and ``threshold``
    the detection level ``(6*beta + 5*omega)/11 * phi_s``.
    """

    beta: float
    omega: float
    k_max: int
    sigma: float
    tau: float
    phi_s: float
    threshold: float


def gapless_params(beta: float, omega: float, k_max: int) -> GaplessParams:
    """Compute the detector constants for mass bounds ``beta > omega``."""
    if not 0.0 <= omega < beta <= 1.0:
        raise ValueError("need 0 <= omega < beta <= 1")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    sigma = math.sqrt(math.log(12.0 / (beta - omega)) / math.pi)
    tau = sigma * sigma
    # Sum the taper over all integers until terms drop below GAUSS_TAIL.
    reach = k_max + math.ceil(3.0 * k_max / sigma)
    while math.exp(-math.pi * ((reach + 1) * sigma / k_max) ** 2) >= GAUSS_TAIL:
        reach += k_max
    ks = np.arange(-reach, reach + 1, dtype=float)
    phi_s = float(np.exp(-math.pi * (ks * sigma / k_max) ** 2).sum())
    threshold = (6.0 * beta + 5.0 * omega) / 11.0 * phi_s
    return GaplessParams(
        beta=beta,
        omega=omega,
        k_max=int(k_max),
        sigma=sigma,
        tau=tau,
        phi_s=phi_s,
        threshold=threshold,
    )


def gauss_taper(params: GaplessParams, k: np.ndarray | int) -> np.ndarray | float:
    """Taper weight ``exp(-pi * (k * sigma / k_max)**2)``."""
    k = np.asarray(k, dtype=float)
    out = np.exp(-math.pi * (k * params.sigma / params.k_max) ** 2)
    return out if out.ndim else float(out)


def _coefficients(signal: MomentSignal, params: GaplessParams) -> np.ndarray:
    if signal.k_max != params.k_max:
        raise ValueError("signal and params disagree on k_max")
    ks = np.arange(params.k_max + 1)
    return np.asarray(signal.values) * gauss_taper(params, ks)


def filtered_magnitude(
    signal: MomentSignal, params: GaplessParams, x: float | np.ndarray
) -> float | np.ndarray:
    """Magnitude of the tapered moment sum at position(s) ``x`` on the circle.

    Uses the conjugate extension of the record to negative indices, so the sum
    equals ``c0 + 2*Re(sum_{k>=1} c_k e^{2 pi i k x})`` with complex ``c0``.
    """
    coef = _coefficients(signal, params)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    ks = np.arange(1, params.k_max + 1)
    out = np.empty(xs.shape, dtype=float)
    # Chunk to keep the (len(x), k_max) phase table at a modest size.
    chunk = max(1, int(2**22 // max(1, params.k_max)))
    for start in range(0, len(xs), chunk):
        part = xs[start : start + chunk]
        phases = np.exp(2j * np.pi * np.outer(part, ks))
        real_part = coef[0].real + 2.0 * (phases @ coef[1:]).real
        out[start : start + chunk] = np.hypot(real_part, coef[0].imag)
    return float(out[0]) if np.isscalar(x) or np.asarray(x).ndim == 0 else out


def _grid_magnitude(signal: MomentSignal, params: GaplessParams, n_grid: int) -> np.ndarray:
    """Tapered-sum magnitude on the uniform grid ``j / n_grid`` via a half-spectrum FFT.

    The coefficient sequence is conjugate-symmetric apart from the imaginary
    part of the k=0 term, so the real part comes from one inverse real FFT and
    the magnitude adds the constant imaginary offset back in quadrature.
    """
    coef = _coefficients(signal, params)
    if params.k_max + 1 > n_grid // 2:
        raise ValueError("grid too coarse for the number of moments")
    spectrum = np.zeros(n_grid // 2 + 1, dtype=complex)
    spectrum[0] = coef[0].real
    spectrum[1 : params.k_max + 1] = coef[1:]
    real_part = _fft.irfft(spectrum, n=n_grid, workers=_FFT_WORKERS) * n_grid
    return np.hypot(real_part, coef[0].imag)


def _grid_size(params: GaplessParams) -> int:
    raw = min(MAX_GRID, math.ceil(64.0 * params.k_max**2 / params.tau))
    return _fft.next_fast_len(raw, real=True)


def _refine_edge(
    value,
    threshold: float,
    below: float,
    above: float,
    tol: float,
) -> float:
    """Bisect the threshold crossing bracketed by ``below``/``above`` positions.

    Returns the refined abscissa on the above-threshold side, so real-line
    containment of every detected point is preserved.
    """
    while abs(above - below) > tol:
        mid = 0.5 * (below + above)
        if value(mid) > threshold:
            above = mid
        else:
            below = mid
    return above


def level_set(signal: MomentSignal, params: GaplessParams) -> TorusIntervalSet:
    """Superlevel set of the filtered magnitude above the detection threshold.

    Scans a uniform grid sized so no crossing of the (Lipschitz) magnitude can
    slip between samples, then refines each boundary to an abscissa tolerance
    of ``tau / (1000 * k_max)`` by bisection.  Every grid point that exceeded
    the threshold lies inside the returned set.

    Raises:
        EmptyLevelSet: nothing exceeded the threshold.
    """
    if params.k_max < 3.0 * params.tau:
        raise ValueError("k_max must be at least 3 * tau")
    n = _grid_size(params)
    mag = _grid_magnitude(signal, params, n)
    above = mag > params.threshold
    if not above.any():
        raise EmptyLevelSet("no grid point exceeds the detection threshold")
    if above.all():
        return TorusIntervalSet.full()
    starts = np.flatnonzero(above & ~np.roll(above, 1))
    ends = np.flatnonzero(above & ~np.roll(above, -1))
    # Pair each run's start with its end; a wrapping run pairs the last start
    # with the first end.
    if ends[0] < starts[0]:
        ends = np.roll(ends, -1)
    tol = params.tau / (1000.0 * params.k_max)
    spacing = 1.0 / n

    def value(x: float) -> float:
        return filtered_magnitude(signal, params, float(x))

    arcs = []
    for s, e in zip(starts.tolist(), ends.tolist()):
        left = s * spacing
        right = e * spacing
        if right < left:
            right += 1.0  # wrapping run, lift
        if spacing > tol:
            left = _refine_edge(value, params.threshold, left - spacing, left, tol)
            right = _refine_edge(value, params.threshold, right + spacing, right, tol)
        arcs.append((left % 1.0, right - left))
    return TorusIntervalSet(tuple(arcs))


@dataclass(frozen=True)
class SpectralWindowSet:
    """Disjoint arcs, each expected to contain at least one folded spike.

    A valid window set has at most as many arcs as spikes, total length at
    most ``n_spikes * eta``, and every arc meets the folded spike set; the
    test suite checks these against the simulator's ground truth.
    """

    windows: TorusIntervalSet
    eta: float


def build_windows(
    level: TorusIntervalSet,
    params: GaplessParams,
    eta: float,
    max_windows: int,
) -> SpectralWindowSet:
    """Close the level set and bridge sub-resolution gaps into spike windows.

    Gaps narrower than ``tau / k_max`` (wrap-aware) cannot separate distinct
    spikes at this resolution and are absorbed, so each resulting window
    contains at least one spike whenever the level set was valid.

    Raises:
        TooManyWindows: more than ``max_windows`` components survive merging.
    """
    gap_thr = params.tau / params.k_max
    if eta <= 3.0 * gap_thr:
        raise ValueError("eta must exceed 3 * tau / k_max")
    if level.is_empty:
        raise ValueError("level set must be nonempty")
    if level.is_full:
        return SpectralWindowSet(level, eta)
    segs = [(lo, lo + length) for lo, length in level.arcs]
    merged = [list(segs[0])]
    for s, e in segs[1:]:
        if s - merged[-1][1] < gap_thr:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    # Wrap-around gap between the last and first components.
    if len(merged) > 1 and (merged[0][0] + 1.0) - merged[-1][1] < gap_thr:
        merged[-1][1] = max(merged[-1][1], merged[0][1] + 1.0)
        merged.pop(0)
    if len(merged) == 1 and (merged[0][0] + 1.0) - merged[0][1] < gap_thr:
        return SpectralWindowSet(TorusIntervalSet.full(), eta)
    windows = TorusIntervalSet(tuple((s % 1.0, e - s) for s, e in merged))
    if windows.n_components > max_windows:
        raise TooManyWindows(
            f"{windows.n_components} windows remain after merging, "
            f"at most {max_windows} expected"
        )
    return SpectralWindowSet(windows, eta)
