"""Finite disjoint unions of closed intervals on the real line and on the unit circle.

These sets carry the running estimates of the phase-estimation loop: real-line
sets for the continuous-time model, circle (mod-1) sets for the black-box
integer-power model.  All operations return canonical forms: components are
sorted, pairwise disjoint, and components that touch at an endpoint are merged.
Values are plain floats; a relative snap tolerance absorbs rounding introduced
by affine maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

#: Relative tolerance used when deciding whether two endpoints coincide.
SNAP_REL = 1e-15

#: Torus sets whose merged length is within this of 1 collapse to the full circle.
_FULL_TOL = 1e-14


def _snap(a: float, b: float) -> float:
    return SNAP_REL * max(1.0, abs(a), abs(b))


class AmbiguityError(Exception):
    """An aliased window admits zero or several consistent integer shifts.

    Signals a violated factor-selection precondition; the statistical layer
    treats this as a run failure, not a crash.
    """

    def __init__(self, window_index: int, candidates: Sequence[int]):
        self.window_index = window_index
        self.candidates = list(candidates)
        super().__init__(
            f"window {window_index}: {len(self.candidates)} consistent shifts "
            f"{self.candidates} (expected exactly 1)"
        )


def _canonical_real(pairs: Iterable[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    cleaned: list[tuple[float, float]] = []
    for lo, hi in pairs:
        lo, hi = float(lo), float(hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("interval endpoints must be finite")
        if hi < lo:
            if lo - hi <= _snap(lo, hi):
                lo = hi = 0.5 * (lo + hi)
            else:
                raise ValueError(f"interval [{lo}, {hi}] has hi < lo")
        cleaned.append((lo, hi))
    cleaned.sort()
    merged: list[list[float]] = []
    for lo, hi in cleaned:
        if merged and lo <= merged[-1][1] + _snap(lo, merged[-1][1]):
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return tuple((a, b) for a, b in merged)


@dataclass(frozen=True)
class IntervalSet:
    """Canonical disjoint union of closed intervals on the real line."""

    intervals: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "intervals", _canonical_real(self.intervals))

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @classmethod
    def from_points(cls, points: Iterable[float]) -> "IntervalSet":
        return cls(tuple((float(p), float(p)) for p in points))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def n_components(self) -> int:
        return len(self.intervals)

    def measure(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)

    def hull(self) -> tuple[float, float]:
        if self.is_empty:
            raise ValueError("empty set has no hull")
        return self.intervals[0][0], self.intervals[-1][1]

    def neighborhood(self, eta: float) -> "IntervalSet":
        """Inflate every component by ``eta`` on both sides."""
        if eta < 0:
            raise ValueError("eta must be nonnegative")
        return IntervalSet(tuple((lo - eta, hi + eta) for lo, hi in self.intervals))

    def scale_translate(self, c: float, d: float) -> "IntervalSet":
        """Image of the set under ``t -> c*t + d``; ``c`` must be nonzero."""
        if c == 0:
            raise ValueError("scale factor must be nonzero")
        out = []
        for lo, hi in self.intervals:
            a, b = c * lo + d, c * hi + d
            out.append((min(a, b), max(a, b)))
        return IntervalSet(tuple(out))

    def _intersects_pair(self, lo: float, hi: float) -> bool:
        for a, b in self.intervals:
            if lo <= b + _snap(lo, b) and a <= hi + _snap(a, hi):
                return True
        return False

    def intersects(self, other: "IntervalSet") -> bool:
        return any(self._intersects_pair(lo, hi) for lo, hi in other.intervals)

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        for a, b in self.intervals:
            for lo, hi in other.intervals:
                s, e = max(a, lo), min(b, hi)
                if s <= e + _snap(s, e):
                    out.append((min(s, e), max(s, e)))
        return IntervalSet(tuple(out))

    def contains(self, other: "IntervalSet", tol: float = 0.0) -> bool:
        return all(
            any(a - tol <= lo and hi <= b + tol for a, b in self.intervals)
            for lo, hi in other.intervals
        )

    def contains_point(self, x: float, tol: float = 0.0) -> bool:
        return any(lo - tol <= x <= hi + tol for lo, hi in self.intervals)

    def complement_within(self, lo: float, hi: float) -> "IntervalSet":
        """Closure of ``[lo, hi]`` minus this set."""
        gaps = []
        cursor = lo
        for a, b in self.intervals:
            if b < lo or a > hi:
                continue
            if a > cursor:
                gaps.append((cursor, min(a, hi)))
            cursor = max(cursor, b)
        if cursor < hi:
            gaps.append((cursor, hi))
        return IntervalSet(tuple(gaps))


def _canonical_torus(arcs: Iterable[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    segs: list[tuple[float, float]] = []
    for lo, length in arcs:
        lo, length = float(lo), float(length)
        if not (math.isfinite(lo) and math.isfinite(length)):
            raise ValueError("arc values must be finite")
        if length < 0:
            if length >= -_snap(lo, lo):
                length = 0.0
            else:
                raise ValueError(f"arc length {length} is negative")
        if length >= 1.0 - _FULL_TOL:
            return ((0.0, 1.0),)
        lo = lo % 1.0
        segs.append((lo, lo + length))
    if not segs:
        return ()
    segs.sort()
    merged: list[list[float]] = [list(segs[0])]
    for s, e in segs[1:]:
        if s <= merged[-1][1] + _snap(s, merged[-1][1]):
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    # Glue the tail of the last arc (which may pass 1) onto the leading arcs.
    while len(merged) > 1:
        wrap_end = merged[-1][1] - 1.0
        if wrap_end >= merged[0][0] - _snap(wrap_end, merged[0][0]):
            merged[-1][1] = max(merged[-1][1], merged[0][1] + 1.0)
            merged.pop(0)
        else:
            break
    if merged[-1][1] - merged[-1][0] >= 1.0 - _FULL_TOL:
        return ((0.0, 1.0),)
    out = sorted((s % 1.0, e - s) for s, e in merged)
    return tuple(out)


@dataclass(frozen=True)
class TorusIntervalSet:
    """Canonical disjoint union of closed arcs on the circle R/Z.

    Each arc is stored as ``(lo, length)`` with ``lo`` in ``[0, 1)``; an arc may
    wrap through 1.  The full circle is the single arc ``(0.0, 1.0)``.
    """

    arcs: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "arcs", _canonical_torus(self.arcs))

    @classmethod
    def empty(cls) -> "TorusIntervalSet":
        return cls(())

    @classmethod
    def full(cls) -> "TorusIntervalSet":
        return cls(((0.0, 1.0),))

    @classmethod
    def from_points(cls, points: Iterable[float]) -> "TorusIntervalSet":
        return cls(tuple((float(p) % 1.0, 0.0) for p in points))

    @property
    def is_empty(self) -> bool:
        return not self.arcs

    @property
    def is_full(self) -> bool:
        return self.arcs == ((0.0, 1.0),)

    @property
    def n_components(self) -> int:
        return len(self.arcs)

    def measure(self) -> float:
        return min(1.0, sum(length for _, length in self.arcs))

    def to_fundamental(self) -> list[tuple[float, float]]:
        """Closed segments within ``[0, 1]``; wrapping arcs are split at the seam."""
        segs = []
        for lo, length in self.arcs:
            hi = lo + length
            if hi <= 1.0:
                segs.append((lo, hi))
            else:
                segs.append((lo, 1.0))
                segs.append((0.0, hi - 1.0))
        return sorted(segs)

    def neighborhood(self, eta: float) -> "TorusIntervalSet":
        """Inflate every arc by ``eta``; collapses to the full circle when covered."""
        if eta < 0:
            raise ValueError("eta must be nonnegative")
        return TorusIntervalSet(tuple((lo - eta, length + 2 * eta) for lo, length in self.arcs))

    def scale_translate(self, c: float, d: float) -> "TorusIntervalSet":
        """Image under ``t -> c*t + d`` of lifted arcs, reduced mod 1."""
        if c == 0:
            raise ValueError("scale factor must be nonzero")
        out = []
        for lo, length in self.arcs:
            a, b = c * lo + d, c * (lo + length) + d
            out.append((min(a, b), abs(b - a)))
        return TorusIntervalSet(tuple(out))

    def translate(self, d: float) -> "TorusIntervalSet":
        return self.scale_translate(1.0, d)

    def _intersects_pair(self, lo: float, width: float) -> bool:
        if self.is_full:
            return True
        lo = lo % 1.0
        hi = lo + width
        for a, b in self.to_fundamental():
            for shift in (-1.0, 0.0, 1.0):
                s, e = a + shift, b + shift
                if lo <= e + _snap(lo, e) and s <= hi + _snap(s, hi):
                    return True
        return False

    def intersects(self, other: "TorusIntervalSet") -> bool:
        return any(self._intersects_pair(lo, length) for lo, length in other.arcs)

    def intersection(self, other: "TorusIntervalSet") -> "TorusIntervalSet":
        if self.is_full:
            return other
        if other.is_full:
            return self
        out = []
        mine = self.to_fundamental()
        for a, b in other.to_fundamental():
            for s, e in mine:
                lo, hi = max(a, s), min(b, e)
                if lo <= hi + _snap(lo, hi):
                    lo, hi = min(lo, hi), max(lo, hi)
                    out.append((lo, hi - lo))
        return TorusIntervalSet(tuple(out))

    def contains(self, other: "TorusIntervalSet", tol: float = 0.0) -> bool:
        if self.is_full:
            return True
        if other.is_full:
            return False
        mine = self.to_fundamental()
        for a, b in other.to_fundamental():
            covered = False
            for s, e in mine:
                for shift in (-1.0, 0.0, 1.0):
                    if s + shift - tol <= a and b <= e + shift + tol:
                        covered = True
                        break
                if covered:
                    break
            # A segment cut at the seam may be covered by two arcs of self only
            # jointly; fall back to a measure check for that rare case.
            if not covered:
                part = TorusIntervalSet(((a, b - a),))
                inter = self.intersection(part)
                if inter.measure() < (b - a) - max(tol, 4 * _snap(a, b)):
                    return False
        return True

    def contains_point(self, x: float, tol: float = 0.0) -> bool:
        return self._intersects_pair((x % 1.0) - tol, 2 * tol) if tol else self._intersects_pair(x % 1.0, 0.0)


SetOnLineOrCircle = Union[IntervalSet, TorusIntervalSet]


def measure(s: SetOnLineOrCircle) -> float:
    return s.measure()


def neighborhood(s: SetOnLineOrCircle, eta: float) -> SetOnLineOrCircle:
    return s.neighborhood(eta)


def scale_translate(s: SetOnLineOrCircle, c: float, d: float) -> SetOnLineOrCircle:
    return s.scale_translate(c, d)


def intersects(a: SetOnLineOrCircle, b: SetOnLineOrCircle) -> bool:
    return a.intersects(b)


def contains(a: SetOnLineOrCircle, b: SetOnLineOrCircle) -> bool:
    return a.contains(b)


def count_components(s: SetOnLineOrCircle) -> int:
    return s.n_components


def torus_distance(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def unfold_candidates(
    windows: Sequence[tuple[float, float]],
    factor: float,
    prior: SetOnLineOrCircle,
) -> list[tuple[SetOnLineOrCircle, int]]:
    """Resolve the aliasing of scaled-down windows against the previous estimate.

    ``windows`` are closed intervals ``(lo, hi)`` of width below ``1/factor``
    (lifted representatives for the circle case).  For each window this
    enumerates the integer shifts ``q`` for which ``window + q/factor`` meets
    ``prior`` and requires the shift to be unique.  On the circle ``factor``
    must be a whole number and shifts are taken mod 1.

    Returns one ``(shifted_window, q)`` pair per input window, in order.

    Raises:
        AmbiguityError: some window admits zero or at least two viable shifts.
    """
    if prior.is_empty:
        raise ValueError("prior estimate must be nonempty")
    out: list[tuple[SetOnLineOrCircle, int]] = []
    if isinstance(prior, TorusIntervalSet):
        m = round(factor)
        if m < 1 or abs(factor - m) > 1e-9:
            raise ValueError(f"circle unfolding needs a whole-number factor, got {factor}")
        for idx, (lo, hi) in enumerate(windows):
            width = hi - lo
            if width >= 1.0 / m:
                raise ValueError(f"window {idx} is too wide ({width}) for factor {m}")
            hits = [q for q in range(m) if prior._intersects_pair(lo + q / m, width)]
            if len(hits) != 1:
                raise AmbiguityError(idx, hits)
            q = hits[0]
            out.append((TorusIntervalSet((((lo + q / m) % 1.0, width),)), q))
    else:
        hull_lo, hull_hi = prior.hull()
        for idx, (lo, hi) in enumerate(windows):
            if hi - lo >= 1.0 / factor:
                raise ValueError(f"window {idx} is too wide ({hi - lo}) for factor {factor}")
            q_lo = math.floor(factor * (hull_lo - hi)) - 1
            q_hi = math.ceil(factor * (hull_hi - lo)) + 1
            hits = [q for q in range(q_lo, q_hi + 1) if prior._intersects_pair(lo + q / factor, hi + q / factor)]
            if len(hits) != 1:
                raise AmbiguityError(idx, hits)
            q = hits[0]
            out.append((IntervalSet(((lo + q / factor, hi + q / factor),)), q))
    return out
