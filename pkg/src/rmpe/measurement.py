"""Classical simulation of the single-ancilla interferometric measurement channel.

A spectrum instance is a finite point measure on the circle: a few dominant
spikes that each carry at least ``beta`` of the mass, plus an arbitrary
residual of total mass at most ``omega``.  Probing the unitary at time ``t``
yields the moment ``sum_j w_j * exp(-2*pi*i * phase_j * t)``; the ancilla
measurement converts its real and imaginary parts into biased coin flips, which
we aggregate with exact binomial draws (or an optional per-shot loop used for
cross-validation).

Randomness is split deterministically: ``substream(seed, *key)`` appends the
key to the seed's spawn key, so a run derives its model stream from key
``(0,)`` and the measurement stream of step ``ell`` from key ``(1, ell)``, with
channel indices 0 (real) and 1 (imaginary) appended inside ``sample_signal``.
Identical seeds therefore reproduce results bit for bit, serially or in
parallel across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .intervals import torus_distance

_WEIGHT_TOL = 1e-9

SeedLike = Union[int, np.random.SeedSequence]


def substream(seed: SeedLike, *key: int) -> np.random.SeedSequence:
    """Child seed sequence obtained by appending ``key`` to the spawn key."""
    if isinstance(seed, np.random.SeedSequence):
        base = tuple(seed.spawn_key)
        return np.random.SeedSequence(seed.entropy, spawn_key=base + key)
    return np.random.SeedSequence(int(seed), spawn_key=key)


def generator(seed: SeedLike, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(substream(seed, *key)))


@dataclass(frozen=True)
class SpectrumModel:
    """Ground-truth point spectrum with dominant and residual spikes.

    ``dominant`` and ``residual`` are ``(phase, weight)`` pairs with phases in
    ``[0, 1)``.  ``beta`` lower-bounds every dominant weight, ``omega``
    upper-bounds the total residual mass (``omega < beta``), and ``delta`` is
    the declared minimum wrap-around separation of the dominant phases
    (0 when no separation is assumed).
    """

    dominant: tuple[tuple[float, float], ...]
    residual: tuple[tuple[float, float], ...] = ()
    beta: float = 0.0
    omega: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self, "dominant", tuple((float(p), float(w)) for p, w in self.dominant)
        )
        object.__setattr__(
            self, "residual", tuple((float(p), float(w)) for p, w in self.residual)
        )
        if not self.dominant:
            raise ValueError("at least one dominant spike is required")
        for p, w in self.dominant + self.residual:
            if not 0.0 <= p < 1.0:
                raise ValueError(f"phase {p} outside [0, 1)")
            if w < 0.0:
                raise ValueError(f"negative weight {w}")
        total = sum(w for _, w in self.dominant) + sum(w for _, w in self.residual)
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"weights sum to {total}, expected 1")
        if not 0.0 <= self.omega < self.beta <= 1.0:
            raise ValueError(
                f"residual bound must satisfy 0 <= omega < beta <= 1, "
                f"got omega={self.omega}, beta={self.beta}"
            )
        if min(w for _, w in self.dominant) < self.beta - _WEIGHT_TOL:
            raise ValueError("a dominant weight falls below beta")
        if sum(w for _, w in self.residual) > self.omega + _WEIGHT_TOL:
            raise ValueError("residual mass exceeds omega")
        if self.delta < 0.0:
            raise ValueError("delta must be nonnegative")
        if self.delta > 0.0 and self.n_dominant > 1:
            if self.wrap_gap() < self.delta - _WEIGHT_TOL:
                raise ValueError("dominant phases violate the declared gap delta")

    @property
    def n_dominant(self) -> int:
        return len(self.dominant)

    @property
    def phases(self) -> tuple[float, ...]:
        return tuple(p for p, _ in self.dominant)

    @property
    def residual_mass(self) -> float:
        return sum(w for _, w in self.residual)

    def folded_phases(self, scale: float) -> tuple[float, ...]:
        """Dominant phases of the time-``scale`` power: ``scale*phase mod 1``."""
        return tuple((p * scale) % 1.0 for p in self.phases)

    def wrap_gap(self, scale: float = 1.0) -> float:
        """Minimum pairwise wrap-around separation of the scaled dominant phases."""
        pts = self.folded_phases(scale)
        if len(pts) < 2:
            return math.inf
        return min(
            torus_distance(pts[i], pts[j])
            for i in range(len(pts))
            for j in range(i + 1, len(pts))
        )

    def rescaled(self, factor: float) -> "SpectrumModel":
        """Model with every phase multiplied by ``factor`` in ``(0, 1]``.

        Used to pull declared spectra into a proper subinterval of ``[0, 1)``
        in the continuous-time driver.  The declared gap scales by ``factor``,
        which is a valid (conservative) bound for the mapped phases.
        """
        if not 0.0 < factor <= 1.0:
            raise ValueError("rescale factor must be in (0, 1]")
        return SpectrumModel(
            dominant=tuple((p * factor, w) for p, w in self.dominant),
            residual=tuple((p * factor, w) for p, w in self.residual),
            beta=self.beta,
            omega=self.omega,
            delta=self.delta * factor,
        )

    def to_dict(self) -> dict:
        return {
            "dominant": [[p, w] for p, w in self.dominant],
            "residual": [[p, w] for p, w in self.residual],
            "beta": self.beta,
            "omega": self.omega,
            "delta": self.delta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpectrumModel":
        return cls(
            dominant=tuple((p, w) for p, w in data["dominant"]),
            residual=tuple((p, w) for p, w in data.get("residual", [])),
            beta=data["beta"],
            omega=data["omega"],
            delta=data.get("delta", 0.0),
        )


def exact_moment(model: SpectrumModel, t: float, *, phase_sign: int = -1) -> complex:
    """Noise-free moment ``sum_j w_j * exp(phase_sign * 2*pi*i * phase_j * t)``."""
    return complex(exact_moments(model, np.array([t]), phase_sign=phase_sign)[0])


def exact_moments(
    model: SpectrumModel, times: np.ndarray, *, phase_sign: int = -1
) -> np.ndarray:
    if phase_sign not in (-1, 1):
        raise ValueError("phase_sign must be +1 or -1")
    spikes = model.dominant + model.residual
    phases = np.array([p for p, _ in spikes])
    weights = np.array([w for _, w in spikes])
    ang = phase_sign * 2.0 * np.pi * np.multiply.outer(np.asarray(times, dtype=float), phases)
    return np.exp(1j * ang) @ weights.astype(complex)


@dataclass(frozen=True)
class MomentSignal:
    """Averaged measurement record ``y(k)`` for ``k = 0..k_max`` at one amplification.

    ``values[k]`` is the complex mean of ``samples_per_k`` single-shot outcomes
    (half on the real channel, half on the imaginary channel) of the moment at
    time ``amplification * k``.  The record extends to negative indices by
    conjugation.
    """

    amplification: float
    k_max: int
    values: np.ndarray
    alpha_target: float = 0.0
    samples_per_k: int = 0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.k_max + 1,):
            raise ValueError(f"expected {self.k_max + 1} values, got {vals.shape}")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def at(self, k: int) -> complex:
        """Value at integer index ``k``; negative indices conjugate."""
        if abs(k) > self.k_max:
            raise IndexError(f"|k|={abs(k)} exceeds k_max={self.k_max}")
        return complex(self.values[k]) if k >= 0 else complex(np.conj(self.values[-k]))


def hoeffding_repetitions(alpha: float, rho: float, k_max: int, n_steps: int) -> int:
    """Per-moment shot count making all deviations stay below ``alpha``.

    Sized so that, by a Hoeffding bound united over ``n_steps`` loop steps and
    ``k_max + 1`` probe times, every averaged value stays within ``alpha`` of
    its mean with probability at least ``1 - rho``.  Always even.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must be in (0, 1)")
    if n_steps < 1 or k_max < 0:
        raise ValueError("n_steps must be >= 1 and k_max >= 0")
    inner = (4.0 / alpha**2) * (
        math.log(4.0 / rho) + math.log(n_steps) + math.log(k_max + 1)
    )
    return 2 * math.ceil(inner)


def sample_signal(
    model: SpectrumModel,
    amplification: float,
    k_max: int,
    samples_per_k: int,
    seed: SeedLike,
    *,
    alpha_target: float = 0.0,
    sampling: str = "binomial",
    integer_powers: bool = False,
    phase_sign: int = -1,
) -> MomentSignal:
    """Simulate the averaged measurement record at one amplification level.

    For every ``k`` the real and imaginary channels each receive
    ``samples_per_k / 2`` one-bit shots whose success probabilities are
    ``(1 + Re m)/2`` and ``(1 + Im m)/2`` for the exact moment ``m`` at time
    ``amplification * k``; ``k = 0`` is sampled like any other index so the
    noise model stays uniform.  ``sampling="binomial"`` draws one binomial
    count per channel and index; ``sampling="bernoulli"`` loops over shots and
    exists to cross-check the aggregated path.
    """
    if samples_per_k < 2 or samples_per_k % 2 != 0:
        raise ValueError("samples_per_k must be an even number >= 2")
    if sampling not in ("binomial", "bernoulli"):
        raise ValueError(f"unknown sampling mode {sampling!r}")
    if amplification < 0:
        raise ValueError("amplification must be nonnegative")
    times = amplification * np.arange(k_max + 1, dtype=float)
    if integer_powers:
        if np.max(np.abs(times - np.round(times))) > 1e-9:
            raise ValueError("integer-power model requires whole-number probe times")
        times = np.round(times)
    moments = exact_moments(model, times, phase_sign=phase_sign)
    n_half = samples_per_k // 2
    p_re = np.clip((1.0 + moments.real) / 2.0, 0.0, 1.0)
    p_im = np.clip((1.0 + moments.imag) / 2.0, 0.0, 1.0)
    means = []
    for channel, probs in enumerate((p_re, p_im)):
        rng = generator(seed, channel)
        if sampling == "binomial":
            counts = rng.binomial(n_half, probs)
        else:
            counts = np.array(
                [int(np.sum(rng.random(n_half) < p)) for p in probs], dtype=np.int64
            )
        means.append(2.0 * counts / n_half - 1.0)
    values = means[0] + 1j * means[1]
    return MomentSignal(
        amplification=float(amplification),
        k_max=int(k_max),
        values=values,
        alpha_target=float(alpha_target),
        samples_per_k=int(samples_per_k),
    )


def random_model(
    n_spikes: int,
    beta: float,
    omega: float,
    delta: float,
    rng: np.random.Generator,
    *,
    residual_mode: str = "uniform",
    n_residual: int = 4,
    cluster_scale: float = 1e-3,
    max_tries: int = 10**5,
) -> SpectrumModel:
    """Draw a random instance honoring the declared bounds.

    Dominant phases are uniform, rejection-sampled until every pairwise
    wrap-around separation reaches ``delta``.  Dominant weights are ``beta``
    plus a symmetric random split of the slack left after reserving the
    residual mass.  The residual carries exactly ``omega`` of mass (the
    adversarial extreme) spread over ``n_residual`` spikes, placed uniformly,
    clustered next to dominant spikes, or omitted entirely.
    """
    if residual_mode not in ("uniform", "clustered", "none"):
        raise ValueError(f"unknown residual mode {residual_mode!r}")
    res_mass = 0.0 if residual_mode == "none" else float(omega)
    if n_spikes * beta + res_mass > 1.0 + _WEIGHT_TOL:
        raise ValueError(
            f"infeasible instance: {n_spikes} spikes at weight >= {beta} plus "
            f"residual {res_mass} exceed total mass 1"
        )
    for _ in range(max_tries):
        phases = np.sort(rng.random(n_spikes))
        ok = all(
            torus_distance(phases[i], phases[j]) >= delta
            for i in range(n_spikes)
            for j in range(i + 1, n_spikes)
        )
        if ok:
            break
    else:
        raise ValueError(f"could not place {n_spikes} phases at separation {delta}")
    slack = max(0.0, 1.0 - res_mass - n_spikes * beta)
    split = rng.gamma(1.0, size=n_spikes)
    weights = beta + slack * split / split.sum()
    weights *= (1.0 - res_mass) / weights.sum()  # absorb rounding
    residual: list[tuple[float, float]] = []
    if res_mass > 0.0 and n_residual > 0:
        if residual_mode == "uniform":
            res_phases = rng.random(n_residual)
        else:
            anchors = phases[rng.integers(0, n_spikes, size=n_residual)]
            res_phases = (anchors + cluster_scale * rng.standard_normal(n_residual)) % 1.0
        res_split = rng.gamma(1.0, size=n_residual)
        res_weights = res_mass * res_split / res_split.sum()
        residual = list(zip(res_phases.tolist(), res_weights.tolist()))
    return SpectrumModel(
        dominant=tuple(zip(phases.tolist(), weights.tolist())),
        residual=tuple(residual),
        beta=beta,
        omega=omega,
        delta=delta,
    )
