"""Adaptive estimation loop: parameter calculators, six driver variants, accounting.

Every variant runs the same outer loop.  Starting from a coarse prior (the
interval ``[0, 0.9]`` for the continuous-time model after rescaling, the full
circle for the integer-power model), each step measures moments of the
``scale``-th power of the unitary, localizes the folded spikes with either the
gap-free level-set detector or ESPRIT, scales the windows down, and unfolds
them against the previous estimate, whose aliasing the chosen amplifying
factor has made unambiguous.  The loop stops once ``eta / scale`` reaches the
target precision.

The hybrid variants run the gap-free detector while the accumulated scale is
at most ``m_switch`` (the burn-in, which enlarges the effective separation)
and ESPRIT afterwards.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, asdict
from typing import Optional

from . import esprit as _esprit
from . import factors as _factors
from . import gapless as _gapless
from .intervals import (
    AmbiguityError,
    IntervalSet,
    TorusIntervalSet,
    unfold_candidates,
)
from .measurement import (
    SpectrumModel,
    hoeffding_repetitions,
    sample_signal,
    substream,
)

#: Continuous-time spectra are pulled into [0, 0.9] by this factor.
REAL_PRESCALE = 0.9

#: Endpoint slack for ground-truth containment checks (bisection refinement scale).
CHECK_TOL = 1e-9


class InfeasibleParams(Exception):
    """The requested bounds admit no valid parameter assignment."""


class Variant(str, enum.Enum):
    GAPLESS_REAL = "gapless-real"
    GAPLESS_INT = "gapless-int"
    GAPPED_REAL = "gapped-real"
    GAPPED_INT = "gapped-int"
    HYBRID_REAL = "hybrid-real"
    HYBRID_INT = "hybrid-int"

    @property
    def integer_power(self) -> bool:
        return self in (Variant.GAPLESS_INT, Variant.GAPPED_INT, Variant.HYBRID_INT)

    @property
    def has_gapless_stage(self) -> bool:
        return self in (
            Variant.GAPLESS_REAL,
            Variant.GAPLESS_INT,
            Variant.HYBRID_REAL,
            Variant.HYBRID_INT,
        )

    @property
    def has_esprit_stage(self) -> bool:
        return self in (
            Variant.GAPPED_REAL,
            Variant.GAPPED_INT,
            Variant.HYBRID_REAL,
            Variant.HYBRID_INT,
        )


@dataclass(frozen=True)
class RunParams:
    """Fully derived constants for one driver variant.

    The ``*_gapless`` group configures the level-set stage, the ``*_esprit``
    group the ESPRIT stage; pure variants leave the unused group as ``None``.
    ``epsilon_internal`` is the target precision in rescaled coordinates and
    ``n_steps_bound`` the step-count term entering the repetition formula.
    """

    variant: Variant
    epsilon: float
    rho: float
    n_spikes: int
    beta: float
    omega: float
    delta: float
    eta: float
    tau: float
    prescale: float
    epsilon_internal: float
    n_steps_bound: int
    k_gapless: Optional[int] = None
    alpha_gapless: Optional[float] = None
    reps_gapless: Optional[int] = None
    k_esprit: Optional[int] = None
    alpha_esprit: Optional[float] = None
    reps_esprit: Optional[int] = None
    delta_tilde: Optional[float] = None
    m_switch: Optional[float] = None
    c_const: Optional[float] = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["variant"] = self.variant.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunParams":
        data = dict(data)
        data["variant"] = Variant(data["variant"])
        return cls(**data)


def _even_at_least(value: float, floor: int) -> int:
    k = max(floor, math.floor(value) + 1)
    return k if k % 2 == 0 else k + 1


def _gapless_k(tau: float, eta: float) -> int:
    k = math.ceil(3.0 * tau / eta)
    if 3.0 * tau / k >= eta:
        k += 1
    return k


def _steps_bound(eta: float, epsilon: float) -> int:
    if eta <= epsilon:
        return 1
    return math.ceil(math.log2(eta / epsilon)) + 1


def compute_params(
    variant: Variant | str,
    epsilon: float,
    rho: float,
    n_spikes: int,
    beta: float,
    omega: float,
    delta: float = 0.0,
    *,
    eta_override: Optional[float] = None,
    k_override: Optional[int] = None,
    c_override: Optional[float] = None,
    alpha_override: Optional[float] = None,
) -> RunParams:
    """Derive every loop constant for the requested variant.

    Gapless variants take ``eta`` at its admissible cap, the record length
    from the resolution constant, and the noise budget just under one third of
    ``beta - omega``.  Gapped and hybrid variants pick the largest admissible
    effective separation, size the ESPRIT record from it, and place ``eta`` at
    twice the guaranteed-recovery window floor so the maximum depth inherits
    the residual bound as a prefactor (for ``omega = 0`` the window floor
    degenerates and ``eta`` sits at half its cap instead).  Overrides replace
    single quantities and are revalidated.

    Raises:
        InfeasibleParams: empty feasibility window, named in the message.
    """
    variant = Variant(variant)
    if not 0.0 <= omega < beta <= 1.0:
        raise InfeasibleParams(
            f"bounds must satisfy 0 <= omega < beta <= 1, got omega={omega}, beta={beta}"
        )
    if not 0.0 < epsilon < 1.0 or not 0.0 < rho < 1.0:
        raise InfeasibleParams("epsilon and rho must lie in (0, 1)")
    if n_spikes < 1:
        raise InfeasibleParams("n_spikes must be >= 1")
    if variant.has_esprit_stage and delta <= 0.0:
        raise InfeasibleParams(f"variant {variant.value} requires a positive gap delta")

    prescale = 1.0 if variant.integer_power else REAL_PRESCALE
    eps_int = epsilon * prescale
    delta_int = delta * prescale
    tau = math.log(12.0 / (beta - omega)) / math.pi
    s = n_spikes

    def gapless_alpha() -> float:
        if alpha_override is not None and variant in (
            Variant.GAPLESS_REAL,
            Variant.GAPLESS_INT,
        ):
            if not 0.0 < alpha_override < (beta - omega) / 3.0:
                raise InfeasibleParams(
                    f"alpha override {alpha_override} must lie in (0, (beta-omega)/3)"
                )
            return alpha_override
        return 0.99 * (beta - omega) / 3.0

    if variant in (Variant.GAPLESS_REAL, Variant.GAPLESS_INT):
        kind = "integer" if variant.integer_power else "real"
        cap = _factors.eta_cap(kind, s)
        eta = eta_override if eta_override is not None else cap
        if not 0.0 < eta <= cap:
            raise InfeasibleParams(f"eta must lie in (0, {cap}], got {eta}")
        k1 = k_override if k_override is not None else _gapless_k(tau, eta)
        if 3.0 * tau / k1 >= eta:
            raise InfeasibleParams(f"k_max {k1} is below the resolution floor 3*tau/eta")
        alpha1 = gapless_alpha()
        steps = _steps_bound(eta, eps_int)
        reps1 = hoeffding_repetitions(alpha1, rho, k1, steps)
        return RunParams(
            variant=variant,
            epsilon=epsilon,
            rho=rho,
            n_spikes=s,
            beta=beta,
            omega=omega,
            delta=delta,
            eta=eta,
            tau=tau,
            prescale=prescale,
            epsilon_internal=eps_int,
            n_steps_bound=steps,
            k_gapless=k1,
            alpha_gapless=alpha1,
            reps_gapless=reps1,
        )

    # Gapped and hybrid variants share the ESPRIT-stage construction.
    if variant.integer_power:
        pool = _factors.prime_pool(s)
        dt_cap = pool.bound  # 1 / (2 * p_a * p_b)
        eta_hi = _factors.eta_cap("gapped-int", s)
    else:
        dt_cap = 1.0 / (8.0 * s * (2.0 * s - 1.0))
        eta_hi = _factors.eta_cap("gapped-real", s)

    m_switch: Optional[float] = None
    if variant == Variant.HYBRID_REAL:
        delta_tilde = 0.999 * dt_cap
        m_switch = delta_tilde / delta_int
    elif variant == Variant.HYBRID_INT:
        switch = math.floor(0.999 * eta_hi / delta_int)
        if switch < 2:
            raise InfeasibleParams(
                f"gap delta = {delta} is too large for a hybrid burn-in: "
                f"2 * delta must stay below {eta_hi}"
            )
        m_switch = float(switch)
        delta_tilde = m_switch * delta_int
    else:
        delta_tilde = 0.999 * min(dt_cap, delta_int)

    k2 = k_override if k_override is not None else _even_at_least(4.0 / delta_tilde, 4 * s)
    if k2 % 2 != 0 or k2 < 4 * s or k2 * delta_tilde <= 4.0:
        raise InfeasibleParams(
            f"record length {k2} must be even, >= {4 * s} and above 4/delta_tilde"
        )
    c_const = c_override if c_override is not None else _esprit.default_c_const(k2, delta_tilde)
    if not 2.0 < c_const < k2 * delta_tilde / 2.0:
        raise InfeasibleParams(
            f"c_const {c_const} must lie in (2, {k2 * delta_tilde / 2.0})"
        )
    window_floor = 2.0 * _esprit.esprit_error_bound(s, k2, c_const, beta, omega)
    if window_floor >= eta_hi:
        raise InfeasibleParams(
            f"window feasibility is empty: the recovery floor "
            f"{window_floor:.3e} (from omega={omega}) is not below the cap "
            f"{eta_hi:.3e}; reduce omega relative to beta"
        )
    if eta_override is not None:
        eta = eta_override
        if not window_floor < eta < eta_hi:
            raise InfeasibleParams(
                f"eta override {eta} outside the window ({window_floor:.3e}, {eta_hi:.3e})"
            )
    elif omega > 0.0:
        # Proportional to the floor so the maximum depth inherits the
        # residual-mass prefactor; geometric fallback near the cap.
        eta = 2.0 * window_floor
        if eta >= eta_hi:
            eta = math.sqrt(window_floor * eta_hi)
    else:
        eta = eta_hi / 2.0
    alpha_ceiling = (
        min(
            _esprit.noise_admissibility_bound(s, k2, c_const, beta),
            eta / (2.0 * _esprit.esprit_error_bound(s, k2, c_const, beta, 1.0)),
        )
        - omega
    )
    if alpha_ceiling <= 0.0:
        raise InfeasibleParams(
            f"no admissible sampling accuracy: omega={omega} saturates the noise budget"
        )
    if alpha_override is not None:
        alpha2 = alpha_override
        if not 0.0 < alpha2 < alpha_ceiling:
            raise InfeasibleParams(
                f"alpha override {alpha2} must lie in (0, {alpha_ceiling:.3e})"
            )
    else:
        alpha2 = 0.99 * alpha_ceiling
    steps = _steps_bound(eta, eps_int)
    reps2 = hoeffding_repetitions(alpha2, rho, k2, steps)

    k1 = alpha1 = reps1 = None
    if variant in (Variant.HYBRID_REAL, Variant.HYBRID_INT):
        alpha1 = 0.99 * (beta - omega) / 3.0
        k1 = _gapless_k(tau, eta)
        reps1 = hoeffding_repetitions(alpha1, rho, k1, steps)

    return RunParams(
        variant=variant,
        epsilon=epsilon,
        rho=rho,
        n_spikes=s,
        beta=beta,
        omega=omega,
        delta=delta,
        eta=eta,
        tau=tau,
        prescale=prescale,
        epsilon_internal=eps_int,
        n_steps_bound=steps,
        k_gapless=k1,
        alpha_gapless=alpha1,
        reps_gapless=reps1,
        k_esprit=k2,
        alpha_esprit=alpha2,
        reps_esprit=reps2,
        delta_tilde=delta_tilde,
        m_switch=m_switch,
        c_const=c_const,
    )


@dataclass
class StepRecord:
    """One loop step: scale in effect, factor chosen, windows, and costs."""

    index: int
    scale: float
    factor: Optional[float]
    stage: str  # "gapless" or "esprit"
    k_max: int
    reps: int
    estimate: IntervalSet | TorusIntervalSet
    n_windows: int
    depth: float
    shots: int

    def to_dict(self) -> dict:
        est = (
            {"kind": "torus", "arcs": [list(a) for a in self.estimate.arcs]}
            if isinstance(self.estimate, TorusIntervalSet)
            else {"kind": "real", "intervals": [list(p) for p in self.estimate.intervals]}
        )
        return {
            "index": self.index,
            "scale": self.scale,
            "factor": self.factor,
            "stage": self.stage,
            "k_max": self.k_max,
            "reps": self.reps,
            "estimate": est,
            "n_windows": self.n_windows,
            "depth": self.depth,
            "shots": self.shots,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StepRecord":
        est = data["estimate"]
        estimate: IntervalSet | TorusIntervalSet
        if est["kind"] == "torus":
            estimate = TorusIntervalSet(tuple(tuple(a) for a in est["arcs"]))
        else:
            estimate = IntervalSet(tuple(tuple(p) for p in est["intervals"]))
        return cls(
            index=data["index"],
            scale=data["scale"],
            factor=data["factor"],
            stage=data["stage"],
            k_max=data["k_max"],
            reps=data["reps"],
            estimate=estimate,
            n_windows=data["n_windows"],
            depth=data["depth"],
            shots=data["shots"],
        )


_FAILURE_NAMES = {
    AmbiguityError: "ambiguous_unfolding",
    _factors.NoFeasibleFactor: "no_feasible_factor",
    _factors.NoFeasiblePrime: "no_feasible_prime",
    _gapless.EmptyLevelSet: "empty_level_set",
    _gapless.TooManyWindows: "too_many_windows",
    _esprit.RankDeficiency: "rank_deficiency",
}

_FAILURE_TYPES = tuple(_FAILURE_NAMES)


@dataclass
class RunTrace:
    """Complete record of one run: per-step estimates, costs, and the verdict.

    ``success`` means the final estimate sandwiches the true dominant phases:
    it contains all of them and stays inside their ``epsilon``-neighborhood.
    Estimates in ``steps`` live in rescaled coordinates; ``final_estimate`` is
    mapped back to the caller's coordinates.
    """

    variant: Variant
    seed: int
    params: RunParams
    model: SpectrumModel
    prescale: float
    steps: list[StepRecord] = field(default_factory=list)
    final_estimate: Optional[IntervalSet | TorusIntervalSet] = None
    t_max: float = 0.0
    t_total: float = 0.0
    total_shots: int = 0
    success: bool = False
    failure_reason: Optional[str] = None

    def to_dict(self) -> dict:
        final = None
        if isinstance(self.final_estimate, TorusIntervalSet):
            final = {"kind": "torus", "arcs": [list(a) for a in self.final_estimate.arcs]}
        elif isinstance(self.final_estimate, IntervalSet):
            final = {"kind": "real", "intervals": [list(p) for p in self.final_estimate.intervals]}
        return {
            "variant": self.variant.value,
            "seed": self.seed,
            "params": self.params.to_dict(),
            "model": self.model.to_dict(),
            "prescale": self.prescale,
            "steps": [s.to_dict() for s in self.steps],
            "final_estimate": final,
            "t_max": self.t_max,
            "t_total": self.t_total,
            "total_shots": self.total_shots,
            "success": self.success,
            "failure_reason": self.failure_reason,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunTrace":
        final = data.get("final_estimate")
        final_set: Optional[IntervalSet | TorusIntervalSet] = None
        if final is not None:
            if final["kind"] == "torus":
                final_set = TorusIntervalSet(tuple(tuple(a) for a in final["arcs"]))
            else:
                final_set = IntervalSet(tuple(tuple(p) for p in final["intervals"]))
        return cls(
            variant=Variant(data["variant"]),
            seed=data["seed"],
            params=RunParams.from_dict(data["params"]),
            model=SpectrumModel.from_dict(data["model"]),
            prescale=data["prescale"],
            steps=[StepRecord.from_dict(s) for s in data["steps"]],
            final_estimate=final_set,
            t_max=data["t_max"],
            t_total=data["t_total"],
            total_shots=data["total_shots"],
            success=data["success"],
            failure_reason=data.get("failure_reason"),
        )


def _check_model(model: SpectrumModel, params: RunParams) -> None:
    if model.n_dominant != params.n_spikes:
        raise ValueError(
            f"model has {model.n_dominant} dominant spikes, params expect {params.n_spikes}"
        )
    if min(w for _, w in model.dominant) < params.beta - 1e-12:
        raise ValueError("a dominant weight falls below the declared beta")
    if model.residual_mass > params.omega + 1e-12:
        raise ValueError("model residual mass exceeds the declared omega")
    if params.variant.has_esprit_stage and model.wrap_gap() < params.delta - 1e-12:
        raise ValueError("model gap is below the declared delta")


def _stage_for(params: RunParams, scale: float) -> str:
    if params.variant in (Variant.GAPLESS_REAL, Variant.GAPLESS_INT):
        return "gapless"
    if params.variant in (Variant.GAPPED_REAL, Variant.GAPPED_INT):
        return "esprit"
    return "gapless" if scale <= params.m_switch else "esprit"


def run_rmpe(
    model: SpectrumModel,
    params: RunParams,
    seed: int,
    *,
    sampling: str = "binomial",
    check_invariants: bool = False,
) -> RunTrace:
    """Execute the adaptive loop for one seeded run.

    All randomness derives from the integer ``seed``: the measurement stream
    of step ``ell`` uses spawn key ``(1, ell)`` plus the channel index, so
    identical seeds reproduce the trace bit for bit.  Estimation failures
    (ambiguous unfolding, no feasible factor, degenerate windows) terminate
    the run and are recorded in ``failure_reason``; they are statistical
    outcomes, not exceptions.  With ``check_invariants`` the ground-truth
    sandwich property is asserted after every step, a debugging aid only.
    """
    _check_model(model, params)
    seed = int(seed)
    integer_model = params.variant.integer_power
    work_model = model if integer_model else model.rescaled(params.prescale)
    truth = work_model.phases
    eps = params.epsilon_internal
    eta = params.eta

    gp = None
    if params.variant.has_gapless_stage:
        gp = _gapless.gapless_params(params.beta, params.omega, params.k_gapless)
    pool = _factors.prime_pool(params.n_spikes) if integer_model else None

    trace = RunTrace(
        variant=params.variant,
        seed=seed,
        params=params,
        model=model,
        prescale=params.prescale,
    )
    estimate: IntervalSet | TorusIntervalSet
    estimate = TorusIntervalSet.full() if integer_model else IntervalSet(((0.0, 0.9),))

    scale = 1.0
    step = 0
    try:
        while eta / scale > eps:
            if step > 0:
                if integer_model:
                    prime = _factors.select_prime_factor(
                        estimate,
                        int(round(scale)),
                        eta,
                        pool,
                        n_spikes=params.n_spikes,
                    )
                    factor = float(prime)
                    scale = float(int(round(scale)) * prime)
                else:
                    pad = max(params.delta_tilde or 0.0, eta) / (2.0 * scale)
                    widths = [
                        0.5 * (hi - lo) + pad for lo, hi in estimate.intervals
                    ]
                    target = eta / (scale * eps)
                    factor = _factors.select_real_factor(
                        estimate,
                        scale,
                        widths,
                        prefer=target if target <= 4.0 else None,
                    )
                    scale = scale * factor
            else:
                factor = None

            stage = _stage_for(params, scale)
            if stage == "gapless":
                k_max, reps = params.k_gapless, params.reps_gapless
                alpha = params.alpha_gapless
            else:
                k_max, reps = params.k_esprit, params.reps_esprit
                alpha = params.alpha_esprit
            signal = sample_signal(
                work_model,
                scale,
                k_max,
                reps,
                substream(seed, 1, step),
                alpha_target=alpha,
                sampling=sampling,
                integer_powers=integer_model,
            )
            if stage == "gapless":
                level = _gapless.level_set(signal, gp)
                window_set = _gapless.build_windows(level, gp, eta, params.n_spikes)
            else:
                located = _esprit.esprit_estimate(signal, params.n_spikes)
                window_set = _esprit.windows_from_esprit(located, eta)
            lifted = [(lo, lo + length) for lo, length in window_set.windows.arcs]
            scaled_windows = [(lo / scale, hi / scale) for lo, hi in lifted]
            pieces = unfold_candidates(scaled_windows, scale, estimate)
            if integer_model:
                estimate = TorusIntervalSet(
                    tuple(arc for piece, _ in pieces for arc in piece.arcs)
                )
            else:
                estimate = IntervalSet(
                    tuple(iv for piece, _ in pieces for iv in piece.intervals)
                )

            depth = scale * k_max
            trace.steps.append(
                StepRecord(
                    index=step,
                    scale=scale,
                    factor=factor,
                    stage=stage,
                    k_max=k_max,
                    reps=reps,
                    estimate=estimate,
                    n_windows=window_set.windows.n_components,
                    depth=depth,
                    shots=(k_max + 1) * reps,
                )
            )
            trace.t_max = max(trace.t_max, depth)
            trace.t_total += scale * k_max * (k_max + 1) / 2.0 * reps
            trace.total_shots += (k_max + 1) * reps

            if check_invariants:
                _assert_step_properties(estimate, truth, params, scale)
            step += 1
    except _FAILURE_TYPES as exc:
        trace.failure_reason = _FAILURE_NAMES[type(exc)]
        trace.success = False
        trace.final_estimate = _to_caller_coords(estimate, params)
        return trace

    trace.final_estimate = _to_caller_coords(estimate, params)
    trace.success = _meets_target(trace.final_estimate, model, params)
    return trace


def _to_caller_coords(
    estimate: IntervalSet | TorusIntervalSet, params: RunParams
) -> IntervalSet | TorusIntervalSet:
    if isinstance(estimate, TorusIntervalSet) or params.prescale == 1.0:
        return estimate
    return estimate.scale_translate(1.0 / params.prescale, 0.0)


def _meets_target(
    final: IntervalSet | TorusIntervalSet, model: SpectrumModel, params: RunParams
) -> bool:
    eps = params.epsilon
    if isinstance(final, TorusIntervalSet):
        target = TorusIntervalSet.from_points(model.phases).neighborhood(eps)
        covered = all(final.contains_point(p, CHECK_TOL) for p in model.phases)
        return covered and target.contains(final, CHECK_TOL)
    target = IntervalSet.from_points(model.phases).neighborhood(eps)
    covered = all(final.contains_point(p, CHECK_TOL) for p in model.phases)
    return covered and target.contains(final, CHECK_TOL)


def _assert_step_properties(
    estimate: IntervalSet | TorusIntervalSet,
    truth: tuple[float, ...],
    params: RunParams,
    scale: float,
) -> None:
    radius = params.eta / scale + CHECK_TOL
    if isinstance(estimate, TorusIntervalSet):
        ball = TorusIntervalSet.from_points(truth).neighborhood(radius)
    else:
        ball = IntervalSet.from_points(truth).neighborhood(radius)
    assert all(
        estimate.contains_point(p, CHECK_TOL) for p in truth
    ), "estimate lost a true phase"
    assert ball.contains(estimate, CHECK_TOL), "estimate escaped the truth neighborhood"


@dataclass(frozen=True)
class StepCheck:
    """Ground-truth verdicts for one step of a trace."""

    index: int
    disjoint_and_small: bool
    every_window_hits: bool
    sandwich: bool

    @property
    def ok(self) -> bool:
        return self.disjoint_and_small and self.every_window_hits and self.sandwich


@dataclass(frozen=True)
class PropertyReport:
    steps: tuple[StepCheck, ...]

    @property
    def all_ok(self) -> bool:
        return all(s.ok for s in self.steps)


def verify_estimate_properties(
    trace: RunTrace, model: SpectrumModel, params: RunParams
) -> PropertyReport:
    """Check the three per-step estimate properties against the ground truth.

    Per step: (1) components are disjoint with total length at most
    ``n_spikes * eta / scale``; (2) every component contains a true phase;
    (3) the estimate contains all true phases and stays inside their
    ``eta / scale``-neighborhood.  An empty trace yields a vacuously true
    report.
    """
    truth = (
        model.phases
        if params.prescale == 1.0
        else tuple(p * params.prescale for p in model.phases)
    )
    checks = []
    for rec in trace.steps:
        est = rec.estimate
        budget = params.n_spikes * params.eta / rec.scale
        small = est.measure() <= budget + CHECK_TOL * params.n_spikes
        if isinstance(est, TorusIntervalSet):
            comps = [TorusIntervalSet((arc,)) for arc in est.arcs]
        else:
            comps = [IntervalSet((iv,)) for iv in est.intervals]
        hits = all(
            any(c.contains_point(p, CHECK_TOL) for p in truth) for c in comps
        )
        radius = params.eta / rec.scale
        if isinstance(est, TorusIntervalSet):
            ball = TorusIntervalSet.from_points(truth).neighborhood(radius)
        else:
            ball = IntervalSet.from_points(truth).neighborhood(radius)
        sandwich = all(
            est.contains_point(p, CHECK_TOL) for p in truth
        ) and ball.contains(est, CHECK_TOL)
        checks.append(
            StepCheck(
                index=rec.index,
                disjoint_and_small=small,
                every_window_hits=hits,
                sandwich=sandwich,
            )
        )
    return PropertyReport(steps=tuple(checks))


def runtime_accounting(trace: RunTrace) -> tuple[float, float]:
    """Recompute ``(t_max, t_total)`` from the per-step records.

    ``t_max`` is the deepest single circuit ``scale * k``; ``t_total`` sums
    depth over every shot, where the ``k = 0`` probes contribute zero depth
    (their shots still count toward ``total_shots``).
    """
    t_max = 0.0
    t_total = 0.0
    for rec in trace.steps:
        t_max = max(t_max, rec.scale * rec.k_max)
        t_total += rec.scale * rec.k_max * (rec.k_max + 1) / 2.0 * rec.reps
    return t_max, t_total
