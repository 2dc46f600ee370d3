"""Adaptive multi-eigenphase estimation on simulated single-ancilla measurement data."""

__version__ = "0.1.0"

from .intervals import (
    AmbiguityError,
    IntervalSet,
    TorusIntervalSet,
    torus_distance,
    unfold_candidates,
)
from .measurement import (
    MomentSignal,
    SpectrumModel,
    exact_moment,
    exact_moments,
    hoeffding_repetitions,
    random_model,
    sample_signal,
    substream,
)
from .gapless import (
    EmptyLevelSet,
    GaplessParams,
    SpectralWindowSet,
    TooManyWindows,
    build_windows,
    filtered_magnitude,
    gapless_params,
    level_set,
)
from .esprit import (
    EspritEstimate,
    GappedParams,
    RankDeficiency,
    esprit_error_bound,
    esprit_estimate,
    matching_distance,
    windows_from_esprit,
)
from .factors import (
    ForbiddenSet,
    NoFeasibleFactor,
    NoFeasiblePrime,
    PrimePool,
    eta_cap,
    first_primes,
    forbidden_factor_set,
    prime_pool,
    select_prime_factor,
    select_real_factor,
)
from .driver import (
    InfeasibleParams,
    PropertyReport,
    RunParams,
    RunTrace,
    StepRecord,
    Variant,
    compute_params,
    run_rmpe,
    runtime_accounting,
    verify_estimate_properties,
)

__all__ = [
    "AmbiguityError",
    "EmptyLevelSet",
    "EspritEstimate",
    "ForbiddenSet",
    "GaplessParams",
    "GappedParams",
    "InfeasibleParams",
    "IntervalSet",
    "MomentSignal",
    "NoFeasibleFactor",
    "NoFeasiblePrime",
    "PrimePool",
    "PropertyReport",
    "RankDeficiency",
    "RunParams",
    "RunTrace",
    "SpectralWindowSet",
    "SpectrumModel",
    "StepRecord",
    "TooManyWindows",
    "TorusIntervalSet",
    "Variant",
    "build_windows",
    "compute_params",
    "esprit_error_bound",
    "esprit_estimate",
    "eta_cap",
    "exact_moment",
    "exact_moments",
    "filtered_magnitude",
    "first_primes",
    "forbidden_factor_set",
    "gapless_params",
    "hoeffding_repetitions",
    "level_set",
    "matching_distance",
    "prime_pool",
    "random_model",
    "run_rmpe",
    "runtime_accounting",
    "sample_signal",
    "select_prime_factor",
    "select_real_factor",
    "substream",
    "torus_distance",
    "unfold_candidates",
    "verify_estimate_properties",
    "windows_from_esprit",
]
