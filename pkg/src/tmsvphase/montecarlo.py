"""Measurement-record generation and ensemble MSE statistics.

Each record draws a true phase, runs the feedback loop for M detections,
and produces one estimate with a wrapped error.  Records are seeded
individually from (master_seed, record_index), so an ensemble is
bit-reproducible regardless of execution order or worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache, partial

import numpy as np

from . import bayes_filter, policy as policy_mod, signal_model
from .bayes_filter import FourierPosterior, Outcome
from .errors import InvalidParameterError, PrecisionCapError, TmsvPhaseError
from .policy import AdaptivePolicy, ControlPolicy, SharpnessObjective
from .signal_model import LikelihoodTable, TmsvSpec

DEFAULT_RECORD_CAP = 1_000_000


@dataclass(frozen=True)
class FixedPhase:
    """True phase held at a single value in (-pi/2, pi/2]."""

    phi: float

    def __post_init__(self):
        if not (-np.pi / 2 < self.phi <= np.pi / 2):
            raise InvalidParameterError(f"fixed phase must lie in (-pi/2, pi/2], got {self.phi}")


@dataclass(frozen=True)
class RandomPhase:
    """True phase drawn uniformly on (-pi/2, pi/2] per record."""


PhaseMode = FixedPhase | RandomPhase


@dataclass(frozen=True)
class TrialConfig:
    """Everything needed to reproduce a measurement record deterministically."""

    n_bar: float
    eta: float
    M: int
    policy: ControlPolicy
    phase_mode: PhaseMode
    master_seed: int
    tail_epsilon: float = signal_model.DEFAULT_TAIL_EPSILON
    coeff_epsilon: float = signal_model.DEFAULT_COEFF_EPSILON
    table_terms: int | None = None

    def __post_init__(self):
        if self.M < 1:
            raise InvalidParameterError(f"M must be >= 1, got {self.M}")
        if self.master_seed < 0:
            raise InvalidParameterError(f"master_seed must be >= 0, got {self.master_seed}")

    def table(self) -> LikelihoodTable:
        return _cached_table(
            self.n_bar, self.eta, self.tail_epsilon, self.coeff_epsilon, self.table_terms
        )


@lru_cache(maxsize=64)
def _cached_table(n_bar, eta, tail_epsilon, coeff_epsilon, table_terms) -> LikelihoodTable:
    spec = TmsvSpec(n_bar=n_bar, tail_epsilon=tail_epsilon)
    return signal_model.build_likelihood_table(
        spec, eta=eta, coeff_epsilon=coeff_epsilon, n_terms=table_terms
    )


@dataclass(frozen=True, eq=False)
class TrialRecord:
    """One measurement record and its estimate."""

    thetas: np.ndarray
    outcomes: tuple[Outcome, ...]
    ell: int
    estimate: float
    error: float
    true_phi: float


@dataclass(frozen=True, eq=False)
class RecordResult:
    record: TrialRecord
    posterior: FourierPosterior


def _record_rng(master_seed: int, record_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, record_index)))


def simulate_record(config: TrialConfig, record_index: int) -> RecordResult:
    """Run one record and return it together with the final posterior."""
    rng = _record_rng(config.master_seed, record_index)
    table = config.table()

    if isinstance(config.phase_mode, FixedPhase):
        true_phi = config.phase_mode.phi
    else:
        true_phi = np.pi / 2 - rng.random() * np.pi

    adaptive = isinstance(config.policy, AdaptivePolicy)
    objective = SharpnessObjective(table, config.policy.grid_points) if adaptive else None

    post = bayes_filter.flat_prior()
    thetas = np.empty(config.M)
    outcomes = []
    ell = 0
    try:
        for m in range(config.M):
            if adaptive:
                theta = policy_mod.initial_phase(rng) if m == 0 else policy_mod.choose_phase(
                    post, table, config.policy, objective=objective
                )
            else:
                theta = config.policy.theta0 % np.pi
            even = rng.random() < signal_model.even_probability(table, true_phi, theta)
            outcome = Outcome.EVEN if even else Outcome.ODD
            post = bayes_filter.update(post, outcome, theta, table)
            thetas[m] = theta
            outcomes.append(outcome)
            ell += even
        estimate = bayes_filter.estimate(post)
    except TmsvPhaseError as exc:
        raise type(exc)(f"record {record_index}: {exc}") from exc

    record = TrialRecord(
        thetas=thetas,
        outcomes=tuple(outcomes),
        ell=ell,
        estimate=estimate,
        error=bayes_filter.wrapped_error(estimate, true_phi),
        true_phi=true_phi,
    )
    return RecordResult(record=record, posterior=post)


def run_record(config: TrialConfig, record_index: int) -> TrialRecord:
    """As ``simulate_record`` but dropping the posterior."""
    return simulate_record(config, record_index).record


def _record_error(config: TrialConfig, record_index: int) -> float:
    return run_record(config, record_index).error


def _run_errors(config: TrialConfig, indices: range, workers: int) -> np.ndarray:
    if workers <= 1 or len(indices) < 2:
        return np.array([_record_error(config, i) for i in indices])
    chunk = max(1, len(indices) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        errors = list(pool.map(partial(_record_error, config), indices, chunksize=chunk))
    return np.array(errors)


@dataclass(frozen=True)
class EnsembleStats:
    """MSE of the wrapped errors over J records, with benchmark ratios."""

    J: int
    mse: float
    mse_se: float
    bias: float
    hl_ratio: float
    crb_ratio: float


def _stats_from_errors(errors: np.ndarray, config: TrialConfig) -> EnsembleStats:
    j = len(errors)
    sq = errors**2
    mse = float(np.mean(sq))
    mse_se = float(np.std(sq, ddof=1) / math.sqrt(j)) if j >= 2 else float("nan")
    k = config.n_bar * (config.n_bar + 2.0)
    return EnsembleStats(
        J=j,
        mse=mse,
        mse_se=mse_se,
        bias=float(np.mean(errors)),
        hl_ratio=mse * config.M * config.n_bar**2,
        crb_ratio=mse * config.M * k,
    )


def run_ensemble(
    config: TrialConfig,
    J: int | None = None,
    target_precision: float | None = None,
    record_cap: int = DEFAULT_RECORD_CAP,
    workers: int = 1,
) -> EnsembleStats:
    """Aggregate records into MSE statistics.

    Either run a fixed number of records J, or (target_precision mode) keep
    adding records until the relative standard error of the MSE drops to the
    target, up to ``record_cap`` records; if the cap is hit first, a
    ``PrecisionCapError`` carrying the partial statistics is raised.
    """
    if (J is None) == (target_precision is None):
        raise InvalidParameterError("specify exactly one of J or target_precision")
    if J is not None:
        if J < 2:
            raise InvalidParameterError(f"J must be >= 2, got {J}")
        errors = _run_errors(config, range(J), workers)
        return _stats_from_errors(errors, config)

    if not (0.0 < target_precision < 1.0):
        raise InvalidParameterError(f"target_precision must lie in (0, 1), got {target_precision}")
    errors = _run_errors(config, range(min(128, record_cap)), workers)
    while True:
        stats = _stats_from_errors(errors, config)
        rel = stats.mse_se / stats.mse if stats.mse > 0 else 0.0
        if rel <= target_precision:
            return stats
        if len(errors) >= record_cap:
            raise PrecisionCapError(
                f"precision {rel:.3g} > target {target_precision} after {len(errors)} records",
                stats,
            )
        needed = math.ceil(len(errors) * (rel / target_precision) ** 2 * 1.1)
        nxt = min(record_cap, max(needed, len(errors) + 64))
        more = _run_errors(config, range(len(errors), nxt), workers)
        errors = np.concatenate([errors, more])


@dataclass(frozen=True, eq=False)
class SweepResult:
    config: TrialConfig
    stats: EnsembleStats | None
    error: str = ""


def sweep(
    configs: list[TrialConfig],
    J: int | None = None,
    target_precision: float | None = None,
    record_cap: int = DEFAULT_RECORD_CAP,
    workers: int = 1,
) -> list[SweepResult]:
    """Run an ensemble per config; failures are recorded and the sweep continues."""
    results = []
    for config in configs:
        try:
            stats = run_ensemble(
                config, J=J, target_precision=target_precision, record_cap=record_cap, workers=workers
            )
            results.append(SweepResult(config=config, stats=stats))
        except PrecisionCapError as exc:
            results.append(SweepResult(config=config, stats=exc.stats, error=str(exc)))
        except TmsvPhaseError as exc:
            results.append(SweepResult(config=config, stats=None, error=str(exc)))
    return results


def grid_configs(
    n_bars: list[float],
    etas: list[float],
    Ms: list[int],
    policy: ControlPolicy,
    phase_mode: PhaseMode,
    master_seed: int,
    table_terms: dict[float, int] | int | None = None,
    tail_epsilon: float = signal_model.DEFAULT_TAIL_EPSILON,
    coeff_epsilon: float = signal_model.DEFAULT_COEFF_EPSILON,
) -> list[TrialConfig]:
    """Cross product of (n_bar, eta, M) as TrialConfigs sharing one seed."""
    configs = []
    for n_bar in n_bars:
        if isinstance(table_terms, dict):
            terms = table_terms.get(n_bar)
        else:
            terms = table_terms
        for eta in etas:
            for M in Ms:
                configs.append(
                    TrialConfig(
                        n_bar=n_bar,
                        eta=eta,
                        M=M,
                        policy=policy,
                        phase_mode=phase_mode,
                        master_seed=master_seed,
                        tail_epsilon=tail_epsilon,
                        coeff_epsilon=coeff_epsilon,
                        table_terms=terms,
                    )
                )
    return configs
