"""Self-verification: certify the fast signal path against the brute-force oracle.

Each check returns its worst deviation and tolerance so the CLI can print a
per-check report.  A fault-injection hook (``corrupt_table``) perturbs one
table coefficient to prove the checks have teeth.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import comb

import numpy as np

from . import bayes_filter, fock_oracle, signal_model
from .bayes_filter import Outcome
from .signal_model import TmsvSpec


@dataclass(frozen=True)
class CheckResult:
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


def _maybe_corrupt(table, corrupt: bool):
    if not corrupt:
        return table
    coeffs = table.coeffs.copy()
    coeffs[min(1, len(coeffs) - 1)] += 1e-3
    return replace(table, coeffs=coeffs)


def check_oracle_equivalence(corrupt_table: bool = False, n_cap: int = 12) -> CheckResult:
    """Fast even-probability vs full Fock-space enumeration, minus its tail bound."""
    deltas = np.linspace(-np.pi / 2, np.pi / 2, 32)
    worst = 0.0
    for n_bar in (1.0, 3.0):
        spec = TmsvSpec(n_bar=n_bar)
        for eta in (1.0, 0.9):
            table = _maybe_corrupt(signal_model.build_likelihood_table(spec, eta), corrupt_table)
            for delta in deltas:
                oracle = fock_oracle.oracle_even_probability(spec, eta, delta, n_cap=n_cap)
                fast = signal_model.even_probability(table, 0.0, delta)
                excess = abs(fast - oracle.value) - oracle.tail_bound
                worst = max(worst, excess)
    return CheckResult("oracle even-probability equivalence", worst, 1e-8)


def check_port_parity() -> CheckResult:
    """Parity moment of the port distribution vs the signed Legendre value."""
    deltas = np.linspace(-1.2, 2.0, 9)
    worst = 0.0
    for n in range(13):
        for delta in deltas:
            moment = signal_model.port_distribution(n, delta).parity_moment()
            worst = max(worst, abs(moment - signal_model.parity_fock(n, delta)))
    return CheckResult("port-distribution parity moment", worst, 1e-10)


def check_oracle_unitarity() -> CheckResult:
    """Norm and normalization of the oracle's sector states."""
    worst = 0.0
    for n in range(13):
        for delta in (0.0, 0.4, 1.3):
            probs = fock_oracle.simulate_mzi(n, delta).probs
            worst = max(worst, abs(probs.sum() - 1.0))
    return CheckResult("oracle unitarity", worst, 1e-12)


def check_thinning_identity() -> CheckResult:
    """sum_{t even} C(s,t) eta^t (1-eta)^(s-t) == (1 + (1-2*eta)^s) / 2."""
    worst = 0.0
    for s in range(31):
        for eta in (0.0, 0.25, 0.5, 0.9, 1.0):
            direct = sum(comb(s, t) * eta**t * (1 - eta) ** (s - t) for t in range(0, s + 1, 2))
            worst = max(worst, abs(direct - 0.5 * (1.0 + (1.0 - 2.0 * eta) ** s)))
    return CheckResult("binomial thinning identity", worst, 1e-12)


def check_weighted_legendre_sum() -> CheckResult:
    """Weighted per-Fock parity sum vs the closed-form signal at tail 1e-12."""
    deltas = np.linspace(0.0, np.pi, 257, endpoint=False)
    worst = 0.0
    for n_bar in (1.0, 2.0, 3.0, 5.0, 8.0):
        fw = signal_model.tmsv_weights(TmsvSpec(n_bar=n_bar))
        total = np.zeros_like(deltas)
        for n, p in fw.items():
            total += p * signal_model.parity_fock(n, deltas)
        closed = signal_model.parity_closed_form(n_bar, deltas)
        worst = max(worst, float(np.max(np.abs(total - closed))))
    return CheckResult("weighted Legendre reconstruction", worst, 1e-8)


def check_table_reconstruction(corrupt_table: bool = False) -> CheckResult:
    """Lossless-table signal vs the closed form on a dense grid."""
    deltas = np.linspace(-np.pi / 2, np.pi / 2, 1024)
    worst = 0.0
    for n_bar in (1.0, 3.0):
        table = _maybe_corrupt(
            signal_model.build_likelihood_table(TmsvSpec(n_bar=n_bar), eta=1.0), corrupt_table
        )
        dev = np.abs(table.signal(deltas) - signal_model.parity_closed_form(n_bar, deltas))
        worst = max(worst, float(np.max(dev)))
    return CheckResult("table reconstruction vs closed form", worst, 1e-8)


def check_posterior_normalization() -> CheckResult:
    """Unit mass and real, non-negative density after a seeded update sequence."""
    rng = np.random.default_rng(7)
    table = signal_model.build_likelihood_table(TmsvSpec(n_bar=3.0), eta=1.0)
    post = bayes_filter.flat_prior()
    worst = 0.0
    for _ in range(64):
        outcome = Outcome.EVEN if rng.random() < 0.8 else Outcome.ODD
        post = bayes_filter.update(post, outcome, rng.random() * np.pi, table)
        grid = np.pi * np.arange(1024) / 1024
        dens = post.density(grid)
        worst = max(worst, abs(float(np.mean(dens)) * np.pi - 1.0), max(0.0, -float(dens.min())))
    return CheckResult("posterior normalization and positivity", worst, 1e-6)


def run_checks(corrupt_table: bool = False) -> list[CheckResult]:
    return [
        check_oracle_equivalence(corrupt_table=corrupt_table),
        check_port_parity(),
        check_oracle_unitarity(),
        check_thinning_identity(),
        check_weighted_legendre_sum(),
        check_table_reconstruction(corrupt_table=corrupt_table),
        check_posterior_normalization(),
    ]
