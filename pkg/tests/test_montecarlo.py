import math

import numpy as np
import pytest

from tmsvphase import (
    AdaptivePolicy,
    FixedPhase,
    InvalidParameterError,
    Outcome,
    PrecisionCapError,
    RandomPhase,
    StaticPolicy,
    TmsvSpec,
    TrialConfig,
    build_likelihood_table,
    even_probability,
    run_ensemble,
    run_record,
    simulate_record,
    sweep,
)
from tmsvphase.montecarlo import grid_configs


def _config(**kw):
    base = dict(
        n_bar=1.0,
        eta=1.0,
        M=32,
        policy=AdaptivePolicy(),
        phase_mode=FixedPhase(0.5),
        master_seed=11,
        table_terms=10,
    )
    base.update(kw)
    return TrialConfig(**base)


# ---------------------------------------------------------------- records

def test_record_deterministic():
    cfg = _config()
    a = run_record(cfg, 3)
    b = run_record(cfg, 3)
    assert a.estimate == b.estimate and a.error == b.error and a.ell == b.ell
    assert np.array_equal(a.thetas, b.thetas)
    assert a.outcomes == b.outcomes


def test_records_differ_across_indices():
    cfg = _config()
    assert run_record(cfg, 0).estimate != run_record(cfg, 1).estimate


def test_record_fields_consistent():
    cfg = _config(M=40)
    rec = run_record(cfg, 5)
    assert len(rec.thetas) == 40 and len(rec.outcomes) == 40
    assert rec.ell == sum(o is Outcome.EVEN for o in rec.outcomes)
    assert -np.pi / 2 < rec.error <= np.pi / 2
    assert np.all((rec.thetas >= 0.0) & (rec.thetas < np.pi))


def test_static_matched_phase_all_even():
    # default tail-based table: P_even(0) = 1 up to ~1e-12, so every draw is even
    cfg = TrialConfig(
        n_bar=1.0, eta=1.0, M=64, policy=StaticPolicy(theta0=0.5),
        phase_mode=FixedPhase(0.5), master_seed=4,
    )
    rec = run_record(cfg, 0)
    assert rec.ell == 64
    assert abs(rec.error) < 1e-6


def test_random_phase_draws_in_range():
    cfg = _config(phase_mode=RandomPhase(), M=4)
    phis = [simulate_record(cfg, i).record.true_phi for i in range(40)]
    assert all(-np.pi / 2 < p <= np.pi / 2 for p in phis)
    assert len(set(phis)) == 40


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        _config(M=0)
    with pytest.raises(InvalidParameterError):
        _config(master_seed=-1)
    with pytest.raises(InvalidParameterError):
        FixedPhase(phi=2.0)


# ---------------------------------------------------------------- ensembles

def test_ensemble_degenerate_identical_errors():
    cfg = TrialConfig(
        n_bar=1.0, eta=1.0, M=16, policy=StaticPolicy(theta0=0.5),
        phase_mode=FixedPhase(0.5), master_seed=4,
    )
    stats = run_ensemble(cfg, J=8)
    assert stats.mse_se == 0.0
    assert stats.mse == pytest.approx(stats.bias**2, rel=1e-12)


def test_ensemble_stats_relations():
    cfg = _config(M=24)
    stats = run_ensemble(cfg, J=50)
    assert stats.J == 50
    assert stats.mse >= stats.bias**2
    assert stats.mse_se > 0.0
    assert stats.hl_ratio == pytest.approx(stats.mse * 24 * 1.0, rel=1e-12)
    assert stats.crb_ratio == pytest.approx(stats.hl_ratio * (1.0 * 3.0) / 1.0**2, rel=1e-12)


def test_ensemble_deterministic_across_worker_counts():
    cfg = _config(M=16)
    serial = run_ensemble(cfg, J=24, workers=1)
    parallel = run_ensemble(cfg, J=24, workers=3)
    assert serial == parallel


def test_ensemble_argument_validation():
    cfg = _config()
    with pytest.raises(InvalidParameterError):
        run_ensemble(cfg)
    with pytest.raises(InvalidParameterError):
        run_ensemble(cfg, J=10, target_precision=0.1)
    with pytest.raises(InvalidParameterError):
        run_ensemble(cfg, J=1)


def test_precision_mode_record_count_matches_variance_factor():
    # stopping J tracks (var(e^2)/mse^2) / target^2; for normal errors that
    # factor is 2 (J ~ 2200 at 3%), while these records are heavier-tailed
    target = 0.03
    cfg = _config(M=16, master_seed=21)
    pilot = np.array([run_record(cfg, i).error for i in range(600)]) ** 2
    factor = pilot.var() / pilot.mean() ** 2
    predicted = factor / target**2
    stats = run_ensemble(cfg, target_precision=target, record_cap=20_000)
    assert stats.mse_se / stats.mse <= target
    assert 0.6 * predicted <= stats.J <= 1.8 * predicted


def test_precision_cap_carries_partial_stats():
    cfg = _config(M=8)
    with pytest.raises(PrecisionCapError) as excinfo:
        run_ensemble(cfg, target_precision=0.001, record_cap=60)
    assert excinfo.value.stats.J == 60
    assert excinfo.value.stats.mse > 0


# ---------------------------------------------------------------- sweep

def test_sweep_continues_past_failures():
    good = _config(M=8)
    # eta = 0 gives a flat posterior forever: the estimate is undefined
    bad = TrialConfig(
        n_bar=1.0, eta=0.0, M=8, policy=StaticPolicy(theta0=0.0),
        phase_mode=FixedPhase(0.5), master_seed=11,
    )
    results = sweep([good, bad, good], J=6)
    assert results[0].stats is not None and results[0].error == ""
    assert results[1].stats is None and "record" in results[1].error
    assert results[2].stats == results[0].stats


def test_grid_configs_cross_product_and_terms():
    configs = grid_configs(
        n_bars=[1.0, 3.0], etas=[1.0, 0.9], Ms=[16, 32],
        policy=AdaptivePolicy(), phase_mode=FixedPhase(0.5), master_seed=3,
        table_terms={1.0: 10, 3.0: 15},
    )
    assert len(configs) == 8
    assert {c.table_terms for c in configs if c.n_bar == 1.0} == {10}
    assert {c.table_terms for c in configs if c.n_bar == 3.0} == {15}


# ---------------------------------------------------------------- statistical invariants

def test_outcome_frequency_matches_table():
    theta, phi = 0.7, 0.3
    cfg = TrialConfig(
        n_bar=1.0, eta=1.0, M=50, policy=StaticPolicy(theta0=theta),
        phase_mode=FixedPhase(phi), master_seed=8, table_terms=10,
    )
    table = build_likelihood_table(TmsvSpec(n_bar=1.0), eta=1.0, n_terms=10)
    p_e = even_probability(table, phi, theta)
    draws = 200 * 50
    ell_total = sum(run_record(cfg, i).ell for i in range(200))
    sd = math.sqrt(draws * p_e * (1 - p_e))
    assert abs(ell_total - draws * p_e) <= 4 * sd


def test_mse_independent_of_true_phase():
    # covariance of the scheme: fixed-phase MSEs agree within combined errors
    stats = []
    for phi in (0.1, 0.7, 1.2):
        cfg = TrialConfig(
            n_bar=2.0, eta=1.0, M=64, policy=AdaptivePolicy(),
            phase_mode=FixedPhase(phi), master_seed=60, table_terms=10,
        )
        stats.append(run_ensemble(cfg, J=300))
    for i in range(len(stats)):
        for k in range(i + 1, len(stats)):
            gap = abs(stats[i].mse - stats[k].mse)
            combined = math.hypot(stats[i].mse_se, stats[k].mse_se)
            assert gap <= 3 * combined
