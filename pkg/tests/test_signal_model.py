import math

import numpy as np
import pytest
from scipy.special import eval_legendre

from tmsvphase import (
    InvalidParameterError,
    TableConstructionError,
    TmsvSpec,
    build_likelihood_table,
    even_probability,
    fisher_information,
    lossy_signal,
    parity_closed_form,
    parity_fock,
    port_distribution,
    reference_limits,
    tmsv_weights,
)
from tmsvphase import fock_oracle
from tmsvphase.signal_model import TERM_COUNT_PRESETS


# ---------------------------------------------------------------- weights

def test_weights_hand_example():
    fw = tmsv_weights(TmsvSpec(n_bar=2.0, tail_epsilon=1e-12))
    assert fw.t == pytest.approx(0.5, abs=1e-15)
    assert fw.weights[0] == pytest.approx(0.5, abs=1e-15)
    assert fw.weights[1] == pytest.approx(0.25, abs=1e-15)
    assert fw.weights[2] == pytest.approx(0.125, abs=1e-15)


def test_weights_vacuum_limit():
    fw = tmsv_weights(TmsvSpec(n_bar=1e-9, tail_epsilon=1e-6))
    assert fw.n_max == 0
    assert fw.weights[0] == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("n_bar", [0.3, 1.0, 2.0, 3.0, 8.0])
@pytest.mark.parametrize("tail", [1e-6, 1e-12])
def test_weights_cumulative_and_decreasing(n_bar, tail):
    fw = tmsv_weights(TmsvSpec(n_bar=n_bar, tail_epsilon=tail))
    assert fw.weights.sum() >= 1.0 - tail
    assert np.all(fw.weights > 0)
    assert np.all(np.diff(fw.weights) < 0)
    # n_max is the smallest adequate cutoff
    if fw.n_max > 0:
        assert fw.weights[:-1].sum() < 1.0 - tail


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_invalid_n_bar(bad):
    with pytest.raises(InvalidParameterError):
        TmsvSpec(n_bar=bad)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.5, 2.0])
def test_invalid_tail_epsilon(bad):
    with pytest.raises(InvalidParameterError):
        TmsvSpec(n_bar=1.0, tail_epsilon=bad)


# ---------------------------------------------------------------- parity signal

def test_parity_closed_form_values():
    assert parity_closed_form(7.0, 0.0) == 1.0
    assert parity_closed_form(3.0, np.pi / 2) == pytest.approx(0.25, abs=1e-15)
    assert parity_closed_form(1.0, np.pi / 4) == pytest.approx(1.0 / math.sqrt(2.5), abs=1e-15)


def test_parity_fock_values():
    assert parity_fock(0, 1.234) == 1.0
    assert parity_fock(1, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert parity_fock(1, np.pi / 4) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("n", [0, 1, 2, 5, 17, 40, 80])
def test_parity_fock_matches_scipy_legendre(n):
    deltas = np.linspace(-1.0, 2.5, 41)
    expected = (-1.0) ** n * eval_legendre(n, -np.cos(2 * deltas))
    assert np.abs(parity_fock(n, deltas) - expected).max() < 1e-12
    assert np.abs(parity_fock(n, deltas)).max() <= 1.0 + 1e-12


def test_weighted_legendre_reconstruction():
    deltas = np.linspace(0.0, np.pi, 211, endpoint=False)
    for n_bar in (1.0, 2.0, 3.0, 5.0, 8.0):
        fw = tmsv_weights(TmsvSpec(n_bar=n_bar, tail_epsilon=1e-12))
        total = np.zeros_like(deltas)
        for n, p in fw.items():
            total += p * parity_fock(n, deltas)
        assert np.abs(total - parity_closed_form(n_bar, deltas)).max() <= 1e-8


# ---------------------------------------------------------------- port distribution

def test_port_distribution_vacuum():
    assert port_distribution(0, 0.7).probs.tolist() == [1.0]


def test_port_distribution_two_photon():
    bunched = port_distribution(1, 0.0)
    np.testing.assert_allclose(bunched.probs, [0.5, 0.0, 0.5], atol=1e-12)
    assert bunched.parity_moment() == pytest.approx(1.0, abs=1e-12)
    split = port_distribution(1, np.pi / 2)
    np.testing.assert_allclose(split.probs, [0.0, 1.0, 0.0], atol=1e-12)
    assert split.parity_moment() == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.parametrize("n", range(13))
def test_port_distribution_invariants(n):
    for delta in np.linspace(-1.3, 1.9, 7):
        dist = port_distribution(n, delta)
        assert dist.probs.min() >= 0.0
        assert abs(dist.probs.sum() - 1.0) <= 1e-12
        assert abs(dist.parity_moment() - parity_fock(n, delta)) <= 1e-10
        np.testing.assert_allclose(dist.probs, dist.probs[::-1], atol=1e-14)


# ---------------------------------------------------------------- lossy signal

def test_lossy_signal_eta_one_is_parity():
    spec = TmsvSpec(n_bar=1.0)
    for delta in (0.0, 0.3, 1.1):
        assert lossy_signal(spec, 1.0, delta) == pytest.approx(
            parity_closed_form(1.0, delta), abs=1e-10
        )


def test_lossy_signal_eta_zero_is_one():
    spec = TmsvSpec(n_bar=3.0)
    assert lossy_signal(spec, 0.0, 0.9) == 1.0


def test_lossy_signal_eta_validation():
    with pytest.raises(InvalidParameterError):
        lossy_signal(TmsvSpec(n_bar=1.0), 1.5, 0.0)


def test_lossy_signal_matches_explicit_enumeration():
    # tail bound chosen so the retained range matches the oracle cap exactly
    spec = TmsvSpec(n_bar=1.0, tail_epsilon=1e-6)
    fw = tmsv_weights(spec)
    assert fw.n_max == 12
    for eta in (0.9, 0.5):
        for delta in (0.0, 0.3, 1.2):
            enum = 0.0
            for n, p in fw.items():
                detected = fock_oracle.thin(fock_oracle.simulate_mzi(n, delta), eta)
                signs = (-1.0) ** np.arange(len(detected))
                enum += p * float(signs @ detected)
            assert lossy_signal(spec, eta, delta) == pytest.approx(enum, abs=1e-10)


# ---------------------------------------------------------------- likelihood table

def test_table_eta_zero_trivial():
    table = build_likelihood_table(TmsvSpec(n_bar=2.0), eta=0.0)
    assert table.coeffs.tolist() == [1.0]
    assert even_probability(table, 0.4, 1.2) == 1.0


def test_table_reconstruction_close_to_closed_form():
    table = build_likelihood_table(TmsvSpec(n_bar=1.0, tail_epsilon=1e-12), eta=1.0)
    deltas = np.linspace(-np.pi / 2, np.pi / 2, 1024)
    dev = np.abs(table.signal(deltas) - parity_closed_form(1.0, deltas))
    assert dev.max() <= 1e-8


def test_table_coefficients_real_and_bounded():
    for eta in (1.0, 0.9):
        table = build_likelihood_table(TmsvSpec(n_bar=3.0), eta=eta)
        assert table.coeffs.dtype == np.float64
        assert np.abs(table.coeffs).max() <= 1.0 + 1e-12
        assert table.max_harmonic <= table.fock_cutoff


def test_table_grid_too_small():
    with pytest.raises(TableConstructionError):
        build_likelihood_table(TmsvSpec(n_bar=3.0), eta=1.0, grid_size=16)


def test_table_periodic_and_even():
    table = build_likelihood_table(TmsvSpec(n_bar=2.0), eta=0.95)
    deltas = np.linspace(-1.5, 1.5, 31)
    np.testing.assert_allclose(table.signal(deltas), table.signal(-deltas), atol=1e-12)
    np.testing.assert_allclose(table.signal(deltas), table.signal(deltas + np.pi), atol=1e-10)


def test_table_term_count_presets_match_published():
    assert TERM_COUNT_PRESETS == {1: 10, 2: 10, 3: 15, 5: 20, 8: 25}
    table = build_likelihood_table(TmsvSpec(n_bar=1.0), eta=1.0, n_terms=10)
    assert table.fock_cutoff == 9
    assert table.max_harmonic <= 9
    deltas = np.linspace(0, np.pi, 301, endpoint=False)
    dev = np.abs(table.signal(deltas) - parity_closed_form(1.0, deltas))
    # truncation error is the geometric tail t^10 at delta = 0
    assert dev.max() == pytest.approx((1.0 / 3.0) ** 10, rel=1e-6)


def test_even_probability_values():
    table = build_likelihood_table(TmsvSpec(n_bar=3.0), eta=1.0)
    assert even_probability(table, 0.7, 0.7) == pytest.approx(1.0, abs=1e-11)
    assert even_probability(table, 0.0, np.pi / 2) == pytest.approx(0.625, abs=1e-10)
    for phi, theta in [(0.1, 0.9), (-0.4, 0.2)]:
        p_e = even_probability(table, phi, theta)
        assert 0.0 <= p_e <= 1.0


# ---------------------------------------------------------------- fisher / limits

def test_fisher_peak_and_zero():
    assert fisher_information(3.0, 0.0) == 15.0
    assert fisher_information(5.0, 0.0) == 5.0 * 7.0
    assert abs(fisher_information(1.0, np.pi / 2)) < 1e-15


def test_fisher_finite_difference_consistency():
    # two-outcome Fisher information from the table's P_e by central differences
    h = 1e-4
    for n_bar in (1.0, 3.0):
        table = build_likelihood_table(TmsvSpec(n_bar=n_bar), eta=1.0)
        for delta in np.linspace(0.1, 1.45, 12):
            p_e = even_probability(table, 0.0, delta)
            dp = (even_probability(table, 0.0, delta + h) - even_probability(table, 0.0, delta - h)) / (2 * h)
            fd = dp * dp * (1.0 / p_e + 1.0 / (1.0 - p_e))
            assert fd == pytest.approx(fisher_information(n_bar, delta), rel=1e-6)


def test_reference_limits_values():
    lim = reference_limits(1.0, 1)
    assert lim.heisenberg == 1.0
    assert lim.cramer_rao == pytest.approx(1.0 / 3.0, abs=1e-15)
    lim = reference_limits(3.0, 256)
    assert lim.heisenberg == pytest.approx(1.0 / 2304.0, rel=1e-12)


@pytest.mark.parametrize("n_bar", [0.5, 1.0, 1.5, 3.0, 8.0])
def test_reference_limit_ordering(n_bar):
    lim = reference_limits(n_bar, 7)
    assert lim.cramer_rao < lim.heisenberg
    if n_bar > 1.0:
        assert lim.heisenberg < lim.shot_noise


def test_reference_limits_validation():
    with pytest.raises(InvalidParameterError):
        reference_limits(1.0, 0)
