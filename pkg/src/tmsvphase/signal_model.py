"""Physics of the measurement signal.

Two-mode squeezed vacuum (TMSV) entering a Mach-Zehnder interferometer is a
geometric-weighted superposition of twin-Fock states |n,n>.  Counting photons
at one output port and keeping only the parity of the count yields a signal
that depends on the phase difference delta = theta - phi.  This module
computes the photon statistics, the parity signal (closed form and per-Fock
Legendre form), detection probabilities under loss, truncated Fourier
representations of the signal (likelihood tables), and Fisher-information
reference curves.

Convention: the interferometer is operated so that at delta = 0 the measured
port shows perfect even-photon bunching (P_even = 1).  All other sign/offset
choices are pinned by requiring the port distribution's parity moment to
equal the signed Legendre value of ``parity_fock``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, TableConstructionError

# Published per-nbar cutoffs for the number of twin-Fock (Legendre) terms
# retained when building the signal's Fourier series.
TERM_COUNT_PRESETS = {1: 10, 2: 10, 3: 15, 5: 20, 8: 25}

DEFAULT_TAIL_EPSILON = 1e-12
DEFAULT_COEFF_EPSILON = 1e-12


@dataclass(frozen=True)
class TmsvSpec:
    """TMSV source description: mean photon number and Fock-tail cutoff.

    The twin-Fock weights are p_n = (1-t) t^n with t = 1/(1 + 2/n_bar);
    terms are retained until their cumulative weight reaches
    1 - tail_epsilon.
    """

    n_bar: float
    tail_epsilon: float = DEFAULT_TAIL_EPSILON

    def __post_init__(self):
        if not (math.isfinite(self.n_bar) and self.n_bar > 0):
            raise InvalidParameterError(f"n_bar must be finite and > 0, got {self.n_bar}")
        if not (0.0 < self.tail_epsilon < 1.0):
            raise InvalidParameterError(f"tail_epsilon must lie in (0, 1), got {self.tail_epsilon}")

    @property
    def t(self) -> float:
        """Geometric ratio of the twin-Fock weights, strictly inside (0, 1)."""
        return 1.0 / (1.0 + 2.0 / self.n_bar)


@dataclass(frozen=True)
class FockWeights:
    """Retained twin-Fock weights p_0..p_{n_max} for a TMSV source."""

    t: float
    weights: np.ndarray

    @property
    def n_max(self) -> int:
        return len(self.weights) - 1

    def items(self):
        return list(enumerate(self.weights))


def tmsv_weights(spec: TmsvSpec) -> FockWeights:
    """Twin-Fock weights of a TMSV state, truncated by cumulative weight.

    Returns weights p_n = (1-t) t^n for n = 0..n_max, where n_max is the
    smallest index whose cumulative weight reaches 1 - tail_epsilon
    (equivalently t^(n_max+1) <= tail_epsilon).
    """
    t = spec.t
    # 1 - sum_{n<=N} p_n = t^(N+1); solve for the smallest adequate N.
    n_max = max(0, math.ceil(math.log(spec.tail_epsilon) / math.log(t)) - 1)
    while t ** (n_max + 1) > spec.tail_epsilon:
        n_max += 1
    weights = (1.0 - t) * t ** np.arange(n_max + 1)
    return FockWeights(t=t, weights=weights)


def parity_closed_form(n_bar: float, delta: float):
    """Expected parity signal 1 / sqrt(1 + n_bar(n_bar+2) sin^2(delta))."""
    if not (math.isfinite(n_bar) and n_bar > 0):
        raise InvalidParameterError(f"n_bar must be finite and > 0, got {n_bar}")
    return 1.0 / np.sqrt(1.0 + n_bar * (n_bar + 2.0) * np.sin(delta) ** 2)


def _legendre_rows(n_max: int, x: np.ndarray) -> np.ndarray:
    """P_0(x)..P_{n_max}(x) by the Bonnet three-term recurrence, row per degree."""
    rows = np.empty((n_max + 1,) + x.shape, dtype=float)
    rows[0] = 1.0
    if n_max >= 1:
        rows[1] = x
    for k in range(1, n_max):
        rows[k + 1] = ((2 * k + 1) * x * rows[k] - k * rows[k - 1]) / (k + 1)
    return rows


def parity_fock(n: int, delta: float):
    """Parity signal of a single twin-Fock state |n,n>: (-1)^n P_n(-cos 2*delta)."""
    if n < 0:
        raise InvalidParameterError(f"n must be >= 0, got {n}")
    x = np.asarray(-np.cos(2.0 * np.asarray(delta, dtype=float)))
    value = _legendre_rows(n, x)[n] * (-1.0) ** n
    return float(value) if np.ndim(delta) == 0 else value


def _rotation_column_sq(n: int, beta) -> np.ndarray:
    """Squared rotation-matrix elements |d^n_{m,0}(beta)|^2 for m = 0..n.

    Computed through the degree recurrence of the unit-normalized associated
    Legendre column (every intermediate is a bounded matrix element), stable
    to degrees of a few thousand.  ``beta`` may be a scalar or an array; the
    result has shape (n+1,) + shape(beta).
    """
    beta = np.asarray(beta, dtype=float)
    x = np.cos(beta)
    s = np.sin(beta)
    out = np.empty((n + 1,) + beta.shape, dtype=float)
    diag = np.ones_like(x)  # d^m_{m,0} up to the running sign/amplitude factor
    for m in range(n + 1):
        if m == n:
            q = diag
        else:
            q_prev = np.zeros_like(x)
            q = diag
            for deg in range(m, n):
                q_next = ((2 * deg + 1) * x * q - math.sqrt(deg * deg - m * m) * q_prev) / math.sqrt(
                    (deg + 1) ** 2 - m * m
                )
                q_prev, q = q, q_next
        out[m] = q * q
        diag = diag * (-math.sqrt((2 * m + 1) / (2 * m + 2)) * s)
    return out


@dataclass(frozen=True, eq=False)
class PortDistribution:
    """Photon-count distribution at the measured output port for input |n,n>."""

    n: int
    delta: float
    probs: np.ndarray

    def parity_moment(self) -> float:
        k = np.arange(len(self.probs))
        return float(np.sum((-1.0) ** k * self.probs))


def port_distribution(n: int, delta: float) -> PortDistribution:
    """Distribution of the measured-port photon count k = 0..2n at phase delta.

    Built from squared rotation-matrix elements of the interferometer acting
    on the 2n-photon sector.  The distribution is symmetric about k = n and
    its parity moment reproduces ``parity_fock(n, delta)``, which is what
    pins the convention (fully even-count and twin-photon-bunched at
    delta = 0).
    """
    if n < 0:
        raise InvalidParameterError(f"n must be >= 0, got {n}")
    if n == 0:
        return PortDistribution(n=0, delta=float(delta), probs=np.array([1.0]))
    sq = _rotation_column_sq(n, float(delta) + np.pi / 2.0)
    probs = np.empty(2 * n + 1, dtype=float)
    probs[n] = sq[0]
    for m in range(1, n + 1):
        probs[n + m] = sq[m]
        probs[n - m] = sq[m]
    return PortDistribution(n=n, delta=float(delta), probs=probs)


def _thinned_fock_signal(n: int, deltas: np.ndarray, survival_parity: float) -> np.ndarray:
    """Even-minus-odd detection signal of |n,n> with per-photon factor (1-2*eta).

    Uses the moment identity sum_t-even C(k,t) eta^t (1-eta)^(k-t) -
    sum_t-odd ... = (1-2*eta)^k, so the signal is
    sum_k P(k|n,delta) (1-2*eta)^k.
    """
    lam = survival_parity
    sq = _rotation_column_sq(n, deltas + np.pi / 2.0)
    signal = sq[0] * lam ** n
    for m in range(1, n + 1):
        signal = signal + sq[m] * (lam ** (n + m) + lam ** (n - m))
    return signal


def _check_eta(eta: float):
    if not (math.isfinite(eta) and 0.0 <= eta <= 1.0):
        raise InvalidParameterError(f"eta must lie in [0, 1], got {eta}")


def lossy_signal(spec: TmsvSpec, eta: float, delta: float) -> float:
    """Even-minus-odd detection probability with detector efficiency eta.

    Equal loss in both arms commutes with the final beam splitter, so it is
    modeled as binomial thinning of the measured port's count;
    G(delta) = sum_n p_n sum_k P(k|n,delta) (1-2*eta)^k.
    """
    _check_eta(eta)
    return float(_lossy_signal_grid(spec, eta, np.asarray([float(delta)]))[0])


def _lossy_signal_grid(spec: TmsvSpec, eta: float, deltas: np.ndarray, n_terms: int | None = None) -> np.ndarray:
    """G(delta) over a grid, truncating the Fock sum by tail weight or term count."""
    fw = tmsv_weights(spec)
    weights = fw.weights if n_terms is None else (1.0 - fw.t) * fw.t ** np.arange(n_terms)
    n_top = len(weights) - 1
    if eta == 1.0:
        rows = _legendre_rows(n_top, -np.cos(2.0 * deltas))
        signed = weights * (-1.0) ** np.arange(n_top + 1)
        return signed @ rows
    if eta == 0.0:
        return np.ones_like(deltas)
    lam = 1.0 - 2.0 * eta
    total = np.full_like(deltas, weights[0])
    for n in range(1, n_top + 1):
        total += weights[n] * _thinned_fock_signal(n, deltas, lam)
    return total


@dataclass(frozen=True, eq=False)
class LikelihoodTable:
    """Fourier series of the detection signal G(delta) = sum_j c_j e^{2ij delta}.

    Coefficients are real with implicit c_{-j} = c_j, so the series is even
    and pi-periodic by construction.  The single source of truth for
    detection probabilities throughout the package.
    """

    n_bar: float
    eta: float
    coeffs: np.ndarray
    fock_cutoff: int
    tail_epsilon: float = DEFAULT_TAIL_EPSILON
    coeff_epsilon: float = DEFAULT_COEFF_EPSILON
    n_terms: int | None = None
    grid_size: int = 0

    @property
    def max_harmonic(self) -> int:
        return len(self.coeffs) - 1

    def signal(self, delta):
        """G(delta) reconstructed from the stored harmonics."""
        delta = np.asarray(delta, dtype=float)
        j = np.arange(1, len(self.coeffs))
        out = self.coeffs[0] + 2.0 * np.cos(2.0 * np.multiply.outer(delta, j)) @ self.coeffs[1:]
        return float(out) if delta.ndim == 0 else out

    def construction_params(self) -> dict:
        return {
            "n_bar": self.n_bar,
            "eta": self.eta,
            "tail_epsilon": self.tail_epsilon,
            "coeff_epsilon": self.coeff_epsilon,
            "n_terms": self.n_terms,
            "grid_size": self.grid_size,
        }


def build_likelihood_table(
    spec: TmsvSpec,
    eta: float,
    coeff_epsilon: float = DEFAULT_COEFF_EPSILON,
    n_terms: int | None = None,
    grid_size: int | None = None,
) -> LikelihoodTable:
    """Fourier-analyze G(delta) on a uniform grid over one period pi.

    Each twin-Fock term |n,n> contributes harmonics up to order n, so G is
    band-limited by the retained Fock cutoff and the discrete Fourier
    analysis is exact (up to rounding) once the grid oversamples it.  The
    default grid is the smallest power of two >= 4x the highest harmonic.
    Trailing coefficients below ``coeff_epsilon`` are dropped.

    ``n_terms`` overrides the tail-weight cutoff with an explicit number of
    twin-Fock terms (n = 0..n_terms-1), reproducing the published
    truncation when set from ``TERM_COUNT_PRESETS``.
    """
    _check_eta(eta)
    if n_terms is not None and n_terms < 1:
        raise InvalidParameterError(f"n_terms must be >= 1, got {n_terms}")
    if not (0.0 < coeff_epsilon < 1.0):
        raise InvalidParameterError(f"coeff_epsilon must lie in (0, 1), got {coeff_epsilon}")

    n_top = (n_terms - 1) if n_terms is not None else tmsv_weights(spec).n_max
    if grid_size is None:
        grid_size = 8
        while grid_size < 4 * n_top:
            grid_size *= 2
    elif grid_size < 2 * n_top + 2:
        raise TableConstructionError(
            f"grid of {grid_size} points cannot resolve harmonics up to order {n_top}"
        )

    deltas = np.pi * np.arange(grid_size) / grid_size
    g = _lossy_signal_grid(spec, eta, deltas, n_terms=n_terms)
    coeffs = np.fft.rfft(g).real / grid_size

    top = min(n_top, len(coeffs) - 1)
    while top > 0 and abs(coeffs[top]) < coeff_epsilon:
        top -= 1
    return LikelihoodTable(
        n_bar=spec.n_bar,
        eta=eta,
        coeffs=coeffs[: top + 1].copy(),
        fock_cutoff=n_top,
        tail_epsilon=spec.tail_epsilon,
        coeff_epsilon=coeff_epsilon,
        n_terms=n_terms,
        grid_size=grid_size,
    )


def table_from_params(params: dict) -> LikelihoodTable:
    """Rebuild a table from ``LikelihoodTable.construction_params()`` output."""
    spec = TmsvSpec(n_bar=params["n_bar"], tail_epsilon=params["tail_epsilon"])
    return build_likelihood_table(
        spec,
        eta=params["eta"],
        coeff_epsilon=params["coeff_epsilon"],
        n_terms=params.get("n_terms"),
        grid_size=params.get("grid_size") or None,
    )


def even_probability(table: LikelihoodTable, phi: float, theta: float) -> float:
    """P(even outcome) = (1 + G(theta - phi)) / 2, clamped to [0, 1]."""
    g = table.signal(theta - phi)
    return min(1.0, max(0.0, 0.5 * (1.0 + g)))


def fisher_information(n_bar: float, delta):
    """Per-detection Fisher information of the two-outcome parity measurement.

    cos^2(delta) * n_bar(n_bar+2) / [1 + n_bar(n_bar+2) sin^2(delta)]^2,
    maximized at delta = 0 with peak value n_bar(n_bar+2).
    """
    if not (math.isfinite(n_bar) and n_bar > 0):
        raise InvalidParameterError(f"n_bar must be finite and > 0, got {n_bar}")
    k = n_bar * (n_bar + 2.0)
    delta = np.asarray(delta, dtype=float)
    out = k * np.cos(delta) ** 2 / (1.0 + k * np.sin(delta) ** 2) ** 2
    return float(out) if delta.ndim == 0 else out


@dataclass(frozen=True)
class ReferenceLimits:
    """Benchmark mean-square errors for M detections at mean photon number n_bar."""

    heisenberg: float
    cramer_rao: float
    shot_noise: float


def reference_limits(n_bar: float, M: int) -> ReferenceLimits:
    """HL = 1/(M n_bar^2), CRB = 1/(M n_bar(n_bar+2)), SNL = 1/(M n_bar)."""
    if not (math.isfinite(n_bar) and n_bar > 0):
        raise InvalidParameterError(f"n_bar must be finite and > 0, got {n_bar}")
    if M < 1:
        raise InvalidParameterError(f"M must be >= 1, got {M}")
    return ReferenceLimits(
        heisenberg=1.0 / (M * n_bar**2),
        cramer_rao=1.0 / (M * n_bar * (n_bar + 2.0)),
        shot_noise=1.0 / (M * n_bar),
    )
