"""Phase posterior as a truncated Fourier series on the period-pi circle.

The density is P(phi) = (1/pi) sum_{j=-x..x} a_j e^{2ij phi} on phi in
[0, pi), with a_0 = 1 fixed (unit mass) and a_{-j} = conj(a_j) implicit.
Only the half-spectrum a_0..a_x is stored.  A Bayes update multiplies the
density by (1 +/- G(theta - phi))/2 and renormalizes, which is a short
complex convolution in coefficient space.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CapacityError,
    DegenerateUpdateError,
    InvalidParameterError,
    UndefinedEstimateError,
)
from .signal_model import LikelihoodTable

# Hard cap on the posterior order, with an audit of what truncation discards.
MAX_ORDER = 4096
TAIL_ENERGY_TOL = 1e-14


class Outcome(enum.Enum):
    EVEN = "even"
    ODD = "odd"


@dataclass(frozen=True, eq=False)
class FourierPosterior:
    """Half-spectrum coefficients a_0..a_x of the phase density (a_0 = 1)."""

    coeffs: np.ndarray

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def full_spectrum(self) -> np.ndarray:
        """Coefficients a_{-x}..a_x with conjugate symmetry materialized."""
        return np.concatenate([np.conj(self.coeffs[:0:-1]), self.coeffs])

    def density(self, phi):
        """Evaluate P(phi); real by conjugate symmetry."""
        phi = np.asarray(phi, dtype=float)
        j = np.arange(1, len(self.coeffs))
        re = 1.0 + 2.0 * (np.cos(2.0 * np.multiply.outer(phi, j)) @ self.coeffs[1:].real
                          - np.sin(2.0 * np.multiply.outer(phi, j)) @ self.coeffs[1:].imag)
        out = re / np.pi
        return float(out) if phi.ndim == 0 else out


def flat_prior() -> FourierPosterior:
    """The no-information density, P(phi) = 1/pi."""
    return FourierPosterior(coeffs=np.ones(1, dtype=complex))


def likelihood_kernel(table: LikelihoodTable, outcome: Outcome, theta: float) -> np.ndarray:
    """Fourier coefficients of P(outcome | phi, theta) over harmonics -x_L..x_L.

    G(theta - phi) contributes c_|j| e^{-2ij theta} at harmonic j of
    e^{2ij phi}; the even/odd likelihood is (1 +/- G)/2.
    """
    x_l = table.max_harmonic
    js = np.arange(-x_l, x_l + 1)
    kernel = 0.5 * table.coeffs[np.abs(js)] * np.exp(-2j * js * theta)
    if outcome is Outcome.ODD:
        kernel = -kernel
    kernel[x_l] += 0.5
    return kernel


def update(post: FourierPosterior, mu: Outcome, theta: float, table: LikelihoodTable) -> FourierPosterior:
    """Bayes update: convolve with the outcome likelihood, renormalize a_0 to 1.

    Works on the stored half-spectrum: the convolution of the stored
    coefficients covers every product term with a_p for p >= 0, and the
    remaining terms (which reach into the implicit conjugate half) only
    touch harmonics m < x_L, where they are added explicitly.

    The new order is min(x + x_L, MAX_ORDER); truncation at the cap raises
    ``CapacityError`` unless the discarded coefficient energy is negligible.
    """
    kernel = likelihood_kernel(table, mu, theta)
    x_l = table.max_harmonic
    x = post.order
    tilde = np.convolve(post.coeffs, kernel)[x_l:]
    upper = kernel[x_l:]
    for q in range(1, min(x, x_l) + 1):
        tilde[: x_l - q + 1] += np.conj(post.coeffs[q]) * upper[q:]

    new_x = min(x + x_l, MAX_ORDER)
    if x + x_l > MAX_ORDER:
        energy = np.abs(tilde) ** 2
        dropped = 2.0 * np.sum(energy[MAX_ORDER + 1 :])
        total = energy[0] + 2.0 * np.sum(energy[1:])
        if dropped > TAIL_ENERGY_TOL * total:
            raise CapacityError(
                f"posterior order cap {MAX_ORDER} would discard a coefficient-energy "
                f"fraction of {dropped / total:.3e}"
            )
    mass = tilde[0].real
    if not (mass > 0.0) or not math.isfinite(mass):
        raise DegenerateUpdateError(
            f"update with outcome={mu.value} at theta={theta!r} left total mass {mass!r}"
        )
    coeffs = tilde[: new_x + 1] / mass
    coeffs[0] = 1.0
    return FourierPosterior(coeffs=coeffs)


def sharpness(post: FourierPosterior) -> float:
    """|<e^{2i phi}>| of the density: 0 for flat, 1 for a point mass."""
    return float(abs(post.coeffs[1])) if post.order >= 1 else 0.0


def estimate(post: FourierPosterior) -> float:
    """Point estimate arg(<e^{2i phi}>)/2 = -arg(a_1)/2, mapped into (-pi/2, pi/2]."""
    if sharpness(post) == 0.0:
        raise UndefinedEstimateError("posterior has zero sharpness; no phase estimate exists")
    phi_hat = -0.5 * float(np.angle(post.coeffs[1]))
    if phi_hat <= -np.pi / 2:
        phi_hat += np.pi
    return phi_hat


def wrapped_error(estimate_value: float, true_phi: float) -> float:
    """Estimate minus truth, wrapped onto the period-pi interval (-pi/2, pi/2]."""
    return np.pi / 2 - (np.pi / 2 - (estimate_value - true_phi)) % np.pi


def shifted(post: FourierPosterior, delta: float) -> FourierPosterior:
    """Posterior of phi - delta, i.e. the density translated by +delta."""
    j = np.arange(len(post.coeffs))
    coeffs = post.coeffs * np.exp(-2j * j * delta)
    coeffs[0] = 1.0
    return FourierPosterior(coeffs=coeffs)


def density_curve(post: FourierPosterior, grid_size: int) -> np.ndarray:
    """Density sampled on a uniform grid over (-pi/2, pi/2], as (phi, P) rows.

    Requires grid_size >= 2x+1 so the highest harmonic is resolved.
    """
    if grid_size < 2 * post.order + 1:
        raise InvalidParameterError(
            f"grid_size {grid_size} cannot resolve a posterior of order {post.order}"
        )
    phis = -np.pi / 2 + np.pi * np.arange(1, grid_size + 1) / grid_size
    return np.column_stack([phis, post.density(phis)])


def interval_mass(post: FourierPosterior, lo: float, hi: float) -> float:
    """Probability mass of [lo, hi] (within one period; hi - lo <= pi)."""
    if not lo <= hi:
        raise InvalidParameterError(f"need lo <= hi, got [{lo}, {hi}]")
    j = np.arange(1, len(post.coeffs))
    segments = (np.exp(2j * j * hi) - np.exp(2j * j * lo)) / (2j * j)
    return float(((hi - lo) + 2.0 * np.sum(post.coeffs[1:] * segments).real) / np.pi)


def static_posterior(M: int, ell: int, theta: float, table: LikelihoodTable) -> FourierPosterior:
    """Posterior of a fixed-theta record: proportional to P_e^ell * P_o^(M-ell).

    The outcome factors commute, so they are applied proportionally
    interleaved: a long streak of the rare outcome would renormalize
    against a near-vanishing mass at every step and amplify rounding
    error, while interleaving keeps every intermediate mass moderate.
    """
    if not 0 <= ell <= M:
        raise InvalidParameterError(f"need 0 <= ell <= M, got ell={ell}, M={M}")
    post = flat_prior()
    evens_applied = 0
    for m in range(1, M + 1):
        if evens_applied * M < ell * m:
            post = update(post, Outcome.EVEN, theta, table)
            evens_applied += 1
        else:
            post = update(post, Outcome.ODD, theta, table)
    return post


def check_invariants(post: FourierPosterior, grid_size: int = 512):
    """Assert the representation invariants; raises AssertionError on violation."""
    assert post.coeffs[0] == 1.0, f"a_0 = {post.coeffs[0]!r}, expected exactly 1"
    moduli = np.abs(post.coeffs)
    assert np.all(moduli <= 1.0 + 1e-9), f"max |a_j| = {moduli.max()} exceeds 1"
    grid_size = max(grid_size, 2 * post.order + 1)
    phis = np.pi * np.arange(grid_size) / grid_size
    dens = post.density(phis)
    assert dens.min() >= -1e-6, f"density dips to {dens.min()}"
    assert abs(np.mean(dens) * np.pi - 1.0) < 1e-9, f"mass = {np.mean(dens) * np.pi}"
