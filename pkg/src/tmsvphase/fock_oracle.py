"""Brute-force two-mode Fock-space validator.

Everything here is deliberately independent of ``signal_model``: the
interferometer is simulated as explicit matrix exponentials in the
2n-photon sector, and detector loss as an explicit binomial transition
matrix.  Small-n only; used to certify the fast paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, pi

import numpy as np
from scipy.linalg import expm

from .errors import InvalidParameterError, OracleScaleError
from .signal_model import PortDistribution, TmsvSpec

ORACLE_N_CAP = 12


@dataclass(frozen=True, eq=False)
class FockStateVector:
    """State in the 2n-photon two-mode sector, basis |k, 2n-k> for k = 0..2n."""

    n_total: int
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def port_marginal(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _sector_generators(n: int):
    """J_x and J_z of the two-mode sector with 2n photons (basis |k, 2n-k>)."""
    dim = 2 * n + 1
    jx = np.zeros((dim, dim), dtype=complex)
    for k in range(2 * n):
        amp = 0.5 * np.sqrt((k + 1) * (2 * n - k))
        jx[k + 1, k] = amp
        jx[k, k + 1] = amp
    jz = np.diag(np.arange(dim) - n).astype(complex)
    return jx, jz


def simulate_mzi(n: int, delta: float) -> PortDistribution:
    """Push |n,n> through beam splitter, relative phase, beam splitter.

    The 50:50 beam splitter is expm(i pi/2 Jx) (single-photon matrix
    [[1, i], [i, 1]]/sqrt(2)) and the phase is the unit-determinant
    expm(i (delta + pi/2) Jz); the pi/2 offset realizes the same
    bunched-at-zero convention as ``signal_model``.
    """
    if n < 0:
        raise InvalidParameterError(f"n must be >= 0, got {n}")
    if n > ORACLE_N_CAP:
        raise OracleScaleError(f"oracle limited to n <= {ORACLE_N_CAP}, got {n}")
    if n == 0:
        return PortDistribution(n=0, delta=float(delta), probs=np.array([1.0]))
    jx, jz = _sector_generators(n)
    beam_splitter = expm(1j * (pi / 2) * jx)
    phase = expm(1j * (float(delta) + pi / 2) * jz)
    state = np.zeros(2 * n + 1, dtype=complex)
    state[n] = 1.0
    for u in (beam_splitter, phase, beam_splitter):
        state = u @ state
        vec = FockStateVector(n_total=2 * n, amplitudes=state)
        if abs(vec.norm() - 1.0) > 1e-12:
            raise OracleScaleError(f"unitarity lost at n={n}: norm={vec.norm()!r}")
    return PortDistribution(n=n, delta=float(delta), probs=np.abs(state) ** 2)


def thin(dist: PortDistribution, eta: float) -> np.ndarray:
    """Distribution of the detected count after binomial loss.

    P(t) = sum_s probs[s] C(s,t) eta^t (1-eta)^(s-t).
    """
    if not (0.0 <= eta <= 1.0):
        raise InvalidParameterError(f"eta must lie in [0, 1], got {eta}")
    s_max = len(dist.probs) - 1
    out = np.zeros(s_max + 1, dtype=float)
    for s, p_s in enumerate(dist.probs):
        if p_s == 0.0:
            continue
        for t in range(s + 1):
            out[t] += p_s * comb(s, t) * eta**t * (1.0 - eta) ** (s - t)
    return out


@dataclass(frozen=True)
class OracleEvenProbability:
    value: float
    tail_bound: float


def oracle_even_probability(spec: TmsvSpec, eta: float, delta: float, n_cap: int = ORACLE_N_CAP) -> OracleEvenProbability:
    """Full enumeration of P(even detected count) up to twin-Fock index n_cap.

    The residual weight of twin-Fock terms beyond n_cap bounds the truncation
    error of the enumeration and is reported alongside the value.
    """
    if n_cap > ORACLE_N_CAP:
        raise OracleScaleError(f"oracle limited to n <= {ORACLE_N_CAP}, got n_cap={n_cap}")
    if not (0.0 <= eta <= 1.0):
        raise InvalidParameterError(f"eta must lie in [0, 1], got {eta}")
    t = spec.t
    p_even = 0.0
    for n in range(n_cap + 1):
        weight = (1.0 - t) * t**n
        detected = thin(simulate_mzi(n, delta), eta)
        p_even += weight * float(np.sum(detected[0::2]))
    return OracleEvenProbability(value=p_even, tail_bound=t ** (n_cap + 1))
