"""Controlled-phase selection before each detection.

The adaptive rule picks the theta that maximizes the expected sharpness of
the posterior after the next detection; with no analytic optimizer for this
objective, a resolution-guaranteed coarse grid is refined by golden-section
search.  The static rule always returns a fixed theta.  A random initial
phase (used for the first adaptive detection, where the objective is
constant) makes the scheme covariant.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi, sqrt

import numpy as np

from .bayes_filter import FourierPosterior
from .errors import InvalidParameterError
from .signal_model import LikelihoodTable

_GOLDEN = (sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class AdaptivePolicy:
    """Maximize expected post-detection sharpness on a grid + local refinement.

    The effective grid never drops below 8*(x_L + 2) points so that every
    oscillation of the objective (a trigonometric polynomial of harmonic
    order <= x_L + 2) is resolved.
    """

    grid_points: int = 256
    refine_tolerance: float = 1e-6

    def __post_init__(self):
        if self.grid_points < 8:
            raise InvalidParameterError(f"grid_points must be >= 8, got {self.grid_points}")
        if not self.refine_tolerance > 0:
            raise InvalidParameterError(f"refine_tolerance must be > 0, got {self.refine_tolerance}")


@dataclass(frozen=True)
class StaticPolicy:
    """Always use the same controlled phase."""

    theta0: float = 0.0


ControlPolicy = AdaptivePolicy | StaticPolicy


def initial_phase(rng: np.random.Generator) -> float:
    """First controlled phase: uniform on [0, pi)."""
    return float(rng.random() * pi)


class SharpnessObjective:
    """Expected post-detection sharpness as a function of theta.

    For one candidate theta the unnormalized updated coefficient of
    e^{-2i phi} is (a_{-1} +/- S(theta))/2 per outcome branch, with
    S(theta) = sum_{|j| <= x_L} c_|j| a_{-1-j} e^{-2ij theta}; the objective
    is the sum of the two branch moduli.  Only the posterior window of width
    2 x_L + 1 around harmonic -1 enters, so one evaluation costs O(x_L).

    The grid-stage phase matrix is cached, which makes this object the cheap
    way to run many selections against one table.
    """

    def __init__(self, table: LikelihoodTable, grid_points: int):
        self.table = table
        x_l = table.max_harmonic
        self.x_l = x_l
        self.n_grid = max(int(grid_points), 8 * (x_l + 2))
        self.grid = pi * np.arange(self.n_grid) / self.n_grid
        js = np.arange(-x_l, x_l + 1)
        self._js = js
        self._c_window = table.coeffs[np.abs(js)]
        self._grid_phases = None  # built on first grid evaluation
        # indices of a_{-1-j}; negative harmonics resolve via conjugation
        self._idx = -1 - js
        self._absidx = np.abs(self._idx)

    def _window(self, post: FourierPosterior) -> np.ndarray:
        coeffs = post.coeffs
        if len(coeffs) <= self._absidx.max():
            coeffs = np.concatenate([coeffs, np.zeros(self._absidx.max() + 1 - len(coeffs), dtype=complex)])
        gathered = coeffs[self._absidx]
        return np.where(self._idx >= 0, gathered, np.conj(gathered))

    def branch_terms(self, post: FourierPosterior) -> tuple[complex, np.ndarray]:
        a_minus1 = np.conj(post.coeffs[1]) if post.order >= 1 else 0.0 + 0.0j
        return a_minus1, self._c_window * self._window(post)

    def on_grid(self, post: FourierPosterior) -> np.ndarray:
        if self._grid_phases is None:
            self._grid_phases = np.exp(-2j * np.outer(self.grid, self._js))
        a_minus1, b = self.branch_terms(post)
        s = self._grid_phases @ b
        return 0.5 * (np.abs(a_minus1 + s) + np.abs(a_minus1 - s))

    def at_terms(self, a_minus1: complex, b: np.ndarray, theta: float) -> float:
        s = np.exp(-2j * self._js * theta) @ b
        return 0.5 * (abs(a_minus1 + s) + abs(a_minus1 - s))

    def at(self, post: FourierPosterior, theta: float) -> float:
        a_minus1, b = self.branch_terms(post)
        return self.at_terms(a_minus1, b, theta)


def predicted_average_sharpness(post: FourierPosterior, table: LikelihoodTable, theta: float) -> float:
    """Average over both outcomes of the post-update (unnormalized) sharpness."""
    return SharpnessObjective(table, 8).at(post, theta)


def _golden_section_max(f, lo: float, hi: float, tol: float) -> float:
    c1 = hi - (hi - lo) * _GOLDEN
    c2 = lo + (hi - lo) * _GOLDEN
    f1, f2 = f(c1), f(c2)
    while hi - lo > tol:
        if f1 < f2:
            lo, c1, f1 = c1, c2, f2
            c2 = lo + (hi - lo) * _GOLDEN
            f2 = f(c2)
        else:
            hi, c2, f2 = c2, c1, f1
            c1 = hi - (hi - lo) * _GOLDEN
            f1 = f(c1)
    return 0.5 * (lo + hi)


def choose_phase(
    post: FourierPosterior,
    table: LikelihoodTable,
    policy: ControlPolicy,
    rng: np.random.Generator | None = None,
    objective: SharpnessObjective | None = None,
) -> float:
    """Next controlled phase in [0, pi); deterministic given the inputs.

    Static: the configured theta0 (rng ignored).  Adaptive: argmax of the
    expected sharpness over the coarse grid (ties break to the lowest
    theta), then golden-section refinement within one grid cell.
    """
    if isinstance(policy, StaticPolicy):
        return policy.theta0 % pi
    if objective is None:
        objective = SharpnessObjective(table, policy.grid_points)
    values = objective.on_grid(post)
    # lowest theta wins on ties; a relative margin absorbs last-ulp noise on
    # objectives that are constant or mirror-degenerate
    tie_floor = values.max() * (1.0 - 1e-12)
    best = int(np.argmax(values >= tie_floor))
    half_cell = pi / objective.n_grid
    theta0 = objective.grid[best]
    a_minus1, b = objective.branch_terms(post)
    refined = _golden_section_max(
        lambda th: objective.at_terms(a_minus1, b, th),
        theta0 - half_cell,
        theta0 + half_cell,
        policy.refine_tolerance,
    )
    if objective.at_terms(a_minus1, b, refined) <= values[best] * (1.0 + 1e-12):
        refined = theta0
    return refined % pi
