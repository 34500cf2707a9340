"""Two-user capacity of the covert queueing channel on a shared FCFS slot server.

The operating point mixes probe inter-arrival windows of length 1 (weight
alpha) and length 2 (weight 1 - alpha), subject to the heavy-traffic budget
alpha*(gamma1 + 1) + (1 - alpha)*(gamma2 + 1/2) = 1. The objective is the
matching mixture of per-slot entropy ceilings h_tilde. The solver eliminates
gamma2 through the budget, grid-scans (alpha, gamma1) at step 1e-3, then
polishes with a Nelder-Mead descent on the exact objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .dist import h_tilde, h_tilde_grid

GRID_STEP = 1e-3

# gamma boxes for the two-window mixture: both rates live in [0, 1/2]
_G_HI = 0.5


class BoxViolationError(ValueError):
    """A parameter fell outside its admissible box."""


@dataclass(frozen=True)
class CapacityResult2:
    capacity_bits_per_slot: float
    alpha: float
    gamma1: float
    gamma2: float
    constraint_residual: float

    def __post_init__(self):
        if not 0.0 <= self.capacity_bits_per_slot <= 1.0 + 1e-12:
            raise ValueError("capacity outside [0, 1]")
        if self.constraint_residual > 1e-9:
            raise ValueError(
                f"constraint residual {self.constraint_residual:.3e} exceeds 1e-9"
            )


def constraint_value(alpha: float, gamma1: float, gamma2: float) -> float:
    return alpha * (gamma1 + 1.0) + (1.0 - alpha) * (gamma2 + 0.5)


def objective_2user(alpha: float, gamma1: float, gamma2: float) -> float:
    """Mixture objective alpha*h_tilde(gamma1, 1) + (1-alpha)*h_tilde(gamma2, 2).

    Pure box-checked evaluation; the budget constraint is NOT enforced here.
    """
    if not 0.0 <= alpha <= 1.0:
        raise BoxViolationError(f"alpha={alpha} outside [0, 1]")
    if not 0.0 <= gamma1 <= _G_HI:
        raise BoxViolationError(f"gamma1={gamma1} outside [0, {_G_HI}]")
    if not 0.0 <= gamma2 <= _G_HI:
        raise BoxViolationError(f"gamma2={gamma2} outside [0, {_G_HI}]")
    return (
        alpha * h_tilde(gamma1, 1).bits_per_slot
        + (1.0 - alpha) * h_tilde(gamma2, 2).bits_per_slot
    )


def eliminate_gamma2(alpha: float, gamma1: float) -> float:
    """gamma2 forced by the budget constraint; requires alpha < 1."""
    return (1.0 - alpha * (gamma1 + 1.0)) / (1.0 - alpha) - 0.5


def _objective_reduced(alpha: float, gamma1: float) -> float:
    """Objective on the constraint surface; -inf when infeasible."""
    if alpha >= 1.0:
        # the budget forces gamma1 = 0, hence a zero-rate, zero-value point
        return 0.0 if abs(gamma1) < 1e-9 else -math.inf
    if not (0.0 <= alpha and 0.0 <= gamma1 <= _G_HI):
        return -math.inf
    g2 = eliminate_gamma2(alpha, gamma1)
    if not -1e-12 <= g2 <= _G_HI + 1e-12:
        return -math.inf
    g2 = min(max(g2, 0.0), _G_HI)
    return objective_2user(alpha, gamma1, g2)


def solve_capacity_2user(tolerance: float = 1e-6) -> CapacityResult2:
    """Globally maximize the two-user objective on the budget surface.

    Coarse 1e-3 grid over (alpha, gamma1) with gamma2 eliminated, followed by
    Nelder-Mead refinement of the exact objective down to `tolerance`. The
    grid argmax uses a deterministic first-hit tie-break, lexicographic in
    (alpha, gamma1).
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    alphas = np.arange(0.0, 1.0, GRID_STEP)
    g1s = np.arange(0.0, _G_HI + GRID_STEP / 2, GRID_STEP)
    h1 = h_tilde_grid(g1s, 1)

    A, G1 = np.meshgrid(alphas, g1s, indexing="ij")
    G2 = (1.0 - A * (G1 + 1.0)) / (1.0 - A) - 0.5
    feasible = (G2 >= -1e-12) & (G2 <= _G_HI + 1e-12)
    H2 = h_tilde_grid(np.clip(G2, 0.0, _G_HI), 2)
    obj = np.where(feasible, A * h1[np.newaxis, :] + (1.0 - A) * H2, -np.inf)

    ia, ig = np.unravel_index(int(np.argmax(obj)), obj.shape)
    x0 = np.array([alphas[ia], g1s[ig]])

    res = minimize(
        lambda x: -_objective_reduced(x[0], x[1]),
        x0,
        method="Nelder-Mead",
        options=dict(xatol=tolerance * 1e-2, fatol=tolerance * 1e-4, maxiter=2000),
    )
    alpha, gamma1 = float(res.x[0]), float(res.x[1])
    value = -float(res.fun)
    if value < float(obj[ia, ig]):  # refinement must never lose to the grid
        alpha, gamma1, value = float(alphas[ia]), float(g1s[ig]), float(obj[ia, ig])
    gamma2 = min(max(eliminate_gamma2(alpha, gamma1), 0.0), _G_HI)
    return CapacityResult2(
        capacity_bits_per_slot=value,
        alpha=alpha,
        gamma1=gamma1,
        gamma2=gamma2,
        constraint_residual=abs(constraint_value(alpha, gamma1, gamma2) - 1.0),
    )


def solve_on_alpha_slice(alpha: float, tolerance: float = 1e-6) -> CapacityResult2:
    """Best feasible point with the window mix frozen at `alpha`."""
    if not 0.0 <= alpha <= 1.0:
        raise BoxViolationError(f"alpha={alpha} outside [0, 1]")
    if alpha == 1.0:
        return CapacityResult2(0.0, 1.0, 0.0, 0.0, 0.0)
    g1s = np.arange(0.0, _G_HI + GRID_STEP / 2, GRID_STEP)
    vals = np.array([_objective_reduced(alpha, g) for g in g1s])
    best = int(np.argmax(vals))
    res = minimize(
        lambda x: -_objective_reduced(alpha, float(x[0])),
        np.array([g1s[best]]),
        method="Nelder-Mead",
        options=dict(xatol=tolerance * 1e-2, fatol=tolerance * 1e-4, maxiter=500),
    )
    gamma1 = float(res.x[0])
    value = -float(res.fun)
    if value < vals[best]:
        gamma1, value = float(g1s[best]), float(vals[best])
    gamma2 = min(max(eliminate_gamma2(alpha, gamma1), 0.0), _G_HI)
    return CapacityResult2(
        capacity_bits_per_slot=value,
        alpha=alpha,
        gamma1=gamma1,
        gamma2=gamma2,
        constraint_residual=abs(constraint_value(alpha, gamma1, gamma2) - 1.0),
    )
