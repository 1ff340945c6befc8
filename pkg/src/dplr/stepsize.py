"""Subgradient multiplier update and the initial step-size rule."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .lagrangian import BetaTable, beta_direction
from .model import Multipliers, SolverConfig
from .network import NetworkModel

log = logging.getLogger(__name__)

FALLBACK_STEP = 1e-3


@dataclass(frozen=True)
class StepSchedule:
    c0: float

    def __post_init__(self):
        if not self.c0 > 0:
            raise ValueError("c0 must be > 0")

    def step(self, k: int) -> float:
        """Step size of the ``k``-th update, ``k >= 1``."""
        if k < 1:
            raise ValueError("update index starts at 1")
        return self.c0 / k


def update_multipliers(lam: Multipliers, g: Multipliers, c_k: float) -> Multipliers:
    if not c_k > 0:
        raise ValueError("step size must be > 0")
    new = Multipliers(lam.lambda0 + c_k * g.lambda0,
                      lam.lambda_plus + c_k * g.lambda_plus,
                      lam.lambda_minus + c_k * g.lambda_minus)
    if not new.is_valid():
        raise ValueError("line multipliers went negative; direction has negative line entries")
    return new


def step_upper_bounds(gap: np.ndarray, slope: np.ndarray, delta) -> np.ndarray:
    """Largest step keeping each protected ``gap = beta - beta0`` on its side.

    Entries with ``|gap| < delta`` are unprotected and get ``inf``.
    """
    gap = np.asarray(gap, dtype=float)
    slope = np.asarray(slope, dtype=float)
    delta = np.broadcast_to(np.asarray(delta, dtype=float), gap.shape)
    bound = np.full(gap.shape, math.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        above = (gap >= delta) & (slope < 0)  # off side drifting down
        bound[above] = (gap[above] - delta[above]) / -slope[above]
        below = (gap <= -delta) & (slope > 0)  # on side drifting up
        bound[below] = (-delta[below] - gap[below]) / slope[below]
    return bound


def optimize_c0(lam_star: Multipliers, g: Multipliers, table: BetaTable, model: NetworkModel,
                config: SolverConfig, delta=None) -> float:
    """Largest first step in ``[0, u]`` that leaves every commitment decision
    with margin at least ``delta`` on the same side of its threshold.

    ``beta`` is affine in the step, so each protected entry contributes one
    upper bound and the answer is their minimum, capped at ``step_bound``.
    ``delta`` may be an ``(N, T)`` array; it defaults to ``config.delta``.
    """
    gap = table.beta - table.beta0[:, None]
    slope = beta_direction(model, g)
    bounds = step_upper_bounds(gap, slope, config.delta if delta is None else delta)
    return float(min(config.step_bound, bounds.min(initial=math.inf)))


def margin_holds(gap, slope, delta, c0: float) -> bool:
    """Same-side-with-margin predicate evaluated directly at step ``c0``."""
    gap = np.asarray(gap, dtype=float)
    new = gap + c0 * np.asarray(slope, dtype=float)
    delta = np.broadcast_to(np.asarray(delta, dtype=float), gap.shape)
    ok_above = ~(gap >= delta) | (new >= delta)
    ok_below = ~(gap <= -delta) | (new <= -delta)
    return bool(np.all(ok_above & ok_below))


def initial_step(lam_star, g, table, model, config) -> float:
    """``optimize_c0`` with a small positive fallback when the optimum is zero."""
    c0 = optimize_c0(lam_star, g, table, model, config)
    if c0 <= 0:
        c0 = min(config.step_bound, FALLBACK_STEP)
        log.warning("optimal initial step is 0; falling back to c0=%g", c0)
    return c0
