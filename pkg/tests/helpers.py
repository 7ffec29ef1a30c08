"""Shared test oracles, independent of the solver paths they check."""

from __future__ import annotations

import numpy as np

from crowdcontest.bayesian_closed import earliest_n_prob
from crowdcontest.contest import ContestConfig, best_response
from crowdcontest.numerics import SolverSettings, fixed_point


def best_response_map(config: ContestConfig):
    """Undamped simultaneous best-response map for the complete-info game."""
    def step(e: np.ndarray) -> np.ndarray:
        total = float(np.sum(e))
        return np.array([best_response(config, total - float(e[i]), i)
                         for i in range(config.n_players)])
    return step


def ne_by_iteration(config: ContestConfig, init, abs_tol: float = 1e-9,
                    damping: float = 0.5) -> np.ndarray:
    """NE oracle: damped best-response dynamics from a given start."""
    settings = SolverSettings(abs_tol=abs_tol, max_iter=100_000, damping=damping)
    return fixed_point(best_response_map(config), init, settings)


def bne_quadrature_oracle(b_of_t, times, n_players: int, e0: float,
                          quantile_fn, n_nodes: int = 400, tol: float = 1e-10,
                          max_iter: int = 5000) -> np.ndarray:
    """Deterministic BNE oracle for small player counts.

    Replaces the Monte Carlo opponent expectation by a tensor-product
    quadrature over opponent quantiles (exact up to discretization), then
    runs damped best-response iteration on the grid. Only feasible for
    n_players <= 3 (0-, 1- or 2-dimensional quadrature).
    """
    n_opp = n_players - 1
    if n_opp > 2:
        raise ValueError("quadrature oracle supports at most 3 players")
    times = np.asarray(times, dtype=float)
    b_t = np.asarray(b_of_t, dtype=float)
    nodes = quantile_fn((np.arange(n_nodes) + 0.5) / n_nodes)

    efforts = np.where(b_t > e0, 0.25 * b_t, 0.0)
    for _ in range(max_iter):
        opp = np.interp(nodes, times, efforts)
        if n_opp == 0:
            a = np.array([e0])
        elif n_opp == 1:
            a = e0 + opp
        else:
            a = e0 + (opp[:, None] + opp[None, :]).ravel()
        new_e = np.zeros_like(efforts)
        with np.errstate(divide="ignore"):
            inv_mean = np.mean(np.where(a > 0, 1.0 / np.maximum(a, 1e-300), np.inf))
        for i, b_i in enumerate(b_t):
            if b_i <= 0 or b_i * inv_mean <= 1.0:
                continue
            lo, hi = 0.0, b_i / 4.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if b_i * np.mean(a / (a + mid) ** 2) > 1.0:
                    lo = mid
                else:
                    hi = mid
            new_e[i] = 0.5 * (lo + hi)
        if float(np.max(np.abs(new_e - efforts))) < tol:
            return new_e
        efforts = 0.5 * efforts + 0.5 * new_e
    raise AssertionError("quadrature oracle did not converge")


def earliest_n_schedule(model, times, b: float, n_players: int, n: int) -> np.ndarray:
    return b * earliest_n_prob(model.cdf(times), n_players, n)


def single_peaked(values, tol: float = 0.0) -> bool:
    """True when the sequence rises (within tol) to a peak then falls."""
    values = np.asarray(values, dtype=float)
    k = int(np.argmax(values))
    rising = np.all(np.diff(values[: k + 1]) >= -tol)
    falling = np.all(np.diff(values[k:]) <= tol)
    return bool(rising and falling)
