"""Open crowdsensing system: contributors arrive as a Poisson process and
compete under the earliest-n or termination-time strategy. Stage-II solvers
mirror the closed system with arrival-sequence priors; Stage-I metrics use
the collapsed conditional-efficiency closed form where it exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .bayesian_closed import (StageOneReport, TypeGrid, calibrate_b,
                              _iterate_grid_bne)
from .errors import InvalidInput, NoConvergence
from .numerics import RngSeed, SolverSettings, bisect, golden_section_max, spawn_rng
from .timing import (ConstantWeight, PoissonModel, WeightFunction,
                     sample_arrival_sequences)

OPEN_BNE_SETTINGS = SolverSettings(abs_tol=1e-8, max_iter=2000, damping=0.5)
_TAIL_MASS = 1e-10


@dataclass(frozen=True)
class OpenEarliestN:
    n: int


@dataclass(frozen=True)
class OpenTermination:
    deadline: float


@dataclass(frozen=True)
class OpenConfig:
    """Open-system instance: Poisson arrivals truncated at M contributors."""

    poisson: PoissonModel
    strategy: OpenEarliestN | OpenTermination
    weightfn: WeightFunction = ConstantWeight()
    max_reward: float = 1.0
    e0_ratio: float = 0.0
    budget: float = 1.0

    def __post_init__(self):
        s = self.strategy
        if isinstance(s, OpenEarliestN):
            if not 1 <= s.n <= self.poisson.truncation:
                raise InvalidInput("need 1 <= n <= truncation M")
        elif isinstance(s, OpenTermination):
            if not s.deadline > 0:
                raise InvalidInput("deadline must be > 0")
        else:
            raise InvalidInput(f"unknown strategy {s!r}")
        if not self.max_reward > 0 or self.e0_ratio < 0 or not self.budget > 0:
            raise InvalidInput("need max_reward > 0, e0_ratio >= 0, budget > 0")

    @property
    def nature_effort(self) -> float:
        return self.e0_ratio * self.max_reward

    def with_reward(self, b: float) -> "OpenConfig":
        return replace(self, max_reward=b)


def open_earliest_n_prob(rate: float, s, n: int):
    """Probability that a contributor joining at epoch s is among the n
    earliest arrivals: P(N(s) <= n-1) = sum_{k<n} exp(-rate s)(rate s)^k/k!."""
    if rate <= 0 or n < 1:
        raise InvalidInput("need rate > 0 and n >= 1")
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise InvalidInput("s must be >= 0")
    lam_s = rate * s_arr
    term = np.exp(-lam_s)
    total = term.copy()
    for k in range(1, n):
        term = term * lam_s / k
        total += term
    out = np.clip(total, 0.0, 1.0)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Earliest-n (open)
# ---------------------------------------------------------------------------

def _open_grid_times(config: OpenConfig, n: int, grid_size: int) -> np.ndarray:
    """Grid reaching past the participation region: out to where the reward
    schedule falls below e0 (or to negligible selection probability when
    e0 = 0)."""
    rate, b, e0 = config.poisson.rate, config.max_reward, config.nature_effort
    floor = min(e0 / b, 0.999) if e0 > 0 else 0.0
    floor = max(floor, 1e-3)

    def gap(s):
        return open_earliest_n_prob(rate, s, n) - floor

    hi = 1.0 / rate
    while gap(hi) > 0:
        hi *= 2.0
        if hi > 1e12 / rate:
            break
    s_max = bisect(gap, 0.0, hi, SolverSettings(abs_tol=1e-10)) if gap(hi) <= 0 else hi
    return np.linspace(0.0, 1.25 * s_max, grid_size)


def solve_bne_open_earliest_n(config: OpenConfig, grid_size: int = 64,
                              mc_samples: int = 20_000, seed: RngSeed = 0,
                              settings: SolverSettings = OPEN_BNE_SETTINGS
                              ) -> TypeGrid:
    """Stage-II BNE with b(s) = b P(N(s) <= n-1); after isolating the tagged
    contributor, opponents form a fresh (M-1)-epoch Poisson sequence."""
    if not isinstance(config.strategy, OpenEarliestN):
        raise InvalidInput("config.strategy must be OpenEarliestN")
    n = config.strategy.n
    times = _open_grid_times(config, n, grid_size)
    b_t = config.max_reward * open_earliest_n_prob(config.poisson.rate, times, n)
    e0 = config.nature_effort
    n_opp = config.poisson.truncation - 1
    if n_opp == 0:
        return TypeGrid(times, np.maximum(np.sqrt(b_t * e0) - e0, 0.0), b_t)

    rng = spawn_rng(seed, 0x09e4)
    opp_epochs = sample_arrival_sequences(config.poisson, rng, mc_samples, n_opp)
    return _iterate_grid_bne(times, b_t, opp_epochs, e0, settings)


def stage1_open_earliest_n(config: OpenConfig, grid: TypeGrid,
                           mc_samples: int = 100_000, seed: RngSeed = 1
                           ) -> StageOneReport:
    """Stage-I metrics by Monte Carlo over full M-epoch arrival sequences.
    The earliest-n subset of a sequence is simply its first n epochs."""
    if not isinstance(config.strategy, OpenEarliestN):
        raise InvalidInput("config.strategy must be OpenEarliestN")
    n = config.strategy.n
    b, e0 = config.max_reward, config.nature_effort
    rng = spawn_rng(seed, 0x07e4)
    epochs = sample_arrival_sequences(config.poisson, rng, mc_samples)
    efforts = np.interp(epochs, grid.times, grid.efforts)
    weights = np.asarray(config.weightfn(epochs))
    util_draw = np.sum(weights * efforts, axis=1)
    paid = b * np.sum(efforts[:, :n], axis=1)
    denom = e0 + np.sum(efforts, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        payment = np.where(denom > 0, paid / denom, 0.0)
        eff = np.where(paid > 0, util_draw * denom / paid, 0.0)
    return StageOneReport(
        parameter=float(n), calibrated_b=b,
        expected_utility=float(np.mean(util_draw)),
        expected_payment=float(np.mean(payment)),
        payment_stderr=float(np.std(payment, ddof=1) / math.sqrt(mc_samples)),
        expected_efficiency=float(np.mean(eff)),
        efficiency_stderr=float(np.std(eff, ddof=1) / math.sqrt(mc_samples)))


# ---------------------------------------------------------------------------
# Termination time (open)
# ---------------------------------------------------------------------------

def open_termination_prob(rate: float, deadline: float, k) -> float | np.ndarray:
    """Probability that a contributor who joined before the deadline meets k
    other in-time contributors:
        P(k, inf) = exp(-rate T)(rate T)^{k+1} / ((k+1)! (1 - exp(-rate T))),
    a unit-mass distribution over k >= 0."""
    lam_t = rate * deadline
    if lam_t <= 0:
        raise InvalidInput("rate * deadline must be > 0")
    k_arr = np.asarray(k)
    if np.any(k_arr < 0):
        raise InvalidInput("k must be >= 0")
    log_p = (k_arr + 1.0) * math.log(lam_t) - lam_t \
        - np.array([math.lgamma(j + 2.0) for j in np.atleast_1d(k_arr)]
                   ).reshape(k_arr.shape) - math.log(-math.expm1(-lam_t))
    out = np.exp(log_p)
    return out if out.ndim else float(out)


def _truncated_meeting_pmf(rate: float, deadline: float) -> np.ndarray:
    """P(k, inf) for k = 0.. until the tail mass drops below 1e-10."""
    pmf = []
    total = 0.0
    k = 0
    while total < 1.0 - _TAIL_MASS:
        pmf.append(float(open_termination_prob(rate, deadline, k)))
        total += pmf[-1]
        k += 1
        if k > 100_000:
            raise NoConvergence("meeting-count pmf failed to accumulate mass",
                                residual=1.0 - total, iterations=k)
    return np.asarray(pmf)


def solve_bne_open_termination(config: OpenConfig,
                               settings: SolverSettings = SolverSettings(abs_tol=1e-12)
                               ) -> float:
    """Symmetric in-time effort: bisection on
    sum_k P(k, inf) b (e0 + k e) / (e0 + (k+1) e)^2 = 1 (strictly decreasing
    left side), with the k-sum truncated by tail mass."""
    if not isinstance(config.strategy, OpenTermination):
        raise InvalidInput("config.strategy must be OpenTermination")
    b, e0 = config.max_reward, config.nature_effort
    pk = _truncated_meeting_pmf(config.poisson.rate, config.strategy.deadline)
    k = np.arange(pk.size)

    def lhs_minus_one(e: float) -> float:
        return float(np.sum(pk * b * (e0 + k * e) / (e0 + (k + 1) * e) ** 2)) - 1.0

    if e0 > 0 and b <= e0:
        return 0.0
    return max(bisect(lhs_minus_one, 1e-12 * b, b, settings), 0.0)


def open_termination_conditional_eff(m: int, e_star: float, b: float,
                                     deadline: float, weightfn: WeightFunction,
                                     e0: float) -> float:
    """Requester efficiency conditioned on m in-time arrivals, collapsed to
    (e0 + m e*) / (b T) * integral_0^T w(x) dx; zero when nobody showed up."""
    if m < 0:
        raise InvalidInput("m must be >= 0")
    if m == 0:
        return 0.0
    if b <= 0 or deadline <= 0:
        raise InvalidInput("need b > 0 and deadline > 0")
    return (e0 + m * e_star) / (b * deadline) * weightfn.integral(0.0, deadline)


def stage1_open_termination(config: OpenConfig, e_star: float | None = None
                            ) -> StageOneReport:
    """Closed-form Stage-I metrics for the open termination strategy:
    expectations over the arrival count m ~ Poisson(rate T), with the
    conditional efficiency collapsed through the order-statistics identity."""
    if not isinstance(config.strategy, OpenTermination):
        raise InvalidInput("config.strategy must be OpenTermination")
    t_end = config.strategy.deadline
    b, e0 = config.max_reward, config.nature_effort
    if e_star is None:
        e_star = solve_bne_open_termination(config)
    rate = config.poisson.rate
    lam_t = rate * t_end
    m_max = config.poisson.truncation
    m = np.arange(1, m_max + 1)
    log_pmf = m * math.log(lam_t) - lam_t - np.array(
        [math.lgamma(j + 1.0) for j in m])
    pmf = np.exp(log_pmf)
    iw = config.weightfn.integral(0.0, t_end)

    utility = float(np.sum(pmf * m * e_star)) * iw / t_end
    payment = float(np.sum(pmf * b * m * e_star / (e0 + m * e_star))) \
        if e_star > 0 else 0.0
    efficiency = float(np.sum(pmf * (e0 + m * e_star))) * iw / (b * t_end)
    return StageOneReport(parameter=t_end, calibrated_b=b,
                          expected_utility=utility,
                          expected_payment=payment, payment_stderr=0.0,
                          expected_efficiency=efficiency, efficiency_stderr=0.0)


def calibrated_open_stage1(config: OpenConfig, grid_size: int = 64,
                           mc_samples: int = 20_000, stage1_samples: int = 100_000,
                           seed: RngSeed = 0,
                           settings: SolverSettings = OPEN_BNE_SETTINGS
                           ) -> tuple[TypeGrid | None, StageOneReport]:
    """Budget-calibrated Stage-I report (both open strategies scale linearly
    in b because e0 tracks b)."""
    if isinstance(config.strategy, OpenTermination):
        def payment_at(b: float):
            rep = stage1_open_termination(config.with_reward(b))
            return rep.expected_payment, 0.0

        b_star = calibrate_b(payment_at, config.budget, b_hint=config.max_reward)
        return None, stage1_open_termination(config.with_reward(b_star))

    base = solve_bne_open_earliest_n(config, grid_size, mc_samples, seed, settings)

    def payment_at(b: float):
        rep = stage1_open_earliest_n(config.with_reward(b),
                                     base.scaled(b / config.max_reward),
                                     stage1_samples, seed + 1)
        return rep.expected_payment, rep.payment_stderr

    b_star = calibrate_b(payment_at, config.budget, b_hint=config.max_reward)
    grid = base.scaled(b_star / config.max_reward)
    report = stage1_open_earliest_n(config.with_reward(b_star), grid,
                                    stage1_samples, seed + 1)
    return grid, report


def open_optimal_T(config: OpenConfig, t_grid, refine: bool = True,
                   **kwargs) -> tuple[float, list[StageOneReport]]:
    """Deadline maximizing the open-system expected efficiency: exhaustive
    sweep over `t_grid` (each candidate budget-calibrated) plus golden-section
    refinement between the best grid neighbours."""
    t_grid = sorted(float(t) for t in t_grid)
    if not t_grid:
        raise InvalidInput("t_grid must be nonempty")
    reports = []
    for t in t_grid:
        cfg = replace(config, strategy=OpenTermination(t))
        _, rep = calibrated_open_stage1(cfg, **kwargs)
        reports.append(rep)
    values = [r.expected_efficiency for r in reports]
    k = int(np.argmax(values))
    t_best = t_grid[k]
    if refine and 0 < k < len(t_grid) - 1:
        def score(t: float) -> float:
            cfg = replace(config, strategy=OpenTermination(t))
            _, rep = calibrated_open_stage1(cfg, **kwargs)
            return rep.expected_efficiency

        t_best = golden_section_max(score, t_grid[k - 1], t_grid[k + 1], tol=1e-4)
    return t_best, reports
