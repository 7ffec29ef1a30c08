"""Joining-time laws (empirical from traces, parametric), requester weight
functions w(t), and the Poisson arrival model for the open system.

All solver-facing times are dimensionless fractional hours measured from the
start of the observation window; trace ingestion performs the conversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .errors import EmptyTrace, InvalidInput, MalformedRecord
from .numerics import RngSeed, spawn_rng

_TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"


# ---------------------------------------------------------------------------
# Joining-time models
# ---------------------------------------------------------------------------

class JoinTimeModel:
    """Common interface: cdf / pdf / quantile / sample over the support."""

    support: tuple[float, float]

    def cdf(self, t):
        raise NotImplementedError

    def pdf(self, t):
        raise NotImplementedError

    def quantile(self, q):
        raise NotImplementedError

    def sample(self, rng_or_seed: np.random.Generator | RngSeed, n: int) -> np.ndarray:
        """Inverse-CDF sampling; accepts a Generator or a bare seed."""
        rng = rng_or_seed if isinstance(rng_or_seed, np.random.Generator) \
            else spawn_rng(rng_or_seed)
        return np.asarray(self.quantile(rng.random(n)), dtype=float)


@dataclass(frozen=True)
class UniformJoinTimes(JoinTimeModel):
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.hi > self.lo:
            raise InvalidInput(f"need hi > lo, got [{self.lo}, {self.hi}]")
        object.__setattr__(self, "support", (self.lo, self.hi))

    def cdf(self, t):
        return np.clip((np.asarray(t, dtype=float) - self.lo) / (self.hi - self.lo),
                       0.0, 1.0)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= self.lo) & (t <= self.hi)
        return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)

    def quantile(self, q):
        return self.lo + np.asarray(q, dtype=float) * (self.hi - self.lo)


@dataclass(frozen=True)
class ExponentialJoinTimes(JoinTimeModel):
    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise InvalidInput("rate must be > 0")
        object.__setattr__(self, "support", (0.0, math.inf))

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, -np.expm1(-self.rate * np.maximum(t, 0.0)), 0.0)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, self.rate * np.exp(-self.rate * np.maximum(t, 0.0)), 0.0)

    def quantile(self, q):
        return -np.log1p(-np.asarray(q, dtype=float)) / self.rate


class TableJoinTimes(JoinTimeModel):
    """Piecewise-linear CDF through given (time, probability) knots."""

    def __init__(self, times, cdf_values):
        xs = np.asarray(times, dtype=float)
        ys = np.asarray(cdf_values, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise InvalidInput("need matching 1-d knot arrays with >= 2 points")
        if np.any(np.diff(xs) <= 0):
            raise InvalidInput("knot times must be strictly increasing")
        if np.any(np.diff(ys) < 0) or abs(ys[0]) > 1e-9 or abs(ys[-1] - 1.0) > 1e-9:
            raise InvalidInput("cdf knots must rise from 0 to 1")
        self._xs = xs
        self._ys = ys
        self.support = (float(xs[0]), float(xs[-1]))

    def cdf(self, t):
        return np.interp(np.asarray(t, dtype=float), self._xs, self._ys,
                         left=0.0, right=1.0)

    def pdf(self, t):
        """Exact derivative of the piecewise-linear CDF (right-continuous)."""
        t = np.asarray(t, dtype=float)
        slopes = np.diff(self._ys) / np.diff(self._xs)
        idx = np.clip(np.searchsorted(self._xs, t, side="right") - 1, 0,
                      slopes.size - 1)
        inside = (t >= self._xs[0]) & (t < self._xs[-1])
        return np.where(inside, slopes[idx], 0.0)

    def quantile(self, q):
        return np.interp(np.asarray(q, dtype=float), self._ys, self._xs)


class EmpiricalJoinTimes(TableJoinTimes):
    """Linearly-interpolated empirical CDF of per-user first-arrival times,
    anchored at F(window start) = 0. Also carries a Gaussian-kernel smoothed
    density (Silverman bandwidth) for reporting; solver code consumes the
    exact cdf/pdf pair.
    """

    def __init__(self, join_times, window_width: float):
        ts = np.sort(np.asarray(join_times, dtype=float))
        if ts.size == 0:
            raise EmptyTrace("no joining times inside the window")
        if ts[0] < 0 or ts[-1] > window_width:
            raise InvalidInput("joining times must lie inside the window")
        # a join exactly at the window start would put an atom at F(0); smear
        # it over a negligible width so the linear CDF still starts at 0
        ts = np.maximum(ts, 1e-12 * max(window_width, 1.0))
        n = ts.size
        xs = [0.0]
        ys = [0.0]
        for k, t in enumerate(ts, start=1):
            level = k / n
            if t <= xs[-1]:
                ys[-1] = level  # tied or boundary samples collapse to a jump
            else:
                xs.append(float(t))
                ys.append(level)
        if xs[-1] < window_width:
            xs.append(float(window_width))
            ys.append(1.0)
        super().__init__(xs, ys)
        self.sample_times = ts
        self.n_users = n
        sigma = float(np.std(ts, ddof=1)) if n > 1 else 0.0
        iqr = float(np.subtract(*np.percentile(ts, [75, 25])))
        spread = min(sigma, iqr / 1.34) if iqr > 0 and sigma > 0 else max(sigma, 1e-3)
        self.bandwidth = 0.9 * max(spread, 1e-6) * n ** (-0.2)

    def smoothed_pdf(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        z = (t[:, None] - self.sample_times[None, :]) / self.bandwidth
        dens = np.exp(-0.5 * z * z).sum(axis=1)
        dens /= self.n_users * self.bandwidth * math.sqrt(2.0 * math.pi)
        return dens if dens.size > 1 else float(dens[0])


# ---------------------------------------------------------------------------
# Trace ingestion
# ---------------------------------------------------------------------------

def _parse_timestamp(raw: str) -> float | None:
    raw = raw.strip()
    try:
        value = float(raw)
        return value if math.isfinite(value) else None
    except ValueError:
        pass
    try:
        return datetime.strptime(raw, _TIMESTAMP_FORMAT).timestamp()
    except ValueError:
        return None


def parse_trace_file(path) -> list[tuple[str, float]]:
    """Read `user_id,ap_id,timestamp` lines into (user_id, epoch_seconds)
    records. Timestamps are epoch seconds or 'YYYY-MM-DD HH:MM:SS'; an
    optional header is detected by its unparseable timestamp field."""
    records: list[tuple[str, float]] = []
    with open(Path(path), encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise MalformedRecord(line_no, line, "expected 3 comma-separated fields")
            ts = _parse_timestamp(parts[2])
            if ts is None:
                if line_no == 1:
                    continue  # header
                raise MalformedRecord(line_no, line, "unparseable timestamp")
            records.append((parts[0].strip(), ts))
    if not records:
        raise EmptyTrace(f"{path}: no records")
    return records


def ingest_trace(records, window: tuple[float, float]) -> EmpiricalJoinTimes:
    """Empirical joining-time model from (user_id, timestamp) records.

    Only the first in-window timestamp per user counts (that is the joining
    time); duplicates are dropped. Times are rebased to fractional hours from
    the window start when the window spans more than 24 units (heuristically,
    epoch seconds); already-dimensionless records pass through unscaled.
    """
    start, end = float(window[0]), float(window[1])
    if not end > start:
        raise InvalidInput(f"empty window [{start}, {end}]")
    scale = 3600.0 if (end - start) > 24.0 else 1.0
    first: dict[str, float] = {}
    for user_id, ts in records:
        ts = float(ts)
        if not start <= ts <= end:
            continue
        key = str(user_id)
        if key not in first or ts < first[key]:
            first[key] = ts
    if not first:
        raise EmptyTrace("no records inside the window")
    join_hours = np.array(sorted((ts - start) / scale for ts in first.values()))
    return EmpiricalJoinTimes(join_hours, window_width=(end - start) / scale)


def ingest_trace_file(path, window: tuple[float, float]) -> EmpiricalJoinTimes:
    return ingest_trace(parse_trace_file(path), window)


# ---------------------------------------------------------------------------
# Weight functions
# ---------------------------------------------------------------------------

class WeightFunction:
    """Nonincreasing requester valuation of a unit effort joined at time t."""

    def __call__(self, t):
        raise NotImplementedError

    def integral(self, lo: float, hi: float) -> float:
        """Plain integral of w over [lo, hi] (midpoint rule fallback)."""
        if hi <= lo:
            return 0.0
        xs = np.linspace(lo, hi, 200_001)
        mids = 0.5 * (xs[1:] + xs[:-1])
        return float(np.sum(self(mids)) * (hi - lo) / mids.size)


@dataclass(frozen=True)
class StepWeight(WeightFunction):
    """Right-open steps: w(t) = values[k] on [breakpoints[k], breakpoints[k+1]),
    holding the last value beyond the final breakpoint."""

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        bp = tuple(float(x) for x in self.breakpoints)
        vals = tuple(float(x) for x in self.values)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if len(bp) != len(vals) or len(bp) < 1:
            raise InvalidInput("need one value per breakpoint")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise InvalidInput("breakpoints must be strictly increasing")
        if any(v < 0 for v in vals):
            raise InvalidInput("weights must be >= 0")
        if any(v2 > v1 for v1, v2 in zip(vals, vals[1:])):
            raise InvalidInput("step weights must be nonincreasing")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.breakpoints, t, side="right") - 1,
                      0, len(self.values) - 1)
        out = np.asarray(self.values)[idx]
        return out if out.ndim else float(out)

    def integral(self, lo: float, hi: float) -> float:
        if hi <= lo:
            return 0.0
        edges = [lo] + [b for b in self.breakpoints if lo < b < hi] + [hi]
        total = 0.0
        for a, b in zip(edges, edges[1:]):
            total += float(self(0.5 * (a + b))) * (b - a)
        return total


@dataclass(frozen=True)
class InversePowerWeight(WeightFunction):
    """w(t) = (1 + (t - t0)/scale)^(-power), clamped to its t0 value before t0."""

    power: float = 2.0
    scale: float = 6.0
    t0: float = 0.0

    def __post_init__(self):
        if self.power <= 0 or self.scale <= 0:
            raise InvalidInput("power and scale must be > 0")

    def __call__(self, t):
        rel = np.maximum(np.asarray(t, dtype=float) - self.t0, 0.0)
        out = (1.0 + rel / self.scale) ** (-self.power)
        return out if out.ndim else float(out)

    def integral(self, lo: float, hi: float) -> float:
        if hi <= lo:
            return 0.0
        head = max(min(hi, self.t0) - lo, 0.0)  # clamped stretch at weight 1
        lo, hi = max(lo, self.t0), max(hi, self.t0)

        def anti(t: float) -> float:
            z = 1.0 + (t - self.t0) / self.scale
            if self.power == 1.0:
                return self.scale * math.log(z)
            return self.scale * (z ** (1.0 - self.power) - 1.0) / (1.0 - self.power)

        return head + anti(hi) - anti(lo)


class TableWeight(WeightFunction):
    """Linear interpolation through (time, weight) knots, clamped outside."""

    def __init__(self, times, values):
        xs = np.asarray(times, dtype=float)
        ys = np.asarray(values, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise InvalidInput("need matching 1-d knot arrays with >= 2 points")
        if np.any(np.diff(xs) <= 0):
            raise InvalidInput("knot times must be strictly increasing")
        if np.any(ys < 0):
            raise InvalidInput("weights must be >= 0")
        if np.any(np.diff(ys) > 1e-12):
            raise InvalidInput("table weights must be nonincreasing")
        self._xs = xs
        self._ys = ys

    def __call__(self, t):
        out = np.interp(np.asarray(t, dtype=float), self._xs, self._ys)
        return out if out.ndim else float(out)

    def integral(self, lo: float, hi: float) -> float:
        if hi <= lo:
            return 0.0
        xs = np.unique(np.concatenate([[lo, hi],
                                       self._xs[(self._xs > lo) & (self._xs < hi)]]))
        ys = self(xs)
        return float(np.trapezoid(ys, xs))


@dataclass(frozen=True)
class ConstantWeight(WeightFunction):
    value: float = 1.0

    def __post_init__(self):
        if self.value < 0:
            raise InvalidInput("weight must be >= 0")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.value)
        return out if out.ndim else float(out)

    def integral(self, lo: float, hi: float) -> float:
        return self.value * max(hi - lo, 0.0)


def weight_eval(wf: WeightFunction, t):
    """Functional alias for wf(t)."""
    return wf(t)


# ---------------------------------------------------------------------------
# Poisson arrivals (open system)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PoissonModel:
    """Homogeneous Poisson arrivals at rate `rate`, truncated at the first
    `truncation` contributors for open-system solvers."""

    rate: float
    truncation: int = 30

    def __post_init__(self):
        if not self.rate > 0:
            raise InvalidInput("rate must be > 0")
        if self.truncation < 1:
            raise InvalidInput("truncation must be >= 1")


def poisson_pmf(model: PoissonModel, t: float, m) -> float | np.ndarray:
    """P(N(t) = m) = (rate t)^m exp(-rate t) / m!."""
    m_arr = np.asarray(m)
    if np.any(m_arr < 0) or t < 0:
        raise InvalidInput("need m >= 0 and t >= 0")
    lam_t = model.rate * t
    if lam_t == 0.0:
        out = np.where(m_arr == 0, 1.0, 0.0)
    else:
        log_pmf = m_arr * math.log(lam_t) - lam_t - \
            np.array([math.lgamma(k + 1.0) for k in np.atleast_1d(m_arr)]).reshape(m_arr.shape)
        out = np.exp(log_pmf)
    return out if out.ndim else float(out)


def sample_arrival_sequence(model: PoissonModel,
                            rng_or_seed: np.random.Generator | RngSeed) -> np.ndarray:
    """One truncated arrival sequence S_1 < ... < S_M (cumulative sums of
    i.i.d. exponential gaps)."""
    return sample_arrival_sequences(model, rng_or_seed, 1)[0]


def sample_arrival_sequences(model: PoissonModel,
                             rng_or_seed: np.random.Generator | RngSeed,
                             n: int, m: int | None = None) -> np.ndarray:
    """(n, m) array of arrival epochs, m defaulting to the model truncation."""
    rng = rng_or_seed if isinstance(rng_or_seed, np.random.Generator) \
        else spawn_rng(rng_or_seed)
    m = model.truncation if m is None else m
    gaps = rng.exponential(scale=1.0 / model.rate, size=(n, m))
    return np.cumsum(gaps, axis=1)
