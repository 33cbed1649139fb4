"""Failure-count distributions, independence baselines, and the difficulty fit.

The observed distribution counts how many instances were failed by exactly
t of the k models. Under the independence assumption the failure count
follows a Poisson-Binomial distribution over the per-model failure rates;
the exact PMF is computed with the O(k^2) convolution recurrence

    pmf <- conv(pmf, [1 - p_j, p_j])   for j = 1..k

A brute-force enumeration over all 2^k outcome vectors is kept permanently
as an independent oracle for the recurrence.

The two-population baseline splits instances into a "hard" fraction alpha
whose per-model rates scale by (1 + delta) and an "easy" remainder scaled by
(1 - alpha*delta/(1 - alpha)), preserving each model's overall rate exactly.
The resulting baseline is the alpha-weighted mixture of the two
Poisson-Binomials; (alpha, delta) are fitted by grid search minimizing the
L1 distance to the observed distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    EmptyEcosystem,
    InvalidRate,
    InvalidParams,
    LengthMismatch,
    NoValidParams,
    TooManyModels,
)
from .matrix import Ecosystem

BRUTE_FORCE_MAX_MODELS = 20

# grid defaults: alpha 0.1..0.5 step 0.1, delta 0.2..5.0 step 0.2
DEFAULT_ALPHA_GRID = tuple(round(0.1 * i, 10) for i in range(1, 6))
DEFAULT_DELTA_GRID = tuple(round(0.2 * i, 10) for i in range(1, 26))


@dataclass(frozen=True)
class DifficultyParams:
    """Hard-fraction alpha in (0, 1) and hardness scale delta >= 0."""

    alpha: float
    delta: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParams(f"alpha must be in (0, 1), got {self.alpha!r}")
        if self.delta < 0.0:
            raise InvalidParams(f"delta must be >= 0, got {self.delta!r}")

    def hard_rates(self, rates: Sequence[float]) -> tuple[float, ...]:
        return tuple((1.0 + self.delta) * r for r in rates)

    def easy_rates(self, rates: Sequence[float]) -> tuple[float, ...]:
        factor = 1.0 - self.alpha * self.delta / (1.0 - self.alpha)
        return tuple(factor * r for r in rates)

    def violations(self, rates: Sequence[float]) -> list[str]:
        """Rate bounds violated by these params, empty when valid."""
        out = []
        for j, (h, e) in enumerate(
            zip(self.hard_rates(rates), self.easy_rates(rates))
        ):
            if h > 1.0:
                out.append(f"hard rate for model {j} is {h:.6g} > 1")
            if e < 0.0:
                out.append(f"easy rate for model {j} is {e:.6g} < 0")
        return out


@dataclass(frozen=True)
class HomogeneityMetrics:
    """Elementwise observed-vs-baseline comparison.

    ``ratio`` entries are None where the baseline is 0 but the observed mass
    is not; 0/0 is reported as 1 (no deviation).
    """

    difference: tuple[float, ...]
    ratio: tuple[float | None, ...]


class FitResult(NamedTuple):
    params: DifficultyParams
    l1: float
    surface: dict[tuple[float, float], float | None]


def _checked_rates(rates: Sequence[float]) -> np.ndarray:
    arr = np.asarray(rates, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise EmptyEcosystem("need at least one model rate")
    for j, r in enumerate(arr):
        if not 0.0 <= r <= 1.0:
            raise InvalidRate(j, float(r))
    return arr


def _as_matrix(F) -> np.ndarray:
    if isinstance(F, Ecosystem):
        return F.failure_matrix
    M = np.asarray(F)
    if M.ndim != 2:
        raise EmptyEcosystem("failure matrix must be 2-dimensional")
    if not np.isin(M, (0, 1)).all():
        raise InvalidRate(0, float(M.max()))
    return M.astype(np.uint8, copy=False)


def observed_distribution(F) -> np.ndarray:
    """Empirical PMF of the per-instance failure count t in {0..k}."""
    M = _as_matrix(F)
    n, k = M.shape
    if n == 0 or k == 0:
        raise EmptyEcosystem("cannot compute a distribution over zero data")
    t = M.sum(axis=1, dtype=np.int64)
    return np.bincount(t, minlength=k + 1) / n


def poisson_binomial(rates: Sequence[float]) -> np.ndarray:
    """Exact failure-count PMF assuming models fail independently."""
    r = _checked_rates(rates)
    pmf = np.zeros(r.size + 1, dtype=np.float64)
    pmf[0] = 1.0
    for j, p in enumerate(r):
        head = pmf[: j + 1]
        pmf[1 : j + 2] = pmf[1 : j + 2] * (1.0 - p) + head * p
        pmf[0] *= 1.0 - p
    return pmf


def brute_force_baseline(rates: Sequence[float]) -> np.ndarray:
    """Same PMF by explicit enumeration of all 2^k outcome vectors.

    Permanent oracle for poisson_binomial; guarded to k <= 20.
    """
    r = _checked_rates(rates)
    k = r.size
    if k > BRUTE_FORCE_MAX_MODELS:
        raise TooManyModels(f"brute force enumeration limited to k <= "
                            f"{BRUTE_FORCE_MAX_MODELS}, got {k}")
    patterns = (np.arange(2 ** k)[:, None] >> np.arange(k)) & 1
    probs = np.where(patterns == 1, r, 1.0 - r).prod(axis=1)
    t = patterns.sum(axis=1)
    return np.bincount(t, weights=probs, minlength=k + 1)


def two_population_baseline(
    rates: Sequence[float], params: DifficultyParams
) -> np.ndarray:
    """Mixture baseline: alpha * PB(hard rates) + (1 - alpha) * PB(easy rates).

    Raises InvalidParams listing every violated per-model bound; valid params
    preserve each model's expected failure rate exactly.
    """
    r = _checked_rates(rates)
    bad = params.violations(r)
    if bad:
        raise InvalidParams(
            f"(alpha={params.alpha}, delta={params.delta}) invalid for the "
            f"given rates: " + "; ".join(bad),
            violations=bad,
        )
    hard = poisson_binomial(params.hard_rates(r))
    easy = poisson_binomial(params.easy_rates(r))
    return params.alpha * hard + (1.0 - params.alpha) * easy


def l1_distance(p: Sequence[float], q: Sequence[float]) -> float:
    """Sum of absolute differences; lies in [0, 2] for probability vectors."""
    pa, qa = np.asarray(p, dtype=np.float64), np.asarray(q, dtype=np.float64)
    if pa.shape != qa.shape:
        raise LengthMismatch(
            f"distribution lengths differ: {pa.shape} vs {qa.shape}"
        )
    return float(np.abs(pa - qa).sum())


def tv_distance(p: Sequence[float], q: Sequence[float]) -> float:
    """Total variation distance, i.e. half the L1 distance."""
    return 0.5 * l1_distance(p, q)


def homogeneity_metrics(observed, baseline) -> HomogeneityMetrics:
    """Per-t difference and ratio of observed vs baseline mass."""
    obs = np.asarray(observed, dtype=np.float64)
    base = np.asarray(baseline, dtype=np.float64)
    if obs.shape != base.shape:
        raise LengthMismatch(
            f"distribution lengths differ: {obs.shape} vs {base.shape}"
        )
    diff = tuple(float(d) for d in obs - base)
    ratio: list[float | None] = []
    for o, b in zip(obs, base):
        if b == 0.0:
            ratio.append(1.0 if o == 0.0 else None)
        else:
            ratio.append(float(o / b))
    return HomogeneityMetrics(difference=diff, ratio=tuple(ratio))


def distribution_mean(pmf: Sequence[float]) -> float:
    pmf = np.asarray(pmf, dtype=np.float64)
    return float(np.arange(pmf.size) @ pmf)


def fit_difficulty(
    F,
    alpha_grid: Sequence[float] | None = None,
    delta_grid: Sequence[float] | None = None,
) -> FitResult:
    """Grid search for the (alpha, delta) minimizing L1 to the observed PMF.

    Returns the best parameters, their L1 distance, and the full grid
    surface with invalid points marked None. Ties resolve to the smallest
    delta, then the smallest alpha, preferring the least-structured
    explanation.
    """
    alphas = tuple(alpha_grid) if alpha_grid is not None else DEFAULT_ALPHA_GRID
    deltas = tuple(delta_grid) if delta_grid is not None else DEFAULT_DELTA_GRID
    M = _as_matrix(F)
    observed = observed_distribution(M)
    n = M.shape[0]
    rates = M.sum(axis=0, dtype=np.int64) / n

    surface: dict[tuple[float, float], float | None] = {}
    best: tuple[float, float, float] | None = None  # (l1, delta, alpha)
    for a in alphas:
        for d in deltas:
            try:
                params = DifficultyParams(a, d)
                baseline = two_population_baseline(rates, params)
            except InvalidParams:
                surface[(a, d)] = None
                continue
            dist = l1_distance(observed, baseline)
            surface[(a, d)] = dist
            key = (dist, d, a)
            if best is None or key < best:
                best = key
    if best is None:
        raise NoValidParams(
            "every grid point violates a rate bound for the given rates"
        )
    dist, d, a = best
    return FitResult(DifficultyParams(a, d), dist, surface)


def grid_range(start: float, stop: float, step: float) -> tuple[float, ...]:
    """Inclusive arithmetic grid; both endpoints hit within 1e-9 tolerance."""
    if step <= 0:
        raise ValueError("step must be positive")
    n = int(math.floor((stop - start) / step + 1e-9))
    return tuple(round(start + i * step, 10) for i in range(n + 1))


def parse_grid(text: str) -> tuple[float, ...]:
    """Parse CLI grid syntax 'start:stop:step' (or a single value)."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return (float(parts[0]),)
        if len(parts) == 3:
            return grid_range(float(parts[0]), float(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise ValueError(f"invalid grid spec {text!r}: {exc}") from None
    raise ValueError(f"invalid grid spec {text!r} (expected start:stop:step)")
