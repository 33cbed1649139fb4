"""Deterministic synthetic ecosystems for oracles and demos.

All randomness comes from numpy's PCG64 generator seeded explicitly; draws
are standard 53-bit uniforms in [0, 1). The draw order is fixed and part of
the contract, so a given (spec, seed) always produces byte-identical
records:

* independent: one n x k uniform block, row-major; cell (i, j) fails iff
  u < rates[j].
* two_population: one length-n block assigning hardness (u < alpha), then
  the n x k cell block compared against the hardness-scaled rates.
* clone: one length-n block drawn at rates[0]; the column is copied to all
  models.

Labels are always "pos"; a failing cell predicts "neg". Model ids m01, m02,
... and zero-padded instance ids sort lexicographically in index order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .distributions import DifficultyParams, _checked_rates
from .errors import InvalidParams, InvalidRate
from .ingest import MetadataTable, RecordSet

MODE_INDEPENDENT = "independent"
MODE_TWO_POPULATION = "two_population"
MODE_CLONE = "clone"

DIFFICULTY_KEY = "difficulty"


@dataclass(frozen=True)
class SynthSpec:
    n_instances: int
    rates: tuple[float, ...]
    seed: int
    mode: str = MODE_INDEPENDENT
    alpha: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.n_instances < 1:
            raise InvalidParams(f"n_instances must be >= 1, got {self.n_instances}")
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        _checked_rates(self.rates)
        if self.mode not in (MODE_INDEPENDENT, MODE_TWO_POPULATION, MODE_CLONE):
            raise InvalidParams(f"unknown mode {self.mode!r}")
        if self.mode == MODE_TWO_POPULATION:
            if self.alpha is None or self.delta is None:
                raise InvalidParams("two_population mode needs alpha and delta")
            bad = self.difficulty_params.violations(self.rates)
            if bad:
                raise InvalidParams(
                    "two_population parameters invalid for the given rates: "
                    + "; ".join(bad),
                    violations=bad,
                )

    @property
    def difficulty_params(self) -> DifficultyParams:
        return DifficultyParams(self.alpha, self.delta)

    @property
    def n_models(self) -> int:
        return len(self.rates)

    @property
    def model_ids(self) -> tuple[str, ...]:
        width = max(2, len(str(self.n_models)))
        return tuple(f"m{j + 1:0{width}d}" for j in range(self.n_models))

    @property
    def instance_ids(self) -> tuple[str, ...]:
        width = max(7, len(str(self.n_instances)))
        return tuple(f"i{i:0{width}d}" for i in range(self.n_instances))


def _draw_failures(spec: SynthSpec, rng: np.random.Generator):
    """Failure matrix plus the hardness mask (None outside two_population)."""
    n, k = spec.n_instances, spec.n_models
    rates = np.asarray(spec.rates)
    if spec.mode == MODE_CLONE:
        col = rng.random(n) < rates[0]
        return np.repeat(col[:, None], k, axis=1).astype(np.uint8), None
    if spec.mode == MODE_TWO_POPULATION:
        hard = rng.random(n) < spec.alpha
        params = spec.difficulty_params
        cell_rates = np.where(
            hard[:, None],
            np.asarray(params.hard_rates(rates)),
            np.asarray(params.easy_rates(rates)),
        )
        return (rng.random((n, k)) < cell_rates).astype(np.uint8), hard
    return (rng.random((n, k)) < rates).astype(np.uint8), None


def _records_from_matrix(spec: SynthSpec, matrix: np.ndarray, period: str) -> RecordSet:
    n, k = matrix.shape
    inst = np.repeat(np.asarray(spec.instance_ids, dtype=object), k)
    mod = np.tile(np.asarray(spec.model_ids, dtype=object), n)
    per = np.full(n * k, period, dtype=object)
    pred = np.where(matrix.reshape(-1) == 1, "neg", "pos").astype(object)
    lab = np.full(n * k, "pos", dtype=object)
    return RecordSet(inst, mod, per, pred, lab)


def _difficulty_table(spec: SynthSpec, hard: np.ndarray | None) -> MetadataTable:
    table = MetadataTable()
    if hard is not None:
        for inst, h in zip(spec.instance_ids, hard):
            table.entries[inst] = {DIFFICULTY_KEY: "hard" if h else "easy"}
    return table


def generate(spec: SynthSpec, period: str = "p1") -> tuple[RecordSet, MetadataTable]:
    """Draw one period of records; two_population also tags hard/easy."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    matrix, hard = _draw_failures(spec, rng)
    return _records_from_matrix(spec, matrix, period), _difficulty_table(spec, hard)


def generate_two_period(
    spec: SynthSpec,
    improvement_plan: Mapping[str, float],
    seeds: tuple[int, int],
    periods: tuple[str, str] = ("p1", "p2"),
) -> tuple[RecordSet, MetadataTable]:
    """Two periods where only the planned models change.

    ``improvement_plan`` maps model id to a signed failure-rate change; a
    negative change lowers the failure rate (an improvement). Unplanned
    models keep their period-one outcomes verbatim, so every improvement or
    decline is attributable to a planned model. Planned columns are redrawn
    independently at the adjusted rate (scaled by the instance's hardness in
    two_population mode; a planned clone column decouples from the others).
    """
    model_ids = spec.model_ids
    plan = dict(improvement_plan)
    for m in plan:
        if m not in model_ids:
            raise InvalidParams(f"improvement plan names unknown model {m!r}")
    new_rates = list(spec.rates)
    for m, change in plan.items():
        j = model_ids.index(m)
        new_rates[j] = spec.rates[j] + change
        if not 0.0 <= new_rates[j] <= 1.0:
            raise InvalidRate(j, new_rates[j])

    rng1 = np.random.Generator(np.random.PCG64(seeds[0]))
    matrix1, hard = _draw_failures(spec, rng1)

    matrix2 = matrix1.copy()
    rng2 = np.random.Generator(np.random.PCG64(seeds[1]))
    params = spec.difficulty_params if spec.mode == MODE_TWO_POPULATION else None
    for m in sorted(plan):
        j = model_ids.index(m)
        base = new_rates[j]
        if params is not None:
            col_rates = np.where(
                hard,
                (1.0 + params.delta) * base,
                (1.0 - params.alpha * params.delta / (1.0 - params.alpha)) * base,
            )
            if (col_rates > 1.0).any() or (col_rates < 0.0).any():
                raise InvalidRate(j, base)
        else:
            col_rates = base
        matrix2[:, j] = (rng2.random(spec.n_instances) < col_rates).astype(np.uint8)

    records = _records_from_matrix(spec, matrix1, periods[0]) + _records_from_matrix(
        spec, matrix2, periods[1]
    )
    return records, _difficulty_table(spec, hard)
