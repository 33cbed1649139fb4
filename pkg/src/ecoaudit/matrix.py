"""Failure-matrix construction for one period of a model ecosystem.

The failure matrix is N x k binary: entry [i, j] is 1 iff model j's
prediction differs from instance i's label. Columns are ordered by ascending
empirical failure rate, ties broken lexicographically by model id, so
identical inputs always produce identical ecosystems.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
import pandas as pd

from .errors import (
    ConflictingPrediction,
    EmptyEcosystem,
    IncompleteCoverage,
    InconsistentLabel,
    UnknownInstance,
    UnknownModel,
)
from .ingest import RecordSet
from .profiles import OutcomeProfile

logger = logging.getLogger("ecoaudit")

POLICY_STRICT = "strict"
POLICY_DROP = "drop-incomplete"


@dataclass(frozen=True)
class Ecosystem:
    """Immutable failure matrix plus its row/column identities.

    ``column_counts[j]`` is the integer number of failures in column j;
    failure rates are derived from it so that ordering and equality checks
    stay exact.
    """

    period: str
    model_ids_ordered: tuple[str, ...]
    instance_ids: tuple[str, ...]
    failure_matrix: np.ndarray
    column_counts: tuple[int, ...]
    dropped_instances: int = 0

    def __post_init__(self):
        self.failure_matrix.setflags(write=False)

    @property
    def n_instances(self) -> int:
        return len(self.instance_ids)

    @property
    def n_models(self) -> int:
        return len(self.model_ids_ordered)

    @cached_property
    def _instance_index(self) -> dict[str, int]:
        return {i: idx for idx, i in enumerate(self.instance_ids)}

    def instance_index(self, instance_id: str) -> int:
        try:
            return self._instance_index[instance_id]
        except KeyError:
            raise UnknownInstance(f"unknown instance {instance_id!r}") from None

    def model_index(self, model_id: str) -> int:
        try:
            return self.model_ids_ordered.index(model_id)
        except ValueError:
            raise UnknownModel(f"unknown model {model_id!r}") from None


def build_failure_matrix(
    records,
    period: str,
    models: Iterable[str] | None = None,
    policy: str = POLICY_STRICT,
) -> Ecosystem:
    """Build the ecosystem for one period from prediction records.

    Every instance must have exactly one record per model. Under the default
    strict policy a gap is fatal; under ``drop-incomplete`` instances without
    full coverage are dropped and counted in ``dropped_instances``.
    """
    if policy not in (POLICY_STRICT, POLICY_DROP):
        raise ValueError(f"unknown policy {policy!r}")
    rs = RecordSet.from_records(records)
    inst, mod, per, pred, lab = rs.columns()

    sel = per == period
    if models is not None:
        model_list = sorted(set(models))
        sel &= np.isin(mod, model_list)
    else:
        model_list = sorted(set(mod[sel]))
    k = len(model_list)
    if not sel.any() or k == 0:
        raise EmptyEcosystem(f"no records for period {period!r}")

    iuniq, matrix, complete = validated_cells(
        inst[sel], mod[sel], pred[sel], lab[sel], period, model_list
    )
    if not complete.all():
        if policy == POLICY_STRICT:
            row = int(np.flatnonzero(~complete)[0])
            col = int(np.flatnonzero(matrix[row] == _ABSENT)[0])
            raise IncompleteCoverage(iuniq[row], model_list[col])
        dropped = int(len(iuniq) - complete.sum())
        logger.warning(
            "dropping %d instances without full model coverage", dropped
        )
        matrix = matrix[complete]
        iuniq = iuniq[complete]
    else:
        dropped = 0
    if matrix.shape[0] == 0:
        raise EmptyEcosystem(
            f"no instance has complete coverage in period {period!r}"
        )
    return _ordered_ecosystem(
        period, model_list, iuniq, (matrix == 1).astype(np.uint8), dropped
    )


_ABSENT = 2  # cell sentinel: no record for this (instance, model)


def validated_cells(inst, mod, pred, lab, period, model_list):
    """Validate one period's records and fill the cell matrix.

    Returns (instance_ids sorted, matrix, complete_mask) where matrix holds
    0 = correct, 1 = failure, 2 = no record. Identical duplicate cells
    collapse; disagreeing predictions, inconsistent labels, and unknown
    models are fatal.
    """
    k = len(model_list)
    icodes, iuniq = pd.factorize(inst, sort=True)
    mcodes = pd.Categorical(mod, categories=model_list).codes.astype(np.int64)
    if (mcodes < 0).any():
        bad = int(np.flatnonzero(mcodes < 0)[0])
        raise UnknownModel(f"unexpected model {mod[bad]!r}")
    n = len(iuniq)

    cell = icodes * k + mcodes
    dup = pd.Series(cell).duplicated(keep="first").to_numpy()
    if dup.any():
        ccodes, _ = pd.factorize(cell, sort=False)
        pcodes, _ = pd.factorize(pred, sort=False)
        pfirst = np.empty(int(ccodes.max()) + 1, dtype=np.int64)
        pfirst[ccodes[::-1]] = pcodes[::-1]
        bad = np.flatnonzero(pcodes != pfirst[ccodes])
        if bad.size:
            b = int(bad[0])
            raise ConflictingPrediction(inst[b], mod[b], period)
        icodes, mcodes, pred, lab = (
            icodes[~dup], mcodes[~dup], pred[~dup], lab[~dup],
        )

    lcodes, _ = pd.factorize(lab, sort=False)
    lfirst = np.empty(n, dtype=np.int64)
    lfirst[icodes[::-1]] = lcodes[::-1]
    bad = np.flatnonzero(lcodes != lfirst[icodes])
    if bad.size:
        raise InconsistentLabel(iuniq[int(bad[0])])

    fail = (pred != lab).astype(np.uint8)
    matrix = np.full((n, k), _ABSENT, dtype=np.uint8)
    matrix[icodes, mcodes] = fail
    complete = np.bincount(icodes, minlength=n) == k
    return iuniq, matrix, complete


def _ordered_ecosystem(period, model_list, instance_ids, matrix, dropped=0):
    """Apply the ascending-failure-rate column order and freeze the result."""
    counts = matrix.sum(axis=0, dtype=np.int64)
    ids = np.asarray(model_list, dtype=object)
    order = np.lexsort((ids, counts))
    return Ecosystem(
        period=period,
        model_ids_ordered=tuple(ids[order]),
        instance_ids=tuple(instance_ids),
        failure_matrix=np.ascontiguousarray(matrix[:, order]),
        column_counts=tuple(int(c) for c in counts[order]),
        dropped_instances=dropped,
    )


def failure_rates(eco: Ecosystem) -> tuple[float, ...]:
    """Per-model failure rates in column order (non-decreasing)."""
    n = eco.n_instances
    return tuple(c / n for c in eco.column_counts)


def systemic_failure_rate(eco: Ecosystem) -> float:
    """Fraction of instances failed by every model."""
    row_sums = eco.failure_matrix.sum(axis=1)
    return int((row_sums == eco.n_models).sum()) / eco.n_instances


def consistent_success_rate(eco: Ecosystem) -> float:
    """Fraction of instances classified correctly by every model."""
    row_sums = eco.failure_matrix.sum(axis=1)
    return int((row_sums == 0).sum()) / eco.n_instances


def profile(eco: Ecosystem, instance_id: str) -> OutcomeProfile:
    """One instance's failure pattern across all models, in column order."""
    row = eco.failure_matrix[eco.instance_index(instance_id)]
    return tuple(int(b) for b in row)
