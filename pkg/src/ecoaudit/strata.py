"""Stratified ecosystem analysis over categorical instance metadata.

Each stratum gets its own failure matrix and its own independence baseline
computed from within-group failure rates, so a group's deviation measures
outcome homogeneity rather than group difficulty. Stratum derivation helpers
turn judge-model accuracy and annotator votes into metadata categories.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import MissingMetadata
from .ingest import MetadataTable
from .matrix import (
    POLICY_STRICT,
    Ecosystem,
    build_failure_matrix,
    _ordered_ecosystem,
)
from .reports import EcosystemReport, ecosystem_report

logger = logging.getLogger("ecoaudit")

METADATA_STRICT = "strict"
METADATA_DROP = "drop-unlabeled"

JUDGE_ACCURACY_KEY = "judge_accuracy"
DISAGREEMENT_KEY = "annotator_disagreement"


@dataclass(frozen=True)
class StratifiedReport:
    metadata_key: str
    period: str
    groups: dict[str, EcosystemReport]
    pooled: EcosystemReport
    group_sizes: dict[str, int]
    dropped_missing_metadata: int = 0

    def to_dict(self) -> dict:
        return {
            "report": "stratified",
            "metadata_key": self.metadata_key,
            "period": self.period,
            "pooled": self.pooled.to_dict(),
            "groups": {c: r.to_dict() for c, r in sorted(self.groups.items())},
            "group_sizes": dict(sorted(self.group_sizes.items())),
            "dropped_missing_metadata": self.dropped_missing_metadata,
        }

    def plot_rows(self, series: Sequence[str] | None = None) -> list[tuple]:
        # one observed-minus-baseline series per stratum plus the pooled one
        if series is not None:
            raise ValueError("stratified plots emit a fixed series set")
        rows = []
        for cat in sorted(self.groups):
            for t, d in enumerate(self.groups[cat].per_t_difference):
                rows.append((f"difference:{cat}", t, d))
        for t, d in enumerate(self.pooled.per_t_difference):
            rows.append(("difference:pooled", t, d))
        return rows


def _slice_ecosystem(eco: Ecosystem, row_idx: np.ndarray) -> Ecosystem:
    # group submatrix; column order is recomputed from within-group rates
    return _ordered_ecosystem(
        eco.period,
        list(eco.model_ids_ordered),
        np.asarray(eco.instance_ids, dtype=object)[row_idx],
        eco.failure_matrix[row_idx],
    )


def stratify(
    records,
    metadata: MetadataTable,
    period: str,
    metadata_key: str,
    models: Iterable[str] | None = None,
    policy: str = METADATA_STRICT,
    coverage_policy: str = POLICY_STRICT,
) -> StratifiedReport:
    """Per-category ecosystem reports plus the pooled report.

    Under the default strict policy every instance must carry
    ``metadata_key``; under ``drop-unlabeled`` uncovered instances are
    excluded from both the pooled and the per-group analyses, so the pooled
    distribution stays the size-weighted mixture of the groups.
    """
    if policy not in (METADATA_STRICT, METADATA_DROP):
        raise ValueError(f"unknown metadata policy {policy!r}")
    eco = build_failure_matrix(records, period, models, coverage_policy)

    cats = []
    covered = np.ones(eco.n_instances, dtype=bool)
    for idx, inst in enumerate(eco.instance_ids):
        cat = metadata.get(inst, metadata_key)
        if cat is None:
            if policy == METADATA_STRICT:
                raise MissingMetadata(inst, metadata_key)
            covered[idx] = False
        cats.append(cat)

    dropped = int((~covered).sum())
    if dropped:
        logger.warning(
            "dropping %d instances without %r metadata", dropped, metadata_key
        )
        eco = _slice_ecosystem(eco, np.flatnonzero(covered))
        cats = [c for c, keep in zip(cats, covered) if keep]

    by_cat: dict[str, list[int]] = {}
    for idx, cat in enumerate(cats):
        by_cat.setdefault(cat, []).append(idx)

    groups = {}
    sizes = {}
    for cat in sorted(by_cat):
        idx = np.asarray(by_cat[cat], dtype=np.int64)
        groups[cat] = ecosystem_report(_slice_ecosystem(eco, idx))
        sizes[cat] = int(idx.size)

    return StratifiedReport(
        metadata_key=metadata_key,
        period=period,
        groups=groups,
        pooled=ecosystem_report(eco),
        group_sizes=sizes,
        dropped_missing_metadata=dropped,
    )


def _percent_token(numerator: int, denominator: int) -> str:
    # nearest-integer percent, half rounds up
    return str(int(math.floor(100.0 * numerator / denominator + 0.5)))


def derive_accuracy_stratum(
    records,
    judge_models: Iterable[str],
    period: str,
    key: str = JUDGE_ACCURACY_KEY,
) -> MetadataTable:
    """Bucket instances by the percentage of judge models that got them right.

    Two judges yield the tokens "0", "50", "100"; in general the token is the
    nearest integer percentage of correct judges. Run stratify() with the
    judges excluded from the analyzed model set to relate judge difficulty to
    ecosystem behavior.
    """
    eco = build_failure_matrix(records, period, models=judge_models)
    k = eco.n_models
    wrong = eco.failure_matrix.sum(axis=1, dtype=np.int64)
    table = MetadataTable()
    for idx, inst in enumerate(eco.instance_ids):
        table.entries[inst] = {key: _percent_token(k - int(wrong[idx]), k)}
    return table


def derive_disagreement_stratum(
    votes: dict[str, list[str]],
    key: str = DISAGREEMENT_KEY,
) -> MetadataTable:
    """Bucket instances by the percentage of annotators off the majority label.

    Ten unanimous votes give "0"; a 6-vs-4 split gives "40". An exact
    majority tie is bucketed at the maximal disagreement for that vote count
    and flagged in ``tie_instances``.
    """
    table = MetadataTable()
    ties = []
    for inst, vs in votes.items():
        if not vs:
            raise ValueError(f"instance {inst!r} has no votes")
        counts = Counter(vs)
        top = max(counts.values())
        if sum(1 for c in counts.values() if c == top) > 1:
            ties.append(inst)
        table.entries[inst] = {key: _percent_token(len(vs) - top, len(vs))}
    if ties:
        logger.warning("%d instances have tied majority votes", len(ties))
        table.tie_instances = tuple(ties)
    return table
