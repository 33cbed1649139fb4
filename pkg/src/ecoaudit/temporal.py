"""Year-over-year improvement and decline analysis.

For a model that changed between two periods, the instances it failed in the
first period are its potential improvements; the subset it gets right in the
second period are its observed improvements, and the instances it newly
fails are its declines. Both sets are characterized by the outcome profiles
of the *other* models, taken from the first period's snapshot, which shows
whether the change landed on instances the rest of the ecosystem already
handled or on shared failures.

Accuracies are computed over the instances present in both periods, so the
accuracy delta is well-defined on a fixed population. Other-model profile
bits are ordered by model id, which stays stable across periods.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .errors import (
    EmptyEcosystem,
    IncompleteCoverage,
    InconsistentLabel,
    UnknownModel,
)
from .ingest import RecordSet
from .matrix import POLICY_DROP, POLICY_STRICT, validated_cells, _ABSENT
from .profiles import (
    OutcomeProfile,
    ProfileDistribution,
    profile_counts,
    profile_token,
)

DEFAULT_IMPROVEMENT_THRESHOLD = 0.005


@dataclass(frozen=True)
class PairedPeriods:
    """Two aligned failure matrices over a shared instance set.

    Columns are in sorted-model-id order (not rate order): the same column
    refers to the same model in both matrices.
    """

    period_from: str
    period_to: str
    model_ids: tuple[str, ...]
    instance_ids: tuple[str, ...]
    matrix_from: np.ndarray
    matrix_to: np.ndarray
    dropped_instances: int = 0

    @property
    def n_instances(self) -> int:
        return len(self.instance_ids)


def align_periods(
    records,
    period_from: str,
    period_to: str,
    models: Iterable[str] | None = None,
    policy: str = POLICY_STRICT,
) -> PairedPeriods:
    """Build aligned matrices for two periods over their shared instances."""
    if policy not in (POLICY_STRICT, POLICY_DROP):
        raise ValueError(f"unknown policy {policy!r}")
    rs = RecordSet.from_records(records)
    inst, mod, per, pred, lab = rs.columns()

    sel_a = per == period_from
    sel_b = per == period_to
    if models is not None:
        model_list = sorted(set(models))
    else:
        # models present in only one period cannot be compared
        model_list = sorted(set(mod[sel_a]) & set(mod[sel_b]))
    msel = np.isin(mod, model_list)
    sel_a &= msel
    sel_b &= msel
    if not model_list or not sel_a.any() or not sel_b.any():
        raise EmptyEcosystem(
            f"no shared models with records in both {period_from!r} "
            f"and {period_to!r}"
        )

    shared = np.intersect1d(
        np.unique(inst[sel_a]), np.unique(inst[sel_b])
    )  # sorted
    if shared.size == 0:
        raise EmptyEcosystem(
            f"no shared instances between {period_from!r} and {period_to!r}"
        )

    # ground-truth labels must agree across periods, not just within one
    both = sel_a | sel_b
    icodes, iuniq = pd.factorize(inst[both], sort=False)
    lcodes, _ = pd.factorize(lab[both], sort=False)
    lfirst = np.empty(len(iuniq), dtype=np.int64)
    lfirst[icodes[::-1]] = lcodes[::-1]
    bad = np.flatnonzero(lcodes != lfirst[icodes])
    if bad.size:
        raise InconsistentLabel(inst[both][int(bad[0])])

    mats = {}
    complete_both = np.ones(shared.size, dtype=bool)
    for period, sel in ((period_from, sel_a), (period_to, sel_b)):
        keep = sel & np.isin(inst, shared)
        iuniq, matrix, complete = validated_cells(
            inst[keep], mod[keep], pred[keep], lab[keep], period, model_list
        )
        # expand to the full shared set; instances absent here stay incomplete
        full = np.full((shared.size, len(model_list)), _ABSENT, dtype=np.uint8)
        pos = np.searchsorted(shared, iuniq)
        full[pos] = matrix
        cmask = np.zeros(shared.size, dtype=bool)
        cmask[pos] = complete
        if policy == POLICY_STRICT and not cmask.all():
            row = int(np.flatnonzero(~cmask)[0])
            col = int(np.flatnonzero(full[row] == _ABSENT)[0])
            raise IncompleteCoverage(shared[row], model_list[col])
        complete_both &= cmask
        mats[period] = full

    kept = np.flatnonzero(complete_both)
    if kept.size == 0:
        raise EmptyEcosystem(
            "no shared instance has complete coverage in both periods"
        )
    dropped = int(shared.size - kept.size)
    return PairedPeriods(
        period_from=period_from,
        period_to=period_to,
        model_ids=tuple(model_list),
        instance_ids=tuple(shared[kept]),
        matrix_from=(mats[period_from][kept] == 1).astype(np.uint8),
        matrix_to=(mats[period_to][kept] == 1).astype(np.uint8),
        dropped_instances=dropped,
    )


def detect_improvements(
    records,
    period_a: str,
    period_b: str,
    threshold: float = DEFAULT_IMPROVEMENT_THRESHOLD,
    models: Iterable[str] | None = None,
    policy: str = POLICY_STRICT,
) -> list[str]:
    """Models whose accuracy rises by at least ``threshold`` (absolute).

    The threshold is in absolute accuracy points over the shared instance
    set; the returned ids are sorted lexicographically.
    """
    pair = align_periods(records, period_a, period_b, models, policy)
    n = pair.n_instances
    fails_a = pair.matrix_from.sum(axis=0, dtype=np.int64)
    fails_b = pair.matrix_to.sum(axis=0, dtype=np.int64)
    return [
        m
        for j, m in enumerate(pair.model_ids)
        if (int(fails_a[j]) - int(fails_b[j])) / n >= threshold
    ]


@dataclass(frozen=True)
class ImprovementReport:
    """Where one model's change landed, relative to the other models.

    ``potential_dist`` and ``observed_dist`` are other-model profile
    distributions (first-period snapshot) over the potential-change set and
    the realized-change set. ``net_dist`` nets gross improvements against
    gross declines per profile, normalized by the net change unless that is
    zero, in which case raw signed counts are reported and
    ``net_is_raw_counts`` is set.
    """

    direction: str  # "improvement" or "decline"
    model_id: str
    period_from: str
    period_to: str
    other_model_ids: tuple[str, ...]
    n_instances: int
    accuracy_from: float
    accuracy_to: float
    potential_set_size: int
    improvement_set_size: int
    decline_set_size: int
    potential_dist: ProfileDistribution
    observed_dist: ProfileDistribution
    net_dist: dict[OutcomeProfile, float]
    net_denominator: int
    net_is_raw_counts: bool
    net_systemic_failure_change: int
    dropped_instances: int = 0

    def to_dict(self) -> dict:
        from .profiles import distribution_to_json

        return {
            "report": self.direction,
            "model_id": self.model_id,
            "period_from": self.period_from,
            "period_to": self.period_to,
            "other_model_ids": list(self.other_model_ids),
            "n_instances": self.n_instances,
            "accuracy_from": self.accuracy_from,
            "accuracy_to": self.accuracy_to,
            "potential_set_size": self.potential_set_size,
            "improvement_set_size": self.improvement_set_size,
            "decline_set_size": self.decline_set_size,
            "potential_dist": distribution_to_json(self.potential_dist),
            "observed_dist": distribution_to_json(self.observed_dist),
            "net_dist": distribution_to_json(self.net_dist),
            "net_denominator": self.net_denominator,
            "net_is_raw_counts": self.net_is_raw_counts,
            "net_systemic_failure_change": self.net_systemic_failure_change,
            "dropped_instances": self.dropped_instances,
        }

    def plot_rows(self, series: Sequence[str] | None = None) -> list[tuple]:
        by_name = {
            "potential": self.potential_dist,
            "observed": self.observed_dist,
            "net": self.net_dist,
        }
        names = tuple(series) if series is not None else ("potential", "observed")
        rows = []
        for name in names:
            if name not in by_name:
                raise ValueError(f"unknown plot series {name!r}")
            dist = by_name[name]
            rows.extend(
                (name, profile_token(p), dist[p]) for p in sorted(dist)
            )
        return rows


def improvement_analysis(
    records,
    model_id: str,
    period_a: str,
    period_b: str,
    models: Iterable[str] | None = None,
    policy: str = POLICY_STRICT,
) -> ImprovementReport:
    """Profile analysis of one model's improvements from period_a to period_b."""
    return _change_analysis(
        records, model_id, period_a, period_b, "improvement", models, policy
    )


def decline_analysis(
    records,
    model_id: str,
    period_a: str,
    period_b: str,
    models: Iterable[str] | None = None,
    policy: str = POLICY_STRICT,
) -> ImprovementReport:
    """Mirror image: where one model's new failures landed."""
    return _change_analysis(
        records, model_id, period_a, period_b, "decline", models, policy
    )


def _change_analysis(records, model_id, period_a, period_b, direction,
                     models=None, policy=POLICY_STRICT):
    pair = align_periods(records, period_a, period_b, models, policy)
    if model_id not in pair.model_ids:
        raise UnknownModel(f"unknown model {model_id!r}")
    if len(pair.model_ids) < 2:
        raise EmptyEcosystem("profile analysis needs at least two models")
    j = pair.model_ids.index(model_id)
    n = pair.n_instances

    col_a = pair.matrix_from[:, j]
    col_b = pair.matrix_to[:, j]
    others = [i for i in range(len(pair.model_ids)) if i != j]
    other_ids = tuple(pair.model_ids[i] for i in others)
    other_profiles = pair.matrix_from[:, others]

    improved = (col_a == 1) & (col_b == 0)
    declined = (col_a == 0) & (col_b == 1)
    potential = col_a == 1 if direction == "improvement" else col_a == 0

    pot_counts = profile_counts(other_profiles[potential])
    imp_counts = profile_counts(other_profiles[improved])
    dec_counts = profile_counts(other_profiles[declined])
    realized_counts = imp_counts if direction == "improvement" else dec_counts

    n_pot = int(potential.sum())
    n_imp = int(improved.sum())
    n_dec = int(declined.sum())
    n_real = n_imp if direction == "improvement" else n_dec

    pot_dist = {p: c / n_pot for p, c in pot_counts.items()} if n_pot else {}
    obs_dist = {p: c / n_real for p, c in realized_counts.items()} if n_real else {}

    # net change per profile, signed toward the analysis direction
    sign = 1 if direction == "improvement" else -1
    net_counts: dict[OutcomeProfile, int] = {}
    for p in set(imp_counts) | set(dec_counts):
        net_counts[p] = sign * (imp_counts.get(p, 0) - dec_counts.get(p, 0))
    denom = sign * (n_imp - n_dec)
    if denom != 0:
        net_dist = {p: c / denom for p, c in net_counts.items()}
        raw = False
    else:
        net_dist = {p: float(c) for p, c in net_counts.items()}
        raw = True

    all_fail = (1,) * len(others)
    net_sys = sign * (imp_counts.get(all_fail, 0) - dec_counts.get(all_fail, 0))

    return ImprovementReport(
        direction=direction,
        model_id=model_id,
        period_from=period_a,
        period_to=period_b,
        other_model_ids=other_ids,
        n_instances=n,
        accuracy_from=1.0 - int(col_a.sum()) / n,
        accuracy_to=1.0 - int(col_b.sum()) / n,
        potential_set_size=n_pot,
        improvement_set_size=n_imp,
        decline_set_size=n_dec,
        potential_dist=pot_dist,
        observed_dist=obs_dist,
        net_dist=net_dist,
        net_denominator=denom,
        net_is_raw_counts=raw,
        net_systemic_failure_change=net_sys,
        dropped_instances=pair.dropped_instances,
    )
