"""Leader-following analysis: how one model's failure shifts the others.

Conditioning on model j failing restricts the failure matrix to the rows
where column j is 1; the distribution of the remaining models' profiles on
those rows is compared against their unconditional distribution over all
rows. The all-fail profile's delta is the headline quantity: how much more
likely a systemic failure becomes once one failure is observed.

The primary reference is the observed unconditional distribution; the
independence baseline over the other models' rates is also reported. Deltas
come in absolute and relative form since a "+37%"-style statement is
ambiguous between the two.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyEcosystem
from .matrix import Ecosystem, failure_rates
from .profiles import (
    FULL_ENUMERATION_MAX_BITS,
    OutcomeProfile,
    ProfileDistribution,
    all_profiles,
    distribution_to_json,
    profile_distribution,
    profile_token,
    support_union,
)


@dataclass(frozen=True)
class ConditionalReport:
    conditioned_model: str
    other_model_ids: tuple[str, ...]
    failure_rate: float
    n_instances: int
    unconditional: ProfileDistribution
    conditional_on_failure: ProfileDistribution | None
    conditional_on_success: ProfileDistribution | None
    independence_baseline: ProfileDistribution
    per_profile_delta: dict[OutcomeProfile, float] | None
    per_profile_relative_delta: dict[OutcomeProfile, float | None] | None
    all_fail_delta: float | None
    all_fail_relative_delta: float | None
    degenerate: bool

    def to_dict(self) -> dict:
        return {
            "report": "conditional",
            "conditioned_model": self.conditioned_model,
            "other_model_ids": list(self.other_model_ids),
            "failure_rate": self.failure_rate,
            "n_instances": self.n_instances,
            "unconditional": distribution_to_json(self.unconditional),
            "conditional_on_failure": distribution_to_json(self.conditional_on_failure),
            "conditional_on_success": distribution_to_json(self.conditional_on_success),
            "independence_baseline": distribution_to_json(self.independence_baseline),
            "per_profile_delta": distribution_to_json(self.per_profile_delta),
            "per_profile_relative_delta": distribution_to_json(
                self.per_profile_relative_delta
            ),
            "all_fail_delta": self.all_fail_delta,
            "all_fail_relative_delta": self.all_fail_relative_delta,
            "degenerate": self.degenerate,
        }

    def plot_rows(self, series: Sequence[str] | None = None) -> list[tuple]:
        by_name = {
            "unconditional": self.unconditional,
            "conditional_on_failure": self.conditional_on_failure,
            "conditional_on_success": self.conditional_on_success,
            "independence_baseline": self.independence_baseline,
            "delta": self.per_profile_delta,
        }
        if series is None:
            names = ("unconditional", "conditional_on_failure",
                     "conditional_on_success")
        else:
            names = tuple(series)
        rows = []
        for name in names:
            if name not in by_name:
                raise ValueError(f"unknown plot series {name!r}")
            dist = by_name[name]
            if dist is None:
                continue
            rows.extend((name, profile_token(p), dist[p]) for p in sorted(dist))
        return rows


def _independence_profile_dist(rates) -> ProfileDistribution:
    out = {}
    for p in all_profiles(len(rates)):
        prob = 1.0
        for bit, r in zip(p, rates):
            prob *= r if bit else (1.0 - r)
        out[p] = prob
    return out


def conditional_profiles(eco: Ecosystem, model_id: str) -> ConditionalReport:
    """Other-model profile distributions with and without model_id failing."""
    j = eco.model_index(model_id)
    k = eco.n_models
    if k < 2:
        raise EmptyEcosystem("conditional analysis needs at least two models")

    others = [i for i in range(k) if i != j]
    other_ids = tuple(eco.model_ids_ordered[i] for i in others)
    sub = eco.failure_matrix[:, others]
    fail_mask = eco.failure_matrix[:, j] == 1
    n_fail = int(fail_mask.sum())
    n = eco.n_instances
    rate = eco.column_counts[j] / n

    enumerate_all = (k - 1) <= FULL_ENUMERATION_MAX_BITS
    uncond = profile_distribution(sub, enumerate_all=enumerate_all)
    cond_fail = (
        profile_distribution(sub[fail_mask], enumerate_all=enumerate_all)
        if n_fail > 0
        else None
    )
    cond_succ = (
        profile_distribution(sub[~fail_mask], enumerate_all=enumerate_all)
        if n_fail < n
        else None
    )
    degenerate = n_fail == 0 or n_fail == n

    other_rates = [failure_rates(eco)[i] for i in others]
    baseline = _independence_profile_dist(other_rates)

    all_fail = (1,) * (k - 1)
    if cond_fail is None:
        delta = rel_delta = None
        afd = afr = None
    else:
        profiles = support_union(uncond, cond_fail)
        delta = {
            p: cond_fail.get(p, 0.0) - uncond.get(p, 0.0) for p in profiles
        }
        rel_delta = {
            p: (delta[p] / uncond[p]) if uncond.get(p, 0.0) > 0.0 else None
            for p in profiles
        }
        afd = delta.get(all_fail, 0.0)
        afr = rel_delta.get(all_fail)

    return ConditionalReport(
        conditioned_model=model_id,
        other_model_ids=other_ids,
        failure_rate=rate,
        n_instances=n,
        unconditional=uncond,
        conditional_on_failure=cond_fail,
        conditional_on_success=cond_succ,
        independence_baseline=baseline,
        per_profile_delta=delta,
        per_profile_relative_delta=rel_delta,
        all_fail_delta=afd,
        all_fail_relative_delta=afr,
        degenerate=degenerate,
    )
