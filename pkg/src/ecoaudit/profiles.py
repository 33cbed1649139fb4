"""Outcome-profile helpers.

A profile is the failure pattern of one instance across a set of models,
represented as a tuple of 0/1 ints (0 = correct, 1 = failure). Profiles over
the full ecosystem have length k; "other models" views have length k-1.

For serialization each bit maps to a character: ``o`` = correct, ``x`` =
failure, so ``(1, 0)`` becomes ``"xo"``. Tokens sort lexicographically, which
keeps JSON output deterministic.
"""

from __future__ import annotations

import numpy as np

from .errors import MalformedInput, TooManyModels

OutcomeProfile = tuple[int, ...]
ProfileDistribution = dict[OutcomeProfile, float]

# enumerate the full 2^m profile space only while it stays small
FULL_ENUMERATION_MAX_BITS = 12

_BIT_CHAR = {0: "o", 1: "x"}
_CHAR_BIT = {"o": 0, "x": 1}


def profile_token(profile: OutcomeProfile) -> str:
    """Encode a profile as a compact string, e.g. (1, 0) -> 'xo'."""
    return "".join(_BIT_CHAR[b] for b in profile)


def parse_profile_token(token: str) -> OutcomeProfile:
    try:
        return tuple(_CHAR_BIT[c] for c in token)
    except KeyError:
        raise MalformedInput(f"invalid profile token {token!r}") from None


def all_profiles(length: int) -> list[OutcomeProfile]:
    """All 2^length profiles in lexicographic token order (all-correct first)."""
    return [
        tuple((i >> (length - 1 - j)) & 1 for j in range(length))
        for i in range(2 ** length)
    ]


def support_union(*dists: ProfileDistribution | None) -> list[OutcomeProfile]:
    """Sorted union of the supports of several profile distributions."""
    profiles: set[OutcomeProfile] = set()
    for d in dists:
        if d:
            profiles.update(d.keys())
    return sorted(profiles)


def distribution_to_json(dist: ProfileDistribution | None):
    """Token-keyed dict for JSON output; None passes through as null."""
    if dist is None:
        return None
    return {profile_token(p): dist[p] for p in sorted(dist)}


def profile_counts(rows: np.ndarray) -> dict[OutcomeProfile, int]:
    """Count occurrences of each profile among the rows of a binary matrix."""
    n, m = rows.shape
    if m > 62:
        raise TooManyModels(f"profile encoding limited to 62 models, got {m}")
    if n == 0:
        return {}
    powers = 1 << np.arange(m - 1, -1, -1, dtype=np.int64)
    codes = rows.astype(np.int64) @ powers
    uniq, counts = np.unique(codes, return_counts=True)
    return {
        tuple(int((c >> (m - 1 - j)) & 1) for j in range(m)): int(cnt)
        for c, cnt in zip(uniq, counts)
    }


def profile_distribution(rows: np.ndarray, enumerate_all: bool = False) -> ProfileDistribution:
    """Empirical profile distribution over the rows of a binary matrix.

    By default only observed profiles appear (empty dict for zero rows). With
    ``enumerate_all`` zero-probability profiles are included while the
    profile space is small enough to enumerate, so downstream deltas cover
    the full space.
    """
    n, m = rows.shape
    if n == 0:
        return {}
    counts = profile_counts(rows)
    if enumerate_all and m <= FULL_ENUMERATION_MAX_BITS:
        return {p: counts.get(p, 0) / n for p in all_profiles(m)}
    return {p: c / n for p, c in counts.items()}
