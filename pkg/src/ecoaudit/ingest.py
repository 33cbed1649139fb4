"""Prediction-log ingestion: strict parsing, validation, and normalization.

Two input formats are accepted:

* CSV (primary): header ``instance_id,model_id,period,prediction,label`` plus
  optional ``meta_<key>`` columns, RFC-4180 quoting. One row per
  instance x model x period.
* JSONL: one object per line with the same field names and an optional
  ``meta`` object.

Instance metadata may also arrive as a side JSONL file (``instance_id`` plus
a flat string map) and annotator votes as JSONL ``{"instance_id": ...,
"votes": [...]}`` lines.

Validation is strict: empty required fields, unknown columns, undecodable
bytes, and malformed lines are fatal. Exact duplicate rows collapse with a
warning count; duplicates that disagree on the prediction are fatal, as is an
instance carrying two ground-truth labels or two values for one metadata key.
All checks are order-independent: permuting input rows never changes the
accept/reject verdict.
"""

from __future__ import annotations

import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np
import pandas as pd

from .errors import (
    ConflictingPrediction,
    InconsistentLabel,
    InconsistentMetadata,
    MalformedInput,
    MissingField,
)

logger = logging.getLogger("ecoaudit")

REQUIRED_COLUMNS = ("instance_id", "model_id", "period", "prediction", "label")
META_PREFIX = "meta_"


class PredictionRecord(NamedTuple):
    """One prediction of one model on one instance in one period."""

    instance_id: str
    model_id: str
    period: str
    prediction: str
    label: str


@dataclass
class MetadataTable:
    """Per-instance categorical metadata: instance_id -> {key -> category}."""

    entries: dict[str, dict[str, str]] = field(default_factory=dict)
    ignored_instances: int = 0
    tie_instances: tuple[str, ...] = ()

    def get(self, instance_id: str, key: str) -> str | None:
        return self.entries.get(instance_id, {}).get(key)

    def __contains__(self, instance_id: str) -> bool:
        return instance_id in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def keys(self) -> set[str]:
        """All metadata keys appearing anywhere in the table."""
        out: set[str] = set()
        for m in self.entries.values():
            out.update(m)
        return out

    def merge(self, other: "MetadataTable") -> "MetadataTable":
        """Union of two tables; the same (instance, key) must agree."""
        merged = {i: dict(m) for i, m in self.entries.items()}
        for inst, m in other.entries.items():
            tgt = merged.setdefault(inst, {})
            for k, v in m.items():
                if k in tgt and tgt[k] != v:
                    raise InconsistentMetadata(inst, k)
                tgt[k] = v
        return MetadataTable(
            merged,
            ignored_instances=self.ignored_instances + other.ignored_instances,
            tie_instances=tuple(dict.fromkeys(self.tie_instances + other.tie_instances)),
        )

    def restrict(self, instance_ids: Iterable[str]) -> "MetadataTable":
        """Drop entries for unknown instances, counting them as ignored."""
        keep = set(instance_ids)
        kept = {i: m for i, m in self.entries.items() if i in keep}
        ignored = len(self.entries) - len(kept)
        if ignored:
            logger.warning("ignoring metadata for %d unknown instances", ignored)
        return MetadataTable(kept, ignored_instances=self.ignored_instances + ignored,
                             tie_instances=self.tie_instances)


class RecordSet(Sequence):
    """Immutable sequence of PredictionRecord backed by columnar arrays.

    Behaves like a list of records but keeps the five columns as numpy
    object arrays so matrix construction over millions of rows stays
    vectorized.
    """

    __slots__ = ("_cols",)

    def __init__(self, instance_id, model_id, period, prediction, label):
        cols = tuple(
            np.asarray(c, dtype=object)
            for c in (instance_id, model_id, period, prediction, label)
        )
        n = len(cols[0])
        if any(len(c) != n for c in cols):
            raise ValueError("column length mismatch")
        self._cols = cols

    @classmethod
    def from_records(cls, records: Iterable[PredictionRecord]) -> "RecordSet":
        if isinstance(records, RecordSet):
            return records
        rows = [tuple(r) for r in records]
        if not rows:
            return cls([], [], [], [], [])
        return cls(*(list(col) for col in zip(*rows)))

    def columns(self) -> tuple[np.ndarray, ...]:
        """(instance_id, model_id, period, prediction, label) arrays."""
        return self._cols

    def __len__(self) -> int:
        return len(self._cols[0])

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return RecordSet(*(c[idx] for c in self._cols))
        return PredictionRecord(*(c[idx] for c in self._cols))

    def __iter__(self) -> Iterator[PredictionRecord]:
        return map(PredictionRecord._make, zip(*self._cols))

    def __add__(self, other: "RecordSet") -> "RecordSet":
        other = RecordSet.from_records(other)
        return RecordSet(*(np.concatenate([a, b])
                           for a, b in zip(self._cols, other._cols)))

    def __eq__(self, other) -> bool:
        if isinstance(other, (RecordSet, list, tuple)):
            return len(self) == len(other) and all(
                a == b for a, b in zip(self, other)
            )
        return NotImplemented

    def __repr__(self) -> str:
        return f"RecordSet(n={len(self)})"


class ParseResult(NamedTuple):
    records: RecordSet
    metadata: MetadataTable
    duplicates_collapsed: int


def _read_text(source) -> str:
    """Decode a path, bytes, or file-like object as UTF-8 text."""
    try:
        if isinstance(source, (str, Path)):
            data = Path(source).read_bytes()
        elif isinstance(source, bytes):
            data = source
        elif hasattr(source, "read"):
            data = source.read()
            if isinstance(data, str):
                return data
        else:
            raise MalformedInput(f"unsupported source type {type(source).__name__}")
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedInput(f"input is not valid UTF-8: {exc}") from None


def parse_records(source, fmt: str | None = None) -> ParseResult:
    """Parse a prediction log into records plus instance metadata.

    ``source`` may be a path, raw bytes, or a file-like object. ``fmt`` is
    ``"csv"`` or ``"jsonl"``; when omitted it is inferred from a path's
    extension and defaults to CSV.
    """
    if fmt is None:
        fmt = infer_format(source)
    if fmt == "csv":
        return _parse_csv(source)
    if fmt == "jsonl":
        return _parse_jsonl(source)
    raise MalformedInput(f"unknown format {fmt!r} (expected 'csv' or 'jsonl')")


def infer_format(source) -> str:
    if isinstance(source, (str, Path)) and str(source).endswith(".jsonl"):
        return "jsonl"
    return "csv"


def _parse_csv(source) -> ParseResult:
    text = _read_text(source)
    if not text.strip():
        raise MalformedInput("empty input")
    try:
        df = pd.read_csv(
            io.StringIO(text),
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
        )
    except Exception as exc:  # pandas raises several parser error types
        raise MalformedInput(f"CSV parse failure: {exc}") from None

    cols = list(df.columns)
    missing = [c for c in REQUIRED_COLUMNS if c not in cols]
    if missing:
        raise MalformedInput(f"missing required columns: {', '.join(missing)}")
    meta_cols = []
    for c in cols:
        if c in REQUIRED_COLUMNS:
            continue
        if c.startswith(META_PREFIX) and len(c) > len(META_PREFIX):
            meta_cols.append(c)
        else:
            raise MalformedInput(f"unexpected column {c!r}")

    return _validate_frame(df, meta_cols)


def _parse_jsonl(source) -> ParseResult:
    text = _read_text(source)
    rows: dict[str, list] = {c: [] for c in REQUIRED_COLUMNS}
    meta_rows: list[dict | None] = []
    meta_keys: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"line {lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise MalformedInput(f"line {lineno}: expected an object")
        extra = set(obj) - set(REQUIRED_COLUMNS) - {"meta"}
        if extra:
            raise MalformedInput(
                f"line {lineno}: unexpected fields {sorted(extra)}"
            )
        for c in REQUIRED_COLUMNS:
            v = obj.get(c)
            if not isinstance(v, str) or not v:
                raise MissingField(f"line {lineno}: field {c!r} missing or empty")
            rows[c].append(v)
        meta = obj.get("meta")
        if meta is not None:
            if not isinstance(meta, dict) or not all(
                isinstance(k, str) and isinstance(v, str) and k and v
                for k, v in meta.items()
            ):
                raise MalformedInput(
                    f"line {lineno}: 'meta' must map strings to strings"
                )
            meta_keys.update(meta)
        meta_rows.append(meta)

    df = pd.DataFrame(rows, dtype=object)
    meta_cols = []
    for key in sorted(meta_keys):
        col = META_PREFIX + key
        df[col] = [m.get(key, "") if m else "" for m in meta_rows]
        meta_cols.append(col)
    if df.empty:
        df = pd.DataFrame({c: [] for c in REQUIRED_COLUMNS}, dtype=object)
    return _validate_frame(df, meta_cols)


def _first_occurrence(codes: np.ndarray, values: np.ndarray, n_groups: int) -> np.ndarray:
    # first[g] = value at the earliest row of group g (reversed write wins)
    first = np.empty(n_groups, dtype=values.dtype)
    first[codes[::-1]] = values[::-1]
    return first


def _validate_frame(df: pd.DataFrame, meta_cols: list[str]) -> ParseResult:
    if len(df) == 0:
        return ParseResult(RecordSet([], [], [], [], []), MetadataTable(), 0)

    # empty required fields (row numbers count the header as line 1)
    for c in REQUIRED_COLUMNS:
        vals = df[c].to_numpy()
        empty = np.flatnonzero(vals == "")
        if empty.size:
            raise MissingField(
                f"row {int(empty[0]) + 2}: column {c!r} is empty"
            )

    inst = df["instance_id"].to_numpy()
    icodes, iuniq = pd.factorize(inst, sort=False)
    n_inst = len(iuniq)

    # one ground-truth label per instance
    lcodes, _ = pd.factorize(df["label"].to_numpy(), sort=False)
    lfirst = _first_occurrence(icodes, lcodes, n_inst)
    bad = np.flatnonzero(lcodes != lfirst[icodes])
    if bad.size:
        raise InconsistentLabel(inst[bad[0]])

    # per-instance metadata consistency; empty cell = no value
    metadata = MetadataTable()
    for col in meta_cols:
        key = col[len(META_PREFIX):]
        vals = df[col].to_numpy()
        mask = vals != ""
        if not mask.any():
            continue
        sub_codes = icodes[mask]
        vcodes, vuniq = pd.factorize(vals[mask], sort=False)
        vfirst = np.full(n_inst, -1, dtype=np.int64)
        vfirst[sub_codes[::-1]] = vcodes[::-1]
        bad = np.flatnonzero(vcodes != vfirst[sub_codes])
        if bad.size:
            raise InconsistentMetadata(inst[mask][bad[0]], key)
        for gi in np.flatnonzero(vfirst >= 0):
            metadata.entries.setdefault(iuniq[gi], {})[key] = vuniq[vfirst[gi]]

    # duplicate (instance, model, period) handling
    key_df = df[["instance_id", "model_id", "period"]]
    dup_any = key_df.duplicated(keep=False)
    collapsed = 0
    if dup_any.any():
        sub = df.loc[dup_any]
        nuniq = sub.groupby(
            ["instance_id", "model_id", "period"], sort=False
        )["prediction"].nunique()
        conflicts = nuniq[nuniq > 1]
        if len(conflicts):
            i, m, p = conflicts.index[0]
            raise ConflictingPrediction(i, m, p)
        drop = key_df.duplicated(keep="first")
        collapsed = int(drop.sum())
        logger.warning("collapsed %d duplicate rows", collapsed)
        df = df.loc[~drop]

    records = RecordSet(*(df[c].to_numpy() for c in REQUIRED_COLUMNS))
    _intern_columns(records)
    return ParseResult(records, metadata, collapsed)


def _intern_columns(records: RecordSet) -> None:
    # model/period/prediction/label vocabularies are tiny; interning makes
    # later equality checks pointer comparisons
    for col in records.columns()[1:]:
        uniq = {}
        for i, v in enumerate(col):
            col[i] = uniq.setdefault(v, sys.intern(v))


def load_metadata(source) -> MetadataTable:
    """Load a side metadata file: JSONL of instance_id plus a flat string map."""
    text = _read_text(source)
    table = MetadataTable()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"line {lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise MalformedInput(f"line {lineno}: expected an object")
        inst = obj.pop("instance_id", None)
        if not isinstance(inst, str) or not inst:
            raise MissingField(f"line {lineno}: 'instance_id' missing or empty")
        if "meta" in obj and isinstance(obj["meta"], dict) and len(obj) == 1:
            obj = obj["meta"]
        tgt = table.entries.setdefault(inst, {})
        for k, v in obj.items():
            if not isinstance(v, str) or not v:
                raise MalformedInput(
                    f"line {lineno}: metadata value for {k!r} must be a "
                    "non-empty string"
                )
            if k in tgt and tgt[k] != v:
                raise InconsistentMetadata(inst, k)
            tgt[k] = v
    return table


def load_votes(source) -> dict[str, list[str]]:
    """Load annotator votes: JSONL {"instance_id": ..., "votes": [...]}."""
    text = _read_text(source)
    votes: dict[str, list[str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"line {lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise MalformedInput(f"line {lineno}: expected an object")
        inst = obj.get("instance_id")
        vs = obj.get("votes")
        if not isinstance(inst, str) or not inst:
            raise MissingField(f"line {lineno}: 'instance_id' missing or empty")
        if (
            not isinstance(vs, list)
            or not vs
            or not all(isinstance(v, str) and v for v in vs)
        ):
            raise MalformedInput(
                f"line {lineno}: 'votes' must be a non-empty list of strings"
            )
        if inst in votes:
            raise MalformedInput(f"line {lineno}: duplicate votes for {inst!r}")
        votes[inst] = list(vs)
    return votes


def write_records_csv(records, sink, metadata: MetadataTable | None = None) -> None:
    """Canonical CSV writer; parse_records() of the output round-trips exactly.

    Columns: the five required fields, then meta_<key> columns sorted by key.
    Rows keep the record order given.
    """
    rs = RecordSet.from_records(records)
    cols = dict(zip(REQUIRED_COLUMNS, rs.columns()))
    df = pd.DataFrame(cols)
    if metadata and len(metadata):
        inst = rs.columns()[0]
        for key in sorted(metadata.keys()):
            df[META_PREFIX + key] = [
                metadata.get(i, key) or "" for i in inst
            ]
    text = df.to_csv(index=False, lineterminator="\n")
    _write_bytes(sink, text.encode("utf-8"))


def _write_bytes(sink, data: bytes) -> None:
    if isinstance(sink, (str, Path)):
        Path(sink).write_bytes(data)
    elif hasattr(sink, "write"):
        try:
            sink.write(data)
        except TypeError:
            sink.write(data.decode("utf-8"))
    else:
        raise MalformedInput(f"unsupported sink type {type(sink).__name__}")
