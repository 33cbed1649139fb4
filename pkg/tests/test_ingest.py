import io
import json

import numpy as np
import pytest

from ecoaudit import (
    ConflictingPrediction,
    InconsistentLabel,
    InconsistentMetadata,
    MalformedInput,
    MissingField,
    PredictionRecord,
    RecordSet,
    load_metadata,
    load_votes,
    parse_records,
    write_records_csv,
)

HEADER = "instance_id,model_id,period,prediction,label"


def csv_bytes(*rows, header=HEADER):
    return ("\n".join((header,) + rows) + "\n").encode()


def test_parses_all_rows_into_records():
    res = parse_records(csv_bytes("i1,mA,2020,P,L", "i2,mA,2020,Q,L2"))
    assert len(res.records) == 2
    assert res.records[0] == PredictionRecord("i1", "mA", "2020", "P", "L")
    assert res.duplicates_collapsed == 0


def test_exact_duplicate_rows_collapse_with_warning_count():
    res = parse_records(csv_bytes("i1,mA,2020,P,L", "i1,mA,2020,P,L"))
    assert len(res.records) == 1
    assert res.duplicates_collapsed == 1


def test_conflicting_duplicate_predictions_are_fatal():
    data = csv_bytes("i1,mA,2020,P,L", "i1,mA,2020,Q,L")
    with pytest.raises(ConflictingPrediction) as exc:
        parse_records(data)
    assert exc.value.code == "CONFLICTING_PREDICTION"
    assert exc.value.instance_id == "i1"


def test_two_labels_for_one_instance_are_fatal():
    data = csv_bytes("i1,mA,2020,P,L1", "i1,mB,2020,P,L2")
    with pytest.raises(InconsistentLabel) as exc:
        parse_records(data)
    assert exc.value.code == "INCONSISTENT_LABEL"


def test_verdict_is_order_independent():
    good = ["i1,mA,2020,P,L", "i2,mA,2020,P,L", "i1,mB,2020,Q,L"]
    bad = good + ["i1,mA,2020,Q,L"]
    rng = np.random.default_rng(3)
    for _ in range(10):
        rng.shuffle(good)
        rng.shuffle(bad)
        assert len(parse_records(csv_bytes(*good)).records) == 3
        with pytest.raises(ConflictingPrediction):
            parse_records(csv_bytes(*bad))


def test_empty_required_field_reports_row():
    with pytest.raises(MissingField, match="row 3"):
        parse_records(csv_bytes("i1,mA,2020,P,L", "i2,,2020,P,L"))


def test_unknown_column_rejected():
    with pytest.raises(MalformedInput, match="unexpected column"):
        parse_records(csv_bytes("i1,mA,2020,P,L,x", header=HEADER + ",extra"))


def test_missing_required_column_rejected():
    with pytest.raises(MalformedInput, match="missing required"):
        parse_records(b"instance_id,model_id,period,prediction\ni1,mA,2020,P\n")


def test_empty_input_rejected():
    with pytest.raises(MalformedInput):
        parse_records(b"")


def test_non_utf8_rejected():
    with pytest.raises(MalformedInput, match="UTF-8"):
        parse_records(HEADER.encode() + b"\ni1,mA,2020,P,\xff\n")


def test_header_only_yields_empty_records():
    res = parse_records((HEADER + "\n").encode())
    assert len(res.records) == 0


def test_rfc4180_quoting_round_trips():
    row = 'i1,"m,A",2020,"says ""hi""",L'
    res = parse_records(csv_bytes(row))
    assert res.records[0].model_id == "m,A"
    assert res.records[0].prediction == 'says "hi"'
    buf = io.BytesIO()
    write_records_csv(res.records, buf)
    assert parse_records(buf.getvalue()).records == res.records


def test_meta_columns_build_metadata_table():
    res = parse_records(
        csv_bytes(
            "i1,mA,2020,P,L,dark",
            "i1,mB,2020,P,L,dark",
            "i2,mA,2020,P,L,",
            header=HEADER + ",meta_tone",
        )
    )
    assert res.metadata.get("i1", "tone") == "dark"
    assert res.metadata.get("i2", "tone") is None


def test_inconsistent_metadata_fatal():
    data = csv_bytes(
        "i1,mA,2020,P,L,dark",
        "i1,mB,2020,P,L,light",
        header=HEADER + ",meta_tone",
    )
    with pytest.raises(InconsistentMetadata) as exc:
        parse_records(data)
    assert exc.value.code == "INCONSISTENT_METADATA"


def test_empty_meta_cell_means_absent_not_conflict():
    data = csv_bytes(
        "i1,mA,2020,P,L,dark",
        "i1,mB,2020,P,L,",
        header=HEADER + ",meta_tone",
    )
    assert parse_records(data).metadata.get("i1", "tone") == "dark"


def test_canonical_writer_round_trip_with_metadata(hiring_a):
    from conftest import make_records

    recs = make_records({"f1": {1}, "f2": {2}, "f3": set()})
    meta_src = {r.instance_id: {"grp": "g1" if r.instance_id < "i05" else "g2"}
                for r in recs}
    from ecoaudit import MetadataTable

    table = MetadataTable(meta_src)
    buf = io.BytesIO()
    write_records_csv(recs, buf, table)
    res = parse_records(buf.getvalue())
    assert list(res.records) == recs
    assert res.metadata.entries == meta_src
    # serializing again is byte-identical
    buf2 = io.BytesIO()
    write_records_csv(res.records, buf2, res.metadata)
    assert buf2.getvalue() == buf.getvalue()


def test_jsonl_parsing_and_meta():
    lines = [
        {"instance_id": "i1", "model_id": "mA", "period": "2020",
         "prediction": "P", "label": "L", "meta": {"tone": "dark"}},
        {"instance_id": "i2", "model_id": "mA", "period": "2020",
         "prediction": "Q", "label": "L2"},
    ]
    res = parse_records("\n".join(json.dumps(l) for l in lines).encode(), "jsonl")
    assert len(res.records) == 2
    assert res.metadata.get("i1", "tone") == "dark"


def test_jsonl_bad_lines():
    with pytest.raises(MalformedInput, match="line 1"):
        parse_records(b"not json\n", "jsonl")
    with pytest.raises(MalformedInput, match="expected an object"):
        parse_records(b"[1,2]\n", "jsonl")
    with pytest.raises(MissingField):
        parse_records(b'{"instance_id":"i1"}\n', "jsonl")
    with pytest.raises(MalformedInput, match="unexpected fields"):
        parse_records(
            b'{"instance_id":"i1","model_id":"m","period":"p",'
            b'"prediction":"P","label":"L","bogus":1}\n',
            "jsonl",
        )


def test_jsonl_duplicate_and_conflict_semantics_match_csv():
    base = {"instance_id": "i1", "model_id": "m", "period": "p",
            "prediction": "P", "label": "L"}
    dup = "\n".join(json.dumps(base) for _ in range(2)).encode()
    assert parse_records(dup, "jsonl").duplicates_collapsed == 1
    conflict = (json.dumps(base) + "\n"
                + json.dumps({**base, "prediction": "Q"})).encode()
    with pytest.raises(ConflictingPrediction):
        parse_records(conflict, "jsonl")


def test_load_metadata_side_file():
    data = b'{"instance_id": "i1", "tone": "dark"}\n' \
           b'{"instance_id": "i2", "meta": {"tone": "light"}}\n'
    table = load_metadata(data)
    assert table.get("i1", "tone") == "dark"
    assert table.get("i2", "tone") == "light"
    restricted = table.restrict(["i1"])
    assert "i2" not in restricted
    assert restricted.ignored_instances == 1


def test_load_metadata_conflict():
    data = (b'{"instance_id": "i1", "tone": "dark"}\n'
            b'{"instance_id": "i1", "tone": "light"}\n')
    with pytest.raises(InconsistentMetadata):
        load_metadata(data)


def test_load_votes():
    data = b'{"instance_id": "i1", "votes": ["a", "a", "b"]}\n'
    assert load_votes(data) == {"i1": ["a", "a", "b"]}
    with pytest.raises(MalformedInput):
        load_votes(b'{"instance_id": "i1", "votes": []}\n')
    with pytest.raises(MalformedInput, match="duplicate"):
        load_votes(data + data)


def test_recordset_behaves_like_a_sequence():
    recs = [
        PredictionRecord("i1", "m", "p", "P", "L"),
        PredictionRecord("i2", "m", "p", "Q", "L"),
    ]
    rs = RecordSet.from_records(recs)
    assert len(rs) == 2
    assert rs[1].instance_id == "i2"
    assert list(rs[0:1]) == recs[:1]
    assert rs == recs
    assert list(rs + rs) == recs + recs
