from __future__ import annotations

import json
import threading

import pytest

from ipocorpus.store import (
    SCHEMA_VERSION,
    SchemaViolation,
    Store,
    UnknownField,
    read_export,
)

FILING_ROW = {
    "cik": "0000831001",
    "ticker": None,
    "accession_number": "0000912057-97-001234",
    "form_type": "S-1",
    "filing_date": "1997-03-12",
    "sic_code": "1040",
    "source_format": "ascii",
    "primary_document": "doc.txt",
}


def _filing_row(index: int) -> dict:
    row = dict(FILING_ROW)
    row["accession_number"] = f"0000912057-97-{index:06d}"
    return row


@pytest.fixture()
def store(tmp_path):
    return Store(tmp_path / "data")


def test_append_assigns_monotone_row_ids(store):
    manifest = store.manifest("filings")
    ids = [store.append(manifest, _filing_row(i)) for i in range(5)]
    assert ids == [1, 2, 3, 4, 5]


def test_rows_carry_schema_version_and_ts(store):
    manifest = store.manifest("filings")
    store.append(manifest, _filing_row(1))
    row = next(store.rows("filings"))
    assert row["schema_version"] == SCHEMA_VERSION
    assert "ts" in row


def test_schema_violation_names_the_field(store):
    manifest = store.manifest("sections")
    with pytest.raises(SchemaViolation, match="filing_ref"):
        store.append(manifest, {"item_id": "x", "order_index": 0})


def test_schema_rejects_undeclared_field(store):
    manifest = store.manifest("filings")
    with pytest.raises(SchemaViolation, match="undeclared"):
        store.append(manifest, {**_filing_row(1), "surprise": 1})


def test_concurrent_appends_all_present_with_distinct_ids(store):
    manifest = store.manifest("filings")
    results = []

    def worker(start: int):
        for i in range(start, start + 10):
            results.append(store.append(manifest, _filing_row(i)))

    threads = [threading.Thread(target=worker, args=(k * 10,)) for k in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(results) == list(range(1, 41))
    assert sum(1 for _ in store.rows("filings")) == 40


def test_query_equality_and_callable_predicates(store):
    manifest = store.manifest("filings")
    store.append(manifest, _filing_row(1))
    amended = _filing_row(2)
    amended["form_type"] = "S-1/A"
    store.append(manifest, amended)
    assert [r["form_type"] for r in store.query("filings", {"form_type": "S-1"})] == ["S-1"]
    late = list(store.query("filings", {"filing_date": lambda d: d >= "1997-01-01"}))
    assert len(late) == 2


def test_query_unknown_field(store):
    store.append(store.manifest("filings"), _filing_row(1))
    with pytest.raises(UnknownField):
        list(store.query("filings", {"nope": 1}))


def _section_row(item: str, label: str | None = None) -> dict:
    return {
        "item_id": item,
        "filing_ref": "0000912057-97-000001",
        "order_index": 0,
        "raw_title": "RISK FACTORS",
        "span": [10, 20],
        "token_count_raw": 100,
        "token_count_filtered": 90,
        "label": label,
        "decided_by": "policy" if label else None,
    }


def test_reappended_row_supersedes_in_query_view(store):
    manifest = store.manifest("sections")
    store.append(manifest, _section_row("s1"))
    store.append(manifest, _section_row("s1", label="ManualReview"))
    rows = list(store.query("sections"))
    assert len(rows) == 1
    assert rows[0]["label"] == "ManualReview"
    assert sum(1 for _ in store.rows("sections")) == 2  # history retained


def test_adjudication_supersedes_pipeline_verdict(store):
    store.append(store.manifest("sections"), _section_row("s1", label="ManualReview"))
    store.append(
        store.manifest("adjudications"),
        {"item_id": "s1", "kind": "section", "reviewer": "op", "decision": "SafeToUse"},
    )
    row = next(store.query("sections"))
    assert row["label"] == "SafeToUse"
    assert row["decided_by"] == "human"


def test_ratings_are_event_logs_not_superseded(store):
    manifest = store.manifest("ratings")
    store.append(manifest, {"asset_ref": "a1", "rater_id": "m1:nocot", "score": 3})
    store.append(manifest, {"asset_ref": "a1", "rater_id": "m1:cot", "score": 5})
    assert len(list(store.query("ratings"))) == 2


def test_torn_final_line_is_quarantined(store):
    manifest = store.manifest("filings")
    store.append(manifest, _filing_row(1))
    with open(manifest.path, "a", encoding="utf-8") as handle:
        handle.write('{"row_id": 2, "schema_version": 1, "truncated...')
    store.append(manifest, _filing_row(2))
    rows = list(store.rows("filings"))
    assert [r["row_id"] for r in rows] == [1, 2]
    quarantine = manifest.path.with_suffix(".jsonl.quarantine")
    assert quarantine.exists()
    assert "truncated" in quarantine.read_text()


def test_export_is_deterministic(store, tmp_path):
    manifest = store.manifest("filings")
    for i in range(3):
        store.append(manifest, _filing_row(i), ts="2026-01-01T00:00:00+00:00")
    selection = {"filings": list(store.query("filings"))}
    out1 = store.export(selection, tmp_path / "x1")
    out2 = store.export(selection, tmp_path / "x2")
    for name in ("filings.jsonl", "export_manifest.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_export_manifest_checksums(store, tmp_path):
    store.append(store.manifest("filings"), _filing_row(1))
    out = store.export({"filings": list(store.query("filings"))}, tmp_path / "x")
    listing = json.loads((out / "export_manifest.json").read_text())
    assert listing["files"][0]["name"] == "filings.jsonl"
    assert listing["files"][0]["rows"] == 1
    assert len(listing["files"][0]["sha256"]) == 64


def test_export_empty_selection_headers_only(store, tmp_path):
    out = store.export({"filings": []}, tmp_path / "x", format="csv")
    content = (out / "filings.csv").read_text().splitlines()
    assert len(content) == 1  # header only
    assert content[0].startswith("row_id,schema_version,ts,cik")


def test_export_round_trip(store, tmp_path):
    manifest = store.manifest("filings")
    for i in range(3):
        store.append(manifest, _filing_row(i))
    rows = list(store.query("filings"))
    out = store.export({"filings": rows}, tmp_path / "x")
    back = read_export(out, "filings")
    assert back == rows


def test_referential_integrity_reports_dangling(store):
    store.append(store.manifest("filings"), _filing_row(1))
    row = _section_row("s1")
    row["filing_ref"] = "0000912057-97-999999"
    store.append(store.manifest("sections"), row)
    problems = store.referential_integrity()
    assert len(problems) == 1
    assert "0000912057-97-999999" in problems[0]
