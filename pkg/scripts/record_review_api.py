#!/usr/bin/env python3
"""Record the review-API contract suite against a fresh fixture pipeline.

Runs the deterministic pipeline into a temp dir, drives a scripted request
sequence through the service, and freezes (request, status, snapshot fields)
into tests/fixtures/recorded_requests.json. Re-run after changing the fixture
corpus or the offline judges.
"""
from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))
sys.path.insert(0, str(REPO / "tests"))


def _pluck(payload, path: str):
    node = payload
    for part in path.split("."):
        if part.endswith("]"):
            name, _, index = part.partition("[")
            if name:
                node = node[name]
            node = node[int(index[:-1])]
        else:
            node = node[part]
    return node


def main() -> None:
    from fastapi.testclient import TestClient

    from conftest import run_pipeline
    from ipocorpus.review_api import create_app

    with tempfile.TemporaryDirectory() as tmp:
        data_dir = Path(tmp) / "data"
        run_pipeline(data_dir)
        client = TestClient(create_app(data_dir))

        queue = client.get("/queue", params={"limit": 50}).json()
        pending = {}
        for item in queue["items"]:
            pending.setdefault(item["kind"], []).append(item["item_id"])
        section_id = pending["section"][0]
        image_id = pending["image"][0]
        first_section_cursor = str(
            min(i["row_id"] for i in queue["items"] if i["kind"] == "section")
        )
        text_path = next(
            i["payload_ref"] for i in queue["items"] if i["kind"] == "section"
        )

        steps = [
            {"method": "GET", "path": "/queue", "params": {"limit": "50"},
             "snapshot": ["pending_total", "items[0].kind"]},
            {"method": "GET", "path": "/queue", "params": {"kind": "section", "limit": "2"},
             "snapshot": ["pending_total", "items[0].item_id"]},
            {"method": "GET", "path": "/queue",
             "params": {"kind": "section", "limit": "2", "cursor": first_section_cursor},
             "snapshot": []},
            {"method": "GET", "path": "/queue", "params": {"kind": "bogus"}, "expect_status": 400},
            {"method": "POST", "path": "/adjudicate",
             "json": {"item_id": section_id, "kind": "section", "reviewer": "op1",
                      "decision": "SafeToUse", "note": "looks complete"},
             "expect_status": 201, "snapshot": ["row.label", "row.decided_by"]},
            {"method": "POST", "path": "/adjudicate",
             "json": {"item_id": section_id, "kind": "section", "reviewer": "op1",
                      "decision": "SafeToUse", "note": "looks complete"},
             "expect_status": 201},
            {"method": "POST", "path": "/adjudicate",
             "json": {"item_id": section_id, "kind": "section", "reviewer": "op2",
                      "decision": "DoNotUse", "note": ""},
             "expect_status": 409},
            {"method": "POST", "path": "/adjudicate",
             "json": {"item_id": image_id, "kind": "image", "reviewer": "op1",
                      "decision": "SafeToUse", "note": ""},
             "expect_status": 422},
            {"method": "POST", "path": "/adjudicate",
             "json": {"item_id": image_id, "kind": "image", "reviewer": "op1",
                      "decision": "Map", "note": "globe graphic"},
             "expect_status": 201, "snapshot": ["row.final_class", "row.decided_by"]},
            {"method": "POST", "path": "/adjudicate",
             "json": {"item_id": "image:none:deadbeef", "kind": "image", "reviewer": "op1",
                      "decision": "Map", "note": ""},
             "expect_status": 404},
            {"method": "GET", "path": "/queue", "params": {"limit": "50"},
             "snapshot": ["pending_total"]},
            {"method": "GET", "path": "/images",
             "params": {"final_class": "Chart", "agreement_min": "7/8"},
             "snapshot": ["total"]},
            {"method": "GET", "path": "/images", "params": {"bogus": "1"}, "expect_status": 400},
            {"method": "GET", "path": "/sections", "params": {"label": "DoNotUse"},
             "snapshot": ["total"]},
            {"method": "GET", "path": "/sections", "params": {"canonical_label": "Risk Factors"},
             "snapshot": ["total"]},
            {"method": "GET", "path": "/filings", "params": {"division": "MAN"},
             "snapshot": ["total", "rows[0].accession_number"]},
            {"method": "GET", "path": "/filings",
             "params": {"year_from": "2019", "year_to": "2021"}, "snapshot": ["total"]},
            {"method": "GET", "path": f"/assets/{text_path}", "raw": True},
            {"method": "GET", "path": "/healthz", "snapshot": ["ok"]},
        ]

        recorded = []
        for step in steps:
            if step["method"] == "GET":
                response = client.get(step["path"], params=step.get("params"))
            else:
                response = client.post(step["path"], json=step.get("json"))
            expected_status = step.get("expect_status", 200 if step["method"] == "GET" else 201)
            assert response.status_code == expected_status, (step, response.status_code, response.text)
            entry = {
                "method": step["method"],
                "path": step["path"],
                "params": step.get("params"),
                "json": step.get("json"),
                "status": expected_status,
                "expect": {},
            }
            if not step.get("raw") and step.get("snapshot"):
                payload = response.json()
                for path in step["snapshot"]:
                    entry["expect"][path] = _pluck(payload, path)
            recorded.append(entry)

        out = REPO / "tests" / "fixtures" / "recorded_requests.json"
        out.write_text(json.dumps(recorded, indent=2) + "\n", encoding="utf-8")
        print(f"recorded {len(recorded)} requests to {out}")


if __name__ == "__main__":
    main()
