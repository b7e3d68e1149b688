"""HTTP review service: pending queue, adjudication writes, and filtered exploration.

Plain JSON over HTTP with cursor pagination; review is human-paced, so there is no
push channel. Section text and image files are served read-only under /assets so the
UI needs no separate asset host. No authentication: deploy behind an operator proxy.
"""
from __future__ import annotations

import base64
import json
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from .images import IMAGE_CLASSES
from .model import DivisionMap
from .store import Store

REVIEW_KINDS = ("section", "image", "chart_feature")
SECTION_DECISIONS = ("SafeToUse", "DoNotUse")

_FEATURE_FIELDS = {
    "chart_type",
    "has_data_table",
    "has_axis_labels",
    "has_legend",
    "num_y_axes",
    "y_axis_starts_at_zero",
    "tick_spacing_consistent",
    "uses_3d",
    "color_mode",
}

_FILING_FILTERS = {"division", "year_from", "year_to", "form_type", "cik"}
_SECTION_FILTERS = {"label", "canonical_label", "filing_ref", "division", "year_from", "year_to", "form_type"}
_IMAGE_FILTERS = {"final_class", "verified", "agreement_min", "division", "year_from", "year_to", "form_type", "filing_ref"}


class Adjudication(BaseModel):
    item_id: str
    kind: str
    reviewer: str
    decision: Any
    note: str = ""


def _agreement_fraction(raw: str) -> float:
    if "/" in raw:
        num, den = raw.split("/", 1)
        return int(num) / int(den)
    return float(raw)


def create_app(data_dir: str | Path) -> FastAPI:
    store = Store(data_dir)
    divisions = DivisionMap.default()
    app = FastAPI(title="ipocorpus review service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    # -- shared views ------------------------------------------------------

    def filings_by_accession() -> dict[str, dict]:
        return {row["accession_number"]: row for row in store.query("filings")}

    def division_of_filing(row: dict) -> str:
        return divisions.division_of(row["sic_code"]).code

    def pending_items(kind: str | None = None) -> list[dict]:
        items: list[dict] = []
        if kind in (None, "section"):
            for row in store.query("sections"):
                if row.get("label") == "ManualReview" and row.get("decided_by") != "human":
                    items.append(_section_item(row))
        if kind in (None, "image"):
            verify_done = {
                row["item_id"] for row in store.rows("votes") if row.get("vote_kind") == "verify"
            }
            for row in store.query("images"):
                if not row.get("class_votes") or row.get("decided_by") == "human":
                    continue
                unresolved_votes = row.get("final_class") is None
                failed_verification = (
                    row.get("final_class") == "Chart"
                    and row["item_id"] in verify_done
                    and not row.get("verified")
                )
                if unresolved_votes or failed_verification:
                    items.append(_image_item(row))
        if kind in (None, "chart_feature"):
            for row in store.query("images"):
                features = row.get("features") or {}
                if features.get("tied_fields") and row.get("decided_by") != "human":
                    items.append(_chart_feature_item(row))
        items.sort(key=lambda item: item["row_id"])
        return items

    def _section_item(row: dict) -> dict:
        return {
            "item_id": row["item_id"],
            "kind": "section",
            "row_id": row["row_id"],
            "payload_ref": row.get("text_path"),
            "status": "pending",
            "evidence": {
                "raw_title": row.get("raw_title"),
                "canonical_label": row.get("canonical_label"),
                "rule_flags": row.get("rule_flags"),
                "judge": row.get("judge"),
                "label": row.get("label"),
                "filing_ref": row.get("filing_ref"),
            },
        }

    def _image_item(row: dict) -> dict:
        return {
            "item_id": row["item_id"],
            "kind": "image",
            "row_id": row["row_id"],
            "payload_ref": row.get("image_path"),
            "status": "pending",
            "evidence": {
                "file_name": row.get("file_name"),
                "class_votes": row.get("class_votes"),
                "agreement": row.get("agreement"),
                "final_class": row.get("final_class"),
                "filing_ref": row.get("filing_ref"),
            },
        }

    def _chart_feature_item(row: dict) -> dict:
        return {
            "item_id": row["item_id"],
            "kind": "chart_feature",
            "row_id": row["row_id"],
            "payload_ref": row.get("image_path"),
            "status": "pending",
            "evidence": {
                "file_name": row.get("file_name"),
                "features": row.get("features"),
                "filing_ref": row.get("filing_ref"),
            },
        }

    # -- queue ---------------------------------------------------------------

    @app.get("/queue")
    def queue(
        kind: str | None = None,
        limit: int = Query(default=20, ge=1, le=500),
        cursor: str | None = None,
    ):
        if kind is not None and kind not in REVIEW_KINDS:
            raise HTTPException(status_code=400, detail=f"kind must be one of {REVIEW_KINDS}")
        items = pending_items(kind)
        start = 0
        if cursor is not None:
            try:
                threshold = int(cursor)
            except ValueError:
                raise HTTPException(status_code=400, detail="bad cursor")
            start = next((i for i, item in enumerate(items) if item["row_id"] > threshold), len(items))
        page = items[start : start + limit]
        next_cursor = str(page[-1]["row_id"]) if start + limit < len(items) and page else None
        return {"items": page, "next_cursor": next_cursor, "pending_total": len(items)}

    # -- adjudication ----------------------------------------------------------

    def _decision_valid(kind: str, decision: Any) -> bool:
        if kind == "section":
            return decision in SECTION_DECISIONS
        if kind == "image":
            return decision in IMAGE_CLASSES
        if kind == "chart_feature":
            return (
                isinstance(decision, dict)
                and bool(decision)
                and set(decision) <= _FEATURE_FIELDS
            )
        return False

    def _known_item(item_id: str, kind: str) -> dict | None:
        manifest_kind = "sections" if kind == "section" else "images"
        for row in store.query(manifest_kind):
            if row.get("item_id") == item_id:
                return row
        return None

    @app.post("/adjudicate", status_code=201)
    def adjudicate(body: Adjudication):
        if body.kind not in REVIEW_KINDS:
            raise HTTPException(status_code=400, detail=f"kind must be one of {REVIEW_KINDS}")
        row = _known_item(body.item_id, body.kind)
        if row is None:
            raise HTTPException(status_code=404, detail=f"unknown item {body.item_id}")
        if not _decision_valid(body.kind, body.decision):
            raise HTTPException(
                status_code=422,
                detail=f"decision {body.decision!r} is not legal for kind {body.kind}",
            )
        previous = [
            adj
            for adj in store.rows("adjudications")
            if adj.get("item_id") == body.item_id and adj.get("kind") == body.kind
        ]
        for adj in previous:
            if adj.get("decision") != body.decision:
                raise HTTPException(
                    status_code=409,
                    detail=f"item already adjudicated as {adj.get('decision')!r}",
                )
        if previous:
            # agreeing repeat (idempotent per reviewer and body): no second audit row
            return {"item_id": body.item_id, "status": "adjudicated", "row": _resolved(body)}
        if not any(item["item_id"] == body.item_id for item in pending_items(body.kind)):
            raise HTTPException(status_code=409, detail="item is not pending review")
        store.append(
            store.manifest("adjudications"),
            {
                "item_id": body.item_id,
                "kind": body.kind,
                "reviewer": body.reviewer,
                "decision": body.decision,
                "note": body.note,
            },
        )
        return {"item_id": body.item_id, "status": "adjudicated", "row": _resolved(body)}

    def _resolved(body: Adjudication) -> dict:
        manifest_kind = "sections" if body.kind == "section" else "images"
        for row in store.query(manifest_kind):
            if row.get("item_id") == body.item_id:
                return row
        return {}

    # -- explorer ---------------------------------------------------------------

    def _year_of(row: dict, filings: dict[str, dict]) -> int | None:
        filing = filings.get(row.get("filing_ref") or row.get("accession_number"))
        if filing is None:
            return None
        return int(filing["filing_date"][:4])

    def _passes_common(row: dict, params: dict, filings: dict[str, dict]) -> bool:
        filing = filings.get(row.get("filing_ref") or row.get("accession_number"))
        if params.get("division") is not None:
            if filing is None or division_of_filing(filing) != params["division"]:
                return False
        if params.get("form_type") is not None:
            if filing is None or filing["form_type"] != params["form_type"]:
                return False
        year = _year_of(row, filings)
        if params.get("year_from") is not None and (year is None or year < params["year_from"]):
            return False
        if params.get("year_to") is not None and (year is None or year > params["year_to"]):
            return False
        return True

    def _paginate(rows: list[dict], limit: int, cursor: str | None) -> tuple[list[dict], str | None]:
        start = 0
        if cursor is not None:
            try:
                threshold = int(cursor)
            except ValueError:
                raise HTTPException(status_code=400, detail="bad cursor")
            start = next((i for i, r in enumerate(rows) if r["row_id"] > threshold), len(rows))
        page = rows[start : start + limit]
        next_cursor = str(page[-1]["row_id"]) if start + limit < len(rows) and page else None
        return page, next_cursor

    def _export_token(kind: str, filters: dict) -> str:
        payload = json.dumps({"kind": kind, "filters": filters}, sort_keys=True)
        return base64.urlsafe_b64encode(payload.encode("utf-8")).decode("ascii")

    def _reject_unknown(request: Request, allowed: set[str]) -> None:
        unknown = set(request.query_params) - allowed - {"limit", "cursor"}
        if unknown:
            raise HTTPException(status_code=400, detail=f"unknown filter fields: {sorted(unknown)}")

    @app.get("/filings")
    def filings_endpoint(
        request: Request,
        division: str | None = None,
        year_from: int | None = None,
        year_to: int | None = None,
        form_type: str | None = None,
        cik: str | None = None,
        limit: int = Query(default=50, ge=1, le=1000),
        cursor: str | None = None,
    ):
        _reject_unknown(request, _FILING_FILTERS)
        filings = filings_by_accession()
        params = {"division": division, "year_from": year_from, "year_to": year_to, "form_type": form_type}
        rows = []
        for row in store.query("filings"):
            if cik is not None and row["cik"] != cik:
                continue
            if not _passes_common(row, params, filings):
                continue
            enriched = dict(row)
            enriched["division"] = division_of_filing(row)
            rows.append(enriched)
        page, next_cursor = _paginate(rows, limit, cursor)
        filters = {k: v for k, v in {**params, "cik": cik}.items() if v is not None}
        return {
            "rows": page,
            "total": len(rows),
            "next_cursor": next_cursor,
            "export_token": _export_token("filings", filters),
        }

    @app.get("/sections")
    def sections_endpoint(
        request: Request,
        label: str | None = None,
        canonical_label: str | None = None,
        filing_ref: str | None = None,
        division: str | None = None,
        year_from: int | None = None,
        year_to: int | None = None,
        form_type: str | None = None,
        limit: int = Query(default=50, ge=1, le=1000),
        cursor: str | None = None,
    ):
        _reject_unknown(request, _SECTION_FILTERS)
        filings = filings_by_accession()
        params = {"division": division, "year_from": year_from, "year_to": year_to, "form_type": form_type}
        rows = []
        for row in store.query("sections"):
            if label is not None and row.get("label") != label:
                continue
            if canonical_label is not None and row.get("canonical_label") != canonical_label:
                continue
            if filing_ref is not None and row.get("filing_ref") != filing_ref:
                continue
            if not _passes_common(row, params, filings):
                continue
            rows.append(row)
        page, next_cursor = _paginate(rows, limit, cursor)
        filters = {
            k: v
            for k, v in {**params, "label": label, "canonical_label": canonical_label, "filing_ref": filing_ref}.items()
            if v is not None
        }
        return {
            "rows": page,
            "total": len(rows),
            "next_cursor": next_cursor,
            "export_token": _export_token("sections", filters),
        }

    @app.get("/images")
    def images_endpoint(
        request: Request,
        final_class: str | None = None,
        verified: bool | None = None,
        agreement_min: str | None = None,
        division: str | None = None,
        year_from: int | None = None,
        year_to: int | None = None,
        form_type: str | None = None,
        filing_ref: str | None = None,
        limit: int = Query(default=50, ge=1, le=1000),
        cursor: str | None = None,
    ):
        _reject_unknown(request, _IMAGE_FILTERS)
        filings = filings_by_accession()
        params = {"division": division, "year_from": year_from, "year_to": year_to, "form_type": form_type}
        min_fraction = _agreement_fraction(agreement_min) if agreement_min is not None else None
        rows = []
        for row in store.query("images"):
            if final_class is not None and row.get("final_class") != final_class:
                continue
            if verified is not None and bool(row.get("verified")) != verified:
                continue
            if filing_ref is not None and row.get("filing_ref") != filing_ref:
                continue
            if min_fraction is not None:
                agreement = row.get("agreement") or [0, 0]
                if not agreement[1] or agreement[0] / agreement[1] < min_fraction:
                    continue
            if not _passes_common(row, params, filings):
                continue
            rows.append(row)
        page, next_cursor = _paginate(rows, limit, cursor)
        filters = {
            k: v
            for k, v in {
                **params,
                "final_class": final_class,
                "verified": verified,
                "agreement_min": agreement_min,
                "filing_ref": filing_ref,
            }.items()
            if v is not None
        }
        return {
            "rows": page,
            "total": len(rows),
            "next_cursor": next_cursor,
            "export_token": _export_token("images", filters),
        }

    # -- static assets -----------------------------------------------------------

    @app.get("/assets/{asset_path:path}")
    def asset(asset_path: str):
        root = Path(data_dir).resolve()
        target = (root / asset_path).resolve()
        if root not in target.parents and target != root:
            raise HTTPException(status_code=400, detail="path escapes data dir")
        if not target.is_file():
            raise HTTPException(status_code=404, detail="no such asset")
        return FileResponse(target)

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "manifests": {k: store.exists(k) for k in ("filings", "sections", "images")}}

    return app
