"""Command-line pipeline: fetch -> parse -> extract-sections -> validate -> extract-images
-> classify-images -> verify-charts -> extract-features -> rate-charts -> stats/export/serve.

Every stage is idempotent over already-processed items and resumable; partial progress
persists in the manifests. Exit codes: 0 success, 1 item failures, 2 fatal.
"""
from __future__ import annotations

import base64
import json
import random
import re
import sys
from collections import defaultdict
from datetime import date
from pathlib import Path

import click

from . import charts as charts_mod
from . import images as images_mod
from . import metrics as metrics_mod
from . import validation as validation_mod
from .config import RunConfig, build_image_judges, build_text_judge, load_config
from .edgar import EdgarClient, FetchPolicy, NetworkError, guess_content_type
from .judges import AllJudgesFailed, JudgeUnavailable, MalformedJudgeOutput
from .model import DivisionMap, FilingRecord, LabelDictionary, normalize_cik
from .sections import SectionText, UnresolvedBoundaries, segment
from .store import Store
from .toc import TocEntry, TocNotFound, TocParse, detect_format, parse_toc, validate_toc
from .tokens import get_tokenizer

EXIT_ITEM_FAILURES = 1
EXIT_FATAL = 2

PRODUCERS = {
    "filings": "fetch",
    "sections": "extract-sections",
    "images": "extract-images",
    "votes": "classify-images",
    "ratings": "rate-charts",
}


def _fatal(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_FATAL)


def _ordered_map(fn, items, workers: int):
    """Map with a bounded worker pool, yielding results in input order."""
    if workers <= 1 or len(items) <= 1:
        for item in items:
            yield fn(item)
        return
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(fn, items)


def _require_manifest(store: Store, kind: str, command: str) -> None:
    if not store.exists(kind):
        _fatal(f"{command} requires the {kind} manifest; run `ipocorpus {PRODUCERS[kind]}` first")


def _config(ctx_params: dict) -> RunConfig:
    config_file = ctx_params.pop("config", None)
    flags = {k: v for k, v in ctx_params.items() if k in RunConfig.__dataclass_fields__}
    try:
        return load_config(flags, config_file)
    except (ValueError, OSError) as exc:
        _fatal(str(exc))
        raise  # unreachable


def common_options(fn):
    fn = click.option("--data-dir", type=click.Path(path_type=Path), default=None, help="Dataset root.")(fn)
    fn = click.option("--config", type=click.Path(exists=True, path_type=Path), default=None, help="JSON config file.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Seed for sampling helpers.")(fn)
    fn = click.option("--workers", type=int, default=None, help="Worker pool bound for judge fan-out.")(fn)
    return fn


@click.group()
def main():
    """Section-structured mining of SEC IPO registration filings."""


# ---------------------------------------------------------------------------
# fetch
# ---------------------------------------------------------------------------


@main.command()
@common_options
@click.option("--from-dir", "from_dir", type=click.Path(exists=True, path_type=Path), default=None,
              help="Ingest a local corpus directory (one subdir per filing with filing.json).")
@click.option("--ticker", default=None, help="Resolve this ticker against EDGAR and fetch its filings.")
@click.option("--cik", default=None, help="Fetch filings for this CIK.")
@click.option("--forms", default="S-1,S-1/A,F-1,F-1/A", show_default=True)
@click.option("--date-from", default=None, help="Earliest filing date (YYYY-MM-DD).")
@click.option("--date-to", default=None, help="Latest filing date (YYYY-MM-DD).")
@click.option("--user-agent", "user_agent", default=None, help="Identifying User-Agent for EDGAR.")
def fetch(from_dir, ticker, cik, forms, date_from, date_to, **params):
    """Retrieve filings into the dataset layout and the filings manifest."""
    cfg = _config(params)
    store = Store(cfg.data_dir)
    if from_dir is not None:
        new, skipped = _fetch_local(store, Path(from_dir))
        click.echo(f"fetch: {new} new filings, {skipped} already present")
        return
    if ticker is None and cik is None:
        _fatal("fetch needs --from-dir, --ticker, or --cik")
    _fetch_edgar(store, cfg, ticker, cik, forms.split(","), date_from, date_to)


def _known_accessions(store: Store) -> set[str]:
    if not store.exists("filings"):
        return set()
    return {row["accession_number"] for row in store.rows("filings")}


def _fetch_local(store: Store, corpus_dir: Path) -> tuple[int, int]:
    known = _known_accessions(store)
    new = skipped = 0
    for filing_json in sorted(corpus_dir.glob("*/filing.json")):
        meta = json.loads(filing_json.read_text(encoding="utf-8"))
        accession = meta["accession_number"]
        if accession in known:
            skipped += 1
            continue
        target = store.filing_dir(meta["cik"], accession)
        target.mkdir(parents=True, exist_ok=True)
        for document in meta["documents"]:
            body = (filing_json.parent / document["path"]).read_bytes()
            out = target / document["path"]
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_bytes(body)
        record = FilingRecord(
            cik=meta["cik"],
            ticker=meta.get("ticker"),
            accession_number=accession,
            form_type=meta["form_type"],
            filing_date=date.fromisoformat(meta["filing_date"]),
            sic_code=meta["sic_code"],
            source_format=meta["source_format"],
            primary_document=meta["primary_document"],
        )
        row = record.to_row()
        row["document_paths"] = [d["path"] for d in meta["documents"]]
        store.append(store.manifest("filings"), row)
        new += 1
    return new, skipped


def _fetch_edgar(store: Store, cfg: RunConfig, ticker, cik, forms, date_from, date_to) -> None:
    policy = FetchPolicy(
        user_agent=cfg.user_agent,
        cache_dir=cfg.data_dir / "cache",
        max_requests_per_second=cfg.max_requests_per_second,
        retry_budget=cfg.retry_budget,
    )
    client = EdgarClient(policy)
    try:
        resolved_cik = client.resolve_cik(ticker) if ticker else normalize_cik(cik)
        window = (
            date.fromisoformat(date_from) if date_from else None,
            date.fromisoformat(date_to) if date_to else None,
        )
        entries = client.list_ipo_filings(resolved_cik, set(forms), window)
    except (NetworkError, KeyError, ValueError) as exc:
        _fatal(str(exc))
        return
    known = _known_accessions(store)
    new = failures = 0
    for entry in entries:
        if entry.accession_number in known:
            continue
        try:
            target = store.filing_dir(entry.cik, entry.accession_number)
            target.mkdir(parents=True, exist_ok=True)
            primary = entry.document_list[0].path
            paths = []
            for ref in entry.document_list:
                body, _ = client.fetch_document(entry, ref.path)
                out = target / ref.path
                out.parent.mkdir(parents=True, exist_ok=True)
                out.write_bytes(body)
                paths.append(ref.path)
            primary_bytes = (target / primary).read_bytes()
            record = FilingRecord(
                cik=entry.cik,
                ticker=ticker.upper() if ticker else None,
                accession_number=entry.accession_number,
                form_type=entry.form_type,
                filing_date=entry.filing_date,
                sic_code="0000",
                source_format=detect_format(primary_bytes),
                primary_document=primary,
            )
            row = record.to_row()
            row["document_paths"] = paths
            store.append(store.manifest("filings"), row)
            new += 1
        except NetworkError as exc:
            failures += 1
            click.echo(f"fetch: {entry.accession_number}: {exc}", err=True)
    click.echo(f"fetch: {new} new filings, {failures} failed")
    if failures:
        sys.exit(EXIT_ITEM_FAILURES)


# ---------------------------------------------------------------------------
# parse
# ---------------------------------------------------------------------------


def _filings(store: Store) -> list[dict]:
    return sorted(store.query("filings"), key=lambda r: r["accession_number"])


def _toc_path(store: Store, row: dict) -> Path:
    return store.filing_dir(row["cik"], row["accession_number"]) / "toc.json"


def _load_toc(path: Path) -> TocParse:
    payload = json.loads(path.read_text(encoding="utf-8"))
    entries = tuple(
        TocEntry(
            raw_title=e["raw_title"],
            order_index=e["order_index"],
            page_number=e.get("page_number"),
            anchor=e.get("anchor"),
            offset=e.get("offset"),
        )
        for e in payload["entries"]
    )
    return TocParse(
        entries=entries,
        format=payload["format"],
        confidence=payload["confidence"],
        diagnostics=tuple(payload.get("diagnostics", ())),
        toc_end=payload.get("toc_end", 0),
    )


@main.command()
@common_options
def parse(**params):
    """Detect format and parse the Table of Contents of every fetched filing."""
    cfg = _config(params)
    store = Store(cfg.data_dir)
    _require_manifest(store, "filings", "parse")
    new = skipped = failed = 0
    for row in _filings(store):
        toc_path = _toc_path(store, row)
        if toc_path.exists():
            skipped += 1
            continue
        document = (store.filing_dir(row["cik"], row["accession_number"]) / row["primary_document"]).read_bytes()
        try:
            fmt = detect_format(document)
            toc = parse_toc(document, fmt)
        except TocNotFound as exc:
            failed += 1
            click.echo(f"parse: {row['accession_number']}: {exc}", err=True)
            continue
        checks = validate_toc(toc, document)
        toc_path.write_text(
            json.dumps(
                {
                    "format": toc.format,
                    "confidence": toc.confidence,
                    "toc_end": toc.toc_end,
                    "diagnostics": list(toc.diagnostics),
                    "entries": [
                        {
                            "raw_title": e.raw_title,
                            "order_index": e.order_index,
                            "page_number": e.page_number,
                            "anchor": e.anchor,
                            "offset": e.offset,
                        }
                        for e in toc.entries
                    ],
                    "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks],
                },
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )
        new += 1
    click.echo(f"parse: {new} new, {skipped} skipped, {failed} failed")
    if failed:
        sys.exit(EXIT_ITEM_FAILURES)


# ---------------------------------------------------------------------------
# extract-sections
# ---------------------------------------------------------------------------


def _slug(title: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", title.lower()).strip("-")[:48] or "section"


@main.command("extract-sections")
@common_options
@click.option("--fuzzy-threshold", "fuzzy_threshold", type=float, default=None)
def extract_sections(**params):
    """Segment parsed filings into canonical sections and write filtered text."""
    cfg = _config(params)
    store = Store(cfg.data_dir)
    _require_manifest(store, "filings", "extract-sections")
    dictionary = LabelDictionary.default()
    tokenizer = get_tokenizer(cfg.tokenizer)
    done = set()
    if store.exists("sections"):
        done = {row["filing_ref"] for row in store.rows("sections")}
    new = skipped = failed = 0
    for row in _filings(store):
        accession = row["accession_number"]
        if accession in done:
            skipped += 1
            continue
        toc_path = _toc_path(store, row)
        if not toc_path.exists():
            _fatal(f"extract-sections requires toc.json for {accession}; run `ipocorpus parse` first")
        toc = _load_toc(toc_path)
        filing_dir = store.filing_dir(row["cik"], accession)
        document = (filing_dir / row["primary_document"]).read_bytes()
        try:
            sections = segment(
                document, toc, accession,
                dictionary=dictionary, tokenizer=tokenizer, threshold=cfg.fuzzy_threshold,
            )
        except UnresolvedBoundaries as exc:
            failed += 1
            click.echo(f"extract-sections: {accession}: {exc}", err=True)
            continue
        section_dir = filing_dir / "sections"
        section_dir.mkdir(parents=True, exist_ok=True)
        for section in sections:
            name = f"{section.order_index:02d}-{_slug(section.raw_title)}.txt"
            (section_dir / name).write_text(section.filtered_text + "\n", encoding="utf-8")
            text_path = str(Path("filings") / row["cik"] / accession / "sections" / name)
            store.append(
                store.manifest("sections"),
                {
                    "item_id": section.item_id,
                    "filing_ref": accession,
                    "order_index": section.order_index,
                    "raw_title": section.raw_title,
                    "span": list(section.span),
                    "token_count_raw": section.token_count_raw,
                    "token_count_filtered": section.token_count_filtered,
                    "canonical_label": section.canonical_label,
                    "label_score": round(section.label_score, 6),
                    "page_number": section.page_number,
                    "text_path": text_path,
                },
            )
        new += 1
    click.echo(f"extract-sections: {new} new, {skipped} skipped, {failed} failed")
    if failed:
        sys.exit(EXIT_ITEM_FAILURES)


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


@main.command()
@common_options
@click.option("--dry-run", is_flag=True, help="Rule flags only; no judge calls.")
@click.option("--min-tokens", "min_tokens", type=int, default=None)
@click.option("--text-judge", "text_judge", default=None)
@click.option("--audit-sample", type=int, default=None,
              help="Print a seeded random sample of N SafeToUse sections and exit.")
def validate(dry_run, audit_sample, **params):
    """Attach completeness verdicts (rules + dual judge signals) to sections."""
    cfg = _config(params)
    store = Store(cfg.data_dir)
    _require_manifest(store, "sections", "validate")

    if audit_sample is not None:
        rows = [r for r in store.query("sections") if r.get("label") == "SafeToUse"]
        rng = random.Random(cfg.seed)
        sample = rng.sample(rows, min(audit_sample, len(rows)))
        for row in sorted(sample, key=lambda r: r["item_id"]):
            click.echo(row["item_id"])
        return

    filings = {row["accession_number"]: row for row in store.query("filings")}
    adapter = None if dry_run else build_text_judge(cfg.text_judge)
    from .prompts import default_examples

    examples = default_examples()
    pending = [
        row
        for row in sorted(store.query("sections"), key=lambda r: (r["filing_ref"], r["order_index"]))
        if row.get("label") is None
    ]
    skipped = sum(1 for _ in store.query("sections")) - len(pending)

    def evaluate(row: dict):
        text = (store.data_dir / row["text_path"]).read_text(encoding="utf-8")
        section = SectionText(
            filing_ref=row["filing_ref"],
            raw_title=row["raw_title"],
            span=tuple(row["span"]),
            filtered_text=text.rstrip("\n"),
            token_count_raw=row["token_count_raw"],
            token_count_filtered=row["token_count_filtered"],
            order_index=row["order_index"],
            canonical_label=row.get("canonical_label"),
        )
        rules = validation_mod.run_rules(section, min_tokens=cfg.min_tokens)
        if adapter is None:
            return row, rules, None, None
        filing = filings.get(row["filing_ref"], {})
        context = validation_mod.metadata_context_for(
            filing.get("form_type", "?"), filing.get("filing_date", "?"),
            row["filing_ref"], filing.get("sic_code", "?"),
        )
        try:
            judge = validation_mod.judge_section(
                section, adapter, metadata_context=context,
                examples_binary=examples["binary"], examples_likert=examples["likert"],
                retry_budget=cfg.retry_budget,
            )
        except (JudgeUnavailable, MalformedJudgeOutput) as exc:
            return row, rules, None, exc
        return row, rules, judge, None

    new = failed = 0
    # judge calls fan out across workers; appends stay in input order for determinism
    for row, rules, judge, error in _ordered_map(evaluate, pending, cfg.workers):
        if error is not None:
            failed += 1
            click.echo(f"validate: {row['item_id']}: {error}", err=True)
            continue
        stub = SectionText(
            filing_ref=row["filing_ref"], raw_title=row["raw_title"], span=tuple(row["span"]),
            filtered_text="", token_count_raw=row["token_count_raw"],
            token_count_filtered=row["token_count_filtered"], order_index=row["order_index"],
        )
        verdict = validation_mod.verdict_for(stub, rules, judge)
        updated = {k: v for k, v in row.items() if k not in ("row_id", "schema_version", "ts")}
        updated["rule_flags"] = rules.to_row()
        updated["judge"] = judge.to_row() if judge else None
        updated["label"] = verdict.label
        updated["decided_by"] = verdict.decided_by
        store.append(store.manifest("sections"), updated)
        new += 1
    click.echo(f"validate: {new} new verdicts, {skipped} skipped, {failed} failed")
    if failed:
        sys.exit(EXIT_ITEM_FAILURES)


# ---------------------------------------------------------------------------
# extract-images
# ---------------------------------------------------------------------------


@main.command("extract-images")
@common_options
def extract_images_cmd(**params):
    """Pull embedded images out of HTML filings into the images manifest."""
    cfg = _config(params)
    store = Store(cfg.data_dir)
    _require_manifest(store, "filings", "extract-images")
    new = skipped = failed = 0
    for row in _filings(store):
        accession = row["accession_number"]
        filing_dir = store.filing_dir(row["cik"], accession)
        marker = filing_dir / "images_scanned.json"
        if marker.exists():
            skipped += 1
            continue
        record = FilingRecord.from_row(row)
        document = (filing_dir / row["primary_document"]).read_bytes()

        def local_fetch(path: str, base=filing_dir):
            target = base / path
            return target.read_bytes(), guess_content_type(path)

        result = images_mod.extract_images(document, record, local_fetch)
        image_dir = filing_dir / "images"
        for asset in result.assets:
            image_dir.mkdir(parents=True, exist_ok=True)
            body, _ = local_fetch(asset.file_name)
            flat_name = asset.file_name.replace("/", "_")
            (image_dir / flat_name).write_bytes(body)
            image_path = str(Path("filings") / row["cik"] / accession / "images" / flat_name)
            manifest_row = asset.to_row()
            manifest_row["item_id"] = asset.item_id
            manifest_row["image_path"] = image_path
            manifest_row.pop("class_votes")
            manifest_row.pop("agreement")
            store.append(store.manifest("images"), manifest_row)
        marker.write_text(
            json.dumps({"assets": len(result.assets), "diagnostics": result.diagnostics}, indent=2) + "\n",
            encoding="utf-8",
        )
        if result.diagnostics:
            failed += 1
            for diag in result.diagnostics:
                click.echo(f"extract-images: {accession}: {diag}", err=True)
        new += 1
    click.echo(f"extract-images: {new} filings scanned, {skipped} skipped")
    if failed:
        sys.exit(EXIT_ITEM_FAILURES)


# ---------------------------------------------------------------------------
# classify / verify / features / ratings
# ---------------------------------------------------------------------------


def _image_rows(store: Store) -> list[dict]:
    return sorted(store.query("images"), key=lambda r: r["item_id"])


def _image_bytes(store: Store, row: dict) -> bytes:
    return (store.data_dir / row["image_path"]).read_bytes()


def _reappend_image(store: Store, row: dict, asset: images_mod.ImageAsset, extra: dict | None = None) -> None:
    updated = {k: v for k, v in row.items() if k not in ("row_id", "schema_version", "ts")}
    updated.update(
        {
            "class_votes": asset.class_votes or None,
            "agreement": list(asset.agreement),
            "final_class": asset.final_class,
            "verified": asset.verified,
            "decided_by": asset.decided_by,
        }
    )
    if extra:
        updated.update(extra)
    store.append(store.manifest("images"), updated)


@main.command("classify-images")
@common_options
@click.option("--vote-threshold", "vote_threshold", type=float, default=None)
@click.option("--image-judges", "image_judges", default=None)
def classify_images(**params):
    """Collect ensemble class votes and aggregate final labels."""
    cfg = _config(params)
    store = Store(cfg.data_dir)
    _require_manifest(store, "images", "classify-images")
    judges = build_image_judges(cfg.image_judges)
    pending = [row for row in _image_rows(store) if not row.get("class_votes")]
    skipped = len(_image_rows(store)) - len(pending)

    def vote(row: dict):
        asset = images_mod.ImageAsset.from_row(row)
        try:
            return row, *images_mod.classify_votes(asset, _image_bytes(store, row), judges), None
        except AllJudgesFailed as exc:
            return row, None, None, exc

    new = failed = 0
    for row, voted, diagnostics, error in _ordered_map(vote, pending, cfg.workers):
        if error is not None:
            failed += 1
            click.echo(f"classify-images: {error}", err=True)
            continue
        labeled = images_mod.aggregate_label(voted, cfg.vote_threshold)
        for judge_id, vote_value in sorted(voted.class_votes.items()):
            store.append(
                store.manifest("votes"),
                {"item_id": row["item_id"], "judge_id": judge_id, "vote_kind": "class", "value": vote_value},
            )
        _reappend_image(store, row, labeled)
        for diag in diagnostics:
            click.echo(f"classify-images: {row['item_id']}: {diag}", err=True)
        new += 1
    click.echo(f"classify-images: {new} new, {skipped} skipped, {failed} failed")
    if failed:
        sys.exit(EXIT_ITEM_FAILURES)


@main.command("verify-charts")
@common_options
@click.option("--image-judges", "image_judges", default=None)
def verify_charts(**params):
    """Binary chart verification for assets whose final class is Chart."""
    cfg = _config(params)
    store = Store(cfg.data_dir)
    _require_manifest(store, "images", "verify-charts")
    _require_manifest(store, "votes", "verify-charts")
    judges = build_image_judges(cfg.image_judges)
    verified_items = {
        row["item_id"] for row in store.rows("votes") if row.get("vote_kind") == "verify"
    }
    new = skipped = failed = 0
    for row in _image_rows(store):
        if row.get("final_class") != "Chart":
            continue
        if row["item_id"] in verified_items:
            skipped += 1
            continue
        asset = images_mod.ImageAsset.from_row(row)
        try:
            checked, diagnostics = images_mod.verify_chart(asset, _image_bytes(store, row), judges)
        except AllJudgesFailed as exc:
            failed += 1
            click.echo(f"verify-charts: {exc}", err=True)
            continue
        store.append(
            store.manifest("votes"),
            {"item_id": row["item_id"], "judge_id": "ensemble", "vote_kind": "verify", "value": checked.verified},
        )
        _reappend_image(store, row, checked)
        for diag in diagnostics:
            click.echo(f"verify-charts: {row['item_id']}: {diag}", err=True)
        new += 1
    click.echo(f"verify-charts: {new} new, {skipped} skipped, {failed} failed")
    if failed:
        sys.exit(EXIT_ITEM_FAILURES)


@main.command("extract-features")
@common_options
@click.option("--image-judges", "image_judges", default=None)
def extract_features_cmd(**params):
    """Structured visual attributes for verified charts (per-field majority vote)."""
    cfg = _config(params)
    store = Store(cfg.data_dir)
    _require_manifest(store, "images", "extract-features")
    judges = build_image_judges(cfg.image_judges)
    new = skipped = failed = 0
    for row in _image_rows(store):
        if not row.get("verified"):
            continue
        if row.get("features"):
            skipped += 1
            continue
        asset = images_mod.ImageAsset.from_row(row)
        try:
            features, diagnostics = charts_mod.extract_features(asset, _image_bytes(store, row), judges)
        except AllJudgesFailed as exc:
            failed += 1
            click.echo(f"extract-features: {exc}", err=True)
            continue
        _reappend_image(store, row, asset, extra={"features": features.to_row()})
        for diag in diagnostics:
            click.echo(f"extract-features: {row['item_id']}: {diag}", err=True)
        new += 1
    click.echo(f"extract-features: {new} new, {skipped} skipped, {failed} failed")
    if failed:
        sys.exit(EXIT_ITEM_FAILURES)


@main.command("rate-charts")
@common_options
@click.option("--image-judges", "image_judges", default=None)
@click.option("--regimes", default="nocot,cot", show_default=True)
def rate_charts(regimes, **params):
    """Misleadingness ratings for verified charts under each prompting regime."""
    cfg = _config(params)
    store = Store(cfg.data_dir)
    _require_manifest(store, "images", "rate-charts")
    judges = build_image_judges(cfg.image_judges)
    regime_list = [r.strip() for r in regimes.split(",") if r.strip()]
    existing = set()
    if store.exists("ratings"):
        existing = {(row["asset_ref"], row["rater_id"]) for row in store.rows("ratings")}
    new = skipped = failed = 0
    for row in _image_rows(store):
        if not row.get("verified"):
            continue
        asset = images_mod.ImageAsset.from_row(row)
        body = _image_bytes(store, row)
        for judge in judges:
            for regime in regime_list:
                rater_id = f"{judge.judge_id}:{regime}"
                if (row["item_id"], rater_id) in existing:
                    skipped += 1
                    continue
                try:
                    rating = charts_mod.rate_misleadingness(asset, body, judge, regime)
                except (JudgeUnavailable, MalformedJudgeOutput) as exc:
                    failed += 1
                    click.echo(f"rate-charts: {row['item_id']} {rater_id}: {exc}", err=True)
                    continue
                store.append(
                    store.manifest("ratings"),
                    {
                        "asset_ref": rating.asset_ref,
                        "rater_id": rating.rater_id,
                        "score": rating.score,
                        "justification": rating.justification,
                    },
                )
                new += 1
    click.echo(f"rate-charts: {new} new ratings, {skipped} skipped, {failed} failed")
    if failed:
        sys.exit(EXIT_ITEM_FAILURES)


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------


def _sections_for_stats(store: Store) -> list[SectionText]:
    out = []
    for row in store.query("sections"):
        out.append(
            SectionText(
                filing_ref=row["filing_ref"],
                raw_title=row["raw_title"],
                span=tuple(row["span"]),
                filtered_text="",
                token_count_raw=row["token_count_raw"],
                token_count_filtered=row["token_count_filtered"],
                order_index=row["order_index"],
                canonical_label=row.get("canonical_label"),
            )
        )
    return out


@main.command()
@common_options
@click.option("--annotations", type=click.Path(exists=True, path_type=Path), default=None,
              help="CSV of item,rater,label rows for agreement statistics.")
@click.option("--plots", is_flag=True, help="Write PNG figures next to the reports.")
def stats(annotations, plots, **params):
    """Emit yearly, agreement-bucket, rating, and diversity reports."""
    cfg = _config(params)
    store = Store(cfg.data_dir)
    _require_manifest(store, "filings", "stats")
    report_dir = store.data_dir / "reports"
    report_dir.mkdir(parents=True, exist_ok=True)

    filings = [FilingRecord.from_row(row) for row in store.query("filings")]
    sections = _sections_for_stats(store) if store.exists("sections") else []
    image_rows = list(store.query("images")) if store.exists("images") else []
    assets = [images_mod.ImageAsset.from_row(row) for row in image_rows]

    rows = metrics_mod.yearly_table(filings, sections, assets)
    _write_tsv(
        report_dir / "yearly_stats.tsv",
        [
            "year", "format_era", "firms_total", "firms_with_images", "firms_with_images_pct",
            "images_mean", "images_std", "charts_mean", "charts_std",
            "tokens_raw_mean", "tokens_raw_std", "tokens_filtered_mean", "tokens_filtered_std",
            "risk_factors_mean", "risk_factors_std",
        ],
        [
            [
                r.year, r.format_era, r.firms_total, r.firms_with_images,
                f"{r.firms_with_images_pct:.1f}",
                f"{r.images_per_filing[0]:.2f}", f"{r.images_per_filing[1]:.2f}",
                f"{r.charts_per_filing[0]:.2f}", f"{r.charts_per_filing[1]:.2f}",
                f"{r.tokens_raw[0]:.1f}", f"{r.tokens_raw[1]:.1f}",
                f"{r.tokens_filtered[0]:.1f}", f"{r.tokens_filtered[1]:.1f}",
                f"{r.risk_factors_tokens[0]:.1f}" if r.risk_factors_tokens else "",
                f"{r.risk_factors_tokens[1]:.1f}" if r.risk_factors_tokens else "",
            ]
            for r in rows
        ],
    )

    if assets:
        report = images_mod.bucket_report(assets)
        _write_tsv(
            report_dir / "vote_buckets.tsv",
            ["agree", "total", *images_mod.IMAGE_CLASSES, "human_match"],
            [
                [
                    row.key, row.total,
                    *[row.per_class.get(c, 0) for c in images_mod.IMAGE_CLASSES],
                    f"{row.human_matched}/{row.human_labeled}" if row.human_labeled else "",
                ]
                for row in report.rows
            ],
        )

    if store.exists("ratings"):
        _write_rating_report(store, report_dir, image_rows)

    _write_diversity_reports(store, report_dir, filings, sections, image_rows, plots)

    if annotations is not None:
        _write_alpha_report(annotations, report_dir)

    click.echo(f"stats: reports written to {report_dir}")


def _write_tsv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = ["\t".join(str(h) for h in header)]
    lines += ["\t".join(str(cell) for cell in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_rating_report(store: Store, report_dir: Path, image_rows: list[dict]) -> None:
    filings = {row["accession_number"]: FilingRecord.from_row(row) for row in store.query("filings")}
    features = {}
    asset_filing = {}
    for row in image_rows:
        asset_filing[row["item_id"]] = row["filing_ref"]
        if row.get("features"):
            features[row["item_id"]] = charts_mod.ChartFeatureSet.from_row(row["features"])
    ratings = []
    for row in store.query("ratings"):
        if row["asset_ref"] in features:
            ratings.append(
                charts_mod.MisleadingnessRating(
                    asset_ref=row["asset_ref"], rater_id=row["rater_id"],
                    score=row["score"], justification=row.get("justification", ""),
                )
            )
    if not ratings:
        return
    report = charts_mod.aggregate_ratings(ratings, features, filings, asset_filing)
    columns = [*report.divisions, "ALL", *report.subsets]
    _write_tsv(
        report_dir / "rating_means.tsv",
        ["rater_group", *columns],
        [
            [group, *[f"{report.cell(group, c):.2f}" if report.cell(group, c) is not None else "" for c in columns]]
            for group in sorted(report.cells)
        ],
    )


def _write_diversity_reports(store, report_dir, filings, sections, image_rows, plots) -> None:
    from .embeddings import HashingImageEmbedder, HashingTextEmbedder

    filing_year = {f.accession_number: f.year for f in filings}
    tokenizer = get_tokenizer()
    text_embedder = HashingTextEmbedder()
    image_embedder = HashingImageEmbedder()

    ttr_series: dict[str, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    semantic_series: dict[str, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for row in store.query("sections") if store.exists("sections") else []:
        label = row.get("canonical_label")
        if label is None or row.get("text_path") is None:
            continue
        year = filing_year.get(row["filing_ref"])
        if year is None:
            continue
        text = (store.data_dir / row["text_path"]).read_text(encoding="utf-8")
        try:
            ttr_series[label][year].append(metrics_mod.ttr(text, tokenizer))
        except metrics_mod.EmptyText:
            continue
        sentences = metrics_mod.split_sentences(text)
        if len(sentences) >= 2:
            vectors = text_embedder.embed(sentences)
            semantic_series[label][year].append(metrics_mod.pairwise_cosine_diversity(vectors))

    visual_series: dict[str, dict[int, list[bytes]]] = defaultdict(lambda: defaultdict(list))
    for row in image_rows:
        year = filing_year.get(row["filing_ref"])
        cls = row.get("final_class")
        if year is None or cls is None or not row.get("image_path"):
            continue
        visual_series[cls][year].append((store.data_dir / row["image_path"]).read_bytes())

    out_rows = []
    for kind, series in (("ttr", ttr_series), ("semantic", semantic_series)):
        for label in sorted(series):
            yearly = {year: sum(vals) / len(vals) for year, vals in series[label].items()}
            smoothed = metrics_mod.rolling_mean(yearly)
            for year in sorted(yearly):
                out_rows.append([kind, label, year, f"{yearly[year]:.6f}", f"{smoothed[year]:.6f}"])
    for cls in sorted(visual_series):
        yearly = {}
        for year, blobs in visual_series[cls].items():
            if len(blobs) >= 2:
                yearly[year] = metrics_mod.pairwise_cosine_diversity(image_embedder.embed_images(blobs))
        if yearly:
            smoothed = metrics_mod.rolling_mean(yearly)
            for year in sorted(yearly):
                out_rows.append(["visual", cls, year, f"{yearly[year]:.6f}", f"{smoothed[year]:.6f}"])
    _write_tsv(report_dir / "diversity.tsv", ["measure", "group", "year", "value", "rolling3"], out_rows)

    if plots and out_rows:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        for measure in ("ttr", "semantic", "visual"):
            series = [r for r in out_rows if r[0] == measure]
            if not series:
                continue
            fig, ax = plt.subplots(figsize=(7, 4))
            groups = sorted({r[1] for r in series})
            for group in groups:
                points = [(int(r[2]), float(r[4])) for r in series if r[1] == group]
                points.sort()
                ax.plot([p[0] for p in points], [p[1] for p in points], marker="o", label=group)
            ax.set_xlabel("year")
            ax.set_ylabel(f"{measure} (3-year rolling mean)")
            ax.legend(fontsize=7)
            fig.tight_layout()
            fig.savefig(report_dir / f"{measure}_over_time.png", dpi=120)
            plt.close(fig)


def _write_alpha_report(annotations: Path, report_dir: Path) -> None:
    import csv
    from itertools import combinations

    with open(annotations, newline="", encoding="utf-8") as handle:
        rows = [(r["item"], r["rater"], r["label"]) for r in csv.DictReader(handle)]
    matrix = metrics_mod.AnnotationMatrix.from_rows(rows)
    categories = sorted({label for _, _, label in rows})
    lines = []
    for c1, c2 in combinations(categories, 2):
        try:
            value = metrics_mod.pairwise_alpha(matrix, (c1, c2))
            lines.append([f"{c1} vs. {c2}", f"{value:.3f}"])
        except (metrics_mod.InsufficientData, metrics_mod.DegenerateData) as exc:
            lines.append([f"{c1} vs. {c2}", f"n/a ({exc.__class__.__name__})"])
    overall = metrics_mod.krippendorff_alpha(matrix)
    lines.append(["All categories (overall)", f"{overall:.3f}"])
    _write_tsv(report_dir / "agreement.tsv", ["category_pair", "alpha"], lines)


# ---------------------------------------------------------------------------
# export / serve
# ---------------------------------------------------------------------------


@main.command()
@common_options
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]), default="jsonl", show_default=True)
@click.option("--kind", "kinds", multiple=True, help="Manifest kinds to export (default: all present).")
@click.option("--filter", "filters", multiple=True, help="field=value filters (repeatable).")
@click.option("--token", default=None, help="Export token produced by the review API.")
def export(out, fmt, kinds, filters, token, **params):
    """Write a deterministic archive of selected manifest rows."""
    cfg = _config(params)
    store = Store(cfg.data_dir)
    _require_manifest(store, "filings", "export")
    predicate_map: dict[str, dict] = {}
    if token:
        payload = json.loads(base64.urlsafe_b64decode(token.encode("ascii")))
        kinds = (payload["kind"],)
        predicate_map[payload["kind"]] = payload.get("filters", {})
    if not kinds:
        kinds = tuple(k for k in ("filings", "sections", "images", "votes", "ratings", "adjudications") if store.exists(k))
    parsed_filters = dict(f.split("=", 1) for f in filters)
    selections = {}
    for kind in kinds:
        predicates = predicate_map.get(kind, parsed_filters)
        declared = set(store.manifest(kind).fields) | {"row_id", "schema_version", "ts"}
        predicates = {k: v for k, v in predicates.items() if k in declared}
        selections[kind] = list(store.query(kind, predicates or None))
    store.export(selections, out, format=fmt)
    click.echo(f"export: wrote {', '.join(sorted(selections))} to {out}")


@main.command()
@common_options
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8800, show_default=True)
def serve(host, port, **params):
    """Start the review API over the dataset."""
    cfg = _config(params)
    store = Store(cfg.data_dir)
    _require_manifest(store, "filings", "serve")
    import uvicorn

    from .review_api import create_app

    uvicorn.run(create_app(cfg.data_dir), host=host, port=port)


if __name__ == "__main__":
    main()
