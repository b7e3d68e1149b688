"""On-disk dataset layout and append-only JSONL manifests.

Layout:

    data_dir/
      filings/{cik}/{accession}/{source document, sections/, images/}
      manifests/{kind}.jsonl

Every manifest row carries (row_id, schema_version, ts) plus the fields published in
``data/manifest_schemas.json``. Rows are never rewritten; a later row with the same
item key supersedes earlier ones in the query view, and adjudication rows supersede
pipeline verdicts the same way.
"""
from __future__ import annotations

import fcntl
import hashlib
import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Iterator

MANIFEST_KINDS = ("filings", "sections", "images", "votes", "ratings", "adjudications")


class SchemaViolation(ValueError):
    """Row does not validate against the manifest schema."""


class UnknownField(KeyError):
    """Query predicate references a field the schema does not declare."""


class IoError(OSError):
    pass


_TYPE_CHECKS: dict[str, Callable[[object], bool]] = {
    "str": lambda v: isinstance(v, str),
    "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "bool": lambda v: isinstance(v, bool),
    "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "list": lambda v: isinstance(v, list),
    "dict": lambda v: isinstance(v, dict),
    "null": lambda v: v is None,
}


def _check_type(value: object, spec: str) -> bool:
    return any(_TYPE_CHECKS[alt](value) for alt in spec.split("|"))


def load_schemas() -> dict:
    return json.loads(
        resources.files("ipocorpus.data").joinpath("manifest_schemas.json").read_text(encoding="utf-8")
    )


_SCHEMAS = load_schemas()
SCHEMA_VERSION = _SCHEMAS["schema_version"]


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class Manifest:
    kind: str
    path: Path
    schema_version: int = SCHEMA_VERSION

    @property
    def schema(self) -> dict:
        return _SCHEMAS["manifests"][self.kind]

    @property
    def fields(self) -> dict[str, str]:
        return {**self.schema["required"], **self.schema["optional"]}

    @property
    def item_key(self) -> str:
        return self.schema["item_key"]


def _validate_row(manifest: Manifest, row: dict) -> None:
    schema = manifest.schema
    for name, spec in schema["required"].items():
        if name not in row:
            raise SchemaViolation(f"{manifest.kind}: missing required field {name!r}")
        if not _check_type(row[name], spec):
            raise SchemaViolation(
                f"{manifest.kind}: field {name!r} must be {spec}, got {type(row[name]).__name__}"
            )
    for name, value in row.items():
        if name in ("row_id", "schema_version", "ts"):
            continue
        spec = schema["required"].get(name) or schema["optional"].get(name)
        if spec is None:
            raise SchemaViolation(f"{manifest.kind}: undeclared field {name!r}")
        if name in schema["optional"] and not _check_type(value, spec):
            raise SchemaViolation(
                f"{manifest.kind}: field {name!r} must be {spec}, got {type(value).__name__}"
            )


def _field_order(manifest: Manifest) -> list[str]:
    return ["row_id", "schema_version", "ts", *manifest.schema["required"], *manifest.schema["optional"]]


def _serialize(manifest: Manifest, row: dict) -> str:
    ordered = {name: row[name] for name in _field_order(manifest) if name in row}
    return json.dumps(ordered, ensure_ascii=False, separators=(",", ":"), sort_keys=False)


class Store:
    """Dataset root with one writer per manifest at a time and lock-free readers."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.manifest_dir = self.data_dir / "manifests"
        self.manifest_dir.mkdir(parents=True, exist_ok=True)

    # -- layout helpers --------------------------------------------------

    def filing_dir(self, cik: str, accession: str) -> Path:
        return self.data_dir / "filings" / cik / accession

    def manifest(self, kind: str) -> Manifest:
        if kind not in MANIFEST_KINDS:
            raise ValueError(f"unknown manifest kind {kind!r}")
        return Manifest(kind=kind, path=self.manifest_dir / f"{kind}.jsonl")

    def exists(self, kind: str) -> bool:
        return self.manifest(kind).path.exists()

    # -- append ----------------------------------------------------------

    def append(self, manifest: Manifest, row: dict, ts: str | None = None) -> int:
        _validate_row(manifest, row)
        path = manifest.path
        lock_path = path.with_suffix(".lock")
        try:
            with open(lock_path, "w") as lock_file:
                fcntl.flock(lock_file, fcntl.LOCK_EX)
                self._quarantine_torn_tail(path)
                row_id = self._last_row_id(path) + 1
                envelope = {
                    "row_id": row_id,
                    "schema_version": manifest.schema_version,
                    "ts": ts if ts is not None else _now_iso(),
                    **row,
                }
                line = _serialize(manifest, envelope) + "\n"
                with open(path, "a", encoding="utf-8") as handle:
                    handle.write(line)
                    handle.flush()
                    os.fsync(handle.fileno())
        except OSError as exc:
            raise IoError(f"append to {path} failed: {exc}") from exc
        return row_id

    @staticmethod
    def _last_row_id(path: Path) -> int:
        if not path.exists() or path.stat().st_size == 0:
            return 0
        with open(path, "rb") as handle:
            handle.seek(0, os.SEEK_END)
            size = handle.tell()
            chunk = min(size, 65536)
            handle.seek(size - chunk)
            tail = handle.read().rstrip(b"\n")
        last_line = tail.rsplit(b"\n", 1)[-1]
        try:
            return int(json.loads(last_line)["row_id"])
        except (ValueError, KeyError):
            return 0

    @staticmethod
    def _quarantine_torn_tail(path: Path) -> None:
        """Detect a torn final line (crash mid-append) and move it aside, never parse it."""
        if not path.exists() or path.stat().st_size == 0:
            return
        with open(path, "rb") as handle:
            handle.seek(0, os.SEEK_END)
            size = handle.tell()
            chunk = min(size, 65536)
            handle.seek(size - chunk)
            tail = handle.read()
        torn = b""
        if not tail.endswith(b"\n"):
            torn = tail.rsplit(b"\n", 1)[-1]
        else:
            last_line = tail.rstrip(b"\n").rsplit(b"\n", 1)[-1]
            try:
                json.loads(last_line)
            except ValueError:
                torn = last_line + b"\n"
        if not torn:
            return
        quarantine = path.with_suffix(".jsonl.quarantine")
        with open(quarantine, "ab") as qh:
            qh.write(torn if torn.endswith(b"\n") else torn + b"\n")
        with open(path, "r+b") as handle:
            handle.truncate(size - len(torn))

    # -- query -----------------------------------------------------------

    def rows(self, kind: str) -> Iterator[dict]:
        manifest = self.manifest(kind)
        path = manifest.path
        if not path.exists():
            return
        with open(path, "r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                try:
                    yield json.loads(line)
                except ValueError:
                    # torn tail is quarantined on the next append; never surfaced as data
                    continue

    def query(self, kind: str, predicates: dict | None = None, resolve: bool = True) -> Iterator[dict]:
        """Stream matching rows in row_id order with supersession applied.

        ``predicates`` maps declared field names to a value (equality) or a callable.
        With ``resolve`` (default), later rows with the same item key replace earlier
        ones, and adjudication rows override pipeline verdicts (last writer wins).
        """
        manifest = self.manifest(kind)
        declared = set(_field_order(manifest))
        predicates = predicates or {}
        for name in predicates:
            if name not in declared:
                raise UnknownField(f"{kind} has no field {name!r}")

        source = self._resolved_rows(kind) if resolve else self.rows(kind)
        for row in source:
            if all(
                (pred(row.get(name)) if callable(pred) else row.get(name) == pred)
                for name, pred in predicates.items()
            ):
                yield row

    def _resolved_rows(self, kind: str) -> Iterator[dict]:
        if kind not in ("filings", "sections", "images"):
            # votes/ratings/adjudications are event logs: every row stands
            yield from self.rows(kind)
            return
        manifest = self.manifest(kind)
        key = manifest.item_key
        latest: dict[str, dict] = {}
        order: list[str] = []
        for row in self.rows(kind):
            item = str(row.get(key))
            if item not in latest:
                order.append(item)
            latest[item] = row
        if kind in ("sections", "images"):
            for adjudication in self.rows("adjudications"):
                item = str(adjudication.get("item_id"))
                if item in latest and _adjudication_applies(kind, adjudication):
                    latest[item] = _apply_adjudication(kind, latest[item], adjudication)
        for item in order:
            yield latest[item]

    # -- integrity ---------------------------------------------------------

    def referential_integrity(self) -> list[str]:
        """Dangling references reported, never silently dropped."""
        accessions = {row["accession_number"] for row in self.rows("filings")}
        problems = []
        for kind in ("sections", "images"):
            for row in self.rows(kind):
                if row.get("filing_ref") not in accessions:
                    problems.append(
                        f"{kind} row {row.get('row_id')} references unknown filing {row.get('filing_ref')!r}"
                    )
        return problems

    # -- export ------------------------------------------------------------

    def export(
        self,
        selections: dict[str, Iterable[dict]],
        out_dir: str | Path,
        format: str = "jsonl",
    ) -> Path:
        """Deterministic archive: stable row and field order plus a checksum manifest."""
        if format not in ("jsonl", "csv"):
            raise ValueError("format must be jsonl or csv")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        listing = []
        for kind in sorted(selections):
            manifest = self.manifest(kind)
            rows = sorted(selections[kind], key=lambda r: r.get("row_id", 0))
            name = f"{kind}.{format}"
            target = out / name
            if format == "jsonl":
                body = "".join(_serialize(manifest, row) + "\n" for row in rows)
            else:
                body = _to_csv(manifest, rows)
            target.write_text(body, encoding="utf-8")
            listing.append(
                {
                    "name": name,
                    "rows": len(rows),
                    "sha256": hashlib.sha256(body.encode("utf-8")).hexdigest(),
                }
            )
        manifest_path = out / "export_manifest.json"
        manifest_path.write_text(
            json.dumps(
                {"schema_version": SCHEMA_VERSION, "files": listing},
                indent=2,
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )
        return out


def _to_csv(manifest: Manifest, rows: list[dict]) -> str:
    import csv
    import io

    fields = _field_order(manifest)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow(
            [
                json.dumps(row[f], ensure_ascii=False, sort_keys=True)
                if isinstance(row.get(f), (dict, list))
                else ("" if row.get(f) is None else row.get(f))
                for f in fields
            ]
        )
    return buffer.getvalue()


def read_export(path: str | Path, kind: str, format: str = "jsonl") -> list[dict]:
    """Load archive rows back; used by round-trip checks."""
    target = Path(path) / f"{kind}.{format}"
    if format == "jsonl":
        return [json.loads(line) for line in target.read_text(encoding="utf-8").splitlines() if line]
    import csv

    with open(target, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def _adjudication_applies(kind: str, adjudication: dict) -> bool:
    item_kind = adjudication.get("kind")
    if kind == "sections":
        return item_kind == "section"
    return item_kind in ("image", "chart_feature")


def _apply_adjudication(kind: str, row: dict, adjudication: dict) -> dict:
    updated = dict(row)
    decision = adjudication["decision"]
    if kind == "sections":
        updated["label"] = decision
        updated["decided_by"] = "human"
    elif adjudication.get("kind") == "chart_feature":
        features = dict(updated.get("features") or {})
        features.update(decision)
        features["tied_fields"] = []
        updated["features"] = features
        updated["decided_by"] = "human"
    else:
        updated["final_class"] = decision
        updated["decided_by"] = "human"
    return updated
