"""Shared domain types: filing identity, industry divisions, and the canonical label dictionary."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import date
from importlib import resources
from pathlib import Path

FORM_TYPES = ("S-1", "S-1/A", "F-1", "F-1/A")
SOURCE_FORMATS = ("ascii", "html")

ACCESSION_RE = re.compile(r"^\d{10}-\d{2}-\d{6}$")


class InvalidFilingRecord(ValueError):
    """A filing record field violates its format contract."""


def normalize_cik(cik: int | str) -> str:
    """Zero-pad a CIK to the canonical 10-digit form."""
    digits = str(cik).strip().lstrip("0") or "0"
    if not digits.isdigit():
        raise InvalidFilingRecord(f"CIK is not numeric: {cik!r}")
    if len(digits) > 10:
        raise InvalidFilingRecord(f"CIK longer than 10 digits: {cik!r}")
    return digits.zfill(10)


def normalize_accession(accession: str) -> str:
    """Return the canonical dashed accession form, accepting the undashed 18-digit variant."""
    raw = accession.strip()
    if ACCESSION_RE.match(raw):
        return raw
    undashed = raw.replace("-", "")
    if len(undashed) == 18 and undashed.isdigit():
        return f"{undashed[:10]}-{undashed[10:12]}-{undashed[12:]}"
    raise InvalidFilingRecord(f"not an accession number: {accession!r}")


@dataclass(frozen=True)
class FilingRecord:
    """Identity and provenance of one IPO registration filing."""

    cik: str
    accession_number: str
    form_type: str
    filing_date: date
    sic_code: str
    source_format: str
    primary_document: str
    ticker: str | None = None

    def __post_init__(self) -> None:
        if not re.match(r"^\d{10}$", self.cik):
            raise InvalidFilingRecord(f"CIK must be zero-padded to 10 digits: {self.cik!r}")
        if not ACCESSION_RE.match(self.accession_number):
            raise InvalidFilingRecord(
                f"accession number must match NNNNNNNNNN-NN-NNNNNN: {self.accession_number!r}"
            )
        if self.form_type not in FORM_TYPES:
            raise InvalidFilingRecord(f"form_type must be one of {FORM_TYPES}: {self.form_type!r}")
        if self.source_format not in SOURCE_FORMATS:
            raise InvalidFilingRecord(f"source_format must be ascii or html: {self.source_format!r}")
        if not re.match(r"^\d{4}$", self.sic_code):
            raise InvalidFilingRecord(f"sic_code must be 4 digits: {self.sic_code!r}")
        if not self.primary_document:
            raise InvalidFilingRecord("primary_document is required")

    @property
    def is_amendment(self) -> bool:
        return self.form_type.endswith("/A")

    @property
    def year(self) -> int:
        return self.filing_date.year

    def to_row(self) -> dict:
        return {
            "cik": self.cik,
            "ticker": self.ticker,
            "accession_number": self.accession_number,
            "form_type": self.form_type,
            "filing_date": self.filing_date.isoformat(),
            "sic_code": self.sic_code,
            "source_format": self.source_format,
            "primary_document": self.primary_document,
        }

    @classmethod
    def from_row(cls, row: dict) -> "FilingRecord":
        return cls(
            cik=row["cik"],
            ticker=row.get("ticker"),
            accession_number=row["accession_number"],
            form_type=row["form_type"],
            filing_date=date.fromisoformat(row["filing_date"]),
            sic_code=row["sic_code"],
            source_format=row["source_format"],
            primary_document=row["primary_document"],
        )


@dataclass(frozen=True)
class IndustryDivision:
    """One SIC division; ``low``/``high`` are the inclusive 4-digit range, absent for the fallback."""

    code: str
    name: str
    low: int | None = None
    high: int | None = None

    def contains(self, sic: int) -> bool:
        return self.low is not None and self.high is not None and self.low <= sic <= self.high


class DivisionMap:
    """SIC-to-division mapping loaded from editable configuration.

    Ranges must be disjoint; codes outside every range map to the fallback division.
    """

    def __init__(self, divisions: list[IndustryDivision], fallback: IndustryDivision):
        spans = sorted((d.low, d.high, d.code) for d in divisions)
        for (lo1, hi1, c1), (lo2, hi2, c2) in zip(spans, spans[1:]):
            if lo2 <= hi1:
                raise ValueError(f"overlapping division ranges: {c1} and {c2}")
        self.divisions = list(divisions)
        self.fallback = fallback

    @classmethod
    def from_file(cls, path: str | Path) -> "DivisionMap":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls._from_payload(payload)

    @classmethod
    def default(cls) -> "DivisionMap":
        payload = json.loads(
            resources.files("ipocorpus.data").joinpath("sic_divisions.json").read_text(encoding="utf-8")
        )
        return cls._from_payload(payload)

    @classmethod
    def _from_payload(cls, payload: dict) -> "DivisionMap":
        divisions = [
            IndustryDivision(code=d["code"], name=d["name"], low=int(d["low"]), high=int(d["high"]))
            for d in payload["divisions"]
        ]
        fb = payload["fallback"]
        return cls(divisions, IndustryDivision(code=fb["code"], name=fb["name"]))

    def division_of(self, sic: int | str) -> IndustryDivision:
        code = int(sic)
        if not 0 <= code <= 9999:
            raise ValueError(f"SIC code out of range: {sic!r}")
        for division in self.divisions:
            if division.contains(code):
                return division
        return self.fallback

    @property
    def codes(self) -> list[str]:
        return [d.code for d in self.divisions] + [self.fallback.code]


_DEFAULT_DIVISIONS: DivisionMap | None = None


def division_of(sic: int | str) -> IndustryDivision:
    """Map a 4-digit SIC code to its industry division under the default configuration."""
    global _DEFAULT_DIVISIONS
    if _DEFAULT_DIVISIONS is None:
        _DEFAULT_DIVISIONS = DivisionMap.default()
    return _DEFAULT_DIVISIONS.division_of(sic)


@dataclass(frozen=True)
class CanonicalLabel:
    """A curated section name with its known raw-title spellings."""

    label: str
    aliases: tuple[str, ...]


class LabelDictionary:
    """Versioned canonical section label dictionary.

    The dictionary is a data file so curation can evolve without code changes; labels keep
    their file order, which breaks score ties deterministically downstream.
    """

    def __init__(self, labels: list[CanonicalLabel], version: int = 1):
        seen: dict[str, str] = {}
        for entry in labels:
            for alias in entry.aliases:
                key = alias.casefold().strip()
                if key in seen and seen[key] != entry.label:
                    raise ValueError(
                        f"alias {alias!r} appears under both {seen[key]!r} and {entry.label!r}"
                    )
                seen[key] = entry.label
        self.labels = list(labels)
        self.version = version

    @classmethod
    def from_file(cls, path: str | Path) -> "LabelDictionary":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls._from_payload(payload)

    @classmethod
    def default(cls) -> "LabelDictionary":
        payload = json.loads(
            resources.files("ipocorpus.data").joinpath("canonical_labels.json").read_text(encoding="utf-8")
        )
        return cls._from_payload(payload)

    @classmethod
    def _from_payload(cls, payload: dict) -> "LabelDictionary":
        labels = [
            CanonicalLabel(label=entry["label"], aliases=tuple(entry["aliases"]))
            for entry in payload["labels"]
        ]
        return cls(labels, version=int(payload.get("version", 1)))

    def label_names(self) -> list[str]:
        return [entry.label for entry in self.labels]
