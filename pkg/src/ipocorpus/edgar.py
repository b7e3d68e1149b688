"""EDGAR retrieval: ticker resolution, filing indices, and cached rate-limited document fetch.

All archive access funnels through one ``EdgarClient`` whose rate limiter is the single
serialization point, matching EDGAR fair-access norms (default 10 requests/second with a
mandatory identifying User-Agent). Tests run against recorded transports, never the live
archive; pass ``RequestsTransport`` explicitly (the default) for live use.
"""
from __future__ import annotations

import hashlib
import json
import mimetypes
import os
import re
import threading
import time
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Callable, Protocol

import requests

TICKER_MAP_URL = "https://www.sec.gov/files/company_tickers.json"
SUBMISSIONS_URL = "https://data.sec.gov/submissions/CIK{cik}.json"
ARCHIVE_BASE = "https://www.sec.gov/Archives/edgar/data/{cik_short}/{accession_nodash}"
FULL_INDEX_URL = "https://www.sec.gov/Archives/edgar/full-index/{year}/QTR{quarter}/master.idx"


class NetworkError(RuntimeError):
    """Transport failure that survived the configured retry budget."""


class UnknownTicker(KeyError):
    """Ticker absent from the EDGAR company-ticker mapping."""


class MalformedIndex(ValueError):
    """An index response could not be parsed; surfaced rather than repaired."""


class NotInFiling(KeyError):
    """Requested path is not part of the filing's document list."""


@dataclass(frozen=True)
class FetchPolicy:
    user_agent: str
    cache_dir: Path
    max_requests_per_second: float = 10.0
    retry_budget: int = 3

    def __post_init__(self) -> None:
        if not self.user_agent.strip():
            raise ValueError("user_agent must identify the operator (EDGAR fair-access)")
        if self.max_requests_per_second <= 0:
            raise ValueError("max_requests_per_second must be positive")
        if self.retry_budget < 0:
            raise ValueError("retry_budget must be >= 0")


@dataclass(frozen=True)
class DocumentRef:
    path: str
    content_type: str
    byte_size: int


@dataclass(frozen=True)
class FilingIndexEntry:
    cik: str
    form_type: str
    filing_date: date
    accession_number: str
    document_list: tuple[DocumentRef, ...]

    def has_path(self, path: str) -> bool:
        return any(ref.path == path for ref in self.document_list)


class RateLimiter:
    """Paces admissions at a fixed minimum interval of 1/rate seconds.

    Strict pacing (no burst allowance) keeps the admitted count in any half-open
    window of w seconds at or below ceil(rate * w). Clock and sleep are injectable
    so tests drive a mock clock.
    """

    def __init__(
        self,
        max_per_second: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if max_per_second <= 0:
            raise ValueError("rate must be positive")
        self._interval = 1.0 / max_per_second
        self._clock = clock
        self._sleep = sleep
        self._base = float("-inf")
        self._count = 0
        self._lock = threading.Lock()

    def acquire(self) -> float:
        """Block until a slot is available; returns the wait that was imposed.

        Slot times are base + k * interval (multiplication, not accumulation) so
        long runs do not drift.
        """
        with self._lock:
            now = self._clock()
            next_free = self._base + self._count * self._interval
            if next_free < now:  # idle (or first call): restart the schedule
                self._base = now
                self._count = 0
                next_free = now
            wait = next_free - now
            self._count += 1
        if wait > 0:
            self._sleep(wait)
        return wait


class Transport(Protocol):
    def get(self, url: str) -> tuple[bytes, str]:
        """Return (body bytes, content type) or raise NetworkError."""
        ...


class RequestsTransport:
    def __init__(self, user_agent: str, timeout: float = 30.0):
        self._headers = {"User-Agent": user_agent}
        self._timeout = timeout
        self._session = requests.Session()

    def get(self, url: str) -> tuple[bytes, str]:
        try:
            resp = self._session.get(url, headers=self._headers, timeout=self._timeout)
        except requests.RequestException as exc:
            raise NetworkError(f"GET {url}: {exc}") from exc
        if resp.status_code != 200:
            raise NetworkError(f"GET {url}: HTTP {resp.status_code}")
        return resp.content, resp.headers.get("Content-Type", "")


def guess_content_type(path: str) -> str:
    guessed, _ = mimetypes.guess_type(path)
    if guessed:
        return guessed
    if path.endswith((".htm", ".html")):
        return "text/html"
    return "text/plain"


def parse_master_index(text: str) -> list[dict]:
    """Parse a quarterly master.idx into row dicts (cik, company, form_type, date_filed, filename)."""
    rows = []
    in_body = False
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not in_body:
            if re.match(r"^-{10,}$", line.strip()):
                in_body = True
            continue
        if not line.strip():
            continue
        parts = line.split("|")
        if len(parts) != 5:
            raise MalformedIndex(f"master.idx line {line_no}: expected 5 pipe-separated fields")
        cik, company, form_type, date_filed, filename = (p.strip() for p in parts)
        if not cik.isdigit():
            raise MalformedIndex(f"master.idx line {line_no}: non-numeric CIK {cik!r}")
        rows.append(
            {
                "cik": cik,
                "company": company,
                "form_type": form_type,
                "date_filed": date_filed,
                "filename": filename,
            }
        )
    if not in_body:
        raise MalformedIndex("master.idx header separator not found")
    return rows


def _safe_relpath(path: str) -> str:
    if path.startswith(("/", "\\")) or ".." in Path(path).parts:
        raise NotInFiling(f"unsafe document path: {path!r}")
    return path


class EdgarClient:
    """Shared, thread-safe archive client with content-addressed caching."""

    def __init__(
        self,
        policy: FetchPolicy,
        transport: Transport | None = None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.policy = policy
        self._transport = transport if transport is not None else RequestsTransport(policy.user_agent)
        self._limiter = RateLimiter(policy.max_requests_per_second, clock=clock, sleep=sleep)
        self._ticker_map: dict[str, str] | None = None
        self.policy.cache_dir.mkdir(parents=True, exist_ok=True)

    # -- transport with retry ------------------------------------------------

    def _get(self, url: str) -> tuple[bytes, str]:
        last: NetworkError | None = None
        for attempt in range(self.policy.retry_budget + 1):
            self._limiter.acquire()
            try:
                return self._transport.get(url)
            except NetworkError as exc:
                last = exc
        raise NetworkError(
            f"{url}: failed after {self.policy.retry_budget + 1} attempts ({last})"
        )

    # -- ticker resolution ---------------------------------------------------

    def resolve_cik(self, ticker: str) -> str:
        if not ticker.strip():
            raise ValueError("ticker must be non-empty")
        if self._ticker_map is None:
            body, _ = self._get(TICKER_MAP_URL)
            try:
                raw = json.loads(body)
                self._ticker_map = {
                    entry["ticker"].upper(): str(entry["cik_str"]).zfill(10) for entry in raw.values()
                }
            except (ValueError, KeyError, AttributeError, TypeError) as exc:
                raise MalformedIndex(f"company ticker mapping unparseable: {exc}") from exc
        key = ticker.strip().upper()
        if key not in self._ticker_map:
            raise UnknownTicker(ticker)
        return self._ticker_map[key]

    # -- filing listing ------------------------------------------------------

    def list_ipo_filings(
        self,
        cik: str,
        form_filter: set[str],
        date_range: tuple[date | None, date | None] = (None, None),
        with_documents: bool = True,
    ) -> list[FilingIndexEntry]:
        start, end = date_range
        if start is not None and end is not None and start > end:
            return []
        body, _ = self._get(SUBMISSIONS_URL.format(cik=cik))
        try:
            payload = json.loads(body)
            recent = payload["filings"]["recent"]
            accessions = recent["accessionNumber"]
            forms = recent["form"]
            dates = recent["filingDate"]
            primaries = recent.get("primaryDocument", [""] * len(accessions))
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedIndex(f"submissions listing for CIK {cik}: {exc}") from exc
        if not (len(accessions) == len(forms) == len(dates)):
            raise MalformedIndex(f"submissions listing for CIK {cik}: ragged columns")

        entries = []
        for accession, form, date_str, primary in zip(accessions, forms, dates, primaries):
            if form not in form_filter:
                continue
            try:
                filed = date.fromisoformat(date_str)
            except ValueError as exc:
                raise MalformedIndex(f"filing date {date_str!r} unparseable") from exc
            if start is not None and filed < start:
                continue
            if end is not None and filed > end:
                continue
            if with_documents:
                documents = self._fetch_document_list(cik, accession)
            else:
                documents = (DocumentRef(primary, guess_content_type(primary), 0),) if primary else ()
            entries.append(
                FilingIndexEntry(
                    cik=cik,
                    form_type=form,
                    filing_date=filed,
                    accession_number=accession,
                    document_list=documents,
                )
            )
        entries.sort(key=lambda e: (e.filing_date, e.accession_number))
        return entries

    def _fetch_document_list(self, cik: str, accession: str) -> tuple[DocumentRef, ...]:
        url = self._archive_url(cik, accession, "index.json")
        body, _ = self._get(url)
        try:
            items = json.loads(body)["directory"]["item"]
            refs = tuple(
                DocumentRef(
                    path=item["name"],
                    content_type=guess_content_type(item["name"]),
                    byte_size=int(item.get("size") or 0),
                )
                for item in items
                if item.get("name") and item["name"] != "index.json"
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedIndex(f"filing index for {accession}: {exc}") from exc
        if not refs:
            raise MalformedIndex(f"filing index for {accession}: empty document list")
        return refs

    @staticmethod
    def _archive_url(cik: str, accession: str, path: str) -> str:
        base = ARCHIVE_BASE.format(
            cik_short=str(int(cik)), accession_nodash=accession.replace("-", "")
        )
        return f"{base}/{path}"

    # -- document fetch with cache -------------------------------------------

    def fetch_document(self, entry: FilingIndexEntry, path: str) -> tuple[bytes, str]:
        if not entry.has_path(path):
            raise NotInFiling(f"{path!r} not in filing {entry.accession_number}")
        return self._fetch_cached(entry.cik, entry.accession_number, _safe_relpath(path))

    def _fetch_cached(self, cik: str, accession: str, path: str) -> tuple[bytes, str]:
        target = self.policy.cache_dir / accession / path
        sidecar = target.with_name(target.name + ".meta.json")
        if target.exists() and sidecar.exists():
            try:
                meta = json.loads(sidecar.read_text(encoding="utf-8"))
                body = target.read_bytes()
                if hashlib.sha256(body).hexdigest() == meta["sha256"]:
                    return body, meta["content_type"]
            except (ValueError, KeyError, OSError):
                pass  # corrupted cache entry: fall through to refetch

        body, content_type = self._get(self._archive_url(cik, accession, path))
        content_type = content_type or guess_content_type(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        tmp = target.with_name(target.name + f".tmp{os.getpid()}")
        tmp.write_bytes(body)
        os.replace(tmp, target)
        tmp_meta = sidecar.with_name(sidecar.name + f".tmp{os.getpid()}")
        tmp_meta.write_text(
            json.dumps({"sha256": hashlib.sha256(body).hexdigest(), "content_type": content_type}),
            encoding="utf-8",
        )
        os.replace(tmp_meta, sidecar)
        return body, content_type
