"""Table-of-contents detection and parsing for ASCII and HTML prospectuses.

Offsets are byte offsets into the source document. Documents are decoded latin-1
internally (one byte per character) so character positions equal byte positions
regardless of the underlying encoding.
"""
from __future__ import annotations

import html as htmllib
import re
from dataclasses import dataclass

from .textnorm import edit_distance, normalize_title


class EmptyDocument(ValueError):
    """detect_format/parse_toc called on an empty document."""


class TocNotFound(ValueError):
    """No candidate TOC block scored above the detection threshold."""


@dataclass(frozen=True)
class TocEntry:
    raw_title: str
    order_index: int
    page_number: int | None = None
    anchor: str | None = None
    offset: int | None = None


@dataclass(frozen=True)
class TocParse:
    entries: tuple[TocEntry, ...]
    format: str
    confidence: str  # "exact" | "heuristic"
    diagnostics: tuple[str, ...] = ()
    toc_end: int = 0  # byte offset just past the TOC block


@dataclass(frozen=True)
class TocCheck:
    name: str
    passed: bool
    detail: str = ""


_STRONG_HTML_RE = re.compile(rb"<(?:!doctype\s+html|html|body)\b", re.IGNORECASE)
_TAG_RE = re.compile(
    rb"</?(?:html|head|body|div|p|br|table|tr|td|th|font|span|b|i|u|a|center|h[1-6]|hr|img|ul|ol|li|title|meta|style|script)\b",
    re.IGNORECASE,
)


def detect_format(document: bytes) -> str:
    """Classify a document as "html" or "ascii" by structural tag density."""
    if not document:
        raise EmptyDocument("cannot detect format of empty document")
    if _STRONG_HTML_RE.search(document):
        return "html"
    hits = len(_TAG_RE.findall(document))
    if hits >= 4 and hits / len(document) >= 1 / 5000:
        return "html"
    return "ascii"


def _decode(document: bytes) -> str:
    return document.decode("latin-1")


# --------------------------------------------------------------------------
# ASCII parsing
# --------------------------------------------------------------------------

# Dot-leadered or wide-gap TOC rows: "RISK FACTORS.......7" / "Dilution        14"
_ASCII_ROW_RE = re.compile(
    r"^(?P<lead>\s*)(?P<title>[^\s.](?:[^.\n]|\.(?!\.)){0,90}?)\s*\.{2,}\s*(?P<page>\d{1,4})\s*$"
    r"|^(?P<lead2>\s*)(?P<title2>[^\s.](?:[^\n]){0,90}?[^\s.])\s{3,}(?P<page2>\d{1,4})\s*$"
)
_TOC_HEADER_RE = re.compile(r"table\s+of\s+contents|^\s*contents\s*$", re.IGNORECASE)


@dataclass
class _Line:
    start: int
    text: str


def _split_lines(text: str) -> list[_Line]:
    lines = []
    pos = 0
    for raw in text.splitlines(keepends=True):
        lines.append(_Line(pos, raw.rstrip("\r\n")))
        pos += len(raw)
    return lines


def _ascii_toc_rows(lines: list[_Line]) -> list[tuple[int, str, int]]:
    """(line index, title, page) for every line shaped like a TOC row."""
    rows = []
    for idx, line in enumerate(lines):
        match = _ASCII_ROW_RE.match(line.text)
        if not match:
            continue
        title = match.group("title") or match.group("title2")
        page = match.group("page") or match.group("page2")
        title = title.strip()
        if not title or not re.search(r"[A-Za-z]", title):
            continue
        rows.append((idx, title, int(page)))
    return rows


def _cluster_rows(rows: list[tuple[int, str, int]], max_gap: int = 3) -> list[list[tuple[int, str, int]]]:
    clusters: list[list[tuple[int, str, int]]] = []
    for row in rows:
        if clusters and row[0] - clusters[-1][-1][0] <= max_gap:
            clusters[-1].append(row)
        else:
            clusters.append([row])
    return clusters


def _is_heading_line(lines: list[_Line], idx: int) -> bool:
    """Heading-like: short standalone line, not mid-paragraph."""
    text = lines[idx].text.strip()
    if not text or len(text) > 100:
        return False
    if idx > 0:
        prev = lines[idx - 1].text.strip()
        if prev and not prev.startswith("<PAGE"):
            return False
    return True


def _resolve_ascii_offsets(
    lines: list[_Line], titles: list[str], search_from_line: int
) -> tuple[list[int | None], list[str]]:
    normalized = [normalize_title(t) for t in titles]
    offsets: list[int | None] = [None] * len(titles)
    diagnostics: list[str] = []
    for entry_idx, want in enumerate(normalized):
        for idx in range(search_from_line, len(lines)):
            line = lines[idx]
            if normalize_title(line.text) == want and _is_heading_line(lines, idx):
                indent = len(line.text) - len(line.text.lstrip())
                offsets[entry_idx] = line.start + indent
                break
        if offsets[entry_idx] is None:
            diagnostics.append(f"no standalone heading found for TOC entry {titles[entry_idx]!r}")
    return offsets, diagnostics


def _parse_ascii_toc(text: str) -> TocParse:
    lines = _split_lines(text)
    rows = _ascii_toc_rows(lines)
    clusters = _cluster_rows(rows)
    if not clusters:
        raise TocNotFound("no dot-leadered or page-numbered TOC rows found")

    def _has_header(cluster: list[tuple[int, str, int]]) -> bool:
        first_line = cluster[0][0]
        context = range(max(0, first_line - 5), first_line)
        return any(_TOC_HEADER_RE.search(lines[i].text) for i in context)

    # A "TABLE OF CONTENTS" header outweighs longer runs of page-numbered rows
    # (financial tables can masquerade as clusters).
    best = max(clusters, key=lambda c: len(c) + 50 * _has_header(c))
    count, has_header = len(best), _has_header(best)
    if count < 4 and not (count >= 3 and has_header):
        raise TocNotFound(f"best TOC candidate has only {count} rows")

    titles = [title for _, title, _ in best]
    pages = [page for _, _, page in best]
    toc_end_line = best[-1][0] + 1
    offsets, diagnostics = _resolve_ascii_offsets(lines, titles, toc_end_line)

    entries = tuple(
        TocEntry(raw_title=title, order_index=i, page_number=page, offset=offset)
        for i, (title, page, offset) in enumerate(zip(titles, pages, offsets))
    )
    resolved = [e.offset for e in entries if e.offset is not None]
    exact = (
        len(resolved) == len(entries)
        and all(a < b for a, b in zip(resolved, resolved[1:]))
    )
    toc_end = lines[toc_end_line].start if toc_end_line < len(lines) else len(text)
    return TocParse(
        entries=entries,
        format="ascii",
        confidence="exact" if exact else "heuristic",
        diagnostics=tuple(diagnostics),
        toc_end=toc_end,
    )


# --------------------------------------------------------------------------
# HTML parsing
# --------------------------------------------------------------------------

_ANCHOR_LINK_RE = re.compile(
    r"<a\b[^>]*\bhref\s*=\s*(?P<q>[\"']?)#(?P<target>[^\"'\s>]+)(?P=q)[^>]*>(?P<text>.*?)</a>",
    re.IGNORECASE | re.DOTALL,
)
_INNER_TAG_RE = re.compile(r"<[^>]+>")
_TEXT_RUN_RE = re.compile(r">([^<>]+)<")
_TABLE_RE = re.compile(r"<table\b.*?</table>", re.IGNORECASE | re.DOTALL)
_ROW_RE = re.compile(r"<tr\b.*?</tr>", re.IGNORECASE | re.DOTALL)
_CELL_RE = re.compile(r"<t[dh]\b[^>]*>(.*?)</t[dh]>", re.IGNORECASE | re.DOTALL)


def _visible_text(fragment: str) -> str:
    return re.sub(r"\s+", " ", htmllib.unescape(_INNER_TAG_RE.sub(" ", fragment))).strip()


def _anchor_target_offset(text: str, target: str) -> int | None:
    pattern = re.compile(
        r"<[^>]*\b(?:id|name)\s*=\s*[\"']?" + re.escape(target) + r"[\"' >]",
        re.IGNORECASE,
    )
    match = pattern.search(text)
    return match.start() if match else None


def _link_page_number(text: str, link_end: int) -> int | None:
    """Page digits in a trailing cell of the same table row, if any."""
    window = text[link_end : link_end + 400]
    row_end = window.lower().find("</tr>")
    if row_end == -1:
        return None
    cell = re.search(r">\s*(\d{1,4})\s*<", window[:row_end])
    return int(cell.group(1)) if cell else None


def _parse_html_anchor_toc(text: str) -> TocParse | None:
    links = [
        (m.start(), m.end(), m.group("target"), _visible_text(m.group("text")))
        for m in _ANCHOR_LINK_RE.finditer(text)
    ]
    links = [l for l in links if l[3]]
    if len(links) < 3:
        return None

    clusters: list[list[tuple[int, int, str, str]]] = []
    for link in links:
        if clusters and link[0] - clusters[-1][-1][1] <= 2000:
            clusters[-1].append(link)
        else:
            clusters.append([link])
    best = max(clusters, key=len)
    if len(best) < 3:
        return None

    entries = []
    diagnostics = []
    for i, (start, end, target, title) in enumerate(best):
        offset = _anchor_target_offset(text, target)
        if offset is None:
            diagnostics.append(f"anchor #{target} for TOC entry {title!r} has no target element")
        entries.append(
            TocEntry(
                raw_title=title,
                order_index=i,
                page_number=_link_page_number(text, end),
                anchor=target,
                offset=offset,
            )
        )
    resolved = [e.offset for e in entries if e.offset is not None]
    exact = (
        len(resolved) == len(entries)
        and all(a < b for a, b in zip(resolved, resolved[1:]))
        and len(set(resolved)) == len(resolved)
    )
    return TocParse(
        entries=tuple(entries),
        format="html",
        confidence="exact" if exact else "heuristic",
        diagnostics=tuple(diagnostics),
        toc_end=best[-1][1],
    )


def _parse_html_table_toc(text: str) -> TocParse | None:
    """Fallback for contents tables without internal anchors: title + page rows."""
    for table_match in _TABLE_RE.finditer(text):
        rows = []
        for row_match in _ROW_RE.finditer(table_match.group(0)):
            cells = [_visible_text(c) for c in _CELL_RE.findall(row_match.group(0))]
            cells = [c for c in cells if c]
            if len(cells) >= 2 and re.fullmatch(r"\d{1,4}", cells[-1]):
                title = cells[0]
                if re.search(r"[A-Za-z]", title):
                    rows.append((title, int(cells[-1])))
        if len(rows) < 3:
            continue

        table_end = table_match.end()
        entries = []
        diagnostics = []
        for i, (title, page) in enumerate(rows):
            offset = _find_text_run_offset(text, title, table_end)
            if offset is None:
                diagnostics.append(f"no in-body text run matches TOC entry {title!r}")
            entries.append(
                TocEntry(raw_title=title, order_index=i, page_number=page, offset=offset)
            )
        resolved = [e.offset for e in entries if e.offset is not None]
        exact = (
            len(resolved) == len(entries)
            and all(a < b for a, b in zip(resolved, resolved[1:]))
            and len(set(resolved)) == len(resolved)
        )
        return TocParse(
            entries=tuple(entries),
            format="html",
            confidence="exact" if exact else "heuristic",
            diagnostics=tuple(diagnostics),
            toc_end=table_end,
        )
    return None


def _find_text_run_offset(text: str, title: str, search_from: int) -> int | None:
    """First text run after ``search_from`` whose visible text equals the title."""
    want = normalize_title(title)
    for match in _TEXT_RUN_RE.finditer(text, search_from):
        run = match.group(1)
        if normalize_title(htmllib.unescape(run)) == want:
            leading_ws = len(run) - len(run.lstrip())
            return match.start(1) + leading_ws
    return None


def _parse_html_toc(text: str) -> TocParse:
    parse = _parse_html_anchor_toc(text)
    if parse is None:
        parse = _parse_html_table_toc(text)
    if parse is None:
        raise TocNotFound("no anchor cluster or contents table found")
    return parse


# --------------------------------------------------------------------------
# Public operations
# --------------------------------------------------------------------------


def parse_toc(document: bytes, format: str) -> TocParse:
    """Locate and parse the Table of Contents; offsets index into ``document`` bytes."""
    if not document:
        raise EmptyDocument("cannot parse TOC of empty document")
    if format not in ("ascii", "html"):
        raise ValueError(f"format must be ascii or html, got {format!r}")
    text = _decode(document)
    if format == "html":
        return _parse_html_toc(text)
    return _parse_ascii_toc(text)


def _heading_text_at(text: str, parse_format: str, offset: int) -> str:
    """Printed heading text at a resolved offset, for the title-match check."""
    if parse_format == "ascii":
        end = text.find("\n", offset)
        return text[offset : end if end != -1 else len(text)]
    if offset < len(text) and text[offset] != "<":
        # offset points into a text run (anchor-free TOC resolution)
        end = text.find("<", offset)
        segment = text[offset : end if end != -1 else offset + 200]
        return htmllib.unescape(segment).strip()
    window = text[offset : offset + 600]
    for run in _TEXT_RUN_RE.finditer(window):
        if run.group(1).strip():
            return htmllib.unescape(run.group(1)).strip()
    return ""


def validate_toc(parse: TocParse, document: bytes) -> list[TocCheck]:
    """Deterministic post-parse checks; reports, never throws."""
    text = _decode(document)
    checks: list[TocCheck] = []

    resolved = [(e.order_index, e.offset) for e in parse.entries if e.offset is not None]
    offsets = [off for _, off in resolved]
    monotonic = all(a <= b for a, b in zip(offsets, offsets[1:]))
    checks.append(
        TocCheck(
            name="locator-monotonic",
            passed=monotonic,
            detail="" if monotonic else f"offsets out of document order: {offsets}",
        )
    )

    duplicates = len(set(offsets)) != len(offsets)
    checks.append(
        TocCheck(
            name="no-duplicate-offsets",
            passed=not duplicates,
            detail="duplicate resolved offsets" if duplicates else "",
        )
    )

    mismatches = []
    for entry in parse.entries:
        if entry.offset is None:
            continue
        found = _heading_text_at(text, parse.format, entry.offset)
        want, got = normalize_title(entry.raw_title), normalize_title(found)
        if want != got:
            distance = edit_distance(want, got)
            mismatches.append(
                f"entry {entry.order_index} {entry.raw_title!r}: body heading {found!r}"
                f" (normalized edit distance {distance})"
            )
    checks.append(
        TocCheck(
            name="title-match",
            passed=not mismatches,
            detail="; ".join(mismatches),
        )
    )
    return checks
