"""Segmentation into canonical sections: TOC-driven spans, fuzzy labels, markup stripping."""
from __future__ import annotations

import html as htmllib
import re
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .model import LabelDictionary
from .textnorm import title_similarity
from .toc import TocParse
from .tokens import Tokenizer, get_tokenizer

if TYPE_CHECKING:
    from .validation import ValidationVerdict

DEFAULT_FUZZY_THRESHOLD = 0.85

# Back-matter markers: the final section must not swallow Part II / signatures / exhibits.
DEFAULT_TERMINATOR_PATTERNS = (
    r"^\s*PART\s+II\b",
    r"INFORMATION\s+NOT\s+REQUIRED\s+IN\s+PROSPECTUS",
    r"^\s*SIGNATURES?\s*$",
    r"INDEX\s+TO\s+EXHIBITS",
    r"EXHIBIT\s+INDEX",
)


class UnresolvedBoundaries(ValueError):
    """A TOC entry needed for segmentation carries no resolved byte offset."""


@dataclass
class SectionText:
    """One extracted, canonically labeled section of a filing."""

    filing_ref: str
    raw_title: str
    span: tuple[int, int]
    filtered_text: str
    token_count_raw: int
    token_count_filtered: int
    order_index: int
    canonical_label: str | None = None
    label_score: float = 0.0
    source_format: str = "ascii"
    page_number: int | None = None
    validation: "ValidationVerdict | None" = None

    @property
    def item_id(self) -> str:
        return f"section:{self.filing_ref}:{self.order_index}"


def normalize_label(
    raw_title: str,
    dictionary: LabelDictionary | None = None,
    threshold: float = DEFAULT_FUZZY_THRESHOLD,
) -> tuple[str | None, float]:
    """Best canonical label for a raw section title, or none below the threshold.

    Similarity is 1 - edit_distance/max_len over normalized token-sorted strings;
    ties break by higher score, then dictionary order. Pure in (title, dictionary,
    threshold), so raising the threshold can only turn a label into none.
    """
    if not raw_title.strip():
        raise ValueError("raw_title must be non-empty")
    dictionary = dictionary or LabelDictionary.default()
    best_label: str | None = None
    best_score = -1.0
    for entry in dictionary.labels:
        for alias in entry.aliases:
            score = title_similarity(raw_title, alias)
            if score > best_score:
                best_label, best_score = entry.label, score
    if best_score >= threshold:
        return best_label, best_score
    return None, best_score


# ---------------------------------------------------------------------------
# Markup stripping
# ---------------------------------------------------------------------------

_SCRIPT_STYLE_RE = re.compile(r"<(script|style)\b.*?</\1\s*>", re.IGNORECASE | re.DOTALL)
_COMMENT_RE = re.compile(r"<!--.*?-->", re.DOTALL)
_BLOCK_CLOSE_RE = re.compile(
    r"</?(?:p|div|tr|table|h[1-6]|li|ul|ol|center|blockquote)\b[^>]*>|<br\s*/?>|<hr\s*/?>",
    re.IGNORECASE,
)
_ANY_TAG_RE = re.compile(r"</?[a-zA-Z!][^>]*>")
_PAGE_BREAK_RE = re.compile(r"^\s*<PAGE>\s*\d*\s*$", re.IGNORECASE | re.MULTILINE)


def _strip_html_once(text: str) -> str:
    text = _COMMENT_RE.sub(" ", text)
    text = _SCRIPT_STYLE_RE.sub(" ", text)
    text = _BLOCK_CLOSE_RE.sub("\n", text)
    text = _ANY_TAG_RE.sub(" ", text)
    text = htmllib.unescape(text)
    return _collapse_whitespace(text)


def _strip_ascii_once(text: str) -> str:
    text = _PAGE_BREAK_RE.sub("", text)
    text = text.replace("\f", "\n")
    return _collapse_whitespace(text)


def _collapse_whitespace(text: str) -> str:
    text = text.replace(" ", " ")
    text = re.sub(r"[ \t]+", " ", text)
    text = re.sub(r" ?\n ?", "\n", text)
    text = re.sub(r"\n{3,}", "\n\n", text)
    return text.strip()


def strip_markup(document: bytes | str, format: str) -> str:
    """Filtered text: tags/entities removed (html) or page artifacts collapsed (ascii).

    Iterates the single-pass filter to a fixpoint, so the operation is idempotent
    even on escaped-markup chains that decode into new markup.
    """
    if isinstance(document, bytes):
        text = _decode_bytes(document)
    else:
        text = document
    step = _strip_html_once if format == "html" else _strip_ascii_once
    for _ in range(1000):
        next_text = step(text)
        if next_text == text:
            return text
        text = next_text
    return text


def _decode_bytes(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        return data.decode("latin-1")


# ---------------------------------------------------------------------------
# Segmentation
# ---------------------------------------------------------------------------


def _terminator_offset(text: str, search_from: int, patterns: tuple[str, ...]) -> int:
    earliest = len(text)
    for pattern in patterns:
        match = re.compile(pattern, re.MULTILINE).search(text, search_from)
        if match and match.start() < earliest:
            earliest = match.start()
    return earliest


def segment(
    document: bytes,
    toc: TocParse,
    filing_ref: str,
    dictionary: LabelDictionary | None = None,
    tokenizer: Tokenizer | None = None,
    threshold: float = DEFAULT_FUZZY_THRESHOLD,
    terminator_patterns: tuple[str, ...] = DEFAULT_TERMINATOR_PATTERNS,
) -> list[SectionText]:
    """Cut the filing body into one SectionText per TOC entry.

    Section i spans [offset_i, offset_{i+1}); the final section ends at the first
    back-matter terminator after the last TOC locator, or end-of-document.
    """
    missing = [e.raw_title for e in toc.entries if e.offset is None]
    if missing:
        raise UnresolvedBoundaries(f"TOC entries without resolved offsets: {missing}")

    tokenizer = tokenizer or get_tokenizer()
    dictionary = dictionary or LabelDictionary.default()
    text = document.decode("latin-1")

    offsets = [e.offset for e in toc.entries]
    last_end = _terminator_offset(text, offsets[-1] + 1, terminator_patterns)

    sections: list[SectionText] = []
    for i, entry in enumerate(toc.entries):
        start = offsets[i]
        end = offsets[i + 1] if i + 1 < len(offsets) else last_end
        raw_slice = document[start:end]
        raw_text = _decode_bytes(raw_slice)
        filtered = strip_markup(raw_slice, toc.format)
        label, score = normalize_label(entry.raw_title, dictionary, threshold)
        sections.append(
            SectionText(
                filing_ref=filing_ref,
                raw_title=entry.raw_title,
                span=(start, end),
                filtered_text=filtered,
                token_count_raw=tokenizer.count(raw_text),
                token_count_filtered=tokenizer.count(filtered),
                order_index=entry.order_index,
                canonical_label=label,
                label_score=score,
                source_format=toc.format,
                page_number=entry.page_number,
            )
        )
    return sections
