"""Agreement, diversity, and yearly corpus statistics.

Krippendorff's alpha uses the coincidence-matrix formulation over pairable values
with the nominal difference function; the test suite checks it against a direct
pair-enumeration oracle. Cosine "distance" is fixed as 1 - cosine similarity.
"""
from __future__ import annotations

import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from .images import ImageAsset
from .model import FilingRecord
from .sections import SectionText
from .tokens import Tokenizer, get_tokenizer


class InsufficientData(ValueError):
    """No item carries two or more labels, so no value is pairable."""


class DegenerateData(ValueError):
    """Only one category observed; expected disagreement is zero and alpha is undefined."""


class EmptyText(ValueError):
    """Text produced no tokens."""


class ZeroVector(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class TooFewVectors(ValueError):
    pass


@dataclass
class AnnotationMatrix:
    """(item x rater) categorical labels; missing cells are simply absent."""

    items: list[str]
    raters: list[str]
    labels: dict[tuple[str, str], str] = field(default_factory=dict)

    def set(self, item: str, rater: str, category: str) -> None:
        self.labels[(item, rater)] = category

    def item_values(self) -> list[list[str]]:
        by_item: dict[str, list[str]] = defaultdict(list)
        for (item, rater), category in sorted(self.labels.items()):
            by_item[item].append(category)
        return [by_item[item] for item in self.items if item in by_item]

    @classmethod
    def from_rows(cls, rows: list[tuple[str, str, str]]) -> "AnnotationMatrix":
        items: list[str] = []
        raters: list[str] = []
        labels: dict[tuple[str, str], str] = {}
        for item, rater, category in rows:
            if item not in items:
                items.append(item)
            if rater not in raters:
                raters.append(rater)
            labels[(item, rater)] = category
        return cls(items=items, raters=raters, labels=labels)


def krippendorff_alpha(matrix: AnnotationMatrix, metric: str = "nominal") -> float:
    """Chance-corrected agreement: alpha = 1 - D_o / D_e over the coincidence matrix."""
    if metric != "nominal":
        raise ValueError("only the nominal difference function is supported")
    units = [values for values in matrix.item_values() if len(values) >= 2]
    if not units:
        raise InsufficientData("no item has two or more labels")

    coincidence: dict[tuple[str, str], float] = defaultdict(float)
    marginals: dict[str, float] = defaultdict(float)
    for values in units:
        m = len(values)
        for i, a in enumerate(values):
            for j, b in enumerate(values):
                if i == j:
                    continue
                coincidence[(a, b)] += 1.0 / (m - 1)
    for (a, _b), count in coincidence.items():
        marginals[a] += count
    n = sum(marginals.values())

    if len(marginals) < 2:
        raise DegenerateData("single category observed; D_e = 0")

    observed = sum(count for (a, b), count in coincidence.items() if a != b) / n
    expected = sum(
        marginals[a] * marginals[b] for a in marginals for b in marginals if a != b
    ) / (n * (n - 1))
    if expected == 0:
        raise DegenerateData("expected disagreement is zero")
    return 1.0 - observed / expected


def pairwise_alpha(matrix: AnnotationMatrix, categories: tuple[str, str]) -> float:
    """Alpha restricted to items where every label is one of the two given categories."""
    wanted = set(categories)
    by_item: dict[str, list[tuple[str, str, str]]] = defaultdict(list)
    for (item, rater), category in matrix.labels.items():
        by_item[item].append((item, rater, category))
    kept: list[tuple[str, str, str]] = []
    for item in matrix.items:
        rows = by_item.get(item, [])
        if rows and all(category in wanted for _, _, category in rows):
            kept.extend(sorted(rows))
    if not kept:
        raise InsufficientData(f"no items restricted to {categories}")
    restricted = AnnotationMatrix.from_rows(kept)
    return krippendorff_alpha(restricted)


# ---------------------------------------------------------------------------
# Diversity measures
# ---------------------------------------------------------------------------

_EDGE_PUNCT_RE = re.compile(r"^\W+|\W+$", re.UNICODE)


def _normalize_token(token: str) -> str:
    return _EDGE_PUNCT_RE.sub("", token.casefold())


def ttr(text: str, tokenizer: Tokenizer | None = None) -> float:
    """Type-token ratio: distinct normalized types over total tokens."""
    tokenizer = tokenizer or get_tokenizer()
    tokens = tokenizer.tokens(text)
    if not tokens:
        raise EmptyText("text produced no tokens")
    types = {_normalize_token(t) for t in tokens}
    return len(types) / len(tokens)


def pairwise_cosine_diversity(vectors: list) -> float:
    """Mean of (1 - cosine similarity) over all unordered vector pairs."""
    if len(vectors) < 2:
        raise TooFewVectors("need at least two vectors")
    array = [np.asarray(v, dtype=float) for v in vectors]
    dim = array[0].shape
    norms = []
    for vec in array:
        if vec.shape != dim:
            raise DimensionMismatch(f"expected shape {dim}, got {vec.shape}")
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise ZeroVector("zero vector has no direction")
        norms.append(norm)
    total = 0.0
    count = 0
    for i in range(len(array)):
        for j in range(i + 1, len(array)):
            cosine = float(np.dot(array[i], array[j])) / (norms[i] * norms[j])
            total += 1.0 - cosine
            count += 1
    return total / count


def split_sentences(text: str) -> list[str]:
    """Terminal punctuation followed by whitespace and a capital starts a new sentence."""
    parts = re.split(r"(?<=[.!?])\s+(?=[A-Z])", text.strip())
    return [p.strip() for p in parts if p.strip()]


def rolling_mean(series: dict[int, float], window: int = 3) -> dict[int, float]:
    """Centered rolling average over available years; missing years drop out of windows."""
    half = window // 2
    out: dict[int, float] = {}
    for year in sorted(series):
        values = [series[y] for y in range(year - half, year + half + 1) if y in series]
        out[year] = sum(values) / len(values)
    return out


# ---------------------------------------------------------------------------
# Yearly corpus statistics
# ---------------------------------------------------------------------------

FORMAT_ERAS = (
    (None, 1995, "EFileOption"),
    (1996, 1999, "AsciiOnly"),
    (2000, 2005, "AsciiOrHtml"),
    (2006, None, "MostlyHtml"),
)


def format_era(year: int) -> str:
    for low, high, era in FORMAT_ERAS:
        if (low is None or year >= low) and (high is None or year <= high):
            return era
    raise ValueError(f"no era for year {year}")


@dataclass(frozen=True)
class YearlyStatRow:
    year: int
    format_era: str
    firms_total: int
    firms_with_images: int
    firms_with_images_pct: float
    images_per_filing: tuple[float, float]
    charts_per_filing: tuple[float, float]
    tokens_raw: tuple[float, float]
    tokens_filtered: tuple[float, float]
    risk_factors_tokens: tuple[float, float] | None


def _mean_std(values: list[float], population: bool = True) -> tuple[float, float]:
    if not values:
        return (0.0, 0.0)
    arr = np.asarray(values, dtype=float)
    ddof = 0 if population else 1
    std = float(arr.std(ddof=ddof)) if len(arr) > ddof else 0.0
    return (float(arr.mean()), std)


def yearly_table(
    filings: list[FilingRecord],
    sections: list[SectionText],
    assets: list[ImageAsset],
    population_std: bool = True,
) -> list[YearlyStatRow]:
    """Per-year firm counts, image/chart densities, and token statistics."""
    sections_by_filing: dict[str, list[SectionText]] = defaultdict(list)
    for section in sections:
        sections_by_filing[section.filing_ref].append(section)
    assets_by_filing: dict[str, list[ImageAsset]] = defaultdict(list)
    for asset in assets:
        assets_by_filing[asset.filing_ref].append(asset)

    by_year: dict[int, list[FilingRecord]] = defaultdict(list)
    for filing in filings:
        by_year[filing.year].append(filing)

    rows = []
    for year in sorted(by_year):
        members = by_year[year]
        firms = {f.cik for f in members}
        firms_with_images = {
            f.cik for f in members if assets_by_filing.get(f.accession_number)
        }
        image_counts = [len(assets_by_filing.get(f.accession_number, [])) for f in members]
        chart_counts = [
            sum(1 for a in assets_by_filing.get(f.accession_number, []) if a.final_class == "Chart")
            for f in members
        ]
        raw_tokens = [
            float(sum(s.token_count_raw for s in sections_by_filing.get(f.accession_number, [])))
            for f in members
        ]
        filtered_tokens = [
            float(sum(s.token_count_filtered for s in sections_by_filing.get(f.accession_number, [])))
            for f in members
        ]
        risk_tokens = [
            float(s.token_count_filtered)
            for f in members
            for s in sections_by_filing.get(f.accession_number, [])
            if s.canonical_label == "Risk Factors"
        ]
        rows.append(
            YearlyStatRow(
                year=year,
                format_era=format_era(year),
                firms_total=len(firms),
                firms_with_images=len(firms_with_images),
                firms_with_images_pct=100.0 * len(firms_with_images) / len(firms),
                images_per_filing=_mean_std([float(c) for c in image_counts], population_std),
                charts_per_filing=_mean_std([float(c) for c in chart_counts], population_std),
                tokens_raw=_mean_std(raw_tokens, population_std),
                tokens_filtered=_mean_std(filtered_tokens, population_std),
                risk_factors_tokens=_mean_std(risk_tokens, population_std) if risk_tokens else None,
            )
        )
    return rows
