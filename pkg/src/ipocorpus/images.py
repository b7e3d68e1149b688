"""Embedded-image extraction and ensemble vote aggregation with agreement bookkeeping."""
from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable

from .edgar import EdgarClient, FilingIndexEntry, NetworkError, guess_content_type
from .judges import AllJudgesFailed, JudgeAdapter, JudgeUnavailable, MalformedJudgeOutput
from .model import FilingRecord
from .prompts import render_template

# Resolves an in-filing path to (bytes, content_type); raises NetworkError/KeyError on failure.
ImageFetcher = Callable[[str], tuple[bytes, str]]

IMAGE_CLASSES = ("Chart", "Infographic", "Logo", "Map", "Other")
DEFAULT_VOTE_THRESHOLD = 0.5

_IMG_SRC_RE = re.compile(
    r"<img\b[^>]*\bsrc\s*=\s*(?P<q>[\"']?)(?P<src>[^\"'\s>]+)(?P=q)", re.IGNORECASE
)


@dataclass(frozen=True)
class ImageAsset:
    filing_ref: str
    file_name: str
    byte_checksum: str
    media_type: str
    class_votes: dict[str, str] = field(default_factory=dict)
    classifier_class: str | None = None
    agreement: tuple[int, int] = (0, 0)
    final_class: str | None = None
    verified: bool = False
    decided_by: str | None = None

    @property
    def item_id(self) -> str:
        return f"image:{self.filing_ref}:{self.byte_checksum[:16]}"

    def to_row(self) -> dict:
        return {
            "filing_ref": self.filing_ref,
            "file_name": self.file_name,
            "byte_checksum": self.byte_checksum,
            "media_type": self.media_type,
            "class_votes": dict(self.class_votes),
            "classifier_class": self.classifier_class,
            "agreement": list(self.agreement),
            "final_class": self.final_class,
            "verified": self.verified,
            "decided_by": self.decided_by,
        }

    @classmethod
    def from_row(cls, row: dict) -> "ImageAsset":
        return cls(
            filing_ref=row["filing_ref"],
            file_name=row["file_name"],
            byte_checksum=row["byte_checksum"],
            media_type=row["media_type"],
            class_votes=dict(row.get("class_votes", {})),
            classifier_class=row.get("classifier_class"),
            agreement=tuple(row.get("agreement", (0, 0))),
            final_class=row.get("final_class"),
            verified=bool(row.get("verified", False)),
            decided_by=row.get("decided_by"),
        )


class PreClassifier:
    """Pluggable local detector. The default abstains; ensemble voting is authoritative."""

    def classify(self, image_bytes: bytes) -> str | None:
        return None


@dataclass
class ExtractionResult:
    assets: list[ImageAsset]
    image_bytes: dict[str, bytes]  # checksum -> bytes
    diagnostics: list[str]


def edgar_fetcher(client: EdgarClient, entry: FilingIndexEntry) -> ImageFetcher:
    return lambda path: client.fetch_document(entry, path)


def extract_images(
    document: bytes,
    filing: FilingRecord,
    fetch: ImageFetcher,
    pre_classifier: PreClassifier | None = None,
) -> ExtractionResult:
    """Collect image references from HTML markup, fetch them, and dedupe by checksum.

    Per-image failures become diagnostics; the remaining assets still extract.
    """
    if filing.source_format != "html":
        return ExtractionResult(assets=[], image_bytes={}, diagnostics=[])
    pre_classifier = pre_classifier or PreClassifier()
    text = document.decode("latin-1")
    seen: dict[str, ImageAsset] = {}
    blobs: dict[str, bytes] = {}
    diagnostics: list[str] = []
    for match in _IMG_SRC_RE.finditer(text):
        src = match.group("src")
        if src.startswith(("http:", "https:", "data:")):
            diagnostics.append(f"skipped non-archive image source {src!r}")
            continue
        try:
            body, content_type = fetch(src)
        except (NetworkError, KeyError, OSError) as exc:
            diagnostics.append(f"image {src!r}: {exc}")
            continue
        checksum = hashlib.sha256(body).hexdigest()
        if checksum in seen:
            continue
        seen[checksum] = ImageAsset(
            filing_ref=filing.accession_number,
            file_name=src,
            byte_checksum=checksum,
            media_type=content_type or guess_content_type(src),
            classifier_class=pre_classifier.classify(body),
        )
        blobs[checksum] = body
    return ExtractionResult(assets=list(seen.values()), image_bytes=blobs, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# Ensemble voting
# ---------------------------------------------------------------------------


def _parse_class_vote(reply: str) -> str:
    payload = json.loads(reply)
    label = payload["image_class"]
    if label not in IMAGE_CLASSES:
        raise ValueError(f"image_class must be one of {IMAGE_CLASSES}, got {label!r}")
    return label


def classify_votes(
    asset: ImageAsset,
    image_bytes: bytes,
    judges: list[JudgeAdapter],
    retry_budget: int = 1,
) -> tuple[ImageAsset, list[str]]:
    """Collect one five-way class vote per judge; failed judges are excluded from totals."""
    if not judges:
        raise ValueError("at least one judge is required")
    prompt = render_template("image_class")
    votes: dict[str, str] = {}
    diagnostics: list[str] = []
    for judge in judges:
        vote = None
        error: Exception | None = None
        for _ in range(retry_budget + 1):
            try:
                vote = _parse_class_vote(judge.complete(prompt, image=image_bytes))
                break
            except JudgeUnavailable as exc:
                error = exc
                break
            except (ValueError, KeyError, TypeError) as exc:
                error = exc
        if vote is None:
            diagnostics.append(f"{judge.judge_id}: excluded ({error})")
        else:
            votes[judge.judge_id] = vote
    if not votes:
        raise AllJudgesFailed(f"no usable votes for {asset.item_id}")
    counts = Counter(votes.values())
    top = counts.most_common(1)[0][1]
    updated = replace(asset, class_votes=votes, agreement=(top, len(votes)))
    return updated, diagnostics


def aggregate_label(asset: ImageAsset, vote_threshold: float = DEFAULT_VOTE_THRESHOLD) -> ImageAsset:
    """Assign the modal class when its vote share strictly exceeds the threshold.

    Exact ties and sub-threshold maxima stay Unresolved (final_class None) for review.
    """
    max_votes, total = asset.agreement
    if total == 0:
        return replace(asset, final_class=None)
    counts = Counter(asset.class_votes.values())
    ranked = counts.most_common()
    modal_unique = len(ranked) == 1 or ranked[0][1] > ranked[1][1]
    if modal_unique and max_votes / total > vote_threshold:
        return replace(asset, final_class=ranked[0][0], decided_by="policy")
    return replace(asset, final_class=None)


def verify_chart(
    asset: ImageAsset,
    image_bytes: bytes,
    judges: list[JudgeAdapter],
    retry_budget: int = 1,
) -> tuple[ImageAsset, list[str]]:
    """Binary chart verification by majority over the ensemble; malformed judges excluded."""
    prompt = render_template("chart_verify")
    answers: list[bool] = []
    diagnostics: list[str] = []
    for judge in judges:
        answer = None
        error: Exception | None = None
        for _ in range(retry_budget + 1):
            try:
                payload = json.loads(judge.complete(prompt, image=image_bytes))
                flag = payload["is_chart"]
                if not isinstance(flag, bool):
                    raise ValueError(f"is_chart must be boolean, got {flag!r}")
                answer = flag
                break
            except JudgeUnavailable as exc:
                error = exc
                break
            except (ValueError, KeyError, TypeError) as exc:
                error = exc
        if answer is None:
            diagnostics.append(f"{judge.judge_id}: excluded ({error})")
        else:
            answers.append(answer)
    if not answers:
        raise AllJudgesFailed(f"no usable chart verifications for {asset.item_id}")
    verified = sum(answers) * 2 > len(answers)
    return replace(asset, verified=verified), diagnostics


# ---------------------------------------------------------------------------
# Agreement buckets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VoteBucketRow:
    agree: int
    ensemble_size: int
    total: int
    per_class: dict[str, int]
    human_matched: int | None = None
    human_labeled: int | None = None

    @property
    def key(self) -> str:
        return f"{self.agree}/{self.ensemble_size}"

    @property
    def human_match_ratio(self) -> float | None:
        if not self.human_labeled:
            return None
        return self.human_matched / self.human_labeled


@dataclass(frozen=True)
class VoteBucketReport:
    ensemble_size: int
    rows: tuple[VoteBucketRow, ...]

    def row(self, key: str) -> VoteBucketRow:
        for row in self.rows:
            if row.key == key:
                return row
        raise KeyError(key)


def _modal_class(asset: ImageAsset) -> str | None:
    counts = Counter(asset.class_votes.values())
    if not counts:
        return None
    ranked = counts.most_common()
    if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        return None
    return ranked[0][0]


def bucket_report(
    assets: list[ImageAsset],
    human_labels: dict[str, str] | None = None,
    ensemble_size: int | None = None,
) -> VoteBucketReport:
    """Group assets by agreement level expressed at the ensemble size.

    Assets whose judges partially failed are rescaled (agree = round(fraction * size))
    so a unanimous 6/6 lands in the unanimity bucket of an 8-model ensemble.
    """
    human_labels = human_labels or {}
    rated = [a for a in assets if a.agreement[1] > 0]
    if ensemble_size is None:
        ensemble_size = max((a.agreement[1] for a in rated), default=0)
    buckets: dict[int, list[ImageAsset]] = {}
    for asset in rated:
        max_votes, total = asset.agreement
        agree = round(max_votes / total * ensemble_size)
        buckets.setdefault(agree, []).append(asset)

    rows = []
    for agree in sorted(buckets, reverse=True):
        members = buckets[agree]
        per_class: Counter = Counter()
        matched = 0
        labeled = 0
        for asset in members:
            modal = _modal_class(asset)
            if modal is not None:
                per_class[modal] += 1
            if asset.item_id in human_labels and modal is not None:
                labeled += 1
                if human_labels[asset.item_id] == modal:
                    matched += 1
        rows.append(
            VoteBucketRow(
                agree=agree,
                ensemble_size=ensemble_size,
                total=len(members),
                per_class=dict(per_class),
                human_matched=matched if labeled else None,
                human_labeled=labeled if labeled else None,
            )
        )
    return VoteBucketReport(ensemble_size=ensemble_size, rows=tuple(rows))
