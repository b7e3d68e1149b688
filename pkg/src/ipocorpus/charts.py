"""Chart visual attributes and misleadingness rating aggregation.

Feature fields aggregate across judges by per-field majority vote; ties resolve to
the conservative value, biasing against false misleadingness findings. Ratings are
grouped by rater id ("human:<annotator>" or "<model>:<regime>") so the two prompting
regimes of one model never mix in a report cell.
"""
from __future__ import annotations

import json
import random
from collections import Counter, defaultdict
from dataclasses import dataclass
from statistics import mean

from .images import ImageAsset
from .judges import AllJudgesFailed, JudgeAdapter, JudgeUnavailable, MalformedJudgeOutput
from .model import DivisionMap, FilingRecord
from .prompts import render_template

CHART_TYPES = ("Bar", "Line", "Pie", "Combo", "Other")
COLOR_MODES = ("grayscale", "color")
RATING_REGIMES = ("nocot", "cot")
PROPERTY_TAGS = ("3DP", "3DB", "2YA", "TRC", "COM", "GRA", "COL")


class DanglingReference(KeyError):
    """A rating references an asset with no known features or filing."""


@dataclass(frozen=True)
class ChartFeatureSet:
    chart_type: str
    has_data_table: bool
    has_axis_labels: bool
    has_legend: bool
    num_y_axes: int
    y_axis_starts_at_zero: bool
    tick_spacing_consistent: bool
    uses_3d: bool
    color_mode: str
    tied_fields: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.chart_type not in CHART_TYPES:
            raise ValueError(f"chart_type must be one of {CHART_TYPES}")
        if self.color_mode not in COLOR_MODES:
            raise ValueError(f"color_mode must be one of {COLOR_MODES}")
        if self.num_y_axes < 1:
            raise ValueError("num_y_axes must be >= 1")

    def to_row(self) -> dict:
        return {
            "chart_type": self.chart_type,
            "has_data_table": self.has_data_table,
            "has_axis_labels": self.has_axis_labels,
            "has_legend": self.has_legend,
            "num_y_axes": self.num_y_axes,
            "y_axis_starts_at_zero": self.y_axis_starts_at_zero,
            "tick_spacing_consistent": self.tick_spacing_consistent,
            "uses_3d": self.uses_3d,
            "color_mode": self.color_mode,
            "tied_fields": list(self.tied_fields),
        }

    @classmethod
    def from_row(cls, row: dict) -> "ChartFeatureSet":
        return cls(
            chart_type=row["chart_type"],
            has_data_table=bool(row["has_data_table"]),
            has_axis_labels=bool(row["has_axis_labels"]),
            has_legend=bool(row["has_legend"]),
            num_y_axes=int(row["num_y_axes"]),
            y_axis_starts_at_zero=bool(row["y_axis_starts_at_zero"]),
            tick_spacing_consistent=bool(row["tick_spacing_consistent"]),
            uses_3d=bool(row["uses_3d"]),
            color_mode=row["color_mode"],
            tied_fields=tuple(row.get("tied_fields", ())),
        )


@dataclass(frozen=True)
class MisleadingnessRating:
    asset_ref: str  # ImageAsset.item_id
    rater_id: str
    score: int
    justification: str = ""

    def __post_init__(self) -> None:
        if self.score not in (1, 2, 3, 4, 5):
            raise ValueError(f"score must be in 1..5, got {self.score!r}")


# Conservative value used when a field vote ties (biases against misleadingness findings).
FIELD_TIE_DEFAULTS = {
    "chart_type": "Other",
    "has_data_table": False,
    "has_axis_labels": True,
    "has_legend": True,
    "num_y_axes": "min",
    "y_axis_starts_at_zero": True,
    "tick_spacing_consistent": True,
    "uses_3d": False,
    "color_mode": "color",
}

_FIELD_VALIDATORS = {
    "chart_type": lambda v: v in CHART_TYPES,
    "has_data_table": lambda v: isinstance(v, bool),
    "has_axis_labels": lambda v: isinstance(v, bool),
    "has_legend": lambda v: isinstance(v, bool),
    "num_y_axes": lambda v: isinstance(v, int) and not isinstance(v, bool) and v >= 1,
    "y_axis_starts_at_zero": lambda v: isinstance(v, bool),
    "tick_spacing_consistent": lambda v: isinstance(v, bool),
    "uses_3d": lambda v: isinstance(v, bool),
    "color_mode": lambda v: v in COLOR_MODES,
}


def _parse_feature_reply(reply: str) -> dict:
    payload = json.loads(reply)
    parsed = {}
    for name, valid in _FIELD_VALIDATORS.items():
        value = payload[name]
        if not valid(value):
            raise ValueError(f"feature field {name} has invalid value {value!r}")
        parsed[name] = value
    return parsed


def _majority_field(name: str, values: list) -> tuple[object, bool]:
    """(winning value, tied?) for one feature field across judges."""
    counts = Counter(values)
    ranked = counts.most_common()
    if len(ranked) == 1 or ranked[0][1] > ranked[1][1]:
        return ranked[0][0], False
    default = FIELD_TIE_DEFAULTS[name]
    if default == "min":
        top = ranked[0][1]
        return min(value for value, n in ranked if n == top), True
    return default, True


def extract_features(
    asset: ImageAsset,
    image_bytes: bytes,
    judges: list[JudgeAdapter],
    retry_budget: int = 1,
) -> tuple[ChartFeatureSet, list[str]]:
    """Per-field majority vote over judge feature reports; requires a verified chart."""
    if not asset.verified:
        raise ValueError(f"{asset.item_id} is not a verified chart")
    prompt = render_template("chart_features")
    reports: list[dict] = []
    diagnostics: list[str] = []
    for judge in judges:
        report = None
        error: Exception | None = None
        for _ in range(retry_budget + 1):
            try:
                report = _parse_feature_reply(judge.complete(prompt, image=image_bytes))
                break
            except JudgeUnavailable as exc:
                error = exc
                break
            except (ValueError, KeyError, TypeError) as exc:
                error = exc
        if report is None:
            diagnostics.append(f"{judge.judge_id}: excluded ({error})")
        else:
            reports.append(report)
    if not reports:
        raise AllJudgesFailed(f"no usable feature reports for {asset.item_id}")

    fields = {}
    tied = []
    for name in _FIELD_VALIDATORS:
        value, was_tied = _majority_field(name, [r[name] for r in reports])
        fields[name] = value
        if was_tied:
            tied.append(name)
    return ChartFeatureSet(**fields, tied_fields=tuple(tied)), diagnostics


# ---------------------------------------------------------------------------
# Misleadingness rating
# ---------------------------------------------------------------------------


def rate_misleadingness(
    asset: ImageAsset,
    image_bytes: bytes,
    judge: JudgeAdapter,
    regime: str,
    retry_budget: int = 1,
) -> MisleadingnessRating:
    """One 1-5 rating from one model under one prompting regime."""
    if regime not in RATING_REGIMES:
        raise ValueError(f"regime must be one of {RATING_REGIMES}")
    if not asset.verified:
        raise ValueError(f"{asset.item_id} is not a verified chart")
    template = "misleading_cot" if regime == "cot" else "misleading_nocot"
    prompt = render_template(template)
    last_error: Exception | None = None
    for _ in range(retry_budget + 1):
        reply = judge.complete(prompt, image=image_bytes)
        try:
            payload = json.loads(reply)
            score = payload["score"]
            if isinstance(score, bool) or not isinstance(score, int) or score not in (1, 2, 3, 4, 5):
                raise ValueError(f"score must be an integer in 1..5, got {score!r}")
            if regime == "cot" and not isinstance(payload.get("reasoning"), str):
                raise ValueError("cot rating requires a reasoning field")
            return MisleadingnessRating(
                asset_ref=asset.item_id,
                rater_id=f"{judge.judge_id}:{regime}",
                score=score,
                justification=str(payload.get("justification", "")),
            )
        except (ValueError, KeyError, TypeError) as exc:
            last_error = exc
    raise MalformedJudgeOutput(f"{judge.judge_id}: {last_error}")


# ---------------------------------------------------------------------------
# Property subsets and report aggregation
# ---------------------------------------------------------------------------


def property_subsets(features: ChartFeatureSet) -> set[str]:
    tags = set()
    if features.chart_type == "Pie" and features.uses_3d:
        tags.add("3DP")
    if features.chart_type == "Bar" and features.uses_3d:
        tags.add("3DB")
    if features.num_y_axes >= 2:
        tags.add("2YA")
    if not features.y_axis_starts_at_zero:
        tags.add("TRC")
    if features.chart_type == "Combo":
        tags.add("COM")
    tags.add("GRA" if features.color_mode == "grayscale" else "COL")
    return tags


@dataclass(frozen=True)
class RatingReport:
    """Mean misleadingness per (rater group x industry division) and (x property subset)."""

    divisions: tuple[str, ...]
    subsets: tuple[str, ...]
    cells: dict[str, dict[str, float]]  # rater group -> column -> mean

    def cell(self, group: str, column: str) -> float | None:
        return self.cells.get(group, {}).get(column)


def _rater_group(rater_id: str) -> str:
    if rater_id.startswith("human:"):
        return "human"
    return rater_id


def aggregate_ratings(
    ratings: list[MisleadingnessRating],
    features: dict[str, ChartFeatureSet],
    filings: dict[str, FilingRecord],
    asset_filing: dict[str, str],
    divisions: DivisionMap | None = None,
) -> RatingReport:
    """Industry- and property-subset means per rater group, with the human baseline pooled.

    Cells with zero matching ratings are absent (empty, not zero). Duplicating every
    rating leaves all cell means unchanged.
    """
    divisions = divisions or DivisionMap.default()
    division_codes = tuple(d.code for d in divisions.divisions) + (divisions.fallback.code,)
    columns: dict[str, dict[str, list[int]]] = defaultdict(lambda: defaultdict(list))

    for rating in ratings:
        if rating.asset_ref not in features:
            raise DanglingReference(f"rating references unknown chart {rating.asset_ref}")
        accession = asset_filing.get(rating.asset_ref)
        if accession is None or accession not in filings:
            raise DanglingReference(f"rating references unknown filing for {rating.asset_ref}")
        group = _rater_group(rating.rater_id)
        division = divisions.division_of(filings[accession].sic_code).code
        columns[group][division].append(rating.score)
        columns[group]["ALL"].append(rating.score)
        for tag in property_subsets(features[rating.asset_ref]):
            columns[group][tag].append(rating.score)

    cells = {
        group: {column: float(mean(scores)) for column, scores in by_column.items() if scores}
        for group, by_column in columns.items()
    }
    return RatingReport(divisions=division_codes, subsets=PROPERTY_TAGS, cells=cells)


def stratified_sample(
    assets: list[ImageAsset],
    filings: dict[str, FilingRecord],
    per_division: int,
    seed: int,
    divisions: DivisionMap | None = None,
) -> list[ImageAsset]:
    """Seeded stratified-by-division sample of verified charts; operator controls strata size."""
    divisions = divisions or DivisionMap.default()
    strata: dict[str, list[ImageAsset]] = defaultdict(list)
    for asset in assets:
        if not asset.verified:
            continue
        filing = filings.get(asset.filing_ref)
        if filing is None:
            continue
        strata[divisions.division_of(filing.sic_code).code].append(asset)
    rng = random.Random(seed)
    sample: list[ImageAsset] = []
    for code in sorted(strata):
        members = sorted(strata[code], key=lambda a: a.item_id)
        take = min(per_division, len(members))
        sample.extend(rng.sample(members, take))
    return sample
