from __future__ import annotations

import json
from datetime import date

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ipocorpus.charts import (
    CHART_TYPES,
    ChartFeatureSet,
    DanglingReference,
    MisleadingnessRating,
    aggregate_ratings,
    extract_features,
    property_subsets,
    rate_misleadingness,
    stratified_sample,
)
from ipocorpus.images import ImageAsset
from ipocorpus.judges import MalformedJudgeOutput, ScriptedJudge
from ipocorpus.model import FilingRecord

from oracles import mean_by_cells


def _chart_asset(name: str = "c", filing: str = "0001193125-11-123456") -> ImageAsset:
    return ImageAsset(
        filing_ref=filing,
        file_name=f"{name}.gif",
        byte_checksum=(name * 40)[:40],
        media_type="image/gif",
        class_votes={"j0": "Chart"},
        agreement=(1, 1),
        final_class="Chart",
        verified=True,
    )


def _feature_reply(**overrides) -> str:
    payload = {
        "chart_type": "Bar",
        "has_data_table": False,
        "has_axis_labels": True,
        "has_legend": True,
        "num_y_axes": 1,
        "y_axis_starts_at_zero": True,
        "tick_spacing_consistent": True,
        "uses_3d": False,
        "color_mode": "color",
    }
    payload.update(overrides)
    return json.dumps(payload)


# ---------------------------------------------------------------------------
# feature extraction
# ---------------------------------------------------------------------------


def test_majority_wins_per_field():
    judges = [
        ScriptedJudge("j0", [_feature_reply(num_y_axes=2)]),
        ScriptedJudge("j1", [_feature_reply(num_y_axes=2)]),
        ScriptedJudge("j2", [_feature_reply(num_y_axes=2)]),
    ]
    features, _ = extract_features(_chart_asset(), b"png", judges)
    assert features.num_y_axes == 2
    assert features.tied_fields == ()


@pytest.mark.parametrize(
    "field,values,expected",
    [
        ("uses_3d", [True, True, False, False], False),
        ("y_axis_starts_at_zero", [True, True, False, False], True),
        ("chart_type", ["Bar", "Bar", "Line", "Line"], "Other"),
        ("has_data_table", [True, True, False, False], False),
        ("has_axis_labels", [True, True, False, False], True),
        ("has_legend", [True, True, False, False], True),
        ("tick_spacing_consistent", [True, True, False, False], True),
        ("num_y_axes", [1, 1, 2, 2], 1),
        ("color_mode", ["grayscale", "grayscale", "color", "color"], "color"),
    ],
)
def test_tie_resolves_to_conservative_value(field, values, expected):
    judges = [ScriptedJudge(f"j{i}", [_feature_reply(**{field: v})]) for i, v in enumerate(values)]
    features, _ = extract_features(_chart_asset(), b"png", judges)
    assert getattr(features, field) == expected
    assert field in features.tied_fields


def test_unverified_asset_rejected():
    asset = _chart_asset()
    unverified = ImageAsset(**{**asset.to_row(), "agreement": (1, 1), "verified": False})
    judges = [ScriptedJudge("j0", [_feature_reply()])]
    with pytest.raises(ValueError, match="not a verified chart"):
        extract_features(unverified, b"png", judges)


def test_malformed_feature_judge_excluded():
    judges = [
        ScriptedJudge("bad", ["{}"] * 2),
        ScriptedJudge("j1", [_feature_reply(uses_3d=True)]),
        ScriptedJudge("j2", [_feature_reply(uses_3d=True)]),
    ]
    features, diagnostics = extract_features(_chart_asset(), b"png", judges)
    assert features.uses_3d is True
    assert len(diagnostics) == 1 and "bad" in diagnostics[0]


def test_subset_tags_for_3d_bar():
    judges = [ScriptedJudge("j0", [_feature_reply(chart_type="Bar", uses_3d=True)])]
    features, _ = extract_features(_chart_asset(), b"png", judges)
    assert "3DB" in property_subsets(features)


@given(
    st.sampled_from(CHART_TYPES),
    st.booleans(),
    st.integers(min_value=1, max_value=3),
    st.booleans(),
    st.sampled_from(["grayscale", "color"]),
)
def test_color_partition_is_exclusive(chart_type, uses_3d, axes, zero, mode):
    features = ChartFeatureSet(
        chart_type=chart_type,
        has_data_table=False,
        has_axis_labels=True,
        has_legend=True,
        num_y_axes=axes,
        y_axis_starts_at_zero=zero,
        tick_spacing_consistent=True,
        uses_3d=uses_3d,
        color_mode=mode,
    )
    tags = property_subsets(features)
    assert ("GRA" in tags) != ("COL" in tags)
    if "3DP" in tags:
        assert chart_type == "Pie" and uses_3d
    if "TRC" in tags:
        assert not zero


# ---------------------------------------------------------------------------
# misleadingness rating
# ---------------------------------------------------------------------------


def test_rating_parse():
    judge = ScriptedJudge("m1", [json.dumps({"score": 3, "justification": "ok"})])
    rating = rate_misleadingness(_chart_asset(), b"png", judge, "nocot")
    assert rating.score == 3
    assert rating.rater_id == "m1:nocot"


def test_rating_out_of_range():
    judge = ScriptedJudge("m1", [json.dumps({"score": 6, "justification": "x"})] * 2)
    with pytest.raises(MalformedJudgeOutput):
        rate_misleadingness(_chart_asset(), b"png", judge, "nocot", retry_budget=1)


def test_cot_requires_reasoning_field():
    judge = ScriptedJudge("m1", [json.dumps({"score": 2, "justification": "x"})] * 2)
    with pytest.raises(MalformedJudgeOutput):
        rate_misleadingness(_chart_asset(), b"png", judge, "cot", retry_budget=1)
    judge = ScriptedJudge(
        "m1", [json.dumps({"reasoning": "axes fine", "score": 2, "justification": "x"})]
    )
    assert rate_misleadingness(_chart_asset(), b"png", judge, "cot").score == 2


# ---------------------------------------------------------------------------
# aggregation fixture (human overall mean engineered to 2.48)
# ---------------------------------------------------------------------------

_DIVISION_SIC = {
    "AFF": "0200", "MIN": "1040", "CON": "1600", "MAN": "2834", "TRN": "4512",
    "WHO": "5045", "RET": "5411", "FIRE": "6022", "SER": "7372", "OU": "9995",
}

_CHART_SPECS = {
    # asset -> (division, feature overrides, expected subset tags)
    "c0": ("AFF", dict(chart_type="Pie", uses_3d=True), {"3DP", "COL"}),
    "c1": ("MIN", dict(chart_type="Bar", uses_3d=True, color_mode="grayscale"), {"3DB", "GRA"}),
    "c2": ("CON", dict(chart_type="Line", num_y_axes=2), {"2YA", "COL"}),
    "c3": ("MAN", dict(chart_type="Bar", y_axis_starts_at_zero=False), {"TRC", "COL"}),
    "c4": ("TRN", dict(chart_type="Combo"), {"COM", "COL"}),
    "c5": ("WHO", dict(chart_type="Line", color_mode="grayscale"), {"GRA"}),
    "c6": ("RET", dict(chart_type="Bar"), {"COL"}),
    "c7": ("FIRE", dict(chart_type="Pie", color_mode="grayscale"), {"GRA"}),
    "c8": ("SER", dict(chart_type="Other"), {"COL"}),
    "c9": ("OU", dict(chart_type="Combo", color_mode="grayscale"), {"COM", "GRA"}),
}

_HUMAN_SCORES = {
    "human:a1": [3, 2, 3, 2, 3, 2, 3, 2, 3, 2],
    "human:a2": [2, 3, 2, 3, 2, 3, 2, 3, 2, 3],
    "human:a3": [3, 2, 3, 2, 2],  # first five charts only
}

_MODEL_SCORES = {
    "mx:nocot": [1, 2, 3, 4, 5, 1, 2, 3, 4, 5],
    "mx:cot": [2, 2, 2, 3, 3, 3, 4, 4, 1, 1],
}


def _fixture():
    base = dict(
        has_data_table=False, has_axis_labels=True, has_legend=True, num_y_axes=1,
        y_axis_starts_at_zero=True, tick_spacing_consistent=True, uses_3d=False,
        color_mode="color", chart_type="Bar",
    )
    features, filings, asset_filing, memberships, assets = {}, {}, {}, {}, {}
    for index, (name, (division, overrides, tags)) in enumerate(_CHART_SPECS.items()):
        accession = f"0000000000-21-{index:06d}"
        filings[accession] = FilingRecord(
            cik=str(9000000 + index).zfill(10),
            accession_number=accession,
            form_type="S-1",
            filing_date=date(2021, 1, 1),
            sic_code=_DIVISION_SIC[division],
            source_format="html",
            primary_document="p.htm",
        )
        asset = _chart_asset(name, filing=accession)
        assets[name] = asset
        features[asset.item_id] = ChartFeatureSet(**{**base, **overrides})
        asset_filing[asset.item_id] = accession
        memberships[asset.item_id] = {division, "ALL"} | tags

    ratings = []
    oracle_rows = []
    chart_ids = [assets[f"c{i}"].item_id for i in range(10)]
    for rater, scores in {**_HUMAN_SCORES, **_MODEL_SCORES}.items():
        group = "human" if rater.startswith("human:") else rater
        for chart_id, score in zip(chart_ids, scores):
            ratings.append(MisleadingnessRating(asset_ref=chart_id, rater_id=rater, score=score))
            oracle_rows.append((chart_id, group, score))
    return ratings, features, filings, asset_filing, memberships, oracle_rows


def test_subset_declarations_match_predicates():
    _, features, _, asset_filing, memberships, _ = _fixture()
    for item_id, feature_set in features.items():
        declared = memberships[item_id] - {"ALL"} - set(_DIVISION_SIC)
        assert property_subsets(feature_set) == declared


def test_human_overall_mean_is_2_48():
    ratings, features, filings, asset_filing, memberships, oracle_rows = _fixture()
    report = aggregate_ratings(ratings, features, filings, asset_filing)
    assert abs(report.cell("human", "ALL") - 2.48) < 1e-9


def test_every_cell_matches_oracle():
    ratings, features, filings, asset_filing, memberships, oracle_rows = _fixture()
    report = aggregate_ratings(ratings, features, filings, asset_filing)
    expected = mean_by_cells(oracle_rows, memberships)
    for (group, column), want in expected.items():
        got = report.cell(group, column)
        assert got is not None, (group, column)
        assert abs(got - want) < 1e-9, (group, column)
    # and nothing extra: absent cells stay empty, not zero
    for group, columns in report.cells.items():
        for column, value in columns.items():
            assert (group, column) in expected


def test_single_rating_cell():
    ratings, features, filings, asset_filing, *_ = _fixture()
    fire_chart = next(r for r in ratings if r.rater_id == "human:a1" and "c7" in r.asset_ref)
    single = [MisleadingnessRating(asset_ref=fire_chart.asset_ref, rater_id="human:solo", score=4)]
    report = aggregate_ratings(single, features, filings, asset_filing)
    assert report.cell("human", "FIRE") == 4.0
    assert report.cell("human", "ALL") == 4.0


def test_opposite_scores_average():
    ratings, features, filings, asset_filing, *_ = _fixture()
    ref = ratings[0].asset_ref
    pair = [
        MisleadingnessRating(asset_ref=ref, rater_id="human:a", score=1),
        MisleadingnessRating(asset_ref=ref, rater_id="human:b", score=5),
    ]
    report = aggregate_ratings(pair, features, filings, asset_filing)
    assert report.cell("human", "ALL") == 3.0


def test_duplicating_ratings_preserves_means():
    ratings, features, filings, asset_filing, memberships, _ = _fixture()
    once = aggregate_ratings(ratings, features, filings, asset_filing)
    twice = aggregate_ratings(ratings + ratings, features, filings, asset_filing)
    assert once.cells == twice.cells


def test_regime_separation():
    ratings, features, filings, asset_filing, *_ = _fixture()
    report = aggregate_ratings(ratings, features, filings, asset_filing)
    assert "mx:nocot" in report.cells and "mx:cot" in report.cells
    assert report.cell("mx:nocot", "ALL") != report.cell("mx:cot", "ALL")


def test_dangling_reference():
    ratings, features, filings, asset_filing, *_ = _fixture()
    orphan = [MisleadingnessRating(asset_ref="image:unknown:deadbeef", rater_id="human:a", score=3)]
    with pytest.raises(DanglingReference):
        aggregate_ratings(orphan, features, filings, asset_filing)


def test_stratified_sample_is_seeded_and_stratified():
    ratings, features, filings, asset_filing, *_ = _fixture()
    assets = []
    for item_id, accession in asset_filing.items():
        name = item_id.split(":")[2][:2]
        assets.append(_chart_asset(name, filing=accession))
    first = stratified_sample(assets, filings, per_division=1, seed=11)
    second = stratified_sample(assets, filings, per_division=1, seed=11)
    assert [a.item_id for a in first] == [a.item_id for a in second]
    assert len(first) == 10  # one per division incl. fallback
