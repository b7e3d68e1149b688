from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ipocorpus.images import (
    IMAGE_CLASSES,
    AllJudgesFailed,
    ImageAsset,
    aggregate_label,
    bucket_report,
    classify_votes,
    extract_images,
    verify_chart,
)
from ipocorpus.judges import ScriptedJudge
from ipocorpus.model import FilingRecord

from synthetic import AGREEMENT_TABLE, build_agreement_corpus


def _asset(votes: dict[str, str], total: int | None = None) -> ImageAsset:
    top = max((list(votes.values()).count(c) for c in set(votes.values())), default=0)
    return ImageAsset(
        filing_ref="0001193125-11-123456",
        file_name="g001.gif",
        byte_checksum="ab" * 16,
        media_type="image/gif",
        class_votes=votes,
        agreement=(top, total if total is not None else len(votes)),
    )


def _class_reply(label: str) -> str:
    return json.dumps({"image_class": label, "justification": "scripted"})


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------


def _html_filing(meta: dict) -> FilingRecord:
    from datetime import date

    return FilingRecord(
        cik=meta["cik"],
        accession_number=meta["accession_number"],
        form_type=meta["form_type"],
        filing_date=date.fromisoformat(meta["filing_date"]),
        sic_code=meta["sic_code"],
        source_format=meta["source_format"],
        primary_document=meta["primary_document"],
    )


def test_duplicate_tags_dedupe_by_checksum(corpus):
    meta, doc, golden = corpus["0001193125-11-123456"]
    from conftest import CORPUS_DIR

    def fetch(path):
        return (CORPUS_DIR / meta["accession_number"] / path).read_bytes(), "image/gif"

    result = extract_images(doc, _html_filing(meta), fetch)
    assert golden["image_tag_count"] == 3
    assert len(result.assets) == 2
    assert sorted(a.file_name for a in result.assets) == golden["image_files"]


def test_ascii_filing_yields_no_images(corpus):
    meta, doc, golden = corpus["0000912057-97-001234"]

    def fetch(path):
        raise AssertionError("must not fetch for ascii filings")

    result = extract_images(doc, _html_filing(meta), fetch)
    assert result.assets == [] and result.diagnostics == []


def test_broken_link_keeps_other_assets(corpus):
    meta, doc, golden = corpus["0001047469-19-005678"]
    from conftest import CORPUS_DIR

    def fetch(path):
        if path == "branchmap.gif":
            raise OSError("boom")
        return (CORPUS_DIR / meta["accession_number"] / path).read_bytes(), "image/gif"

    result = extract_images(doc, _html_filing(meta), fetch)
    assert len(result.diagnostics) == 1 and "branchmap.gif" in result.diagnostics[0]
    assert len(result.assets) == len(golden["image_files"]) - 1


# ---------------------------------------------------------------------------
# voting
# ---------------------------------------------------------------------------


def test_unanimous_ensemble():
    judges = [ScriptedJudge(f"j{i}", [_class_reply("Chart")]) for i in range(8)]
    asset, diagnostics = classify_votes(_asset({}), b"png", judges)
    assert asset.agreement == (8, 8) and not diagnostics


def test_split_vote_counting():
    judges = [ScriptedJudge(f"j{i}", [_class_reply("Chart" if i < 5 else "Infographic")]) for i in range(8)]
    asset, _ = classify_votes(_asset({}), b"png", judges)
    assert asset.agreement == (5, 8)


def test_failed_judges_excluded_from_totals():
    judges = [ScriptedJudge(f"j{i}", [ScriptedJudge.FAIL]) for i in range(2)]
    judges += [ScriptedJudge(f"j{i+2}", [_class_reply("Logo")]) for i in range(6)]
    asset, diagnostics = classify_votes(_asset({}), b"png", judges)
    assert asset.agreement == (6, 6)
    assert len(diagnostics) == 2


def test_all_judges_failed():
    judges = [ScriptedJudge("j0", [ScriptedJudge.FAIL]), ScriptedJudge("j1", ["not json"] * 2)]
    with pytest.raises(AllJudgesFailed):
        classify_votes(_asset({}), b"png", judges)


def test_vote_count_conservation():
    rng = random.Random(7)
    for _ in range(50):
        votes = {f"j{i}": rng.choice(IMAGE_CLASSES) for i in range(rng.randint(1, 8))}
        asset = _asset(votes)
        from collections import Counter

        counts = Counter(votes.values())
        assert sum(counts.values()) == asset.agreement[1]
        assert max(counts.values()) == asset.agreement[0]


# ---------------------------------------------------------------------------
# aggregation threshold
# ---------------------------------------------------------------------------


def test_five_of_eight_is_labeled():
    votes = {f"j{i}": ("Chart" if i < 5 else "Infographic") for i in range(8)}
    assert aggregate_label(_asset(votes)).final_class == "Chart"


def test_even_split_is_unresolved():
    votes = {f"j{i}": ("Chart" if i < 4 else "Infographic") for i in range(8)}
    assert aggregate_label(_asset(votes)).final_class is None


def test_single_judge_majority():
    assert aggregate_label(_asset({"j0": "Map"})).final_class == "Map"


def test_threshold_monotonicity_random_corpus():
    rng = random.Random(13)
    corpus = []
    for _ in range(400):
        votes = {f"j{i}": rng.choice(IMAGE_CLASSES) for i in range(8)}
        corpus.append(_asset(votes))
    previous: set[int] | None = None
    for threshold in (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9):
        labeled = {i for i, a in enumerate(corpus) if aggregate_label(a, threshold).final_class}
        if previous is not None:
            assert labeled <= previous
        previous = labeled


# ---------------------------------------------------------------------------
# chart verification
# ---------------------------------------------------------------------------


def _verify_reply(flag: bool) -> str:
    return json.dumps({"is_chart": flag, "chart_justification": "scripted"})


def test_verify_majority_true():
    judges = [ScriptedJudge(f"j{i}", [_verify_reply(True)]) for i in range(5)]
    asset, _ = verify_chart(_asset({"j0": "Chart"}), b"png", judges)
    assert asset.verified is True


def test_verify_majority_false():
    judges = [ScriptedJudge(f"j{i}", [_verify_reply(i < 2)]) for i in range(5)]
    asset, _ = verify_chart(_asset({"j0": "Chart"}), b"png", judges)
    assert asset.verified is False


def test_verify_malformed_judge_excluded():
    judges = [ScriptedJudge("j0", ["garbage"] * 2)]
    judges += [ScriptedJudge(f"j{i+1}", [_verify_reply(True)]) for i in range(2)]
    asset, diagnostics = verify_chart(_asset({"j0": "Chart"}), b"png", judges)
    assert asset.verified is True
    assert len(diagnostics) == 1


# ---------------------------------------------------------------------------
# agreement buckets
# ---------------------------------------------------------------------------


def test_bucket_report_reproduces_published_shapes():
    assets, human_labels = build_agreement_corpus()
    report = bucket_report(assets, human_labels)
    for agree, spec in AGREEMENT_TABLE.items():
        row = report.row(f"{agree}/8")
        assert row.total == spec["total"]
        for cls, count in spec["classes"].items():
            assert row.per_class.get(cls, 0) == count
    seven = report.row("7/8")
    assert (seven.human_matched, seven.human_labeled) == (997, 1000)
    assert seven.human_match_ratio == 997 / 1000


def test_higher_agreement_weakly_higher_match():
    assets, human_labels = build_agreement_corpus()
    report = bucket_report(assets, human_labels)
    ratios = [row.human_match_ratio for row in report.rows if row.human_match_ratio is not None]
    assert ratios == sorted(ratios, reverse=True)


def test_bucket_rescaling_at_ensemble_size():
    unanimous_small = _asset({f"j{i}": "Logo" for i in range(6)})  # 6/6 with 2 judges down
    report = bucket_report([unanimous_small], ensemble_size=8)
    assert report.rows[0].key == "8/8"


def test_all_unanimous_corpus():
    assets = [_asset({f"j{i}": "Chart" for i in range(8)}) for _ in range(3)]
    labels = {a.item_id: "Chart" for a in assets}
    report = bucket_report(assets, labels)
    assert len(report.rows) == 1
    assert report.rows[0].key == "8/8"
    assert report.rows[0].human_match_ratio == 1.0


def test_empty_corpus():
    report = bucket_report([])
    assert report.rows == ()
