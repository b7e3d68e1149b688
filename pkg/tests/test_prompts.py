from __future__ import annotations

from pathlib import Path

import pytest

from ipocorpus.prompts import default_examples, load_template, render, render_template

GOLDEN = Path(__file__).parent / "golden"

SLOTS = dict(
    section_name="Risk Factors",
    metadata_context="Filing context: form S-1, filed 1997-03-12, accession 0000912057-97-001234, SIC 1040.",
    examples="[EXAMPLES BLOCK]",
    parsed_text="[PARSED TEXT]",
)


def test_binary_render_matches_golden_bytes():
    rendered = render_template("section_complete_binary", **SLOTS)
    assert rendered.encode() == (GOLDEN / "rendered_section_binary.txt").read_bytes()


def test_likert_render_matches_golden_bytes():
    rendered = render_template("section_complete_likert", **SLOTS)
    assert rendered.encode() == (GOLDEN / "rendered_section_likert.txt").read_bytes()


@pytest.mark.parametrize(
    "name",
    ["chart_verify", "image_class", "chart_features", "misleading_nocot", "misleading_cot"],
)
def test_image_prompt_templates_match_golden_bytes(name):
    assert load_template(name).encode() == (GOLDEN / f"rendered_{name}.txt").read_bytes()


def test_render_touches_only_substitution_slots():
    template = load_template("section_complete_binary")
    rendered = render_template("section_complete_binary", **SLOTS)
    # undo the substitutions: the result must be the template byte-for-byte
    restored = rendered
    for key, value in SLOTS.items():
        restored = restored.replace(value, "{" + key + "}", 1)
    assert restored == template


def test_literal_json_braces_survive_rendering():
    rendered = render_template("section_complete_binary", **SLOTS)
    assert '{"Answer": "Yes" or "No",' in rendered
    assert ' "Justification": "Brief explanation citing specific textual evidence"}' in rendered


def test_unknown_slot_rejected():
    with pytest.raises(KeyError):
        render("no slots here", section_name="x")


def test_unknown_template_rejected():
    with pytest.raises(KeyError):
        load_template("nonexistent")


def test_default_examples_are_configuration():
    examples = default_examples()
    assert set(examples) == {"binary", "likert"}
    assert "Answer" in examples["binary"]
