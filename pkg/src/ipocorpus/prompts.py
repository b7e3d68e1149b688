"""Prompt template loading and slot substitution.

Templates live as data files and are rendered by replacing ``{slot}`` tokens only;
literal braces elsewhere in a template (JSON schema examples) are left untouched,
so rendered output is byte-identical to the template outside the slots.
"""
from __future__ import annotations

import json
from importlib import resources

TEMPLATE_FILES = {
    "section_complete_binary": "section_complete_binary.txt",
    "section_complete_likert": "section_complete_likert.txt",
    "chart_verify": "chart_verify.txt",
    "image_class": "image_class.txt",
    "chart_features": "chart_features.txt",
    "misleading_nocot": "misleading_nocot.txt",
    "misleading_cot": "misleading_cot.txt",
}

_cache: dict[str, str] = {}


def load_template(name: str) -> str:
    if name not in TEMPLATE_FILES:
        raise KeyError(f"unknown prompt template {name!r}; known: {sorted(TEMPLATE_FILES)}")
    if name not in _cache:
        _cache[name] = (
            resources.files("ipocorpus")
            .joinpath("prompts")
            .joinpath(TEMPLATE_FILES[name])
            .read_text(encoding="utf-8")
        )
    return _cache[name]


def render(template: str, **slots: str) -> str:
    rendered = template
    for key, value in slots.items():
        token = "{" + key + "}"
        if token not in rendered:
            raise KeyError(f"template has no slot {token}")
        rendered = rendered.replace(token, value)
    return rendered


def render_template(name: str, **slots: str) -> str:
    return render(load_template(name), **slots)


def default_examples() -> dict[str, str]:
    """Few-shot blocks for the completeness validators; configuration, not code."""
    payload = json.loads(
        resources.files("ipocorpus.data").joinpath("validator_examples.json").read_text(encoding="utf-8")
    )
    return {"binary": payload["binary"], "likert": payload["likert"]}
