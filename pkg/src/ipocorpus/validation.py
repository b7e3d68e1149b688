"""Section completeness verdicts: deterministic truncation rules plus dual judge signals.

A section is SafeToUse only when the binary judge says Yes, the Likert judge scores
at least 4, and no rule flag fired; hard textual evidence always outranks judge
approval. A No with Likert <= 2 is a high-confidence failure (DoNotUse); everything
else routes to manual review.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .judges import JudgeAdapter, MalformedJudgeOutput
from .prompts import render_template
from .sections import SectionText

LABEL_SAFE = "SafeToUse"
LABEL_MANUAL = "ManualReview"
LABEL_DO_NOT_USE = "DoNotUse"
VERDICT_LABELS = (LABEL_SAFE, LABEL_MANUAL, LABEL_DO_NOT_USE)

DEFAULT_MIN_TOKENS = 50

# Dangling-phrase tails that mark a mid-clause ending even without punctuation evidence.
DEFAULT_DANGLING_PHRASES = (
    "the company will",
    "as described in",
    "as discussed in",
    "in addition to the",
    "as set forth in",
)

# Cross-reference tails with no continuation after them.
_CROSSREF_END_RES = (
    re.compile(r"\bSee\s*$"),
    re.compile(r"\bas discussed in Section\b[\s\w.\-]*$", re.IGNORECASE),
)

_CONTINUATION_RE = re.compile(r"\[continued\]|continued on next page", re.IGNORECASE)

_TERMINAL_CHARS = '.!?:"'


@dataclass(frozen=True)
class RuleFlags:
    ends_mid_sentence: bool = False
    unfinished_crossref: bool = False
    continuation_marker: bool = False
    too_short: bool = False

    def any(self) -> bool:
        return (
            self.ends_mid_sentence
            or self.unfinished_crossref
            or self.continuation_marker
            or self.too_short
        )

    def to_row(self) -> dict:
        return {
            "ends_mid_sentence": self.ends_mid_sentence,
            "unfinished_crossref": self.unfinished_crossref,
            "continuation_marker": self.continuation_marker,
            "too_short": self.too_short,
        }

    @classmethod
    def from_row(cls, row: dict) -> "RuleFlags":
        return cls(**{k: bool(row[k]) for k in row})


@dataclass(frozen=True)
class JudgeResult:
    binary_answer: str
    binary_justification: str
    likert: int
    likert_justification: str
    judge_id: str

    def __post_init__(self) -> None:
        if self.binary_answer not in ("Yes", "No"):
            raise ValueError(f"binary_answer must be Yes or No, got {self.binary_answer!r}")
        if self.likert not in (1, 2, 3, 4, 5):
            raise ValueError(f"likert must be in 1..5, got {self.likert!r}")

    def to_row(self) -> dict:
        return {
            "binary_answer": self.binary_answer,
            "binary_justification": self.binary_justification,
            "likert": self.likert,
            "likert_justification": self.likert_justification,
            "judge_id": self.judge_id,
        }

    @classmethod
    def from_row(cls, row: dict) -> "JudgeResult":
        return cls(
            binary_answer=row["binary_answer"],
            binary_justification=row["binary_justification"],
            likert=int(row["likert"]),
            likert_justification=row["likert_justification"],
            judge_id=row["judge_id"],
        )


@dataclass(frozen=True)
class ValidationVerdict:
    rules: RuleFlags
    label: str
    decided_by: str = "policy"  # "policy" | "human"
    judge: JudgeResult | None = None

    def __post_init__(self) -> None:
        if self.label not in VERDICT_LABELS:
            raise ValueError(f"label must be one of {VERDICT_LABELS}")
        if self.decided_by == "policy" and self.label == LABEL_SAFE:
            if self.judge is None or self.judge.binary_answer != "Yes" or self.judge.likert < 4:
                raise ValueError("policy SafeToUse requires judge Yes with likert >= 4")


# ---------------------------------------------------------------------------
# Rule engine
# ---------------------------------------------------------------------------


def _is_heading_like(line: str) -> bool:
    stripped = line.strip()
    if not stripped or len(stripped) > 60:
        return False
    if stripped[-1] in _TERMINAL_CHARS:
        return False
    return stripped.isupper() or stripped.istitle()


def _final_content_line(text: str) -> str:
    lines = [line for line in text.splitlines() if line.strip()]
    for line in reversed(lines):
        if not _is_heading_like(line):
            return line.strip()
    return lines[-1].strip() if lines else ""


def run_rules(
    section: SectionText,
    min_tokens: int = DEFAULT_MIN_TOKENS,
    dangling_phrases: tuple[str, ...] = DEFAULT_DANGLING_PHRASES,
) -> RuleFlags:
    """Reproducible truncation evidence computed from filtered text alone."""
    text = section.filtered_text
    stripped = text.rstrip()
    final_line = _final_content_line(text)

    ends_ok = bool(final_line) and final_line[-1] in _TERMINAL_CHARS
    lowered = final_line.casefold().rstrip()
    dangling = any(lowered.endswith(phrase) for phrase in dangling_phrases)
    ends_mid_sentence = bool(final_line) and (not ends_ok or dangling)

    unfinished_crossref = any(pattern.search(stripped[-160:]) for pattern in _CROSSREF_END_RES)
    continuation_marker = bool(_CONTINUATION_RE.search(stripped[-200:]))
    too_short = section.token_count_filtered < min_tokens

    return RuleFlags(
        ends_mid_sentence=ends_mid_sentence,
        unfinished_crossref=unfinished_crossref,
        continuation_marker=continuation_marker,
        too_short=too_short,
    )


# ---------------------------------------------------------------------------
# Judge calls
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BinaryJudgement:
    answer: str
    justification: str
    retries: int


@dataclass(frozen=True)
class LikertJudgement:
    score: int
    justification: str
    retries: int


def _ask_judge(adapter: JudgeAdapter, prompt: str, parse, retry_budget: int):
    last_error = None
    for attempt in range(retry_budget + 1):
        reply = adapter.complete(prompt)
        try:
            return parse(reply), attempt
        except (ValueError, KeyError, TypeError) as exc:
            last_error = exc
    raise MalformedJudgeOutput(
        f"{adapter.judge_id}: no valid reply in {retry_budget + 1} attempts ({last_error})"
    )


def _parse_binary(reply: str) -> tuple[str, str]:
    payload = json.loads(reply)
    answer = payload["Answer"]
    justification = payload["Justification"]
    if answer not in ("Yes", "No") or not isinstance(justification, str):
        raise ValueError(f"Answer must be Yes/No with string Justification, got {payload!r}")
    return answer, justification


def _parse_likert(reply: str) -> tuple[int, str]:
    payload = json.loads(reply)
    answer = payload["Answer"]
    justification = payload["Justification"]
    if isinstance(answer, bool) or not isinstance(answer, int) or answer not in (1, 2, 3, 4, 5):
        raise ValueError(f"Answer must be an integer in 1..5, got {answer!r}")
    if not isinstance(justification, str):
        raise ValueError("Justification must be a string")
    return answer, justification


def judge_binary(
    section_name: str,
    metadata_context: str,
    parsed_text: str,
    adapter: JudgeAdapter,
    examples: str = "",
    retry_budget: int = 2,
) -> BinaryJudgement:
    prompt = render_template(
        "section_complete_binary",
        section_name=section_name,
        metadata_context=metadata_context,
        examples=examples,
        parsed_text=parsed_text,
    )
    (answer, justification), retries = _ask_judge(adapter, prompt, _parse_binary, retry_budget)
    return BinaryJudgement(answer=answer, justification=justification, retries=retries)


def judge_likert(
    section_name: str,
    metadata_context: str,
    parsed_text: str,
    adapter: JudgeAdapter,
    examples: str = "",
    retry_budget: int = 2,
) -> LikertJudgement:
    prompt = render_template(
        "section_complete_likert",
        section_name=section_name,
        metadata_context=metadata_context,
        examples=examples,
        parsed_text=parsed_text,
    )
    (score, justification), retries = _ask_judge(adapter, prompt, _parse_likert, retry_budget)
    return LikertJudgement(score=score, justification=justification, retries=retries)


def judge_section(
    section: SectionText,
    adapter: JudgeAdapter,
    metadata_context: str = "",
    examples_binary: str = "",
    examples_likert: str = "",
    retry_budget: int = 2,
) -> JudgeResult:
    name = section.canonical_label or section.raw_title
    binary = judge_binary(
        name, metadata_context, section.filtered_text, adapter, examples_binary, retry_budget
    )
    likert = judge_likert(
        name, metadata_context, section.filtered_text, adapter, examples_likert, retry_budget
    )
    return JudgeResult(
        binary_answer=binary.answer,
        binary_justification=binary.justification,
        likert=likert.score,
        likert_justification=likert.justification,
        judge_id=adapter.judge_id,
    )


# ---------------------------------------------------------------------------
# Policy
# ---------------------------------------------------------------------------


def decide(rules: RuleFlags, judge: JudgeResult) -> str:
    """Deterministic verdict over the full signal space (total truth table)."""
    if judge.binary_answer == "Yes" and judge.likert >= 4 and not rules.any():
        return LABEL_SAFE
    if judge.binary_answer == "No" and judge.likert <= 2:
        return LABEL_DO_NOT_USE
    return LABEL_MANUAL


def verdict_for(section: SectionText, rules: RuleFlags, judge: JudgeResult | None) -> ValidationVerdict:
    """Attach a policy verdict; rules-only calls (dry runs) always route to manual review."""
    if judge is None:
        return ValidationVerdict(rules=rules, label=LABEL_MANUAL, decided_by="policy", judge=None)
    return ValidationVerdict(rules=rules, label=decide(rules, judge), decided_by="policy", judge=judge)


def metadata_context_for(form_type: str, filing_date: str, accession: str, sic_code: str) -> str:
    return (
        f"Filing context: form {form_type}, filed {filing_date}, "
        f"accession {accession}, SIC {sic_code}."
    )
