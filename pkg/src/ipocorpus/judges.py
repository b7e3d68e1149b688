"""Judge adapter contract plus HTTP, scripted, and offline deterministic implementations.

An adapter sends one prompt (optionally with an image) to one model and returns raw
text. Transport is an HTTP chat-completion endpoint configured by base URL, credential
environment variable, and model name; scripted and offline adapters keep the pipeline
hermetic for tests, dry runs, and fixture corpora.
"""
from __future__ import annotations

import base64
import hashlib
import json
import os
import re
import threading
from typing import Iterable, Protocol

import requests


class JudgeUnavailable(RuntimeError):
    """The judge endpoint could not produce any reply."""


class MalformedJudgeOutput(ValueError):
    """The judge replied, but not with the required strict-JSON shape (after retries)."""


class AllJudgesFailed(RuntimeError):
    """Every judge in an ensemble failed for one item."""


class JudgeAdapter(Protocol):
    judge_id: str

    def complete(self, prompt: str, image: bytes | None = None) -> str: ...


class HttpChatJudge:
    """Chat-completion endpoint adapter (OpenAI-style JSON wire format)."""

    def __init__(
        self,
        judge_id: str,
        base_url: str,
        model: str,
        credential_env: str = "JUDGE_API_KEY",
        timeout: float = 120.0,
        max_in_flight: int = 4,
    ):
        self.judge_id = judge_id
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.credential_env = credential_env
        self.timeout = timeout
        self._gate = threading.Semaphore(max_in_flight)
        self._session = requests.Session()

    def complete(self, prompt: str, image: bytes | None = None) -> str:
        headers = {"Content-Type": "application/json"}
        credential = os.environ.get(self.credential_env)
        if credential:
            headers["Authorization"] = f"Bearer {credential}"
        if image is None:
            content: object = prompt
        else:
            encoded = base64.b64encode(image).decode("ascii")
            content = [
                {"type": "text", "text": prompt},
                {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{encoded}"}},
            ]
        payload = {"model": self.model, "messages": [{"role": "user", "content": content}]}
        with self._gate:
            try:
                resp = self._session.post(
                    f"{self.base_url}/chat/completions", json=payload, headers=headers, timeout=self.timeout
                )
            except requests.RequestException as exc:
                raise JudgeUnavailable(f"{self.judge_id}: {exc}") from exc
        if resp.status_code != 200:
            raise JudgeUnavailable(f"{self.judge_id}: HTTP {resp.status_code}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise JudgeUnavailable(f"{self.judge_id}: unexpected response shape: {exc}") from exc


class ScriptedJudge:
    """Replays canned replies in order; raising sentinel ``ScriptedJudge.FAIL`` simulates transport failure."""

    FAIL = "<<JUDGE-FAIL>>"

    def __init__(self, judge_id: str, replies: Iterable[str]):
        self.judge_id = judge_id
        self._replies = list(replies)
        self.calls: list[tuple[str, bytes | None]] = []

    def complete(self, prompt: str, image: bytes | None = None) -> str:
        self.calls.append((prompt, image))
        if not self._replies:
            raise JudgeUnavailable(f"{self.judge_id}: no scripted replies left")
        reply = self._replies.pop(0)
        if reply == self.FAIL:
            raise JudgeUnavailable(f"{self.judge_id}: scripted transport failure")
        return reply


# ---------------------------------------------------------------------------
# Offline deterministic judges: hermetic stand-ins for fixture pipelines.
# ---------------------------------------------------------------------------

_PARSED_TEXT_MARKERS = (
    "Now evaluate the following extracted text using the same criteria demonstrated in the examples above:",
    "Now rate the following extracted text using the same criteria and scale demonstrated in the examples above:",
)
_RESPOND_MARKER = "Respond ONLY with valid JSON in the following format:"

_DANGLING_TAILS = ("the company will", "as described in", "as discussed in section", "see")
_IMAGE_CLASSES = ("Chart", "Infographic", "Logo", "Map", "Other")
_CHART_TYPES = ("Bar", "Line", "Pie", "Combo", "Other")


def _extract_parsed_text(prompt: str) -> str:
    for marker in _PARSED_TEXT_MARKERS:
        if marker in prompt:
            tail = prompt.split(marker, 1)[1]
            return tail.split(_RESPOND_MARKER, 1)[0].strip()
    return prompt


def _looks_truncated(text: str) -> bool:
    stripped = text.rstrip()
    if not stripped:
        return True
    if re.search(r"\[continued\]|continued on next page", stripped[-200:], re.IGNORECASE):
        return True
    lowered = stripped.casefold()
    if any(lowered.endswith(tail) for tail in _DANGLING_TAILS):
        return True
    return stripped[-1] not in ".!?:\"')"


class OfflineTextJudge:
    """Deterministic completeness judge keyed on the same surface evidence the prompts describe."""

    def __init__(self, judge_id: str = "offline-text"):
        self.judge_id = judge_id

    def complete(self, prompt: str, image: bytes | None = None) -> str:
        text = _extract_parsed_text(prompt)
        truncated = _looks_truncated(text)
        if "Rate your confidence" in prompt:
            score = 1 if truncated else 5
            return json.dumps(
                {"Answer": score, "Justification": "offline heuristic over surface completeness signals"}
            )
        answer = "No" if truncated else "Yes"
        return json.dumps(
            {"Answer": answer, "Justification": "offline heuristic over surface completeness signals"}
        )


def _digest_int(*parts: bytes) -> int:
    h = hashlib.sha256()
    for part in parts:
        h.update(part)
    return int.from_bytes(h.digest()[:8], "big")


class OfflineImageJudge:
    """Deterministic image judge: votes derive from a stable hash of (salt, image bytes, task).

    Useful only for hermetic pipeline runs; the "opinion" is a reproducible function of
    content, so ensembles with different salts produce varied but stable vote patterns.
    """

    def __init__(self, salt: int, judge_id: str | None = None):
        self.salt = salt
        self.judge_id = judge_id or f"offline-image-{salt}"

    def complete(self, prompt: str, image: bytes | None = None) -> str:
        body = image or b""
        salt = str(self.salt).encode()
        if "assign exactly one image class" in prompt:
            base = _digest_int(b"class", body)
            if base % 8 == 0:
                # contested content: the ensemble splits evenly between two classes
                index = (base + self.salt % 2) % len(_IMAGE_CLASSES)
            else:
                # salts mostly agree, diverging at a content-dependent rate
                wobble = _digest_int(b"wobble", salt, body) % 100
                index = (base + (1 if wobble < 15 + (5 * self.salt) % 7 else 0)) % len(_IMAGE_CLASSES)
            label = _IMAGE_CLASSES[index]
            return json.dumps({"image_class": label, "justification": "offline deterministic vote"})
        if "determine if it is a chart" in prompt:
            is_chart = _digest_int(b"verify", salt, body) % 10 < 8
            return json.dumps({"is_chart": is_chart, "chart_justification": "offline deterministic vote"})
        if "observable visual properties" in prompt:
            pick = _digest_int(b"features", salt, body)
            return json.dumps(
                {
                    "chart_type": _CHART_TYPES[pick % len(_CHART_TYPES)],
                    "has_data_table": pick >> 3 & 1 == 1,
                    "has_axis_labels": pick >> 4 & 1 == 1,
                    "has_legend": pick >> 5 & 1 == 1,
                    "num_y_axes": 1 + (pick >> 6 & 1),
                    "y_axis_starts_at_zero": pick >> 7 & 1 == 1,
                    "tick_spacing_consistent": pick >> 8 & 1 == 1,
                    "uses_3d": pick >> 9 & 1 == 1,
                    "color_mode": "color" if pick >> 10 & 1 else "grayscale",
                }
            )
        if "how misleading" in prompt:
            cot = '"reasoning"' in prompt
            score = 1 + _digest_int(b"rate", b"cot" if cot else b"direct", salt, body) % 5
            if cot:
                return json.dumps(
                    {
                        "reasoning": "offline deterministic pass over axes, scaling, legends, perspective",
                        "score": score,
                        "justification": "offline deterministic rating",
                    }
                )
            return json.dumps({"score": score, "justification": "offline deterministic rating"})
        raise JudgeUnavailable(f"{self.judge_id}: unrecognized prompt")
