"""Pluggable tokenization.

Absolute token counts are tokenizer-relative; the shipped default is a plain
Unicode-whitespace word splitter. Neural tokenizers can be plugged in by
registering any object with the same two methods.
"""
from __future__ import annotations

from typing import Protocol


class Tokenizer(Protocol):
    name: str

    def tokens(self, text: str) -> list[str]: ...

    def count(self, text: str) -> int: ...


class WhitespaceTokenizer:
    """Split on runs of Unicode whitespace."""

    name = "whitespace"

    def tokens(self, text: str) -> list[str]:
        return text.split()

    def count(self, text: str) -> int:
        return len(text.split())


_REGISTRY: dict[str, Tokenizer] = {"whitespace": WhitespaceTokenizer()}


def register_tokenizer(tokenizer: Tokenizer) -> None:
    _REGISTRY[tokenizer.name] = tokenizer


def get_tokenizer(name: str = "whitespace") -> Tokenizer:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown tokenizer {name!r}; registered: {sorted(_REGISTRY)}") from None
