"""Title normalization and edit-distance primitives shared by TOC matching and label lookup."""
from __future__ import annotations

import re

# Typographic variants folded before comparison; issuer formatting varies widely.
_CHAR_FOLD = str.maketrans(
    {
        "‘": "'",
        "’": "'",
        "′": "'",
        "“": '"',
        "”": '"',
        "–": "-",
        "—": "-",
        " ": " ",
    }
)


def normalize_title(text: str) -> str:
    """Case-fold, collapse whitespace, strip leading numerals/dots and dot-leader remnants."""
    folded = text.translate(_CHAR_FOLD).casefold()
    folded = re.sub(r"^[\s.\d]+", "", folded)
    folded = re.sub(r"[\s.]+$", "", folded)
    return re.sub(r"\s+", " ", folded).strip()


def token_sorted_form(text: str) -> str:
    """Canonical form for fuzzy similarity: normalized tokens, punctuation-stripped, sorted."""
    normalized = normalize_title(text)
    tokens = [t.strip(".,:;!?()[]'\"&") for t in normalized.split()]
    return " ".join(sorted(t for t in tokens if t))


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance, two-row DP."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


def title_similarity(a: str, b: str) -> float:
    """Normalized similarity in [0, 1]: 1 - edit_distance/max_len over token-sorted forms."""
    fa, fb = token_sorted_form(a), token_sorted_form(b)
    if not fa and not fb:
        return 1.0
    longest = max(len(fa), len(fb))
    return 1.0 - edit_distance(fa, fb) / longest
