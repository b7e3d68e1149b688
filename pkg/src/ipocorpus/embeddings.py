"""Pluggable embedding providers for semantic and visual diversity series.

The paper-grade sentence and image encoders are deliberately not re-implemented;
any callable mapping inputs to fixed-width vectors plugs in. The hashing providers
below are deterministic stand-ins so diversity series are computable offline.
"""
from __future__ import annotations

import hashlib
from typing import Protocol, Sequence

import numpy as np


class TextEmbedder(Protocol):
    dim: int

    def embed(self, sentences: Sequence[str]) -> list[np.ndarray]: ...


class ImageEmbedder(Protocol):
    dim: int

    def embed_images(self, images: Sequence[bytes]) -> list[np.ndarray]: ...


def _hash_vector(data: bytes, dim: int) -> np.ndarray:
    values = []
    counter = 0
    while len(values) < dim:
        digest = hashlib.sha256(data + counter.to_bytes(4, "big")).digest()
        values.extend(b / 255.0 - 0.5 for b in digest)
        counter += 1
    vec = np.asarray(values[:dim], dtype=float)
    norm = np.linalg.norm(vec)
    return vec / norm if norm else vec


class HashingTextEmbedder:
    """Bag-of-token-hash embedding; deterministic, no model weights."""

    def __init__(self, dim: int = 64):
        self.dim = dim

    def embed(self, sentences: Sequence[str]) -> list[np.ndarray]:
        out = []
        for sentence in sentences:
            tokens = sentence.casefold().split() or [""]
            acc = np.zeros(self.dim)
            for token in tokens:
                acc += _hash_vector(token.encode("utf-8"), self.dim)
            norm = np.linalg.norm(acc)
            out.append(acc / norm if norm else _hash_vector(sentence.encode("utf-8"), self.dim))
        return out


class HashingImageEmbedder:
    """Content-hash embedding for image bytes; deterministic stand-in for a vision encoder."""

    def __init__(self, dim: int = 64):
        self.dim = dim

    def embed_images(self, images: Sequence[bytes]) -> list[np.ndarray]:
        return [_hash_vector(body, self.dim) for body in images]
