"""Empirical block measures, periodic-orbit measures, entropy, weak* distances.

Block distributions over sliding k-windows are the cylinder-function basis
through which weak* closeness is tested.  Periodic words are kept in a
canonical form (least period, lexicographically least rotation) so that
equal orbit measures compare equal structurally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dynsys import LABEL_DTYPE, MAX_ALPHABET, OrbitWindow, PeriodicOrbit, generate_orbit
from .errors import ArgumentError, DomainError

DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


def word_to_text(word: Sequence[int]) -> str:
    return "".join(DIGITS[int(s)] for s in word)


def text_to_word(text: str) -> tuple[int, ...]:
    try:
        word = tuple(DIGITS.index(c) for c in text.lower())
    except ValueError as exc:
        raise DomainError(f"invalid symbol in {text!r}") from exc
    return word


def _as_word(word) -> tuple[int, ...]:
    if isinstance(word, str):
        return text_to_word(word)
    return tuple(int(s) for s in word)


def least_period(word: tuple[int, ...]) -> int:
    n = len(word)
    for p in range(1, n + 1):
        if n % p == 0 and word == word[:p] * (n // p):
            return p
    return n


def canonical_rotation(word: tuple[int, ...]) -> tuple[int, ...]:
    return min(word[i:] + word[:i] for i in range(len(word)))


@dataclass(frozen=True)
class PeriodicMeasure:
    """The uniform measure on the shift orbit of a periodic word (canonical form)."""

    word: tuple[int, ...]
    alphabet_size: int = 2

    def __post_init__(self) -> None:
        if not self.word:
            raise ArgumentError("periodic word must be nonempty")
        if least_period(self.word) != len(self.word) or canonical_rotation(self.word) != self.word:
            raise DomainError("word is not in canonical form; use periodic_from_word")
        inferred = max(2, max(self.word) + 1)
        size = self.alphabet_size or inferred
        if size < inferred or size > MAX_ALPHABET:
            raise DomainError("alphabet size incompatible with the word")
        object.__setattr__(self, "alphabet_size", size)

    @property
    def period(self) -> int:
        return len(self.word)

    def repeated(self, length: int) -> np.ndarray:
        """The word tiled to ``length`` symbols."""
        reps = -(-length // self.period)
        return np.tile(np.asarray(self.word, dtype=LABEL_DTYPE), reps)[:length]

    def orbit_window(self, length: int, phase: int = 0) -> OrbitWindow:
        spec = PeriodicOrbit(self.word, self.alphabet_size)
        return generate_orbit(spec, spec.origin(phase), length)

    def block_measure(self, k: int) -> "EmpiricalBlockMeasure":
        """Exact invariant k-block distribution (wraparound over one period)."""
        if k <= 0:
            raise ArgumentError("block length must be positive")
        base = self.repeated(self.period + k - 1)
        return empirical_measure(base, k, self.alphabet_size)

    def to_json(self) -> dict:
        return {"word": word_to_text(self.word)}

    @classmethod
    def from_json(cls, data: dict) -> "PeriodicMeasure":
        return periodic_from_word(data["word"])


def periodic_from_word(word, alphabet_size: int = 0) -> PeriodicMeasure:
    """Canonicalize a word (least period, least rotation) into a PeriodicMeasure."""
    w = _as_word(word)
    if not w:
        raise ArgumentError("periodic word must be nonempty")
    w = canonical_rotation(w[: least_period(w)])
    inferred = max(2, max(w) + 1)
    return PeriodicMeasure(w, max(alphabet_size, inferred))


@dataclass(frozen=True)
class EmpiricalBlockMeasure:
    """Sliding-window k-block counts of a finite symbol window."""

    k: int
    alphabet_size: int
    counts: Mapping[str, int]
    total: int

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise ArgumentError("block length must be positive")
        if self.total < 1:
            raise ArgumentError("total must be at least 1")
        if sum(self.counts.values()) != self.total:
            raise DomainError("counts do not sum to the declared total")
        if any(len(b) != self.k for b in self.counts):
            raise DomainError("every block key must have length k")

    def probabilities(self) -> dict[str, float]:
        return {b: c / self.total for b, c in sorted(self.counts.items())}

    def support_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(blocks as an int matrix, probability vector), lexicographically sorted."""
        keys = sorted(self.counts)
        blocks = np.array([text_to_word(b) for b in keys], dtype=LABEL_DTYPE).reshape(
            len(keys), self.k
        )
        probs = np.array([self.counts[b] / self.total for b in keys], dtype=np.float64)
        return blocks, probs

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "alphabet": self.alphabet_size,
            "counts": dict(sorted(self.counts.items())),
        }

    @classmethod
    def from_json(cls, data: dict) -> "EmpiricalBlockMeasure":
        counts = {str(b): int(c) for b, c in data["counts"].items()}
        return cls(int(data["k"]), int(data["alphabet"]), counts, sum(counts.values()))


def _window_codes(labels: np.ndarray, k: int, alphabet_size: int) -> np.ndarray:
    """Encode every sliding k-window as one integer (big-endian, base alphabet)."""
    powers = alphabet_size ** np.arange(k - 1, -1, -1, dtype=np.int64)
    return np.lib.stride_tricks.sliding_window_view(labels, k) @ powers


def empirical_measure(labels, k: int, alphabet_size: int = 0) -> EmpiricalBlockMeasure:
    """Sliding-window k-block counts of a label sequence (or symbolic orbit window)."""
    if isinstance(labels, OrbitWindow):
        if labels.labels is None:
            raise DomainError("block measures need symbolic data")
        alphabet_size = alphabet_size or getattr(labels.spec, "alphabet_size", 0)
        labels = labels.labels
    if isinstance(labels, str):
        labels = text_to_word(labels)
    arr = np.ascontiguousarray(labels, dtype=LABEL_DTYPE)
    if arr.ndim != 1 or arr.size == 0:
        raise ArgumentError("labels must be a nonempty 1-d sequence")
    k = int(k)
    if k <= 0 or k > arr.size:
        raise ArgumentError(f"block length {k} outside [1, {arr.size}]")
    alphabet_size = alphabet_size or max(2, int(arr.max()) + 1)
    if arr.min() < 0 or arr.max() >= alphabet_size:
        raise DomainError("symbols outside the declared alphabet")
    if alphabet_size**k <= 2**62:
        codes, counts = np.unique(_window_codes(arr, k, alphabet_size), return_counts=True)
        blocks = _decode(codes, k, alphabet_size)
    else:
        windows = np.lib.stride_tricks.sliding_window_view(arr, k)
        blocks, counts = np.unique(windows, axis=0, return_counts=True)
    mapping = {
        word_to_text(row): int(c) for row, c in zip(np.atleast_2d(blocks), counts)
    }
    return EmpiricalBlockMeasure(k, alphabet_size, mapping, int(counts.sum()))


def _decode(codes: np.ndarray, k: int, alphabet_size: int) -> np.ndarray:
    out = np.empty((codes.size, k), dtype=LABEL_DTYPE)
    rest = codes.copy()
    for i in range(k - 1, -1, -1):
        out[:, i] = rest % alphabet_size
        rest //= alphabet_size
    return out


def block_entropy(em: EmpiricalBlockMeasure) -> float:
    """Shannon entropy of the block distribution, in bits per symbol: H(p)/k."""
    counts = np.array(list(em.counts.values()), dtype=np.float64)
    p = counts / em.total
    h = float(-(p * np.log2(p)).sum())
    return h / em.k


def weakstar_distance(a: EmpiricalBlockMeasure, b: EmpiricalBlockMeasure, cost: str = "tv") -> float:
    """Distance between two k-block distributions.

    ``tv``: total variation (1/2) sum |p_a - p_b|.  ``hamming_k``: optimal
    transport with ground cost = normalized Hamming distance between blocks
    (<= tv, since the 0/1 ground cost dominates Hamming).
    """
    if a.k != b.k:
        raise ArgumentError("block lengths differ")
    if a.alphabet_size != b.alphabet_size:
        raise ArgumentError("alphabets differ")
    if cost == "tv":
        keys = sorted(set(a.counts) | set(b.counts))
        pa = np.array([a.counts.get(x, 0) / a.total for x in keys])
        pb = np.array([b.counts.get(x, 0) / b.total for x in keys])
        return float(0.5 * np.abs(pa - pb).sum())
    if cost == "hamming_k":
        from .rhobar import transport_lp

        blocks_a, pa = a.support_arrays()
        blocks_b, pb = b.support_arrays()
        ground = (blocks_a[:, None, :] != blocks_b[None, :, :]).mean(axis=2)
        value, _ = transport_lp(ground, pa, pb)
        return float(value)
    raise ArgumentError(f"unknown cost {cost!r}")
