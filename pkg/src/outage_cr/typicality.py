"""Types, strong typicality tests and uniform sampling from type classes.

Sequences are integer numpy arrays over ``{0, ..., k-1}``.  Typicality is strong
typicality with an absolute slack ``epsilon`` on every (pair-)frequency, and
symbols of zero probability must not occur at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_TOL = 1e-12


@dataclass(frozen=True)
class TypeClass:
    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if not counts or any(c < 0 for c in counts):
            raise ValueError("type counts must be non-negative and non-empty")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def alphabet_size(self) -> int:
        return len(self.counts)

    def as_dict(self) -> dict[int, int]:
        """Symbols that occur, mapped to their counts."""
        return {a: c for a, c in enumerate(self.counts) if c}

    def distribution(self) -> np.ndarray:
        return np.array(self.counts, dtype=float) / self.n


@dataclass(frozen=True)
class TypicalityParams:
    epsilon: float = 0.05

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")


def default_epsilon(n: int) -> float:
    """0.05 up to n = 200, shrinking like n**(-1/3) beyond."""
    if n <= 200:
        return 0.05
    return 0.05 * (200.0 / n) ** (1.0 / 3.0)


def type_of(seq, alphabet_size: int | None = None) -> TypeClass:
    seq = np.asarray(seq, dtype=np.int64)
    if seq.size == 0:
        raise ValueError("sequence must be non-empty")
    size = int(seq.max()) + 1 if alphabet_size is None else alphabet_size
    return TypeClass(tuple(np.bincount(seq, minlength=size)))


def quantize_to_type(p, n: int) -> TypeClass:
    """Type with denominator n closest in total variation to ``p`` (largest remainder)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = np.asarray(p, dtype=float)
    p = p / p.sum()
    scaled = p * n
    base = np.floor(scaled + _TOL).astype(np.int64)
    short = n - int(base.sum())
    remainder = scaled - base
    # stable sort keeps symbol order among equal remainders
    order = np.argsort(-remainder, kind="stable")
    base[order[:short]] += 1
    return TypeClass(tuple(base))


def _within(freq: np.ndarray, p: np.ndarray, eps: float) -> bool:
    if np.any((p <= 0) & (freq > 0)):
        return False
    return bool(np.all(np.abs(freq - p) <= eps + _TOL))


def is_typical(seq, p, params: TypicalityParams) -> bool:
    p = np.asarray(p, dtype=float)
    seq = np.asarray(seq, dtype=np.int64)
    if seq.size == 0:
        raise ValueError("sequence must be non-empty")
    if seq.min() < 0 or seq.max() >= p.size:
        return False
    freq = np.bincount(seq, minlength=p.size) / seq.size
    return _within(freq, p, params.epsilon)


def pair_counts(seq_a, seq_b, size_a: int, size_b: int) -> np.ndarray:
    a = np.asarray(seq_a, dtype=np.int64)
    b = np.asarray(seq_b, dtype=np.int64)
    return np.bincount(a * size_b + b, minlength=size_a * size_b).reshape(size_a, size_b)


def is_jointly_typical(seq_a, seq_b, p_ab, params: TypicalityParams) -> bool:
    p_ab = np.asarray(p_ab, dtype=float)
    a = np.asarray(seq_a, dtype=np.int64)
    b = np.asarray(seq_b, dtype=np.int64)
    if a.shape != b.shape:
        raise ValueError(f"sequence lengths differ: {a.size} vs {b.size}")
    size_a, size_b = p_ab.shape
    if a.min() < 0 or a.max() >= size_a or b.min() < 0 or b.max() >= size_b:
        return False
    freq = pair_counts(a, b, size_a, size_b) / a.size
    return _within(freq, p_ab, params.epsilon)


def jointly_typical_rows(words: np.ndarray, seq: np.ndarray, p_ab, params: TypicalityParams) -> np.ndarray:
    """Vectorized :func:`is_jointly_typical` of every row of ``words`` against ``seq``."""
    p_ab = np.asarray(p_ab, dtype=float)
    size_a, size_b = p_ab.shape
    words = np.asarray(words, dtype=np.int64)
    n = words.shape[1]
    seq_onehot = np.eye(size_b)[np.asarray(seq, dtype=np.int64)]  # (n, b)
    word_onehot = words[:, :, None] == np.arange(size_a)  # (W, n, a)
    freq = np.einsum("wna,nb->wab", word_onehot, seq_onehot) / n
    bad_support = np.any((p_ab[None] <= 0) & (freq > 0), axis=(1, 2))
    close = np.all(np.abs(freq - p_ab[None]) <= params.epsilon + _TOL, axis=(1, 2))
    in_alphabet = np.all((words >= 0) & (words < size_a), axis=1)
    return close & ~bad_support & in_alphabet


def sample_from_type(t: TypeClass, seed) -> np.ndarray:
    """Uniformly random sequence with exactly the counts of ``t``."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    seq = np.repeat(np.arange(t.alphabet_size), t.counts)
    return rng.permutation(seq)
