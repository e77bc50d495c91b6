"""Finite two-component memoryless sources and their information functionals.

All quantities are in bits and use the convention 0 log 0 = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORMALIZATION_TOL = 1e-12


def entropy_bits(p) -> float:
    """Shannon entropy of a probability vector (any shape, flattened) in bits."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


@dataclass(frozen=True)
class JointSource:
    """Joint pmf ``joint[x, y]`` of a discrete memoryless two-component source."""

    joint: np.ndarray

    def __post_init__(self):
        joint = np.array(self.joint, dtype=float)
        if joint.ndim != 2 or joint.shape[0] < 1 or joint.shape[1] < 1:
            raise ValueError(f"joint must be a non-empty 2-D matrix, got shape {joint.shape}")
        if not np.all(np.isfinite(joint)) or np.any(joint < 0):
            raise ValueError("joint probabilities must be finite and non-negative")
        total = joint.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"joint probabilities sum to {total!r}, not 1")
        joint.setflags(write=False)
        object.__setattr__(self, "joint", joint)

    @classmethod
    def normalized(cls, weights) -> "JointSource":
        """Build a source from non-negative weights, rescaling them to sum to one."""
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        total = w.sum()
        if total <= 0:
            raise ValueError("weights must have positive total mass")
        return cls(w / total)

    @property
    def size_x(self) -> int:
        return self.joint.shape[0]

    @property
    def size_y(self) -> int:
        return self.joint.shape[1]

    @property
    def p_x(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    @property
    def p_y(self) -> np.ndarray:
        return self.joint.sum(axis=0)

    def __eq__(self, other):
        if not isinstance(other, JointSource):
            return NotImplemented
        return self.joint.shape == other.joint.shape and bool(np.array_equal(self.joint, other.joint))

    def __hash__(self):
        return hash((self.joint.shape, self.joint.tobytes()))


@dataclass(frozen=True)
class SourceSample:
    x_seq: np.ndarray
    y_seq: np.ndarray
    seed: int

    def __post_init__(self):
        if len(self.x_seq) != len(self.y_seq) or len(self.x_seq) < 1:
            raise ValueError("x_seq and y_seq must have equal length n >= 1")

    @property
    def n(self) -> int:
        return len(self.x_seq)


def entropy_x(src: JointSource) -> float:
    return entropy_bits(src.p_x)


def entropy_y(src: JointSource) -> float:
    return entropy_bits(src.p_y)


def conditional_entropy_x_given_y(src: JointSource) -> float:
    # H(X|Y) = H(X,Y) - H(Y); clipped at zero against rounding
    return max(entropy_bits(src.joint) - entropy_y(src), 0.0)


def mutual_info_xy(src: JointSource) -> float:
    return max(entropy_x(src) - conditional_entropy_x_given_y(src), 0.0)


def dsbs(p: float) -> JointSource:
    """Doubly symmetric binary source: uniform X, Y = X flipped with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"crossover probability must lie in [0, 1], got {p}")
    return JointSource(np.array([[0.5 * (1 - p), 0.5 * p], [0.5 * p, 0.5 * (1 - p)]]))


def sample(src: JointSource, n: int, seed: int) -> SourceSample:
    """Draw ``n`` i.i.d. pairs from the source, reproducibly from ``seed``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    flat = src.joint.ravel()
    idx = rng.choice(flat.size, size=n, p=flat / flat.sum())
    x_seq, y_seq = np.divmod(idx, src.size_y)
    return SourceSample(x_seq.astype(np.int64), y_seq.astype(np.int64), seed)
