"""Simulation of the binning protocol for common randomness over a slow-fading channel.

Terminal A sees x^n, picks a codeword K jointly typical with it, and sends the
index of K's bin over the fading channel.  Terminal B decodes the bin and looks
in it for the unique codeword jointly typical with y^n; that codeword, or the
fallback word u0, is L.  A trial succeeds when K = L.

Two codebook modes are available.  ``explicit`` draws one codebook up front and
scans it, which is only possible while N1*N2 stays small.  ``ensemble``
simulates the random-codebook ensemble exactly without materializing it: since
codewords are i.i.d. uniform over the type class, the position of the first
codeword typical with x is geometric, and the number of competing codewords in
a bin is binomial, with success probabilities obtained by enumerating joint
types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from outage_cr.crcap import AuxChannel, ResourceCapError, info_pair
from outage_cr.fading import FadingSpec, capacity_at_gain
from outage_cr.source import JointSource, entropy_x, sample
from outage_cr.typicality import (
    TypeClass,
    TypicalityParams,
    default_epsilon,
    jointly_typical_rows,
    quantize_to_type,
    sample_from_type,
)

U0 = None
"""Index of the fallback word u0 (codewords are indexed by 1-based ``(i, j)``)."""

DEFAULT_DELTA = 0.08
DEFAULT_ALPHA = 0.5
DEFAULT_MARGIN = 0.1
BACKENDS = ("idealized", "gaussian")
CODEBOOK_MODES = ("auto", "explicit", "ensemble")


@dataclass(frozen=True)
class ProtocolConfig:
    n: int = 200
    delta: float = DEFAULT_DELTA
    epsilon: float | None = None
    alpha: float = DEFAULT_ALPHA
    seed: int = 0
    backend: str = "idealized"
    trials: int = 500
    gain_states: tuple[float, ...] | None = None
    margin: float = DEFAULT_MARGIN
    n_c: int | None = None
    buckets: int = 20
    codebook_mode: str = "auto"
    max_codebook_words: int = 1 << 16
    max_channel_messages: int = 1 << 14
    max_exponent_bits: float = 4096.0
    max_joint_types: int = 2_000_000

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if self.epsilon is not None and not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.codebook_mode not in CODEBOOK_MODES:
            raise ValueError(f"codebook_mode must be one of {CODEBOOK_MODES}, got {self.codebook_mode!r}")
        if self.n_c is not None and self.n_c < 1:
            raise ValueError("n_c must be >= 1")
        if self.buckets < 1:
            raise ValueError("buckets must be >= 1")
        if self.gain_states is not None:
            states = tuple(float(abs(g)) for g in self.gain_states)
            if not states:
                raise ValueError("gain_states must be non-empty when given")
            object.__setattr__(self, "gain_states", states)

    @property
    def typicality(self) -> TypicalityParams:
        eps = default_epsilon(self.n) if self.epsilon is None else self.epsilon
        return TypicalityParams(eps)

    @property
    def channel_uses(self) -> int:
        return self.n if self.n_c is None else self.n_c


# --------------------------------------------------------------------------
# codebook sizes


def _ceil_pow2(exponent: float) -> int:
    # snap exponents that are integers up to rounding, e.g. 10 * 0.3
    if abs(exponent - round(exponent)) < 1e-9:
        exponent = float(round(exponent))
    if exponent <= 0:
        return 1
    if exponent < 1000:
        return max(1, math.ceil(2.0**exponent))
    whole = math.floor(exponent)
    return (math.ceil(2.0 ** (exponent - whole) * 2.0**52)) << (whole - 52)


def codebook_sizes(aux: AuxChannel, src: JointSource, n: int, delta: float, max_exponent_bits: float = 4096.0):
    """N1 = ceil(2^(n(I(U;X) - I(U;Y) + 3 delta))), N2 = ceil(2^(n(I(U;Y) - 2 delta)))."""
    if not delta > 0:
        raise ValueError("delta must be > 0")
    i_ux, i_uy = info_pair(aux, src)
    e1 = n * (i_ux - i_uy + 3 * delta)
    e2 = n * (i_uy - 2 * delta)
    if max(e1, e2) > max_exponent_bits:
        raise ResourceCapError(
            f"codebook exponent {max(e1, e2):.1f} bits exceeds the cap of {max_exponent_bits} bits"
        )
    return _ceil_pow2(e1), _ceil_pow2(e2)


def empirical_rate(n1: int, n2: int, n: int) -> float:
    """log2 |K| / n with |K| = N1 N2 + 1 (exact for big integers)."""
    return math.log2(n1 * n2 + 1) / n


def cardinality_bound_ok(n1: int, n2: int, n: int, h_x: float) -> bool:
    return math.log2(n1 * n2 + 1) <= 2.0 * (h_x + 1.0) * n


# --------------------------------------------------------------------------
# explicit codebooks


@dataclass(frozen=True)
class CodebookSet:
    """N1 bins of N2 codewords of one type, plus the fallback word u0."""

    words: np.ndarray  # (N1, N2, n)
    u0: np.ndarray
    word_type: TypeClass
    p_ux: np.ndarray
    p_uy: np.ndarray

    @property
    def N1(self) -> int:
        return self.words.shape[0]

    @property
    def N2(self) -> int:
        return self.words.shape[1]

    @property
    def n(self) -> int:
        return self.words.shape[2]

    @property
    def alphabet_size(self) -> int:
        """|K| = N1 N2 + 1; K and L both range over the codewords and u0."""
        return self.N1 * self.N2 + 1

    def word(self, index):
        if index is U0:
            return self.u0
        i, j = index
        return self.words[i - 1, j - 1]


def fallback_word(word_type: TypeClass) -> np.ndarray:
    """u0: the all-zero sequence unless that has the codeword type, else the smallest non-member."""
    n = word_type.n
    u0 = np.zeros(n, dtype=np.int64)
    if word_type.counts[0] != n:
        return u0
    # every codeword is all zeros; flip the last symbol (outside the U alphabet if |U| = 1)
    u0[-1] = 1
    return u0


def aux_joints(aux: AuxChannel, src: JointSource):
    return aux.p_u(src), aux.joint_ux(src), aux.joint_uy(src)


def generate_codebooks(config: ProtocolConfig, aux: AuxChannel, src: JointSource, sizes=None) -> CodebookSet:
    """Draw N1*N2 independent codewords uniformly from the type class of P_U."""
    n1, n2 = sizes or codebook_sizes(aux, src, config.n, config.delta, config.max_exponent_bits)
    if n1 * n2 > config.max_codebook_words:
        raise ResourceCapError(
            f"codebook of {n1}x{n2} words exceeds the cap of {config.max_codebook_words} words"
        )
    p_u, p_ux, p_uy = aux_joints(aux, src)
    t = quantize_to_type(p_u, config.n)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0xC0DE]))
    base = np.repeat(np.arange(t.alphabet_size), t.counts)
    words = rng.permuted(np.broadcast_to(base, (n1 * n2, config.n)), axis=1)
    return CodebookSet(words.reshape(n1, n2, config.n), fallback_word(t), t, p_ux, p_uy)


def encode(x_seq, codebooks: CodebookSet, params: TypicalityParams, chunk: int = 4096):
    """First codeword (row-major) jointly typical with x; ``(U0, N1 + 1)`` if none."""
    flat = codebooks.words.reshape(-1, codebooks.n)
    for start in range(0, flat.shape[0], chunk):
        hits = np.flatnonzero(jointly_typical_rows(flat[start : start + chunk], x_seq, codebooks.p_ux, params))
        if hits.size:
            i, j = divmod(start + int(hits[0]), codebooks.N2)
            return (i + 1, j + 1), i + 1
    return U0, codebooks.N1 + 1


def decode(y_seq, bin_index: int, codebooks: CodebookSet, params: TypicalityParams):
    """The unique codeword of the bin jointly typical with y, else u0."""
    if bin_index == codebooks.N1 + 1:
        return U0
    hits = np.flatnonzero(jointly_typical_rows(codebooks.words[bin_index - 1], y_seq, codebooks.p_uy, params))
    if hits.size != 1:
        return U0
    return bin_index, int(hits[0]) + 1


# --------------------------------------------------------------------------
# channel


def _randbelow(rng: np.random.Generator, bound: int) -> int:
    """Uniform integer in [0, bound) for arbitrarily large Python ints."""
    if bound <= 1:
        return 0
    if bound < 2**62:
        return int(rng.integers(bound))
    nbytes = (bound.bit_length() + 7) // 8 + 1
    limit = (256**nbytes // bound) * bound
    while True:
        r = int.from_bytes(rng.bytes(nbytes), "little")
        if r < limit:
            return r % bound


def _wrong_bin(rng, bin_index: int, num_bins: int) -> int:
    r = _randbelow(rng, num_bins) + 1  # among the other num_bins wrong bins in {1..num_bins+1}
    return r if r < bin_index else r + 1


class GaussianChannelCode:
    """Random complex Gaussian codebook with minimum-distance decoding.

    The decoder is given the realized gain (receiver CSI).
    """

    def __init__(self, num_messages: int, channel_uses: int, power: float, seed, max_messages: int = 1 << 14):
        if num_messages > max_messages:
            raise ResourceCapError(f"{num_messages} channel messages exceed the cap of {max_messages}")
        rng = np.random.default_rng(seed)
        shape = (num_messages, channel_uses)
        scale = math.sqrt(power / 2.0)
        self.codewords = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    def transmit(self, message: int, g, noise_var: float, rng) -> int:
        """Send 1-based ``message`` through z = g t + noise and decode it."""
        t = self.codewords[message - 1]
        noise = math.sqrt(noise_var / 2.0) * (rng.standard_normal(t.shape) + 1j * rng.standard_normal(t.shape))
        z = g * t + noise
        dist = np.sum(np.abs(z[None, :] - g * self.codewords) ** 2, axis=1)
        return int(np.argmin(dist)) + 1


def transmit(
    bin_index: int,
    g,
    spec: FadingSpec,
    num_bins: int,
    backend: str = "idealized",
    *,
    channel_uses: int,
    margin: float = DEFAULT_MARGIN,
    rng=None,
    code: GaussianChannelCode | None = None,
) -> int:
    """Deliver a bin index in {1..num_bins+1} over the channel with gain g."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if backend == "idealized":
        rate = math.log2(num_bins + 1) / channel_uses
        if rate <= capacity_at_gain(abs(g), spec.snr) - margin:
            return bin_index
        return _wrong_bin(rng, bin_index, num_bins)
    if backend == "gaussian":
        if code is None:
            code = GaussianChannelCode(num_bins + 1, channel_uses, spec.power, rng)
        return code.transmit(bin_index, g, spec.noise_var, rng)
    raise ValueError(f"unknown backend {backend!r}")


# --------------------------------------------------------------------------
# random-codebook ensemble


def _box(p: np.ndarray, n: int, eps: float):
    lo = np.maximum(np.ceil(n * (p - eps) - 1e-9), 0).astype(np.int64)
    hi = np.floor(n * (p + eps) + 1e-9).astype(np.int64)
    hi = np.where(p <= 0, 0, hi)
    return lo, hi


def _vectors(total: int, lo, hi):
    """Integer vectors v with lo <= v <= hi and sum(v) == total."""
    k = len(lo)
    if k == 1:
        if lo[0] <= total <= hi[0]:
            yield (total,)
        return
    rest_lo = int(sum(lo[1:]))
    rest_hi = int(sum(hi[1:]))
    for v in range(max(lo[0], total - rest_hi), min(hi[0], total - rest_lo) + 1):
        for tail in _vectors(total - v, lo[1:], hi[1:]):
            yield (v,) + tail


def _joint_types(row_sums, col_sums, lo, hi, limit):
    """Count matrices with the given margins inside the box [lo, hi]."""
    size_u, size_x = lo.shape
    out = []

    def rec(x, remaining, cols):
        if x == size_x - 1:
            last = np.array(remaining)
            if np.all(last >= lo[:, x]) and np.all(last <= hi[:, x]):
                out.append(np.column_stack(cols + [last]))
                if len(out) > limit:
                    raise ResourceCapError(f"more than {limit} joint types to enumerate")
            return
        col_hi = np.minimum(hi[:, x], remaining)
        if np.any(col_hi < lo[:, x]):
            return
        for v in _vectors(int(col_sums[x]), lo[:, x].tolist(), col_hi.tolist()):
            rec(x + 1, remaining - np.array(v), cols + [np.array(v)])

    rec(0, np.array(row_sums, dtype=np.int64), [])
    if not out:
        return np.zeros((0, size_u, size_x), dtype=np.int64)
    return np.stack(out)


class TypicalityLaw:
    """Joint-type law of a uniformly random word of a fixed type against a fixed sequence.

    For a sequence of type ``col_counts``, ``log_prob(col_counts)`` is the log
    probability that the word is jointly typical with it, and ``draw`` samples
    the word conditioned on that event.
    """

    def __init__(self, word_type: TypeClass, p_joint: np.ndarray, eps: float, limit: int):
        self.t = np.array(word_type.counts, dtype=np.int64)
        self.n = int(self.t.sum())
        self.p = np.asarray(p_joint, dtype=float)
        self.lo, self.hi = _box(self.p, self.n, eps)
        self.limit = limit
        self._log_class = gammaln(self.n + 1) - np.sum(gammaln(self.t + 1))
        self._law = lru_cache(maxsize=4096)(self._compute)

    def _compute(self, col_counts: tuple):
        cols = np.array(col_counts, dtype=np.int64)
        mats = _joint_types(self.t, cols, self.lo, self.hi, self.limit)
        if mats.shape[0] == 0:
            return -np.inf, mats, np.zeros(0)
        logw = np.sum(gammaln(cols + 1)) - np.sum(gammaln(mats + 1), axis=(1, 2)) - self._log_class
        total = logsumexp(logw)
        return float(total), mats, np.exp(logw - total)

    def log_prob(self, seq) -> float:
        return self._law(self._counts(seq))[0]

    def _counts(self, seq) -> tuple:
        return tuple(np.bincount(seq, minlength=self.p.shape[1]).tolist())

    def draw(self, seq, rng) -> np.ndarray:
        _, mats, probs = self._law(self._counts(seq))
        m = mats[rng.choice(len(probs), p=probs)]
        word = np.empty(self.n, dtype=np.int64)
        for a in range(self.p.shape[1]):
            pos = np.flatnonzero(seq == a)
            word[pos] = rng.permutation(np.repeat(np.arange(self.p.shape[0]), m[:, a]))
        return word


def _prob_any(log1m_q: float, m) -> float:
    """P[at least one success in m Bernoulli trials], q = 1 - exp(log1m_q)."""
    return -math.expm1(float(m) * log1m_q) if log1m_q > -math.inf else (1.0 if m > 0 else 0.0)


def _first_success(rng, log1m_q: float, m: int) -> int:
    """0-based index of the first success among m trials, given that one occurs."""
    if log1m_q == -math.inf or m <= 1:
        return 0
    total = _prob_any(log1m_q, m)
    u = rng.random()
    k = math.floor(math.log1p(-u * total) / log1m_q)
    return int(min(max(k, 0), m - 1))


def _success_count(rng, log_q: float, m: int) -> int:
    """Number of successes among m trials with probability exp(log_q), capped at 2."""
    if m <= 0 or log_q == -math.inf:
        return 0
    if log_q >= 0:
        return min(m, 2)
    log1m_q = math.log1p(-math.exp(log_q))
    log_p0 = float(m) * log1m_q
    log_p1 = math.log(m) + log_q + float(m - 1) * log1m_q
    u = rng.random()
    p0 = math.exp(log_p0)
    if u < p0:
        return 0
    if u < p0 + math.exp(log_p1):
        return 1
    return 2


# --------------------------------------------------------------------------
# running the protocol


@dataclass(frozen=True)
class TrialResult:
    g: float
    k_index: tuple[int, int] | None
    l_index: tuple[int, int] | None
    bin_sent: int
    bin_decoded: int
    agreed: bool
    source_failure: bool = False

    @property
    def channel_error(self) -> bool:
        return self.bin_sent != self.bin_decoded


@dataclass(frozen=True)
class StateStats:
    g_lo: float
    g_hi: float
    trials: int
    errors: int

    @property
    def error_rate(self) -> float:
        return self.errors / self.trials


@dataclass(frozen=True)
class RunStats:
    per_state: tuple[StateStats, ...]
    outage_fraction: float
    empirical_rate: float
    cardinality_bound_ok: bool
    N1: int
    N2: int
    alpha: float
    epsilon: float
    mode: str
    info_ux: float
    info_uy: float
    trials: tuple[TrialResult, ...] = field(repr=False)
    ensemble_bias_bound: float = 0.0

    @property
    def error_rate(self) -> float:
        """Mean conditional error E_G[P(K != L | G)], estimated over all trials."""
        return sum(not t.agreed for t in self.trials) / len(self.trials)

    @property
    def source_failure_rate(self) -> float:
        return sum(t.source_failure for t in self.trials) / len(self.trials)

    @property
    def channel_error_rate(self) -> float:
        return sum(t.channel_error for t in self.trials) / len(self.trials)

    @property
    def fallback_rate(self) -> float:
        return sum(t.k_index is U0 for t in self.trials) / len(self.trials)

    def summary(self) -> dict:
        return {
            "outage_fraction": self.outage_fraction,
            "empirical_rate": self.empirical_rate,
            "N1": self.N1,
            "N2": self.N2,
            "cardinality_bound_ok": self.cardinality_bound_ok,
            "error_rate": self.error_rate,
            "source_failure_rate": self.source_failure_rate,
            "channel_error_rate": self.channel_error_rate,
            "fallback_rate": self.fallback_rate,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "mode": self.mode,
            "info_ux_bits": self.info_ux,
            "info_uy_bits": self.info_uy,
            "ensemble_bias_bound": self.ensemble_bias_bound,
        }


def _bucketize(gains: np.ndarray, errors: np.ndarray, config: ProtocolConfig) -> list[StateStats]:
    states = []
    if config.gain_states is not None:
        for g in sorted(set(config.gain_states)):
            mask = gains == g
            if mask.any():
                states.append(StateStats(g, g, int(mask.sum()), int(errors[mask].sum())))
        return states
    order = np.argsort(gains, kind="stable")
    for group in np.array_split(order, min(config.buckets, gains.size)):
        if group.size:
            g = gains[group]
            states.append(StateStats(float(g.min()), float(g.max()), int(group.size), int(errors[group].sum())))
    return states


class _EnsembleCoder:
    """Encoder and decoder outcomes drawn from the random-codebook ensemble."""

    def __init__(self, aux, src, config, n1, n2, explicit_limit: int = 4096):
        p_u, p_ux, p_uy = aux_joints(aux, src)
        self.params = config.typicality
        self.t = quantize_to_type(p_u, config.n)
        self.law_x = TypicalityLaw(self.t, p_ux, self.params.epsilon, config.max_joint_types)
        self.law_y = TypicalityLaw(self.t, p_uy, self.params.epsilon, config.max_joint_types)
        self.p_ux, self.p_uy = p_ux, p_uy
        self.n1, self.n2 = n1, n2
        self.explicit_limit = explicit_limit
        self.bias_bound = 0.0

    def encode(self, x, rng):
        self._x = x
        log_p = self.law_x.log_prob(x)
        log1m_p = math.log1p(-math.exp(log_p)) if log_p < 0 else -math.inf
        self._p_x = math.exp(log_p)
        if rng.random() >= _prob_any(log1m_p, self.n1 * self.n2):
            self._k_word = None
            return U0, self.n1 + 1
        log1m_bin = float(self.n2) * log1m_p if log1m_p > -math.inf else -math.inf
        i = _first_success(rng, log1m_bin, self.n1)
        j = _first_success(rng, log1m_p, self.n2)
        self._k_word = self.law_x.draw(x, rng)
        return (i + 1, j + 1), i + 1

    def _hits_not_typical_with_x(self, m, y, rng):
        """Hits with y among m words conditioned on not being typical with x.

        Returns (count capped at 2, 0-based position of the hit when count == 1).
        """
        if m == 0:
            return 0, None
        if m <= self.explicit_limit:
            base = np.repeat(np.arange(self.t.alphabet_size), self.t.counts)
            words = rng.permuted(np.broadcast_to(base, (m, base.size)), axis=1)
            redo = jointly_typical_rows(words, self._x, self.p_ux, self.params)
            while redo.any():
                words[redo] = rng.permuted(np.broadcast_to(base, (int(redo.sum()), base.size)), axis=1)
                redo[redo] = jointly_typical_rows(words[redo], self._x, self.p_ux, self.params)
            hits = np.flatnonzero(jointly_typical_rows(words, y, self.p_uy, self.params))
            return min(hits.size, 2), (int(hits[0]) if hits.size == 1 else None)
        # large groups: unconditional hit probability, which can only overstate the hits
        if self._p_x < 1:
            self.bias_bound = max(self.bias_bound, m * self._p_x / (1 - self._p_x))
        return self._hits_unconditioned(m, y, rng)

    def _hits_unconditioned(self, m, y, rng):
        count = _success_count(rng, self.law_y.log_prob(y), m)
        return count, (_randbelow(rng, m) if count == 1 else None)

    def decode(self, y, bin_index, k_index, rng):
        if bin_index == self.n1 + 1:
            return U0
        k_ok = False
        if k_index is not U0 and k_index[0] == bin_index:
            # scan order: words before K were not typical with x, words after are unconstrained
            k_ok = bool(jointly_typical_rows(self._k_word[None, :], y, self.p_uy, self.params)[0])
            ahead, behind, first_behind = k_index[1] - 1, self.n2 - k_index[1], k_index[1] + 1
        elif k_index is U0 or bin_index < k_index[0]:
            ahead, behind, first_behind = self.n2, 0, 1
        else:
            ahead, behind, first_behind = 0, self.n2, 1
        hits_a, pos_a = self._hits_not_typical_with_x(ahead, y, rng)
        hits_b, pos_b = self._hits_unconditioned(behind, y, rng) if behind else (0, None)
        hits = min(hits_a + hits_b, 2)
        if k_ok and hits == 0:
            return k_index
        if not k_ok and hits == 1:
            return (bin_index, pos_a + 1) if hits_a else (bin_index, first_behind + pos_b)
        return U0


class _ExplicitCoder:
    def __init__(self, codebooks: CodebookSet, params: TypicalityParams):
        self.codebooks = codebooks
        self.params = params

    def encode(self, x, rng):
        return encode(x, self.codebooks, self.params)

    def decode(self, y, bin_index, k_index, rng):
        return decode(y, bin_index, self.codebooks, self.params)


def run(
    config: ProtocolConfig,
    aux: AuxChannel,
    src: JointSource,
    spec: FadingSpec,
    codebooks: CodebookSet | None = None,
) -> RunStats:
    """Simulate ``config.trials`` independent blocks; the gain is fixed within a block."""
    if aux.size_x != src.size_x:
        raise ValueError("auxiliary channel and source disagree on |X|")
    params = config.typicality
    i_ux, i_uy = info_pair(aux, src)
    if codebooks is not None:
        n1, n2 = codebooks.N1, codebooks.N2
    else:
        n1, n2 = codebook_sizes(aux, src, config.n, config.delta, config.max_exponent_bits)

    mode = config.codebook_mode
    if codebooks is not None:
        mode = "explicit"
    elif mode == "auto":
        mode = "explicit" if n1 * n2 <= config.max_codebook_words else "ensemble"
    if mode == "explicit":
        codebooks = codebooks or generate_codebooks(config, aux, src, (n1, n2))
        coder = _ExplicitCoder(codebooks, params)
    else:
        coder = _EnsembleCoder(aux, src, config, n1, n2)

    root = np.random.SeedSequence(config.seed)
    gain_seq, code_seq, trial_seq = root.spawn(3)
    if config.gain_states is not None:
        states = config.gain_states
        gains = np.array([states[t % len(states)] for t in range(config.trials)])
    else:
        gains = np.abs(spec.gain.sample(config.trials, np.random.default_rng(gain_seq)))

    code = None
    if config.backend == "gaussian":
        code = GaussianChannelCode(n1 + 1, config.channel_uses, spec.power, code_seq, config.max_channel_messages)

    results = []
    for t, seq in enumerate(trial_seq.spawn(config.trials)):
        rng = np.random.default_rng(seq)
        g = float(gains[t])
        block = sample(src, config.n, int(seq.generate_state(1)[0]))
        k_index, i_star = coder.encode(block.x_seq, rng)
        i_hat = transmit(
            i_star, g, spec, n1, config.backend,
            channel_uses=config.channel_uses, margin=config.margin, rng=rng, code=code,
        )
        if i_hat == i_star:
            l_index = coder.decode(block.y_seq, i_hat, k_index, rng)
            source_failure = l_index != k_index
        else:
            l_index = coder.decode(block.y_seq, i_hat, k_index, rng)
            source_failure = k_index is not U0 and coder.decode(block.y_seq, i_star, k_index, rng) != k_index
        results.append(TrialResult(g, k_index, l_index, i_star, i_hat, k_index == l_index, source_failure))

    errors = np.array([not r.agreed for r in results])
    per_state = _bucketize(gains, errors, config)
    outage_mass = sum(s.trials for s in per_state if s.error_rate > config.alpha)
    return RunStats(
        per_state=tuple(per_state),
        outage_fraction=outage_mass / config.trials,
        empirical_rate=empirical_rate(n1, n2, config.n),
        cardinality_bound_ok=cardinality_bound_ok(n1, n2, config.n, entropy_x(src)),
        N1=n1,
        N2=n2,
        alpha=config.alpha,
        epsilon=params.epsilon,
        mode=mode,
        info_ux=i_ux,
        info_uy=i_uy,
        trials=tuple(results),
        ensemble_bias_bound=getattr(coder, "bias_bound", 0.0),
    )
