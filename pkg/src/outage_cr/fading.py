"""Slow-fading gain models, the outage quantile gamma0 and the eta-outage capacity.

Everything here works on the gain magnitude |G|; complex gains are reduced with
:func:`magnitudes` before they reach a model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class GainDistribution:
    """Distribution of the gain magnitude |G| >= 0."""

    continuous = False

    def cdf_below(self, gamma: float) -> float:
        """P[|G| < gamma] (strict inequality)."""
        raise NotImplementedError

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def gamma0(self, eta: float) -> float:
        return bisect_gamma0(self, eta)


@dataclass(frozen=True)
class Constant(GainDistribution):
    g0: float

    def __post_init__(self):
        if not self.g0 >= 0:
            raise ValueError(f"constant gain must be >= 0, got {self.g0}")

    def cdf_below(self, gamma):
        return 1.0 if self.g0 < gamma else 0.0

    def sample(self, count, rng):
        return np.full(count, float(self.g0))

    def gamma0(self, eta):
        # the step at g0 jumps from 0 to 1 > eta
        return float(self.g0)


@dataclass(frozen=True)
class Rayleigh(GainDistribution):
    """Rayleigh magnitude with scale ``scale``; |G|^2 is exponential with mean 2*scale**2."""

    scale: float
    continuous = True

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"Rayleigh scale must be > 0, got {self.scale}")

    @classmethod
    def unit_power(cls) -> "Rayleigh":
        """Rayleigh fading with E|G|^2 = 1."""
        return cls(math.sqrt(0.5))

    def cdf_below(self, gamma):
        if gamma <= 0:
            return 0.0
        return float(-math.expm1(-gamma * gamma / (2.0 * self.scale**2)))

    def sample(self, count, rng):
        return rng.rayleigh(self.scale, size=count)

    def gamma0(self, eta):
        if eta <= 0:
            return 0.0
        g = self.scale * math.sqrt(-2.0 * math.log1p(-eta))
        # closed form can land one ulp past the quantile
        while g > 0 and self.cdf_below(g) > eta:
            g = math.nextafter(g, 0.0)
        return g


@dataclass(frozen=True)
class Empirical(GainDistribution):
    """Step distribution putting mass 1/m on each of m magnitude samples."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if s.size == 0:
            raise ValueError("empirical gain model needs at least one sample")
        if not np.all(np.isfinite(s)) or s[0] < 0:
            raise ValueError("empirical gain samples must be finite and >= 0")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_file(cls, path) -> "Empirical":
        """Read one magnitude per line; blank lines and ``#`` comments are skipped."""
        values = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                values.append(float(line))
        return cls(np.array(values))

    def cdf_below(self, gamma):
        return int(np.searchsorted(self.samples, gamma, side="left")) / self.samples.size

    def sample(self, count, rng):
        return rng.choice(self.samples, size=count, replace=True)

    def gamma0(self, eta):
        s = self.samples
        m = s.size
        # below[k] = number of samples strictly below s[k]
        below = np.searchsorted(s, s, side="left")
        # same division as cdf_below, so the contract holds exactly; eta * m can round below an integer
        ok = np.nonzero(below / m <= eta)[0]
        return float(s[ok[-1]]) if ok.size else float(s[0])

    def __eq__(self, other):
        if not isinstance(other, Empirical):
            return NotImplemented
        return bool(np.array_equal(self.samples, other.samples))

    def __hash__(self):
        return hash(self.samples.tobytes())


@dataclass(frozen=True)
class FadingSpec:
    gain: GainDistribution
    power: float = 1.0
    noise_var: float = 1.0
    eta: float = 0.0

    def __post_init__(self):
        if not self.power >= 0:
            raise ValueError(f"power must be >= 0, got {self.power}")
        if not self.noise_var > 0:
            raise ValueError(f"noise variance must be > 0, got {self.noise_var}")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError(f"eta must lie in [0, 1), got {self.eta}")

    @property
    def snr(self) -> float:
        return self.power / self.noise_var


def magnitudes(gains) -> np.ndarray:
    """Reduce (possibly complex) gains to magnitudes; the phase plays no role."""
    return np.abs(np.asarray(gains))


def cdf_below(gain: GainDistribution, gamma: float) -> float:
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    return gain.cdf_below(gamma)


def bisect_gamma0(gain: GainDistribution, eta: float, tol: float = 1e-12) -> float:
    """sup{gamma : P[|G| < gamma] <= eta} by bisection on the strict CDF."""
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"eta must lie in [0, 1), got {eta}")
    lo, hi = 0.0, 1.0
    while gain.cdf_below(hi) <= eta:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise ValueError("gain distribution has no finite eta-quantile")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if gain.cdf_below(mid) <= eta:
            lo = mid
        else:
            hi = mid
    return lo


def gamma0(gain: GainDistribution, eta: float) -> float:
    """Largest gamma with P[|G| < gamma] <= eta (the supremum is attained)."""
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"eta must lie in [0, 1), got {eta}")
    return gain.gamma0(eta)


def capacity_at_gain(g, snr: float):
    """Instantaneous AWGN capacity log2(1 + |g|^2 P / sigma^2) in bits per channel use."""
    return np.log2(1.0 + np.square(g) * snr)


def outage_capacity(spec: FadingSpec) -> float:
    g = gamma0(spec.gain, spec.eta)
    return float(math.log2(1.0 + spec.power * g * g / spec.noise_var))


def sample_gain(gain: GainDistribution, count: int, seed: int) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be >= 1")
    return gain.sample(count, np.random.default_rng(seed))
