"""Crack occurrence along the band: renewal spacing models.

Four interchangeable models describe where cracks sit in the travelling
direction.  All are renewal processes (i.i.d. gaps, the first gap drawn from
the same law as the rest):

* ``PoissonProcess``       exponential gaps with a given rate (cracks per m)
* ``BinomialLattice``      lattice sites every ``pitch`` metres inside a
                           damage zone, each occupied with probability
                           ``p_s``; gaps are pitch * Geometric(p_s)
* ``DeterministicSpacing`` constant gap
* ``Lognormal3``           gaps = shift + LogNormal(log_scale, shape), so the
                           support starts strictly above ``shift``

Stochastic-tension estimators require every gap to exceed the open-draw span;
``min_gap`` exposes each model's hard lower bound so callers can enforce it
(the Poisson model has none and is always rejected there).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import stats

from .errors import DomainError

__all__ = [
    "PoissonProcess",
    "BinomialLattice",
    "DeterministicSpacing",
    "Lognormal3",
    "SpacingModel",
    "sample_positions",
    "sample_counts",
    "count_pmf",
    "moments",
    "min_gap",
]


@dataclass(frozen=True)
class PoissonProcess:
    rate: float  # cracks per metre

    def __post_init__(self):
        if not self.rate >= 0:
            raise DomainError("Poisson rate must be nonnegative")


@dataclass(frozen=True)
class BinomialLattice:
    pitch: float
    p_s: float
    zone: float

    def __post_init__(self):
        if not (self.pitch > 0 and self.zone >= 0):
            raise DomainError("lattice pitch must be positive and zone nonnegative")
        if not (0 < self.p_s <= 1):
            raise DomainError("site occupation probability must lie in (0, 1]")


@dataclass(frozen=True)
class DeterministicSpacing:
    pitch: float

    def __post_init__(self):
        if not self.pitch > 0:
            raise DomainError("pitch must be strictly positive")


@dataclass(frozen=True)
class Lognormal3:
    """Shifted lognormal gaps with support (shift, inf)."""

    log_scale: float
    shape: float
    shift: float

    def __post_init__(self):
        if not (self.shape > 0 and self.shift >= 0):
            raise DomainError("lognormal shape must be positive, shift nonnegative")

    @classmethod
    def from_mean_cv(cls, mean_gap: float, cv: float, shift: float) -> "Lognormal3":
        """Solve (log_scale, shape) from the target gap mean and CV.

        mean = shift + e^{mu + s^2/2} and sd = cv * mean give
        s^2 = log(1 + sd^2 / (mean - shift)^2).
        """
        if not mean_gap > shift:
            raise DomainError(f"mean gap {mean_gap} must exceed the shift {shift}")
        if not cv > 0:
            raise DomainError("gap CV must be strictly positive")
        excess = mean_gap - shift
        var = (cv * mean_gap) ** 2
        s2 = math.log1p(var / excess**2)
        mu = math.log(excess) - 0.5 * s2
        return cls(log_scale=mu, shape=math.sqrt(s2), shift=shift)


SpacingModel = Union[PoissonProcess, BinomialLattice, DeterministicSpacing, Lognormal3]


def min_gap(model: SpacingModel) -> float:
    """Hard lower bound on the gap between successive cracks."""
    if isinstance(model, PoissonProcess):
        return 0.0
    if isinstance(model, (BinomialLattice, DeterministicSpacing)):
        return model.pitch
    if isinstance(model, Lognormal3):
        return model.shift
    raise DomainError(f"unknown spacing model {model!r}")


def _draw_gaps(model: SpacingModel, size: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(model, PoissonProcess):
        if model.rate == 0:
            return np.full(size, np.inf)
        return rng.exponential(1.0 / model.rate, size)
    if isinstance(model, BinomialLattice):
        return model.pitch * rng.geometric(model.p_s, size)
    if isinstance(model, DeterministicSpacing):
        return np.full(size, model.pitch)
    if isinstance(model, Lognormal3):
        return model.shift + rng.lognormal(model.log_scale, model.shape, size)
    raise DomainError(f"unknown spacing model {model!r}")


def sample_positions(model: SpacingModel, band_length: float, seed) -> tuple[np.ndarray, float]:
    """One realization of crack positions within the band.

    Returns the increasing positions <= band_length and the first overshoot
    position beyond it.  For the lattice model, sites past the damage zone do
    not occur, so the overshoot is +inf once the zone is exhausted.
    """
    if not band_length > 0:
        raise DomainError("band length must be strictly positive")
    cutoff = band_length
    if isinstance(model, BinomialLattice):
        if model.zone > band_length:
            raise DomainError(
                f"damage zone {model.zone} exceeds the band length {band_length}"
            )
        cutoff = model.zone
    rng = np.random.default_rng(seed)

    mean_guess = moments(model)[0]
    block = 64 if not math.isfinite(mean_guess) else max(16, int(cutoff / mean_guess * 1.5) + 16)
    gaps = _draw_gaps(model, block, rng)
    pos = np.cumsum(gaps)
    while pos[-1] <= cutoff:
        gaps = _draw_gaps(model, block, rng)
        pos = np.append(pos, pos[-1] + np.cumsum(gaps))
    inside = pos[pos <= cutoff]
    overshoot = float(pos[inside.size])
    if isinstance(model, BinomialLattice):
        overshoot = math.inf
    return inside, overshoot


def sample_counts(model: SpacingModel, band_length: float, m: int, rng) -> np.ndarray:
    """``m`` draws of the crack count over a band of the given length."""
    if not band_length > 0:
        raise DomainError("band length must be strictly positive")
    rng = np.random.default_rng(rng)
    if isinstance(model, PoissonProcess):
        return rng.poisson(model.rate * band_length, m)
    if isinstance(model, BinomialLattice):
        if model.zone > band_length:
            raise DomainError(
                f"damage zone {model.zone} exceeds the band length {band_length}"
            )
        return rng.binomial(int(model.zone // model.pitch), model.p_s, m)
    if isinstance(model, DeterministicSpacing):
        return np.full(m, int(band_length // model.pitch))
    if isinstance(model, Lognormal3):
        counts = np.zeros(m, dtype=np.int64)
        totals = np.zeros(m)
        active = np.ones(m, dtype=bool)
        while np.any(active):
            gaps = model.shift + rng.lognormal(model.log_scale, model.shape, m)
            totals += gaps
            inside = active & (totals <= band_length)
            counts[inside] += 1
            active = inside
        return counts
    raise DomainError(f"unknown spacing model {model!r}")


class CountDistribution:
    """Crack-count law over a band; exact where closed-form, else empirical."""

    def __init__(self, kind, pmf, mean, sample_size=None):
        self.kind = kind
        self._pmf = pmf
        self.mean = mean
        self.sample_size = sample_size

    def pmf(self, k: int) -> float:
        return self._pmf(int(k))


def count_pmf(model: SpacingModel, band_length: float, *, samples: int = 10000,
              seed=0) -> CountDistribution:
    """Distribution of the crack count N(band_length).

    Poisson, lattice and deterministic models have closed forms; the shifted
    lognormal is estimated empirically from ``samples`` simulated bands.
    """
    if not band_length > 0:
        raise DomainError("band length must be strictly positive")
    if isinstance(model, PoissonProcess):
        law = stats.poisson(model.rate * band_length)
        return CountDistribution("poisson", lambda k: float(law.pmf(k)), float(law.mean()))
    if isinstance(model, BinomialLattice):
        if model.zone > band_length:
            raise DomainError(
                f"damage zone {model.zone} exceeds the band length {band_length}"
            )
        n = int(model.zone // model.pitch)
        law = stats.binom(n, model.p_s)
        return CountDistribution("binomial", lambda k: float(law.pmf(k)), n * model.p_s)
    if isinstance(model, DeterministicSpacing):
        fixed = int(band_length // model.pitch)
        return CountDistribution(
            "point", lambda k, fixed=fixed: 1.0 if k == fixed else 0.0, float(fixed)
        )
    if isinstance(model, Lognormal3):
        counts = sample_counts(model, band_length, samples, np.random.default_rng(seed))
        freq = np.bincount(counts) / samples
        return CountDistribution(
            "empirical",
            lambda k, freq=freq: float(freq[k]) if 0 <= k < freq.size else 0.0,
            float(counts.mean()),
            sample_size=samples,
        )
    raise DomainError(f"unknown spacing model {model!r}")


def moments(model: SpacingModel) -> tuple[float, float]:
    """Closed-form (mean, variance) of the gap between successive cracks."""
    if isinstance(model, PoissonProcess):
        if model.rate == 0:
            return math.inf, math.inf
        return 1.0 / model.rate, 1.0 / model.rate**2
    if isinstance(model, BinomialLattice):
        mean = model.pitch / model.p_s
        var = model.pitch**2 * (1.0 - model.p_s) / model.p_s**2
        return mean, var
    if isinstance(model, DeterministicSpacing):
        return model.pitch, 0.0
    if isinstance(model, Lognormal3):
        s2 = model.shape**2
        mean = model.shift + math.exp(model.log_scale + 0.5 * s2)
        var = math.exp(2.0 * model.log_scale + s2) * math.expm1(s2)
        return mean, var
    raise DomainError(f"unknown spacing model {model!r}")
