"""Stationary Ornstein-Uhlenbeck tension model.

Tension along the travelling direction is indexed by the length ``s`` (m) of
web that has passed the first support, so the reversion rate ``a`` carries
units 1/m and the volatility ``sigma`` units N/(m*sqrt(m)).  The process

    dT(s) = a * (t0 - T(s)) ds + sigma * dW(s)

is kept stationary by drawing the initial value from N(t0, sigma^2 / (2a)).
All sampling uses the exact Gaussian transition law, never an Euler step, so
values at grid points carry no discretization bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError

__all__ = [
    "OuParams",
    "ConstantTension",
    "TensionModel",
    "sigma_from_cv",
    "stationary_density",
    "conditional_moments",
    "transition_density",
    "sample_path",
]


@dataclass(frozen=True)
class OuParams:
    """Parameters of the stationary Ornstein-Uhlenbeck tension process.

    Attributes
    ----------
    t0 : float
        Long-term mean (set tension), N/m.
    a : float
        Mean-reversion rate, 1/m.
    sigma : float
        Volatility of the driving noise, N/(m*sqrt(m)).
    """

    t0: float
    a: float
    sigma: float

    def __post_init__(self):
        if not (self.t0 > 0 and self.a > 0 and self.sigma > 0):
            raise DomainError(
                f"OU parameters must be strictly positive, got "
                f"t0={self.t0}, a={self.a}, sigma={self.sigma}"
            )

    @property
    def stationary_sd(self) -> float:
        """Standard deviation sigma / sqrt(2a) of the stationary law."""
        return self.sigma / math.sqrt(2.0 * self.a)

    @property
    def cv(self) -> float:
        """Coefficient of variation of the stationary tension."""
        return self.stationary_sd / self.t0

    @classmethod
    def from_cv(cls, t0: float, a: float, c_t: float) -> "OuParams":
        """Build parameters from the stationary coefficient of variation."""
        return cls(t0=t0, a=a, sigma=sigma_from_cv(t0, a, c_t))


@dataclass(frozen=True)
class ConstantTension:
    """Time-constant tension, N/m."""

    t0: float

    def __post_init__(self):
        if not self.t0 > 0:
            raise DomainError(f"constant tension must be positive, got {self.t0}")


TensionModel = Union[ConstantTension, OuParams]


def sigma_from_cv(t0: float, a: float, c_t: float) -> float:
    """Volatility that gives the stationary process a CV of ``c_t``.

    Solves sigma / sqrt(2a) = c_t * t0 for sigma.
    """
    if not (t0 > 0 and a > 0 and c_t > 0):
        raise DomainError(
            f"sigma_from_cv needs strictly positive inputs, got "
            f"t0={t0}, a={a}, c_t={c_t}"
        )
    return c_t * t0 * math.sqrt(2.0 * a)


def stationary_density(params: OuParams, x):
    """Density of the stationary law N(t0, sigma^2/(2a)) at ``x``.

    Accepts scalars or arrays.
    """
    sd = params.stationary_sd
    z = (np.asarray(x, dtype=float) - params.t0) / sd
    out = np.exp(-0.5 * z * z) / (sd * math.sqrt(2.0 * math.pi))
    return float(out) if np.isscalar(x) else out


def conditional_moments(params: OuParams, t: float, x: float) -> tuple[float, float]:
    """Mean and sd of T(s + t) given T(s) = x.

    mean = e^{-a t} x + t0 (1 - e^{-a t}),  sd = sigma sqrt((1 - e^{-2 a t}) / (2 a)).
    """
    if t < 0:
        raise DomainError(f"elapsed length must be nonnegative, got t={t}")
    decay = math.exp(-params.a * t)
    mean = decay * x + params.t0 * (1.0 - decay)
    sd = params.sigma * math.sqrt((1.0 - decay * decay) / (2.0 * params.a))
    return mean, sd


def transition_density(params: OuParams, t: float, x: float, y) :
    """Transition density p(t, x, y) of the process, Gaussian in ``y``.

    Accepts scalar or array ``y``.
    """
    if t <= 0:
        raise DomainError(f"transition density needs t > 0, got t={t}")
    mean, sd = conditional_moments(params, t, x)
    z = (np.asarray(y, dtype=float) - mean) / sd
    out = np.exp(-0.5 * z * z) / (sd * math.sqrt(2.0 * math.pi))
    return float(out) if np.isscalar(y) else out


def sample_path(params: OuParams, grid, seed) -> np.ndarray:
    """Sample T on a strictly increasing grid of s-values.

    The first value is drawn from the stationary law, every later value from
    the exact transition law over the preceding gap.  RNG consumption order:
    one standard normal per grid point, starting with the stationary draw, so
    results are reproducible for a fixed seed.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("grid must be a nonempty 1-d sequence")
    if grid[0] < 0:
        raise DomainError(f"grid must start at s >= 0, got {grid[0]}")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise DomainError("grid must be strictly increasing")

    rng = np.random.default_rng(seed)
    normals = rng.standard_normal(grid.size)
    out = np.empty(grid.size)
    out[0] = params.t0 + params.stationary_sd * normals[0]
    gaps = np.diff(grid)
    decay = np.exp(-params.a * gaps)
    step_sd = params.sigma * np.sqrt((1.0 - decay * decay) / (2.0 * params.a))
    for i in range(1, grid.size):
        out[i] = (
            params.t0
            + (out[i - 1] - params.t0) * decay[i - 1]
            + step_sd[i - 1] * normals[i]
        )
    return out
