"""Spectral expansion of the OU first-passage survival function.

For a stationary-parameter OU process started at y below a constant boundary
x, the probability of not reaching the boundary within a travelled length s is

    P[tau > s] = sum_n c_n exp(-lambda_n s),

where, in standardized coordinates xbar = -sqrt(2a)/sigma (x - t0) (and ybar
likewise), lambda_n = a nu_n with nu_n the positive roots of
H_nu(xbar/sqrt(2)) = 0 and

    c_n = - H_{nu_n}(ybar/sqrt(2)) / (nu_n dH_nu(xbar/sqrt(2))/dnu |_{nu_n}).

The series is truncated after the first term whose bound |c_n| e^{-lambda_n h}
at the requested horizon h drops to 1e-16.  Root sets depend on the boundary
only, so they are cached per standardized boundary and reused across start
values (the start-value integral of q1 leans on this); built expansions are
cached per (boundary, start) pair.  Both caches are bounded LRU maps guarded
by a lock; entries are idempotent, so last-writer-wins is safe.
"""

from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError
from .specfun import RootScanConfig, _RootScan, hermite_h_dnu
from .tension import OuParams

__all__ = ["SurvivalExpansion", "build_expansion", "survival", "clear_caches"]

TRUNCATION_THRESHOLD = 1e-16

# Below ~0.01 relaxation lengths the truncated series is not trusted; callers
# must rebuild with a smaller horizon or fall back to path simulation.
S_MIN_FACTOR = 0.01

_SQRT2 = math.sqrt(2.0)
_LOG_THRESHOLD = -math.log(TRUNCATION_THRESHOLD)

_CACHE_SYSTEMS = 4096
_CACHE_EXPANSIONS = 4096

_lock = threading.Lock()
_root_systems: OrderedDict = OrderedDict()
_expansions: OrderedDict = OrderedDict()


class _RootSystem:
    """Roots and coefficient denominators for one standardized boundary."""

    def __init__(self, z_arg: float, cfg: RootScanConfig):
        self.z_arg = z_arg
        self._scan = _RootScan(z_arg, cfg)
        self._denoms: list[float] = []
        self._lock = threading.Lock()

    def _ensure(self, count: int) -> None:
        while len(self._denoms) < count:
            nu = self._scan.next_root()
            self._denoms.append(nu * hermite_h_dnu(nu, self.z_arg))

    def _ensure_order(self, order: float) -> None:
        while not self._scan.roots or self._scan.roots[-1] < order:
            nu = self._scan.next_root()
            self._denoms.append(nu * hermite_h_dnu(nu, self.z_arg))

    def coeffs_for(self, zys: np.ndarray, nu_horizon: float, extra_terms: int = 0):
        """Coefficient matrix and roots truncated at the given horizon.

        ``nu_horizon`` is a * horizon (the rule weighs e^{-nu * nu_horizon}).
        Row n of the returned matrix holds c_n for every start in ``zys``;
        the count satisfies the truncation rule for the largest-coefficient
        start, so every column meets it too.
        """
        zys = np.asarray(zys, dtype=float)
        z2 = zys * zys
        with self._lock:
            self._ensure_order(min(_LOG_THRESHOLD / nu_horizon, self._scan.cfg.max_order))
            rows: list[np.ndarray] = []
            done = 0
            while True:
                new = np.array(self._scan.roots[done:])
                if new.size:
                    col = new[:, None]
                    t1 = special.hyp1f1(-0.5 * col, 0.5, z2[None, :])
                    t2 = special.hyp1f1(0.5 * (1.0 - col), 1.5, z2[None, :])
                    h = np.exp2(col) * math.sqrt(math.pi) * (
                        t1 * special.rgamma(0.5 * (1.0 - col))
                        - 2.0 * zys[None, :] * t2 * special.rgamma(-0.5 * col)
                    )
                    rows.append(-h / np.array(self._denoms[done:len(self._scan.roots)])[:, None])
                    done = len(self._scan.roots)
                cmat = np.vstack(rows) if len(rows) > 1 else rows[0]
                nus = np.array(self._scan.roots[:done])
                bound = np.abs(cmat).max(axis=1) * np.exp(-nus * nu_horizon)
                hits = np.nonzero(bound <= TRUNCATION_THRESHOLD)[0]
                if hits.size and int(hits[0]) + 1 + extra_terms <= nus.size:
                    n = int(hits[0]) + 1 + extra_terms
                    return cmat[:n], nus[:n]
                # rule not met yet (or extra terms exceed the evaluated set)
                self._ensure(len(self._denoms) + 4)


def _system_for(z_arg: float, cfg: RootScanConfig) -> _RootSystem:
    key = (z_arg, cfg.initial_step, cfg.refine_tol, cfg.max_order)
    with _lock:
        sys_ = _root_systems.get(key)
        if sys_ is not None:
            _root_systems.move_to_end(key)
            return sys_
        sys_ = _root_systems[key] = _RootSystem(z_arg, cfg)
        while len(_root_systems) > _CACHE_SYSTEMS:
            _root_systems.popitem(last=False)
    return sys_


@dataclass
class SurvivalExpansion:
    """Truncated spectral series for one (boundary, start) pair.

    ``coeffs`` and ``rates`` hold (c_n, lambda_n); ``horizon`` is the length
    at which the truncation rule was applied and ``s_min`` the guard below
    which evaluation is refused.  ``clamp_events`` counts evaluations whose
    raw sum fell outside [0, 1] (truncation can leave ~1e-16 residue).
    """

    boundary: float
    start: float
    coeffs: np.ndarray
    rates: np.ndarray
    horizon: float
    s_min: float
    params: OuParams
    xbar: float
    ybar: float
    clamp_events: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.start >= self.boundary:
            raise DomainError(
                f"expansion needs start < boundary, got {self.start} >= {self.boundary}"
            )
        lam = np.asarray(self.rates)
        if lam.size == 0 or np.any(lam <= 0) or np.any(np.diff(lam) <= 0):
            raise DomainError("rates must be positive and strictly increasing")

    @property
    def terms(self) -> list[tuple[float, float]]:
        return list(zip(self.coeffs.tolist(), self.rates.tolist()))


def standardize(params: OuParams, level: float) -> float:
    """Map a tension level to the standardized coordinate -(level - t0)/sd."""
    return -math.sqrt(2.0 * params.a) / params.sigma * (level - params.t0)


def build_expansion(
    params: OuParams,
    boundary: float,
    start: float,
    horizon: float,
    cfg: RootScanConfig | None = None,
    *,
    extra_terms: int = 0,
    s_min: float | None = None,
) -> SurvivalExpansion:
    """Build (or fetch from cache) the truncated expansion for P[tau > s].

    ``horizon`` should be the smallest s the expansion will be evaluated at;
    the truncation rule is applied there.  ``extra_terms`` forces additional
    terms beyond the rule (used by truncation-robustness checks).
    """
    if start >= boundary:
        raise DomainError(
            f"expansion needs start < boundary, got {start} >= {boundary}"
        )
    if horizon <= 0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    cfg = cfg or RootScanConfig()
    if s_min is None:
        s_min = S_MIN_FACTOR / params.a

    xbar = standardize(params, boundary)
    ybar = standardize(params, start)
    key = (
        xbar, ybar, params.a, horizon, extra_terms, s_min,
        cfg.initial_step, cfg.refine_tol, cfg.max_order,
    )
    with _lock:
        cached = _expansions.get(key)
        if cached is not None:
            _expansions.move_to_end(key)
    if cached is not None:
        return cached

    system = _system_for(xbar / _SQRT2, cfg)
    cmat, nus = system.coeffs_for(
        np.array([ybar / _SQRT2]), params.a * horizon, extra_terms
    )
    exp = SurvivalExpansion(
        boundary=boundary,
        start=start,
        coeffs=cmat[:, 0].copy(),
        rates=params.a * nus,
        horizon=horizon,
        s_min=s_min,
        params=params,
        xbar=xbar,
        ybar=ybar,
    )
    with _lock:
        exp = _expansions.setdefault(key, exp)
        while len(_expansions) > _CACHE_EXPANSIONS:
            _expansions.popitem(last=False)
    return exp


def survival(exp: SurvivalExpansion, s: float) -> float:
    """Evaluate P[tau > s] from the truncated series, clamped to [0, 1]."""
    if s < exp.s_min:
        raise DomainError(
            f"s={s} is below the series guard s_min={exp.s_min}; "
            "rebuild with a smaller horizon or use the path oracle"
        )
    val = float(np.sum(exp.coeffs * np.exp(-exp.rates * s)))
    if val < 0.0 or val > 1.0:
        exp.clamp_events += 1
        val = min(1.0, max(0.0, val))
    return val


def survival_profile(
    params: OuParams,
    boundary: float,
    starts: np.ndarray,
    s: float,
    cfg: RootScanConfig | None = None,
) -> np.ndarray:
    """P[tau > s] for many starts below one boundary, sharing the root set.

    Fast path for integrals over the start value; equivalent to building one
    expansion per start (with horizon s) and evaluating it at s.
    """
    if s < S_MIN_FACTOR / params.a:
        raise DomainError(f"s={s} is below the series guard {S_MIN_FACTOR / params.a}")
    starts = np.asarray(starts, dtype=float)
    if np.any(starts >= boundary):
        raise DomainError("all starts must lie below the boundary")
    cfg = cfg or RootScanConfig()
    system = _system_for(standardize(params, boundary) / _SQRT2, cfg)
    zys = np.array([standardize(params, y) / _SQRT2 for y in starts])
    cmat, nus = system.coeffs_for(zys, params.a * s)
    vals = cmat.T @ np.exp(-params.a * nus * s)
    return np.clip(vals, 0.0, 1.0)


def clear_caches() -> None:
    """Drop all cached root systems and expansions (mainly for tests)."""
    with _lock:
        _root_systems.clear()
        _expansions.clear()
