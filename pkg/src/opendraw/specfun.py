"""Real-order Hermite function machinery.

The first-passage expansion needs H_nu(z) for arbitrary real order nu, its
derivative in the order, and the positive roots of nu -> H_nu(z).  H_nu is
evaluated through the two-term confluent-hypergeometric representation

    H_nu(z) = 2^nu sqrt(pi) [ M(-nu/2, 1/2, z^2) / Gamma((1-nu)/2)
                              - 2 z M((1-nu)/2, 3/2, z^2) / Gamma(-nu/2) ],

which is analytic in nu (the reciprocal gammas are entire) and reduces to the
physicists' Hermite polynomial at integer order.  Roots are bracketed by a
fixed-step sign scan from the preceding root and refined with Brent's
bisection-safeguarded method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import DomainError, PoleError, RangeError, ScanExhaustedError

__all__ = [
    "RootScanConfig",
    "gamma_fn",
    "kummer_m",
    "hermite_h",
    "hermite_h_dnu",
    "find_hermite_roots",
]

_SQRT_PI = math.sqrt(math.pi)

# brentq refuses relative tolerances below 4 ulp
_BRENT_RTOL = 8.9e-16


@dataclass(frozen=True)
class RootScanConfig:
    """Bracketing and refinement settings for the order-root scan.

    ``initial_step`` must stay below the smallest root gap of the boundary in
    use; the shipped default is safe for the gaps (order ~1) this engine
    produces and is validated by the step-halving test in the suite.
    """

    initial_step: float = 0.05
    refine_tol: float = 1e-10
    max_order: float = 200.0

    def __post_init__(self):
        if not (self.initial_step > 0 and self.refine_tol > 0 and self.max_order > 0):
            raise DomainError("root scan settings must be strictly positive")


def gamma_fn(x: float) -> float:
    """Euler Gamma at real ``x``; raises PoleError at non-positive integers."""
    if x <= 0 and x == math.floor(x):
        raise PoleError(f"gamma pole at x={x}")
    return float(special.gamma(x))


def kummer_m(a: float, b: float, z: float) -> float:
    """Confluent hypergeometric M(a, b, z).

    Thin wrapper over scipy's hyp1f1, which holds ~1e-13 relative accuracy
    across the orders and arguments reachable from this engine's boundaries
    (checked against arbitrary-precision references in the test suite).
    """
    if b <= 0 and b == math.floor(b):
        raise DomainError(f"kummer_m pole at b={b}")
    return float(special.hyp1f1(a, b, z))


def _hermite_raw(nu, z: float):
    """H_nu(z) for scalar or ndarray ``nu``; no finiteness check."""
    z2 = z * z
    term1 = special.hyp1f1(-0.5 * nu, 0.5, z2) * special.rgamma(0.5 * (1.0 - nu))
    term2 = special.hyp1f1(0.5 * (1.0 - nu), 1.5, z2) * special.rgamma(-0.5 * nu)
    return np.exp2(nu) * _SQRT_PI * (term1 - 2.0 * z * term2)


def _hermite_scalar(nu: float, z: float, z2: float) -> float:
    """Float-only H_nu(z); the hot path of root refinement."""
    term1 = special.hyp1f1(-0.5 * nu, 0.5, z2) * special.rgamma(0.5 * (1.0 - nu))
    term2 = special.hyp1f1(0.5 * (1.0 - nu), 1.5, z2) * special.rgamma(-0.5 * nu)
    return 2.0**nu * _SQRT_PI * (term1 - 2.0 * z * term2)


def hermite_h(nu, z: float):
    """Hermite function H_nu(z) for real order ``nu`` (scalar or array).

    At integer order this coincides with the physicists' Hermite polynomial.
    Scalar calls raise RangeError if the value overflows.
    """
    if np.isscalar(nu):
        val = float(_hermite_raw(float(nu), z))
        if not math.isfinite(val):
            raise RangeError(f"hermite_h overflow at nu={nu}, z={z}")
        return val
    return _hermite_raw(np.asarray(nu, dtype=float), z)


def hermite_h_dnu(nu: float, z: float) -> float:
    """Order derivative dH_nu(z)/dnu by Richardson-extrapolated central difference.

    Step h = max(1e-6, 1e-8 * nu); one Richardson pass combines the h and h/2
    central differences, (4 D(h/2) - D(h)) / 3.
    """
    if nu <= 0 and nu + 1e-6 <= 0:
        raise DomainError(f"hermite_h_dnu needs nu > 0, got {nu}")
    h = max(1e-6, 1e-8 * nu)
    vals = _hermite_raw(np.array([nu + h, nu - h, nu + 0.5 * h, nu - 0.5 * h]), z)
    if not np.all(np.isfinite(vals)):
        raise RangeError(f"hermite_h_dnu overflow at nu={nu}, z={z}")
    d_h = (vals[0] - vals[1]) / (2.0 * h)
    d_half = (vals[2] - vals[3]) / h
    return float((4.0 * d_half - d_h) / 3.0)


class _RootScan:
    """Incremental scan for the positive roots of nu -> H_nu(z).

    Steps ``initial_step`` at a time from the preceding root (zero before the
    first), evaluating H in blocks, and refines each sign change with brentq.
    Keeps its position so callers can pull roots one by one.
    """

    _BLOCK = 32

    def __init__(self, z: float, cfg: RootScanConfig):
        self.z = z
        self._z2 = z * z
        self.cfg = cfg
        self._lo = 0.0
        self._flo = 1.0  # H_0 = 1
        self._block = None
        self._cursor = 0
        self.roots: list[float] = []

    def _f(self, nu: float) -> float:
        return _hermite_scalar(nu, self.z, self._z2)

    def _refine(self, lo: float, hi: float) -> float:
        if lo == 0.0:
            # First bracket starts at the origin where the root may be tiny;
            # refine in log order so the root keeps relative accuracy.
            u = optimize.brentq(lambda t: self._f(math.exp(t)),
                                math.log(1e-280), math.log(hi),
                                xtol=1e-12, rtol=_BRENT_RTOL)
            return math.exp(u)
        return optimize.brentq(self._f, lo, hi,
                               xtol=self.cfg.refine_tol, rtol=_BRENT_RTOL)

    def _next_block(self):
        cfg = self.cfg
        n = min(self._BLOCK, int(math.ceil((cfg.max_order - self._lo) / cfg.initial_step)))
        grid = self._lo + cfg.initial_step * np.arange(1, n + 1)
        vals = _hermite_raw(grid, self.z)
        if not np.all(np.isfinite(vals)):
            raise RangeError(f"hermite_h overflow while scanning at z={self.z}")
        return grid, vals

    def next_root(self) -> float:
        cfg = self.cfg
        while self._lo < cfg.max_order:
            if self._block is None or self._cursor >= self._block[0].size:
                self._block = self._next_block()
                self._cursor = 0
            grid, vals = self._block
            while self._cursor < grid.size:
                hi = float(grid[self._cursor])
                fhi = float(vals[self._cursor])
                self._cursor += 1
                if fhi == 0.0:
                    root = hi
                elif (fhi < 0) != (self._flo < 0):
                    root = self._refine(hi - cfg.initial_step, hi)
                else:
                    self._lo, self._flo = hi, fhi
                    continue
                # resume just past the root with a definite sign; the block
                # restarts there so the next probe is exactly one step away
                self._lo, self._flo = root + 1e-9, self._f(root + 1e-9)
                self._block = None
                self.roots.append(root)
                return root
        raise ScanExhaustedError(
            f"only {len(self.roots)} roots below max_order={cfg.max_order} at z={self.z}",
            roots_found=list(self.roots),
        )


def find_hermite_roots(z: float, count: int, cfg: RootScanConfig | None = None) -> np.ndarray:
    """First ``count`` positive roots of H_nu(z) = 0, in increasing order.

    Raises ScanExhaustedError (carrying the roots located so far) if the scan
    ceiling is reached first.
    """
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    cfg = cfg or RootScanConfig()
    scan = _RootScan(z, cfg)
    for _ in range(count):
        scan.next_root()
    return np.array(scan.roots)
