"""Edge-crack fracture criterion and the Weibull crack-length law.

A through-thickness edge crack of length xi in a web under line tension T
(N/m) carries the stress intensity K = alpha(xi) T sqrt(pi xi) / h, where
alpha is a geometry weight factor interpolated from a table of F' values over
relative depth r = xi / (2 b):

    alpha(xi) = F'(r) / (1 - r)^{3/2}.

Fracture occurs when K reaches the toughness K_C, so each crack length maps
to a tension ceiling B(xi) = h K_C / (alpha(xi) sqrt(pi xi)).  Because
g(xi) = alpha(xi) sqrt(xi) is strictly increasing (validated when a table is
loaded), B is strictly decreasing and survival events can be rewritten as
quantile conditions on the crack length.

The shipped default table evaluates the standard single-edge-crack polynomial
factor 1.1215 - 0.2306 r + 10.55 r^2 - 21.71 r^3 + 30.382 r^4 on r <= 0.6.
Users with their own calibration can load a replacement CSV
(``relative_depth,f_prime`` with a header row).
"""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError
from .specfun import gamma_fn

__all__ = [
    "WebGeometry",
    "Material",
    "WeightFunctionTable",
    "CrackLengthDist",
    "FractureSetup",
    "fracture_toughness",
    "weight_alpha",
    "stress_intensity",
    "tension_boundary",
]


@dataclass(frozen=True)
class WebGeometry:
    """Open-draw span, half width and thickness of the web, all in metres."""

    span: float
    half_width: float
    thickness: float

    def __post_init__(self):
        if not (self.span > 0 and self.half_width > 0 and self.thickness > 0):
            raise DomainError("geometry dimensions must be strictly positive")


@dataclass(frozen=True)
class Material:
    """Elastic constants; toughness defaults to sqrt(g_c * youngs)."""

    youngs: float
    g_c: float
    k_c: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if not (self.youngs > 0 and self.g_c > 0):
            raise DomainError("material constants must be strictly positive")
        if self.k_c is None:
            object.__setattr__(self, "k_c", fracture_toughness(self.youngs, self.g_c))
        elif not self.k_c > 0:
            raise DomainError("fracture toughness must be strictly positive")


def fracture_toughness(youngs: float, g_c: float) -> float:
    """Toughness K_C = sqrt(g_c * E) in Pa sqrt(m)."""
    if not (youngs > 0 and g_c > 0):
        raise DomainError("fracture_toughness needs strictly positive inputs")
    return math.sqrt(g_c * youngs)


class WeightFunctionTable:
    """Interpolated F' values over relative crack depth.

    Interpolation is monotone cubic, so the loaded data cannot overshoot and
    the strict growth of g(xi) = alpha(xi) sqrt(xi) demanded by the quantile
    rewrite is checked on a fine grid at load time.
    """

    def __init__(self, knots, values):
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.ndim != 1 or knots.shape != values.shape or knots.size < 2:
            raise DomainError("table needs matching 1-d knots and values, >= 2 points")
        if knots[0] != 0.0:
            raise DomainError("relative depth knots must start at 0")
        if np.any(np.diff(knots) <= 0):
            raise DomainError("relative depth knots must be strictly increasing")
        if knots[-1] >= 1.0:
            raise DomainError("relative depth knots must stay below 1")
        self.knots = knots
        self.values = values
        self._interp = PchipInterpolator(knots, values, extrapolate=False)
        self.a_max = float(knots[-1])

        r = np.linspace(1e-9, self.a_max, 4001)
        u = self._interp(r) * np.sqrt(r) / (1.0 - r) ** 1.5
        if np.any(np.diff(u) <= 0):
            raise DomainError(
                "table makes alpha(xi) sqrt(xi) non-monotone; the quantile "
                "rewrite of the fracture criterion needs strict growth"
            )
        payload = knots.tobytes() + values.tobytes()
        self.digest = hashlib.sha256(payload).hexdigest()

    def f_prime(self, r):
        out = self._interp(r)
        if np.any(np.isnan(out)):
            raise DomainError(
                f"relative depth outside supported range [0, {self.a_max}]"
            )
        return out

    @classmethod
    def from_csv(cls, source) -> "WeightFunctionTable":
        """Load from a two-column CSV ``relative_depth,f_prime`` with header."""
        if hasattr(source, "read"):
            text = source.read()
        else:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        rows = [line.strip() for line in text.splitlines() if line.strip()]
        header = rows[0].replace(" ", "").lower()
        if header != "relative_depth,f_prime":
            raise DomainError(
                f"expected header 'relative_depth,f_prime', got {rows[0]!r}"
            )
        data = np.loadtxt(io.StringIO("\n".join(rows[1:])), delimiter=",", ndmin=2)
        if data.shape[1] != 2:
            raise DomainError("weight table CSV must have exactly two columns")
        return cls(data[:, 0], data[:, 1])

    @classmethod
    def default(cls) -> "WeightFunctionTable":
        """The packaged single-edge-crack table (relative depth up to 0.6)."""
        ref = resources.files("opendraw.data").joinpath("weight_single_edge.csv")
        return cls.from_csv(io.StringIO(ref.read_text(encoding="utf-8")))


def weight_alpha(table: WeightFunctionTable, xi, geom: WebGeometry):
    """Geometry weight alpha(xi) = F'(r) / (1 - r)^{3/2}, r = xi / (2 b)."""
    r = np.asarray(xi, dtype=float) / (2.0 * geom.half_width)
    if np.any(r <= 0) or np.any(r >= table.a_max):
        raise DomainError(
            f"crack length outside supported range (0, {2 * geom.half_width * table.a_max})"
        )
    out = table.f_prime(r) / (1.0 - r) ** 1.5
    return float(out) if np.isscalar(xi) else out


def stress_intensity(tension, xi, table: WeightFunctionTable, geom: WebGeometry):
    """Stress intensity K = alpha(xi) T sqrt(pi xi) / h in Pa sqrt(m)."""
    alpha = weight_alpha(table, xi, geom)
    return alpha * tension * np.sqrt(math.pi * np.asarray(xi, dtype=float)) / geom.thickness


def tension_boundary(xi, material: Material, table: WeightFunctionTable, geom: WebGeometry):
    """Largest tension a crack of length xi tolerates, h K_C / (alpha sqrt(pi xi))."""
    alpha = weight_alpha(table, xi, geom)
    return geom.thickness * material.k_c / (alpha * np.sqrt(math.pi * np.asarray(xi, dtype=float)))


@dataclass(frozen=True)
class CrackLengthDist:
    """Weibull law of the i.i.d. crack lengths (scale in metres)."""

    scale: float
    shape: float

    def __post_init__(self):
        if not (self.scale > 0 and self.shape > 0):
            raise DomainError("Weibull scale and shape must be strictly positive")

    @classmethod
    def from_mean(cls, mean: float, shape: float) -> "CrackLengthDist":
        """Scale solved from a target mean, lambda = mean / Gamma(1 + 1/k)."""
        if mean <= 0:
            raise DomainError("mean crack length must be strictly positive")
        return cls(scale=mean / gamma_fn(1.0 + 1.0 / shape), shape=shape)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError("Weibull cdf needs x >= 0")
        out = -np.expm1(-((x / self.scale) ** self.shape))
        return float(out) if out.ndim == 0 else out

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError("Weibull pdf needs x >= 0")
        with np.errstate(divide="ignore"):
            z = x / self.scale
            out = (self.shape / self.scale) * z ** (self.shape - 1.0) * np.exp(-(z ** self.shape))
        return float(out) if out.ndim == 0 else out

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(p <= 0) or np.any(p >= 1):
            raise DomainError("Weibull quantile needs p in (0, 1)")
        out = self.scale * (-np.log1p(-p)) ** (1.0 / self.shape)
        return float(out) if out.ndim == 0 else out

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Inverse-transform draws; consumes n uniforms from ``rng``."""
        u = rng.random(n)
        return self.scale * (-np.log1p(-u)) ** (1.0 / self.shape)

    def mean(self) -> float:
        return self.scale * gamma_fn(1.0 + 1.0 / self.shape)

    def variance(self) -> float:
        g1 = gamma_fn(1.0 + 1.0 / self.shape)
        g2 = gamma_fn(1.0 + 2.0 / self.shape)
        return self.scale ** 2 * (g2 - g1 * g1)

    def cv(self) -> float:
        return math.sqrt(self.variance()) / self.mean()


@dataclass(frozen=True)
class FractureSetup:
    """Geometry, material and weight table bundled for the estimators."""

    geometry: WebGeometry
    material: Material
    table: WeightFunctionTable

    @classmethod
    def with_default_table(cls, geometry: WebGeometry, material: Material) -> "FractureSetup":
        return cls(geometry, material, WeightFunctionTable.default())

    @property
    def xi_max(self) -> float:
        """Largest supported crack length, 2 b * a_max."""
        return 2.0 * self.geometry.half_width * self.table.a_max

    def alpha(self, xi):
        return weight_alpha(self.table, xi, self.geometry)

    def stress_intensity(self, tension, xi):
        return stress_intensity(tension, xi, self.table, self.geometry)

    def boundary(self, xi):
        return tension_boundary(xi, self.material, self.table, self.geometry)

    def boundary_capped(self, xi) -> np.ndarray:
        """B(xi) with lengths at or beyond the table range pinned to 0.

        Cracks deeper than the supported relative depth are treated as certain
        fracture, which is the conservative reading of the table cap.
        """
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        out = np.zeros(xi.shape)
        ok = (xi > 0) & (xi < self.xi_max)
        if np.any(ok):
            out[ok] = self.boundary(xi[ok])
        return out

    def g(self, xi):
        """g(xi) = alpha(xi) sqrt(xi), strictly increasing on (0, xi_max)."""
        return self.alpha(xi) * np.sqrt(np.asarray(xi, dtype=float))

    def g_inverse(self, target: float, tol: float = 1e-12) -> float:
        """Invert g by bisection to absolute tolerance ``tol`` on xi."""
        if not target > 0:
            raise DomainError(f"g is positive, cannot invert target {target}")
        lo, hi = 0.0, self.xi_max * (1.0 - 1e-12)
        if target >= float(self.g(hi)):
            raise DomainError(
                f"target {target} at or beyond g(xi_max)={float(self.g(hi)):.6g}"
            )
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if mid <= 0.0 or float(self.g(mid)) < target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def critical_length(self, tension: float) -> float:
        """Largest crack length surviving the given tension (capped at xi_max)."""
        if not tension > 0:
            raise DomainError("tension must be strictly positive")
        target = self.geometry.thickness * self.material.k_c / (tension * math.sqrt(math.pi))
        hi = self.xi_max * (1.0 - 1e-12)
        if target >= float(self.g(hi)):
            return self.xi_max
        return self.g_inverse(target)
