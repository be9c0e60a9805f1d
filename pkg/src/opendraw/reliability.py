"""Transit nonfracture probability estimators.

Two regimes:

* constant tension: the per-crack survival probability collapses to
  qbar = P[T0 < B(xi)] = F_xi(g^{-1}(h K_C / (T0 sqrt(pi)))), and the band
  reliability follows from the crack-count law, either in closed form
  (Poisson, lattice, deterministic spacing) or by conditional Monte Carlo
  over sampled counts;

* Ornstein-Uhlenbeck tension: conditioning on crack positions and using the
  Markov property reduces the band survival to a product of three
  ingredients, evaluated once and chained per sampled layout:

      q1        P[no boundary crossing during one transit, stationary start]
      q2        P[stationary tension below the boundary at one instant]
      q3(gap)   P[below the boundary at the end of one transit and at the
                start of the next, gap metres later]

  with chain value q1 (q1 / q2^2)^{k-1} prod q3(gap_i) for k cracks.

Monte Carlo estimates report the standard error of the outer sample; the
propagated numeric error of a chain is bounded by the total-differential
rule (eps_q1 + 2 eps_q2 + eps_q3_max) * k_max, which ``error_bound`` exposes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from . import cracks as crk
from . import first_passage as fp
from .errors import DomainError
from .fracture import CrackLengthDist, FractureSetup
from .specfun import RootScanConfig
from .tension import OuParams

__all__ = [
    "ValueWithError",
    "QIntegrals",
    "ReliabilityResult",
    "CriticalTensionResult",
    "qbar",
    "r1_poisson",
    "r1_binomial",
    "r1_deterministic",
    "r1_conditional_mc",
    "compute_q1",
    "compute_q2",
    "compute_q3",
    "compute_q_integrals",
    "qbar_chain",
    "r2_conditional_mc",
    "r2_deterministic",
    "error_bound",
    "critical_tension_poisson",
    "critical_tension_binomial",
    "critical_tension_numeric",
]

M_OUTER_DEFAULT = 100
N_INNER_DEFAULT = 20000

# qbar comes from a 1e-12 bisection on the crack length, so its propagated
# numeric error is at most the local density times that width.
QBAR_EPS = 1e-10

# integration window for stationary starts, in stationary standard deviations
_Y_WINDOW_SD = 8.0
# boundaries this far above the mean cannot be hit within a transit at these
# tolerances (hit probability < 1e-10 per relaxation length at 7 sd), and the
# spectral machinery would overflow much beyond; survival is taken as 1 there
_FAR_BOUNDARY_SD = 7.0
_GAP_KEY_DECIMALS = 9


def _phi(z):
    return np.exp(-0.5 * np.square(z)) / math.sqrt(2.0 * math.pi)


def _as_seedseq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


_ndtr = special.ndtr


@dataclass(frozen=True)
class ValueWithError:
    value: float
    error: float


@dataclass
class QIntegrals:
    """The q1 / q2 / q3 layer shared by the stochastic-tension estimators."""

    q1: ValueWithError
    q2: ValueWithError
    q3: dict[float, ValueWithError]
    span: float

    def q3_for(self, gap: float) -> ValueWithError:
        key = round(gap, _GAP_KEY_DECIMALS)
        try:
            return self.q3[key]
        except KeyError:
            raise DomainError(f"no q3 available for gap {gap}") from None


@dataclass
class ReliabilityResult:
    """Estimate with its Monte Carlo and propagated numeric uncertainties."""

    estimate: float
    std_error: float
    numeric_error_bound: float
    samples: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.estimate <= 1.0):
            raise DomainError(f"estimate {self.estimate} outside [0, 1]")
        if self.std_error < 0 or self.numeric_error_bound < 0:
            raise DomainError("uncertainties must be nonnegative")


def qbar(t0: float, dist: CrackLengthDist, frac: FractureSetup) -> float:
    """P[T0 < B(xi)] for constant tension, via the quantile rewrite."""
    if not t0 > 0:
        raise DomainError("tension must be strictly positive")
    return float(dist.cdf(frac.critical_length(t0)))


def r1_poisson(rate: float, band_length: float, q_bar: float,
               eps_qbar: float = QBAR_EPS) -> ReliabilityResult:
    """Closed form exp(rate * S * (qbar - 1)) for Poisson crack occurrence."""
    if rate < 0 or band_length <= 0 or not (0.0 <= q_bar <= 1.0):
        raise DomainError("r1_poisson needs rate >= 0, S > 0 and qbar in [0, 1]")
    est = math.exp(rate * band_length * (q_bar - 1.0))
    bound = rate * band_length * est * eps_qbar
    return ReliabilityResult(est, 0.0, bound, 0, {"model": "r1_poisson"})


def r1_binomial(p_s: float, zone: float, pitch: float, q_bar: float,
                eps_qbar: float = QBAR_EPS) -> ReliabilityResult:
    """Closed form (1 + p_s (qbar - 1))^n with n lattice sites in the zone."""
    if not (0.0 <= p_s <= 1.0) or pitch <= 0 or zone < 0 or not (0.0 <= q_bar <= 1.0):
        raise DomainError("r1_binomial arguments out of range")
    n = int(zone // pitch)
    base = 1.0 + p_s * (q_bar - 1.0)
    est = base**n
    bound = n * p_s * base ** max(n - 1, 0) * eps_qbar
    return ReliabilityResult(est, 0.0, bound, 0, {"model": "r1_binomial", "sites": n})


def r1_deterministic(pitch: float, band_length: float, q_bar: float,
                     eps_qbar: float = QBAR_EPS) -> ReliabilityResult:
    """Closed form qbar^floor(S / pitch) for constant crack spacing."""
    if pitch <= 0 or band_length <= 0 or not (0.0 <= q_bar <= 1.0):
        raise DomainError("r1_deterministic arguments out of range")
    m = int(band_length // pitch)
    est = q_bar**m
    bound = m * q_bar ** max(m - 1, 0) * eps_qbar
    return ReliabilityResult(est, 0.0, bound, 0, {"model": "r1_deterministic", "cracks": m})


def r1_conditional_mc(model: crk.SpacingModel, t0: float, dist: CrackLengthDist,
                      frac: FractureSetup, band_length: float,
                      m_outer: int = M_OUTER_DEFAULT, seed=0) -> ReliabilityResult:
    """Conditional MC over sampled crack counts: mean of qbar^k.

    Conditioning on the count replaces the per-band fracture indicator with
    its expectation qbar^k, so the only sampling noise left is the count draw.
    """
    if m_outer < 1:
        raise DomainError("need at least one outer sample")
    q_bar = qbar(t0, dist, frac)
    counts = crk.sample_counts(model, band_length, m_outer, np.random.default_rng(seed))
    vals = np.where(counts == 0, 1.0, q_bar ** counts.astype(float))
    se = float(vals.std(ddof=1) / math.sqrt(m_outer)) if m_outer > 1 else 0.0
    bound = QBAR_EPS * float(counts.max(initial=0))
    return ReliabilityResult(
        float(vals.mean()), se, bound, m_outer,
        {"model": f"r1_mc[{type(model).__name__}]", "seed": seed, "qbar": q_bar},
    )


def _q1_inner(params: OuParams, boundary: float, span: float,
              nodes: np.ndarray, weights: np.ndarray,
              cfg: RootScanConfig | None) -> float:
    """Gauss-Legendre integral of survival(span) f_T(y) over admissible starts."""
    sd = params.stationary_sd
    y_lo = params.t0 - _Y_WINDOW_SD * sd
    y_hi = min(boundary, params.t0 + _Y_WINDOW_SD * sd)
    if y_hi <= y_lo:
        return 0.0
    half = 0.5 * (y_hi - y_lo)
    mid = 0.5 * (y_hi + y_lo)
    ys = mid + half * nodes
    surv = fp.survival_profile(params, boundary, ys, span, cfg)
    dens = _phi((ys - params.t0) / sd) / sd
    return half * float(np.sum(weights * surv * dens))


def compute_q1(params: OuParams, dist: CrackLengthDist, frac: FractureSetup,
               span: float, n: int, seed=0, cfg: RootScanConfig | None = None,
               quad_points: int = 64) -> ValueWithError:
    """q1 = P[no crossing of B(xi) during one transit] by MC over xi.

    For each sampled crack length the inner start-value integral uses the
    cached root set of its boundary and fixed Gauss-Legendre quadrature over
    stationary starts within 8 sd.  Boundaries more than 8 sd above the mean
    cannot be reached within a transit at these tolerances, so their inner
    value is the closed-form start mass; boundaries below the start window
    contribute zero.
    """
    if n < 1:
        raise DomainError("need at least one sample")
    if span < fp.S_MIN_FACTOR / params.a:
        raise DomainError(
            f"span {span} below the series guard {fp.S_MIN_FACTOR / params.a}"
        )
    rng = np.random.default_rng(seed)
    xi = dist.sample(n, rng)
    bounds = frac.boundary_capped(xi)
    sd = params.stationary_sd
    bstd = (bounds - params.t0) / sd

    nodes, weights = np.polynomial.legendre.leggauss(quad_points)

    vals = np.zeros(n)
    far = bstd >= _FAR_BOUNDARY_SD
    vals[far] = _ndtr(np.minimum(bstd[far], _Y_WINDOW_SD)) - _ndtr(-_Y_WINDOW_SD)
    mid_idx = np.nonzero((bstd > -_Y_WINDOW_SD) & ~far)[0]
    for i in mid_idx:
        vals[i] = _q1_inner(params, float(bounds[i]), span, nodes, weights, cfg)
    se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return ValueWithError(float(vals.mean()), se)


def compute_q2(params: OuParams, dist: CrackLengthDist, frac: FractureSetup,
               epsabs: float = 1e-8) -> ValueWithError:
    """q2 = P[T(0) < B(xi)] by adaptive quadrature over the length quantile."""
    sd = params.stationary_sd

    def integrand(u: float) -> float:
        u = min(max(u, 1e-15), 1.0 - 1e-15)
        b = float(frac.boundary_capped(dist.quantile(u))[0])
        return float(_ndtr((b - params.t0) / sd))

    pts = []
    for level in (params.t0 + _Y_WINDOW_SD * sd, params.t0 - _Y_WINDOW_SD * sd):
        if level > 0:
            pts.append(float(dist.cdf(frac.critical_length(level))))
    pts = sorted({min(max(p, 1e-12), 1.0 - 1e-12) for p in pts})
    val, err = integrate.quad(integrand, 0.0, 1.0, points=pts, limit=200,
                              epsabs=epsabs, epsrel=0.0)
    return ValueWithError(float(val), float(max(err, epsabs)))


def compute_q3(params: OuParams, dist: CrackLengthDist, frac: FractureSetup,
               gap: float, span: float, n: int, seed=0) -> ValueWithError:
    """q3(gap) by MC over two crack lengths and a stationary start.

    Estimates E[ 1{u < B(z)} F_Gauss(mu(u, gap), sigma(gap), B(x)) ] where the
    Gaussian is the tension law a transit-end value u propagates to over the
    remaining gap - span metres.  RNG order: n lengths for x, n for z, then n
    standard normals for u.
    """
    if n < 1:
        raise DomainError("need at least one sample")
    if gap <= span:
        raise DomainError(f"gap {gap} must exceed the transit span {span}")
    rng = np.random.default_rng(seed)
    b_x = frac.boundary_capped(dist.sample(n, rng))
    b_z = frac.boundary_capped(dist.sample(n, rng))
    sd = params.stationary_sd
    u = params.t0 + sd * rng.standard_normal(n)

    decay = math.exp(-params.a * (gap - span))
    mu = params.t0 + (u - params.t0) * decay
    sig = sd * math.sqrt(max(1.0 - decay * decay, 0.0))
    if sig == 0.0:
        below = (u < b_x) & (u < b_z)
        vals = below.astype(float)
    else:
        vals = (u < b_z) * _ndtr((b_x - mu) / sig)
    se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return ValueWithError(float(vals.mean()), se)


def compute_q_integrals(params: OuParams, dist: CrackLengthDist, frac: FractureSetup,
                        span: float, gaps, n: int, seed=0,
                        cfg: RootScanConfig | None = None) -> QIntegrals:
    """Evaluate q1, q2 and q3 for every distinct gap (rounded to 1e-9 m)."""
    seed_q1, seed_q3 = _as_seedseq(seed).spawn(2)
    q1 = compute_q1(params, dist, frac, span, n, seed_q1, cfg)
    q2 = compute_q2(params, dist, frac)
    q3: dict[float, ValueWithError] = {}
    keys = sorted({round(float(g), _GAP_KEY_DECIMALS) for g in gaps})
    for sub, key in zip(seed_q3.spawn(len(keys)), keys):
        q3[key] = compute_q3(params, dist, frac, key, span, n, sub)
    return QIntegrals(q1=q1, q2=q2, q3=q3, span=span)


def qbar_chain(q: QIntegrals, gaps) -> float:
    """Chain probability q1 (q1/q2^2)^{k-1} prod q3(gap_i) for k cracks.

    ``gaps`` holds the k-1 distances between successive cracks; an empty
    sequence (a single crack) returns q1.
    """
    gaps = list(gaps)
    for g in gaps:
        if g <= q.span:
            raise DomainError(f"gap {g} must exceed the transit span {q.span}")
    val = q.q1.value
    ratio = q.q1.value / q.q2.value**2
    for g in gaps:
        val *= ratio * q.q3_for(g).value
    return val


def error_bound(eps_q1: float, eps_q2: float, eps_q3_max: float, k_max: int) -> float:
    """Total-differential bound (eps_q1 + 2 eps_q2 + eps_q3_max) * k_max."""
    if min(eps_q1, eps_q2, eps_q3_max) < 0 or k_max < 0:
        raise DomainError("error contributions must be nonnegative")
    return (eps_q1 + 2.0 * eps_q2 + eps_q3_max) * k_max


def _require_r2_spacing(model: crk.SpacingModel, span: float) -> None:
    if isinstance(model, crk.PoissonProcess):
        raise DomainError(
            "Poisson spacing admits gaps below the transit span, so the "
            "Markov chain decomposition does not apply; use the path oracle"
        )
    if crk.min_gap(model) <= span:
        raise DomainError(
            f"spacing model {model!r} admits gaps <= span {span}; "
            "stochastic-tension reliability needs every gap above the span"
        )


def r2_conditional_mc(model: crk.SpacingModel, params: OuParams,
                      dist: CrackLengthDist, frac: FractureSetup,
                      band_length: float, m_outer: int = M_OUTER_DEFAULT,
                      n_inner: int = N_INNER_DEFAULT, seed=0,
                      q: QIntegrals | None = None,
                      cfg: RootScanConfig | None = None) -> ReliabilityResult:
    """Conditional MC over sampled crack layouts under OU tension.

    Positions are sampled per outer replicate; q1 and q2 are evaluated once
    and q3 once per distinct gap (lattice and deterministic models produce
    few).  Pass ``q`` to reuse precomputed integrals; missing gaps are filled
    in and the same object is reported in the metadata.
    """
    span = frac.geometry.span
    _require_r2_spacing(model, span)
    if m_outer < 1:
        raise DomainError("need at least one outer sample")

    seed_pos, seed_q = _as_seedseq(seed).spawn(2)
    layouts = []
    for sub in seed_pos.spawn(m_outer):
        pos, _ = crk.sample_positions(model, band_length, sub)
        layouts.append(np.diff(pos) if pos.size else None)

    needed = sorted({
        round(float(g), _GAP_KEY_DECIMALS)
        for gaps in layouts if gaps is not None for g in gaps
    })
    if q is None:
        q = compute_q_integrals(params, dist, frac, span, needed, n_inner, seed_q, cfg)
    else:
        if q.span != span:
            raise DomainError("provided q integrals were computed for another span")
        missing = [g for g in needed if g not in q.q3]
        if missing:
            for sub, key in zip(seed_q.spawn(len(missing)), missing):
                q.q3[key] = compute_q3(params, dist, frac, key, span, n_inner, sub)

    vals = np.empty(m_outer)
    k_max = 0
    for j, gaps in enumerate(layouts):
        if gaps is None:
            vals[j] = 1.0
        else:
            vals[j] = qbar_chain(q, gaps)
            k_max = max(k_max, gaps.size + 1)
    se = float(vals.std(ddof=1) / math.sqrt(m_outer)) if m_outer > 1 else 0.0
    eps3 = max((q.q3_for(g).error for gaps in layouts if gaps is not None for g in gaps),
               default=0.0)
    bound = error_bound(q.q1.error, q.q2.error, eps3, k_max)
    return ReliabilityResult(
        float(np.clip(vals.mean(), 0.0, 1.0)), se, bound, m_outer,
        {
            "model": f"r2_mc[{type(model).__name__}]",
            "seed": seed,
            "n_inner": n_inner,
            "q1": q.q1.value,
            "q2": q.q2.value,
            "k_max": k_max,
        },
    )


def r2_deterministic(pitch: float, band_length: float, q: QIntegrals) -> ReliabilityResult:
    """Closed chain q1 (q1 q3(pitch) / q2^2)^{m-1} for constant spacing."""
    if pitch <= q.span:
        raise DomainError(f"pitch {pitch} must exceed the transit span {q.span}")
    m = int(band_length // pitch)
    if m == 0:
        return ReliabilityResult(1.0, 0.0, 0.0, 0, {"model": "r2_deterministic", "cracks": 0})
    est = qbar_chain(q, [pitch] * (m - 1))
    eps3 = q.q3_for(pitch).error if m > 1 else 0.0
    bound = error_bound(q.q1.error, q.q2.error, eps3, m)
    return ReliabilityResult(
        float(np.clip(est, 0.0, 1.0)), 0.0, bound, 0,
        {"model": "r2_deterministic", "cracks": m, "q1": q.q1.value, "q2": q.q2.value},
    )


def critical_tension_poisson(rate: float, band_length: float, q: float,
                             dist: CrackLengthDist, frac: FractureSetup) -> float:
    """Largest set tension keeping Poisson-model reliability at least q."""
    if not (0.0 < q < 1.0):
        raise DomainError("target reliability must lie in (0, 1)")
    if rate <= 0 or band_length <= 0:
        raise DomainError("rate and band length must be strictly positive")
    arg = math.log(q) / (rate * band_length) + 1.0
    if not (0.0 < arg < 1.0):
        raise DomainError(
            f"quantile argument {arg:.6g} outside (0, 1): the requested "
            f"reliability cannot be met for rate*S={rate * band_length:.6g}"
        )
    xi_q = float(dist.quantile(arg))
    if xi_q >= frac.xi_max:
        raise DomainError(
            f"required crack tolerance {xi_q:.6g} m exceeds the supported "
            f"depth range ({frac.xi_max:.6g} m); no tension satisfies the target"
        )
    h_kc = frac.geometry.thickness * frac.material.k_c
    return h_kc / (math.sqrt(math.pi) * float(frac.g(xi_q)))


def critical_tension_binomial(p_s: float, zone: float, pitch: float, q: float,
                              dist: CrackLengthDist, frac: FractureSetup) -> float:
    """Critical set tension for the lattice model; inf when no site exists."""
    if not (0.0 < q < 1.0):
        raise DomainError("target reliability must lie in (0, 1)")
    if not (0.0 < p_s <= 1.0) or pitch <= 0 or zone < 0:
        raise DomainError("lattice parameters out of range")
    n = int(zone // pitch)
    if n == 0:
        return math.inf
    arg = (q ** (1.0 / n) - 1.0) / p_s + 1.0
    if not (0.0 < arg < 1.0):
        raise DomainError(
            f"quantile argument {arg:.6g} outside (0, 1): the requested "
            f"reliability cannot be met with p_s={p_s}, {n} sites"
        )
    xi_q = float(dist.quantile(arg))
    if xi_q >= frac.xi_max:
        raise DomainError(
            f"required crack tolerance {xi_q:.6g} m exceeds the supported "
            f"depth range ({frac.xi_max:.6g} m); no tension satisfies the target"
        )
    h_kc = frac.geometry.thickness * frac.material.k_c
    return h_kc / (math.sqrt(math.pi) * float(frac.g(xi_q)))


@dataclass
class CriticalTensionResult:
    tension: float
    bracket_low: float
    bracket_high: float
    reliability: float
    std_error: float
    iterations: int


def _reliability_at(t0: float, model: crk.SpacingModel, dist: CrackLengthDist,
                    frac: FractureSetup, band_length: float, c_t: float, a: float,
                    m_outer: int, n_inner: int, seed) -> ReliabilityResult:
    if c_t == 0.0:
        q_bar = qbar(t0, dist, frac)
        if isinstance(model, crk.PoissonProcess):
            return r1_poisson(model.rate, band_length, q_bar)
        if isinstance(model, crk.BinomialLattice):
            return r1_binomial(model.p_s, model.zone, model.pitch, q_bar)
        if isinstance(model, crk.DeterministicSpacing):
            return r1_deterministic(model.pitch, band_length, q_bar)
        return r1_conditional_mc(model, t0, dist, frac, band_length, m_outer, seed)
    params = OuParams.from_cv(t0, a, c_t)
    if isinstance(model, crk.DeterministicSpacing):
        q = compute_q_integrals(params, dist, frac, frac.geometry.span,
                                [model.pitch], n_inner, seed)
        return r2_deterministic(model.pitch, band_length, q)
    return r2_conditional_mc(model, params, dist, frac, band_length,
                             m_outer, n_inner, seed)


def critical_tension_numeric(model: crk.SpacingModel, band_length: float, q: float,
                             dist: CrackLengthDist, frac: FractureSetup,
                             bracket: tuple[float, float], *,
                             c_t: float = 0.0, a: float = 1.0,
                             tol_tension: float = 1e-3,
                             m_outer: int = M_OUTER_DEFAULT,
                             n_inner: int = N_INNER_DEFAULT,
                             seed=0) -> CriticalTensionResult:
    """Bisection on the set tension against the matching reliability estimator.

    ``c_t = 0`` selects the constant-tension estimators, otherwise the OU
    chain with the given reversion rate.  Every evaluation reuses the same
    seed (common random numbers), which keeps the estimated reliability
    monotone along the bisection path.  The search stops when the bracket is
    narrower than ``tol_tension`` or, for MC-backed estimators, when the
    statistical error dominates the remaining gap; the result reports both.
    """
    if not (0.0 < q < 1.0):
        raise DomainError("target reliability must lie in (0, 1)")
    lo, hi = bracket
    if not (0.0 < lo < hi):
        raise DomainError("bracket must satisfy 0 < low < high")

    def rel(t0: float) -> ReliabilityResult:
        return _reliability_at(t0, model, dist, frac, band_length, c_t, a,
                               m_outer, n_inner, seed)

    r_lo, r_hi = rel(lo), rel(hi)
    if not (r_lo.estimate >= q >= r_hi.estimate):
        raise DomainError(
            f"reliability at the bracket ends ({r_lo.estimate:.6g}, "
            f"{r_hi.estimate:.6g}) does not straddle the target {q}"
        )
    last = r_lo
    iterations = 0
    while hi - lo > tol_tension:
        iterations += 1
        mid = 0.5 * (lo + hi)
        last = rel(mid)
        if last.std_error > 0 and abs(last.estimate - q) < last.std_error:
            break
        if last.estimate >= q:
            lo = mid
        else:
            hi = mid
    return CriticalTensionResult(
        tension=0.5 * (lo + hi),
        bracket_low=lo,
        bracket_high=hi,
        reliability=last.estimate,
        std_error=last.std_error,
        iterations=iterations,
    )
