"""Brute-force path-simulation oracles.

These estimators validate the spectral and conditional-MC machinery by
simulating tension paths directly.  Values at grid points come from the exact
OU transition law; between grid points a Brownian-bridge correction registers
a crossing with probability exp(-2 (b - v1)(b - v2) / (sigma^2 dt)), removing
the first-order bias of grid-only hit detection.  Registered hits are decided
by uniform draws, so the estimate is a plain fraction of surviving paths.

RNG consumption is fixed (all paths draw every step, normals first and then
bridge uniforms), making results reproducible for a given
(seed, n_paths, step) triple.
"""

from __future__ import annotations

import math

import numpy as np

from . import cracks as crk
from .errors import DomainError
from .fracture import CrackLengthDist, FractureSetup
from .reliability import ValueWithError, _require_r2_spacing
from .tension import OuParams

__all__ = ["default_step", "simulate_survival", "simulate_r2"]


def default_step(params: OuParams, span: float) -> float:
    """Grid step 1e-3 * min(span, relaxation length)."""
    return 1e-3 * min(span, 1.0 / params.a)


def _binomial_se(mean: float, n: int) -> float:
    return math.sqrt(max(mean * (1.0 - mean), 0.0) / n)


def simulate_survival(params: OuParams, boundary: float, start: float, span: float,
                      n_paths: int = 100_000, step: float | None = None,
                      bridge_correction: bool = True, seed=0,
                      checkpoints=None):
    """Fraction of simulated paths from ``start`` staying below ``boundary``.

    With ``checkpoints`` (increasing s values, the last at most ``span``) a
    list of (estimate, se) pairs is returned, one per checkpoint, from a
    single path ensemble; otherwise a single ValueWithError at ``span``.
    """
    if start >= boundary:
        raise DomainError(f"start {start} must lie below the boundary {boundary}")
    if span <= 0 or n_paths < 1:
        raise DomainError("span must be positive and n_paths >= 1")
    if step is None:
        step = default_step(params, span)
    if step <= 0:
        raise DomainError("step must be positive")

    marks = [span] if checkpoints is None else [float(c) for c in checkpoints]
    if any(c <= 0 for c in marks) or any(b <= a for a, b in zip(marks, marks[1:])):
        raise DomainError("checkpoints must be positive and strictly increasing")
    if marks[-1] > span + 1e-12:
        raise DomainError("checkpoints cannot exceed the span")

    n_steps = max(1, int(round(span / step)))
    dt = span / n_steps
    decay = math.exp(-params.a * dt)
    step_sd = params.sigma * math.sqrt((1.0 - decay * decay) / (2.0 * params.a))
    bridge_scale = 2.0 / (params.sigma**2 * dt)

    rng = np.random.default_rng(seed)
    v = np.full(n_paths, float(start))
    alive = np.ones(n_paths, dtype=bool)
    results = []
    mark_iter = iter(marks)
    next_mark = next(mark_iter)
    for k in range(1, n_steps + 1):
        z = rng.standard_normal(n_paths)
        v2 = params.t0 + (v - params.t0) * decay + step_sd * z
        crossed = v2 >= boundary
        if bridge_correction:
            u = rng.random(n_paths)
            below = ~crossed & (v < boundary)
            p_hit = np.exp(-bridge_scale * (boundary - v) * (boundary - v2))
            crossed = crossed | (below & (u < p_hit))
        alive &= ~crossed
        v = v2
        while next_mark is not None and k * dt >= next_mark - 1e-12:
            frac = float(alive.mean())
            results.append(ValueWithError(frac, _binomial_se(frac, n_paths)))
            next_mark = next(mark_iter, None)
        if next_mark is None:
            break
    return results[0] if checkpoints is None else results


def simulate_r2(model: crk.SpacingModel, params: OuParams, dist: CrackLengthDist,
                frac: FractureSetup, band_length: float, n_paths: int = 10_000,
                step: float | None = None, seed=0,
                bridge_correction: bool = True) -> ValueWithError:
    """Direct simulation of the band transit under OU tension.

    Each replicate samples a crack layout and lengths, then one tension path
    across all transit windows: a stationary draw at the first crack, fine
    exact-transition steps (with bridge correction) inside each window, and a
    single exact jump across each crack-free stretch.  A replicate survives
    iff the tension stays below B(xi_i) throughout every window.
    """
    span = frac.geometry.span
    _require_r2_spacing(model, span)
    if n_paths < 1:
        raise DomainError("need at least one replicate")
    if step is None:
        step = default_step(params, span)

    rng = np.random.default_rng(seed)

    cutoff = band_length
    if isinstance(model, crk.BinomialLattice):
        if model.zone > band_length:
            raise DomainError(
                f"damage zone {model.zone} exceeds the band length {band_length}"
            )
        cutoff = model.zone
    cols = []
    totals = np.zeros(n_paths)
    unfinished = np.ones(n_paths, dtype=bool)
    while np.any(unfinished):
        gaps = crk._draw_gaps(model, n_paths, rng)
        totals = totals + gaps
        cols.append(totals.copy())
        unfinished = totals <= cutoff
    pos = np.column_stack(cols)
    counts = (pos <= cutoff).sum(axis=1)
    max_k = int(counts.max())
    if max_k == 0:
        return ValueWithError(1.0, 0.0)

    lengths = dist.sample(n_paths * max_k, rng).reshape(n_paths, max_k)
    bvals = frac.boundary_capped(lengths.ravel()).reshape(n_paths, max_k)

    n_steps = max(1, int(round(span / step)))
    dt = span / n_steps
    decay = math.exp(-params.a * dt)
    step_sd = params.sigma * math.sqrt((1.0 - decay * decay) / (2.0 * params.a))
    bridge_scale = 2.0 / (params.sigma**2 * dt)
    sd_stat = params.stationary_sd

    v = params.t0 + sd_stat * rng.standard_normal(n_paths)
    alive = np.ones(n_paths, dtype=bool)
    for w in range(max_k):
        has = counts > w
        b = bvals[:, w]
        alive &= ~(has & (v >= b))
        for _ in range(n_steps):
            z = rng.standard_normal(n_paths)
            v2 = params.t0 + (v - params.t0) * decay + step_sd * z
            crossed = v2 >= b
            if bridge_correction:
                u = rng.random(n_paths)
                below = ~crossed & (v < b)
                p_hit = np.exp(-bridge_scale * (b - v) * (b - v2))
                crossed = crossed | (below & (u < p_hit))
            alive &= ~(has & crossed)
            v = v2
        if w + 1 < max_k:
            z = rng.standard_normal(n_paths)
            delta = np.where(counts > w + 1, pos[:, w + 1] - pos[:, w] - span, 1.0)
            jump_decay = np.exp(-params.a * delta)
            jump_sd = params.sigma * np.sqrt((1.0 - jump_decay**2) / (2.0 * params.a))
            v = params.t0 + (v - params.t0) * jump_decay + jump_sd * z
    est = float(alive.mean())
    return ValueWithError(est, _binomial_se(est, n_paths))
