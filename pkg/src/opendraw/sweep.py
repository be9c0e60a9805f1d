"""Sweep execution: grids, parallel evaluation, CSV emission.

A reliability sweep enumerates t0 x c_t x mean crack length x spacing value
in fixed order.  Points with c_t = 0 use the constant-tension estimators;
points with c_t > 0 use the OU chain.  The q1/q2 integrals depend only on
(t0, c_t, crack mean), not on the spacing value, so they are computed once
per such combo (in parallel) and shared across the spacing axis; q3 values
are cheap and evaluated per point.

Every random quantity draws from a seed derived deterministically from the
master seed and the point's (or combo's) position in the enumerated grid,
never from execution order, so outputs are byte-identical for any thread
count.  Rows are emitted in grid order regardless of completion order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from io import StringIO

import numpy as np
from scipy import special

from . import __version__
from . import cracks as crk
from . import first_passage as fp
from . import oracle
from . import reliability as rel
from .errors import ConfigError, DomainError
from .fracture import CrackLengthDist, FractureSetup, Material, WebGeometry, WeightFunctionTable
from .specfun import RootScanConfig, find_hermite_roots
from .tension import OuParams

RELIABILITY_FIELDS = [
    "model", "t0", "c_T", "a", "mean_crack", "spacing_param",
    "estimate", "std_error", "error_bound", "M", "n_inner", "seed",
]
FIRST_PASSAGE_FIELDS = [
    "t0", "c_T", "a", "boundary", "start", "s",
    "spectral", "oracle", "oracle_se", "abs_diff", "within_3se",
]
VALIDATE_FIELDS = ["check", "passed", "detail"]

# spawn-key namespaces; combo seeds must not collide with point seeds
_POINT_SPACE = 0
_COMBO_SPACE = 1
_Q3_SPACE = 2


def _fmt(value) -> str:
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def write_csv(stream, metadata: dict, fieldnames: list[str], rows: list[dict]) -> None:
    """Metadata as leading '# key=value' lines, then a plain CSV table."""
    for key in sorted(metadata):
        stream.write(f"# {key}={metadata[key]}\n")
    stream.write(",".join(fieldnames) + "\n")
    for row in rows:
        stream.write(",".join(_fmt(row[f]) for f in fieldnames) + "\n")


def render_csv(metadata: dict, fieldnames: list[str], rows: list[dict]) -> str:
    buf = StringIO()
    write_csv(buf, metadata, fieldnames, rows)
    return buf.getvalue()


def _build_setup(cfg: dict) -> tuple[FractureSetup, float]:
    geom = WebGeometry(
        span=cfg["geometry"]["span"],
        half_width=cfg["geometry"]["half_width"],
        thickness=cfg["geometry"]["thickness"],
    )
    mat = Material(youngs=cfg["material"]["youngs"], g_c=cfg["material"]["g_c"])
    table_path = cfg["run"].get("weight_table")
    table = (
        WeightFunctionTable.from_csv(table_path)
        if table_path
        else WeightFunctionTable.default()
    )
    return FractureSetup(geom, mat, table), geom.span


def _spacing_models(cfg: dict, span: float):
    """(spacing value, model) pairs for the configured spacing sweep."""
    sp = cfg["spacing"]
    kind = sp["model"].lower()
    problems = []

    def need(key):
        if sp.get(key) is None:
            problems.append(f"spacing.{key}: required for model={kind}")
            return None
        return sp[key]

    pairs = []
    if kind == "poisson":
        rates = need("rate")
        if problems:
            raise ConfigError(problems)
        pairs = [(r, crk.PoissonProcess(r)) for r in rates]
    elif kind == "binomial":
        pitch, p_s, zones = need("pitch"), need("p_s"), need("zone")
        if problems:
            raise ConfigError(problems)
        if len(pitch) != 1:
            raise ConfigError(["spacing.pitch: exactly one value for the binomial model"])
        pairs = [(z, crk.BinomialLattice(pitch[0], p_s, z)) for z in zones]
    elif kind == "deterministic":
        pitches = need("pitch")
        if problems:
            raise ConfigError(problems)
        pairs = [(p, crk.DeterministicSpacing(p)) for p in pitches]
    elif kind == "lognormal":
        gaps, cv = need("mean_gap"), need("cv")
        if problems:
            raise ConfigError(problems)
        shift = sp.get("shift")
        shift = span if shift is None else shift
        pairs = [(g, crk.Lognormal3.from_mean_cv(g, cv, shift)) for g in gaps]
    else:
        raise ConfigError([f"spacing.model: unknown model {kind!r}"])
    return kind, pairs


def _base_metadata(cfg: dict, frac: FractureSetup) -> dict:
    run = cfg["run"]
    scan = RootScanConfig()
    return {
        "engine_version": __version__,
        "master_seed": run["seed"],
        "samples": run["samples"],
        "inner": run["inner"],
        "truncation_threshold": fp.TRUNCATION_THRESHOLD,
        "root_scan_step": scan.initial_step,
        "root_refine_tol": scan.refine_tol,
        "series_s_min_factor": fp.S_MIN_FACTOR,
        "weight_table_sha256": frac.table.digest,
        "reversion_rate_units": "1_per_metre",
    }


def _point_seed(master: int, index: int, space: int = _POINT_SPACE):
    return np.random.SeedSequence(master, spawn_key=(space, index))


def _run_parallel(tasks, threads: int):
    """Evaluate index-keyed thunks, returning results in task order."""
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda fn: fn(), tasks))
    return [fn() for fn in tasks]


def run_reliability(cfg: dict) -> tuple[dict, list[dict]]:
    frac, span = _build_setup(cfg)
    kind, spacing = _spacing_models(cfg, span)
    run = cfg["run"]
    band, master = run["band_length"], run["seed"]
    m_outer, n_inner, threads = run["samples"], run["inner"], run["threads"]
    a = cfg["tension"]["a"]

    grid = [
        (t0, c_t, crack, sp_val, model)
        for t0 in cfg["tension"]["t0"]
        for c_t in cfg["tension"]["c_t"]
        for crack in cfg["cracks"]["mean_length"]
        for sp_val, model in spacing
    ]
    shape = cfg["cracks"]["shape"]

    # q1/q2 shared across the spacing axis for stochastic-tension points
    combos = []
    for t0, c_t, crack, _, _ in grid:
        key = (t0, c_t, crack)
        if c_t > 0 and key not in combos:
            combos.append(key)

    def q_task(idx, key):
        t0, c_t, crack = key
        params = OuParams.from_cv(t0, a, c_t)
        dist = CrackLengthDist.from_mean(crack, shape)
        seed = _point_seed(master, idx, _COMBO_SPACE)
        q1 = rel.compute_q1(params, dist, frac, span, n_inner, seed)
        q2 = rel.compute_q2(params, dist, frac)
        return key, (q1, q2)

    q_results = _run_parallel(
        [lambda i=i, k=k: q_task(i, k) for i, k in enumerate(combos)], threads
    )
    q_shared = dict(q_results)

    def point_task(idx, t0, c_t, crack, sp_val, model):
        dist = CrackLengthDist.from_mean(crack, shape)
        seed = _point_seed(master, idx)
        if c_t == 0.0:
            q_bar = rel.qbar(t0, dist, frac)
            if isinstance(model, crk.PoissonProcess):
                res = rel.r1_poisson(model.rate, band, q_bar)
                name = "r1_poisson"
            elif isinstance(model, crk.BinomialLattice):
                res = rel.r1_binomial(model.p_s, model.zone, model.pitch, q_bar)
                name = "r1_binomial"
            elif isinstance(model, crk.DeterministicSpacing):
                res = rel.r1_deterministic(model.pitch, band, q_bar)
                name = "r1_deterministic"
            else:
                res = rel.r1_conditional_mc(model, t0, dist, frac, band, m_outer, seed)
                name = "r1_lognormal_mc"
        else:
            params = OuParams.from_cv(t0, a, c_t)
            q1, q2 = q_shared[(t0, c_t, crack)]
            q = rel.QIntegrals(q1=q1, q2=q2, q3={}, span=span)
            if isinstance(model, crk.DeterministicSpacing):
                q.q3[round(model.pitch, 9)] = rel.compute_q3(
                    params, dist, frac, round(model.pitch, 9), span, n_inner,
                    _point_seed(master, idx, _Q3_SPACE),
                )
                res = rel.r2_deterministic(model.pitch, band, q)
                name = "r2_deterministic"
            else:
                res = rel.r2_conditional_mc(
                    model, params, dist, frac, band, m_outer, n_inner, seed, q=q
                )
                name = f"r2_{kind}_mc"
        return {
            "model": name, "t0": t0, "c_T": c_t, "a": a, "mean_crack": crack,
            "spacing_param": sp_val, "estimate": res.estimate,
            "std_error": res.std_error, "error_bound": res.numeric_error_bound,
            "M": res.samples, "n_inner": n_inner if c_t > 0 else 0, "seed": master,
        }

    rows = _run_parallel(
        [lambda i=i, g=g: point_task(i, *g) for i, g in enumerate(grid)], threads
    )
    return _base_metadata(cfg, frac), rows


def run_critical_tension(cfg: dict) -> tuple[dict, list[dict]]:
    frac, span = _build_setup(cfg)
    kind, spacing = _spacing_models(cfg, span)
    run, crit = cfg["run"], cfg["critical"]
    band, master = run["band_length"], run["seed"]
    m_outer, n_inner, threads = run["samples"], run["inner"], run["threads"]
    a = cfg["tension"]["a"]
    target = crit["target"]
    shape = cfg["cracks"]["shape"]

    grid = [
        (c_t, crack, sp_val, model)
        for c_t in cfg["tension"]["c_t"]
        for crack in cfg["cracks"]["mean_length"]
        for sp_val, model in spacing
    ]

    def bracket():
        lo, hi = crit.get("bracket_low"), crit.get("bracket_high")
        if lo is None or hi is None:
            raise ConfigError([
                "critical.bracket_low/bracket_high: required for numeric search"
            ])
        return lo, hi

    def point_task(idx, c_t, crack, sp_val, model):
        dist = CrackLengthDist.from_mean(crack, shape)
        seed = _point_seed(master, idx)
        name = f"critical_{kind}" + ("" if c_t == 0 else "_ou")
        samples = 0
        std_err = 0.0
        try:
            if c_t == 0.0 and isinstance(model, crk.PoissonProcess):
                t_cr = rel.critical_tension_poisson(model.rate, band, target, dist, frac)
                achieved = rel.r1_poisson(model.rate, band, rel.qbar(t_cr, dist, frac)).estimate
            elif c_t == 0.0 and isinstance(model, crk.BinomialLattice):
                t_cr = rel.critical_tension_binomial(
                    model.p_s, model.zone, model.pitch, target, dist, frac
                )
                achieved = (
                    1.0 if math.isinf(t_cr)
                    else rel.r1_binomial(
                        model.p_s, model.zone, model.pitch, rel.qbar(t_cr, dist, frac)
                    ).estimate
                )
            else:
                res = rel.critical_tension_numeric(
                    model, band, target, dist, frac, bracket(), c_t=c_t, a=a,
                    tol_tension=crit["tol"], m_outer=m_outer, n_inner=n_inner,
                    seed=seed,
                )
                t_cr, achieved, std_err = res.tension, res.reliability, res.std_error
                samples = m_outer
        except DomainError as exc:
            return {
                "model": name + "_infeasible", "t0": math.nan, "c_T": c_t, "a": a,
                "mean_crack": crack, "spacing_param": sp_val, "estimate": math.nan,
                "std_error": 0.0, "error_bound": 0.0, "M": 0, "n_inner": 0,
                "seed": master, "_note": str(exc),
            }
        return {
            "model": name, "t0": t_cr, "c_T": c_t, "a": a, "mean_crack": crack,
            "spacing_param": sp_val, "estimate": achieved, "std_error": std_err,
            "error_bound": 0.0, "M": samples,
            "n_inner": n_inner if c_t > 0 else 0, "seed": master,
        }

    rows = _run_parallel(
        [lambda i=i, g=g: point_task(i, *g) for i, g in enumerate(grid)], threads
    )
    for row in rows:
        row.pop("_note", None)
    meta = _base_metadata(cfg, frac)
    meta["reliability_target"] = target
    return meta, rows


def run_first_passage(cfg: dict) -> tuple[dict, list[dict]]:
    frac, span = _build_setup(cfg)
    run, sec = cfg["run"], cfg["first_passage"]
    master, threads = run["seed"], run["threads"]
    a = cfg["tension"]["a"]
    paths, step = sec["paths"], sec["step"]
    s_values = sorted(sec["s_values"])

    grid = []
    for t0 in cfg["tension"]["t0"]:
        for c_t in cfg["tension"]["c_t"]:
            if c_t <= 0:
                raise ConfigError(["tension.c_t: first-passage needs c_t > 0"])
            params = OuParams.from_cv(t0, a, c_t)
            sd = params.stationary_sd
            for b_sd in sec["boundaries_sd"]:
                boundary = t0 + b_sd * sd
                for p in sec["start_quantiles"]:
                    start = t0 + sd * float(special.ndtri(p))
                    if start >= boundary:
                        raise ConfigError([
                            f"first_passage.start_quantiles: quantile {p} puts the "
                            f"start at {start:.6g}, not below the boundary {boundary:.6g}"
                        ])
                    grid.append((params, t0, c_t, boundary, start))

    def point_task(idx, params, t0, c_t, boundary, start):
        seed = _point_seed(master, idx)
        sims = oracle.simulate_survival(
            params, boundary, start, s_values[-1], n_paths=paths, step=step,
            seed=seed, checkpoints=s_values,
        )
        exp = fp.build_expansion(params, boundary, start, horizon=s_values[0])
        out = []
        for s, sim in zip(s_values, sims):
            spectral = fp.survival(exp, s)
            diff = abs(spectral - sim.value)
            out.append({
                "t0": t0, "c_T": c_t, "a": a, "boundary": boundary,
                "start": start, "s": s, "spectral": spectral,
                "oracle": sim.value, "oracle_se": sim.error, "abs_diff": diff,
                "within_3se": int(diff <= 3.0 * sim.error + 1e-12),
            })
        return out

    nested = _run_parallel(
        [lambda i=i, g=g: point_task(i, *g) for i, g in enumerate(grid)], threads
    )
    rows = [row for chunk in nested for row in chunk]
    meta = _base_metadata(cfg, frac)
    meta["paths"] = paths
    meta["step"] = step
    return meta, rows


def _default_validation_setup():
    geom = WebGeometry(span=1.0, half_width=0.6, thickness=8e-5)
    mat = Material(youngs=4e9, g_c=6500)
    frac = FractureSetup.with_default_table(geom, mat)
    dist = CrackLengthDist.from_mean(0.015, 0.8)
    return frac, dist


def run_validation(seed: int = 0, level: str = "quick") -> tuple[dict, list[dict]]:
    """Oracle cross-validation battery; one row per check."""
    if level not in ("quick", "full"):
        raise ConfigError([f"run.level: unknown level {level!r}"])
    frac, dist = _default_validation_setup()
    span = frac.geometry.span
    rows = []

    def check(name, passed, detail):
        rows.append({"check": name, "passed": int(bool(passed)), "detail": detail})

    roots = find_hermite_roots(0.0, 5)
    err = float(np.max(np.abs(roots - np.array([1.0, 3.0, 5.0, 7.0, 9.0]))))
    check("hermite_roots_gamma_poles", err <= 1e-8, f"max_abs_err={err:.2e}")

    q_bar = 0.9
    series = math.exp(-3.0) * sum((3.0 * q_bar) ** j / math.factorial(j) for j in range(60))
    closed = rel.r1_poisson(0.03, 100.0, q_bar).estimate
    check("poisson_series_equivalence", abs(series - closed) <= 1e-12,
          f"diff={abs(series - closed):.2e}")

    n = 40
    direct = sum(
        math.comb(n, j) * 0.9**j * 0.1 ** (n - j) * q_bar**j for j in range(n + 1)
    )
    closed_b = rel.r1_binomial(0.9, n * 2.0, 2.0, q_bar).estimate
    check("binomial_sum_equivalence", abs(direct - closed_b) <= 1e-12,
          f"diff={abs(direct - closed_b):.2e}")

    params = OuParams.from_cv(350.0, 1.0, 0.1)
    sd = params.stationary_sd
    boundary, start, s = 350.0 + 2.0 * sd, 350.0, 1.0
    exp = fp.build_expansion(params, boundary, start, horizon=s)
    spectral = fp.survival(exp, s)
    n_paths = 100_000 if level == "full" else 30_000
    sim = oracle.simulate_survival(params, boundary, start, s, n_paths=n_paths,
                                   step=1e-3, seed=np.random.SeedSequence(seed, spawn_key=(9,)))
    check("spectral_vs_path_oracle",
          abs(spectral - sim.value) <= 3.5 * sim.error,
          f"spectral={spectral:.6f} oracle={sim.value:.6f} se={sim.error:.1e}")

    q_bar350 = rel.qbar(350.0, dist, frac)
    mc = rel.r1_conditional_mc(
        crk.PoissonProcess(0.01), 350.0, dist, frac, 1000.0, 20000,
        np.random.SeedSequence(seed, spawn_key=(10,)),
    )
    closed_p = rel.r1_poisson(0.01, 1000.0, q_bar350).estimate
    check("conditional_mc_vs_closed",
          abs(mc.estimate - closed_p) <= 4.0 * max(mc.std_error, 1e-12),
          f"mc={mc.estimate:.6f} closed={closed_p:.6f} se={mc.std_error:.1e}")

    t_cr = rel.critical_tension_poisson(1e-3, 3.5e5, 0.99, dist, frac)
    round_trip = rel.r1_poisson(1e-3, 3.5e5, rel.qbar(t_cr, dist, frac)).estimate
    check("critical_tension_round_trip", abs(round_trip - 0.99) <= 1e-6,
          f"t_cr={t_cr:.4f} r1={round_trip:.8f}")

    deg = OuParams.from_cv(350.0, 1.0, 1e-6)
    n_inner = 40_000 if level == "full" else 10_000
    q = rel.compute_q_integrals(deg, dist, frac, span, [2.0], n_inner,
                                np.random.SeedSequence(seed, spawn_key=(11,)))
    r2 = rel.r2_deterministic(2.0, 100.0, q)
    r1 = rel.r1_deterministic(2.0, 100.0, q_bar350)
    tol = 3.0 * 50.0 * max(q.q1.error, 1e-12) + 1e-3
    check("degenerate_r2_matches_r1", abs(r2.estimate - r1.estimate) <= tol,
          f"r2={r2.estimate:.6f} r1={r1.estimate:.6f} tol={tol:.1e}")

    if level == "full":
        sim2 = oracle.simulate_r2(
            crk.DeterministicSpacing(2.0), params, dist, frac, 100.0,
            n_paths=50_000, seed=np.random.SeedSequence(seed, spawn_key=(12,)),
        )
        qf = rel.compute_q_integrals(params, dist, frac, span, [2.0], 50_000,
                                     np.random.SeedSequence(seed, spawn_key=(13,)))
        r2f = rel.r2_deterministic(2.0, 100.0, qf)
        tol2 = 3.0 * sim2.error + r2f.numeric_error_bound
        check("r2_chain_vs_path_oracle",
              abs(r2f.estimate - sim2.value) <= tol2,
              f"chain={r2f.estimate:.5f} oracle={sim2.value:.5f} tol={tol2:.1e}")

    meta = {
        "engine_version": __version__,
        "level": level,
        "master_seed": seed,
        "passed": int(all(r["passed"] for r in rows)),
    }
    return meta, rows
