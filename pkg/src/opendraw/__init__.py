"""Fracture reliability engine for cracked webs moving through an open draw.

Computes the probability that a band of web survives transit through an
unsupported span without any of its edge cracks fracturing, under constant or
stationary Ornstein-Uhlenbeck tension, and cross-validates the closed forms
and spectral first-passage machinery against brute-force path simulation.
"""

from .cracks import (
    BinomialLattice,
    DeterministicSpacing,
    Lognormal3,
    PoissonProcess,
    count_pmf,
    min_gap,
    moments,
    sample_positions,
)
from .errors import (
    ConfigError,
    DomainError,
    OpendrawError,
    PoleError,
    RangeError,
    ScanExhaustedError,
)
from .first_passage import SurvivalExpansion, build_expansion, survival
from .fracture import (
    CrackLengthDist,
    FractureSetup,
    Material,
    WebGeometry,
    WeightFunctionTable,
    fracture_toughness,
    stress_intensity,
    tension_boundary,
    weight_alpha,
)
from .oracle import simulate_r2, simulate_survival
from .reliability import (
    CriticalTensionResult,
    QIntegrals,
    ReliabilityResult,
    ValueWithError,
    compute_q1,
    compute_q2,
    compute_q3,
    compute_q_integrals,
    critical_tension_binomial,
    critical_tension_numeric,
    critical_tension_poisson,
    error_bound,
    qbar,
    qbar_chain,
    r1_binomial,
    r1_conditional_mc,
    r1_deterministic,
    r1_poisson,
    r2_conditional_mc,
    r2_deterministic,
)
from .specfun import (
    RootScanConfig,
    find_hermite_roots,
    gamma_fn,
    hermite_h,
    hermite_h_dnu,
    kummer_m,
)
from .tension import (
    ConstantTension,
    OuParams,
    TensionModel,
    conditional_moments,
    sample_path,
    sigma_from_cv,
    stationary_density,
    transition_density,
)

__version__ = "0.1.0"
