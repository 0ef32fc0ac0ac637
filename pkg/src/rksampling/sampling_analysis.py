"""Random samples on the cube, concentration, and closed-form bound evaluators.

Probability-bound constants blow up double precision at desk scale (the
leading constant is exp of a huge product), so every bound evaluator
carries its natural logarithm alongside the clamped float value and an
explicit ``vacuous`` flag.  Nothing is silently clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.spatial import cKDTree

from .kernel_space import (
    CoeffSeq,
    GeneratorPhi,
    Kernel,
    compute_k_sup,
    decay_thresholds,
    eval_coeff_at_points,
    synthesize,
)
from .mixed_norms import Cube, Exponents, Grid, GridSignal, grid_mixed_norm, seq_mixed_norm
from .seeding import derive_seed

__all__ = [
    "SampleSet",
    "TheoryConstants",
    "ConcentrationReport",
    "BoundValue",
    "ProbabilityBound",
    "CoveringBounds",
    "MinSamples",
    "SamplingCheck",
    "DeviationReport",
    "draw_samples",
    "grid_sample_set",
    "covering_gap",
    "concentration_ratio",
    "compute_theory_constants",
    "overlap_count",
    "nodes_per_unit_cell",
    "bernstein_tail_bound",
    "event_probability_bound",
    "sampling_success_probability",
    "ball_covering_number",
    "covering_bounds",
    "min_sample_count",
    "sampling_inequality_check",
    "empirical_frame_bounds",
    "deviation_bound_check",
    "interpolate_signal",
    "make_unit_family",
    "wilson_interval",
]


@dataclass
class SampleSet:
    """lm points in the closed cube, indexed (i, j); reproducible per seed."""

    points: np.ndarray  # shape (l, m, n+1)
    l: int
    m: int
    seed: int | None
    cube: Cube
    product: bool = False
    theta: float | None = None  # covering gap, lazily filled by covering_gap

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.shape != (self.l, self.m, self.cube.n + 1):
            raise ValueError("points must have shape (l, m, n+1)")
        half = np.array([self.cube.R / 2] * self.cube.n + [self.cube.S / 2])
        if not np.all(np.abs(pts) <= half + 1e-12):
            raise ValueError("sample points must lie in the closed cube")
        self.points = pts

    @property
    def flat_points(self) -> np.ndarray:
        return self.points.reshape(-1, self.points.shape[-1])

    def flat_key(self) -> np.ndarray:
        """Tie-break key per flat (row-major) sample: small (j, i) wins."""
        i, j = np.meshgrid(np.arange(self.l), np.arange(self.m), indexing="ij")
        return (j * self.l + i).ravel()


def draw_samples(cube: Cube, l: int, m: int, seed: int, product: bool = False) -> SampleSet:
    """lm iid uniform points over the cube, arranged (i, j).

    With ``product=True``, draws l spatial points and m temporal values and
    pairs them on the product grid instead (the indexed-grid reading; the
    iid default is what the independence-based tail bounds assume).
    """
    if l < 1 or m < 1:
        raise ValueError("need l, m >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    half = np.array([cube.R / 2] * cube.n + [cube.S / 2])
    if product:
        xs = rng.uniform(-half[: cube.n], half[: cube.n], size=(l, cube.n))
        ys = rng.uniform(-half[-1], half[-1], size=m)
        pts = np.concatenate(
            [
                np.broadcast_to(xs[:, None, :], (l, m, cube.n)),
                np.broadcast_to(ys[None, :, None], (l, m, 1)),
            ],
            axis=-1,
        ).copy()
    else:
        pts = rng.uniform(-half, half, size=(l, m, cube.n + 1))
    return SampleSet(pts, l, m, seed, cube, product)


def grid_sample_set(cube: Cube, per_spatial: int, per_temporal: int) -> SampleSet:
    """Deterministic midpoint-grid sample set (product-indexed)."""
    g = Grid(cube, per_spatial, per_temporal)
    xs = g.spatial_axis()
    ts = g.temporal_axis()
    mesh = np.meshgrid(*([xs] * cube.n), indexing="ij")
    spatial = np.stack([m.ravel() for m in mesh], axis=-1)
    l, m = len(spatial), len(ts)
    pts = np.concatenate(
        [
            np.broadcast_to(spatial[:, None, :], (l, m, cube.n)),
            np.broadcast_to(ts[None, :, None], (l, m, 1)),
        ],
        axis=-1,
    ).copy()
    return SampleSet(pts, l, m, None, cube, True)


def covering_gap(s: SampleSet, cube: Cube, probe) -> float:
    """theta = max over probe nodes of sup-norm distance to the nearest sample.

    `probe` is a Grid over the cube, an int (cells per axis), or explicit
    points of shape (N, n+1).
    """
    if isinstance(probe, int):
        probe = Grid(cube, probe, probe)
    if isinstance(probe, Grid):
        pts = probe.node_coordinates().reshape(-1, cube.n + 1)
    else:
        pts = np.asarray(probe, dtype=float)
    tree = cKDTree(s.flat_points)
    d, _ = tree.query(pts, p=np.inf)
    theta = float(d.max())
    s.theta = theta
    return theta


@dataclass(frozen=True)
class ConcentrationReport:
    ratio: float
    delta_min: float
    norm_inside: float
    norm_total: float


def concentration_ratio(f: GridSignal, cube: Cube, e: Exponents) -> ConcentrationReport:
    """Fraction of the mixed norm carried by the cube, and the minimal delta."""
    g = f.grid.cube
    if not (g.contains(cube) and (g.R > cube.R * (1 + 1e-12) or g.S > cube.S * (1 + 1e-12))):
        raise ValueError("signal grid must strictly contain the cube")
    total = grid_mixed_norm(f, e)
    if total == 0.0:
        raise ValueError("concentration undefined for the zero signal")
    inside = grid_mixed_norm(f, e, restrict_to=cube)
    ratio = min(inside / total, 1.0)
    return ConcentrationReport(ratio, 1.0 - ratio, inside, total)


# ---------------------------------------------------------------------------
# Theory constants
# ---------------------------------------------------------------------------


def overlap_count(values: np.ndarray, eta: float) -> int:
    """sup over x of the number of open sup-norm balls B(v; eta) containing x.

    Exact for finite sets: the count is piecewise constant on the box
    arrangement, so probing midpoints between consecutive boundaries (plus
    the centers) attains the sup.
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[0] == 0:
        return 0
    if values.shape[1] == 0 or values.ndim == 1:
        values = values.reshape(-1, 1)
    dims = values.shape[1]
    cands = []
    for d in range(dims):
        bounds = np.sort(np.concatenate([values[:, d] - eta, values[:, d] + eta]))
        mids = (bounds[:-1] + bounds[1:]) / 2.0
        cands.append(np.unique(np.concatenate([mids, values[:, d]])))
    mesh = np.meshgrid(*cands, indexing="ij")
    probe = np.stack([m.ravel() for m in mesh], axis=-1)
    inside = np.all(
        np.abs(probe[:, None, :] - values[None, :, :]) < eta, axis=-1
    )
    return int(inside.sum(axis=1).max())


def nodes_per_unit_cell(nodes: np.ndarray) -> int:
    """sup over integer k of the node count in k + [-1/2, 1/2]^{n+1}."""
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    if nodes.shape[0] == 0:
        return 0
    counts: dict = {}
    for node in nodes:
        ranges = []
        for x in node:
            lo = math.ceil(x - 0.5 - 1e-12)
            hi = math.floor(x + 0.5 + 1e-12)
            ranges.append(range(lo, hi + 1))
        stack = [()]
        for r in ranges:
            stack = [t + (k,) for t in stack for k in r]
        for key in stack:
            counts[key] = counts.get(key, 0) + 1
    return max(counts.values())


@dataclass(frozen=True)
class TheoryConstants:
    """Every closed-form scalar used by the bound evaluators.

    ``a`` overflows float64 at desk scale, so it is stored as ``log_a``;
    ``b = min(sqrt(2) C2, 3/(4k))`` holds by construction.  ``B_frame`` is
    the configured frame upper bound, ``C_frame`` the configured constant
    from the finite-section estimate (both default to the orthonormal
    desk-scale value 1).
    """

    k: float
    D: float
    A_Gamma: int
    B_Gamma: int
    N0_Gamma: int
    C1: float
    C2: float
    C3: float
    G: float
    log_a: float
    b: float
    omega_alpha: float
    omega_beta: float
    B_frame: float
    C_frame: float
    n: int
    R: float
    S: float
    delta: float
    eta: float

    @property
    def a(self) -> float:
        try:
            return math.exp(self.log_a)
        except OverflowError:
            return math.inf


def _bracket(cube: Cube, e: Exponents) -> float:
    n, R, S, q = cube.n, cube.R, cube.S, e.q
    return (2.0 * (4.0 / n + S + 1.0) ** (n * q) + (4.0 / n + R + 1.0) ** q) ** (1.0 / q)


def _four_power(n: int, e: Exponents, extra: float) -> float:
    inv_p_conj = 0.0 if e.p_conj == math.inf else 1.0 / e.p_conj
    inv_q_conj = 0.0 if e.q_conj == math.inf else 1.0 / e.q_conj
    return 4.0 ** (n * inv_p_conj + inv_q_conj + extra)


def compute_theory_constants(
    kernel: Kernel,
    cube: Cube,
    e: Exponents,
    delta: float = 0.0,
    eta: float = 0.7,
    alpha: float | None = None,
    beta: float | None = None,
    B_frame: float = 1.0,
    C_frame: float = 1.0,
    resolution: int = 64,
) -> TheoryConstants:
    """Evaluate every closed-form constant for one configuration.

    D uses the global slice-norm sup k (a conservative upper bound for th
    cube-restricted sup), which keeps every downstream inequality valid
    and makes D = k (1-delta)^{-1/q} an identity.
    """
    if not e.finite:
        raise ValueError("theory constants require finite exponents")
    if not (0.0 <= delta < 1.0):
        raise ValueError("delta must lie in [0, 1)")
    n, R, S = cube.n, cube.R, cube.S
    k, _ = compute_k_sup(kernel, e, resolution)
    D = k / (1.0 - delta) ** (1.0 / e.q)
    a_gam = overlap_count(kernel.lattice.spatial_values(), eta)
    b_gam = overlap_count(kernel.lattice.temporal_values().reshape(-1, 1), eta)
    n0 = nodes_per_unit_cell(kernel.lattice.nodes)

    if alpha is None or beta is None:
        a_min, b_min = decay_thresholds(n, e)
        alpha = a_min + 1.0 if alpha is None else alpha
        beta = b_min + 1.0 if beta is None else beta

    c1 = (B_frame * C_frame * _four_power(n, e, 1.0) * _bracket(cube, e)) ** (n + 1)
    c2 = 2.0 ** (1.0 / (4.0 * math.log(2.0)) - 6.0) * math.log(2.0) ** 4 / (n + 3) ** 4
    log_d = math.log(D) if D > 0 else -math.inf
    c3 = 2.0 ** (n + 1) * n0 * (
        (R + S + 2.0) ** (n + 1) * (4.0 + log_d)
        + c1 * (4.0 * (n + 2) * (n + 3) + log_d)
    )
    G = (
        2.0 ** (n + 1)
        * n0
        * (4.0 * (n + 2) * (n + 3) + log_d)
        * (1.0 + 2.0 * (3.0 * B_frame * C_frame * _four_power(n, e, 1.0)) ** (n + 1))
    )
    log_a = G * (R + S) ** (n * n + n)
    b = math.sqrt(2.0) * c2 if k <= 0 else min(math.sqrt(2.0) * c2, 3.0 / (4.0 * k))

    omega_alpha = 1.0
    for j in range(1, n + 1):
        omega_alpha *= alpha * e.p_conj - j
    omega_beta = beta * e.q_conj - 1.0

    return TheoryConstants(
        k=k,
        D=D,
        A_Gamma=a_gam,
        B_Gamma=b_gam,
        N0_Gamma=n0,
        C1=c1,
        C2=c2,
        C3=c3,
        G=G,
        log_a=log_a,
        b=b,
        omega_alpha=omega_alpha,
        omega_beta=omega_beta,
        B_frame=B_frame,
        C_frame=C_frame,
        n=n,
        R=R,
        S=S,
        delta=delta,
        eta=eta,
    )


# ---------------------------------------------------------------------------
# Bound evaluators (log-space aware)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundValue:
    """A probability bound: float value (may overflow to inf), log, vacuity."""

    value: float
    log_value: float

    @property
    def vacuous(self) -> bool:
        return not (0.0 <= self.value <= 1.0)


def _from_log(log_value: float) -> BoundValue:
    try:
        v = math.exp(log_value)
    except OverflowError:
        v = math.inf
    return BoundValue(v, log_value)


def bernstein_tail_bound(lam: float, l: int, m: int, sigma2: float, M: float) -> float:
    """2 exp(-lam^2 / (2 l m sigma^2 + (2/3) M lam)) for zero-mean sums."""
    if lam < 0 or sigma2 < 0 or M < 0:
        raise ValueError("lambda, sigma2, M must be nonnegative")
    if lam == 0.0:
        return 2.0
    denom = 2.0 * l * m * sigma2 + (2.0 / 3.0) * M * lam
    if denom <= 0.0:
        raise ValueError("sigma2 and M cannot both vanish for lambda > 0")
    return 2.0 * math.exp(-(lam * lam) / denom)


def event_probability_bound(
    lam: float, l: int, m: int, cube: Cube, tc: TheoryConstants, e: Exponents
) -> BoundValue:
    """3a exp(-b lam^2 / (12 l m R^{-n/p} S^{-1/q} + lam)), in log space."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    n, R, S = cube.n, cube.R, cube.S
    denom = 12.0 * l * m * R ** (-n / e.p) * S ** (-1.0 / e.q) + lam
    log_v = math.log(3.0) + tc.log_a - tc.b * lam * lam / denom
    return _from_log(log_v)


@dataclass(frozen=True)
class ProbabilityBound:
    """Success-probability lower bound 1 - tail, with the tail in log space."""

    probability: float
    tail: float
    tail_log: float

    @property
    def vacuous(self) -> bool:
        return not (0.0 <= self.probability <= 1.0)


def sampling_success_probability(
    l: int,
    m: int,
    cube: Cube,
    mu: float,
    delta: float,
    tc: TheoryConstants,
    e: Exponents,
) -> ProbabilityBound:
    """Success probability of the two-sided sampling inequality.

    mu = 0 is admitted as the degenerate edge (tail = 3a, always vacuous).
    """
    if not (0.0 <= mu < 1.0):
        raise ValueError("mu must lie in [0, 1)")
    if not (0.0 <= delta < 1.0):
        raise ValueError("delta must lie in [0, 1)")
    n, R, S = cube.n, cube.R, cube.S
    p, q = e.p, e.q
    D = tc.D
    num = mu * mu * l * m * (1.0 - delta) ** (2 * p * q) * D ** (2.0 * (1.0 - p * q))
    den = 12.0 * R ** (2 * n * p) * S ** (2 * q) + D ** (1.0 - p * q) * R ** (n * p) * S**q
    tail_log = math.log(3.0) + tc.log_a - tc.b * num / den
    tail = _from_log(tail_log).value
    return ProbabilityBound(1.0 - tail, tail, tail_log)


def ball_covering_number(r: float, r1: float, s: float) -> float:
    """(2r/r1 + 1)^s: balls of radius r1 needed to cover a radius-r ball."""
    if r < 0 or r1 <= 0 or s < 0:
        raise ValueError("need r >= 0, r1 > 0, s >= 0")
    return (2.0 * r / r1 + 1.0) ** s


@dataclass(frozen=True)
class CoveringBounds:
    n_min: float  # finite-section threshold
    d_eps: float  # dimension bound of the finite section
    log_n_eps: float  # log covering number of the concentrated unit ball
    n_eps: float  # exp of the above; inf when it overflows


def covering_bounds(
    epsilon: float,
    cube: Cube,
    e: Exponents,
    B_frame: float,
    C_const: float,
    N0: float,
    D: float,
) -> CoveringBounds:
    """Finite-section threshold, dimension bound d_eps, covering number N(eps)."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie in (0, 1)")
    if min(B_frame, C_const, N0, D) <= 0:
        raise ValueError("constants must be positive")
    if not e.finite:
        raise ValueError("covering bounds require finite exponents")
    n, R, S = cube.n, cube.R, cube.S
    br = _bracket(cube, e)
    n_min = (
        R
        + S
        + 2.0 / n
        + B_frame
        * C_const
        * _four_power(n, e, 0.5)
        * br
        * R ** (n / e.q)
        * S ** (1.0 / e.q)
        * epsilon ** (-1.0 / (n + 2))
    )
    c1 = (B_frame * C_const * _four_power(n, e, 1.0) * br) ** (n + 1)
    d_eps = 2.0 ** (n + 1) * N0 * (
        (R + S + 2.0) ** (n + 1) + c1 * epsilon ** (-(n + 1.0) / (n + 2.0))
    )
    log_n_eps = d_eps * math.log(8.0 * D / epsilon)
    return CoveringBounds(n_min, d_eps, log_n_eps, _from_log(log_n_eps).value)


@dataclass(frozen=True)
class MinSamples:
    """Minimum lm from the closed-form failure-probability budget.

    The source display carries lm on both sides; this solves the lm^2
    reading (treats the right-hand lm as the same unknown).
    """

    lm_star: float  # solution of the equality
    lm_required: int
    interpretation: str = "lm_squared"


def min_sample_count(
    cube: Cube,
    mu: float,
    delta: float,
    epsilon_fail: float,
    tc: TheoryConstants,
    e: Exponents,
) -> MinSamples:
    if not (0.0 < mu < 1.0) or not (0.0 <= delta < 1.0) or not (0.0 < epsilon_fail):
        raise ValueError("need 0 < mu < 1, 0 <= delta < 1, epsilon_fail > 0")
    n, R, S = cube.n, cube.R, cube.S
    p, q = e.p, e.q
    D = tc.D
    num = (
        2.0**10
        * (n + 3) ** 4
        * (tc.log_a + math.log(3.0 / epsilon_fail))
        * (12.0 * R ** (2 * n * p) * S ** (2 * q) + D ** (1.0 - p * q) * R ** (n * p) * S**q)
    )
    den = mu * mu * (1.0 - delta) ** (2 * p * q) * D ** (2.0 * (1.0 - p * q))
    lm_star = math.sqrt(num / den)
    required = math.inf if math.isinf(lm_star) else int(math.floor(lm_star)) + 1
    return MinSamples(lm_star, required)


# ---------------------------------------------------------------------------
# Empirical checks
# ---------------------------------------------------------------------------


def interpolate_signal(f: GridSignal, pts: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of a grid signal at points (..., n+1)."""
    interp = RegularGridInterpolator(
        f.grid.axes(), f.values, method="linear", bounds_error=False, fill_value=0.0
    )
    return interp(pts)


def _sample_values(
    f: GridSignal, s: SampleSet, coeffs: CoeffSeq | None, phi: GeneratorPhi | None
) -> np.ndarray:
    if coeffs is not None:
        if phi is None:
            raise ValueError("exact evaluation needs the generator")
        return eval_coeff_at_points(coeffs, phi, s.points)
    return interpolate_signal(f, s.points)


@dataclass(frozen=True)
class SamplingCheck:
    middle: float
    lower: float
    upper: float
    lower_holds: bool
    upper_holds: bool
    norm_f: float
    concentration: ConcentrationReport


def sampling_inequality_check(
    f: GridSignal,
    s: SampleSet,
    e: Exponents,
    mu: float,
    delta: float,
    tc: TheoryConstants,
    coeffs: CoeffSeq | None = None,
    phi: GeneratorPhi | None = None,
) -> SamplingCheck:
    """Evaluate both sides of the two-sided sampling inequality for one f.

    Sample values come from exact coefficient evaluation when available,
    otherwise multilinear interpolation on the grid.
    """
    if not e.finite:
        raise ValueError("the sampling inequality is stated for finite exponents")
    if not (0.0 < mu < 1.0) or not (0.0 <= delta < 1.0):
        raise ValueError("need 0 < mu < 1 and 0 <= delta < 1")
    norm_f = grid_mixed_norm(f, e)
    if norm_f <= 0.0:
        raise ValueError("the sampling inequality needs a nonzero signal")
    conc = concentration_ratio(f, s.cube, e)
    if conc.delta_min > delta + 1e-9:
        raise ValueError(
            f"signal is only (1-{conc.delta_min:.3g})-concentrated; delta={delta} too small"
        )
    vals = _sample_values(f, s, coeffs, phi)
    middle = seq_mixed_norm(vals, e)
    n, R, S = s.cube.n, s.cube.R, s.cube.S
    p, q = e.p, e.q
    D = tc.D
    lower = (
        s.l ** (1.0 / p)
        * s.m ** (1.0 / q)
        * (1.0 - delta) ** (p * q)
        * D ** (1.0 - p * q)
        / (R ** (n * p) * S**q)
        * (1.0 - mu)
        * norm_f
    )
    upper = s.l * s.m * (1.0 + mu * D ** (1.0 - p * q)) * norm_f
    tol = 1e-12 * max(1.0, middle, lower, upper)
    return SamplingCheck(
        middle=middle,
        lower=lower,
        upper=upper,
        lower_holds=middle >= lower - tol,
        upper_holds=middle <= upper + tol,
        norm_f=norm_f,
        concentration=conc,
    )


def empirical_frame_bounds(
    family: list,
    s: SampleSet,
    e: Exponents,
    phi: GeneratorPhi,
    grid: Grid,
) -> tuple:
    """(A_emp, B_emp): extreme sampled-norm / true-norm ratios over a family."""
    ratios = []
    for c in family:
        sig = synthesize(c, grid, phi)
        true = grid_mixed_norm(sig, e)
        if true <= 0.0:
            raise ValueError("family members must be nonzero")
        vals = eval_coeff_at_points(c, phi, s.points)
        ratios.append(seq_mixed_norm(vals, e) / true)
    return float(min(ratios)), float(max(ratios))


@dataclass(frozen=True)
class DeviationReport:
    mean: float
    mean_se: float
    mean_ok: bool
    batch_vars: np.ndarray
    var_bound: float
    var_ok_fraction: float
    sup_abs: float
    sup_bound: float
    sup_ok: bool


def deviation_bound_check(
    c: CoeffSeq,
    phi: GeneratorPhi,
    cube: Cube,
    tc: TheoryConstants,
    e: Exponents,
    grid: Grid,
    n_batches: int = 100,
    batch_size: int = 200,
    seed: int = 0,
) -> DeviationReport:
    """Empirical moments of Z = |f(sample)| - mean_cube|f| against the bounds.

    Requires ||f||_{p,q} = 1 (checked to 1e-9).  The variance bound is
    k R^{-n/p} S^{-1/q}; the sup bound |Z| <= k is deterministic.
    """
    sig = synthesize(c, grid, phi)
    norm = grid_mixed_norm(sig, e)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError("coefficients must be normalized to unit mixed norm")
    mean_abs = grid_mixed_norm(sig, Exponents(1, 1), restrict_to=cube) / cube.volume

    half = np.array([cube.R / 2] * cube.n + [cube.S / 2])
    all_z = []
    batch_vars = np.zeros(n_batches)
    for bi in range(n_batches):
        rng = np.random.default_rng(np.random.SeedSequence(derive_seed(seed, "deviation", bi)))
        pts = rng.uniform(-half, half, size=(batch_size, cube.n + 1))
        z = np.abs(eval_coeff_at_points(c, phi, pts)) - mean_abs
        batch_vars[bi] = z.var(ddof=1)
        all_z.append(z)
    z = np.concatenate(all_z)
    mean = float(z.mean())
    se = float(z.std(ddof=1) / math.sqrt(len(z)))
    var_bound = tc.k * cube.R ** (-cube.n / e.p) * cube.S ** (-1.0 / e.q)
    sup_abs = float(np.abs(z).max())
    return DeviationReport(
        mean=mean,
        mean_se=se,
        mean_ok=abs(mean) <= 4.0 * se,
        batch_vars=batch_vars,
        var_bound=var_bound,
        var_ok_fraction=float((batch_vars <= var_bound).mean()),
        sup_abs=sup_abs,
        sup_bound=tc.k,
        sup_ok=sup_abs <= tc.k + 1e-12,
    )


def make_unit_family(
    phi: GeneratorPhi,
    lattice,
    grid: Grid,
    e: Exponents,
    cube: Cube,
    count: int = 25,
    singles: int = 8,
    seed: int = 1,
) -> list:
    """Unit-mixed-norm coefficient family supported inside the cube.

    Coefficients live on interior nodes (support fully inside the cube,
    so every member is 0-concentrated).  The first `singles` members are
    one-hot translates, the rest dense random combinations.
    """
    from .kernel_space import SUPPORT_RADIUS

    half = np.array([cube.R / 2] * cube.n + [cube.S / 2])
    interior = np.all(
        np.abs(lattice.nodes) + SUPPORT_RADIUS <= half + 1e-9, axis=1
    )
    idx = np.nonzero(interior)[0]
    if idx.size == 0:
        raise ValueError("no lattice node has support inside the cube")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    family = []
    picks = rng.choice(idx, size=min(singles, idx.size), replace=False)
    for i in range(count):
        coef = np.zeros(len(lattice))
        if i < len(picks):
            coef[picks[i]] = 1.0
        else:
            coef[idx] = rng.standard_normal(idx.size)
        c = CoeffSeq(lattice, coef)
        norm = grid_mixed_norm(synthesize(c, grid, phi), e)
        family.append(CoeffSeq(lattice, coef / norm))
    return family


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple:
    """Wilson score interval for a binomial proportion."""
    if trials == 0:
        return (0.0, 1.0)
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))
