"""Mixed (p,q) norms on finite sequences and tensor-grid signals.

The mixed norm reduces over the spatial index first (inner p-reduction)
and over the temporal index second (outer q-reduction).  Order matters:
the norm is not symmetric under exchanging the two roles.

Grid quadrature is the midpoint rule throughout: grid nodes are cell
centers, every cell carries the same volume weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Exponents",
    "Cube",
    "Grid",
    "GridSignal",
    "SampleMatrix",
    "InequalityReport",
    "holder_conjugate",
    "seq_mixed_norm",
    "grid_mixed_norm",
    "norm_comparison_check",
]

INF = math.inf


def holder_conjugate(p: float) -> float:
    """Return p' with 1/p + 1/p' = 1, using the convention 1/inf = 0."""
    if p != p:  # NaN
        raise ValueError("exponent must be a real number in [1, inf]")
    if p == INF:
        return 1.0
    if p < 1.0 or not math.isfinite(p):
        raise ValueError(f"exponent must lie in [1, inf], got {p}")
    if p == 1.0:
        return INF
    return p / (p - 1.0)


@dataclass(frozen=True)
class Exponents:
    """Exponent pair (p, q) with derived Hoelder conjugates."""

    p: float
    q: float
    p_conj: float = field(init=False)
    q_conj: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "p_conj", holder_conjugate(self.p))
        object.__setattr__(self, "q_conj", holder_conjugate(self.q))

    @property
    def finite(self) -> bool:
        return math.isfinite(self.p) and math.isfinite(self.q)

    def conjugate(self) -> "Exponents":
        """The pair (p', q')."""
        return Exponents(self.p_conj, self.q_conj)


@dataclass(frozen=True)
class Cube:
    """The centered box [-R/2, R/2]^n x [-S/2, S/2].

    R and S are full side lengths; n is the spatial dimension.
    """

    R: float
    S: float
    n: int = 1

    def __post_init__(self):
        if self.R <= 0 or self.S <= 0:
            raise ValueError("cube sides R, S must be positive")
        if self.n < 1:
            raise ValueError("spatial dimension n must be >= 1")

    @property
    def volume(self) -> float:
        return self.R**self.n * self.S

    def contains(self, other: "Cube", tol: float = 1e-12) -> bool:
        return (
            self.n == other.n
            and other.R <= self.R * (1 + tol)
            and other.S <= self.S * (1 + tol)
        )

    def padded(self, pad: float) -> "Cube":
        return Cube(self.R + 2 * pad, self.S + 2 * pad, self.n)


@dataclass(frozen=True)
class Grid:
    """Immutable midpoint tensor grid over a cube.

    Axes: n spatial axes of `nx` cells each, one temporal axis of `nt`
    cells (the last array axis).  Node coordinates are cell centers.
    """

    cube: Cube
    nx: int
    nt: int

    def __post_init__(self):
        if self.nx < 1 or self.nt < 1:
            raise ValueError("grid needs at least one cell per axis")

    @property
    def hx(self) -> float:
        return self.cube.R / self.nx

    @property
    def ht(self) -> float:
        return self.cube.S / self.nt

    @property
    def cell_volume(self) -> float:
        return self.hx**self.cube.n * self.ht

    @property
    def shape(self) -> tuple:
        return (self.nx,) * self.cube.n + (self.nt,)

    def spatial_axis(self) -> np.ndarray:
        h = self.hx
        return -self.cube.R / 2 + (np.arange(self.nx) + 0.5) * h

    def temporal_axis(self) -> np.ndarray:
        h = self.ht
        return -self.cube.S / 2 + (np.arange(self.nt) + 0.5) * h

    def axes(self) -> list:
        return [self.spatial_axis()] * self.cube.n + [self.temporal_axis()]

    def node_coordinates(self) -> np.ndarray:
        """All node coordinates, shape grid.shape + (n+1,)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)


@dataclass(frozen=True)
class GridSignal:
    """Real values tabulated on a grid (spatial axes first, temporal last)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(
                f"values shape {v.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("signal values must all be finite")
        object.__setattr__(self, "values", v)

    def __add__(self, other: "GridSignal") -> "GridSignal":
        if other.grid != self.grid:
            raise ValueError("signals live on different grids")
        return GridSignal(self.grid, self.values + other.values)

    def __sub__(self, other: "GridSignal") -> "GridSignal":
        if other.grid != self.grid:
            raise ValueError("signals live on different grids")
        return GridSignal(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "GridSignal":
        return GridSignal(self.grid, self.values * float(c))

    __rmul__ = __mul__


@dataclass(frozen=True)
class SampleMatrix:
    """Sampled values f(x_i, y_j) indexed (i, j): axis 0 spatial, axis 1 temporal."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("sample matrix must be 2-d with l, m >= 1")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample values must all be finite")
        object.__setattr__(self, "values", v)

    @property
    def l(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]


def _reduce(a: np.ndarray, expo: float, axis, weight: float = 1.0) -> np.ndarray:
    """One p-reduction along `axis`: weighted power sum, or sup for p = inf."""
    a = np.abs(a)
    if expo == INF:
        return a.max(axis=axis)
    s = (a**expo).sum(axis=axis) * weight
    return s ** (1.0 / expo)


def seq_mixed_norm(c, e: Exponents) -> float:
    """Mixed sequence norm (sum_j (sum_i |c(i,j)|^p)^{q/p})^{1/q}.

    `c` is a SampleMatrix, a 2-d array indexed (i, j), or a list of 1-d
    arrays (one group per temporal level, for ragged lattice coefficients).
    """
    if isinstance(c, SampleMatrix):
        c = c.values
    if isinstance(c, (list, tuple)):
        inner = np.array([_reduce(np.asarray(g, dtype=float), e.p, None) for g in c])
        if inner.size == 0:
            return 0.0
        return float(_reduce(inner, e.q, None))
    c = np.asarray(c, dtype=float)
    if c.ndim != 2:
        raise ValueError("sequence must be 2-d (spatial index first)")
    inner = _reduce(c, e.p, 0)
    return float(_reduce(inner, e.q, None))


def _restriction_mask(grid: Grid, cube: Cube) -> np.ndarray:
    """Boolean mask of cells whose centers lie in the closed cube."""
    if cube.n != grid.cube.n:
        raise ValueError("restriction cube dimension mismatch")
    if not grid.cube.contains(cube):
        raise ValueError("restriction cube exceeds the grid extent")
    xs = grid.spatial_axis()
    ts = grid.temporal_axis()
    mx = np.abs(xs) <= cube.R / 2 + 1e-12
    mt = np.abs(ts) <= cube.S / 2 + 1e-12
    mask = mx
    for _ in range(grid.cube.n - 1):
        mask = mask[..., None] & mx
    return mask[..., None] & mt


def grid_mixed_norm(f: GridSignal, e: Exponents, restrict_to: Cube | None = None) -> float:
    """Midpoint-rule L^{p,q} norm: inner over spatial axes, outer over time.

    With `restrict_to`, cells whose centers fall outside the cube are
    zeroed before the reduction (cells belong to the side their center
    is on; the boundary error shrinks with resolution).
    """
    g = f.grid
    v = f.values
    if restrict_to is not None:
        v = np.where(_restriction_mask(g, restrict_to), v, 0.0)
    n = g.cube.n
    spatial_axes = tuple(range(n))
    inner = _reduce(v, e.p, spatial_axes, weight=g.hx**n)
    return float(_reduce(inner, e.q, None, weight=g.ht))


@dataclass(frozen=True)
class InequalityReport:
    """Hold/violate verdicts with slack (rhs - lhs) for a chain of bounds."""

    holds: tuple
    slacks: tuple
    sides: dict

    @property
    def all_hold(self) -> bool:
        return all(h for h in self.holds if h is not None)


def norm_comparison_check(
    f: GridSignal,
    samples: SampleMatrix,
    e: Exponents,
    cube: Cube,
    D: float,
    rel_tol: float = 1e-9,
) -> InequalityReport:
    """Numerically evaluate the three norm-comparison inequalities.

    1. sampled mixed norm <= sum of |samples| <= l^{1-1/p} m^{1-1/q} * sampled norm
    2. ||f||_{1,1}(cube) <= R^{n-n/p} S^{1-1/q} ||f||_{p,q}(cube)
    3. ||f||_{p,q}(cube)^{pq} <= R^{(p-1)n} S^{q-1} D^{pq-1} ||f||_{1,1}(cube)

    The third requires D >= ||f||_inf / ||f||_{p,q} on the cube and finite
    p, q, and is stated in its source's normalized regime (unit mixed norm
    on the cube, D >= 1, R, S >= 1); with an infinite exponent it is
    reported as not applicable (verdict None).  Violations are flagged,
    not raised: they indicate discretization error or an invalid D.
    """
    p, q = e.p, e.q
    n, R, S = cube.n, cube.R, cube.S
    l, m = samples.l, samples.m

    mixed = seq_mixed_norm(samples, e)
    total = float(np.abs(samples.values).sum())
    inv_p = 0.0 if p == INF else 1.0 / p
    inv_q = 0.0 if q == INF else 1.0 / q
    upper1 = l ** (1.0 - inv_p) * m ** (1.0 - inv_q) * mixed
    tol1 = rel_tol * max(1.0, mixed, total)
    hold1 = (mixed <= total + tol1) and (total <= upper1 + tol1)
    slack1 = min(total - mixed, upper1 - total)

    one = Exponents(1.0, 1.0)
    norm11 = grid_mixed_norm(f, one, restrict_to=cube)
    normpq = grid_mixed_norm(f, e, restrict_to=cube)
    rhs2 = R ** (n - n * inv_p) * S ** (1.0 - inv_q) * normpq
    tol2 = rel_tol * max(1.0, norm11, rhs2)
    hold2 = norm11 <= rhs2 + tol2
    slack2 = rhs2 - norm11

    if e.finite:
        lhs3 = normpq ** (p * q)
        rhs3 = R ** ((p - 1.0) * n) * S ** (q - 1.0) * D ** (p * q - 1.0) * norm11
        tol3 = rel_tol * max(1.0, lhs3, rhs3)
        hold3 = lhs3 <= rhs3 + tol3
        slack3 = rhs3 - lhs3
    else:
        # The pq-power form degenerates for infinite exponents; skipped.
        lhs3 = rhs3 = None
        hold3 = None
        slack3 = None

    return InequalityReport(
        holds=(hold1, hold2, hold3),
        slacks=(slack1, slack2, slack3),
        sides={
            "sampled_mixed": mixed,
            "sampled_total": total,
            "sampled_upper": upper1,
            "norm_11": norm11,
            "norm_pq": normpq,
            "rhs_2": rhs2,
            "lhs_3": lhs3,
            "rhs_3": rhs3,
        },
    )
