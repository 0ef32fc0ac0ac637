"""Tent-generator reproducing kernel: lattice, projector, kernel functionals.

The generator is the simplex tent

    phi(x, y) = amplitude * max(1 - 3*sum_d |x_d| - 3*|y|, 0),

supported in the l1 ball of radius 1/3 (bounding box [-1/3, 1/3]^{n+1}).
Lattice nodes are separated by at least 2/3, so translated supports are
pairwise disjoint and any point is covered by at most one node.  The
kernel K((x,y),(s,t)) = sum_nodes phi(.-node) phi(.-node) then acts as an
integral projector; with the L2-normalizing amplitude it is idempotent.

All operator applications use midpoint-rule quadrature on tensor grids.
Because the kernel is a finite sum of rank-one terms, applying T via
per-node inner products is arithmetically identical to the dense
quadrature sum, just cheaper.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .mixed_norms import Cube, Exponents, Grid, GridSignal, grid_mixed_norm, seq_mixed_norm

__all__ = [
    "SUPPORT_RADIUS",
    "GeneratorPhi",
    "Lattice",
    "Kernel",
    "CoeffSeq",
    "eval_phi",
    "normalize_phi",
    "default_lattice",
    "eval_kernel",
    "synthesize",
    "analyze",
    "apply_T",
    "eval_coeff_at_points",
    "coeff_mixed_norm",
    "kernel_W_norm",
    "modulus_w_eps",
    "decay_envelope_check",
    "compute_k_sup",
    "EnvelopeReport",
]

SUPPORT_RADIUS = 1.0 / 3.0

# Dyadic floor for the perturbation stencil chain; see modulus_w_eps.
_STENCIL_FLOOR = 1.0 / 64.0


@dataclass(frozen=True)
class GeneratorPhi:
    """Tent generator with fixed slope 3 per coordinate."""

    n: int
    amplitude: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("spatial dimension n must be >= 1")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")

    @property
    def is_normalized(self) -> bool:
        return abs(self.amplitude / normalize_phi(self.n) - 1.0) <= 1e-8


def normalize_phi(n: int) -> float:
    """Amplitude making ||phi||_{L2(R^{n+1})} = 1.

    The squared tent integrates to (2/3)^d * 2/(d+2)! over R^d with
    d = n+1 (Dirichlet simplex integral), so the normalizer is
    ((3/2)^d * (d+2)!/2)^{1/2}.  For n = 1 this is 3*sqrt(3).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = n + 1
    return math.sqrt((3.0 / 2.0) ** d * math.factorial(d + 2) / 2.0)


def eval_phi(phi: GeneratorPhi, x, y):
    """Evaluate phi at spatial point(s) x (shape (..., n)) and time(s) y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape == () and phi.n == 1:
        x = x.reshape(1)
    if x.shape[-1] != phi.n:
        raise ValueError(f"spatial point must have {phi.n} coordinates")
    arg = 1.0 - 3.0 * np.abs(x).sum(axis=-1) - 3.0 * np.abs(y)
    out = phi.amplitude * np.maximum(arg, 0.0)
    return float(out) if out.shape == () else out


@dataclass(frozen=True)
class Lattice:
    """Finite separated node set; nodes shape (M, n+1), last column temporal."""

    nodes: np.ndarray
    gap: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 2:
            nodes = nodes.reshape(0, 2) if nodes.size == 0 else np.atleast_2d(nodes)
        object.__setattr__(self, "nodes", nodes)
        if self.gap < 2.0 / 3.0 - 1e-12:
            raise ValueError("lattice gap must be >= 2/3 for disjoint supports")
        if len(nodes) > 1:
            tree = cKDTree(nodes)
            d, _ = tree.query(nodes, k=2)
            if d[:, 1].min() < self.gap - 1e-12:
                raise ValueError("nodes closer than the declared gap")

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def n(self) -> int:
        return self.nodes.shape[1] - 1

    def spatial_values(self, tol: float = 1e-9) -> np.ndarray:
        """Deduplicated spatial projections (for overlap counts)."""
        sp = self.nodes[:, :-1]
        if len(sp) == 0:
            return sp
        rounded = np.round(sp / tol) * tol
        return np.unique(rounded, axis=0)

    def temporal_values(self, tol: float = 1e-9) -> np.ndarray:
        tp = self.nodes[:, -1]
        if len(tp) == 0:
            return tp
        return np.unique(np.round(tp / tol) * tol)

    def translated(self, shift) -> "Lattice":
        return Lattice(self.nodes + np.asarray(shift, dtype=float), self.gap)


def default_lattice(cube: Cube, spacing: float = 2.0 / 3.0, pad: float = SUPPORT_RADIUS) -> Lattice:
    """Scaled integer grid spacing*Z^{n+1} inside the cube padded by `pad`."""
    half = [cube.R / 2 + pad] * cube.n + [cube.S / 2 + pad]
    axes = []
    for h in half:
        kmax = int(math.floor(h / spacing + 1e-12))
        axes.append(np.arange(-kmax, kmax + 1) * spacing)
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=-1)
    return Lattice(nodes, spacing)


@dataclass(frozen=True)
class Kernel:
    """K((x,y),(s,t)) = sum over nodes of phi(.-node) phi(.-node)."""

    phi: GeneratorPhi
    lattice: Lattice

    def __post_init__(self):
        if len(self.lattice) and self.lattice.n != self.phi.n:
            raise ValueError("lattice and generator dimensions differ")
        tree = cKDTree(self.lattice.nodes) if len(self.lattice) else None
        object.__setattr__(self, "_tree", tree)

    def covering(self, pts: np.ndarray):
        """(node index, phi value) for each point; index -1 where uncovered.

        At most one node can cover a point (disjoint supports), and that
        node is the Euclidean-nearest one, so a single tree query suffices.
        """
        pts = np.asarray(pts, dtype=float)
        shape = pts.shape[:-1]
        if self._tree is None:
            return (np.full(shape, -1, dtype=np.int64), np.zeros(shape))
        flat = pts.reshape(-1, pts.shape[-1])
        _, idx = self._tree.query(flat)
        l1 = np.abs(flat - self.lattice.nodes[idx]).sum(axis=1)
        val = self.phi.amplitude * np.maximum(1.0 - 3.0 * l1, 0.0)
        idx = np.where(val > 0.0, idx, -1)
        return idx.reshape(shape), val.reshape(shape)


@dataclass(frozen=True)
class CoeffSeq:
    """Finitely supported coefficients on a lattice (one value per node)."""

    lattice: Lattice
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape != (len(self.lattice),):
            raise ValueError("need exactly one coefficient per lattice node")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coefficients", c)

    def __add__(self, other: "CoeffSeq") -> "CoeffSeq":
        return CoeffSeq(self.lattice, self.coefficients + other.coefficients)

    def __sub__(self, other: "CoeffSeq") -> "CoeffSeq":
        return CoeffSeq(self.lattice, self.coefficients - other.coefficients)

    def __mul__(self, c: float) -> "CoeffSeq":
        return CoeffSeq(self.lattice, self.coefficients * float(c))

    __rmul__ = __mul__


def eval_kernel(k: Kernel, x, y, s, t):
    """K(x,y,s,t) via the covering-node lookup (at most one node contributes)."""
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if s.ndim == 0:
        s = s.reshape(1)
    if x.shape[-1] != k.phi.n or s.shape[-1] != k.phi.n:
        raise ValueError(f"spatial points must have {k.phi.n} coordinates")
    p1 = np.concatenate([x, np.asarray(y, dtype=float)[..., None]], axis=-1)
    p2 = np.concatenate([np.asarray(s, dtype=float), np.asarray(t, dtype=float)[..., None]], axis=-1)
    i1, v1 = k.covering(p1)
    i2, v2 = k.covering(p2)
    out = np.where((i1 >= 0) & (i1 == i2), v1 * v2, 0.0)
    return float(out) if out.shape == () else out


# ---------------------------------------------------------------------------
# Grid-block helpers shared by synthesize / analyze / apply_T
# ---------------------------------------------------------------------------


def _axis_window(axis: np.ndarray, lo: float, hi: float):
    """Index range [a, b) of midpoints falling in [lo, hi]."""
    a = int(np.searchsorted(axis, lo - 1e-12 * max(1.0, abs(lo))))
    b = int(np.searchsorted(axis, hi + 1e-12 * max(1.0, abs(hi)), side="right"))
    return a, b


def _node_block(grid: Grid, node: np.ndarray):
    """Per-axis index slices and coordinates covering one node's support box."""
    xs = grid.spatial_axis()
    ts = grid.temporal_axis()
    slices, coords = [], []
    for d in range(grid.cube.n):
        a, b = _axis_window(xs, node[d] - SUPPORT_RADIUS, node[d] + SUPPORT_RADIUS)
        slices.append(slice(a, b))
        coords.append(xs[a:b] - node[d])
    a, b = _axis_window(ts, node[-1] - SUPPORT_RADIUS, node[-1] + SUPPORT_RADIUS)
    slices.append(slice(a, b))
    coords.append(ts[a:b] - node[-1])
    return tuple(slices), coords


def _phi_on_block(phi: GeneratorPhi, coords) -> np.ndarray:
    """Tent values on the tensor block spanned by centered 1-d coordinates."""
    l1 = np.zeros((1,) * len(coords))
    for d, c in enumerate(coords):
        shape = [1] * len(coords)
        shape[d] = len(c)
        l1 = l1 + np.abs(c).reshape(shape)
    return phi.amplitude * np.maximum(1.0 - 3.0 * l1, 0.0)


def _truncated_nodes(grid: Grid, lattice: Lattice) -> np.ndarray:
    half = np.array([grid.cube.R / 2] * grid.cube.n + [grid.cube.S / 2])
    if len(lattice) == 0:
        return np.zeros(0, dtype=bool)
    return np.any(np.abs(lattice.nodes) + SUPPORT_RADIUS > half + 1e-12, axis=1)


def synthesize(c: CoeffSeq, grid: Grid, phi: GeneratorPhi) -> GridSignal:
    """Exact pointwise sum of coefficient-weighted tent translates.

    Rejects grids that truncate the support of any node carrying a
    nonzero coefficient.
    """
    out = np.zeros(grid.shape)
    nonzero = c.coefficients != 0.0
    truncated = _truncated_nodes(grid, c.lattice)
    if np.any(nonzero & truncated):
        raise ValueError("grid truncates the support of a node with nonzero coefficient")
    for node, coef in zip(c.lattice.nodes[nonzero], c.coefficients[nonzero]):
        slices, coords = _node_block(grid, node)
        out[slices] += coef * _phi_on_block(phi, coords)
    return GridSignal(grid, out)


def _inner_products(kernel: Kernel, f: GridSignal) -> np.ndarray:
    """Midpoint quadrature of <phi_node, f> for every lattice node."""
    vol = f.grid.cell_volume
    out = np.zeros(len(kernel.lattice))
    for i, node in enumerate(kernel.lattice.nodes):
        slices, coords = _node_block(f.grid, node)
        blk = _phi_on_block(kernel.phi, coords)
        out[i] = float((blk * f.values[slices]).sum()) * vol
    return out


def analyze(k: Kernel, f: GridSignal) -> CoeffSeq:
    """Coefficients <f, phi_node> by quadrature (normalized amplitude required)."""
    if not k.phi.is_normalized:
        raise ValueError("analysis requires the L2-normalizing amplitude")
    return CoeffSeq(k.lattice, _inner_products(k, f))


def apply_T(k: Kernel, f: GridSignal) -> GridSignal:
    """Apply the integral operator by midpoint quadrature at every grid node.

    Computed per node as synthesize(<phi_node, f>); finite sums commute,
    so this equals the dense quadrature of the kernel integral exactly.
    """
    if np.any(_truncated_nodes(f.grid, k.lattice)):
        warnings.warn(
            "grid extent truncates some node supports; quadrature is biased",
            stacklevel=2,
        )
    coeffs = _inner_products(k, f)
    out = np.zeros(f.grid.shape)
    for node, coef in zip(k.lattice.nodes, coeffs):
        if coef == 0.0:
            continue
        slices, coords = _node_block(f.grid, node)
        out[slices] += coef * _phi_on_block(k.phi, coords)
    return GridSignal(f.grid, out)


def eval_coeff_at_points(c: CoeffSeq, phi: GeneratorPhi, pts: np.ndarray) -> np.ndarray:
    """Exact values of sum_node c_node phi(.-node) at arbitrary points."""
    kernel = Kernel(phi, c.lattice)
    idx, val = kernel.covering(pts)
    coef = np.where(idx >= 0, c.coefficients[np.maximum(idx, 0)], 0.0)
    return coef * val


def coeff_mixed_norm(c: CoeffSeq, e: Exponents) -> float:
    """Mixed sequence norm of lattice coefficients, grouped by temporal value."""
    if len(c.lattice) == 0:
        return 0.0
    temps = c.lattice.nodes[:, -1]
    groups = []
    for t in np.unique(temps):
        groups.append(c.coefficients[temps == t])
    return seq_mixed_norm(groups, e)


# ---------------------------------------------------------------------------
# Kernel functionals: composed W norm, regularity modulus, decay envelope
# ---------------------------------------------------------------------------


def _functional_axes(kernel: Kernel, resolution: int, pad: float):
    """Midpoint axes covering all node supports, padded by `pad`.

    The cell size is quantized so the support width 2/3 spans an even
    number of cells, and the axes are phased so the first node lies on a
    grid midpoint: for spacing-(2/3) lattices every node and support edge
    is then grid-aligned, which removes the O(h) phase wobble in the
    discretized sups.
    """
    nodes = kernel.lattice.nodes
    cells = 2 * max(1, round(2 * SUPPORT_RADIUS * resolution / 2))
    h = 2 * SUPPORT_RADIUS / cells

    def axis(anchor, lo_raw, hi_raw):
        k = math.ceil((anchor - lo_raw) / h - 0.5)
        lo = anchor - (k + 0.5) * h
        count = int(math.ceil((hi_raw - lo) / h))
        return lo + (np.arange(count) + 0.5) * h

    sp = nodes[:, :-1]
    xs = axis(sp.flat[0], sp.min() - SUPPORT_RADIUS - pad - h, sp.max() + SUPPORT_RADIUS + pad + h)
    tp = nodes[:, -1]
    ts = axis(tp[0], tp.min() - SUPPORT_RADIUS - pad - h, tp.max() + SUPPORT_RADIUS + pad + h)
    return xs, ts, h


def _stencil_scales(eps: float) -> list:
    """Dyadic sub-scale chain {eps, eps/2, ...} down to the absolute floor.

    Using the union of stencils over the chain keeps the discrete modulus
    monotone nondecreasing along halving ladders by construction.
    """
    if eps <= 0:
        return []
    scales = [eps]
    s = eps / 2.0
    while s >= _STENCIL_FLOOR:
        scales.append(s)
        s /= 2.0
    return scales


def _side_offsets(n: int, eps: float, density: int) -> np.ndarray:
    """All per-point perturbation vectors (n+1 coordinates) in the stencil."""
    scales = _stencil_scales(eps)
    if not scales:
        return np.zeros((1, n + 1))
    per_coord = np.unique(
        np.concatenate([np.linspace(-s, s, 2 * density + 1) for s in scales])
    )
    combos = np.array(list(itertools.product(per_coord, repeat=n + 1)))
    return combos


class _NodeTables:
    """Per-node max/min/base tent values over the perturbation stencil."""

    def __init__(self, kernel, node, xs, ts, offsets, pad):
        n = kernel.phi.n
        self.xr = []
        coords = []
        for d in range(n):
            a = int(np.searchsorted(xs, node[d] - SUPPORT_RADIUS - pad - 1e-12))
            b = int(np.searchsorted(xs, node[d] + SUPPORT_RADIUS + pad + 1e-12, side="right"))
            self.xr.append((a, b))
            coords.append(xs[a:b] - node[d])
        a = int(np.searchsorted(ts, node[-1] - SUPPORT_RADIUS - pad - 1e-12))
        b = int(np.searchsorted(ts, node[-1] + SUPPORT_RADIUS + pad + 1e-12, side="right"))
        self.tr = (a, b)
        coords.append(ts[a:b] - node[-1])

        shape = tuple(len(c) for c in coords)
        vmax = np.full(shape, -np.inf)
        vmin = np.full(shape, np.inf)
        base = None
        amp = kernel.phi.amplitude
        for off in offsets:
            l1 = np.zeros((1,) * len(coords))
            for d, c in enumerate(coords):
                sh = [1] * len(coords)
                sh[d] = len(c)
                l1 = l1 + np.abs(c + off[d]).reshape(sh)
            v = amp * np.maximum(1.0 - 3.0 * l1, 0.0)
            np.maximum(vmax, v, out=vmax)
            np.minimum(vmin, v, out=vmin)
            if np.all(off == 0.0):
                base = v
        if base is None:  # stencil always contains the zero offset
            raise AssertionError("stencil must include the zero offset")
        self.vmax, self.vmin, self.base = vmax, vmin, base


def _composed_W_norm(kernel: Kernel, resolution: int, eps: float, density: int, mode: str) -> float:
    """Discretized ||.||_W of K (mode='kernel') or of w_eps(K) (mode='modulus').

    Inner stage: for each (y, t) pair, sup over x of the L1 slice in s and
    sup over s of the slice in x, restricted to the diagonal band where the
    field can be nonzero.  Outer stage: the same max-of-sup-L1 composition
    over (y, t).
    """
    if len(kernel.lattice) == 0:
        return 0.0
    if resolution * 2 < 3 * 8:  # need >= 8 cells across the support width 2/3
        raise ValueError("resolution too coarse to resolve the support")
    n = kernel.phi.n
    pad = eps if mode == "modulus" else 0.0
    xs, ts, h = _functional_axes(kernel, resolution, pad)
    offsets = _side_offsets(n, eps if mode == "modulus" else 0.0, density)
    tables = [
        _NodeTables(kernel, node, xs, ts, offsets, pad)
        for node in kernel.lattice.nodes
    ]

    nx, nt = len(xs), len(ts)
    w_idx = int(math.ceil((2 * (SUPPORT_RADIUS + pad)) / h)) + 1
    spatial_shape = (nx,) * n
    g_band = np.zeros((nt, 2 * w_idx + 1))

    ddx_range = range(-w_idx, w_idx + 1)
    for ddt in range(-w_idx, w_idx + 1):
        a_int = np.zeros(spatial_shape + (nt,))
        b_int = np.zeros_like(a_int)
        for ddx in itertools.product(ddx_range, repeat=n):
            maxk = np.zeros(spatial_shape + (nt,))
            k0 = np.zeros_like(maxk)
            mink = np.zeros_like(maxk)
            touched = False
            for tb in tables:
                dst, src = [], []
                ok = True
                for d in range(n):
                    a, b = tb.xr[d]
                    lo = max(a, a - ddx[d])
                    hi = min(b, b - ddx[d])
                    if lo >= hi:
                        ok = False
                        break
                    dst.append((lo, hi))
                    src.append((lo - a, hi - a, lo + ddx[d] - a))
                if not ok:
                    continue
                a, b = tb.tr
                lo = max(a, a - ddt, 0, -ddt)
                hi = min(b, b - ddt, nt, nt - ddt)
                if lo >= hi:
                    continue
                dst_sl = tuple(slice(x[0], x[1]) for x in dst) + (slice(lo, hi),)
                u_sl = tuple(slice(s[0], s[1]) for s in src) + (slice(lo - a, hi - a),)
                v_sl = tuple(slice(s[2], s[2] + s[1] - s[0]) for s in src) + (
                    slice(lo + ddt - a, hi + ddt - a),
                )
                touched = True
                np.maximum(maxk[dst_sl], tb.vmax[u_sl] * tb.vmax[v_sl], out=maxk[dst_sl])
                base_u, base_v = tb.base[u_sl], tb.base[v_sl]
                np.maximum(k0[dst_sl], base_u * base_v, out=k0[dst_sl])
                if mode == "modulus":
                    contrib = (
                        tb.vmin[u_sl]
                        * tb.vmin[v_sl]
                        * (base_u > 0.0)
                        * (base_v > 0.0)
                    )
                    np.maximum(mink[dst_sl], contrib, out=mink[dst_sl])
            if not touched:
                continue
            if mode == "kernel":
                w_plane = k0
            else:
                w_plane = np.maximum(maxk - k0, k0 - mink)
            a_int += w_plane * h**n
            # shifted add: contribution of column x to the x-integral at s = x + ddx
            dst, src = [], []
            ok = True
            for d in range(n):
                lo = max(0, ddx[d])
                hi = min(nx, nx + ddx[d])
                if lo >= hi:
                    ok = False
                    break
                dst.append(slice(lo, hi))
                src.append(slice(lo - ddx[d], hi - ddx[d]))
            if ok:
                b_int[tuple(dst)] += w_plane[tuple(src)] * h**n
        red = tuple(range(n))
        g_a = a_int.max(axis=red)
        g_b = b_int.max(axis=red)
        g = np.maximum(g_a, g_b)
        lo = max(0, -ddt)
        hi = min(nt, nt - ddt)
        col = np.zeros(nt)
        col[lo:hi] = g[lo:hi]
        g_band[:, ddt + w_idx] = col

    row_int = g_band.sum(axis=1) * h
    col_int = np.zeros(nt)
    for j, ddt in enumerate(ddx_range):
        lo = max(0, ddt)
        hi = min(nt, nt + ddt)
        col_int[lo:hi] += g_band[lo - ddt : hi - ddt, j] * h
    return float(max(row_int.max(initial=0.0), col_int.max(initial=0.0)))


def kernel_W_norm(k: Kernel, resolution: int = 16) -> float:
    """Composed W norm of the kernel (max-of-sup-L1 in (x,s), then in (y,t))."""
    return _composed_W_norm(k, resolution, 0.0, 1, "kernel")


def modulus_w_eps(k: Kernel, epsilon: float, resolution: int = 16, density: int = 1) -> float:
    """Composed W norm of the perturbation modulus w_eps(K).

    The inner sup is taken over a finite stencil: per coordinate, the
    union of linspace(-s, s, 2*density+1) over the dyadic chain
    s = eps, eps/2, ... down to an absolute floor.  The chain union makes
    the result monotone nondecreasing along halving ladders of eps.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if epsilon == 0.0 or len(k.lattice) == 0:
        return 0.0
    return _composed_W_norm(k, resolution, epsilon, density, "modulus")


@dataclass(frozen=True)
class EnvelopeReport:
    """Fitted decay-envelope constant and hypothesis thresholds."""

    c: float
    alpha: float
    beta: float
    alpha_min: float
    beta_min: float
    argmax: tuple | None

    @property
    def ok(self) -> bool:
        return math.isfinite(self.c)


def decay_thresholds(n: int, e: Exponents) -> tuple:
    """Strict lower bounds for the admissible envelope exponents."""
    inv_p_conj = 0.0 if e.p_conj == math.inf else 1.0 / e.p_conj
    inv_q_conj = 0.0 if e.q_conj == math.inf else 1.0 / e.q_conj
    alpha_min = n * inv_p_conj + n + 2 + inv_q_conj
    beta_min = inv_q_conj + n + 2 + n * inv_q_conj
    return alpha_min, beta_min


def decay_envelope_check(
    k: Kernel,
    alpha: float,
    beta: float,
    e: Exponents,
    cloud_points: int = 4096,
    seed: int = 0,
) -> EnvelopeReport:
    """Fit the smallest constant c with |K| <= c/((1+||x-s||_1)^a (1+|y-t|)^b).

    The sup is taken over a seeded point cloud concentrated on node
    supports (K vanishes elsewhere), so c is finite by compact support.
    Rejects exponents at or below the admissible thresholds.
    """
    alpha_min, beta_min = decay_thresholds(k.phi.n, e)
    if not (alpha > alpha_min and beta > beta_min):
        raise ValueError(
            f"envelope exponents out of hypothesis: need alpha > {alpha_min}, beta > {beta_min}"
        )
    if len(k.lattice) == 0:
        return EnvelopeReport(0.0, alpha, beta, alpha_min, beta_min, None)

    rng = np.random.default_rng(seed)
    n = k.phi.n
    nodes = k.lattice.nodes
    per_node = max(1, cloud_points // len(nodes))
    best = 0.0
    best_at = None

    # Structured antipodal family around one node: the weighted product
    # depends only on (||spatial offset||_1, |temporal offset|) there, so a
    # dense 2-d scan pins the sup; the random cloud covers the rest.
    node0 = nodes[0]
    us = np.linspace(0.0, SUPPORT_RADIUS, 160)
    uu, vv = np.meshgrid(us, us, indexing="ij")
    keep = uu + vv < SUPPORT_RADIUS
    du = np.zeros((keep.sum(), n))
    du[:, 0] = uu[keep]
    dv = vv[keep]
    p1 = np.concatenate([node0[:n] + du, (node0[n] + dv)[:, None]], axis=1)
    p2 = np.concatenate([node0[:n] - du, (node0[n] - dv)[:, None]], axis=1)
    kv = eval_kernel(k, p1[:, :n], p1[:, n], p2[:, :n], p2[:, n])
    weighted = np.abs(kv) * (1.0 + 2.0 * uu[keep]) ** alpha * (1.0 + 2.0 * dv) ** beta
    i = int(np.argmax(weighted))
    best = float(weighted[i])
    best_at = (tuple(p1[i]), tuple(p2[i]))

    for node in nodes:
        p1 = node + rng.uniform(-SUPPORT_RADIUS, SUPPORT_RADIUS, size=(per_node, n + 1))
        p2 = node + rng.uniform(-SUPPORT_RADIUS, SUPPORT_RADIUS, size=(per_node, n + 1))
        # include the exact peak pair
        p1 = np.vstack([p1, node[None, :]])
        p2 = np.vstack([p2, node[None, :]])
        kv = eval_kernel(k, p1[:, :n], p1[:, n], p2[:, :n], p2[:, n])
        d1 = np.abs(p1[:, :n] - p2[:, :n]).sum(axis=1)
        dt = np.abs(p1[:, n] - p2[:, n])
        weighted = np.abs(kv) * (1.0 + d1) ** alpha * (1.0 + dt) ** beta
        i = int(np.argmax(weighted))
        if weighted[i] > best:
            best = float(weighted[i])
            best_at = (tuple(p1[i]), tuple(p2[i]))
    return EnvelopeReport(best, alpha, beta, alpha_min, beta_min, best_at)


def phi_mixed_norm(phi: GeneratorPhi, e: Exponents, resolution: int = 64) -> float:
    """Quadrature L^{p,q} norm of the generator on its own support grid."""
    cells = max(8, int(round(2 * SUPPORT_RADIUS * resolution)))
    grid = Grid(Cube(2 * SUPPORT_RADIUS, 2 * SUPPORT_RADIUS, phi.n), cells, cells)
    lat = Lattice(np.zeros((1, phi.n + 1)), 2.0 / 3.0)
    sig = synthesize(CoeffSeq(lat, np.ones(1)), grid, phi)
    return grid_mixed_norm(sig, e)


def compute_k_sup(
    k: Kernel,
    e: Exponents,
    resolution: int = 64,
    restrict_to: Cube | None = None,
):
    """sup over (x,y) of ||K(x,y,.,.)||_{L^{p',q'}} and its argmax.

    The slice through (x,y) is phi_node(x,y) times a fixed tent translate,
    so the slice norm is phi_node(x,y) * ||phi||_{p',q'}; the sup is scanned
    over a midpoint grid augmented with the exact node positions.
    """
    if len(k.lattice) == 0:
        return 0.0, None
    conj = e.conjugate()
    slice_norm = phi_mixed_norm(k.phi, conj, resolution)
    xs, ts, _ = _functional_axes(k, resolution, 0.0)
    mesh = np.meshgrid(*([xs] * k.phi.n + [ts]), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    pts = np.vstack([pts, k.lattice.nodes])
    if restrict_to is not None:
        half = np.array(
            [restrict_to.R / 2] * restrict_to.n + [restrict_to.S / 2]
        )
        pts = pts[np.all(np.abs(pts) <= half + 1e-12, axis=1)]
        if len(pts) == 0:
            return 0.0, None
    _, val = k.covering(pts)
    i = int(np.argmax(val))
    return float(val[i] * slice_norm), tuple(pts[i])
