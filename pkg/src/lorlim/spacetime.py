"""Chart-based 1+1 spacetimes and their discretized causal lattices.

Chart points are (x, y) with y the timelike coordinate and future = +y.
The Lorentzian metric g is stored as a symmetric 2x2 component matrix in the
(x, y) coordinate basis with signature (-,+): for the flat preset
g = dx^2 - dy^2, i.e. diag(1, -1), so g(e_y, e_y) = -1 on the timelike axis
and g(e_x, e_x) = +1 on the spacelike axis.  An auxiliary Riemannian metric
h (positive definite) rides along for arc-length and anti-Lipschitz work.

Excluded regions (open disks / open rectangles) model incompleteness: points
inside them are not part of the manifold.

The causal lattice is a directed acyclic graph over the non-excluded grid
points.  Edges are straight chords (dx, dy)*spacing with 1 <= dy and
max(|dx|, dy) <= stencil_radius whose midpoint-evaluated g-norm is within
causal_tol of the cone; chords are additionally rejected when a sampled
interior point lands in an excluded region.  Edge weights carry both the
Lorentzian chord length sqrt(max(0, -g(c,c))) and the Riemannian chord
length sqrt(h(c,c)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .config import DomainBox, ExcludedRegion, SpacetimeConfig
from .errors import ConfigError, DomainError, ExcludedPointError, SignatureError

__all__ = [
    "MetricField",
    "VectorClass",
    "CausalLattice",
    "build_metric_field",
    "build_lattice",
    "classify_vector",
]

DEFAULT_CAUSAL_TOL_CONSTANT = 1e-9
DEFAULT_CAUSAL_TOL_VARIABLE_PER_SPACING = 1e-6


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.shape[-1] != 2:
        raise ValueError("points must have shape (..., 2)")
    return pts


def _compile_factor(expr: str) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Compile a scalar factor field expression in x, y to a numpy callable."""
    import sympy

    x, y = sympy.symbols("x y")
    try:
        sym = sympy.sympify(expr, locals={"x": x, "y": y})
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ConfigError(f"unparseable factor expression {expr!r}: {exc}") from exc
    fn = sympy.lambdify((x, y), sym, modules="numpy")

    def factor(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = fn(xs, ys)
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(xs)).copy()

    return factor


@dataclass(frozen=True)
class MetricField:
    """Lorentzian metric g, auxiliary Riemannian metric h, and exclusions.

    g_fn / h_fn map arrays of shape (N, 2) to component matrices (N, 2, 2).
    ``constant_metric`` is True when g does not vary over the chart (used to
    pick the causal tolerance default).
    """

    domain: DomainBox
    g_fn: Callable[[np.ndarray], np.ndarray]
    h_fn: Callable[[np.ndarray], np.ndarray]
    excluded_regions: tuple = ()
    constant_metric: bool = True
    name: str = "custom"
    time_axis: int = 1
    future_sign: float = 1.0

    # -- evaluation ---------------------------------------------------------

    def g(self, points) -> np.ndarray:
        """Metric components at points; shape (2,2) for a single point."""
        pts = _as_points(points)
        out = self.g_fn(pts)
        return out[0] if np.ndim(points) == 1 else out

    def h(self, points) -> np.ndarray:
        pts = _as_points(points)
        out = self.h_fn(pts)
        return out[0] if np.ndim(points) == 1 else out

    def g_quadratic(self, points, vectors) -> np.ndarray:
        """g_p(v, v), batched; scalar for single point/vector."""
        pts = _as_points(points)
        vec = np.asarray(vectors, dtype=float)
        single = vec.ndim == 1
        if single:
            vec = vec[None, :]
        mats = self.g_fn(pts)
        vals = np.einsum("nij,ni,nj->n", mats, vec, vec)
        return float(vals[0]) if single else vals

    def h_quadratic(self, points, vectors) -> np.ndarray:
        pts = _as_points(points)
        vec = np.asarray(vectors, dtype=float)
        single = vec.ndim == 1
        if single:
            vec = vec[None, :]
        mats = self.h_fn(pts)
        vals = np.einsum("nij,ni,nj->n", mats, vec, vec)
        return float(vals[0]) if single else vals

    def excluded(self, points):
        """True where a point is removed from the manifold."""
        pts = _as_points(points)
        out = np.zeros(pts.shape[0], dtype=bool)
        for region in self.excluded_regions:
            cx, cy = region.center
            if region.shape == "disk":
                r = float(region.radius)
                d2 = (pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2
                if r == 0.0:
                    out |= d2 == 0.0  # radius-0 disk = point puncture
                else:
                    out |= d2 < r * r
            else:  # rect
                hx, hy = region.radius
                out |= (np.abs(pts[:, 0] - cx) < hx) & (np.abs(pts[:, 1] - cy) < hy)
        return bool(out[0]) if np.ndim(points) == 1 else out

    def in_domain(self, points):
        pts = _as_points(points)
        d = self.domain
        ok = (
            (pts[:, 0] >= d.x_min)
            & (pts[:, 0] <= d.x_max)
            & (pts[:, 1] >= d.y_min)
            & (pts[:, 1] <= d.y_max)
        )
        return bool(ok[0]) if np.ndim(points) == 1 else ok

    def default_causal_tol(self, spacing: Optional[float] = None) -> float:
        if self.constant_metric:
            return DEFAULT_CAUSAL_TOL_CONSTANT
        if spacing is None:
            return DEFAULT_CAUSAL_TOL_CONSTANT
        return DEFAULT_CAUSAL_TOL_VARIABLE_PER_SPACING * spacing

    # -- verification -------------------------------------------------------

    def verify(self, samples_per_axis: int = 9) -> None:
        """Check signature of g and positive-definiteness of h on a grid.

        Raises SignatureError on failure.  Excluded points are skipped.
        """
        d = self.domain
        xs = np.linspace(d.x_min, d.x_max, samples_per_axis)
        ys = np.linspace(d.y_min, d.y_max, samples_per_axis)
        gx, gy = np.meshgrid(xs, ys)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        keep = ~self.excluded(pts)
        pts = pts[keep]
        if pts.size == 0:
            raise DomainError("verification grid entirely excluded")
        g_mats = self.g_fn(pts)
        h_mats = self.h_fn(pts)
        g_finite = np.all(np.isfinite(g_mats), axis=(1, 2))
        h_finite = np.all(np.isfinite(h_mats), axis=(1, 2))
        if not np.all(g_finite & h_finite):
            bad = pts[~(g_finite & h_finite)][0]
            raise SignatureError(f"metric components not finite at {tuple(bad)}")
        g_eigs = np.linalg.eigvalsh(g_mats)
        g_ok = (g_eigs[:, 0] < 0) & (g_eigs[:, 1] > 0)
        if not np.all(g_ok):
            bad = pts[~g_ok][0]
            raise SignatureError(f"g is not Lorentzian at {tuple(bad)}")
        h_eigs = np.linalg.eigvalsh(h_mats)
        if not np.all(h_eigs[:, 0] > 0):
            bad = pts[h_eigs[:, 0] <= 0][0]
            raise SignatureError(f"h is not positive definite at {tuple(bad)}")


@dataclass(frozen=True)
class VectorClass:
    """Sign classification of g_p(v, v) plus time orientation."""

    character: str  # "timelike" | "null" | "spacelike"
    orientation: Optional[str]  # "future" | "past" | None
    g_value: float

    @property
    def is_causal(self) -> bool:
        return self.character in ("timelike", "null")

    @property
    def is_future_causal(self) -> bool:
        return self.is_causal and self.orientation == "future"

    @property
    def is_past_causal(self) -> bool:
        return self.is_causal and self.orientation == "past"


def classify_vector(field: MetricField, p, v, tol: Optional[float] = None) -> VectorClass:
    """Classify a tangent vector at p by the sign of g_p(v, v) within tol."""
    if field.excluded(np.asarray(p, dtype=float)):
        raise ExcludedPointError(f"point {tuple(p)} is excluded")
    if tol is None:
        tol = field.default_causal_tol()
    q = field.g_quadratic(np.asarray(p, float), np.asarray(v, float))
    if q > tol:
        return VectorClass("spacelike", None, q)
    character = "null" if q >= -tol else "timelike"
    t_comp = float(np.asarray(v, float)[field.time_axis]) * field.future_sign
    if t_comp > 0:
        orient = "future"
    elif t_comp < 0:
        orient = "past"
    else:
        orient = None  # degenerate (zero vector within tol)
    return VectorClass(character, orient, q)


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------


def _constant_matrix_fn(mat: np.ndarray):
    mat = np.asarray(mat, dtype=float)

    def fn(points: np.ndarray) -> np.ndarray:
        return np.broadcast_to(mat, (points.shape[0], 2, 2)).copy()

    return fn


def _conformal_matrix_fn(base: np.ndarray, factor):
    base = np.asarray(base, dtype=float)

    def fn(points: np.ndarray) -> np.ndarray:
        f = factor(points[:, 0], points[:, 1])
        return f[:, None, None] * base[None, :, :]

    return fn


_MINKOWSKI_G = np.array([[1.0, 0.0], [0.0, -1.0]])  # dx^2 - dy^2
_EUCLIDEAN_H = np.eye(2)

PRESETS = ("minkowski", "minkowski_punctured", "conformal")


def build_metric_field(spec: SpacetimeConfig, verify: bool = True) -> MetricField:
    """Build a MetricField from a spacetime config (preset + options)."""
    excluded = tuple(spec.excluded)
    if spec.preset == "minkowski":
        fld = MetricField(
            domain=spec.domain,
            g_fn=_constant_matrix_fn(_MINKOWSKI_G),
            h_fn=_constant_matrix_fn(_EUCLIDEAN_H),
            excluded_regions=excluded,
            constant_metric=True,
            name="minkowski",
        )
    elif spec.preset == "minkowski_punctured":
        if not excluded:
            excluded = (ExcludedRegion(shape="disk", center=(0.0, 0.0), radius=1e-3),)
        fld = MetricField(
            domain=spec.domain,
            g_fn=_constant_matrix_fn(_MINKOWSKI_G),
            h_fn=_constant_matrix_fn(_EUCLIDEAN_H),
            excluded_regions=excluded,
            constant_metric=True,
            name="minkowski_punctured",
        )
    elif spec.preset == "conformal":
        g_expr, h_expr = spec.g_factor, spec.h_factor
        g_const = _is_constant_expr(g_expr)
        if g_const is not None:
            g_fn = _constant_matrix_fn(g_const * _MINKOWSKI_G)
        else:
            g_fn = _conformal_matrix_fn(_MINKOWSKI_G, _compile_factor(g_expr))
        h_const = _is_constant_expr(h_expr)
        if h_const is not None:
            h_fn = _constant_matrix_fn(h_const * _EUCLIDEAN_H)
        else:
            h_fn = _conformal_matrix_fn(_EUCLIDEAN_H, _compile_factor(h_expr))
        fld = MetricField(
            domain=spec.domain,
            g_fn=g_fn,
            h_fn=h_fn,
            excluded_regions=excluded,
            constant_metric=g_const is not None,
            name="conformal",
        )
    else:
        raise ConfigError(f"unknown preset {spec.preset!r}; expected one of {PRESETS}")
    if verify:
        fld.verify()
    return fld


def _is_constant_expr(expr: str):
    try:
        return float(expr)
    except (TypeError, ValueError):
        return None


# ---------------------------------------------------------------------------
# Causal lattice
# ---------------------------------------------------------------------------


@dataclass
class CausalLattice:
    """DAG of grid nodes with future-cone chord edges.

    Nodes are the non-excluded grid points, indexed 0..n_nodes-1 in row-major
    (y-major) order so that edge arrays sorted by source node are already in
    a valid topological order (every edge strictly increases y).
    """

    field: MetricField
    xs: np.ndarray  # (nx,)
    ys: np.ndarray  # (ny,)
    spacing: float
    stencil_radius: int
    causal_tol: float
    node_index: np.ndarray  # (ny, nx) int32, -1 where excluded
    coords: np.ndarray  # (n_nodes, 2)
    node_row: np.ndarray  # (n_nodes,) row (y) index of each node
    node_col: np.ndarray  # (n_nodes,) column (x) index
    edges_u: np.ndarray  # (E,) int32 source node
    edges_v: np.ndarray  # (E,) int32 target node
    edge_length: np.ndarray  # (E,) Lorentzian chord length
    edge_h_length: np.ndarray  # (E,) Riemannian chord length
    edge_offsets: np.ndarray  # (E, 2) int chord in grid units

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges_u.shape[0]

    def snap(self, point) -> int:
        """Index of the nearest non-excluded node; -1 if none nearby."""
        p = np.asarray(point, dtype=float)
        i = int(np.clip(round((p[1] - self.ys[0]) / self.spacing), 0, len(self.ys) - 1))
        j = int(np.clip(round((p[0] - self.xs[0]) / self.spacing), 0, len(self.xs) - 1))
        if self.node_index[i, j] >= 0:
            return int(self.node_index[i, j])
        # search a small neighborhood for the nearest valid node
        best, best_d2 = -1, np.inf
        for di in range(-2, 3):
            for dj in range(-2, 3):
                ii, jj = i + di, j + dj
                if 0 <= ii < len(self.ys) and 0 <= jj < len(self.xs):
                    k = self.node_index[ii, jj]
                    if k >= 0:
                        d2 = (self.xs[jj] - p[0]) ** 2 + (self.ys[ii] - p[1]) ** 2
                        if d2 < best_d2:
                            best, best_d2 = int(k), d2
        return best

    def edges_sorted_by_source_row(self):
        """(order, row_starts) so edges can be relaxed slice by slice."""
        order = np.argsort(self.node_row[self.edges_u], kind="stable")
        return order


def _grid_axis(lo: float, hi: float, spacing: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / spacing + 1e-9)) + 1
    return lo + spacing * np.arange(n)


def build_lattice(
    field: MetricField,
    spacing: float,
    stencil_radius: int = 1,
    causal_tol: Optional[float] = None,
) -> CausalLattice:
    """Discretize the chart into a causal lattice.

    Edges go from each node to every node within Chebyshev radius
    ``stencil_radius`` whose chord has strictly positive timelike component
    and midpoint g-norm <= causal_tol; chords crossing an excluded region
    (sampled at stencil_radius + 1 interior points) are dropped.
    """
    if spacing <= 0:
        raise DomainError("spacing must be positive")
    if stencil_radius < 1:
        raise DomainError("stencil_radius must be >= 1")
    if causal_tol is None:
        causal_tol = field.default_causal_tol(spacing)

    d = field.domain
    xs = _grid_axis(d.x_min, d.x_max, spacing)
    ys = _grid_axis(d.y_min, d.y_max, spacing)
    nx, ny = len(xs), len(ys)
    gx, gy = np.meshgrid(xs, ys)
    all_pts = np.column_stack([gx.ravel(), gy.ravel()])
    keep = ~field.excluded(all_pts)
    if not np.any(keep):
        raise DomainError("no non-excluded lattice nodes in domain")

    node_index = np.full(ny * nx, -1, dtype=np.int32)
    node_index[keep] = np.arange(int(keep.sum()), dtype=np.int32)
    node_index = node_index.reshape(ny, nx)
    coords = all_pts[keep]
    rows, cols = np.divmod(np.flatnonzero(keep.reshape(-1)), nx)

    R = stencil_radius
    has_exclusions = len(field.excluded_regions) > 0
    eu, ev, elen, ehlen, eoff = [], [], [], [], []
    for dyi in range(1, R + 1):
        for dxi in range(-R, R + 1):
            chord = np.array([dxi * spacing, dyi * spacing])
            # quick reject using the worst-case check at one midpoint for
            # constant metrics; variable metrics are tested per edge below
            src_idx = node_index[: ny - dyi, max(0, -dxi) : nx - max(0, dxi)]
            dst_idx = node_index[dyi:, max(0, dxi) : nx - max(0, -dxi)]
            valid = (src_idx >= 0) & (dst_idx >= 0)
            if not np.any(valid):
                continue
            u = src_idx[valid].astype(np.int32)
            v = dst_idx[valid].astype(np.int32)
            mid = coords[u] + 0.5 * chord
            q = field.g_quadratic(mid, np.broadcast_to(chord, (len(u), 2)))
            causal = q <= causal_tol
            if not np.any(causal):
                continue
            u, v, mid, q = u[causal], v[causal], mid[causal], q[causal]
            if has_exclusions:
                ok = np.ones(len(u), dtype=bool)
                for k in range(1, R + 2):
                    t = k / (R + 2)
                    sample = coords[u] + t * chord
                    ok &= ~field.excluded(sample)
                u, v, mid, q = u[ok], v[ok], mid[ok], q[ok]
                if len(u) == 0:
                    continue
            length = np.sqrt(np.maximum(0.0, -q))
            hq = field.h_quadratic(mid, np.broadcast_to(chord, (len(u), 2)))
            h_length = np.sqrt(np.maximum(0.0, hq))
            eu.append(u)
            ev.append(v)
            elen.append(length)
            ehlen.append(h_length)
            eoff.append(np.broadcast_to(np.array([dxi, dyi]), (len(u), 2)))

    if eu:
        edges_u = np.concatenate(eu)
        edges_v = np.concatenate(ev)
        edge_length = np.concatenate(elen)
        edge_h_length = np.concatenate(ehlen)
        edge_offsets = np.concatenate(eoff)
    else:
        edges_u = np.zeros(0, dtype=np.int32)
        edges_v = np.zeros(0, dtype=np.int32)
        edge_length = np.zeros(0)
        edge_h_length = np.zeros(0)
        edge_offsets = np.zeros((0, 2), dtype=int)

    return CausalLattice(
        field=field,
        xs=xs,
        ys=ys,
        spacing=spacing,
        stencil_radius=stencil_radius,
        causal_tol=causal_tol,
        node_index=node_index,
        coords=coords,
        node_row=rows.astype(np.int32),
        node_col=cols.astype(np.int32),
        edges_u=edges_u,
        edges_v=edges_v,
        edge_length=edge_length,
        edge_h_length=edge_h_length,
        edge_offsets=edge_offsets,
    )
