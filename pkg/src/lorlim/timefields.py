"""Generalized time functions on the causal lattice.

The Lorentzian distance is approximated from below by the longest path over
future-cone edges weighted by Lorentzian chord length, computed by dynamic
programming in time-slice order (the lattice is a DAG).  Two constructions
ride on top of it:

- the surface time of an acausal polyline S: signed longest-path distance to
  the snapped S-nodes (positive above, negative below, zero on S),
- cosmological time on a past-truncated chart: longest path ending at each
  node, with a regularity probe that samples past-directed inextendible
  lattice paths and checks the value dies out at the past boundary.

Gradient reports use central finite differences one cell inside the grid
and evaluate g^{-1}(df, df); the worst (largest) value over a region gives
the certified bound b via b^2 = -worst.  A configurable top-quantile of
values is dropped to keep the almost-everywhere-differentiable picture from
being polluted by the non-smooth locus.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np

from .config import QuadratureConfig
from .curves import CausalCurve, riemannian_length
from .errors import (
    AcausalityError,
    CauchyViolationWarning,
    DomainError,
    MarginError,
    MonotonicityError,
    RegularityError,
)
from .spacetime import CausalLattice, MetricField

__all__ = [
    "ScalarTimeField",
    "GradientReport",
    "lattice_d_L",
    "lattice_d_L_from",
    "lattice_d_L_into",
    "surface_function",
    "cosmological_time",
    "gradient_report",
    "anti_lipschitz_check",
    "level_set_polyline",
]

NEG_INF = -math.inf


@dataclass
class ScalarTimeField:
    """Grid values plus bilinear interpolation.

    values has shape (ny, nx) with NaN at excluded grid points.  kind is one
    of "surface_function", "cosmological", "coordinate", "user".
    """

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    kind: str = "user"
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != (len(self.ys), len(self.xs)):
            raise DomainError("values shape must be (ny, nx)")

    def __call__(self, points) -> np.ndarray:
        """Bilinear interpolation; NaN if any participating corner is NaN."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        dx = self.xs[1] - self.xs[0] if len(self.xs) > 1 else 1.0
        dy = self.ys[1] - self.ys[0] if len(self.ys) > 1 else 1.0
        fx = np.clip((pts[:, 0] - self.xs[0]) / dx, 0, len(self.xs) - 1)
        fy = np.clip((pts[:, 1] - self.ys[0]) / dy, 0, len(self.ys) - 1)
        j0 = np.clip(np.floor(fx).astype(int), 0, max(len(self.xs) - 2, 0))
        i0 = np.clip(np.floor(fy).astype(int), 0, max(len(self.ys) - 2, 0))
        tx = fx - j0
        ty = fy - i0
        v00 = self.values[i0, j0]
        v01 = self.values[i0, j0 + 1]
        v10 = self.values[i0 + 1, j0]
        v11 = self.values[i0 + 1, j0 + 1]
        out = (
            v00 * (1 - tx) * (1 - ty)
            + v01 * tx * (1 - ty)
            + v10 * (1 - tx) * ty
            + v11 * tx * ty
        )
        return float(out[0]) if single else out

    def node_values(self, lat: CausalLattice) -> np.ndarray:
        """Values at the lattice nodes (flat node indexing)."""
        return self.values[lat.node_row, lat.node_col]

    def monotonicity_violations(self, lat: CausalLattice) -> np.ndarray:
        """Edge indices where the field fails to strictly increase."""
        vals = self.node_values(lat)
        bad = vals[lat.edges_v] <= vals[lat.edges_u]
        return np.flatnonzero(bad)

    @staticmethod
    def coordinate_time(lat: CausalLattice, scale: float = 1.0) -> "ScalarTimeField":
        """The field scale * y on the lattice grid."""
        vals = np.full((len(lat.ys), len(lat.xs)), np.nan)
        vals[lat.node_row, lat.node_col] = scale * lat.coords[:, 1]
        return ScalarTimeField(
            xs=lat.xs, ys=lat.ys, values=vals, kind="coordinate", meta={"scale": scale}
        )

    @staticmethod
    def from_function(lat: CausalLattice, fn: Callable, kind: str = "user") -> "ScalarTimeField":
        vals = np.full((len(lat.ys), len(lat.xs)), np.nan)
        vals[lat.node_row, lat.node_col] = np.asarray(fn(lat.coords), dtype=float)
        return ScalarTimeField(xs=lat.xs, ys=lat.ys, values=vals, kind=kind)


# ---------------------------------------------------------------------------
# Longest-path Lorentzian distance
# ---------------------------------------------------------------------------


def _relax_forward(lat: CausalLattice, init: np.ndarray) -> np.ndarray:
    """Longest-path DP over future edges, relaxing row by row.

    init holds per-node starting values (-inf for non-sources).  Every edge
    strictly increases the row index, so relaxing edges grouped by source
    row in ascending order is a valid topological sweep.
    """
    dist = init.astype(float).copy()
    order = np.argsort(lat.node_row[lat.edges_u], kind="stable")
    eu = lat.edges_u[order]
    ev = lat.edges_v[order]
    ew = lat.edge_length[order]
    rows = lat.node_row[eu]
    boundaries = np.flatnonzero(np.diff(rows)) + 1
    start = 0
    for stop in list(boundaries) + [len(eu)]:
        sl = slice(start, stop)
        cand = dist[eu[sl]] + ew[sl]
        np.maximum.at(dist, ev[sl], cand)
        start = stop
    return dist


def _relax_backward(lat: CausalLattice, init: np.ndarray) -> np.ndarray:
    """Longest-path DP into the init set, sweeping rows downward."""
    dist = init.astype(float).copy()
    order = np.argsort(lat.node_row[lat.edges_v], kind="stable")
    eu = lat.edges_u[order]
    ev = lat.edges_v[order]
    ew = lat.edge_length[order]
    rows = lat.node_row[ev]
    boundaries = np.flatnonzero(np.diff(rows)) + 1
    segments = [0] + list(boundaries) + [len(ev)]
    for si in range(len(segments) - 2, -1, -1):
        sl = slice(segments[si], segments[si + 1])
        cand = dist[ev[sl]] + ew[sl]
        np.maximum.at(dist, eu[sl], cand)
    return dist


def lattice_d_L_from(lat: CausalLattice, src_nodes: Sequence[int]) -> np.ndarray:
    """Longest-path value from the source set to every node (-inf unreachable)."""
    init = np.full(lat.n_nodes, NEG_INF)
    init[np.asarray(list(src_nodes), dtype=int)] = 0.0
    return _relax_forward(lat, init)


def lattice_d_L_into(lat: CausalLattice, dst_nodes: Sequence[int]) -> np.ndarray:
    """Longest-path value from every node into the destination set."""
    init = np.full(lat.n_nodes, NEG_INF)
    init[np.asarray(list(dst_nodes), dtype=int)] = 0.0
    return _relax_backward(lat, init)


def lattice_d_L(lat: CausalLattice, src, dst) -> float:
    """Lorentzian distance d_L(src-set, dst) on the lattice.

    src may be a node index, an iterable of node indices, or a chart point /
    iterable of chart points (snapped).  Returns -inf when dst is not in the
    causal future of the source set.
    """
    src_nodes = _as_node_set(lat, src)
    dst_node = _as_node_set(lat, dst)
    if len(dst_node) != 1:
        raise DomainError("dst must be a single node or point")
    dist = lattice_d_L_from(lat, src_nodes)
    return float(dist[dst_node[0]])


def _as_node_set(lat: CausalLattice, spec) -> list[int]:
    arr = np.asarray(spec)
    if arr.ndim == 0:
        return [int(arr)]
    if arr.ndim == 1 and arr.shape == (2,) and np.issubdtype(arr.dtype, np.floating):
        return [lat.snap(arr)]
    if arr.ndim == 1:
        return [int(v) for v in arr]
    if arr.ndim == 2 and arr.shape[1] == 2:
        return [lat.snap(p) for p in arr]
    raise DomainError(f"cannot interpret node spec of shape {arr.shape}")


# ---------------------------------------------------------------------------
# Surface time
# ---------------------------------------------------------------------------


def _point_segment_dist(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(np.dot(ab, ab))
    if denom == 0.0:
        return np.linalg.norm(pts - a, axis=1)
    t = np.clip(((pts - a) @ ab) / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(pts - proj, axis=1)


def surface_function(
    lat: CausalLattice,
    field: MetricField,
    surface: np.ndarray,
    snap_tol: Optional[float] = None,
) -> ScalarTimeField:
    """Signed Lorentzian distance to an acausal polyline surface.

    surface is an (M, 2) polyline whose chords must all be spacelike
    (AcausalityError otherwise) and which should cross the full spatial
    extent of the chart.  Nodes within snap_tol (default spacing/2) of the
    polyline get value 0; nodes above get +d_L(S, x); nodes below get
    -d_L(x, S).  Nodes with no causal relation to S at all get value 0 and
    are reported in a CauchyViolationWarning.
    """
    surface = np.asarray(surface, dtype=float)
    if surface.ndim != 2 or surface.shape[0] < 2 or surface.shape[1] != 2:
        raise DomainError("surface must be an (M, 2) polyline with M >= 2")
    chords = np.diff(surface, axis=0)
    mids = 0.5 * (surface[:-1] + surface[1:])
    q = field.g_quadratic(mids, chords)
    if np.any(q <= field.default_causal_tol(lat.spacing)):
        raise AcausalityError("surface polyline has a causal chord")
    if snap_tol is None:
        snap_tol = lat.spacing / 2.0

    pts = lat.coords
    dmin = np.full(lat.n_nodes, np.inf)
    for k in range(len(surface) - 1):
        dmin = np.minimum(dmin, _point_segment_dist(pts, surface[k], surface[k + 1]))
    on_s = dmin < snap_tol
    if not np.any(on_s):
        raise DomainError("no lattice nodes snap onto the surface")
    s_nodes = np.flatnonzero(on_s)

    # side of the surface: compare y with the polyline height at x
    # (acausal chords have |dy| < |dx| in cone terms, so x is monotone)
    sx, sy = surface[:, 0], surface[:, 1]
    if sx[0] > sx[-1]:
        sx, sy = sx[::-1], sy[::-1]
    height = np.interp(pts[:, 0], sx, sy)
    above = (pts[:, 1] > height) & ~on_s
    below = (pts[:, 1] < height) & ~on_s

    up = lattice_d_L_from(lat, s_nodes)
    down = lattice_d_L_into(lat, s_nodes)

    vals = np.zeros(lat.n_nodes)
    vals[above] = up[above]
    vals[below] = -down[below]

    unreachable = np.flatnonzero(
        (above & ~np.isfinite(up)) | (below & ~np.isfinite(down))
    )
    if len(unreachable):
        vals[unreachable] = 0.0
        warnings.warn(
            CauchyViolationWarning(
                f"{len(unreachable)} nodes have no causal relation to the surface",
                nodes=unreachable.tolist(),
            )
        )

    grid = np.full((len(lat.ys), len(lat.xs)), np.nan)
    grid[lat.node_row, lat.node_col] = vals
    return ScalarTimeField(
        xs=lat.xs,
        ys=lat.ys,
        values=grid,
        kind="surface_function",
        meta={"surface": surface.tolist(), "snap_tol": snap_tol},
    )


# ---------------------------------------------------------------------------
# Cosmological time
# ---------------------------------------------------------------------------


def cosmological_time(
    lat: CausalLattice,
    field: MetricField,
    past_boundary: Optional[dict] = None,
    regularity_samples: int = 32,
    regularity_tol: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
) -> ScalarTimeField:
    """Longest-path value into each node over the whole lattice.

    The chart must be truncated to the future of a past boundary so the
    supremum is finite; past_boundary = {"axis": "y", "value": y0} declares
    it and y0 must coincide with the bottom grid row.  Regularity probe:
    greedy past-directed inextendible lattice paths from sampled nodes must
    terminate with value <= regularity_tol (default 2*spacing).
    """
    if past_boundary is None:
        past_boundary = {"axis": "y", "value": float(lat.ys[0])}
    if past_boundary.get("axis", "y") != "y":
        raise RegularityError("only a y past boundary is supported on this chart")
    y0 = float(past_boundary["value"])
    if abs(float(lat.ys[0]) - y0) > lat.spacing / 2 + 1e-12:
        raise RegularityError(
            f"declared past boundary y={y0} does not match the bottom grid row "
            f"y={float(lat.ys[0])}: domain is not past-truncated as declared"
        )

    init = np.zeros(lat.n_nodes)  # sup over an empty past is 0
    vals = _relax_forward(lat, init)
    if not np.all(np.isfinite(vals)):
        raise RegularityError("cosmological time unbounded on the lattice")

    if regularity_tol is None:
        regularity_tol = 2.0 * lat.spacing
    _probe_regularity(lat, vals, regularity_samples, regularity_tol, rng)

    grid = np.full((len(lat.ys), len(lat.xs)), np.nan)
    grid[lat.node_row, lat.node_col] = vals
    return ScalarTimeField(
        xs=lat.xs,
        ys=lat.ys,
        values=grid,
        kind="cosmological",
        meta={"past_boundary": dict(past_boundary)},
    )


def _probe_regularity(lat, vals, samples, tol, rng):
    """Follow greedy past-directed inextendible lattice paths and check the
    value dies out where they terminate."""
    if samples <= 0:
        return
    rng = rng or np.random.default_rng(0)
    # in-edges grouped by target
    order = np.argsort(lat.edges_v, kind="stable")
    ev_sorted = lat.edges_v[order]
    eu_sorted = lat.edges_u[order]
    starts = np.searchsorted(ev_sorted, np.arange(lat.n_nodes))
    stops = np.searchsorted(ev_sorted, np.arange(lat.n_nodes) + 1)
    top = np.flatnonzero(lat.node_row == lat.node_row.max())
    if len(top) == 0:
        return
    for node in rng.choice(top, size=min(samples, len(top)), replace=False):
        cur = int(node)
        for _ in range(lat.n_nodes):
            lo, hi = starts[cur], stops[cur]
            if lo == hi:
                break  # past-inextendible on the lattice
            preds = eu_sorted[lo:hi]
            cur = int(preds[np.argmax(vals[preds])])
        if vals[cur] > tol:
            raise RegularityError(
                f"past-inextendible lattice path terminates with value "
                f"{vals[cur]:.3g} > {tol:.3g} at node {cur}"
            )


# ---------------------------------------------------------------------------
# Gradient report and anti-Lipschitz verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GradientReport:
    """Finite-difference gradient statistics of a time field over a region."""

    gx: np.ndarray
    gy: np.ndarray
    g_norm: np.ndarray
    h_norm: np.ndarray
    worst_g_norm: float
    b: Optional[float]
    n_dropped: int
    region: tuple


def gradient_report(
    f: ScalarTimeField,
    field: MetricField,
    region: tuple,
    outlier_quantile: float = 0.01,
) -> GradientReport:
    """Central finite differences of f over region = (x_lo, x_hi, y_lo, y_hi).

    The region must sit at least one cell inside the grid (MarginError).
    Reports the differential's g^{-1}- and h^{-1}-norms and the worst
    (largest) g-norm after dropping the top outlier_quantile of values; when
    that worst value is negative, b = sqrt(-worst) is the certified rate.
    """
    x_lo, x_hi, y_lo, y_hi = region
    dx = f.xs[1] - f.xs[0]
    dy = f.ys[1] - f.ys[0]
    j_lo = int(np.ceil((x_lo - f.xs[0]) / dx - 1e-9))
    j_hi = int(np.floor((x_hi - f.xs[0]) / dx + 1e-9))
    i_lo = int(np.ceil((y_lo - f.ys[0]) / dy - 1e-9))
    i_hi = int(np.floor((y_hi - f.ys[0]) / dy + 1e-9))
    if j_lo < 1 or i_lo < 1 or j_hi > len(f.xs) - 2 or i_hi > len(f.ys) - 2:
        raise MarginError("region touches the one-cell grid margin")
    if j_lo > j_hi or i_lo > i_hi:
        raise DomainError("empty gradient region")

    v = f.values
    sl_i = slice(i_lo, i_hi + 1)
    sl_j = slice(j_lo, j_hi + 1)
    gx = (v[sl_i, j_lo + 1 : j_hi + 2] - v[sl_i, j_lo - 1 : j_hi]) / (2 * dx)
    gy = (v[i_lo + 1 : i_hi + 2, sl_j] - v[i_lo - 1 : i_hi, sl_j]) / (2 * dy)

    jj, ii = np.meshgrid(np.arange(j_lo, j_hi + 1), np.arange(i_lo, i_hi + 1))
    pts = np.column_stack([f.xs[jj.ravel()], f.ys[ii.ravel()]])
    df = np.column_stack([gx.ravel(), gy.ravel()])
    g_inv = np.linalg.inv(field.g_fn(pts))
    h_inv = np.linalg.inv(field.h_fn(pts))
    g_norm = np.einsum("nij,ni,nj->n", g_inv, df, df)
    h_norm = np.einsum("nij,ni,nj->n", h_inv, df, df)

    finite = np.isfinite(g_norm)
    vals = g_norm[finite]
    if len(vals) == 0:
        raise DomainError("no finite gradient values in region")
    n_drop = int(math.floor(outlier_quantile * len(vals)))
    kept = np.sort(vals)[: len(vals) - n_drop] if n_drop > 0 else np.sort(vals)
    worst = float(kept[-1])
    b = math.sqrt(-worst) if worst < 0 else None
    shape = gx.shape
    return GradientReport(
        gx=gx,
        gy=gy,
        g_norm=g_norm.reshape(shape),
        h_norm=h_norm.reshape(shape),
        worst_g_norm=worst,
        b=b,
        n_dropped=n_drop,
        region=region,
    )


@dataclass(frozen=True)
class AntiLipschitzReport:
    passed: bool
    worst_ratio: float
    scale: float
    ratios: np.ndarray


def anti_lipschitz_check(
    f: ScalarTimeField,
    field: MetricField,
    sample_curves: Sequence[CausalCurve],
    scale: float = 0.5,
    quad: QuadratureConfig = QuadratureConfig(),
    tol: float = 1e-9,
) -> AntiLipschitzReport:
    """Check f-increment >= scale * h-length along future-causal curves.

    Returns the worst increment/length ratio (inf for zero-length curves);
    the check passes when every ratio is >= 1 within tol.
    """
    ratios = []
    for c in sample_curves:
        if c.orientation != "future":
            raise MonotonicityError("anti-Lipschitz check expects future-directed curves")
        increment = float(f(c.points[-1]) - f(c.points[0]))
        hlen = scale * riemannian_length(field, c, quad)
        ratios.append(math.inf if hlen == 0 else increment / hlen)
    ratios = np.asarray(ratios)
    worst = float(np.min(ratios)) if len(ratios) else math.inf
    return AntiLipschitzReport(
        passed=bool(worst >= 1.0 - tol), worst_ratio=worst, scale=scale, ratios=ratios
    )


def level_set_polyline(f: ScalarTimeField, level: float) -> np.ndarray:
    """Sample the level set {f = level} as one point per grid column.

    Uses linear interpolation in y along each column (fields here are
    monotone in y); columns that do not bracket the level are skipped.
    Returns an (M, 2) polyline ordered by x.
    """
    pts = []
    for j, x in enumerate(f.xs):
        col = f.values[:, j]
        ok = np.isfinite(col)
        if ok.sum() < 2:
            continue
        ys = f.ys[ok]
        vals = col[ok]
        sign = np.sign(vals - level)
        idx = np.flatnonzero(sign[:-1] * sign[1:] <= 0)
        if len(idx) == 0:
            continue
        k = idx[0]
        v0, v1 = vals[k], vals[k + 1]
        if v1 == v0:
            y = ys[k]
        else:
            y = ys[k] + (level - v0) / (v1 - v0) * (ys[k + 1] - ys[k])
        pts.append((x, y))
    return np.asarray(pts)
