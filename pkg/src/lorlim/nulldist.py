"""Null distance of a time function on the lattice.

The zigzag graph carries both orientations of every future edge with weight
|tau(v) - tau(u)|; the null distance between nodes is the shortest path in
that graph, an upper bound on the continuum infimum over alternating causal
curves that telescopes exactly to tau(y) - tau(x) whenever a monotone
future path exists.

Bulk value queries go through scipy's compiled Dijkstra (explicitly stored
zero weights are honored as edges); witness-path queries use an in-package
Dijkstra with deterministic (distance, hop count, node index) tie-breaking
so reported paths are canonical.  The two routes are cross-checked in the
test suite.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra as _scipy_dijkstra

from .curves import CausalCurve, LengthReport, lorentzian_length
from .config import QuadratureConfig
from .errors import DisconnectedError, DomainError
from .spacetime import CausalLattice, MetricField
from .timefields import ScalarTimeField

__all__ = [
    "ZigzagGraph",
    "NullDistanceResult",
    "null_distance",
    "null_distances_bulk",
    "MetricAxiomReport",
    "metric_axiom_suite",
    "TopologyProbeReport",
    "topology_compatibility_probe",
    "LengthBoundReport",
    "length_vs_nulldistance_bound",
]


@dataclass
class ZigzagGraph:
    """Undirected weighted graph over lattice nodes for zigzag optimization."""

    lat: CausalLattice
    tau: np.ndarray  # (n_nodes,) time-function values
    csr: sp.csr_matrix
    adj_indptr: np.ndarray
    adj_indices: np.ndarray
    adj_weights: np.ndarray
    adj_is_future: np.ndarray  # True where the half-edge points to the future

    @staticmethod
    def build(lat: CausalLattice, field_or_values, edge_weights=None) -> "ZigzagGraph":
        """Zigzag graph with weights |tau(v) - tau(u)| per undirected edge.

        edge_weights overrides the weights (used for the auxiliary-metric
        distance graph, which shares the topology).
        """
        if isinstance(field_or_values, ScalarTimeField):
            tau = field_or_values.node_values(lat)
        else:
            tau = np.asarray(field_or_values, dtype=float)
        if tau.shape != (lat.n_nodes,):
            raise DomainError("tau must give one value per lattice node")
        if edge_weights is None:
            w = np.abs(tau[lat.edges_v] - tau[lat.edges_u])
        else:
            w = np.asarray(edge_weights, dtype=float)
        rows = np.concatenate([lat.edges_u, lat.edges_v])
        cols = np.concatenate([lat.edges_v, lat.edges_u])
        data = np.concatenate([w, w])
        fut = np.concatenate(
            [np.ones(len(w), dtype=bool), np.zeros(len(w), dtype=bool)]
        )
        n = lat.n_nodes
        # keep explicit zeros: scipy csgraph treats stored zeros as edges
        coo = sp.coo_matrix((data, (rows, cols)), shape=(n, n))
        csr = coo.tocsr()
        # adjacency with future/past tags for the witness solver
        order = np.lexsort((cols, rows))
        s_rows = rows[order]
        s_cols = cols[order]
        s_w = data[order]
        s_fut = fut[order]
        indptr = np.searchsorted(s_rows, np.arange(n + 1))
        return ZigzagGraph(
            lat=lat,
            tau=tau,
            csr=csr,
            adj_indptr=indptr,
            adj_indices=s_cols.astype(np.int64),
            adj_weights=s_w,
            adj_is_future=s_fut,
        )

    @property
    def resolution(self) -> float:
        return self.lat.spacing

    def node_of(self, spec) -> int:
        arr = np.asarray(spec)
        if arr.ndim == 0:
            return int(arr)
        if arr.shape == (2,):
            node = self.lat.snap(arr.astype(float))
            if node < 0:
                raise DomainError(f"no lattice node near {tuple(arr)}")
            return node
        raise DomainError("node spec must be an index or a chart point")


@dataclass(frozen=True)
class NullDistanceResult:
    value: float
    witness_nodes: np.ndarray
    witness_points: np.ndarray
    piece_orientations: tuple  # "future"/"past" per edge of the witness


def null_distance(zz: ZigzagGraph, x, y) -> NullDistanceResult:
    """Shortest zigzag value between two nodes with a canonical witness.

    Tie-breaking among equal-value paths is lexicographic on
    (value, hop count, node index sequence), so the witness is deterministic.
    Raises DisconnectedError when y is unreachable.
    """
    src = zz.node_of(x)
    dst = zz.node_of(y)
    n = zz.lat.n_nodes
    dist = np.full(n, math.inf)
    hops = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    pred = np.full(n, -1, dtype=np.int64)
    dist[src] = 0.0
    hops[src] = 0
    heap = [(0.0, 0, src)]
    visited = np.zeros(n, dtype=bool)
    while heap:
        d, h, u = heapq.heappop(heap)
        if visited[u]:
            continue
        visited[u] = True
        if u == dst:
            break
        lo, hi = zz.adj_indptr[u], zz.adj_indptr[u + 1]
        for k in range(lo, hi):
            v = zz.adj_indices[k]
            if visited[v]:
                continue
            nd = d + zz.adj_weights[k]
            nh = h + 1
            if nd < dist[v] or (nd == dist[v] and (nh, u) < (hops[v], pred[v])):
                dist[v] = nd
                hops[v] = nh
                pred[v] = u
                heapq.heappush(heap, (nd, nh, v))
    if not visited[dst]:
        raise DisconnectedError(f"node {dst} unreachable from node {src}")
    path = [dst]
    while path[-1] != src:
        path.append(int(pred[path[-1]]))
    path.reverse()
    nodes = np.asarray(path, dtype=np.int64)
    pts = zz.lat.coords[nodes]
    orients = []
    for a, b in zip(nodes[:-1], nodes[1:]):
        dy = zz.lat.coords[b, 1] - zz.lat.coords[a, 1]
        orients.append("future" if dy > 0 else "past")
    return NullDistanceResult(
        value=float(dist[dst]),
        witness_nodes=nodes,
        witness_points=pts,
        piece_orientations=tuple(orients),
    )


def null_distances_bulk(
    zz: ZigzagGraph, sources: Sequence[int], limit: float = math.inf
) -> np.ndarray:
    """Distance matrix (len(sources), n_nodes) via compiled Dijkstra."""
    idx = np.asarray(list(sources), dtype=np.int64)
    if len(idx) == 0:
        return np.zeros((0, zz.lat.n_nodes))
    out = _scipy_dijkstra(zz.csr, directed=True, indices=idx, limit=limit)
    return np.atleast_2d(out)


# ---------------------------------------------------------------------------
# Property suites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricAxiomReport:
    n_triples: int
    symmetry_violations: list
    triangle_violations: list
    definiteness_violations: list

    @property
    def total_violations(self) -> int:
        return (
            len(self.symmetry_violations)
            + len(self.triangle_violations)
            + len(self.definiteness_violations)
        )


def metric_axiom_suite(
    zz: ZigzagGraph,
    samples: Sequence[tuple],
    tol: float = 1e-12,
    check_symmetry_explicitly: bool = True,
) -> MetricAxiomReport:
    """Check symmetry, triangle inequality, and definiteness on node triples.

    samples is a sequence of (x, y, z) node indices.  Symmetry holds by
    construction (the graph is undirected); it is still verified numerically
    on the sampled pairs when check_symmetry_explicitly is set.
    """
    triples = [tuple(int(zz.node_of(p)) for p in t) for t in samples]
    needed = sorted({n for t in triples for n in t})
    pos = {n: i for i, n in enumerate(needed)}
    dist = null_distances_bulk(zz, needed)

    sym, tri, dfn = [], [], []
    for (x, y, z) in triples:
        dxy = dist[pos[x], y]
        dyz = dist[pos[y], z]
        dxz = dist[pos[x], z]
        if check_symmetry_explicitly:
            dyx = dist[pos[y], x]
            if not math.isclose(dxy, dyx, rel_tol=0.0, abs_tol=tol):
                sym.append((x, y, dxy, dyx))
        if dxz > dxy + dyz + tol:
            tri.append((x, y, z, dxz, dxy + dyz))
        for a, b, d in ((x, y, dxy), (y, z, dyz), (x, z, dxz)):
            if a != b and not d > 0.0:
                dfn.append((a, b, d))
    return MetricAxiomReport(
        n_triples=len(triples),
        symmetry_violations=sym,
        triangle_violations=tri,
        definiteness_violations=dfn,
    )


@dataclass(frozen=True)
class TopologyProbeReport:
    center: tuple
    radius: float
    n_ball: int
    inner_euclidean: float  # largest Euclidean ball inside the null ball
    outer_euclidean: float  # smallest Euclidean ball containing it
    inner_ratio: float
    outer_ratio: float
    touches_boundary: bool


def topology_compatibility_probe(
    zz: ZigzagGraph, centers: Sequence, radii: Sequence[float]
) -> list[TopologyProbeReport]:
    """Compare null-distance balls with chart Euclidean balls.

    For each center and radius r, reports the largest Euclidean radius fully
    inside the null ball and the smallest Euclidean radius containing it;
    nested inclusion with finite ratios is the manifold-topology signature.
    """
    reports = []
    lat = zz.lat
    for c in centers:
        node = zz.node_of(np.asarray(c, dtype=float))
        d = null_distances_bulk(zz, [node])[0]
        cpt = lat.coords[node]
        euclid = np.linalg.norm(lat.coords - cpt, axis=1)
        for r in radii:
            ball = d <= r + 1e-15
            n_ball = int(ball.sum())
            outer = float(euclid[ball].max()) if n_ball else 0.0
            outside = ~ball
            inner = float(euclid[outside].min()) if outside.any() else math.inf
            x_lo, x_hi = lat.xs[0], lat.xs[-1]
            y_lo, y_hi = lat.ys[0], lat.ys[-1]
            pts = lat.coords[ball]
            touches = bool(
                n_ball
                and (
                    np.any(pts[:, 0] <= x_lo + 1e-12)
                    or np.any(pts[:, 0] >= x_hi - 1e-12)
                    or np.any(pts[:, 1] <= y_lo + 1e-12)
                    or np.any(pts[:, 1] >= y_hi - 1e-12)
                )
            )
            reports.append(
                TopologyProbeReport(
                    center=tuple(cpt),
                    radius=float(r),
                    n_ball=n_ball,
                    inner_euclidean=inner,
                    outer_euclidean=outer,
                    inner_ratio=inner / r if r > 0 else math.inf,
                    outer_ratio=outer / r if r > 0 else 0.0,
                    touches_boundary=touches,
                )
            )
    return reports


@dataclass(frozen=True)
class LengthBoundReport:
    n_pairs: int
    violations: list
    checked_distance_pairs: int
    distance_mismatches: list

    @property
    def passed(self) -> bool:
        return not self.violations and not self.distance_mismatches


def length_vs_nulldistance_bound(
    f: ScalarTimeField,
    field: MetricField,
    b: float,
    curves: Sequence[CausalCurve],
    zz: Optional[ZigzagGraph] = None,
    quad: QuadratureConfig = QuadratureConfig(),
    slack: Optional[float] = None,
    distance_sample_pairs: int = 4,
) -> LengthBoundReport:
    """Verify |f-increment| >= b * Lorentzian length on knot pairs.

    For each curve, every knot pair (via cumulative segment sums) must obey
    the bound within slack (default 10x the quadrature tolerance).  When a
    zigzag graph is supplied, a few knot pairs per curve are additionally
    checked for null_distance = |f-increment| within lattice tolerance.
    """
    if slack is None:
        slack = 10.0 * quad.rel_tol
    violations = []
    mismatches = []
    n_pairs = 0
    checked = 0
    for ci, c in enumerate(curves):
        rep: LengthReport = lorentzian_length(field, c, quad)
        cum = np.concatenate([[0.0], np.cumsum(rep.per_segment)])
        fv = np.asarray(f(c.points), dtype=float)
        n = len(cum)
        for i in range(n):
            for j in range(i + 1, n):
                n_pairs += 1
                lhs = abs(fv[j] - fv[i])
                rhs = b * (cum[j] - cum[i])
                if lhs < rhs - slack * (1.0 + abs(rhs)):
                    violations.append((ci, i, j, lhs, rhs))
        if zz is not None and n >= 2:
            step = max(1, (n - 1) // distance_sample_pairs)
            for i in range(0, n - 1, step):
                j = min(i + step, n - 1)
                d = null_distance(zz, c.points[i], c.points[j]).value
                checked += 1
                lat_tol = 2.5 * zz.resolution
                if abs(d - abs(fv[j] - fv[i])) > lat_tol:
                    mismatches.append((ci, i, j, d, abs(fv[j] - fv[i])))
    return LengthBoundReport(
        n_pairs=n_pairs,
        violations=violations,
        checked_distance_pairs=checked,
        distance_mismatches=mismatches,
    )
