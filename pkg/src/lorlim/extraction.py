"""Limit-curve extraction for incomplete lattice distances.

Given a family of uniformly-Lipschitz-parametrized causal curves whose
start points converge, the extractor produces the maximal limit curve from
the prescribed start point, together with the selected subsequence, the
limit domain endpoint a, per-window uniform-convergence records, and the
length comparison L(limit) vs the upper limit of member lengths.

The construction is a finite, deterministic surrogate for the classical
compactness argument:

- stage j works on the parameter window [0, a_target*(1 - 2^-j)] with a knot
  grid of spacing window/2^(j+3) (floored at half the oracle resolution);
- stage 1 pigeonholes the members into greedy distance cells of radius
  max(eps0/2, 2*resolution) measured as the sup over knots of the oracle
  distance to the cell center, and keeps the largest cell (members of one
  cell are pairwise within twice the radius);
- limit knots are per-knot extrapolated pointwise limits (see
  lorlim.extrapolate); knots whose extrapolation uncertainty exceeds a
  slope-safe fraction of the knot spacing are dropped, and the start knot is
  pinned to the prescribed start point;
- a knot whose limit lands in an excluded region, or a chord that dips into
  one, truncates the domain: a freezes at that parameter and later stages
  refine only below it.  Without a truncation the domain endpoint is the
  upper-limit estimate of the member endpoints, so a <= limsup a_i by
  construction.

The length-control verdict then checks the three hypotheses under which
upper semi-continuity of the Lorentzian length is guaranteed -- bounded
lengths, the segment bound L <= (1/b)|dt|, and domain-endpoint convergence
a = limsup a_i -- and evaluates L(limit) >= limsup L(member) - tol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import numpy as np

from .config import ExtractionConfig, QuadratureConfig
from .curves import CausalCurve, classify_polyline, lorentzian_length, time_reparam
from .errors import (
    ExtractionFailure,
    RegularityError,
    StartPointError,
)
from .extrapolate import estimate_limit, limsup_estimate
from .nulldist import ZigzagGraph, null_distances_bulk
from .spacetime import CausalLattice, MetricField
from .timefields import ScalarTimeField, cosmological_time, gradient_report

__all__ = [
    "CurveSequence",
    "ExtractionReport",
    "LengthControlVerdict",
    "NullDistanceOracle",
    "HLatticeOracle",
    "extract_limit_curve",
    "length_control_check",
    "cosmological_pipeline",
]


# ---------------------------------------------------------------------------
# Distance oracles
# ---------------------------------------------------------------------------


class NullDistanceOracle:
    """Null distance of a time function, evaluated on the zigzag lattice."""

    def __init__(self, zz: ZigzagGraph):
        self.zz = zz
        self._cache_node: Optional[int] = None
        self._cache_row: Optional[np.ndarray] = None

    @property
    def resolution(self) -> float:
        return self.zz.resolution

    def _row(self, point) -> np.ndarray:
        node = self.zz.node_of(np.asarray(point, dtype=float))
        if node != self._cache_node:
            self._cache_row = null_distances_bulk(self.zz, [node])[0]
            self._cache_node = node
        return self._cache_row

    def distance(self, p, q) -> float:
        row = self._row(p)
        return float(row[self.zz.node_of(np.asarray(q, dtype=float))])

    def distances_to_many(self, p, points) -> np.ndarray:
        row = self._row(p)
        nodes = [self.zz.node_of(np.asarray(q, dtype=float)) for q in points]
        return row[np.asarray(nodes, dtype=int)]


class HLatticeOracle(NullDistanceOracle):
    """Shortest-path distance of the auxiliary Riemannian metric h."""

    def __init__(self, lat: CausalLattice):
        zz = ZigzagGraph.build(
            lat, np.zeros(lat.n_nodes), edge_weights=lat.edge_h_length
        )
        super().__init__(zz)


# ---------------------------------------------------------------------------
# Curve sequences
# ---------------------------------------------------------------------------


@dataclass
class CurveSequence:
    """Curves over domains [0, a_i) sharing a parametrization convention.

    parametrization is "time_function" (parameter = drop of f along the
    curve; f required) or "h_arclength".  The Lipschitz certificate is the
    parametrization-side identity that makes members 1-Lipschitz for the
    matching distance: for a time function, |f-increment| equals the
    parameter gap at knots; for h-arc-length, each segment's h-length equals
    its parameter gap.
    """

    curves: list
    field: MetricField
    parametrization: str = "time_function"
    f: Optional[ScalarTimeField] = None
    certificate_slack: float = 1e-6

    def __post_init__(self):
        if self.parametrization not in ("time_function", "h_arclength"):
            raise ValueError(f"bad parametrization {self.parametrization!r}")
        if self.parametrization == "time_function" and self.f is None:
            raise ValueError("time_function parametrization requires f")

    @property
    def a_values(self) -> np.ndarray:
        return np.asarray([c.t_end - c.t0 for c in self.curves])

    def verify_certificate(self) -> tuple[bool, float]:
        """Check the 1-Lipschitz certificate at knot pairs; returns
        (ok, worst_violation)."""
        worst = 0.0
        if self.parametrization == "time_function":
            for c in self.curves:
                fv = np.asarray(self.f(c.points), dtype=float)
                gaps = np.abs(np.diff(fv)) - np.diff(c.params)
                ends = abs(abs(fv[-1] - fv[0]) - (c.params[-1] - c.params[0]))
                worst = max(worst, float(np.max(np.abs(gaps))), ends)
        else:
            from .curves import riemannian_length

            for c in self.curves:
                for k in range(len(c.params) - 1):
                    seg = c.restrict(c.params[k], c.params[k + 1])
                    hl = riemannian_length(self.field, seg)
                    worst = max(worst, abs(hl - (c.params[k + 1] - c.params[k])))
        return worst <= self.certificate_slack, worst


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class CompactumRecord:
    """Uniform-convergence record for one stage window [0, delta]."""

    delta: float
    n_knots: int
    eps: float
    tol: float
    member_sup: np.ndarray  # sup over knots of d(member, limit), per member
    n_tail_within_tol: int  # index in the subsequence from which sup <= tol
    nonincreasing_tail: bool


@dataclass
class ExtractionReport:
    subsequence: list  # original indices of the selected members
    limit_curve: CausalCurve
    a: float
    a_vs_limsup: tuple  # (a, limsup over selected tail of a_i)
    per_compactum: list
    length_comparison: tuple  # (L(limit), limsup over selected tail of L_i)
    member_lengths: np.ndarray
    member_cum_lengths: list  # per member: knot params + cumulative lengths
    truncated_by_exclusion: bool
    diagnostics: dict = dc_field(default_factory=dict)


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------


def _greedy_net(sup_dist_to_center, members: list, eps: float) -> list[list]:
    """Greedy pigeonhole: first unassigned member becomes a center; members
    within eps of it (sup over knots) join.  Returns cells in center order."""
    cells = []
    unassigned = list(members)
    while unassigned:
        center = unassigned[0]
        d = sup_dist_to_center(center, unassigned)
        cell = [m for m, dm in zip(unassigned, d) if dm <= eps]
        if center not in cell:
            cell = [center] + cell
        cells.append(cell)
        unassigned = [m for m in unassigned if m not in cell]
    return cells


def extract_limit_curve(
    seq: CurveSequence,
    oracle,
    x,
    cfg: ExtractionConfig = ExtractionConfig(),
    quad: QuadratureConfig = QuadratureConfig(),
) -> ExtractionReport:
    """Extract the maximal limit curve of a curve sequence from start point x.

    oracle provides .distance / .distances_to_many / .resolution (either the
    null distance of a time function or the lattice h-distance).  Raises
    StartPointError when the member start points do not settle at x, and
    ExtractionFailure when no pigeonhole cell reaches cfg.min_members.
    """
    curves = list(seq.curves)
    n = len(curves)
    if n < cfg.min_members:
        raise ExtractionFailure(f"need at least {cfg.min_members} curves, got {n}")
    x = np.asarray(x, dtype=float)
    res = float(oracle.resolution)
    start_tol = cfg.start_tol if cfg.start_tol is not None else cfg.eps0 + 2.0 * res

    starts = np.asarray([c.points[0] for c in curves])
    d_start = oracle.distances_to_many(x, starts)
    tail = d_start[n // 2 :]
    if float(tail.max()) > start_tol:
        raise StartPointError(
            f"start points do not converge to {tuple(x)}: tail max "
            f"{float(tail.max()):.3g} > {start_tol:.3g}"
        )

    ok, worst = seq.verify_certificate()
    if not ok:
        raise ExtractionFailure(
            f"Lipschitz certificate fails by {worst:.3g}",
            diagnostics={"certificate_violation": worst},
        )

    a_all = seq.a_values
    a_target = float(limsup_estimate(a_all))
    a_cap = math.inf
    truncated = False
    spacing_floor = cfg.spacing_floor_scale * res

    selected: list = list(range(n))
    per_compactum = []
    limit_params: Optional[np.ndarray] = None
    limit_points: Optional[np.ndarray] = None
    diagnostics: dict = {"stages": []}

    def eligible(member: int, delta: float) -> bool:
        c = curves[member]
        span = c.t_end - c.t0
        return span > delta if c.open_end else span >= delta - 1e-12

    for j in range(1, cfg.stages + 1):
        window_target = min(a_target, a_cap)
        delta = window_target * (1.0 - 2.0 ** (-j))
        if delta <= 0:
            break
        cand = [m for m in selected if eligible(m, delta)]
        if len(cand) < cfg.min_members:
            diagnostics["stages"].append(
                {"j": j, "delta": delta, "status": "exhausted", "n_candidates": len(cand)}
            )
            break
        eps = max(cfg.eps0 * 2.0 ** (-j), cfg.eps_floor_scale * res)
        spacing = max(delta / 2.0 ** (j + 3), spacing_floor)
        n_knots = max(2, int(round(delta / spacing)) + 1)
        knots = np.linspace(0.0, delta, n_knots)

        member_pts = {
            m: curves[m].evaluate(curves[m].t0 + knots) for m in cand
        }

        if j == 1:

            def sup_to_center(center, members):
                sups = np.zeros(len(members))
                for ki in range(n_knots):
                    p = member_pts[center][ki]
                    targets = [member_pts[m][ki] for m in members]
                    d = oracle.distances_to_many(p, targets)
                    sups = np.maximum(sups, d)
                return sups

            cells = _greedy_net(sup_to_center, cand, eps)
            best = max(
                range(len(cells)), key=lambda i: (len(cells[i]), i)
            )  # ties -> latest cell (deeper tail)
            selected = cells[best]
            if len(selected) < cfg.min_members:
                raise ExtractionFailure(
                    "no pigeonhole cell reaches the minimum membership",
                    diagnostics={
                        "stage": j,
                        "eps": eps,
                        "cell_sizes": [len(c) for c in cells],
                    },
                )
            cand = selected

        # pointwise limit per knot, with uncertainty-based dropping
        labels = np.asarray(cand, dtype=float)
        drop_tol = 0.05 * spacing
        est_pts = np.zeros((n_knots, 2))
        keep = np.ones(n_knots, dtype=bool)
        unc = np.zeros(n_knots)
        for ki in range(n_knots):
            vals = np.asarray([member_pts[m][ki] for m in cand])
            ex = estimate_limit(vals[:, 0], labels)
            ey = estimate_limit(vals[:, 1], labels)
            est_pts[ki] = (ex.value, ey.value)
            unc[ki] = max(ex.uncertainty, ey.uncertainty)
            if unc[ki] > drop_tol:
                keep[ki] = False
        keep[0] = True
        est_pts[0] = x  # the limit curve starts at the prescribed point

        kept_idx = np.flatnonzero(keep)
        kept_knots = knots[kept_idx]
        kept_pts = est_pts[kept_idx]

        # excluded-region scan over kept knots and their chords
        t_bad = None
        fld = seq.field
        for kk in range(len(kept_idx)):
            if fld.excluded(kept_pts[kk]):
                t_bad = kept_knots[kk]
                break
            if kk > 0:
                a_pt, b_pt = kept_pts[kk - 1], kept_pts[kk]
                ts = np.linspace(0.0, 1.0, cfg.chord_scan_samples + 2)[1:-1]
                samples = a_pt[None, :] + ts[:, None] * (b_pt - a_pt)[None, :]
                hit = fld.excluded(samples)
                if np.any(hit):
                    frac = ts[np.argmax(hit)]
                    t_bad = kept_knots[kk - 1] + frac * (
                        kept_knots[kk] - kept_knots[kk - 1]
                    )
                    break
        if t_bad is not None:
            a_cap = min(a_cap, float(t_bad))
            truncated = True
            inside = kept_knots < a_cap - 1e-15
            kept_knots = kept_knots[inside]
            kept_pts = kept_pts[inside]
            kept_idx = kept_idx[inside]

        # uniform-convergence record against the limit knots
        sups = np.zeros(len(cand))
        for kk in range(len(kept_knots)):
            d = oracle.distances_to_many(
                kept_pts[kk], [member_pts[m][kept_idx[kk]] for m in cand]
            )
            sups = np.maximum(sups, d)
        conv_tol = eps + 2.0 * res
        within = sups <= conv_tol
        n_tail = len(cand)
        for i in range(len(cand) - 1, -1, -1):
            if not within[i]:
                break
            n_tail = i
        tail_sups = sups[len(sups) // 2 :]
        noninc = bool(np.all(np.diff(tail_sups) <= res + 1e-12))
        per_compactum.append(
            CompactumRecord(
                delta=float(kept_knots[-1]) if len(kept_knots) else 0.0,
                n_knots=len(kept_knots),
                eps=eps,
                tol=conv_tol,
                member_sup=sups,
                n_tail_within_tol=n_tail,
                nonincreasing_tail=noninc,
            )
        )
        diagnostics["stages"].append(
            {
                "j": j,
                "delta": delta,
                "eps": eps,
                "spacing": spacing,
                "n_candidates": len(cand),
                "n_kept_knots": int(len(kept_knots)),
                "n_dropped_knots": int(n_knots - keep.sum()),
                "truncated_at": None if t_bad is None else float(t_bad),
                "status": "ok",
            }
        )
        if len(kept_knots) >= 2:
            limit_params = kept_knots
            limit_points = kept_pts
        a_vals_sel = np.asarray([curves[m].t_end - curves[m].t0 for m in selected])
        a_target = float(limsup_estimate(a_vals_sel))

    if limit_params is None or len(limit_params) < 2:
        raise ExtractionFailure(
            "no stage produced a usable limit polyline", diagnostics=diagnostics
        )

    a = float(a_cap if truncated else min(a_target, a_cap))
    limit_curve = classify_polyline(
        seq.field,
        limit_params,
        limit_points,
        orientation=curves[selected[0]].orientation,
        open_end=True,
    )

    member_lengths = []
    member_cums = []
    for m in selected:
        rep = lorentzian_length(seq.field, curves[m], quad)
        member_lengths.append(rep.value)
        cum = np.concatenate([[0.0], np.cumsum(rep.per_segment)])
        member_cums.append((curves[m].params - curves[m].t0, cum))
    member_lengths = np.asarray(member_lengths)
    limsup_len = float(limsup_estimate(member_lengths))
    limsup_a = float(limsup_estimate([curves[m].t_end - curves[m].t0 for m in selected]))

    if limit_curve.causal_class in ("causal", "timelike", "null"):
        limit_len = lorentzian_length(seq.field, limit_curve, quad).value
    else:
        limit_len = math.nan
        diagnostics["limit_curve_not_causal"] = limit_curve.causal_class

    return ExtractionReport(
        subsequence=list(selected),
        limit_curve=limit_curve,
        a=a,
        a_vs_limsup=(a, limsup_a),
        per_compactum=per_compactum,
        length_comparison=(limit_len, limsup_len),
        member_lengths=member_lengths,
        member_cum_lengths=member_cums,
        truncated_by_exclusion=truncated,
        diagnostics=diagnostics,
    )


# ---------------------------------------------------------------------------
# Length control
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LengthControlVerdict:
    holds: bool
    violated_hypotheses: tuple
    semi_continuity_ok: bool
    limit_length: float
    limsup_length: float
    a: float
    limsup_a: float
    details: dict

    @property
    def label(self) -> str:
        if self.holds:
            return "semi_continuity_holds"
        return f"fails_with_hypothesis_violation({', '.join(self.violated_hypotheses)})"


def length_control_check(
    report: ExtractionReport,
    field: MetricField,
    b: float,
    length_tol: float = 0.02,
    segment_slack: float = 1e-7,
    domain_tol: Optional[float] = None,
) -> LengthControlVerdict:
    """Verify the upper-semi-continuity hypotheses and evaluate the verdict.

    Hypotheses: (i) member lengths finite and bounded; (ii) every member
    obeys the segment bound L(sub) <= (1/b)|dt| + slack at knot pairs;
    (iii) a = limsup a_i within domain_tol.  The verdict holds when all
    hypotheses pass and L(limit) >= limsup L(member) - length_tol*(1+limsup).
    """
    if b <= 0:
        raise RegularityError("length control needs a positive gradient bound b")
    violated = []
    details: dict = {}

    finite = np.all(np.isfinite(report.member_lengths))
    if not finite:
        violated.append("lengths_bounded")
    details["max_member_length"] = float(np.max(report.member_lengths))

    worst_excess = 0.0
    inv_b = 1.0 / b
    for params, cum in report.member_cum_lengths:
        # max over knot pairs of L(sub) - (1/b) dt  ==  max_j phi_j - min_{i<=j} phi_i
        phi = cum - inv_b * params
        running_min = np.minimum.accumulate(phi)
        worst_excess = max(worst_excess, float(np.max(phi - running_min)))
    details["worst_segment_excess"] = worst_excess
    if worst_excess > segment_slack * (1.0 + details["max_member_length"]):
        violated.append("segment_bound")

    a, limsup_a = report.a_vs_limsup
    if domain_tol is None:
        domain_tol = 0.01 * (1.0 + abs(limsup_a))
    details["domain_gap"] = abs(a - limsup_a)
    if abs(a - limsup_a) > domain_tol:
        violated.append("domain_endpoint_convergence")

    limit_len, limsup_len = report.length_comparison
    semi_ok = bool(
        np.isfinite(limit_len)
        and limit_len >= limsup_len - length_tol * (1.0 + abs(limsup_len))
    )
    holds = semi_ok and not violated
    return LengthControlVerdict(
        holds=holds,
        violated_hypotheses=tuple(violated),
        semi_continuity_ok=semi_ok,
        limit_length=limit_len,
        limsup_length=limsup_len,
        a=a,
        limsup_a=limsup_a,
        details=details,
    )


# ---------------------------------------------------------------------------
# Cosmological pipeline
# ---------------------------------------------------------------------------


def cosmological_pipeline(
    field: MetricField,
    lat: CausalLattice,
    curves: Sequence[CausalCurve],
    x,
    past_boundary: Optional[dict] = None,
    cfg: ExtractionConfig = ExtractionConfig(),
    gradient_region: Optional[tuple] = None,
    regularity_tol: Optional[float] = None,
) -> tuple[ExtractionReport, LengthControlVerdict]:
    """Compose cosmological time, time-reparametrization, extraction under
    its null distance, and the length-control check.

    curves must be past-directed and past-inextendible: each must terminate
    at the declared past boundary with a small cosmological-time value
    (RegularityError otherwise).
    """
    tau = cosmological_time(lat, field, past_boundary)
    if regularity_tol is None:
        regularity_tol = 3.0 * lat.spacing
    for i, c in enumerate(curves):
        if c.orientation != "past":
            raise RegularityError(f"curve {i} is not past-directed")
        term = float(tau(c.points[-1]))
        if not (term <= regularity_tol):
            raise RegularityError(
                f"curve {i} terminates with cosmological time {term:.3g} > "
                f"{regularity_tol:.3g}: not past-inextendible to the boundary"
            )
    repar = [time_reparam(tau, c) for c in curves]
    seq = CurveSequence(
        curves=repar, field=field, parametrization="time_function", f=tau
    )
    zz = ZigzagGraph.build(lat, tau)
    oracle = NullDistanceOracle(zz)
    report = extract_limit_curve(seq, oracle, x, cfg)

    if gradient_region is None:
        margin = 2.0 * lat.spacing
        gradient_region = (
            float(lat.xs[0] + margin),
            float(lat.xs[-1] - margin),
            float(lat.ys[0] + margin),
            float(lat.ys[-1] - margin),
        )
    grad = gradient_report(tau, field, gradient_region)
    if grad.b is None:
        raise RegularityError("cosmological time has no negative gradient bound")
    verdict = length_control_check(report, field, grad.b)
    return report, verdict
