"""Causal curves as polylines: lengths and reparametrizations.

Curves are polylines between knots with strictly increasing parameter
values.  Open-ended domains [t0, tN) are flagged with ``open_end``; such a
curve's knots may accumulate at the right endpoint, and its length is the
convergent sum over all segments (the supremum over compact restrictions).

Lorentzian length integrates sqrt(-g(c', c')) per linear segment by
adaptive Gauss-Legendre quadrature; Riemannian length integrates
sqrt(h(c', c')) the same way and may return +inf when refinement diverges
(inverse-square auxiliary metrics near a puncture do this).

Three reparametrization tools ride along:

- h-arc-length: new parameter = cumulative Riemannian length,
- a family of domain-alignment maps [0, a] -> [0, a_i] (identity /
  scaled-arctan / linear depending on which endpoints are infinite) used to
  put a family of curves over one common domain with derivative close to 1
  along a filtered subsequence,
- time-function parametrization of a past-directed curve so that the
  function drops at unit rate: f(c(u)) = f(c(0)) - u.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .config import QuadratureConfig
from .errors import (
    CausalityError,
    DivergenceError,
    DomainError,
    ExcludedPointError,
    MonotonicityError,
)
from .quadrature import integrate_segment
from .spacetime import MetricField, classify_vector

__all__ = [
    "CausalCurve",
    "LengthReport",
    "classify_polyline",
    "lorentzian_length",
    "riemannian_length",
    "h_arclength_reparam",
    "domain_alignment_maps",
    "filter_alignment_subsequence",
    "time_reparam",
    "write_curve_csv",
    "read_curve_csv",
]

CAUSAL_CLASSES = ("causal", "timelike", "null", "alternating", "non_causal")


@dataclass(frozen=True)
class CausalCurve:
    """Polyline curve with a causal-class certificate.

    params: strictly increasing (N,) array; points: (N, 2) chart points;
    orientation: "future" | "past"; open_end marks a domain [t0, tN);
    causal_class in CAUSAL_CLASSES.
    """

    params: np.ndarray
    points: np.ndarray
    orientation: str = "future"
    open_end: bool = False
    causal_class: str = "causal"

    def __post_init__(self):
        params = np.asarray(self.params, dtype=float)
        points = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "points", points)
        if params.ndim != 1 or points.shape != (len(params), 2):
            raise DomainError("params must be (N,), points (N, 2)")
        if len(params) < 2:
            raise DomainError("a curve needs at least two knots")
        if not np.all(np.diff(params) > 0):
            raise DomainError("params must be strictly increasing")
        if self.orientation not in ("future", "past"):
            raise DomainError(f"bad orientation {self.orientation!r}")
        if self.causal_class not in CAUSAL_CLASSES:
            raise DomainError(f"bad causal_class {self.causal_class!r}")

    # -- geometry -----------------------------------------------------------

    @property
    def t0(self) -> float:
        return float(self.params[0])

    @property
    def t_end(self) -> float:
        """Right endpoint of the domain (excluded when open_end)."""
        return float(self.params[-1])

    def evaluate(self, t) -> np.ndarray:
        """Linear interpolation between knots; clamps to the domain."""
        t = np.asarray(t, dtype=float)
        x = np.interp(t, self.params, self.points[:, 0])
        y = np.interp(t, self.params, self.points[:, 1])
        out = np.stack([x, y], axis=-1)
        return out

    def restrict(self, t_lo: float, t_hi: float) -> "CausalCurve":
        """Sub-curve on [t_lo, t_hi]; endpoints interpolated if off-knot."""
        if not (self.t0 <= t_lo < t_hi <= self.t_end):
            raise DomainError("restriction window outside curve domain")
        inside = (self.params > t_lo) & (self.params < t_hi)
        ps = [t_lo] + list(self.params[inside]) + [t_hi]
        pts = [self.evaluate(t_lo)] + list(self.points[inside]) + [self.evaluate(t_hi)]
        return replace(
            self,
            params=np.asarray(ps),
            points=np.asarray(pts),
            open_end=self.open_end and t_hi == self.t_end,
        )

    def chords(self) -> np.ndarray:
        return np.diff(self.points, axis=0)

    def reversed(self) -> "CausalCurve":
        new_params = self.params[-1] - self.params[::-1]
        orient = "past" if self.orientation == "future" else "future"
        return replace(
            self, params=new_params, points=self.points[::-1].copy(), orientation=orient
        )


def classify_polyline(
    field: MetricField,
    params,
    points,
    orientation: str = "future",
    open_end: bool = False,
    tol: Optional[float] = None,
) -> CausalCurve:
    """Build a CausalCurve with its causal class certified from the chords.

    All points must be non-excluded.  The certificate is "null" when every
    chord is null, "timelike" when every chord is strictly timelike, "causal"
    for a mix, "alternating" when chord orientations flip but each chord is
    causal, and "non_causal" otherwise.
    """
    points = np.asarray(points, dtype=float)
    if np.any(field.excluded(points)):
        raise ExcludedPointError("curve has an excluded knot")
    if tol is None:
        tol = field.default_causal_tol()
    chords = np.diff(points, axis=0)
    mids = 0.5 * (points[:-1] + points[1:])
    q = field.g_quadratic(mids, chords)
    t_comp = chords[:, field.time_axis] * field.future_sign
    sign = 1.0 if orientation == "future" else -1.0
    causal = q <= tol
    aligned = sign * t_comp > 0
    if np.all(causal) and np.all(aligned):
        if np.all(q >= -tol):
            cls = "null"
        elif np.all(q < -tol):
            cls = "timelike"
        else:
            cls = "causal"
    elif np.all(causal) and np.all(np.abs(t_comp) > 0):
        cls = "alternating"
    else:
        cls = "non_causal"
    return CausalCurve(
        params=np.asarray(params, dtype=float),
        points=points,
        orientation=orientation,
        open_end=open_end,
        causal_class=cls,
    )


@dataclass(frozen=True)
class LengthReport:
    """Lorentzian length with its per-segment decomposition."""

    value: float
    per_segment: np.ndarray
    quadrature_error_estimate: float


def _segment_lengths(
    field: MetricField,
    curve: CausalCurve,
    quad: QuadratureConfig,
    kind: str,
    causal_check: bool,
) -> tuple[np.ndarray, float, bool]:
    """Per-segment quadrature of the Lorentzian or Riemannian speed."""
    tol = field.default_causal_tol()
    lengths = np.zeros(len(curve.params) - 1)
    err_total = 0.0
    partial = 0.0
    for k in range(len(lengths)):
        p0, p1 = curve.points[k], curve.points[k + 1]
        t0, t1 = curve.params[k], curve.params[k + 1]
        dt = t1 - t0
        direction = (p1 - p0) / dt

        if kind == "lorentzian":

            def speed(ts, p0=p0, t0=t0, direction=direction):
                pts = p0 + (ts - t0)[:, None] * direction
                q = field.g_quadratic(pts, np.broadcast_to(direction, (len(ts), 2)))
                if causal_check and np.any(q > tol * max(1.0, float(np.dot(direction, direction)))):
                    raise CausalityError(
                        f"g(c',c') = {float(np.max(q)):.3e} > tol on segment {k}"
                    )
                return np.sqrt(np.maximum(0.0, -q))

        else:

            def speed(ts, p0=p0, t0=t0, direction=direction):
                pts = p0 + (ts - t0)[:, None] * direction
                return np.sqrt(
                    np.maximum(
                        0.0,
                        field.h_quadratic(pts, np.broadcast_to(direction, (len(ts), 2))),
                    )
                )

        res = integrate_segment(speed, t0, t1, quad)
        if res.diverged:
            return lengths, math.inf, True
        lengths[k] = res.value
        err_total += res.error_estimate
        partial += res.value
        if partial > quad.partial_sum_cap:
            return lengths, math.inf, True
    return lengths, err_total, False


def lorentzian_length(
    field: MetricField, curve: CausalCurve, quad: QuadratureConfig = QuadratureConfig()
) -> LengthReport:
    """Proper time along a causal polyline.

    Raises CausalityError when the curve is not certified causal or when the
    quadrature meets g(c', c') above the causal tolerance.  For open-ended
    curves the value is the segment sum over all knots, which realizes the
    supremum over compact restrictions.
    """
    if curve.causal_class not in ("causal", "timelike", "null"):
        raise CausalityError(f"curve has causal_class {curve.causal_class!r}")
    lengths, err, diverged = _segment_lengths(field, curve, quad, "lorentzian", True)
    if diverged:
        raise DivergenceError("Lorentzian length diverged (should not happen)")
    return LengthReport(
        value=math.fsum(lengths.tolist()),
        per_segment=lengths,
        quadrature_error_estimate=err,
    )


def riemannian_length(
    field: MetricField,
    curve: CausalCurve,
    quad: QuadratureConfig = QuadratureConfig(),
) -> float:
    """Arc length under the auxiliary metric h; +inf when it diverges."""
    pts = np.asarray(curve.points, dtype=float)
    if np.any(field.excluded(pts)):
        raise ExcludedPointError("curve has an excluded knot")
    lengths, _err, diverged = _segment_lengths(field, curve, quad, "riemannian", False)
    if diverged:
        return math.inf
    return math.fsum(lengths.tolist())


def h_arclength_reparam(
    field: MetricField, curve: CausalCurve, quad: QuadratureConfig = QuadratureConfig()
) -> CausalCurve:
    """Reparametrize so the parameter equals cumulative h-length."""
    lengths, _err, diverged = _segment_lengths(field, curve, quad, "riemannian", False)
    if diverged or not np.all(np.isfinite(lengths)):
        raise DivergenceError("a prefix of the curve has infinite h-length")
    new_params = np.concatenate([[0.0], np.cumsum(lengths)])
    if not np.all(np.diff(new_params) > 0):
        raise DomainError("h-arc-length not strictly increasing (degenerate segment)")
    return replace(curve, params=new_params)


def domain_alignment_maps(a_list: Sequence[float], a: Optional[float] = None):
    """Maps f_i: [0, a] -> [0, a_i] aligning a family of domains.

    a defaults to the max of the tail half of a_list (the finite-sample
    upper-limit estimate).  Each map is: identity when a_i = a = inf;
    x -> (2 a_i / pi) * arctan(pi x / (2 a_i)) when a = inf and a_i finite;
    x -> (a_i / a) x when both are finite.  Returns (maps, a); each map has
    .__call__, .derivative and .a_i.
    """
    a_arr = [float(v) for v in a_list]
    if any(v <= 0 for v in a_arr):
        raise DomainError("domain endpoints must be positive")
    if a is None:
        tail = a_arr[len(a_arr) // 2 :]
        a = max(tail)
    if a == 0:
        raise DomainError("common endpoint a must be positive")

    maps = []
    for a_i in a_arr:
        maps.append(_AlignmentMap(a_i=a_i, a=a))
    return maps, a


@dataclass(frozen=True)
class _AlignmentMap:
    a_i: float
    a: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if math.isinf(self.a_i) and math.isinf(self.a):
            out = x
        elif math.isinf(self.a):
            c = 2.0 * self.a_i / math.pi
            out = c * np.arctan(x / c)
        else:
            out = (self.a_i / self.a) * x
        return float(out) if np.ndim(x) == 0 else out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if math.isinf(self.a_i) and math.isinf(self.a):
            out = np.ones_like(x)
        elif math.isinf(self.a):
            c = 2.0 * self.a_i / math.pi
            out = 1.0 / (1.0 + (x / c) ** 2)
        else:
            out = np.full_like(x, self.a_i / self.a)
        return float(out) if np.ndim(x) == 0 else out

    def sup_derivative(self) -> float:
        if math.isinf(self.a):
            return 1.0
        return self.a_i / self.a


def filter_alignment_subsequence(maps, eps: float) -> list[int]:
    """Indices whose alignment maps have sup derivative <= 1 + eps."""
    return [i for i, m in enumerate(maps) if m.sup_derivative() <= 1.0 + eps]


def time_reparam(f, curve: CausalCurve, interp_tol: float = 1e-9) -> CausalCurve:
    """Parametrize a past-directed causal curve by the drop of f.

    The returned curve satisfies f(c(u)) = f(c(0)) - u at every knot, so its
    domain endpoint is the total drop of f along the curve.  f must be
    strictly decreasing at the knots (checked); f is any callable on chart
    points (typically a ScalarTimeField).
    """
    if curve.orientation != "past":
        raise MonotonicityError("time_reparam expects a past-directed curve")
    fvals = np.asarray(f(curve.points), dtype=float)
    drops = -np.diff(fvals)
    if np.any(~np.isfinite(fvals)):
        raise MonotonicityError("time function not finite along the curve")
    if np.any(drops <= 0):
        raise MonotonicityError("time function not strictly decreasing along curve")
    new_params = np.concatenate([[0.0], np.cumsum(drops)])
    return replace(curve, params=new_params)


# ---------------------------------------------------------------------------
# Curve exchange format: CSV with header t,x,y plus a small sidecar
# ---------------------------------------------------------------------------


def write_curve_csv(path: str, curve: CausalCurve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "y"])
        for t, (x, y) in zip(curve.params, curve.points):
            w.writerow([f"{t:.17g}", f"{x:.17g}", f"{y:.17g}"])
    with open(_sidecar_path(path), "w", newline="") as fh:
        fh.write(f'orientation = "{curve.orientation}"\n')
        fh.write(f"open_end = {str(curve.open_end).lower()}\n")
        fh.write(f'causal_class = "{curve.causal_class}"\n')


def read_curve_csv(path: str) -> CausalCurve:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != ["t", "x", "y"]:
        raise DomainError(f"{path}: expected header t,x,y")
    data = np.array([[float(v) for v in row] for row in rows[1:]])
    meta = {"orientation": "future", "open_end": False, "causal_class": "causal"}
    try:
        with open(_sidecar_path(path)) as fh:
            for line in fh:
                key, _, value = line.partition("=")
                key, value = key.strip(), value.strip().strip('"')
                if key == "open_end":
                    meta[key] = value == "true"
                elif key in meta:
                    meta[key] = value
    except FileNotFoundError:
        pass
    return CausalCurve(params=data[:, 0], points=data[:, 1:3], **meta)


def _sidecar_path(path: str) -> str:
    return path + ".meta"
