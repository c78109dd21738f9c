"""Bundled worked-example curve families and their closed forms.

pinch family
    Past-directed two-segment polylines on the punctured plane with metric
    dx^2 - dy^2: knots (1,1) -> (1/i, 0) -> (0,-1).  Member i has proper
    time sqrt(1 - 1/i^2) + sqrt(1 - (1 - 1/i)^2), which tends to 1, while
    the members pinch toward the removed origin; the maximal limit curve
    from (1,1) is the null diagonal t |-> (1,1) - t(1,1) on [0,1) with zero
    proper time.  The "extended" variant appends the null ray
    (0,-1) - s(1,1), making the members past-inextendible on a truncated
    chart.

inverse-square conformal arc length
    Along the diagonal gamma(t) = (1,1) - t(1,1), the auxiliary metric
    (dx^2 + dy^2)/(x^2 + y^2)^2 has cumulative arc length
    s(t) = t / ((1 - t) sqrt(2)), divergent as t -> 1.

slab families
    Past-directed curves in the truncated strip y in (0, 1]: verticals from
    (1/i, 1) down to the floor, and a mixed variant with a null first leg
    (1/i, 1) -> (2/i, 1 - 1/i) followed by a vertical drop, with proper
    time 1 - 1/i.  Both converge to the vertical geodesic from (0, 1).
"""

from __future__ import annotations

import math

import numpy as np

from .curves import CausalCurve, classify_polyline
from .spacetime import MetricField

__all__ = [
    "pinch_curve",
    "pinch_family",
    "pinch_length_closed_form",
    "pinch_limit_diagonal",
    "conformal_arclength_closed_form",
    "slab_vertical_family",
    "slab_mixed_family",
    "slab_mixed_length_closed_form",
]


def pinch_curve(field: MetricField, i: int, extended_to_y: float | None = None) -> CausalCurve:
    """Member i >= 2 of the pinch family, optionally extended by a null ray
    down to y = extended_to_y."""
    if i < 2:
        raise ValueError("pinch family starts at i = 2")
    knots = [(1.0, 1.0), (1.0 / i, 0.0), (0.0, -1.0)]
    params = [0.0, 1.0, 2.0]
    if extended_to_y is not None:
        if extended_to_y >= -1.0:
            raise ValueError("extension must go below y = -1")
        s = -1.0 - extended_to_y
        knots.append((0.0 - s, -1.0 - s))
        params.append(2.0 + s)
    return classify_polyline(
        field, params, np.asarray(knots), orientation="past"
    )


def pinch_family(
    field: MetricField, i_max: int, i_min: int = 2, extended_to_y: float | None = None
) -> list:
    return [pinch_curve(field, i, extended_to_y) for i in range(i_min, i_max + 1)]


def pinch_length_closed_form(i) -> np.ndarray:
    """Proper time of pinch member i: sqrt(1 - 1/i^2) + sqrt(1 - (1-1/i)^2)."""
    i = np.asarray(i, dtype=float)
    return np.sqrt(1.0 - 1.0 / i**2) + np.sqrt(1.0 - (1.0 - 1.0 / i) ** 2)


def pinch_limit_diagonal(
    field: MetricField, t_knots=None, n_knots: int = 48
) -> CausalCurve:
    """The null diagonal (1,1) - t(1,1) on [0,1) with knots accumulating at 1.

    Default knot schedule t_k = 1 - 2^-k, which drives the inverse-square
    conformal arc length past any finite cap.
    """
    if t_knots is None:
        t_knots = 1.0 - 2.0 ** (-np.arange(n_knots, dtype=float))
    t_knots = np.asarray(t_knots, dtype=float)
    pts = np.column_stack([1.0 - t_knots, 1.0 - t_knots])
    return classify_polyline(field, t_knots, pts, orientation="past", open_end=True)


def conformal_arclength_closed_form(t) -> np.ndarray:
    """s(t) = t / ((1 - t) * sqrt(2)) for the diagonal under the
    inverse-square conformal auxiliary metric."""
    t = np.asarray(t, dtype=float)
    return t / ((1.0 - t) * math.sqrt(2.0))


def slab_vertical_family(field: MetricField, i_max: int, i_min: int = 2, floor_y: float = 0.0) -> list:
    """Vertical past geodesics from (1/i, 1) down to the slab floor."""
    out = []
    for i in range(i_min, i_max + 1):
        x = 1.0 / i
        pts = np.asarray([(x, 1.0), (x, floor_y)])
        out.append(classify_polyline(field, [0.0, 1.0 - floor_y], pts, orientation="past"))
    return out


def slab_mixed_family(field: MetricField, i_max: int, i_min: int = 2, floor_y: float = 0.0) -> list:
    """Null leg (1/i,1) -> (2/i, 1-1/i), then vertical to the slab floor.

    Member proper time is (1 - 1/i) - floor_y; the pointwise limit is the
    vertical geodesic from (0, 1) with proper time 1 - floor_y.
    """
    out = []
    for i in range(i_min, i_max + 1):
        xi = 1.0 / i
        pts = np.asarray([(xi, 1.0), (2.0 * xi, 1.0 - xi), (2.0 * xi, floor_y)])
        params = [0.0, xi, 1.0 - floor_y]
        out.append(classify_polyline(field, params, pts, orientation="past"))
    return out


def slab_mixed_length_closed_form(i, floor_y: float = 0.0) -> np.ndarray:
    i = np.asarray(i, dtype=float)
    return 1.0 - 1.0 / i - floor_y
