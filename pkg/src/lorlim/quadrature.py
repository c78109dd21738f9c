"""Adaptive composite Gauss-Legendre quadrature over polyline segments.

Each segment integrand is smooth, so a 5-point rule with interval bisection
converges fast; the error estimate per interval is the difference between
the one-panel value and the two-half-panel value.  Refinement past a
subinterval cap or a running-total cap signals divergence and yields the
+inf sentinel instead of an answer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import QuadratureConfig

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)


@dataclass(frozen=True)
class SegmentQuadResult:
    value: float
    error_estimate: float
    diverged: bool
    n_subintervals: int


def _panel(f: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> float:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return half * float(np.dot(_GL_WEIGHTS, f(mid + half * _GL_NODES)))


def integrate_segment(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    quad: QuadratureConfig = QuadratureConfig(),
) -> SegmentQuadResult:
    """Integrate f over [a, b] adaptively.

    f must accept a numpy array of parameters and return an array of values.
    """
    if b <= a:
        return SegmentQuadResult(0.0, 0.0, False, 0)
    whole = _panel(f, a, b)
    stack = [(a, b, whole)]
    total = 0.0
    err_total = 0.0
    count = 0
    while stack:
        lo, hi, coarse = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _panel(f, lo, mid)
        right = _panel(f, mid, hi)
        fine = left + right
        err = abs(fine - coarse)
        count += 1
        if count > quad.max_subintervals or total > quad.partial_sum_cap:
            return SegmentQuadResult(math.inf, math.inf, True, count)
        if err <= quad.rel_tol * (1.0 + abs(fine)) or (hi - lo) < 1e-15 * (b - a):
            total += fine
            err_total += err
        else:
            stack.append((lo, mid, left))
            stack.append((mid, hi, right))
    if total > quad.partial_sum_cap:
        return SegmentQuadResult(math.inf, math.inf, True, count)
    return SegmentQuadResult(total, err_total, False, count)
