"""Limit estimation for convergent scalar sequences.

Finite data stand in for the tail of an infinite sequence, so the pointwise
limit is estimated by model-selected extrapolation:

- constant: the tail is flat to roundoff;
- geometric: Shanks (Aitken delta-squared) applied along an index-halving
  subchain, iterated once more when enough chain points exist -- exact for
  errors c*r^k and second-order accurate for power-law decay sampled at
  doubling indices;
- harmonic-with-offset: A + c/(k + s) solved in closed form from three
  spread samples (s = (k3 - R*k1)/(R - 1) with R the scaled difference
  ratio), then validated on every remaining sample.

The best-validating model wins; when none validates, the last value is
returned with the recent increment as the uncertainty.  Estimates carry an
uncertainty so callers can drop knots the data cannot pin down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = ["LimitEstimate", "estimate_limit", "limsup_estimate"]


@dataclass(frozen=True)
class LimitEstimate:
    value: float
    uncertainty: float
    model: str  # "constant" | "geometric" | "harmonic" | "last_value"


def limsup_estimate(values: Sequence[float]) -> float:
    """Finite-sample limsup: max over the tail half."""
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("empty sequence")
    return max(vals[len(vals) // 2 :])


def _halving_chain(labels: np.ndarray) -> list[int]:
    """Positions of the longest label subchain k, k/2, k/4, ... present.

    Labels are integer-valued indices; the chain ends at the largest label.
    """
    label_pos = {int(l): i for i, l in enumerate(labels)}
    best: list[int] = []
    for end in sorted(label_pos, reverse=True):
        chain = []
        k = end
        while k in label_pos and k >= 1:
            chain.append(label_pos[k])
            if k % 2 != 0:
                break
            k //= 2
        if len(chain) > len(best):
            best = chain
        if len(best) >= 6:
            break
    return best[::-1]


def _aitken(x1: float, x2: float, x3: float) -> Optional[float]:
    d1 = x2 - x1
    d2 = x3 - x2
    denom = d2 - d1
    if denom == 0.0 or abs(denom) < 1e-14 * (abs(d1) + abs(d2)):
        return None
    return x3 - d2 * d2 / denom


def _shanks_table(xs: np.ndarray, max_levels: int = 2) -> Optional[LimitEstimate]:
    """Iterated Aitken over a chain; uncertainty from the deepest level gap.

    Depth is capped: deep Shanks levels on short chains amplify the tiny
    denominators of near-converged differences into spurious confidence.
    """
    xs = list(xs)
    if len(xs) < 3:
        return None
    prev_last = xs[-1]
    level = 0
    while len(xs) >= 3 and level < max_levels:
        nxt = []
        for i in range(len(xs) - 2):
            a = _aitken(xs[i], xs[i + 1], xs[i + 2])
            if a is None:
                break
            nxt.append(a)
        if len(nxt) != len(xs) - 2:
            break
        prev_last = xs[-1]
        xs = nxt
        level += 1
    if level == 0:
        return None
    unc = abs(xs[-1] - (xs[-2] if len(xs) > 1 else prev_last))
    return LimitEstimate(float(xs[-1]), float(unc), "geometric")


def _tail_ratio_is_geometric(xs: np.ndarray) -> bool:
    """Consecutive differences must decay clearly for Aitken to be trusted."""
    d = np.diff(xs)
    if len(d) < 2 or np.any(d[:-1] == 0.0):
        return False
    ratios = d[1:] / d[:-1]
    return bool(np.all(ratios > -0.95) and np.all(np.abs(ratios) <= 0.9))


def _geometric_estimate(values: np.ndarray, labels: np.ndarray) -> Optional[LimitEstimate]:
    """Shanks acceleration along two chains: consecutive tail samples (exact
    for errors geometric in the label) and an index-halving chain (geometric
    for power-law decay).  The tighter of the two wins."""
    cands = []
    tail = values[max(0, len(values) - 6) :]
    if _tail_ratio_is_geometric(tail):
        est = _shanks_table(tail)
        if est is not None:
            cands.append(est)
    chain = _halving_chain(labels)
    if len(chain) >= 3:
        est = _shanks_table(values[chain])
        if est is not None:
            cands.append(est)
    if not cands:
        return None
    return min(cands, key=lambda c: c.uncertainty)


def _power_offset_estimate(
    values: np.ndarray, labels: np.ndarray
) -> Optional[LimitEstimate]:
    """Least-squares fit of A + c/(k+s)^p on the tail half.

    The uncertainty is the larger of the tail residual and the shift of A
    under refitting on the last quarter (stability under subsetting), since
    a tiny residual alone does not bound the extrapolation error.
    """
    from scipy.optimize import least_squares

    n = len(values)
    if n < 12:
        return None

    def fit(lab, val):
        i1 = 0
        i2 = len(lab) // 2
        i3 = len(lab) - 1
        x1, x2, x3 = val[i1], val[i2], val[i3]
        d23 = x2 - x3
        if d23 == 0.0 or (x1 - x2) * d23 <= 0:
            return None
        p0 = 1.0
        c0 = (x1 - x3) / (1.0 / (lab[i1] + 1.0) - 1.0 / (lab[i3] + 1.0))
        theta0 = [val[-1], c0, 1.0, p0]

        def resid(theta):
            A, c, s, p = theta
            base = np.maximum(lab + s, 1e-9)
            return val - (A + c * base ** (-p))

        try:
            sol = least_squares(resid, theta0, method="lm", xtol=1e-15, ftol=1e-15)
        except Exception:
            return None
        if not sol.success:
            return None
        return float(sol.x[0]), float(np.max(np.abs(resid(sol.x))))

    half = fit(labels[n // 2 :], values[n // 2 :])
    if half is None:
        return None
    quarter = fit(labels[3 * n // 4 :], values[3 * n // 4 :])
    stability = abs(half[0] - quarter[0]) if quarter is not None else math.inf
    unc = max(half[1], stability)
    if not math.isfinite(unc):
        return None
    return LimitEstimate(half[0], unc, "power_offset")


def _harmonic_estimate(values: np.ndarray, labels: np.ndarray) -> Optional[LimitEstimate]:
    """Exact fit of A + c/(k + s) through three spread samples."""
    n = len(values)
    if n < 4:
        return None
    i1, i2, i3 = 0, n // 2, n - 1
    if i2 in (i1, i3):
        return None
    k1, k2, k3 = (float(labels[i]) for i in (i1, i2, i3))
    x1, x2, x3 = (float(values[i]) for i in (i1, i2, i3))
    d23 = x2 - x3
    if d23 == 0.0:
        return None
    ratio = (x1 - x2) / d23
    if not math.isfinite(ratio):
        return None
    R = ratio * (k3 - k2) / (k2 - k1)
    if abs(R - 1.0) < 1e-9:
        return None  # degenerate: looks linear in the index
    s = (k3 - R * k1) / (R - 1.0)
    if k1 + s <= 0:  # pole inside or left of the sample range
        return None
    c = (x1 - x2) / (1.0 / (k1 + s) - 1.0 / (k2 + s))
    A = x1 - c / (k1 + s)
    if not (math.isfinite(A) and math.isfinite(c)):
        return None
    resid = np.abs(values - (A + c / (labels + s)))
    unc = float(resid.max())
    return LimitEstimate(A, unc, "harmonic")


def _last_value_estimate(vals: np.ndarray) -> LimitEstimate:
    """Raw tail value with a tail-sum-aware uncertainty.

    For a tail with increments decaying at observed ratio r < 1 the distance
    to the limit is about inc * r / (1 - r); slower or non-decaying tails get
    an uncertainty of at least the last increment.
    """
    inc2 = abs(vals[-1] - vals[-2])
    unc = inc2
    if len(vals) >= 3:
        inc1 = abs(vals[-2] - vals[-3])
        if inc1 > 0:
            r = inc2 / inc1
            if r < 0.95:
                unc = max(inc2, inc2 * r / (1.0 - r))
            else:
                unc = max(inc2, 20.0 * inc2)  # near-stationary decay: murky tail
    return LimitEstimate(float(vals[-1]), unc, "last_value")


def estimate_limit(
    values: Sequence[float],
    labels: Optional[Sequence[float]] = None,
    with_power_fit: bool = False,
) -> LimitEstimate:
    """Estimate lim values[k] as k -> inf from a finite convergent sample.

    labels are the (integer-valued) sequence positions; they default to
    0..n-1.  Among the candidate models the one with the smallest honest
    uncertainty wins; callers decide what uncertainty they can live with.
    with_power_fit adds the least-squares power-offset model, which is
    stronger on slow power-law decay but whose uncertainty rests on a
    stability heuristic rather than strict validation.
    """
    vals = np.asarray(list(values), dtype=float)
    if len(vals) == 0:
        raise ValueError("empty sequence")
    if labels is None:
        labs = np.arange(len(vals), dtype=float)
    else:
        labs = np.asarray(list(labels), dtype=float)
        if len(labs) != len(vals):
            raise ValueError("labels must match values")
    if len(vals) == 1:
        return LimitEstimate(float(vals[0]), math.inf, "last_value")

    scale = float(np.max(np.abs(vals))) + 1.0
    tail = vals[max(0, len(vals) - 6) :]
    spread = float(tail.max() - tail.min())
    if spread <= 4.0 * np.finfo(float).eps * scale:
        return LimitEstimate(float(vals[-1]), spread, "constant")

    candidates = [_last_value_estimate(vals)]
    harm = _harmonic_estimate(vals, labs)
    if harm is not None:
        candidates.append(harm)
    geo = _geometric_estimate(vals, labs)
    if geo is not None:
        candidates.append(geo)
    if with_power_fit:
        pw = _power_offset_estimate(vals, labs)
        if pw is not None:
            candidates.append(pw)
    return min(candidates, key=lambda c: c.uncertainty)
