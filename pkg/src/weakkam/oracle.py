"""Brute-force reference evaluations of the transform and operator minima.

These scan all node pairs and share no minimization logic with the fast
envelope paths; ties go to the smallest index (first occurrence).
"""

from __future__ import annotations

import numpy as np

from .cost import Cost, cost_matrix
from .domain import GridFunction, PreconditionError, require_same_domain


def _distance_matrix(dom) -> np.ndarray:
    # Independent of GridDomain.metric_matrix on purpose: same formula,
    # separate code path.
    x = dom.coords
    d = np.abs(x[:, None] - x[None, :])
    if dom.kind == "circle":
        d = np.minimum(d, dom.length - d)
    return d


def brute_moreau(t: float, u: GridFunction, sign: str):
    """Full scan for J^{-t} (sign='minus') or J^{+t} ('plus').

    Returns (GridFunction, argopt index array).
    """
    if not (t > 0):
        raise PreconditionError(f"transform parameter must be positive, got {t}")
    d = _distance_matrix(u.domain)
    if sign == "minus":
        vals = u.values[:, None] + (d * d) / t
        arg = np.argmin(vals, axis=0)
        out = np.min(vals, axis=0)
    elif sign == "plus":
        vals = u.values[:, None] - (d * d) / t
        arg = np.argmax(vals, axis=0)
        out = np.max(vals, axis=0)
    else:
        raise PreconditionError(f"sign must be minus|plus, got {sign!r}")
    return u.with_values(out), arg


def brute_lax(c: Cost, u: GridFunction, sign: str):
    """Full scan for T^- (sign='minus') or T^+ ('plus')."""
    if u.domain != c.domain:
        raise PreconditionError("function and cost domains differ")
    C = cost_matrix(c)
    if sign == "minus":
        vals = u.values[:, None] + C          # vals[y, x] = u(y) + c(y, x)
        arg = np.argmin(vals, axis=0)
        out = np.min(vals, axis=0)
    elif sign == "plus":
        vals = u.values[:, None] - C.T        # vals[y, x] = u(y) - c(x, y)
        arg = np.argmax(vals, axis=0)
        out = np.max(vals, axis=0)
    else:
        raise PreconditionError(f"sign must be minus|plus, got {sign!r}")
    return u.with_values(out), arg


def brute_pair_scan(c: Cost, u: GridFunction):
    """Scan of all pairs for the subsolution inequality.

    Returns (max_violation, per-node min slack) where slack(x) =
    min_y [c(x, y) - u(y) + u(x)].
    """
    if u.domain != c.domain:
        raise PreconditionError("function and cost domains differ")
    C = cost_matrix(c)
    v = u.values
    violation = (v[None, :] - v[:, None]) - C   # u(y) - u(x) - c(x, y)
    return float(np.max(violation)), -np.max(violation, axis=1)
