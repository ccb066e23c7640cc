"""Moreau-type transforms J^{-t} (inf-convolution with d^2/t) and J^{+t}
(sup-convolution), computed by an exact lower-envelope-of-parabolas sweep.

The envelope only *selects* minimizer candidates; the returned value is always
recomputed with the same floating-point expression a full scan uses, so the
fast path agrees bit-for-bit with the brute-force reference.  On circles the
sweep runs over three concatenated periods and reads the middle copy; a
runtime range check falls back to the full scan when minimizers could leave
the tiled window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cost import Cost, estimate_K
from .domain import (
    GridFunction,
    PreconditionError,
    RegularityCertificate,
    regularity_certificate,
    sup_distance,
)

#: Slack for certificate comparisons: min/max chains are exact but the
#: subtractions feeding a certificate are not.
ULP_SLACK = 64.0 * np.finfo(float).eps


def _envelope_stack(q: np.ndarray, v: np.ndarray, t: float):
    """Felzenszwalb-Huttenlocher sweep for parabolas v[k] + (x - q[k])^2 / t
    with strictly increasing centers q.  Returns (stack, bounds) where
    ``stack`` lists the envelope parabola indices left to right and
    ``bounds[r]`` is the left endpoint of segment r."""
    m = q.size
    stack = np.empty(m, dtype=np.int64)
    z = np.empty(m + 1)
    stack[0] = 0
    z[0] = -np.inf
    z[1] = np.inf
    k = 0
    half_t = 0.5 * t
    for j in range(1, m):
        while True:
            i = stack[k]
            s = 0.5 * (q[j] + q[i]) + half_t * (v[j] - v[i]) / (q[j] - q[i])
            if k > 0 and s <= z[k]:
                k -= 1
            else:
                break
        k += 1
        stack[k] = j
        z[k] = s
        z[k + 1] = np.inf
    return stack[: k + 1], z[: k + 2]


def _segments_at(bounds: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Envelope segment index at each query point (queries ascending)."""
    seg = np.empty(xs.size, dtype=np.int64)
    ptr = 0
    top = bounds.size - 2
    for qi in range(xs.size):
        x = xs[qi]
        while ptr < top and bounds[ptr + 1] < x:
            ptr += 1
        seg[qi] = ptr
    return seg


def _scan_minus(dom, pv: np.ndarray, t: float):
    """O(N^2) fallback, written independently of the oracle module."""
    x = dom.coords
    d = np.abs(x[:, None] - x[None, :])
    if dom.kind == "circle":
        d = np.minimum(d, dom.length - d)
    vals = pv[:, None] + (d * d) / t
    return np.min(vals, axis=0), np.argmin(vals, axis=0)


def _envelope_minus(dom, pv: np.ndarray, t: float):
    """min_j pv[j] + d(x_j, x)^2 / t at every node, with the scan's
    tie-breaking (smallest index among float-equal minima)."""
    n = dom.n_points
    x = dom.coords
    if dom.kind == "interval":
        q = x
        vv = pv
        orig = np.arange(n)
    else:
        rng = float(np.max(pv) - np.min(pv))
        L = dom.length
        if rng > 0.0 and t > L * L / (4.0 * rng):
            return _scan_minus(dom, pv, t)
        q = np.concatenate([x - L, x, x + L])
        vv = np.concatenate([pv, pv, pv])
        orig = np.concatenate([np.arange(n)] * 3)
    if not np.all(np.diff(q) > 0):
        return _scan_minus(dom, pv, t)

    stack, bounds = _envelope_stack(q, vv, t)
    seg = _segments_at(bounds, x)
    top = stack.size - 1

    best_v = None
    best_o = None
    for shift in (-1, 0, 1):
        pos = np.clip(seg + shift, 0, top)
        o = orig[stack[pos]]
        d = np.abs(x[o] - x)
        if dom.kind == "circle":
            d = np.minimum(d, dom.length - d)
        val = pv[o] + (d * d) / t
        if best_v is None:
            best_v, best_o = val, o
        else:
            take = (val < best_v) | ((val == best_v) & (o < best_o))
            best_v = np.where(take, val, best_v)
            best_o = np.where(take, o, best_o)
    return best_v, best_o


def j_minus(t: float, u: GridFunction, return_argmin: bool = False):
    """J^{-t} u: exact grid minimum of u(y) + d(y, x)^2 / t."""
    if not (t > 0):
        raise PreconditionError(f"transform parameter must be positive, got {t}")
    vals, arg = _envelope_minus(u.domain, u.values, t)
    out = u.with_values(vals)
    return (out, arg) if return_argmin else out


def j_plus(t: float, u: GridFunction, return_argmin: bool = False):
    """J^{+t} u = -J^{-t}(-u); the negation is exact in floating point."""
    if not (t > 0):
        raise PreconditionError(f"transform parameter must be positive, got {t}")
    vals, arg = _envelope_minus(u.domain, -u.values, t)
    out = u.with_values(-vals)
    return (out, arg) if return_argmin else out


@dataclass(frozen=True)
class JensenParams:
    """Parameters of the three-transform regularizer."""

    t: float
    s: float
    variant: str = "minus_plus_minus"  # or "plus_minus_plus"

    def __post_init__(self):
        if not (self.t > 0 and self.s > 0):
            raise PreconditionError("transform parameters must be positive")
        if self.variant not in ("minus_plus_minus", "plus_minus_plus"):
            raise PreconditionError(f"unknown variant {self.variant!r}")


@dataclass(frozen=True)
class RegularizationCertificate:
    """Measured sandwich defects and output regularity of a regularizer run.

    ``sandwich_low_defect``/``sandwich_high_defect`` are the worst violations
    of the operator sandwich that brackets the output (non-positive values
    mean the bound holds with margin)."""

    sandwich_low_defect: float
    sandwich_high_defect: float
    sup_change: float
    output_regularity: RegularityCertificate


def transform_chain(u: GridFunction, p: JensenParams) -> GridFunction:
    """Apply the three-transform composition of ``p`` to ``u``.  The middle
    stage is a single envelope with parameter t+s, not a composition."""
    if p.variant == "minus_plus_minus":
        return j_minus(p.t, j_plus(p.t + p.s, j_minus(p.s, u)))
    return j_plus(p.t, j_minus(p.t + p.s, j_plus(p.s, u)))


def sandwich_bounds(c: Cost, u: GridFunction, variant: str):
    """Lax-Oleinik bracket for the given variant.

    minus_plus_minus lands in [T+ u, T- T+ u]; plus_minus_plus lands in
    [T+ T- u, T- u].  (These pairings follow the inequality chain that proves
    the uniform-case theorem; see the decisions ledger.)"""
    from . import lax

    if variant == "minus_plus_minus":
        tp = lax.t_plus(c, u)
        return tp, lax.t_minus(c, tp)
    tm = lax.t_minus(c, u)
    return lax.t_plus(c, tm), tm


def regularize_uniform(c: Cost, u: GridFunction, p: JensenParams, tol=None):
    """Three-transform regularization of a subsolution, with measured
    certificate.  Requires t, s < 1/K for the cost's slice constant K."""
    from . import lax

    if tol is None:
        tol = lax.default_tol(c, u)
    report = lax.analyze(c, u, tol)
    if not report.is_subsolution:
        raise PreconditionError(
            f"input is not a subsolution (max violation {report.max_violation:.3e} > tol {tol:.3e})"
        )
    K = estimate_K(c).K
    if K > 0.0 and (p.t >= 1.0 / K or p.s >= 1.0 / K):
        raise PreconditionError(
            f"transform parameters must satisfy t, s < 1/K = {1.0 / K:.6g}; "
            f"got t={p.t:.6g}, s={p.s:.6g}"
        )
    w = transform_chain(u, p)
    low, high = sandwich_bounds(c, u, p.variant)
    cert = RegularizationCertificate(
        sandwich_low_defect=float(np.max(low.values - w.values)),
        sandwich_high_defect=float(np.max(w.values - high.values)),
        sup_change=sup_distance(w, u),
        output_regularity=regularity_certificate(w),
    )
    return w, cert


def claimed_output_bounds(p: JensenParams):
    """(semiconcavity, semiconvexity) bounds asserted for the output."""
    if p.variant == "minus_plus_minus":
        return 1.0 / p.t, 1.0 / (p.t + p.s)
    return 1.0 / (p.t + p.s), 1.0 / p.t


def select_ts(c: Cost, u: GridFunction, eps: float,
              variant: str = "minus_plus_minus") -> JensenParams:
    """Largest t = s on the geometric ladder {t0 / 2^k} whose regularized
    output stays within sup distance ``eps`` of the input."""
    if not (eps > 0):
        raise PreconditionError(f"eps must be positive, got {eps}")
    K = estimate_K(c).K
    t0 = 0.9 / K if K > 0.0 else 1.0
    h = u.domain.spacing
    floor = h * h / 64.0
    t = t0
    best = np.inf
    while t >= floor:
        p = JensenParams(t, t, variant)
        _, cert = regularize_uniform(c, u, p)
        best = min(best, cert.sup_change)
        if cert.sup_change <= eps:
            return p
        t *= 0.5
    raise PreconditionError(
        f"parameter ladder exhausted below grid scale; best sup change {best:.3e} > eps {eps:.3e}"
    )
