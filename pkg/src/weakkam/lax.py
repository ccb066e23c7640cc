"""Discrete Lax-Oleinik operators, subsolution analysis, Aubry/contact sets,
leverage, and the averaged-operator constructions.

T^- and T^+ use full O(N^2) scans except for quadratic-family kernels, where
minimizer candidates come from the linear-time parabola envelope; the value
returned for the chosen index is always the same floating-point expression the
scan would produce, so both paths agree bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cost import Cost, cost_matrix, cost_scale, cost_values
from .domain import (
    GridFunction,
    PreconditionError,
    require_same_domain,
)
from .jensen import _envelope_minus


def default_tol(c: Cost, u: GridFunction) -> float:
    """Equality-detection tolerance: 1e-9 times the problem scale."""
    return 1e-9 * (1.0 + float(np.max(np.abs(u.values))) + cost_scale(c))


def _check_domains(c: Cost, u: GridFunction):
    if u.domain != c.domain:
        raise PreconditionError("function and cost domains differ")


def _minus_candidates(c: Cost, u_vals: np.ndarray):
    """Envelope argmin of u(y) + c(y, x) over y for quadratic-family kernels
    (the target-potential part is constant in y and cannot move the real
    minimizer), else None."""
    if c.kind == "quadratic":
        _, arg = _envelope_minus(c.domain, u_vals, c.t)
        return arg
    if c.kind == "quadratic_plus_potential":
        _, arg = _envelope_minus(c.domain, u_vals + c.W.values, c.t)
        return arg
    if c.kind == "shifted":
        if c.side == "target":
            return _minus_candidates(c.base, u_vals)
        return _minus_candidates(c.base, u_vals - c.psi.values)
    return None


def _plus_candidates(c: Cost, u_vals: np.ndarray):
    if c.kind == "quadratic":
        _, arg = _envelope_minus(c.domain, -u_vals, c.t)
        return arg
    if c.kind == "quadratic_plus_potential":
        _, arg = _envelope_minus(c.domain, -(u_vals - c.V.values), c.t)
        return arg
    if c.kind == "shifted":
        if c.side == "target":
            return _plus_candidates(c.base, u_vals + c.psi.values)
        return _plus_candidates(c.base, u_vals)
    return None


def _reduce_min(vals_rows, idx_rows):
    best_v = vals_rows[0]
    best_o = idx_rows[0]
    for r in range(1, len(vals_rows)):
        v, o = vals_rows[r], idx_rows[r]
        take = (v < best_v) | ((v == best_v) & (o < best_o))
        best_v = np.where(take, v, best_v)
        best_o = np.where(take, o, best_o)
    return best_v, best_o


def t_minus(c: Cost, u: GridFunction) -> GridFunction:
    """T^- u(x) = min_y u(y) + c(y, x)."""
    _check_domains(c, u)
    n = c.domain.n_points
    arg = _minus_candidates(c, u.values)
    if arg is None:
        vals = u.values[:, None] + cost_matrix(c)
        return u.with_values(np.min(vals, axis=0))
    cols = np.arange(n)
    # The envelope pins the minimizer; re-evaluate with the scan's expression.
    vals_rows, idx_rows = [], []
    for a in _candidate_rows(arg, n, c.domain.kind):
        vals_rows.append(u.values[a] + cost_values(c, a, cols))
        idx_rows.append(a)
    best_v, _ = _reduce_min(vals_rows, idx_rows)
    return u.with_values(best_v)


def _candidate_rows(arg: np.ndarray, n: int, kind: str):
    """The envelope argmin plus its grid neighbours, guarding against
    off-by-one float ties between differently grouped expressions."""
    rows = [arg]
    if kind == "circle":
        rows.append((arg - 1) % n)
        rows.append((arg + 1) % n)
    else:
        rows.append(np.maximum(arg - 1, 0))
        rows.append(np.minimum(arg + 1, n - 1))
    return rows


def t_plus(c: Cost, u: GridFunction) -> GridFunction:
    """T^+ u(x) = max_y u(y) - c(x, y)."""
    _check_domains(c, u)
    n = c.domain.n_points
    cand = _plus_candidates(c, u.values)
    if cand is None:
        vals = u.values[:, None] - cost_matrix(c).T
        return u.with_values(np.max(vals, axis=0))
    arg = cand[0]
    cols = np.arange(n)
    vals_rows, idx_rows = [], []
    for a in _candidate_rows(arg, n, c.domain.kind):
        vals_rows.append(-(u.values[a] - cost_values(c, cols, a)))
        idx_rows.append(a)
    best_v, _ = _reduce_min(vals_rows, idx_rows)
    return u.with_values(-best_v)


@dataclass(frozen=True)
class SubsolutionReport:
    """Violation bounds, calibrated nodes, contact pairs, and leverage."""

    max_violation: float
    is_subsolution: bool
    aubry_nodes: np.ndarray          # sorted node indices
    contact_pairs: np.ndarray        # (m, 2) array of (i, j)
    leverage: GridFunction
    free_nodes: np.ndarray
    tol: float


def analyze(c: Cost, u: GridFunction, tol: float = None) -> SubsolutionReport:
    """Full subsolution diagnostic at tolerance ``tol``."""
    _check_domains(c, u)
    if tol is None:
        tol = default_tol(c, u)
    if tol < 0:
        raise PreconditionError(f"tol must be nonnegative, got {tol}")
    C = cost_matrix(c)
    v = u.values
    violation = (v[None, :] - v[:, None]) - C
    max_violation = float(np.max(violation))
    tm = t_minus(c, u)
    tp = t_plus(c, u)
    lam = np.minimum(tm.values - v, v - tp.values) / 3.0
    aubry = np.flatnonzero((tm.values - v <= tol) & (v - tp.values <= tol))
    contact = np.argwhere(np.abs(violation) <= tol)
    free = np.flatnonzero(lam > tol)
    return SubsolutionReport(
        max_violation=max_violation,
        is_subsolution=bool(max_violation <= tol),
        aubry_nodes=aubry,
        contact_pairs=contact,
        leverage=u.with_values(lam),
        free_nodes=free,
        tol=float(tol),
    )


def free_average(c: Cost, u: GridFunction, tol: float = None) -> GridFunction:
    """(T^+ u + T^+ T^- u + T^- T^+ u + T^- u) / 4: equal to u on the
    calibrated set, free off it, strict where u is strict."""
    if tol is None:
        tol = default_tol(c, u)
    rep = analyze(c, u, tol)
    if not rep.is_subsolution:
        raise PreconditionError(
            f"free_average needs a subsolution (max violation {rep.max_violation:.3e})"
        )
    tm = t_minus(c, u)
    tp = t_plus(c, u)
    tptm = t_plus(c, tm)
    tmtp = t_minus(c, tp)
    return u.with_values((tp.values + tptm.values + tmtp.values + tm.values) / 4.0)


def convex_combine(weights, us) -> GridFunction:
    """Node-wise convex combination with fixed left-to-right summation."""
    if len(us) == 0:
        raise PreconditionError("convex_combine needs at least one function")
    if len(weights) != len(us):
        raise PreconditionError("weights and functions differ in length")
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise PreconditionError("weights must be positive")
    if abs(float(np.sum(w)) - 1.0) > 1e-12:
        raise PreconditionError(f"weights sum to {np.sum(w)!r}, expected 1")
    dom = require_same_domain(*us)
    acc = w[0] * us[0].values
    for k in range(1, len(us)):
        acc = acc + w[k] * us[k].values
    return GridFunction(dom, acc)


@dataclass(frozen=True)
class OperatorDiagnostics:
    idempotence_plus_defect: float    # sup |T+ T- T+ u - T+ u|
    idempotence_minus_defect: float   # sup |T- T+ T- u - T- u|
    chain_violations: tuple           # the four links of T+u <= T+T-u <= u <= T-T+u <= T-u
    is_subsolution: bool


def operator_identity_check(c: Cost, u: GridFunction, tol: float = None) -> OperatorDiagnostics:
    if tol is None:
        tol = default_tol(c, u)
    tm = t_minus(c, u)
    tp = t_plus(c, u)
    tptm = t_plus(c, tm)
    tmtp = t_minus(c, tp)
    d_plus = float(np.max(np.abs(t_plus(c, tmtp).values - tp.values)))
    d_minus = float(np.max(np.abs(t_minus(c, tptm).values - tm.values)))
    chain = (
        float(np.max(tp.values - tptm.values)),
        float(np.max(tptm.values - u.values)),
        float(np.max(u.values - tmtp.values)),
        float(np.max(tmtp.values - tm.values)),
    )
    viol, _ = _max_violation(c, u)
    return OperatorDiagnostics(d_plus, d_minus, chain, bool(viol <= tol))


def _max_violation(c: Cost, u: GridFunction):
    C = cost_matrix(c)
    v = u.values
    violation = (v[None, :] - v[:, None]) - C
    return float(np.max(violation)), violation


def aubry_intersection(reports):
    """Intersect calibrated node sets and contact-pair sets over a family of
    reports; also checks that every intersected node occurs as source and as
    target of some intersected pair, reporting (not raising) violations."""
    if len(reports) == 0:
        raise PreconditionError("aubry_intersection needs at least one report")
    doms = {r.leverage.domain for r in reports}
    if len(doms) != 1:
        raise PreconditionError("reports live on different domains")
    tols = {r.tol for r in reports}
    if len(tols) != 1:
        raise PreconditionError("reports use different tolerances")
    nodes = set(reports[0].aubry_nodes.tolist())
    pairs = {tuple(p) for p in reports[0].contact_pairs.tolist()}
    for r in reports[1:]:
        nodes &= set(r.aubry_nodes.tolist())
        pairs &= {tuple(p) for p in r.contact_pairs.tolist()}
    sources = {p[0] for p in pairs}
    targets = {p[1] for p in pairs}
    violations = sorted(x for x in nodes if x not in sources or x not in targets)
    return sorted(nodes), sorted(pairs), violations
