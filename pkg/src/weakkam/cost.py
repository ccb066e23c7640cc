"""Cost models c(x, y) over a grid, and the semiconcavity constant K of the
cost slices.

``cost_matrix`` and ``cost_values`` evaluate entries with the same floating
point expression (same operation order), so dense scans and fast per-entry
paths see bit-identical numbers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .domain import (
    GridDomain,
    GridFunction,
    PreconditionError,
    regularity_certificate,
    require_same_domain,
)


@dataclass(frozen=True)
class Cost:
    """Tagged-union cost kernel.  Use the constructor helpers below."""

    kind: str  # quadratic | quadratic_plus_potential | separable | matrix | shifted
    domain: GridDomain
    t: Optional[float] = None
    V: Optional[GridFunction] = None
    W: Optional[GridFunction] = None
    f: Optional[GridFunction] = None
    g: Optional[GridFunction] = None
    C: Optional[np.ndarray] = None
    base: Optional["Cost"] = None
    psi: Optional[GridFunction] = None
    side: Optional[str] = None  # source | target


def quadratic(domain: GridDomain, t: float) -> Cost:
    if not (t > 0):
        raise PreconditionError(f"quadratic cost needs t > 0, got {t}")
    return Cost("quadratic", domain, t=float(t))


def quadratic_plus_potential(domain: GridDomain, t: float, V: GridFunction,
                             W: GridFunction) -> Cost:
    if not (t > 0):
        raise PreconditionError(f"quadratic cost needs t > 0, got {t}")
    require_same_domain(V, W)
    if V.domain != domain:
        raise PreconditionError("potential domain differs from cost domain")
    return Cost("quadratic_plus_potential", domain, t=float(t), V=V, W=W)


def separable(f: GridFunction, g: GridFunction) -> Cost:
    """c(x, y) = g(x) + f(y)."""
    dom = require_same_domain(f, g)
    return Cost("separable", dom, f=f, g=g)


def matrix_cost(domain: GridDomain, C) -> Cost:
    C = np.asarray(C, dtype=float)
    n = domain.n_points
    if C.shape != (n, n):
        raise PreconditionError(f"cost matrix shape {C.shape} != ({n}, {n})")
    if not np.all(np.isfinite(C)):
        raise PreconditionError("cost matrix entries must be finite")
    C = C.copy()
    C.setflags(write=False)
    return Cost("matrix", domain, C=C)


def shifted(base: Cost, psi: GridFunction, side: str) -> Cost:
    """c~(x,y) = c(x,y) - psi(y) (side='target') or c(x,y) - psi(x) ('source')."""
    if side not in ("source", "target"):
        raise PreconditionError(f"shift side must be source|target, got {side!r}")
    if psi.domain != base.domain:
        raise PreconditionError("shift function domain differs from cost domain")
    return Cost("shifted", base.domain, base=base, psi=psi, side=side)


def cost_values(c: Cost, rows, cols) -> np.ndarray:
    """c(x_rows, x_cols) element-wise for index arrays of equal shape."""
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    dom = c.domain
    if c.kind == "quadratic":
        d = dom.node_distance(rows, cols)
        return (d * d) / c.t
    if c.kind == "quadratic_plus_potential":
        d = dom.node_distance(rows, cols)
        return (d * d) / c.t + c.V.values[cols] + c.W.values[rows]
    if c.kind == "separable":
        return c.g.values[rows] + c.f.values[cols]
    if c.kind == "matrix":
        return c.C[rows, cols]
    if c.kind == "shifted":
        base = cost_values(c.base, rows, cols)
        if c.side == "target":
            return base - c.psi.values[cols]
        return base - c.psi.values[rows]
    raise PreconditionError(f"unknown cost kind {c.kind!r}")


def eval_cost(c: Cost, i: int, j: int) -> float:
    """c(x_i, x_j) for single node indices."""
    n = c.domain.n_points
    if not (0 <= i < n and 0 <= j < n):
        raise PreconditionError(f"node index out of range: ({i}, {j}) with n={n}")
    return float(cost_values(c, np.array([i]), np.array([j]))[0])


def cost_matrix(c: Cost) -> np.ndarray:
    """Dense matrix C[i, j] = c(x_i, x_j), entries bit-identical to
    ``cost_values``."""
    dom = c.domain
    if c.kind == "quadratic":
        d = dom.metric_matrix()
        return (d * d) / c.t
    if c.kind == "quadratic_plus_potential":
        d = dom.metric_matrix()
        return (d * d) / c.t + c.V.values[None, :] + c.W.values[:, None]
    if c.kind == "separable":
        return c.g.values[:, None] + c.f.values[None, :]
    if c.kind == "matrix":
        return c.C.copy()
    if c.kind == "shifted":
        base = cost_matrix(c.base)
        if c.side == "target":
            return base - c.psi.values[None, :]
        return base - c.psi.values[:, None]
    raise PreconditionError(f"unknown cost kind {c.kind!r}")


def cost_scale(c: Cost) -> float:
    """Cheap upper bound for sup |c|, used to scale tolerances."""
    dom = c.domain
    diam = dom.length / 2.0 if dom.kind == "circle" else dom.length
    if c.kind == "quadratic":
        return diam * diam / c.t
    if c.kind == "quadratic_plus_potential":
        return diam * diam / c.t + float(np.max(np.abs(c.V.values))) + float(
            np.max(np.abs(c.W.values)))
    if c.kind == "separable":
        return float(np.max(np.abs(c.f.values))) + float(np.max(np.abs(c.g.values)))
    if c.kind == "matrix":
        return float(np.max(np.abs(c.C)))
    if c.kind == "shifted":
        return cost_scale(c.base) + float(np.max(np.abs(c.psi.values)))
    raise PreconditionError(f"unknown cost kind {c.kind!r}")


@dataclass(frozen=True)
class KCertificate:
    """Largest discrete semiconcavity constant over all x- and y-slices."""

    K: float


def _slice_semiconcavity(M: np.ndarray, dom: GridDomain) -> float:
    """Max semiconcavity constant over the rows of M (each row a slice)."""
    h = dom.spacing
    if dom.kind == "circle":
        d2 = np.roll(M, -1, axis=1) + np.roll(M, 1, axis=1) - 2.0 * M
    else:
        d2 = M[:, 2:] + M[:, :-2] - 2.0 * M[:, 1:-1]
        if d2.size == 0:
            return 0.0
    return max(0.0, float(np.max(d2)) / (2.0 * h * h))


def estimate_K(c: Cost) -> KCertificate:
    M = cost_matrix(c)
    k_rows = _slice_semiconcavity(M, c.domain)      # y -> c(x, y), x fixed
    k_cols = _slice_semiconcavity(M.T, c.domain)    # x -> c(x, y), y fixed
    return KCertificate(max(k_rows, k_cols))


@dataclass(frozen=True)
class CostDiagnostics:
    K: float
    min_cost: float
    max_cost: float
    min_diagonal: float
    diagonal_negative: bool


def validate_cost(c: Cost) -> CostDiagnostics:
    """Structural evidence for the cost hypotheses: K, range, and the sign of
    the diagonal (negative diagonal entries rule out calibration at fixed
    points)."""
    M = cost_matrix(c)
    diag = np.diag(M)
    min_diag = float(np.min(diag))
    return CostDiagnostics(
        K=estimate_K(c).K,
        min_cost=float(np.min(M)),
        max_cost=float(np.max(M)),
        min_diagonal=min_diag,
        diagonal_negative=bool(min_diag < 0.0),
    )
