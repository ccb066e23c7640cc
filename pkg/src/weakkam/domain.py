"""Uniform 1-D grids (circle or interval), sampled functions, and discrete
second-difference regularity certificates.

Node coordinates are always generated as ``origin + i*h`` (never accumulated)
so that identical domains produce bit-identical coordinate arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class PreconditionError(ValueError):
    """An operation was called outside its stated preconditions (CLI exit 2)."""


class CertificateViolation(RuntimeError):
    """A theorem-asserted certificate failed; indicates a bug (CLI exit 3)."""


class DomainMismatchError(PreconditionError):
    """Two grid functions live on different domains."""


@dataclass(frozen=True)
class GridDomain:
    """Uniform grid over a circle of circumference ``length`` or a closed
    interval ``[origin, origin + length]``."""

    kind: str  # "circle" | "interval"
    origin: float
    length: float
    n_points: int

    @property
    def spacing(self) -> float:
        if self.kind == "circle":
            return self.length / self.n_points
        return self.length / (self.n_points - 1)

    @cached_property
    def coords(self) -> np.ndarray:
        h = self.spacing
        x = self.origin + np.arange(self.n_points) * h
        x.setflags(write=False)
        return x

    def metric(self, a, b):
        """Distance between coordinates ``a`` and ``b`` (scalars or arrays)."""
        d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
        if self.kind == "circle":
            d = np.minimum(d, self.length - d)
        return d

    def metric_matrix(self) -> np.ndarray:
        x = self.coords
        return self.metric(x[:, None], x[None, :])

    def wrap_displacement(self, delta):
        """Signed displacement reduced to ``(-L/2, L/2]`` on circles."""
        if self.kind != "circle":
            return np.asarray(delta, dtype=float)
        L = self.length
        return np.asarray(delta, dtype=float) - L * np.round(np.asarray(delta) / L)

    def node_distance(self, i, j):
        """Metric distance between nodes by index (periodic on circles)."""
        return self.metric(self.coords[np.asarray(i)], self.coords[np.asarray(j)])


def make_grid(kind: str, origin: float, length: float, n_points: int) -> GridDomain:
    if kind not in ("circle", "interval"):
        raise PreconditionError(f"unknown domain kind {kind!r}")
    if not (length > 0):
        raise PreconditionError(f"domain length must be positive, got {length}")
    if n_points < 2:
        raise PreconditionError(f"need at least 2 grid points, got {n_points}")
    return GridDomain(kind, float(origin), float(length), int(n_points))


@dataclass(frozen=True)
class GridFunction:
    """Real values sampled at the nodes of a :class:`GridDomain`."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.domain.n_points,):
            raise PreconditionError(
                f"value array has shape {v.shape}, domain has {self.domain.n_points} nodes"
            )
        if not np.all(np.isfinite(v)):
            raise PreconditionError("grid function values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @staticmethod
    def from_callable(domain: GridDomain, f) -> "GridFunction":
        return GridFunction(domain, np.asarray(f(domain.coords), dtype=float))

    @staticmethod
    def constant(domain: GridDomain, value: float) -> "GridFunction":
        return GridFunction(domain, np.full(domain.n_points, float(value)))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.domain, values)


def require_same_domain(*fns: GridFunction) -> GridDomain:
    dom = fns[0].domain
    for f in fns[1:]:
        if f.domain != dom:
            raise DomainMismatchError("grid functions live on different domains")
    return dom


def second_difference_values(u: GridFunction) -> np.ndarray:
    """Raw second differences at admissible nodes.

    Circle: all nodes (periodic indexing).  Interval: interior nodes only,
    so the returned array has ``n_points - 2`` entries.
    """
    v = u.values
    if u.domain.kind == "circle":
        return np.roll(v, -1) + np.roll(v, 1) - 2.0 * v
    return v[2:] + v[:-2] - 2.0 * v[1:-1]


def second_difference(u: GridFunction) -> GridFunction:
    """Node-wise second difference; interval endpoints carry 0 (no admissible
    stencil there and they are excluded from certificate statistics)."""
    core = second_difference_values(u)
    if u.domain.kind == "circle":
        return u.with_values(core)
    out = np.zeros(u.domain.n_points)
    out[1:-1] = core
    return u.with_values(out)


@dataclass(frozen=True)
class RegularityCertificate:
    """Discrete semiconcavity / C^{1,1} constants read off second differences."""

    semiconcavity_constant: float
    semiconvexity_constant: float
    c11_constant: float
    max_step: float


def regularity_certificate(u: GridFunction) -> RegularityCertificate:
    h = u.domain.spacing
    d2 = second_difference_values(u)
    if d2.size == 0:
        sc = sv = c11 = 0.0
    else:
        two_h2 = 2.0 * h * h
        sc = max(0.0, float(np.max(d2)) / two_h2)
        sv = max(0.0, -float(np.min(d2)) / two_h2)
        c11 = float(np.max(np.abs(d2))) / (h * h)
    v = u.values
    if u.domain.kind == "circle":
        steps = np.abs(np.roll(v, -1) - v)
    else:
        steps = np.abs(v[1:] - v[:-1])
    return RegularityCertificate(sc, sv, c11, float(np.max(steps)))


def sup_distance(u: GridFunction, v: GridFunction) -> float:
    require_same_domain(u, v)
    return float(np.max(np.abs(u.values - v.values)))


def third_difference_values(u: GridFunction) -> np.ndarray:
    """Third differences (stencil [-1, 3, -3, 1]); empty when the interval is
    too short.  Used as a smoothness proxy by the mollifier reports."""
    v = u.values
    if u.domain.kind == "circle":
        return np.roll(v, -2) - 3.0 * np.roll(v, -1) + 3.0 * v - np.roll(v, 1)
    if v.size < 4:
        return np.zeros(0)
    return v[3:] - 3.0 * v[2:-1] + 3.0 * v[1:-2] - v[:-3]


def fourth_difference_values(u: GridFunction) -> np.ndarray:
    v = u.values
    if u.domain.kind == "circle":
        return (
            np.roll(v, -2) - 4.0 * np.roll(v, -1) + 6.0 * v
            - 4.0 * np.roll(v, 1) + np.roll(v, 2)
        )
    if v.size < 5:
        return np.zeros(0)
    return v[4:] - 4.0 * v[3:-1] + 6.0 * v[2:-2] - 4.0 * v[1:-3] + v[:-4]


def write_csv(u: GridFunction, path) -> None:
    """Serialize as ``x,value`` rows with %.17g formatting (lossless for
    float64, so a round trip is bit-identical)."""
    x = u.domain.coords
    with open(path, "w", newline="\n") as fh:
        fh.write("x,value\n")
        for xi, vi in zip(x, u.values):
            fh.write(f"{xi:.17g},{vi:.17g}\n")


def read_csv(path, domain: GridDomain) -> GridFunction:
    vals = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header.split(",")[:2] != ["x", "value"]:
            raise PreconditionError(f"bad grid-function CSV header {header!r}")
        for line in fh:
            line = line.strip()
            if line:
                vals.append(float(line.split(",")[1]))
    if len(vals) != domain.n_points:
        raise PreconditionError(
            f"CSV has {len(vals)} rows, domain has {domain.n_points} nodes"
        )
    return GridFunction(domain, np.array(vals))
