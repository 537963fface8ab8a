"""Discrete and continuous volume/surface measures of cell sets."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .geometry import Box
from .partition import BoundaryIndex, Partition
from .spacetree import Grid


class MetricsError(ValueError):
    pass


def _frac(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class MeasureReport:
    dv: int
    ds: int
    cv: Fraction
    cs: Fraction
    dr: Fraction
    diameter: Fraction
    extra: tuple = ()

    def as_dict(self) -> dict:
        out = {"dv": self.dv, "ds": self.ds, "cv": _frac(self.cv), "cs": _frac(self.cs),
               "dr": _frac(self.dr), "diameter": _frac(self.diameter)}
        for name, value in self.extra:
            out[name] = _frac(value) if isinstance(value, Fraction) else value
        return out

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), separators=(",", ":")) + "\n"


def _index(X, grid: Grid | None) -> BoundaryIndex:
    if isinstance(X, Grid):
        return BoundaryIndex(X.cells, X)
    if isinstance(X, Partition):
        X = X.cells
    return BoundaryIndex(X, grid)


def dv(X) -> int:
    if isinstance(X, (Grid, Partition)):
        return len(X.cells)
    return len(set(X))


def ds(X, grid: Grid | None = None) -> int:
    """Number of facet pieces on the boundary; intrinsic unless ``grid`` is given."""
    return _index(X, grid).boundary_size(1)


def cv(X) -> Fraction:
    if isinstance(X, (Grid, Partition)):
        X = X.cells
    return sum((b.volume for b in X), Fraction(0))


def cv_boundary(X, c: int, grid: Grid | None = None):
    """(d-c)-measure of the c-boundary; an integer count when c = d."""
    idx = _index(X, grid)
    if c == idx.params.d:
        return idx.boundary_size(c)
    return idx.boundary_measure(c)


def diameter(X) -> Fraction:
    """Sup-norm diameter of content(X): the widest axis of its bounding box."""
    if isinstance(X, (Grid, Partition)):
        X = X.cells
    X = list(X)
    if not X:
        raise MetricsError("empty set has no diameter")
    k, d = X[0].params.k, X[0].params.d
    D = max(b.depth for b in X)
    lo = [None] * d
    hi = [None] * d
    for b in X:
        s = k ** (D - b.depth)
        for i, c in enumerate(b.coords):
            a, e = c * s, (c + 1) * s
            if lo[i] is None or a < lo[i]:
                lo[i] = a
            if hi[i] is None or e > hi[i]:
                hi[i] = e
    return Fraction(max(h - l for l, h in zip(lo, hi)), k ** D)


def measure(X, grid: Grid | None = None, codims: Iterable[int] = ()) -> MeasureReport:
    idx = _index(X, grid)
    n = len(idx.X)
    s = idx.boundary_size(1)
    cells = idx.X
    extra = []
    for c in codims:
        extra.append((f"cv_boundary_{c}",
                      idx.boundary_size(c) if c == idx.params.d else idx.boundary_measure(c)))
    return MeasureReport(
        dv=n,
        ds=s,
        cv=sum((b.volume for b in cells), Fraction(0)),
        cs=idx.boundary_measure(1),
        dr=Fraction(s, n),
        diameter=diameter(cells),
        extra=tuple(extra),
    )


def bound_constant(k: int, d: int, c: int) -> Fraction:
    """U = 2 k^d / (1 - k^(c-d)) for 0 <= c < d."""
    if not 0 <= c < d:
        raise MetricsError(f"codimension must lie in [0, {d}), got {c}")
    return Fraction(2 * k ** d) / (1 - Fraction(1, k ** (d - c)))


@dataclass(frozen=True)
class BoundsCheck:
    ok: bool
    value: Fraction
    lower: Fraction
    upper: Fraction

    @property
    def lower_ok(self) -> bool:
        return self.lower <= self.value

    @property
    def upper_ok(self) -> bool:
        return self.value <= self.upper


def continuous_bounds_check(X, c: int) -> BoundsCheck:
    """delta^(d-c)/U <= cv(boundary_c X) <= U delta^(d-c)."""
    if isinstance(X, (Grid, Partition)):
        X = X.cells
    X = frozenset(X)
    p = next(iter(X)).params
    U = bound_constant(p.k, p.d, c)
    delta = diameter(X)
    value = Fraction(cv_boundary(X, c))
    lower = delta ** (p.d - c) / U
    upper = U * delta ** (p.d - c)
    return BoundsCheck(lower <= value <= upper, value, lower, upper)


def quasi_optimality_constant_pow(k: int, d: int) -> Fraction:
    """C**d for cs(P) <= C cv(P)**(1 - 1/d), with C = U_1 U_0**(1 - 1/d)."""
    U0 = bound_constant(k, d, 0)
    U1 = bound_constant(k, d, 1)
    return U1 ** d * U0 ** (d - 1)


def quasi_optimality_check(X) -> tuple[bool, float]:
    """Exact check of cs^d <= C^d cv^(d-1); also returns cs / cv^(1-1/d)."""
    if isinstance(X, (Grid, Partition)):
        X = X.cells
    X = frozenset(X)
    p = next(iter(X)).params
    d = p.d
    vol = cv(X)
    surf = Fraction(cv_boundary(X, 1))
    ok = surf ** d <= quasi_optimality_constant_pow(p.k, d) * vol ** (d - 1)
    return ok, float(surf) / float(vol) ** (1 - 1 / d)
