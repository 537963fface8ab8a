"""Extremal volumes and surfaces, the gamma vertex weight, mu searches,
the surface-to-volume staircase, locality diagnostics and the reference table."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Iterable, Sequence

from .geometry import Box, SpaceParams, contains, root, space
from .generators import (
    cantor_grid,
    class_regular,
    hc,
    mu2_shape,
)
from .metrics import cv, cv_boundary, ds
from .partition import BoundaryIndex, class_table, shape
from .sfc import CurveSpec, order_cells, regular_order
from .spacetree import minimal_grid


class AnalysisError(ValueError):
    pass


class BudgetExceeded(AnalysisError):
    pass


class TableMismatch(AnalysisError):
    def __init__(self, mismatches):
        self.mismatches = mismatches
        lines = [f"{m.grid} M={m.M}: {m.what} measured {m.measured}, closed form {m.expected}"
                 for m in mismatches]
        super().__init__("; ".join(lines))


def rho(k: int, d: int) -> Fraction:
    return Fraction(k ** (d - 1) - 1, k ** d - 1)


@dataclass(frozen=True)
class AsymptoticProfile:
    k: int
    d: int
    c: int

    @property
    def rho(self) -> Fraction:
        return rho(self.k, self.d)

    @property
    def v_coeff(self) -> Fraction:
        """Leading coefficient of V_c per unit of cv(boundary_c Q) k^(M(d-c)), or per unit of gamma when c = d."""
        k, d, c = self.k, self.d, self.c
        if c == d:
            return Fraction(k ** d - 1)
        return Fraction(k ** d - 1, k ** (d - c) - 1)

    @property
    def s_coeff(self) -> Fraction:
        k, d, c = self.k, self.d, self.c
        if c == d:
            return Fraction(d * (k ** (d - 1) - 1))
        return Fraction(c * (k ** (d - 1) - 1), k ** (d - c) - 1)


def gamma(Q: Iterable[Box], M: int) -> int:
    """Sum over class-d cells of the classified shape of (M - depth)."""
    Q = shape(Q)
    table = class_table(Q)
    d = next(iter(Q)).params.d
    N = max(l for l, _ in table)
    if M < N:
        raise AnalysisError(f"M={M} is below the classification depth {N}")
    return sum(n * (M - l) for (l, r), n in table.items() if r == d)


@dataclass(frozen=True)
class VcSc:
    c: int
    M: int
    V: int
    S: int
    V_pred: Fraction
    S_pred: Fraction

    @property
    def R(self) -> Fraction:
        return Fraction(self.S, self.V)

    @property
    def v_residual(self) -> Fraction:
        return abs(self.V - self.V_pred) / self.V_pred if self.V_pred else Fraction(0)


def vcsc(Q: Iterable[Box], M: int, c: int) -> VcSc:
    """Exact V_c, S_c of H_c(Q, M) next to the leading-order predictions."""
    Q = shape(Q)
    p = next(iter(Q)).params
    k, d = p.k, p.d
    prof = AsymptoticProfile(k, d, c)
    if c == 0:
        # H_0 is every depth-M box of the shape; count instead of building
        star_depth = max(l for l, _ in class_table(Q))
        if M < star_depth:
            raise AnalysisError(f"M={M} is below the classification depth {star_depth}")
        V = sum(k ** (d * (M - q.depth)) for q in Q)
        S = int(cv_boundary(Q, 1) * k ** (M * (d - 1)))
    else:
        H = hc(Q, M, c)
        V, S = len(H), ds(H)
    if c == d:
        g = gamma(Q, M)
        return VcSc(c, M, V, S, prof.v_coeff * g, prof.s_coeff * g)
    base = Fraction(cv_boundary(Q, c)) * k ** (M * (d - c))
    return VcSc(c, M, V, S, prof.v_coeff * base, prof.s_coeff * base)


def shape_volumes(Q: Iterable[Box], M: int) -> tuple[int, ...]:
    """(V_0, ..., V_d, V_{d+1}) with V_{d+1} = M by convention."""
    Q = shape(Q)
    d = next(iter(Q)).params.d
    return tuple(vcsc(Q, M, c).V for c in range(d + 1)) + (M,)


# --- mu search -----------------------------------------------------------------------

@dataclass
class MuEstimate:
    c: int
    best: Fraction
    lower_bound: Fraction
    analytic_lower: Fraction | None
    analytic_upper: Fraction
    witness: frozenset
    shapes: int
    M: int | None = None

    @property
    def consistent(self) -> bool:
        lo_ok = self.analytic_lower is None or self.analytic_lower <= self.lower_bound
        return lo_ok and self.lower_bound <= self.analytic_upper


def mu_scale(k: int, d: int, c: int) -> Fraction:
    if c == d:
        return Fraction(k ** d - 1)
    return Fraction(k ** d - 1, k ** (d - c) - 1)


def mu_upper_unscaled(k: int, d: int, c: int) -> Fraction:
    """Sup bound on cv(boundary_c Q) from at most 2k^d shape boxes per depth."""
    if c == d:
        return Fraction(2 ** d * k ** d)
    return Fraction(2 * k ** d, k ** (d - c) - 1)


def curve_shapes(curve: CurveSpec, D: int, budget: int | None = None) -> dict[frozenset, tuple[Box, Box]]:
    """Shapes of all curve intervals spanned by two boxes of depth at most D."""
    p = curve.params
    boxes = [root(p)]
    frontier = [root(p)]
    from .geometry import children

    for _ in range(D):
        frontier = [ch for b in frontier for ch in children(b)]
        boxes.extend(frontier)
    out: dict[frozenset, tuple[Box, Box]] = {}
    pairs = 0
    for i, u in enumerate(boxes):
        for v in boxes[i:]:
            if u != v and (contains(u, v) or contains(v, u)):
                continue
            pairs += 1
            if budget is not None and pairs > budget:
                raise BudgetExceeded(f"more than {budget} box pairs")
            G = minimal_grid([u, v], p)
            seq = order_cells(curve, G)
            a, b = seq.index(u), seq.index(v)
            if a > b:
                a, b = b, a
            Q = shape(seq[a:b + 1])
            if Q not in out:
                out[Q] = (u, v)
    return out


def _witness_key(Q: frozenset):
    return sorted(Q)


def search_mu(curve: CurveSpec, c: int, D: int, M: int | None = None,
              budget: int | None = 200_000, extra_shapes: Iterable[frozenset] = ()) -> MuEstimate:
    p = curve.params
    k, d = p.k, p.d
    if not 0 <= c <= d:
        raise AnalysisError(f"codimension {c} outside [0, {d}]")
    shapes = list(curve_shapes(curve, D, budget))
    shapes.extend(frozenset(shape(Q)) for Q in extra_shapes)
    best, witness = None, None
    if c == d:
        if M is None:
            M = 2 * (D + 2)
        for Q in shapes:
            try:
                val = Fraction(gamma(Q, M), M * M)
            except AnalysisError:
                continue
            if best is None or val > best or (val == best and _witness_key(Q) < _witness_key(witness)):
                best, witness = val, Q
        return MuEstimate(c, best, best * mu_scale(k, d, c), None,
                          mu_upper_unscaled(k, d, c) * mu_scale(k, d, c), witness, len(shapes), M)
    for Q in shapes:
        val = Fraction(cv_boundary(Q, c))
        if best is None or val > best or (val == best and _witness_key(Q) < _witness_key(witness)):
            best, witness = val, Q
    s = mu_scale(k, d, c)
    return MuEstimate(c, best, best * s, Fraction(comb(d, c) * 2 ** c) * s,
                      mu_upper_unscaled(k, d, c) * s, witness, len(shapes))


# --- staircase -----------------------------------------------------------------------

def staircase(k: int, d: int, c: int, alpha: Fraction | None = None) -> Fraction:
    """c*rho on a plateau; (c - 1 + 1/alpha)*rho at V = alpha V_c, alpha > 1."""
    if not 0 <= c <= d:
        raise AnalysisError(f"regime {c} outside [0, {d}]")
    r = rho(k, d)
    if alpha is None:
        return c * r
    alpha = Fraction(alpha)
    if alpha <= 1:
        raise AnalysisError("alpha must exceed 1")
    if c == 0:
        raise AnalysisError("no descent below the c = 0 regime")
    return (c - 1 + 1 / alpha) * r


@dataclass(frozen=True)
class StairPoint:
    V: int
    R: Fraction
    regime: int
    alpha: Fraction | None


def staircase_at(V: int, volumes: Sequence[int], k: int, d: int) -> StairPoint:
    """Evaluate the staircase for finite volumes (V_0, ..., V_d, V_{d+1} = M)."""
    if len(volumes) != d + 2:
        raise AnalysisError("need V_0..V_{d+1}")
    M, V0 = volumes[d + 1], volumes[0]
    if not M <= V <= V0:
        raise AnalysisError(f"V={V} outside [{M}, {V0}]")
    if V <= volumes[d]:
        return StairPoint(V, staircase(k, d, d), d, None)
    for c in range(d, 0, -1):
        if volumes[c] < V <= volumes[c - 1]:
            alpha = Fraction(V, volumes[c])
            return StairPoint(V, staircase(k, d, c, alpha), c, alpha)
    raise AnalysisError("volumes are not non-increasing")


def staircase_sweep(volumes: Sequence[int], k: int, d: int, points: int = 64) -> list[StairPoint]:
    """Staircase over a log-spaced volume grid plus every regime breakpoint."""
    M, V0 = volumes[d + 1], volumes[0]
    grid = {M, V0, *volumes[:d + 1]}
    if points > 1 and V0 > M:
        lo, hi = math.log(M), math.log(V0)
        for i in range(points):
            grid.add(int(round(math.exp(lo + (hi - lo) * i / (points - 1)))))
    grid = sorted(v for v in grid if M <= v <= V0)
    return [staircase_at(V, volumes, k, d) for V in grid]


# --- locality --------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalityReport:
    M: int
    pairs: int
    max_ratio: Fraction
    bound: Fraction
    worst: tuple[int, int]

    @property
    def ok(self) -> bool:
        return self.max_ratio <= self.bound


def locality_check(curve: CurveSpec, M: int, samples: int | None, seed: int | None = None) -> LocalityReport:
    """Sup-distance of cell centres, to the d-th power, per curve-index gap.

    ratio(i, j) = d_inf(centre_i, centre_j)^d / ((|i - j| + 2) k^(-Md)),
    compared with U^d for U = 2k^d / (1 - k^(1-d)). ``samples=None`` checks
    every pair.
    """
    if not curve.continuous:
        raise AnalysisError(f"{curve.family} is not continuous")
    p = curve.params
    k, d = p.k, p.d
    seq = regular_order(curve, M)
    n = len(seq)
    U = Fraction(2 * k ** d) / (1 - Fraction(1, k ** (d - 1)))
    bound = U ** d

    def ratio(i, j):
        a, b = seq[i], seq[j]
        m = max(abs(x - y) for x, y in zip(a, b))
        return Fraction(m ** d, abs(i - j) + 2)

    best, worst, count = Fraction(0), (0, 0), 0
    if samples is None:
        it = ((i, j) for i in range(n) for j in range(i + 1, n))
    else:
        if seed is None:
            raise AnalysisError("sampled locality needs a seed")
        rng = random.Random(seed)
        it = ((rng.randrange(n), rng.randrange(n)) for _ in range(samples))
    for i, j in it:
        count += 1
        r = ratio(i, j)
        if r > best:
            best, worst = r, (min(i, j), max(i, j))
    return LocalityReport(M, count, best, bound, worst)


# --- reference table -------------------------------------------------------------------

@dataclass(frozen=True)
class TableSpec:
    name: str
    k: int
    d: int
    build: Callable[[int], object]
    dv: Callable[[int], int]
    ds: Callable[[int], int]
    limit: Fraction


def _k(c, r):
    return lambda M: class_regular(space(2, 2), c, r, M)


TABLE: tuple[TableSpec, ...] = (
    TableSpec("K(0,0,M)", 2, 2, _k(0, 0), lambda M: 4 ** M, lambda M: 2 * 2 ** M, Fraction(0)),
    TableSpec("K(1,1,M)", 2, 2, _k(1, 1), lambda M: 3 * 2 ** M - 2, lambda M: 2 ** M + 2 * M + 4,
              Fraction(1, 3)),
    TableSpec("K(1,2,M)", 2, 2, _k(1, 2), lambda M: 6 * 2 ** M - 3 * M - 5,
              lambda M: 2 * 2 ** M + 2 * M + 2, Fraction(1, 3)),
    TableSpec("K(2,2,M)", 2, 2, _k(2, 2), lambda M: 3 * M + 1, lambda M: 2 * M + 6, Fraction(2, 3)),
    TableSpec("Cantor(M)", 3, 2, cantor_grid, lambda M: 8 * 2 ** M - 7,
              lambda M: 2 * 2 ** M + 4 * M + 4, Fraction(1, 4)),
)


@dataclass(frozen=True)
class TableRow:
    grid: str
    k: int
    d: int
    M: int
    dv: int
    ds: int
    dv_expected: int
    ds_expected: int
    limit: Fraction

    @property
    def dr(self) -> Fraction:
        return Fraction(self.ds, self.dv)

    @property
    def matches(self) -> bool:
        return self.dv == self.dv_expected and self.ds == self.ds_expected


@dataclass(frozen=True)
class Mismatch:
    grid: str
    M: int
    what: str
    measured: int
    expected: int


def table_rows(max_M: int = 10, names: Iterable[str] | None = None,
               k: int | None = None, d: int | None = None, min_M: int = 1) -> list[TableRow]:
    names = set(names) if names is not None else None
    out = []
    for spec in TABLE:
        if names is not None and spec.name not in names:
            continue
        if (k is not None and spec.k != k) or (d is not None and spec.d != d):
            continue
        for M in range(min_M, max_M + 1):
            G = spec.build(M)
            out.append(TableRow(spec.name, spec.k, spec.d, M, len(G), ds(G),
                                spec.dv(M), spec.ds(M), spec.limit))
    return out


def table_mismatches(rows: Iterable[TableRow]) -> list[Mismatch]:
    out = []
    for r in rows:
        if r.dv != r.dv_expected:
            out.append(Mismatch(r.grid, r.M, "dv", r.dv, r.dv_expected))
        if r.ds != r.ds_expected:
            out.append(Mismatch(r.grid, r.M, "ds", r.ds, r.ds_expected))
    return out


def reproduce_table(max_M: int = 10, strict: bool = True, **kw) -> list[TableRow]:
    """Build every table grid, measure it and compare with the closed forms."""
    rows = table_rows(max_M, **kw)
    bad = table_mismatches(rows)
    if strict and bad:
        raise TableMismatch(bad)
    return rows
