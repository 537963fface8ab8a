"""Table-driven space-filling curves and the discrete curves they induce on grids.

A curve family is a finite state machine. Each state is a symmetry of the
child lattice ``[0, k)^d`` (an axis permutation plus reflections); the base
motif lists the children in visiting order and every child carries the
transform its own sub-curve is drawn with.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import product
from typing import Iterable, Sequence

from .geometry import (
    Box,
    GeometryError,
    ParamMismatch,
    SpaceParams,
    adjacent,
    ancestor,
    children,
    contains,
    lca,
    root,
    space,
)
from .spacetree import Grid, refines

CURVE_FAMILIES = ("hilbert2d", "peano", "morton")


class CurveError(ValueError):
    pass


class UnsupportedCurve(CurveError):
    pass


class Relation(str, Enum):
    BEFORE = "before"
    AFTER = "after"
    NESTED = "nested"


# (perm, flips): y[i] = x[perm[i]], reflected when flips[i]
Transform = tuple[tuple[int, ...], tuple[bool, ...]]


def _identity(d: int) -> Transform:
    return tuple(range(d)), (False,) * d


def _apply(t: Transform, x: Sequence[int], k: int) -> tuple[int, ...]:
    perm, flips = t
    return tuple(k - 1 - x[p] if f else x[p] for p, f in zip(perm, flips))


def _compose(t1: Transform, t2: Transform) -> Transform:
    """t1 after t2."""
    p1, f1 = t1
    p2, f2 = t2
    return (tuple(p2[p1[i]] for i in range(len(p1))),
            tuple(f1[i] != f2[p1[i]] for i in range(len(p1))))


@dataclass(frozen=True)
class CurveTables:
    k: int
    d: int
    # order[s][r] = (child coords, next state) for the r-th visited child
    order: tuple[tuple[tuple[tuple[int, ...], int], ...], ...]
    # rank[s][coords] = (r, next state)
    rank: tuple[dict, ...]

    @property
    def n_states(self) -> int:
        return len(self.order)


def _build_tables(k: int, d: int, base: list[tuple[int, ...]],
                  child_t: list[Transform]) -> CurveTables:
    if sorted(base) != sorted(product(range(k), repeat=d)):
        raise CurveError("base motif must visit every child exactly once")
    states = [_identity(d)]
    index = {states[0]: 0}
    order = []
    i = 0
    while i < len(states):
        t = states[i]
        row = []
        for b, ct in zip(base, child_t):
            nt = _compose(t, ct)
            if nt not in index:
                index[nt] = len(states)
                states.append(nt)
            row.append((_apply(t, b, k), index[nt]))
        order.append(tuple(row))
        i += 1
    rank = tuple({c: (r, s) for r, (c, s) in enumerate(row)} for row in order)
    return CurveTables(k, d, tuple(order), rank)


def _hilbert2d() -> CurveTables:
    base = [(0, 0), (0, 1), (1, 1), (1, 0)]
    swap = ((1, 0), (False, False))
    anti = ((1, 0), (True, True))
    ident = _identity(2)
    return _build_tables(2, 2, base, [swap, ident, ident, anti])


def _peano(d: int) -> CurveTables:
    base, child_t = [], []
    for t in product(range(3), repeat=d):
        x = []
        for j, tj in enumerate(t):
            x.append(tj if sum(x) % 2 == 0 else 2 - tj)
        s = sum(x)
        base.append(tuple(x))
        child_t.append((tuple(range(d)), tuple((s - xj) % 2 == 1 for xj in x)))
    return _build_tables(3, d, base, child_t)


def _morton(d: int) -> CurveTables:
    base = list(product(range(2), repeat=d))
    return _build_tables(2, d, base, [_identity(d)] * len(base))


@lru_cache(maxsize=None)
def tables(family: str, d: int) -> CurveTables:
    if family == "hilbert2d":
        if d != 2:
            raise UnsupportedCurve("hilbert2d is only defined for d=2")
        return _hilbert2d()
    if family == "peano":
        return _peano(d)
    if family == "morton":
        return _morton(d)
    raise UnsupportedCurve(f"unknown curve family {family!r}")


@dataclass(frozen=True)
class CurveSpec:
    family: str
    params: SpaceParams
    base_orientation: str = "origin"
    continuous: bool = True

    @property
    def tables(self) -> CurveTables:
        return tables(self.family, self.params.d)


def curve(family: str, d: int = 2, max_depth_cap: int | None = None) -> CurveSpec:
    """Build a curve spec; ``k`` is implied by the family."""
    if family not in CURVE_FAMILIES:
        raise UnsupportedCurve(f"unknown curve family {family!r}; choose from {CURVE_FAMILIES}")
    if family == "hilbert2d" and d != 2:
        raise UnsupportedCurve("hilbert2d is only defined for d=2")
    k = 3 if family == "peano" else 2
    p = space(k, d) if max_depth_cap is None else space(k, d, max_depth_cap)
    return CurveSpec(family, p, continuous=family != "morton")


def _check_space(c: CurveSpec, p: SpaceParams) -> None:
    if c.params.k != p.k or c.params.d != p.d:
        raise ParamMismatch(f"curve {c.family} needs (k={c.params.k}, d={c.params.d}), "
                            f"got (k={p.k}, d={p.d})")


def _digits(b: Box, k: int) -> list[tuple[int, ...]]:
    """Child digit at each level, root to ``b``."""
    out = []
    coords = b.coords
    for _ in range(b.depth):
        out.append(tuple(c % k for c in coords))
        coords = tuple(c // k for c in coords)
    out.reverse()
    return out


def path_key(c: CurveSpec, b: Box) -> tuple[int, ...]:
    """Visiting ranks from the root down to ``b``.

    Boxes compare in curve order by their keys; a prefix means containment.
    """
    _check_space(c, b.params)
    t = c.tables
    s = 0
    out = []
    for dig in _digits(b, t.k):
        r, s = t.rank[s][dig]
        out.append(r)
    return tuple(out)


def state_of(c: CurveSpec, b: Box) -> int:
    t = c.tables
    s = 0
    for dig in _digits(b, t.k):
        s = t.rank[s][dig][1]
    return s


def compare(c: CurveSpec, u: Box, v: Box) -> Relation:
    """Order of two boxes under the curve; nested when one contains the other."""
    _check_space(c, u.params)
    _check_space(c, v.params)
    if contains(u, v) or contains(v, u):
        return Relation.NESTED
    w = lca(u, v)
    s = state_of(c, w)
    t = c.tables
    k = t.k
    cu = ancestor(u, w.depth + 1).coords
    cv = ancestor(v, w.depth + 1).coords
    ru = t.rank[s][tuple(x % k for x in cu)][0]
    rv = t.rank[s][tuple(x % k for x in cv)][0]
    return Relation.BEFORE if ru < rv else Relation.AFTER


def order_cells(c: CurveSpec, G: Grid) -> list[Box]:
    """The discrete curve on ``G``: its cells in visiting order."""
    _check_space(c, G.params)
    t = c.tables
    k, p = t.k, G.params
    cells, nodes = G.cells, G.nodes
    out: list[Box] = []
    r = root(p)
    if r in cells:
        return [r]
    stack = [(r, 0)]
    while stack:
        b, s = stack.pop()
        base = [x * k for x in b.coords]
        l = b.depth + 1
        kids = []
        for dig, ns in t.order[s]:
            ch = Box(l, tuple(x + o for x, o in zip(base, dig)), p)
            kids.append((ch, ns))
        for ch, ns in reversed(kids):
            if ch in cells:
                stack.append((ch, -1))
            elif ch in nodes:
                stack.append((ch, ns))
            else:
                raise GeometryError(f"{ch} is neither cell nor node of the grid")
        while stack and stack[-1][1] == -1:
            out.append(stack.pop()[0])
    return out


def regular_order(c: CurveSpec, M: int) -> list[tuple[int, ...]]:
    """Coordinates of the depth-M regular grid in curve order."""
    t = c.tables
    k, d = t.k, t.d
    level = [((0,) * d, 0)]
    for _ in range(M):
        nxt = []
        for coords, s in level:
            base = [x * k for x in coords]
            for dig, ns in t.order[s]:
                nxt.append((tuple(x + o for x, o in zip(base, dig)), ns))
        level = nxt
    return [co for co, _ in level]


@dataclass
class Dsfc:
    """A discrete space-filling curve: a grid with an ordering of its cells."""

    grid: Grid
    sequence: tuple[Box, ...]
    curve: CurveSpec | None = None

    def __post_init__(self):
        self.sequence = tuple(self.sequence)
        if len(self.sequence) != len(self.grid.cells) or set(self.sequence) != self.grid.cells:
            raise CurveError("sequence must list every grid cell exactly once")
        self._index = None

    def index_of(self, g: Box) -> int:
        if self._index is None:
            self._index = {b: i for i, b in enumerate(self.sequence)}
        return self._index[g]

    def __len__(self) -> int:
        return len(self.sequence)


def dsfc(c: CurveSpec, G: Grid) -> Dsfc:
    return Dsfc(G, order_cells(c, G), c)


def check_continuity(s: Dsfc) -> bool:
    seq = s.sequence
    return all(adjacent(seq[i], seq[i + 1]) for i in range(len(seq) - 1))


def _space_filling_from(seq: Sequence[Box], a: int, betas: Iterable[int]) -> bool:
    """For increasing ``betas``: lca(g_a, g_b) equals the fold of lca over g_a..g_b."""
    acc = seq[a]
    j = a
    for b in betas:
        while j < b:
            j += 1
            acc = lca(acc, seq[j])
        if lca(seq[a], seq[b]) != acc:
            return False
    return True


def check_space_filling(s: Dsfc, intervals: Iterable[tuple[int, int]] | None = None) -> bool:
    """Exhaustive O(n^2) check, or only the given (alpha, beta) index pairs."""
    seq = s.sequence
    n = len(seq)
    if intervals is None:
        return all(_space_filling_from(seq, a, range(a, n)) for a in range(n))
    by_start: dict[int, list[int]] = {}
    for a, b in intervals:
        if a > b:
            a, b = b, a
        by_start.setdefault(a, []).append(b)
    return all(_space_filling_from(seq, a, sorted(bs)) for a, bs in by_start.items())


def sample_intervals(n: int, count: int, seed: int) -> list[tuple[int, int]]:
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        a, b = rng.randrange(n), rng.randrange(n)
        out.append((min(a, b), max(a, b)))
    return out


def _node_spans(s: Dsfc) -> dict[Box, tuple[int, int]]:
    spans: dict[Box, tuple[int, int]] = {}
    for i, g in enumerate(s.sequence):
        b = g
        while True:
            lo, hi = spans.get(b, (i, i))
            spans[b] = (min(lo, i), max(hi, i))
            if b.depth == 0:
                break
            b = ancestor(b, b.depth - 1)
    return spans


def check_refinement_consistency(c: CurveSpec, G: Grid, G2: Grid,
                                 pairs: Iterable[tuple[Box, Box]] | None = None) -> bool:
    """Nodes of G keep their relative order when the curve is redrawn on G2.

    Node order is read off the two discrete curves: u precedes v when every
    cell below u comes before every cell below v.
    """
    if not refines(G2, G):
        raise CurveError("second grid must refine the first")
    s1, s2 = _node_spans(dsfc(c, G)), _node_spans(dsfc(c, G2))
    if pairs is None:
        ns = sorted(s1)
        pairs = ((u, v) for i, u in enumerate(ns) for v in ns[i + 1:])
    for u, v in pairs:
        if contains(u, v) or contains(v, u):
            continue
        a1, b1 = s1[u]
        a2, b2 = s1[v]
        before1 = b1 < a2
        if not before1 and not b2 < a1:
            return False
        a1, b1 = s2[u]
        a2, b2 = s2[v]
        before2 = b1 < a2
        if not before2 and not b2 < a1:
            return False
        if before1 != before2:
            return False
    return True
