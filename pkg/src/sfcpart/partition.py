"""SFC partitions, shapes, c-boundaries, cell classes and classification.

Boundary pieces are handled as canonical face keys ``(depth, values, mask)``
(see :meth:`geometry.Subcube.key`). A c-face of a cell is split into pieces
by whatever finer cells of the grid sit across it; a piece belongs to the
boundary when no other cell of the set contains it.
"""
from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Iterable

from .geometry import Box, GeometryError, SpaceParams, Subcube, children, iter_ancestors
from .sfc import CurveSpec, curve as make_curve, order_cells
from .spacetree import (
    Grid,
    GridError,
    cells_from_json,
    cells_to_json,
    coverage,
    maximal_boxes,
    minimal_grid,
    params_from_json,
    restrict,
)


class PartitionError(ValueError):
    pass


class NotContiguous(PartitionError):
    pass


_OUT, _CELL, _SPLIT = 0, 1, 2


def _face_parent(key, k):
    l, vals, mask = key
    return (l - 1, tuple(v // k for v in vals), mask)


class BoundaryIndex:
    """Boundary ownership for a cell set ``X`` inside a grid.

    ``grid`` defaults to the minimal grid of ``X``. The index can follow
    subdivisions of cells of ``X`` in place (see :meth:`subdivide`).
    """

    def __init__(self, X: Iterable[Box], grid: Grid | None = None,
                 params: SpaceParams | None = None):
        X = X if isinstance(X, (set, frozenset)) else set(X)
        if not X:
            raise PartitionError("empty cell set")
        if grid is None:
            grid = minimal_grid(X, params)
        self.params = grid.params
        self.X = set(X)
        self.cells = set(grid.cells)
        self.nodes = set(grid.nodes)
        if not self.X <= self.cells:
            raise PartitionError("every box of the set must be a cell of the grid")
        self.full = coverage(self.params, self.X) == 1
        d = self.params.d
        self._faces = {
            c: [(axes, sides) for axes in combinations(range(d), c)
                for sides in product((0, 1), repeat=c)]
            for c in range(1, d + 1)
        }

    def subdivide(self, g: Box) -> list[Box]:
        if g not in self.X:
            raise PartitionError(f"{g} is not in the set")
        kids = children(g)
        self.X.remove(g)
        self.X.update(kids)
        self.cells.remove(g)
        self.cells.update(kids)
        self.nodes.add(g)
        return kids

    def _locate(self, m: Box):
        if m in self.cells:
            return _CELL, m
        if m in self.nodes:
            return _SPLIT, m
        for a in iter_ancestors(m):
            if a in self.cells:
                return _CELL, a
        raise GridError(f"{m} not covered by the grid")

    def owned(self, g: Box, axes: tuple[int, ...], sides: tuple[int, ...]) -> list:
        """Face keys of the pieces of face (axes, sides) of ``g`` on the boundary."""
        p = self.params
        k = p.k
        l, a = g.depth, g.coords
        n = k ** l
        vals = list(a)
        mask = 0
        for i, s in zip(axes, sides):
            vals[i] = a[i] + s
            mask |= 1 << i
        xkey = (l, tuple(vals), mask)
        if self.full:
            for i, s in zip(axes, sides):
                if (s == 0 and a[i] != 0) or (s == 1 and a[i] != n - 1):
                    return []
            return [xkey]
        c = len(axes)
        splits = []
        for r in range(1, c + 1):
            for tau in combinations(range(c), r):
                b = list(a)
                inside = True
                for t in tau:
                    i = axes[t]
                    b[i] += 1 if sides[t] else -1
                    if not 0 <= b[i] < n:
                        inside = False
                        break
                if not inside:
                    continue
                kind, h = self._locate(Box(l, tuple(b), p))
                if kind == _CELL:
                    if h in self.X:
                        return []
                else:
                    splits.append(h)
        if not splits:
            return [xkey]
        tilings = [self._tiling(m, axes, vals, mask, l) for m in splits]
        pieces = set()
        for t in tilings:
            pieces.update(t)
        inner = set()
        for s in pieces:
            q = s
            while q[0] > l:
                q = _face_parent(q, k)
                if q in inner:
                    break
                inner.add(q)
        out = []
        for s in pieces:
            if s in inner:
                continue
            mine = True
            for t in tilings:
                q = s
                while q not in t:
                    q = _face_parent(q, k)
                if t[q] in self.X:
                    mine = False
                    break
            if mine:
                out.append(s)
        return out

    def _tiling(self, m: Box, axes, vals, mask, l) -> dict:
        """Pieces of the face lying on ``m``'s side, mapped to their cells."""
        p = self.params
        k = p.k
        d = p.d
        out = {}
        stack = [m]
        while stack:
            u = stack.pop()
            D = u.depth + 1
            scale = k ** (D - l)
            ranges = []
            for i in range(d):
                if mask >> i & 1:
                    pos = vals[i] * scale
                    ranges.append((pos,) if pos == u.coords[i] * k else (pos - 1,))
                else:
                    ranges.append(range(u.coords[i] * k, u.coords[i] * k + k))
            for co in product(*ranges):
                ch = Box(D, co, p)
                if ch in self.cells:
                    kv = tuple(vals[i] * scale if mask >> i & 1 else co[i] for i in range(d))
                    out[(D, kv, mask)] = ch
                elif ch in self.nodes:
                    stack.append(ch)
                else:
                    raise GridError(f"{ch} not covered by the grid")
        return out

    def owned_codim(self, g: Box, c: int) -> list:
        if c == 0:
            return [(g.depth, g.coords, 0)]
        out = []
        for axes, sides in self._faces[c]:
            out.extend(self.owned(g, axes, sides))
        return out

    def has_codim(self, g: Box, c: int) -> bool:
        if c == 0:
            return True
        return any(self.owned(g, axes, sides) for axes, sides in self._faces[c])

    def class_of(self, g: Box) -> int:
        for c in range(self.params.d, 0, -1):
            if self.has_codim(g, c):
                return c
        return 0

    def facets(self, g: Box) -> dict[tuple[int, int], list]:
        """Owned facet pieces per (axis, side)."""
        out = {}
        for (i,), (s,) in self._faces[1]:
            got = self.owned(g, (i,), (s,))
            if got:
                out[(i, s)] = got
        return out

    def has_parallel_facets(self, g: Box) -> bool:
        f = self.facets(g)
        return any((i, 0) in f and (i, 1) in f for i in range(self.params.d))

    def facet_count(self, g: Box) -> int:
        return sum(len(v) for v in self.facets(g).values())

    def boundary(self, c: int) -> set:
        out = set()
        for g in self.X:
            out.update(self.owned_codim(g, c))
        return out

    def _domain_face_count(self, g: Box, c: int) -> int:
        # full-domain sets own exactly the faces lying on the cube's boundary
        n = self.params.k ** g.depth - 1
        e = [(x == 0) + (x == n) for x in g.coords]
        poly = [1] + [0] * c
        for v in e:
            if v:
                for j in range(c, 0, -1):
                    poly[j] += v * poly[j - 1]
        return poly[c]

    def _counts_by_depth(self, c: int) -> Counter:
        by_depth = Counter()
        if self.full:
            for g in self.X:
                by_depth[g.depth] += self._domain_face_count(g, c)
        else:
            for g in self.X:
                for key in self.owned_codim(g, c):
                    by_depth[key[0]] += 1
        return by_depth

    def boundary_size(self, c: int) -> int:
        """|boundary of codim c|; pieces are owned by exactly one cell."""
        if c == 0:
            return len(self.X)
        return sum(self._counts_by_depth(c).values())

    def boundary_measure(self, c: int) -> Fraction:
        k, d = self.params.k, self.params.d
        by_depth = Counter(g.depth for g in self.X) if c == 0 else self._counts_by_depth(c)
        return sum((Fraction(n, k ** (l * (d - c))) for l, n in by_depth.items()), Fraction(0))


@dataclass(frozen=True)
class FaceSet:
    params: SpaceParams
    codim: int
    keys: frozenset

    @property
    def faces(self) -> list[Subcube]:
        return sorted(Subcube.from_key(self.params, key) for key in self.keys)

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, s: Subcube) -> bool:
        return s.key() in self.keys

    def measure(self) -> Fraction:
        k, d = self.params.k, self.params.d
        return sum((Fraction(1, k ** (l * (d - self.codim))) for l, _, _ in self.keys), Fraction(0))


def boundary(X: Iterable[Box], c: int, grid: Grid | None = None) -> FaceSet:
    idx = BoundaryIndex(X, grid)
    return FaceSet(idx.params, c, frozenset(idx.boundary(c)))


def cell_boundary(X: Iterable[Box], g: Box, c: int, grid: Grid | None = None) -> FaceSet:
    idx = BoundaryIndex(X, grid)
    if g not in idx.X:
        raise PartitionError(f"{g} is not in the set")
    return FaceSet(idx.params, c, frozenset(idx.owned_codim(g, c)))


def class_of(X: Iterable[Box], g: Box, grid: Grid | None = None) -> int:
    return BoundaryIndex(X, grid).class_of(g)


@dataclass(frozen=True)
class Partition:
    """Cells of a host grid; contiguous in curve order when a curve is attached."""

    grid: Grid
    cells: frozenset
    curve: CurveSpec | None = None
    interval: tuple[int, int] | None = None

    @property
    def params(self) -> SpaceParams:
        return self.grid.params

    def __len__(self) -> int:
        return len(self.cells)


def partition(G: Grid, curve: CurveSpec, i: int, j: int) -> Partition:
    """Cells ``i..j`` (1-based, inclusive) of the discrete curve on ``G``."""
    seq = order_cells(curve, G)
    if not 1 <= i <= j <= len(seq):
        raise PartitionError(f"range [{i}, {j}] outside [1, {len(seq)}]")
    return Partition(G, frozenset(seq[i - 1:j]), curve, (i, j))


def partition_from_cells(cells: Iterable[Box], grid: Grid | None = None,
                         curve: CurveSpec | None = None) -> Partition:
    """Explicit cell set; contiguity is enforced only when a curve is given."""
    cells = frozenset(cells)
    if not cells:
        raise PartitionError("empty partition")
    if grid is None:
        grid = minimal_grid(cells)
    if not cells <= grid.cells:
        raise PartitionError("partition cells must be cells of the grid")
    interval = None
    if curve is not None:
        seq = order_cells(curve, grid)
        idx = [n for n, g in enumerate(seq) if g in cells]
        if idx[-1] - idx[0] + 1 != len(idx):
            raise NotContiguous(f"cells are not consecutive under {curve.family}")
        interval = (idx[0] + 1, idx[-1] + 1)
    return Partition(grid, cells, curve, interval)


def shape(X: Iterable[Box]) -> frozenset:
    """Maximal boxes inside content(X)."""
    cur = maximal_boxes(X)
    if not cur:
        return frozenset()
    p = next(iter(cur)).params
    kd = p.k ** p.d
    by_depth = defaultdict(set)
    for b in cur:
        by_depth[b.depth].add(b)
    for l in range(max(by_depth), 0, -1):
        groups = defaultdict(list)
        for b in by_depth.get(l, ()):
            groups[Box(l - 1, tuple(c // p.k for c in b.coords), p)].append(b)
        for par, kids in groups.items():
            if len(kids) == kd:
                by_depth[l].difference_update(kids)
                by_depth[l - 1].add(par)
    return frozenset(b for bs in by_depth.values() for b in bs)


def is_preclassified(X: Iterable[Box], grid: Grid | None = None) -> bool:
    """No boundary facet of any cell is cut into smaller pieces."""
    idx = BoundaryIndex(X, grid)
    for g in idx.X:
        for pieces in idx.facets(g).values():
            if any(s[0] != g.depth for s in pieces):
                return False
    return True


def is_classified(X: Iterable[Box], grid: Grid | None = None) -> bool:
    idx = BoundaryIndex(X, grid)
    for g in idx.X:
        f = idx.facets(g)
        if any(s[0] != g.depth for pieces in f.values() for s in pieces):
            return False
        if sum(len(v) for v in f.values()) != idx.class_of(g):
            return False
    return True


def boundary_hats(X: Iterable[Box], grid: Grid | None = None) -> set[Box]:
    """For every boundary facet piece, the box inside the set having it as a whole facet."""
    idx = BoundaryIndex(X, grid)
    p = idx.params
    hats = set()
    for g in idx.X:
        for (i, s), pieces in idx.facets(g).items():
            for D, vals, _ in pieces:
                co = list(vals)
                if s == 1:
                    co[i] -= 1
                hats.add(Box(D, tuple(co), p))
    return hats


def _cells_of(P) -> frozenset:
    return P.cells if isinstance(P, Partition) else frozenset(P)


def preclassify(P) -> frozenset:
    """Refine the partition towards its boundary until it is pre-classified."""
    X = _cells_of(P)
    hats = boundary_hats(X)
    G = minimal_grid(X | hats)
    return restrict(G, X)


@dataclass
class ClassifiedView:
    base: Partition | None
    preclassified_cells: frozenset
    classified_cells: frozenset
    classes: dict = field(default_factory=dict)
    nonclassified: frozenset = frozenset()

    def histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(self.classes.values()).items()))

    def ds(self) -> int:
        return sum(self.classes.values())


def nonclassified_cells(X: Iterable[Box], criterion: str = "parallel") -> frozenset:
    """Cells owning a parallel facet pair, or (``criterion='count'``) more facets than their class."""
    idx = BoundaryIndex(X)
    if criterion == "parallel":
        return frozenset(g for g in idx.X if idx.has_parallel_facets(g))
    if criterion == "count":
        return frozenset(g for g in idx.X if idx.facet_count(g) > idx.class_of(g))
    raise ValueError(f"unknown criterion {criterion!r}")


def classify(P, criterion: str = "parallel") -> ClassifiedView:
    X = _cells_of(P)
    pt = preclassify(X)
    bad = nonclassified_cells(pt, criterion)
    star = set(pt - bad)
    for g in bad:
        star.update(children(g))
    star = frozenset(star)
    idx = BoundaryIndex(star)
    classes = {g: idx.class_of(g) for g in star}
    base = P if isinstance(P, Partition) else None
    return ClassifiedView(base, pt, star, classes, bad)


def class_table(Q: Iterable[Box]) -> dict[tuple[int, int], int]:
    """A(l, r): number of class-r cells of depth l in the classification of Q."""
    view = classify(frozenset(Q))
    return dict(sorted(Counter((g.depth, r) for g, r in view.classes.items()).items()))


@dataclass(frozen=True)
class GrowthRecord:
    M: int
    dv: int
    ds: int
    dv_star: int
    ds_star: int
    nonclassified: int

    @property
    def dv_delta(self) -> int:
        return self.dv_star - self.dv

    @property
    def ds_delta(self) -> int:
        return self.ds_star - self.ds


def classification_growth(family: Iterable[tuple[int, Iterable[Box]]]) -> list[GrowthRecord]:
    """Volume/surface added by classification for partitions indexed by depth M."""
    out = []
    for M, X in family:
        X = frozenset(X)
        view = classify(X)
        ds0 = BoundaryIndex(X).boundary_size(1)
        out.append(GrowthRecord(M, len(X), ds0, len(view.classified_cells),
                                view.ds(), len(view.nonclassified)))
    return out


def partition_to_json(P: Partition) -> str:
    p = P.params
    if P.curve is not None and P.interval is not None:
        payload = {"k": p.k, "d": p.d, "cells": cells_to_json(P.grid.cells),
                   "curve": P.curve.family, "range": list(P.interval)}
    else:
        payload = {"k": p.k, "d": p.d, "cells": cells_to_json(P.cells)}
        if P.grid != minimal_grid(P.cells):
            payload["grid"] = cells_to_json(P.grid.cells)
    return json.dumps(payload, separators=(",", ":")) + "\n"


def partition_from_json(text: str) -> Partition:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PartitionError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    params = params_from_json(obj)
    cells = cells_from_json(params, obj.get("cells"), "$.cells")
    if "range" in obj:
        rng = obj["range"]
        if not (isinstance(rng, list) and len(rng) == 2 and all(isinstance(v, int) for v in rng)):
            raise PartitionError("$.range: expected [i, j]")
        fam = obj.get("curve")
        if not isinstance(fam, str):
            raise PartitionError("$.curve: required together with $.range")
        c = make_curve(fam, params.d)
        if c.params.k != params.k:
            raise PartitionError(f"$.curve: {fam} needs k={c.params.k}")
        G = Grid(params, cells)
        return partition(G, c, rng[0], rng[1])
    grid = None
    if "grid" in obj:
        grid = Grid(params, cells_from_json(params, obj["grid"], "$.grid"))
    c = None
    if isinstance(obj.get("curve"), str):
        c = make_curve(obj["curve"], params.d)
    try:
        return partition_from_cells(cells, grid, c)
    except GeometryError as exc:
        raise PartitionError(str(exc)) from exc


def classified_to_json(view: ClassifiedView) -> str:
    cells = sorted(view.classified_cells)
    p = cells[0].params
    payload = {
        "k": p.k,
        "d": p.d,
        "preclassified": cells_to_json(view.preclassified_cells),
        "cells": [{"l": g.depth, "x": list(g.coords), "class": view.classes[g]} for g in cells],
        "histogram": {str(c): n for c, n in view.histogram().items()},
    }
    return json.dumps(payload, separators=(",", ":")) + "\n"


def random_partition(curve: CurveSpec, seed: int, subdivisions: tuple[int, int] = (1, 24),
                     max_depth: int = 6) -> Partition:
    """Seeded random grid with a random curve interval on it."""
    import random

    from .spacetree import random_grid

    rng = random.Random(seed)
    T = rng.randint(*subdivisions)
    G = random_grid(curve.params, T, rng.randrange(2 ** 32), max_depth)
    n = len(G.cells)
    i, j = sorted((rng.randint(1, n), rng.randint(1, n)))
    return partition(G, curve, i, j)
