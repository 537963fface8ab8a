"""Grids (finite tilings of the unit cube by k-adic boxes) and their space trees."""
from __future__ import annotations

import json
import random
from collections import defaultdict
from fractions import Fraction
from typing import Iterable, Iterator

from .geometry import (
    Box,
    GeometryError,
    ParamMismatch,
    SpaceParams,
    children,
    iter_ancestors,
    make_box,
    root,
    space,
)


class GridError(ValueError):
    pass


class InvalidGrid(GridError):
    pass


class Grid:
    """Immutable set of cells tiling the unit cube.

    The node set (strict ancestors of cells) is computed lazily and cached,
    as is the canonical cell order.
    """

    __slots__ = ("params", "cells", "_nodes", "_sorted", "_depth")

    def __init__(self, params: SpaceParams, cells: Iterable[Box]):
        self.params = params
        self.cells = cells if isinstance(cells, frozenset) else frozenset(cells)
        self._nodes = None
        self._sorted = None
        self._depth = None

    @property
    def nodes(self) -> frozenset[Box]:
        """Internal nodes of the space tree (cells excluded)."""
        if self._nodes is None:
            self._nodes = frozenset(_strict_ancestors(self.cells))
        return self._nodes

    @property
    def depth(self) -> int:
        if self._depth is None:
            self._depth = max((c.depth for c in self.cells), default=0)
        return self._depth

    def sorted_cells(self) -> list[Box]:
        if self._sorted is None:
            self._sorted = sorted(self.cells)
        return self._sorted

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self) -> Iterator[Box]:
        return iter(self.sorted_cells())

    def __contains__(self, box) -> bool:
        return box in self.cells

    def __eq__(self, other) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return self.params[:2] == other.params[:2] and self.cells == other.cells

    def __hash__(self) -> int:
        return hash(self.cells)

    def __repr__(self) -> str:
        return f"Grid(k={self.params.k}, d={self.params.d}, cells={len(self.cells)}, depth={self.depth})"

    def cell_containing(self, box: Box) -> Box | None:
        """The cell equal to or containing ``box``; None if ``box`` is split."""
        if box in self.cells:
            return box
        if box in self.nodes:
            return None
        for a in iter_ancestors(box):
            if a in self.cells:
                return a
        raise GridError(f"{box} is not covered by the grid")

    def all_nodes(self) -> frozenset[Box]:
        """Cells together with internal nodes."""
        return self.cells | self.nodes


def _strict_ancestors(boxes: Iterable[Box]) -> set[Box]:
    out: set[Box] = set()
    for b in boxes:
        for a in iter_ancestors(b):
            if a in out:
                break
            out.add(a)
    return out


def unit_grid(params: SpaceParams) -> Grid:
    return Grid(params, frozenset([root(params)]))


def subdivide(G: Grid, g: Box) -> Grid:
    if g not in G.cells:
        raise GridError(f"{g} is not a cell of the grid")
    cells = set(G.cells)
    cells.remove(g)
    cells.update(children(g))
    return Grid(G.params, frozenset(cells))


def coverage(params: SpaceParams, cells: Iterable[Box]) -> Fraction:
    """Total volume of ``cells`` (overlaps counted twice)."""
    cells = list(cells)
    if not cells:
        return Fraction(0)
    D = max(c.depth for c in cells)
    k, d = params.k, params.d
    total = sum(k ** (d * (D - c.depth)) for c in cells)
    return Fraction(total, k ** (d * D))


def validate_grid(G: Grid) -> None:
    """Raise InvalidGrid unless the cells tile the unit cube exactly."""
    p = G.params
    for c in G.cells:
        if c.params[:2] != p[:2]:
            raise ParamMismatch(f"cell {c} has params {c.params[:2]}, grid has {p[:2]}")
        try:
            make_box(p, c.depth, c.coords)
        except GeometryError as exc:
            raise InvalidGrid(str(exc)) from exc
    cov = coverage(p, G.cells)
    if cov != 1:
        raise InvalidGrid(f"coverage {cov.numerator}/{cov.denominator}")
    overlap = G.cells & G.nodes
    if overlap:
        raise InvalidGrid(f"nested cells, e.g. {min(overlap)}")


def is_grid(G: Grid) -> bool:
    try:
        validate_grid(G)
    except (GridError, GeometryError):
        return False
    return True


def minimal_grid(X: Iterable[Box], params: SpaceParams | None = None) -> Grid:
    """The coarsest grid in which every box of ``X`` is a node."""
    X = list(X)
    if params is None:
        if not X:
            raise GridError("cannot infer params from an empty box set")
        params = X[0].params
    internal = _strict_ancestors(X)
    if not internal:
        return unit_grid(params)
    cells = set()
    for n in internal:
        for ch in children(n):
            if ch not in internal:
                cells.add(ch)
    return Grid(params, frozenset(cells))


def meet(G: Grid, H: Grid) -> Grid:
    """Coarsest common refinement."""
    if G.params[:2] != H.params[:2]:
        raise ParamMismatch("grids live in different spaces")
    return minimal_grid(G.cells | H.cells, G.params)


def refines(G: Grid, H: Grid) -> bool:
    """True iff every cell of G lies inside some cell of H."""
    if G.params[:2] != H.params[:2]:
        raise ParamMismatch("grids live in different spaces")
    hn = H.nodes
    for g in G.cells:
        if g in H.cells:
            continue
        if g in hn:
            return False
        if not any(a in H.cells for a in iter_ancestors(g)):
            return False
    return True


def nodes(G: Grid) -> frozenset[Box]:
    """Vertex set of the space tree: cells and internal nodes."""
    return G.all_nodes()


def node_count_bound(G: Grid) -> Fraction:
    """n / (1 - k^-d), an upper bound on |T(G)| from the cell count alone."""
    kd = G.params.k ** G.params.d
    return Fraction(kd * len(G.cells), kd - 1)


def maximal_boxes(Q: Iterable[Box]) -> set[Box]:
    """Drop every box that lies inside another box of ``Q``."""
    Q = set(Q)
    return {q for q in Q if not any(a in Q for a in iter_ancestors(q))}


def restrict(G: Grid, Q: Iterable[Box]) -> frozenset[Box]:
    """Cells of ``G`` that lie inside content(Q).

    Raises GridError when content(Q) is not a union of cells of ``G``.
    """
    Q = maximal_boxes(Q)
    if not Q:
        return frozenset()
    p = G.params
    kd = p.k ** p.d
    D = max(max(q.depth for q in Q), G.depth)
    below: dict[Box, int] = defaultdict(int)
    for q in Q:
        w = kd ** (D - q.depth)
        for a in iter_ancestors(q):
            below[a] += w
    out = []
    covered = 0
    for g in G.cells:
        if g in Q or any(a in Q for a in iter_ancestors(g)):
            out.append(g)
            covered += kd ** (D - g.depth)
            continue
        v = below.get(g, 0)
        if v == 0:
            continue
        if v != kd ** (D - g.depth):
            raise GridError(f"cell {g} is only partly inside the region")
        out.append(g)
        covered += kd ** (D - g.depth)
    if covered != sum(kd ** (D - q.depth) for q in Q):
        raise GridError("region is not a union of grid cells")
    return frozenset(out)


def regular_grid(params: SpaceParams, M: int) -> Grid:
    from itertools import product

    n = params.k ** M
    return Grid(params, frozenset(
        Box(M, c, params) for c in product(range(n), repeat=params.d)))


def random_grid(params: SpaceParams, T: int, seed: int, max_depth: int) -> Grid:
    """``T`` subdivisions of uniformly chosen cells shallower than ``max_depth``."""
    rng = random.Random(seed)
    eligible = [root(params)] if max_depth > 0 else []
    done = []
    for _ in range(T):
        if not eligible:
            break
        i = rng.randrange(len(eligible))
        g = eligible[i]
        eligible[i] = eligible[-1]
        eligible.pop()
        for ch in children(g):
            (eligible if ch.depth < max_depth else done).append(ch)
    return Grid(params, frozenset(eligible + done))


def cells_to_json(cells: Iterable[Box]) -> list[dict]:
    return [{"l": c.depth, "x": list(c.coords)} for c in sorted(cells)]


def cells_from_json(params: SpaceParams, items, path: str = "cells") -> list[Box]:
    if not isinstance(items, list):
        raise GridError(f"{path}: expected a list")
    out = []
    for i, it in enumerate(items):
        where = f"{path}[{i}]"
        if not isinstance(it, dict) or "l" not in it or "x" not in it:
            raise GridError(f"{where}: expected an object with 'l' and 'x'")
        l, x = it["l"], it["x"]
        if not isinstance(l, int) or not isinstance(x, list) or not all(isinstance(v, int) for v in x):
            raise GridError(f"{where}: 'l' must be an int and 'x' a list of ints")
        try:
            out.append(make_box(params, l, x))
        except GeometryError as exc:
            raise GridError(f"{where}: {exc}") from exc
    return out


def params_from_json(obj, max_depth_cap: int | None = None) -> SpaceParams:
    if not isinstance(obj, dict):
        raise GridError("$: expected a JSON object")
    for key in ("k", "d"):
        if not isinstance(obj.get(key), int):
            raise GridError(f"$.{key}: expected an integer")
    try:
        if max_depth_cap is None:
            return space(obj["k"], obj["d"])
        return space(obj["k"], obj["d"], max_depth_cap)
    except GeometryError as exc:
        raise GridError(f"$: {exc}") from exc


def grid_to_json(G: Grid) -> str:
    payload = {"k": G.params.k, "d": G.params.d, "cells": cells_to_json(G.cells)}
    return json.dumps(payload, separators=(",", ":")) + "\n"


def grid_from_json(text: str, validate: bool = True) -> Grid:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GridError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    params = params_from_json(obj)
    G = Grid(params, cells_from_json(params, obj.get("cells"), "$.cells"))
    if validate:
        validate_grid(G)
    return G
