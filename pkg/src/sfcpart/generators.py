"""Grid and partition families: class-regular grids, the Cantor grid,
shape-class-regular refinements H_c, befilled partitions and the mu2 shapes."""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from itertools import combinations, product
from math import comb
from typing import Iterable

import numpy as np

from .geometry import Box, GeometryError, SpaceParams, ancestor, children, root, space
from .partition import BoundaryIndex, classify, shape
from .sfc import CurveSpec, order_cells, path_key
from .spacetree import Grid, _strict_ancestors, minimal_grid, regular_grid, restrict, subdivide, unit_grid


class GeneratorError(ValueError):
    pass


class InadmissibleVolume(GeneratorError):
    pass


def a_count(v: Box, r: int) -> int:
    """Number of the first r coordinates equal to 0."""
    return sum(1 for x in v.coords[:r] if x == 0)


def b_count(v: Box, r: int) -> int:
    """Number of the first r coordinates below k."""
    k = v.params.k
    return sum(1 for x in v.coords[:r] if x <= k - 1)


def _check_crm(params: SpaceParams, c: int, r: int, M: int) -> None:
    if not 0 <= c <= r <= params.d:
        raise GeneratorError(f"need 0 <= c <= r <= d, got c={c}, r={r}, d={params.d}")
    if M < 0:
        raise GeneratorError("M must be non-negative")


# --- class-regular grids -------------------------------------------------------------

def class_regular_arrays(params: SpaceParams, c: int, r: int, M: int,
                         method: str = "iterative") -> dict[int, np.ndarray]:
    """Cells of K(c, r, M) as sorted linear indices per depth.

    ``iterative`` subdivides, M times, every cell with a(v, r) >= c.
    ``closed_form`` lists the cells depth by depth from (a, b) classes.
    """
    _check_crm(params, c, r, M)
    if method == "iterative":
        out = _iterative_arrays(params.k, params.d, c, r, M)
    elif method == "closed_form":
        out = _closed_form_arrays(params.k, params.d, c, r, M)
    else:
        raise GeneratorError(f"unknown method {method!r}")
    return {l: np.sort(a) for l, a in out.items() if len(a)}


def _index_dtype(k: int, d: int, M: int):
    """int64 while linear indices fit, Python ints beyond that."""
    return np.int64 if k ** (M * d) < 2 ** 62 else object


def _linear(coords: np.ndarray, n: int) -> np.ndarray:
    idx = np.zeros(len(coords), dtype=coords.dtype)
    for i in range(coords.shape[1]):
        idx = idx * n + coords[:, i]
    return idx


def _iterative_arrays(k, d, c, r, M):
    dt = _index_dtype(k, d, M)
    offs = np.array(list(product(range(k), repeat=d)), dtype=dt).reshape(-1, d)
    cur = np.zeros((1, d), dtype=dt)
    out = {}
    for t in range(M):
        a = (cur[:, :r] == 0).sum(axis=1)
        sub = a >= c
        out[t] = _linear(cur[~sub], k ** t)
        par = cur[sub]
        cur = (par[:, None, :] * k + offs[None, :, :]).reshape(-1, d)
        del par
    out[M] = _linear(cur, k ** M)
    return out


def _ab_pairs(c, r, l, M):
    for a in range(0, r + 1):
        for b in range(a, r + 1):
            if b < c:
                continue
            if l < M and a > c - 1:
                continue
            yield a, b


def _closed_form_arrays(k, d, c, r, M):
    if M == 0:
        return {0: np.zeros(1, dtype=np.int64)}
    dt = _index_dtype(k, d, M)
    out = {}
    for l in range(1, M + 1):
        n = k ** l
        parts = []
        for a, b in _ab_pairs(c, r, l, M):
            for zero in combinations(range(r), a):
                rest = [i for i in range(r) if i not in zero]
                for low in combinations(rest, b - a):
                    axes = []
                    for i in range(d):
                        if i >= r:
                            axes.append(np.arange(n, dtype=dt))
                        elif i in zero:
                            axes.append(np.zeros(1, dtype=dt))
                        elif i in low:
                            axes.append(np.arange(1, k, dtype=dt))
                        else:
                            axes.append(np.arange(k, n, dtype=dt))
                    idx = np.zeros(1, dtype=dt)
                    for vals in axes:
                        idx = (idx[:, None] * n + vals[None, :]).ravel()
                    parts.append(idx)
        if parts:
            out[l] = np.concatenate(parts)
    return out


def lambda_count(k: int, d: int, r: int, l: int, a: int, b: int) -> int:
    """|{depth-l boxes v : a(v, r) = a, b(v, r) = b}|."""
    if not 0 <= a <= b <= r <= d:
        return 0
    return (comb(r, a) * comb(r - a, b - a) * (k - 1) ** (b - a)
            * (k ** l - k) ** (r - b) * k ** (l * (d - r)))


def lambda_count_bruteforce(k: int, d: int, r: int, l: int) -> dict[tuple[int, int], int]:
    """Count every depth-l box by its (a, b) pair."""
    n = k ** l
    grid = np.indices((n,) * d).reshape(d, -1)[:r]
    a = (grid == 0).sum(axis=0)
    b = (grid <= k - 1).sum(axis=0)
    pairs, counts = np.unique(a * (r + 1) + b, return_counts=True)
    return {(int(p) // (r + 1), int(p) % (r + 1)): int(n_) for p, n_ in zip(pairs, counts)}


def arrays_to_grid(params: SpaceParams, arrays: dict[int, np.ndarray]) -> Grid:
    d, k = params.d, params.k
    cells = []
    for l, idx in arrays.items():
        n = k ** l
        cols = []
        rest = idx.copy()
        for _ in range(d):
            cols.append(rest % n)
            rest //= n
        coords = np.stack(cols[::-1], axis=1).tolist()
        cells.extend(Box(l, tuple(co), params) for co in coords)
    return Grid(params, frozenset(cells))


def class_regular(params: SpaceParams, c: int, r: int, M: int, method: str = "iterative") -> Grid:
    return arrays_to_grid(params, class_regular_arrays(params, c, r, M, method))


def class_regular_dv(k: int, d: int, c: int, r: int, M: int) -> int:
    """dv(K(c, r, M)) summed from the (a, b) class sizes."""
    if M == 0:
        return 1
    total = 0
    for l in range(1, M + 1):
        for a, b in _ab_pairs(c, r, l, M):
            total += lambda_count(k, d, r, l, a, b)
    return total


def a_surface(K: Grid, r: int) -> int:
    """Sum of a(v, r) over the cells of K."""
    return sum(a_count(v, r) for v in K.cells)


def corner_grid_dv(k: int, d: int, M: int) -> int:
    return (k ** d - 1) * M + 1


def corner_grid_ds(k: int, d: int, M: int) -> int:
    return d * (k ** (d - 1) - 1) * M + d


# --- Cantor grid ---------------------------------------------------------------------

def _cantor_digits_ok(t: int, l: int) -> bool:
    for _ in range(l):
        t, dig = divmod(t, 3)
        if dig == 1:
            return False
    return True


def cantor_grid(M: int, params: SpaceParams | None = None) -> Grid:
    """Refine along the face x1 = 0 wherever the cell meets the Cantor set."""
    params = params or space(3, 2)
    if params.k != 3 or params.d != 2:
        raise GeneratorError("the Cantor grid needs k=3, d=2")
    cells = [root(params)]
    for _ in range(M):
        nxt = []
        for g in cells:
            if g.coords[0] == 0 and _cantor_digits_ok(g.coords[1], g.depth):
                nxt.extend(children(g))
            else:
                nxt.append(g)
        cells = nxt
    return Grid(params, frozenset(cells))


# --- shape-class-regular refinements -------------------------------------------------

class _Region:
    """Membership test for content(Q) at a fixed depth."""

    def __init__(self, Q: Iterable[Box]):
        self.Q = frozenset(shape(Q))
        if not self.Q:
            raise GeneratorError("empty shape")
        self.params = next(iter(self.Q)).params
        self.depths = sorted({q.depth for q in self.Q})

    def inside(self, v: Box) -> bool:
        k = self.params.k
        for l in self.depths:
            if l > v.depth:
                break
            s = k ** (v.depth - l)
            if Box(l, tuple(x // s for x in v.coords), self.params) in self.Q:
                return True
        return False


def _class_at_least(region: _Region, v: Box, c: int) -> bool:
    """Some c-face of v has every same-depth mirror outside the region."""
    if c == 0:
        return True
    p = region.params
    n = p.k ** v.depth
    for axes in combinations(range(p.d), c):
        for sides in product((0, 1), repeat=c):
            ok = True
            for rr in range(1, c + 1):
                for tau in combinations(range(c), rr):
                    b = list(v.coords)
                    for t in tau:
                        b[axes[t]] += 1 if sides[t] else -1
                    if all(0 <= x < n for x in b) and region.inside(Box(v.depth, tuple(b), p)):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                return True
    return False


def theta(Q: Iterable[Box], M: int, c: int = 0) -> frozenset:
    """Depth-M boxes inside content(Q) whose class w.r.t. all such boxes is at least c."""
    region = _Region(Q)
    p = region.params
    if M < max(region.depths):
        raise GeneratorError(f"M={M} is shallower than the shape")
    k, d = p.k, p.d
    out = set()
    for q in region.Q:
        s = k ** (M - q.depth)
        lo = [x * s for x in q.coords]
        if c == 0:
            for co in product(*(range(a, a + s) for a in lo)):
                out.add(Box(M, co, p))
            continue
        for axes in combinations(range(d), c):
            for sides in product((0, 1), repeat=c):
                ranges = [range(a, a + s) for a in lo]
                for i, sd in zip(axes, sides):
                    ranges[i] = (lo[i] + s - 1,) if sd else (lo[i],)
                for co in product(*ranges):
                    v = Box(M, co, p)
                    if v not in out and _class_at_least(region, v, c):
                        out.add(v)
    return frozenset(out)


def _classified_shape(Q: Iterable[Box]):
    Qs = shape(Q)
    view = classify(Qs)
    return Qs, view.classified_cells


def hc(Q: Iterable[Box], M: int, c: int) -> frozenset:
    """H_c(Q, M): the classified shape refined towards its class->=c depth-M boxes."""
    Qs, star = _classified_shape(Q)
    N = max(g.depth for g in star)
    if M < N:
        raise GeneratorError(f"M={M} is below the classification depth {N}")
    th = theta(Qs, M, c)
    G = minimal_grid(th | star)
    return restrict(G, Qs)


@dataclass(frozen=True)
class ShapeProfile:
    """Volumes V_c and surfaces S_c of H_c(Q, M) for c = 0..d+1."""

    M: int
    N_star: int
    V: tuple[int, ...]
    S: tuple[int, ...]


def _ds(cells) -> int:
    return BoundaryIndex(cells).boundary_size(1)


def shape_profile(Q: Iterable[Box], M: int, codims: Iterable[int] | None = None) -> ShapeProfile:
    Qs, star = _classified_shape(Q)
    p = next(iter(Qs)).params
    d = p.d
    N = max(g.depth for g in star)
    kd = p.k ** d
    codims = range(d + 1) if codims is None else codims
    V, S = {}, {}
    for c in codims:
        H = hc(Qs, M, c)
        V[c], S[c] = len(H), _ds(H)
    V[d + 1] = len(star) + (kd - 1) * (M - N)
    return ShapeProfile(M, N, tuple(V.get(c, -1) for c in range(d + 2)),
                        tuple(S.get(c, -1) for c in range(d + 1)))


def _chain(star: frozenset, target: Box) -> set:
    cells = set(star)
    g = next(h for h in cells if h.depth <= target.depth and ancestor(target, h.depth) == h)
    while g.depth < target.depth:
        cells.remove(g)
        kids = children(g)
        cells.update(kids)
        g = next(h for h in kids if ancestor(target, h.depth) == h)
    return cells


def admissible_volumes(Q: Iterable[Box], M: int) -> range:
    Qs, star = _classified_shape(Q)
    p = next(iter(Qs)).params
    kd = p.k ** p.d
    N = max(g.depth for g in star)
    lo = len(star) + (kd - 1) * (M - N)
    hi = len(hc(Qs, M, 0))
    return range(lo, hi + 1, kd - 1)


def befill(Q: Iterable[Box], V: int, M: int, curve: CurveSpec, order: str = "curve") -> frozenset:
    """Classified partition of shape Q, depth M and volume V with maximal ds.

    Starts from H_{c+1} and subdivides class-c cells that still contain a
    class->=c depth-M box, first in curve order (or last, with
    ``order='reverse'``), until the volume is exactly V.
    """
    if order not in ("curve", "reverse"):
        raise GeneratorError(f"unknown order {order!r}")
    Qs, star = _classified_shape(Q)
    p = next(iter(Qs)).params
    d = p.d
    kd = p.k ** d
    N = max(g.depth for g in star)
    if M < N:
        raise GeneratorError(f"M={M} is below the classification depth {N}")
    lo = len(star) + (kd - 1) * (M - N)
    if V < lo or (V - lo) % (kd - 1):
        raise InadmissibleVolume(f"V={V} is not admissible (minimum {lo}, step {kd - 1})")
    c = None
    prev = None
    for cc in range(d, -1, -1):
        Hc = hc(Qs, M, cc)
        if V <= len(Hc):
            c = cc
            break
        prev = Hc
    if c is None:
        raise InadmissibleVolume(f"V={V} exceeds the largest volume {len(prev)}")
    th = theta(Qs, M, c)
    if c == d:
        # the minimum volume needs a chain from a deepest cell of Q*; aim it
        # at the highest-class depth-M box available there
        sign = 1 if order == "curve" else -1
        deep = {g for g in star if g.depth == N}
        for cc in range(d, -1, -1):
            pool = th if cc == d else theta(Qs, M, cc)
            cand = [b for b in pool if ancestor(b, N) in deep]
            if cand:
                break
        first = min(cand, key=lambda b: tuple(sign * x for x in path_key(curve, b)))
        start = _chain(star, first)
    else:
        start = set(prev)
    idx = BoundaryIndex(start)
    targets = _strict_ancestors(th)

    def prio(g):
        key = path_key(curve, g)
        return key if order == "curve" else tuple(-x for x in key)

    heap = [(prio(g), g) for g in idx.X if g in targets and idx.class_of(g) == c]
    heapq.heapify(heap)
    while len(idx.X) < V:
        if not heap:
            raise GeneratorError("ran out of eligible cells before reaching V")
        _, g = heapq.heappop(heap)
        for ch in idx.subdivide(g):
            if ch in targets and idx.class_of(ch) == c:
                heapq.heappush(heap, (prio(ch), ch))
    return frozenset(idx.X)


# --- staircase shapes ----------------------------------------------------------------

def mu2_shape(N: int, curve: CurveSpec) -> tuple[frozenset, Grid]:
    """Shape Q_N (first N/2 cells of G_N) with cell m at depth 2m + 2."""
    if N < 2 or N % 2:
        raise GeneratorError("N must be a positive even integer")
    if not curve.continuous:
        raise GeneratorError(f"{curve.family} is not continuous")
    p = curve.params
    G = regular_grid(p, 2)
    for n in range(4, N + 1, 2):
        g = order_cells(curve, G)[n // 2 - 1]
        G = subdivide(G, g)
        for ch in children(g):
            G = subdivide(G, ch)
    seq = order_cells(curve, G)
    return frozenset(seq[: N // 2]), G


def regular(params: SpaceParams, M: int) -> Grid:
    return regular_grid(params, M) if M > 0 else unit_grid(params)
