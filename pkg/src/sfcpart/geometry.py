"""Exact k-adic boxes, their faces, and the containment/adjacency relations.

A box of depth ``l`` is stored by its integer corner ``coords`` in units of
``k**-l``; nothing in this module touches floating point.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations, product
from math import comb
from typing import Iterator, NamedTuple, Sequence

DEFAULT_DEPTH_CAP = 256


class GeometryError(ValueError):
    pass


class ParamMismatch(GeometryError):
    pass


class DepthCapExceeded(GeometryError):
    pass


class SpaceParams(NamedTuple):
    k: int
    d: int
    max_depth_cap: int = DEFAULT_DEPTH_CAP


def space(k: int, d: int, max_depth_cap: int = DEFAULT_DEPTH_CAP) -> SpaceParams:
    if k < 2:
        raise GeometryError(f"subdivision factor must be >= 2, got k={k}")
    if d < 1:
        raise GeometryError(f"dimension must be >= 1, got d={d}")
    if max_depth_cap < 0:
        raise GeometryError("max_depth_cap must be non-negative")
    return SpaceParams(k, d, max_depth_cap)


class Box(NamedTuple):
    """Axis-aligned cube ``prod [x_i, x_i + 1] * k**-depth``.

    Tuple order (depth, coords) is the canonical cell order used everywhere.
    """

    depth: int
    coords: tuple[int, ...]
    params: SpaceParams

    @property
    def volume(self) -> Fraction:
        k, d = self.params.k, self.params.d
        return Fraction(1, k ** (d * self.depth))

    @property
    def side(self) -> Fraction:
        return Fraction(1, self.params.k ** self.depth)

    def bounds(self) -> list[tuple[Fraction, Fraction]]:
        s = self.side
        return [(c * s, (c + 1) * s) for c in self.coords]

    def __repr__(self) -> str:
        return f"Box(l={self.depth}, x={self.coords})"


def root(params: SpaceParams) -> Box:
    return Box(0, (0,) * params.d, params)


def make_box(params: SpaceParams, depth: int, coords: Sequence[int]) -> Box:
    """Validated constructor."""
    coords = tuple(int(c) for c in coords)
    if len(coords) != params.d:
        raise GeometryError(f"expected {params.d} coordinates, got {len(coords)}")
    if depth < 0:
        raise GeometryError(f"negative depth {depth}")
    if depth > params.max_depth_cap:
        raise DepthCapExceeded(f"depth {depth} exceeds cap {params.max_depth_cap}")
    n = params.k ** depth
    for c in coords:
        if not 0 <= c < n:
            raise GeometryError(f"coordinate {c} outside [0, {n}) at depth {depth}")
    return Box(depth, coords, params)


def _check(a: SpaceParams, b: SpaceParams) -> None:
    if a.k != b.k or a.d != b.d:
        raise ParamMismatch(f"(k={a.k}, d={a.d}) vs (k={b.k}, d={b.d})")


def ancestor(x: Box, depth: int) -> Box:
    """The ancestor of ``x`` at ``depth`` (``x`` itself when equal)."""
    if depth > x.depth or depth < 0:
        raise GeometryError(f"no ancestor of depth {depth} for box of depth {x.depth}")
    s = x.params.k ** (x.depth - depth)
    return Box(depth, tuple(c // s for c in x.coords), x.params)


def parent(x: Box) -> Box:
    if x.depth == 0:
        raise GeometryError("the root box has no parent")
    k = x.params.k
    return Box(x.depth - 1, tuple(c // k for c in x.coords), x.params)


def children(x: Box) -> list[Box]:
    """The k**d children of ``x``, in lexicographic coordinate order."""
    p = x.params
    if x.depth >= p.max_depth_cap:
        raise DepthCapExceeded(f"cannot subdivide a box of depth {x.depth} (cap {p.max_depth_cap})")
    k = p.k
    base = [c * k for c in x.coords]
    l = x.depth + 1
    return [
        Box(l, tuple(b + o for b, o in zip(base, off)), p)
        for off in product(range(k), repeat=p.d)
    ]


def contains(outer: Box, inner: Box) -> bool:
    _check(outer.params, inner.params)
    delta = inner.depth - outer.depth
    if delta < 0:
        return False
    if delta == 0:
        return inner.coords == outer.coords
    s = outer.params.k ** delta
    return all(c // s == o for c, o in zip(inner.coords, outer.coords))


def lca(x: Box, y: Box) -> Box:
    """Least common ancestor: the deepest box containing both."""
    _check(x.params, y.params)
    k = x.params.k
    l = min(x.depth, y.depth)
    a = ancestor(x, l).coords
    b = ancestor(y, l).coords
    while a != b:
        a = tuple(c // k for c in a)
        b = tuple(c // k for c in b)
        l -= 1
    return Box(l, a, x.params)


def _axis_intervals(x: Box, depth: int) -> list[tuple[int, int]]:
    s = x.params.k ** (depth - x.depth)
    return [(c * s, (c + 1) * s) for c in x.coords]


def adjacent(x: Box, y: Box) -> bool:
    """True iff the closed boxes meet in a (d-1)-dimensional hypercube."""
    _check(x.params, y.params)
    D = max(x.depth, y.depth)
    degenerate = 0
    for (a0, a1), (b0, b1) in zip(_axis_intervals(x, D), _axis_intervals(y, D)):
        lo, hi = max(a0, b0), min(a1, b1)
        if hi < lo:
            return False
        if hi == lo:
            degenerate += 1
            if degenerate > 1:
                return False
    return degenerate == 1


class Subcube:
    """A codimension-c face ``x_{S,T}`` of a box.

    Equality and hashing go through :meth:`key`, so the same face seen from
    two neighbouring boxes compares equal.
    """

    __slots__ = ("params", "depth", "coords", "fixed_low", "fixed_high", "_key")

    def __init__(self, params: SpaceParams, depth: int, coords: Sequence[int],
                 fixed_low=(), fixed_high=()):
        self.params = params
        self.depth = depth
        self.coords = tuple(coords)
        self.fixed_low = frozenset(fixed_low)
        self.fixed_high = frozenset(fixed_high)
        if self.fixed_low & self.fixed_high:
            raise GeometryError("an axis cannot be clamped to both faces")
        if any(not 0 <= i < params.d for i in self.fixed_low | self.fixed_high):
            raise GeometryError("clamped axis out of range")
        self._key = None

    @property
    def codim(self) -> int:
        return len(self.fixed_low) + len(self.fixed_high)

    def key(self) -> tuple[int, tuple[int, ...], int]:
        """Canonical ``(depth, values, fixed_mask)``.

        A fixed axis stores the integer position of its hyperplane, a free
        axis stores the cell coordinate.
        """
        if self._key is None:
            vals = list(self.coords)
            mask = 0
            for i in self.fixed_low:
                mask |= 1 << i
            for i in self.fixed_high:
                vals[i] += 1
                mask |= 1 << i
            self._key = (self.depth, tuple(vals), mask)
        return self._key

    @classmethod
    def from_key(cls, params: SpaceParams, key) -> Subcube:
        depth, vals, mask = key
        n = params.k ** depth
        coords, low, high = [], [], []
        for i, v in enumerate(vals):
            if mask >> i & 1:
                if v < n:
                    coords.append(v)
                    low.append(i)
                else:
                    coords.append(v - 1)
                    high.append(i)
            else:
                coords.append(v)
        return cls(params, depth, coords, low, high)

    def box(self) -> Box:
        return Box(self.depth, self.coords, self.params)

    def intervals(self, depth: int | None = None) -> list[tuple[int, int]]:
        """Per-axis closed integer intervals at ``depth`` (default: own depth)."""
        depth = self.depth if depth is None else depth
        s = self.params.k ** (depth - self.depth)
        l, vals, mask = self.key()
        return [(v * s, v * s) if mask >> i & 1 else (v * s, (v + 1) * s)
                for i, v in enumerate(vals)]

    def measure(self) -> Fraction:
        """(d-c)-dimensional volume; 1 for a vertex."""
        return Fraction(1, self.params.k ** (self.depth * (self.params.d - self.codim)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subcube):
            return NotImplemented
        return self.params[:2] == other.params[:2] and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __lt__(self, other: Subcube) -> bool:
        return self.key() < other.key()

    def __repr__(self) -> str:
        return (f"Subcube(l={self.depth}, x={self.coords}, "
                f"low={sorted(self.fixed_low)}, high={sorted(self.fixed_high)})")


def subcubes(x: Box, c: int) -> list[Subcube]:
    """All c-subcubes of ``x``; there are binom(d, c) * 2**c of them."""
    d = x.params.d
    if not 0 <= c <= d:
        raise GeometryError(f"codimension {c} outside [0, {d}]")
    out = []
    for axes in combinations(range(d), c):
        for sides in product((0, 1), repeat=c):
            low = [a for a, s in zip(axes, sides) if s == 0]
            high = [a for a, s in zip(axes, sides) if s == 1]
            out.append(Subcube(x.params, x.depth, x.coords, low, high))
    return out


def subcube_count(d: int, c: int) -> int:
    return comb(d, c) * 2 ** c


def subcube_contained(s: Subcube, t: Subcube) -> bool:
    """Point-set containment of closed faces."""
    _check(s.params, t.params)
    D = max(s.depth, t.depth)
    return all(t0 <= s0 and s1 <= t1
               for (s0, s1), (t0, t1) in zip(s.intervals(D), t.intervals(D)))


def iter_ancestors(x: Box) -> Iterator[Box]:
    """Strict ancestors of ``x`` from the parent up to the root."""
    k = x.params.k
    coords, l = x.coords, x.depth
    while l > 0:
        coords = tuple(c // k for c in coords)
        l -= 1
        yield Box(l, coords, x.params)
