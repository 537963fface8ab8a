"""Shared settings and brute-force reference implementations.

The oracles below work on raw integer coordinates and never call into the
boundary machinery of the package, so they can be used to cross-check it.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import product

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from sfcpart.geometry import Box
from sfcpart.partition import random_partition
from sfcpart.sfc import curve

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

HILBERT = curve("hilbert2d", 2)
PEANO = curve("peano", 2)


def span(b: Box, D: int) -> list[tuple[int, int]]:
    s = b.params.k ** (D - b.depth)
    return [(x * s, (x + 1) * s) for x in b.coords]


def oracle_minimal_grid(X) -> frozenset:
    """Children of every strict ancestor that are not ancestors themselves."""
    X = list(X)
    p = X[0].params
    k, d = p.k, p.d
    inner = set()
    for b in X:
        coords, l = b.coords, b.depth
        while l > 0:
            coords = tuple(c // k for c in coords)
            l -= 1
            inner.add((l, coords))
    if not inner:
        return frozenset({Box(0, (0,) * d, p)})
    cells = set()
    for l, coords in inner:
        for off in product(range(k), repeat=d):
            ch = (l + 1, tuple(c * k + o for c, o in zip(coords, off)))
            if ch not in inner:
                cells.add(Box(ch[0], ch[1], p))
    return frozenset(cells)


def _facet_neighbours(g: Box, cells, D: int, axis: int, side: int):
    """Grid cells across facet (axis, side) of g and their shared (d-1)-measure at depth D."""
    gs = span(g, D)
    plane = gs[axis][side]
    out = []
    for h in cells:
        hs = span(h, D)
        if hs[axis][1 - side] != plane:
            continue
        m = 1
        for i in range(len(gs)):
            if i == axis:
                continue
            lo, hi = max(gs[i][0], hs[i][0]), min(gs[i][1], hs[i][1])
            if hi <= lo:
                m = 0
                break
            m *= hi - lo
        if m:
            out.append((h, m))
    return out


def oracle_facets(X, cells=None) -> tuple[int, Fraction]:
    """(ds, cs) by pairing every facet of X with the grid cells across it."""
    X = frozenset(X)
    cells = oracle_minimal_grid(X) if cells is None else frozenset(cells)
    p = next(iter(X)).params
    k, d = p.k, p.d
    D = max(c.depth for c in cells)
    n = k ** D
    count, meas = 0, 0
    for g in X:
        gs = span(g, D)
        for axis, side in product(range(d), (0, 1)):
            if gs[axis][side] in (0, n):
                count += 1
                meas += (gs[0][1] - gs[0][0]) ** (d - 1)
                continue
            for h, m in _facet_neighbours(g, cells, D, axis, side):
                if h not in X:
                    count += 1
                    meas += m
    return count, Fraction(meas, n ** (d - 1))


def oracle_vertices(X) -> dict[Box, int]:
    """Per cell, the corners lying in no other closed cell of X."""
    X = list(X)
    D = max(b.depth for b in X)
    spans = {b: span(b, D) for b in X}
    out = {}
    for g in X:
        own = 0
        for corner in product(*spans[g]):
            shared = any(
                h != g and all(lo <= x <= hi for x, (lo, hi) in zip(corner, spans[h]))
                for h in X
            )
            own += not shared
        out[g] = own
    return out


def oracle_class_2d(X) -> dict[Box, int]:
    """Cell classes for d = 2 from the facet and corner oracles."""
    X = frozenset(X)
    cells = oracle_minimal_grid(X)
    D = max(c.depth for c in cells)
    n = next(iter(X)).params.k ** D
    verts = oracle_vertices(X)
    out = {}
    for g in X:
        if verts[g]:
            out[g] = 2
            continue
        gs = span(g, D)
        facet = False
        for axis, side in product(range(2), (0, 1)):
            if gs[axis][side] in (0, n):
                facet = True
            elif any(h not in X for h, _ in _facet_neighbours(g, cells, D, axis, side)):
                facet = True
        out[g] = int(facet)
    return out


partition_seeds = st.integers(min_value=0, max_value=2 ** 31)


def small_partition(c, seed):
    return random_partition(c, seed, subdivisions=(1, 10), max_depth=4)


@pytest.fixture(params=["hilbert2d", "peano"])
def continuous_curve(request):
    return curve(request.param, 2)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        parts = results[n]
        ok = all(p[0] for p in parts)
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}")
        for sub_ok, detail in parts:
            terminalreporter.write_line(f"    [{'ok' if sub_ok else 'FAIL'}] {detail}")
