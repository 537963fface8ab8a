from __future__ import annotations

from fractions import Fraction
from itertools import product
from math import comb

import pytest
from hypothesis import given, strategies as st

from conftest import HILBERT, PEANO, oracle_facets, partition_seeds, small_partition
from sfcpart.fixtures import example_p
from sfcpart.geometry import Box, make_box, root, space
from sfcpart.metrics import (
    MetricsError,
    bound_constant,
    continuous_bounds_check,
    cv,
    cv_boundary,
    diameter,
    ds,
    dv,
    measure,
    quasi_optimality_check,
    quasi_optimality_constant_pow,
)
from sfcpart.partition import PartitionError
from sfcpart.spacetree import random_grid, regular_grid

P22 = space(2, 2)


def corner_pair_diameter(X) -> Fraction:
    pts = [c for b in X for c in product(*b.bounds())]
    return max(max(abs(a - b) for a, b in zip(p, q)) for p in pts for q in pts)


class TestMeasure:
    @pytest.mark.parametrize("p", [space(2, 2), space(3, 2), space(2, 3)])
    def test_single_cell(self, p):
        g = Box(4, (1,) * p.d, p)
        r = measure({g})
        assert (r.dv, r.ds, r.dr) == (1, 2 * p.d, 2 * p.d)
        assert r.cv == Fraction(1, p.k ** (4 * p.d))
        assert r.cs == Fraction(2 * p.d, p.k ** (4 * (p.d - 1)))

    def test_example_p(self):
        r = measure(example_p())
        assert (r.dv, r.ds) == (3, 11)
        assert r.cs == Fraction(11, 4)

    def test_empty(self):
        with pytest.raises(PartitionError):
            measure(set())

    @given(partition_seeds)
    def test_report_consistency(self, seed):
        P = small_partition(HILBERT, seed)
        r = measure(P)
        assert r.dr * r.dv == r.ds
        assert (r.ds, r.cs) == oracle_facets(P.cells)
        assert r.cv == sum(b.volume for b in P.cells)
        assert r.diameter == diameter(P.cells)

    def test_json_uses_fractions(self):
        text = measure(example_p()).to_json()
        assert '"cs":"11/4"' in text and text.endswith("\n")


class TestContinuous:
    @pytest.mark.parametrize("p", [space(2, 2), space(3, 2), space(2, 3), space(3, 3)])
    def test_unit_cube(self, p):
        H = {root(p)}
        for c in range(p.d):
            assert cv_boundary(H, c) == comb(p.d, c) * 2 ** c
        assert cv_boundary(H, p.d) == 2 ** p.d

    def test_depth_one_box(self):
        assert cv_boundary({make_box(P22, 1, (1, 0))}, 1) == 2

    @given(st.integers(0, 2 ** 31), st.sampled_from([space(2, 2), space(3, 2), space(2, 3)]))
    def test_grids_have_unit_volume(self, seed, p):
        G = random_grid(p, 12, seed, 4)
        assert cv(G) == 1 and dv(G) == len(G.cells)
        cells = sorted(G.cells)
        half = len(cells) // 2
        assert cv(cells[:half]) + cv(cells[half:]) == 1


class TestDiameter:
    def test_examples(self):
        assert diameter({root(P22)}) == 1
        assert diameter({make_box(space(3, 2), 3, (4, 7))}) == Fraction(1, 27)
        assert diameter({make_box(P22, 2, (0, 0)), make_box(P22, 2, (3, 3))}) == 1
        with pytest.raises(MetricsError):
            diameter([])

    @given(partition_seeds)
    def test_matches_corner_pairs(self, seed):
        X = small_partition(PEANO, seed).cells
        if len(X) <= 40:
            assert diameter(X) == corner_pair_diameter(X)


class TestBounds:
    def test_constant(self):
        assert bound_constant(2, 2, 0) == Fraction(32, 3)
        assert bound_constant(2, 2, 1) == 16
        with pytest.raises(MetricsError):
            bound_constant(2, 2, 2)

    @pytest.mark.parametrize("p", [space(2, 2), space(3, 2), space(2, 3)])
    def test_whole_domain(self, p):
        G = regular_grid(p, 1)
        for c in range(p.d):
            chk = continuous_bounds_check(G, c)
            assert chk.ok and chk.value == comb(p.d, c) * 2 ** c

    @pytest.mark.parametrize("c", [HILBERT, PEANO], ids=lambda c: c.family)
    @given(seed=partition_seeds)
    def test_random_partitions(self, c, seed):
        P = small_partition(c, seed)
        for codim in (0, 1):
            assert continuous_bounds_check(P, codim).ok
        ok, ratio = quasi_optimality_check(P)
        assert ok and ratio ** 2 <= float(quasi_optimality_constant_pow(c.params.k, 2))
