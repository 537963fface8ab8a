from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from sfcpart.geometry import Box, ParamMismatch, children, make_box, parent, root, space
from sfcpart.sfc import (
    CurveError,
    Dsfc,
    Relation,
    UnsupportedCurve,
    check_continuity,
    check_refinement_consistency,
    check_space_filling,
    compare,
    curve,
    dsfc,
    order_cells,
    path_key,
    regular_order,
    sample_intervals,
)
from sfcpart.spacetree import minimal_grid, random_grid, regular_grid, subdivide, unit_grid

HIL = curve("hilbert2d")
PEA = curve("peano", 2)
PEA3 = curve("peano", 3)
MOR = curve("morton", 2)


def hilbert_d2xy(n: int, t: int) -> tuple[int, int]:
    x = y = 0
    s = 1
    while s < n:
        rx = 1 & (t // 2)
        ry = 1 & (t ^ rx)
        if ry == 0:
            if rx == 1:
                x, y = s - 1 - x, s - 1 - y
            x, y = y, x
        x += s * rx
        y += s * ry
        t //= 4
        s *= 2
    return x, y


def peano_digits(M: int, i: int) -> tuple[int, int]:
    a = []
    for _ in range(2 * M):
        a.append(i % 3)
        i //= 3
    a.reverse()
    x = y = 0
    for j in range(M):
        ax, ay = a[2 * j], a[2 * j + 1]
        if sum(a[1:2 * j:2]) % 2:
            ax = 2 - ax
        if sum(a[0:2 * j + 1:2]) % 2:
            ay = 2 - ay
        x, y = 3 * x + ax, 3 * y + ay
    return x, y


class TestConstruction:
    def test_families(self):
        assert HIL.params.k == 2 and PEA.params.k == 3 and MOR.params.k == 2
        assert HIL.continuous and PEA.continuous and not MOR.continuous
        with pytest.raises(UnsupportedCurve):
            curve("hilbert2d", 3)
        with pytest.raises(UnsupportedCurve):
            curve("gosper")

    def test_grid_mismatch(self):
        with pytest.raises(ParamMismatch):
            order_cells(HIL, regular_grid(space(3, 2), 1))


class TestReferenceOrders:
    @pytest.mark.parametrize("M", range(1, 6))
    def test_hilbert_matches_classic_construction(self, M):
        n = 2 ** M
        assert regular_order(HIL, M) == [hilbert_d2xy(n, i) for i in range(n * n)]

    @pytest.mark.parametrize("M", range(1, 5))
    def test_peano_matches_digit_formula(self, M):
        assert regular_order(PEA, M) == [peano_digits(M, i) for i in range(9 ** M)]

    def test_base_motif(self):
        seq = order_cells(HIL, regular_grid(HIL.params, 1))
        assert [b.coords for b in seq] == [(0, 0), (0, 1), (1, 1), (1, 0)]

    def test_morton_is_lexicographic(self):
        assert regular_order(MOR, 2) == sorted(regular_order(MOR, 2), key=lambda c: (
            c[0] >> 1, c[1] >> 1, c[0] & 1, c[1] & 1))

    @pytest.mark.parametrize("c", [HIL, PEA, PEA3, MOR], ids=lambda c: f"{c.family}-{c.params.d}")
    def test_regular_order_agrees_with_grid_order(self, c):
        M = 2
        assert [b.coords for b in order_cells(c, regular_grid(c.params, M))] == regular_order(c, M)


class TestCompare:
    def test_examples(self):
        x = make_box(HIL.params, 3, (2, 5))
        assert compare(HIL, x, x) is Relation.NESTED
        assert compare(HIL, x, parent(x)) is Relation.NESTED
        a, b = make_box(HIL.params, 1, (0, 0)), make_box(HIL.params, 1, (0, 1))
        assert compare(HIL, a, b) is Relation.BEFORE and compare(HIL, b, a) is Relation.AFTER

    @given(st.integers(0, 2 ** 31))
    def test_total_on_cells_and_matches_path_keys(self, seed):
        G = random_grid(HIL.params, 12, seed, 5)
        seq = order_cells(HIL, G)
        rng = random.Random(seed)
        for _ in range(30):
            i, j = rng.randrange(len(seq)), rng.randrange(len(seq))
            if i == j:
                continue
            rel = compare(HIL, seq[i], seq[j])
            assert rel is (Relation.BEFORE if i < j else Relation.AFTER)
            assert (path_key(HIL, seq[i]) < path_key(HIL, seq[j])) == (i < j)


class TestAxioms:
    def test_trivial_cases(self):
        s = dsfc(HIL, unit_grid(HIL.params))
        assert len(s) == 1 and check_continuity(s) and check_space_filling(s)

    def test_hilbert_depth_two(self):
        s = dsfc(HIL, regular_grid(HIL.params, 2))
        assert len(s) == 16 and check_continuity(s)

    def test_morton_jumps(self):
        s = dsfc(MOR, regular_grid(MOR.params, 1))
        assert not check_continuity(s)
        assert check_space_filling(s)

    def test_hilbert_depth_three_exhaustive(self):
        assert check_space_filling(dsfc(HIL, regular_grid(HIL.params, 3)))

    def test_swapped_order_breaks_space_filling(self):
        G = regular_grid(HIL.params, 2)
        seq = list(order_cells(HIL, G))
        # swap the last cell of the first quadrant with the first of the second
        seq[3], seq[4] = seq[4], seq[3]
        assert not check_space_filling(Dsfc(G, seq))

    def test_dsfc_requires_permutation(self):
        G = regular_grid(HIL.params, 1)
        with pytest.raises(CurveError):
            Dsfc(G, list(G)[:3])

    @pytest.mark.parametrize("c", [HIL, PEA, PEA3], ids=lambda c: f"{c.family}-{c.params.d}")
    @given(seed=st.integers(0, 2 ** 31))
    def test_random_grids(self, c, seed):
        G = random_grid(c.params, 10, seed, 4)
        s = dsfc(c, G)
        assert check_continuity(s)
        assert check_space_filling(s, sample_intervals(len(s), 200, seed))

    @given(seed=st.integers(0, 2 ** 31))
    def test_morton_space_filling_on_random_grids(self, seed):
        s = dsfc(MOR, random_grid(MOR.params, 10, seed, 4))
        assert check_space_filling(s, sample_intervals(len(s), 200, seed))


class TestRefinementConsistency:
    def test_examples(self):
        G = regular_grid(HIL.params, 1)
        assert check_refinement_consistency(HIL, G, G)
        assert check_refinement_consistency(HIL, G, regular_grid(HIL.params, 2))
        with pytest.raises(CurveError):
            check_refinement_consistency(HIL, regular_grid(HIL.params, 2), G)

    @pytest.mark.parametrize("c", [HIL, PEA, MOR], ids=lambda c: c.family)
    @given(seed=st.integers(0, 2 ** 31))
    def test_random_extra_subdivision(self, c, seed):
        G = random_grid(c.params, 8, seed, 4)
        g = sorted(G.cells)[seed % len(G)]
        assert check_refinement_consistency(c, G, subdivide(G, g))

    def test_dsfc_on_minimal_grid(self):
        X = {make_box(PEA.params, 3, (4, 20))}
        s = dsfc(PEA, minimal_grid(X))
        assert check_continuity(s) and check_space_filling(s)
