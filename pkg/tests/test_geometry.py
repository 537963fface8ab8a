from __future__ import annotations

from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, strategies as st

from sfcpart.geometry import (
    Box,
    DepthCapExceeded,
    GeometryError,
    ParamMismatch,
    Subcube,
    adjacent,
    ancestor,
    children,
    contains,
    lca,
    make_box,
    parent,
    root,
    space,
    subcube_contained,
    subcube_count,
    subcubes,
)

P22 = space(2, 2)
P32 = space(3, 2)
P23 = space(2, 3)


def B(l, *x, p=P22):
    return make_box(p, l, x)


@st.composite
def boxes(draw, params=P22, max_depth=6):
    l = draw(st.integers(0, max_depth))
    n = params.k ** l
    return Box(l, tuple(draw(st.integers(0, n - 1)) for _ in range(params.d)), params)


def rational_contains(a: Box, b: Box) -> bool:
    return all(a0 <= b0 and b1 <= a1 for (a0, a1), (b0, b1) in zip(a.bounds(), b.bounds()))


class TestConstruction:
    def test_space_validation(self):
        with pytest.raises(GeometryError):
            space(1, 2)
        with pytest.raises(GeometryError):
            space(2, 0)

    def test_make_box_rejects_bad_input(self):
        with pytest.raises(GeometryError):
            make_box(P22, 1, (2, 0))
        with pytest.raises(GeometryError):
            make_box(P22, 1, (0,))
        with pytest.raises(GeometryError):
            make_box(P22, -1, (0, 0))
        with pytest.raises(DepthCapExceeded):
            make_box(space(2, 2, 3), 4, (0, 0))

    def test_volume_and_bounds(self):
        b = B(2, 1, 3)
        assert b.volume == Fraction(1, 16)
        assert b.bounds() == [(Fraction(1, 4), Fraction(1, 2)), (Fraction(3, 4), Fraction(1))]

    def test_deep_boxes_stay_exact(self):
        b = make_box(P22, 200, (2 ** 200 - 1, 0))
        assert b.volume == Fraction(1, 2 ** 400)
        assert ancestor(b, 1) == B(1, 1, 0)


class TestContainment:
    def test_examples(self):
        assert contains(B(1, 0, 0), B(2, 1, 1))
        assert not contains(B(1, 0, 0), B(2, 2, 0))
        x = B(3, 5, 2)
        assert contains(x, x)
        assert contains(root(P22), x)

    def test_param_mismatch(self):
        with pytest.raises(ParamMismatch):
            contains(root(P22), root(P32))

    @given(boxes(), boxes())
    def test_matches_rational_intervals(self, a, b):
        assert contains(a, b) == rational_contains(a, b)

    @given(boxes(), boxes(), boxes())
    def test_partial_order(self, a, b, c):
        if contains(a, b) and contains(b, a):
            assert a == b
        if contains(a, b) and contains(b, c):
            assert contains(a, c)


class TestLca:
    def test_examples(self):
        x = B(2, 3, 1)
        assert lca(x, x) == x
        assert lca(B(1, 0, 0), B(1, 1, 0)) == root(P22)
        assert lca(B(2, 0, 0), B(2, 1, 0)) == B(1, 0, 0)

    @given(boxes(), boxes())
    def test_is_deepest_common_ancestor(self, x, y):
        z = lca(x, y)
        assert contains(z, x) and contains(z, y)
        if z.depth < min(x.depth, y.depth):
            for ch in children(z):
                assert not (contains(ch, x) and contains(ch, y))


class TestTree:
    def test_children_counts(self):
        assert {c.coords for c in children(root(P22))} == {(0, 0), (0, 1), (1, 0), (1, 1)}
        assert len(children(root(P32))) == 9

    def test_parent_example(self):
        assert parent(B(2, 3, 1)) == B(1, 1, 0)
        with pytest.raises(GeometryError):
            parent(root(P22))

    def test_children_respect_cap(self):
        p = space(2, 2, 2)
        with pytest.raises(DepthCapExceeded):
            children(Box(2, (0, 0), p))

    @given(boxes(P32, 4))
    def test_children_tile_parent(self, x):
        kids = children(x)
        assert all(parent(c) == x for c in kids)
        assert sum(c.volume for c in kids) == x.volume
        assert len(set(kids)) == 9


class TestAdjacency:
    def test_examples(self):
        assert adjacent(B(1, 0, 0), B(1, 1, 0))
        assert not adjacent(B(1, 0, 0), B(1, 1, 1))
        assert adjacent(B(1, 0, 0), B(2, 2, 0))

    @given(boxes(), boxes())
    def test_symmetric_irreflexive(self, x, y):
        assert adjacent(x, y) == adjacent(y, x)
        assert not adjacent(x, x)
        if adjacent(x, y):
            assert not contains(x, y) and not contains(y, x)

    @given(boxes(P23, 3), boxes(P23, 3))
    def test_matches_interval_oracle(self, x, y):
        flat, overlap = 0, 0
        for (a0, a1), (b0, b1) in zip(x.bounds(), y.bounds()):
            lo, hi = max(a0, b0), min(a1, b1)
            flat += lo == hi
            overlap += lo < hi
        assert adjacent(x, y) == (flat == 1 and overlap == 2)


class TestSubcubes:
    def test_counts(self):
        x = B(1, 1, 0)
        assert len(subcubes(x, 0)) == 1
        assert len(subcubes(x, 1)) == 4
        assert len(subcubes(x, 2)) == 4
        assert len(subcubes(Box(0, (0, 0, 0), P23), 2)) == 12
        with pytest.raises(GeometryError):
            subcubes(x, 3)

    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    def test_count_formula(self, d):
        x = Box(0, (0,) * d, space(2, d))
        for c in range(d + 1):
            faces = subcubes(x, c)
            assert len(faces) == len(set(faces)) == comb(d, c) * 2 ** c == subcube_count(d, c)

    def test_shared_face_has_one_key(self):
        a, b = B(1, 0, 0), B(1, 1, 0)
        right_of_a = Subcube(P22, 1, a.coords, (), (0,))
        left_of_b = Subcube(P22, 1, b.coords, (0,), ())
        assert right_of_a == left_of_b and hash(right_of_a) == hash(left_of_b)
        assert Subcube.from_key(P22, right_of_a.key()) == right_of_a

    def test_containment(self):
        edge = Subcube(P22, 1, (0, 0), (0,), ())
        piece = Subcube(P22, 3, (0, 2), (0,), ())
        assert subcube_contained(edge, edge)
        assert subcube_contained(piece, edge)
        assert not subcube_contained(edge, piece)
        opposite = Subcube(P22, 1, (0, 0), (), (0,))
        assert not subcube_contained(edge, opposite)
        corner = Subcube(P22, 2, (1, 1), (0, 1), ())
        assert subcube_contained(corner, Subcube(P22, 0, (0, 0)))

    @given(boxes(P23, 3))
    def test_faces_lie_on_box(self, x):
        whole = Subcube(x.params, x.depth, x.coords)
        for c in range(4):
            for f in subcubes(x, c):
                assert f.codim == c
                assert subcube_contained(f, whole)
                assert f.measure() == Fraction(1, 2 ** (x.depth * (3 - c)))
