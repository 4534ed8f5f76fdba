from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from cstar_systems.timegrid import (
    EndpointMismatchError,
    NotARefinementError,
    Partition,
    common_refinement,
    format_timepoint,
    inner_decompose,
    is_refinement,
    outer_decompose,
)


def P(*pts):
    return Partition(pts)


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition([1])
    with pytest.raises(ValueError):
        Partition([2, 1])
    with pytest.raises(ValueError):
        Partition([1, 1])
    with pytest.raises(ValueError):
        Partition([0, 1])
    with pytest.raises(TypeError):
        Partition([0.5, 1.5])


def test_rational_points_exact():
    p = Partition(["1/3", "2/3", 1])
    assert p.points == (F(1, 3), F(2, 3), F(1))
    assert format_timepoint(F(1, 3)) == "1/3"
    assert format_timepoint(F(4, 2)) == "2"


@pytest.mark.parametrize("coarse, fine, expected", [
    (P(1, 2), P(1, F(3, 2), 2), True),
    (P(1, 2), P(1, 2), True),
    (P(1, 2), P(1, 3), False),
])
def test_is_refinement(coarse, fine, expected):
    assert is_refinement(coarse, fine) is expected


@pytest.mark.parametrize("coarse, fine, blocks", [
    (P(1, 3), P(1, 2, 3), [P(1, 2, 3)]),
    (P(1, 2, 3), P(1, F(3, 2), 2, 3), [P(1, F(3, 2), 2), P(2, 3)]),
    (P(1, 2), P(1, 2), [P(1, 2)]),
])
def test_inner_decompose(coarse, fine, blocks):
    assert inner_decompose(coarse, fine) == blocks


def test_inner_decompose_errors():
    with pytest.raises(EndpointMismatchError):
        inner_decompose(P(1, 2), P(1, 2, 3))
    with pytest.raises(NotARefinementError):
        inner_decompose(P(1, F(3, 2), 3), P(1, 2, 3))


def test_outer_decompose():
    dec = outer_decompose(P(2, 3), P(1, 2, 3, 4))
    assert dec.lower == P(1, 2) and dec.middle == P(2, 3) and dec.upper == P(3, 4)

    dec = outer_decompose(P(1, 2), P(1, 2, 3))
    assert dec.lower is None and dec.middle == P(1, 2) and dec.upper == P(2, 3)

    dec = outer_decompose(P(1, 3), P(1, 2, 3))
    assert dec.lower is None and dec.middle == P(1, 2, 3) and dec.upper is None


@pytest.mark.parametrize("one, other, expected", [
    (P(1, 2), P(1, F(3, 2), 2), P(1, F(3, 2), 2)),
    (P(1, 2), P(2, 3), P(1, 2, 3)),
    (P(1, 4), P(2, 3), P(1, 2, 3, 4)),
])
def test_common_refinement(one, other, expected):
    assert common_refinement(one, other) == expected


points = st.lists(
    st.integers(min_value=1, max_value=6).map(F), min_size=2, max_size=6, unique=True,
).map(lambda pts: Partition(sorted(pts)))


@given(points, points)
def test_common_refinement_is_join(a, b):
    j = common_refinement(a, b)
    assert is_refinement(a, j) and is_refinement(b, j)
    assert set(j.points) == set(a.points) | set(b.points)


@given(points, points, points)
def test_common_refinement_semilattice_laws(a, b, c):
    assert common_refinement(a, b) == common_refinement(b, a)
    assert common_refinement(a, a) == a
    assert common_refinement(common_refinement(a, b), c) == \
        common_refinement(a, common_refinement(b, c))


@given(points, st.data())
def test_inner_decompose_concat_round_trip(fine, data):
    subset = data.draw(st.sets(st.sampled_from(fine.points)))
    coarse = Partition(sorted(subset | set(fine.endpoints)))
    blocks = inner_decompose(coarse, fine)
    merged = [blocks[0].points[0]]
    for block in blocks:
        merged.extend(block.points[1:])
    assert tuple(merged) == fine.points


def test_outer_decompose_merges_back():
    coarse, fine = P(2, 3), P(1, F(3, 2), 2, F(5, 2), 3, 4, 5)
    dec = outer_decompose(coarse, fine)
    pieces = [p for p in (dec.lower, dec.middle, dec.upper) if p is not None]
    merged = list(pieces[0].points)
    for piece in pieces[1:]:
        assert merged[-1] == piece.points[0]
        merged.extend(piece.points[1:])
    assert tuple(merged) == fine.points
