"""Exact time points and interval partitions.

Time points are strictly positive rationals (``fractions.Fraction``); every
poset argument downstream relies on exact equality of cut points, so floats
are never accepted here.  A partition is a strictly increasing tuple of at
least two points; partitions ordered by set inclusion form the index poset of
every inductive construction in this package.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Union

TimePoint = Fraction
TimeLike = Union[Fraction, int, str]


class NotARefinementError(ValueError):
    pass


class EndpointMismatchError(ValueError):
    pass


def as_timepoint(value: TimeLike) -> Fraction:
    """Coerce an int, Fraction or "p/q" string to a positive exact rational."""
    if isinstance(value, float):
        raise TypeError(f"time points must be exact rationals, got float {value!r}")
    t = Fraction(value)
    if t <= 0:
        raise ValueError(f"time points must be > 0, got {t}")
    return t


def format_timepoint(t: Fraction) -> str:
    """Render as "p/q", or just "p" for integers (the wire format)."""
    return str(t.numerator) if t.denominator == 1 else f"{t.numerator}/{t.denominator}"


@dataclass(frozen=True)
class Partition:
    """A finite partition of the interval [min, max]: >= 2 strictly increasing points."""

    points: tuple[Fraction, ...]

    def __init__(self, points: Iterable[TimeLike]):
        pts = tuple(as_timepoint(p) for p in points)
        if len(pts) < 2:
            raise ValueError(f"a partition needs at least 2 points, got {pts}")
        if any(a >= b for a, b in zip(pts, pts[1:])):
            raise ValueError(f"partition points must be strictly increasing: {pts}")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, t) -> bool:
        return t in self.points

    def __str__(self) -> str:
        return "{" + ", ".join(format_timepoint(p) for p in self.points) + "}"

    @property
    def endpoints(self) -> tuple[Fraction, Fraction]:
        return self.points[0], self.points[-1]

    @property
    def interior(self) -> tuple[Fraction, ...]:
        return self.points[1:-1]

    def pairs(self) -> tuple[tuple[Fraction, Fraction], ...]:
        """Consecutive pairs (the cells of the partition)."""
        return tuple(zip(self.points, self.points[1:]))

    def restrict(self, lo: Fraction, hi: Fraction) -> "Partition":
        """The sub-partition of points within [lo, hi]; needs >= 2 survivors."""
        return Partition(p for p in self.points if lo <= p <= hi)


@dataclass(frozen=True)
class OuterDecomposition:
    """A refinement J of I split as (piece below min I) | (middle) | (piece above max I).

    Terminal pieces with fewer than 2 points are absent; the middle always
    shares endpoints with I and refines it.
    """

    lower: Optional[Partition]
    middle: Partition
    upper: Optional[Partition]


def is_refinement(coarse: Partition, fine: Partition) -> bool:
    """True iff every point of `coarse` occurs in `fine`."""
    return set(coarse.points) <= set(fine.points)


def inner_decompose(coarse: Partition, fine: Partition) -> list[Partition]:
    """Split a same-endpoint refinement into blocks along the cells of `coarse`.

    Block i collects the points of `fine` inside the i-th cell of `coarse`
    (cell endpoints included).  Merging the blocks at shared endpoints
    reproduces `fine`.
    """
    if coarse.endpoints != fine.endpoints:
        raise EndpointMismatchError(f"{coarse} and {fine} have different endpoints")
    if not is_refinement(coarse, fine):
        raise NotARefinementError(f"{fine} does not refine {coarse}")
    return [fine.restrict(a, b) for a, b in coarse.pairs()]


def outer_decompose(coarse: Partition, fine: Partition) -> OuterDecomposition:
    """Split a refinement whose endpoints may extend beyond those of `coarse`."""
    if not is_refinement(coarse, fine):
        raise NotARefinementError(f"{fine} does not refine {coarse}")
    lo, hi = coarse.endpoints
    below = [p for p in fine.points if p <= lo]
    above = [p for p in fine.points if p >= hi]
    return OuterDecomposition(
        lower=Partition(below) if len(below) >= 2 else None,
        middle=fine.restrict(lo, hi),
        upper=Partition(above) if len(above) >= 2 else None,
    )


def common_refinement(one: Partition, other: Partition) -> Partition:
    """The join in the refinement poset: sorted union of the point sets."""
    return Partition(sorted(set(one.points) | set(other.points)))
