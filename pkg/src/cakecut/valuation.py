"""Piecewise-constant value measures on the unit interval.

The cake is the interval [0, 1].  An agent's preferences are a non-atomic
measure represented by a finite list of constant-density segments whose
total mass is exactly 1.  All arithmetic is exact (``fractions.Fraction``),
so equality tests between utilities are sound: there is no tolerance
anywhere in this module.

Two query primitives drive every mechanism in the package:

* ``eval`` -- the value of a piece (a finite union of intervals), and
* ``cut`` -- the leftmost point accumulating a requested value from a
  given start point.

Both are closed under exact rational arithmetic for piecewise-constant
densities.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

RationalLike = Union[Fraction, int, str, float]

ZERO = Fraction(0)
ONE = Fraction(1)


class Unsatisfiable(Exception):
    """A cut query demanded more value than remains right of its start.

    Mechanisms in this package never issue such queries against answers
    that are consistent with some type, so seeing this error normally
    means a protocol bug (or a deliberately out-of-range probe).
    """

    def __init__(self, x: Fraction, alpha: Fraction, available: Fraction):
        self.x, self.alpha, self.available = x, alpha, available
        super().__init__(
            f"cut from {x} asked for {alpha} but only {available} remains"
        )


class ZeroRemainder(ValueError):
    """Conditioning a valuation on an interval it assigns zero value."""


def frac(value: RationalLike) -> Fraction:
    """Coerce ints, 'p/q' strings, exact decimal strings and floats.

    Floats are converted via their exact binary expansion; callers that
    care about decimal identities should pass strings.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**12)
    return Fraction(value)


def _coerce_interval(interval) -> tuple[Fraction, Fraction]:
    a, b = interval
    return frac(a), frac(b)


@dataclass(frozen=True)
class Piece:
    """A finite union of disjoint subintervals of [0, 1].

    Intervals are canonicalized on construction: coerced to ``Fraction``,
    sorted, degenerate (zero-length) intervals dropped, and touching
    intervals merged.  Endpoint sharing is fine; genuine overlap is an
    error.  Measure-zero boundaries never matter because valuations are
    non-atomic.
    """

    intervals: tuple[tuple[Fraction, Fraction], ...] = ()

    def __post_init__(self):
        raw = sorted(_coerce_interval(iv) for iv in self.intervals)
        merged: list[tuple[Fraction, Fraction]] = []
        for a, b in raw:
            if b < a:
                raise ValueError(f"interval ({a}, {b}) has negative length")
            if a < ZERO or b > ONE:
                raise ValueError(f"interval ({a}, {b}) leaves the cake [0, 1]")
            if a == b:
                continue
            if merged and a < merged[-1][1]:
                raise ValueError(
                    f"intervals overlap near {a}; pieces must be disjoint"
                )
            if merged and a == merged[-1][1]:
                merged[-1] = (merged[-1][0], b)
            else:
                merged.append((a, b))
        object.__setattr__(self, "intervals", tuple(merged))

    @classmethod
    def interval(cls, a: RationalLike, b: RationalLike) -> "Piece":
        return cls(((frac(a), frac(b)),))

    @property
    def length(self) -> Fraction:
        return sum((b - a for a, b in self.intervals), ZERO)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def union(self, other: "Piece") -> "Piece":
        return Piece(self.intervals + other.intervals)

    def __str__(self) -> str:
        if not self.intervals:
            return "(empty)"
        return " u ".join(f"[{a}, {b}]" for a, b in self.intervals)


@dataclass(frozen=True)
class Allocation:
    """An ordered tuple of pieces, one per agent.

    Mechanisms in this package always produce complete allocations:
    the pieces are pairwise disjoint up to endpoints and jointly cover
    [0, 1] up to a set of measure zero.  Construction does not enforce
    this (hot loops build millions of allocations); use ``is_complete``
    and ``is_disjoint`` to check.
    """

    pieces: tuple[Piece, ...]

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))

    def __len__(self) -> int:
        return len(self.pieces)

    def __getitem__(self, i: int) -> Piece:
        return self.pieces[i]

    def is_disjoint(self) -> bool:
        marks = sorted(
            iv for piece in self.pieces for iv in piece.intervals
        )
        return all(b <= marks[i + 1][0] for i, (a, b) in enumerate(marks[:-1]))

    def is_complete(self) -> bool:
        covered = sum((piece.length for piece in self.pieces), ZERO)
        return self.is_disjoint() and covered == ONE


@dataclass(frozen=True)
class Valuation:
    """An exact piecewise-constant measure, normalized to total mass 1.

    ``segments`` is an ordered tuple of ``(start, end, density)`` triples
    that tile the valuation's domain contiguously (zero-density segments
    are explicit).  The domain is [0, 1] for every full-cake valuation;
    ``restrict_and_rescale`` produces valuations living on a sub-domain
    [x, 1].

    >>> v = Valuation.uniform()
    >>> v.cut(0, Fraction(1, 4))
    Fraction(1, 4)
    >>> v.eval(Piece.interval(0, "1/2"))
    Fraction(1, 2)
    """

    segments: tuple[tuple[Fraction, Fraction, Fraction], ...]

    def __post_init__(self):
        segs = tuple(
            (frac(a), frac(b), frac(d)) for a, b, d in self.segments
        )
        if not segs:
            raise ValueError("a valuation needs at least one segment")
        total = ZERO
        for i, (a, b, d) in enumerate(segs):
            if a >= b:
                raise ValueError(f"segment ({a}, {b}) must have start < end")
            if d < ZERO:
                raise ValueError(f"segment ({a}, {b}) has negative density")
            if i and a != segs[i - 1][1]:
                raise ValueError(
                    f"segments must tile the domain; gap or overlap at {a}"
                )
            total += d * (b - a)
        if segs[0][0] < ZERO or segs[-1][1] > ONE:
            raise ValueError("valuation domain must lie within [0, 1]")
        if total != ONE:
            raise ValueError(
                f"total measure is {total}, but valuations are normalized to 1"
            )
        object.__setattr__(self, "segments", segs)
        # prefix[i] = mass strictly before segment i; exact rationals.
        starts = []
        prefix = []
        acc = ZERO
        for a, b, d in segs:
            starts.append(a)
            prefix.append(acc)
            acc += d * (b - a)
        object.__setattr__(self, "_starts", tuple(starts))
        object.__setattr__(self, "_prefix", tuple(prefix))
        object.__setattr__(self, "_cut_cache", {})

    # -- constructors -------------------------------------------------

    @classmethod
    def uniform(cls) -> "Valuation":
        return cls(((ZERO, ONE, ONE),))

    @classmethod
    def from_segments(cls, segments: Iterable) -> "Valuation":
        return cls(tuple((frac(a), frac(b), frac(d)) for a, b, d in segments))

    @classmethod
    def from_blocks(cls, blocks: Iterable, normalize: bool = False) -> "Valuation":
        """Build a full-cake valuation from positive-density blocks.

        ``blocks`` is an iterable of ``(start, end, density)``; gaps are
        filled with explicit zero-density segments so the result tiles
        [0, 1].  With ``normalize=True`` densities are rescaled so the
        total mass is exactly 1.
        """
        blks = sorted((frac(a), frac(b), frac(d)) for a, b, d in blocks)
        segs: list[tuple[Fraction, Fraction, Fraction]] = []
        pos = ZERO
        for a, b, d in blks:
            if a < pos:
                raise ValueError(f"blocks overlap at {a}")
            if a > pos:
                segs.append((pos, a, ZERO))
            segs.append((a, b, d))
            pos = b
        if pos < ONE:
            segs.append((pos, ONE, ZERO))
        if normalize:
            total = sum(d * (b - a) for a, b, d in segs)
            if total <= ZERO:
                raise ValueError("cannot normalize a zero measure")
            segs = [(a, b, d / total) for a, b, d in segs]
        return cls(tuple(segs))

    # -- basic geometry ------------------------------------------------

    @property
    def domain(self) -> tuple[Fraction, Fraction]:
        return self.segments[0][0], self.segments[-1][1]

    @property
    def breakpoints(self) -> tuple[Fraction, ...]:
        return self._starts + (self.segments[-1][1],)

    @property
    def max_density(self) -> Fraction:
        return max(d for _, _, d in self.segments)

    def cumulative(self, x: RationalLike) -> Fraction:
        """Mass of [domain start, x]; clamps x into the domain."""
        x = frac(x)
        lo, hi = self.domain
        if x <= lo:
            return ZERO
        if x >= hi:
            return ONE
        i = bisect_right(self._starts, x) - 1
        a, b, d = self.segments[i]
        return self._prefix[i] + d * (x - a)

    # -- the two query primitives ---------------------------------------

    def eval_interval(self, x: RationalLike, y: RationalLike) -> Fraction:
        """Exact value of the interval [x, y]; degenerate intervals are 0."""
        x, y = frac(x), frac(y)
        if y <= x:
            return ZERO
        return self.cumulative(y) - self.cumulative(x)

    def eval(self, piece: Piece) -> Fraction:
        """Exact value of a piece; additive over its disjoint intervals."""
        return sum((self.eval_interval(a, b) for a, b in piece.intervals), ZERO)

    def cut(self, x: RationalLike, alpha: RationalLike) -> Fraction:
        """The minimum y with ``eval([x, y]) == alpha``, exactly.

        Zero-density plateaus are resolved by minimality: the answer is
        the leftmost point at which the requested mass has accumulated.
        Raises :class:`Unsatisfiable` when less than ``alpha`` remains
        in [x, 1].
        """
        x, alpha = frac(x), frac(alpha)
        if alpha < ZERO:
            raise ValueError("cut target must be non-negative")
        if alpha == ZERO:
            return x
        key = (x, alpha)
        cached = self._cut_cache.get(key)
        if cached is not None:
            return cached
        base = self.cumulative(x)
        available = ONE - base
        if alpha > available:
            raise Unsatisfiable(x, alpha, available)
        target = base + alpha
        y = None
        for i, (a, b, d) in enumerate(self.segments):
            seg_end_mass = self._prefix[i] + d * (b - a)
            if seg_end_mass < target:
                continue
            if self._prefix[i] == target:
                y = a
                break
            # target is reached strictly inside this segment, so d > 0.
            y = a + (target - self._prefix[i]) / d
            break
        if y is None:  # target == 1 reached only at the domain's right end
            y = self.domain[1]
        self._cut_cache[key] = y
        return y

    # -- derived operations ---------------------------------------------

    def restrict_and_rescale(self, x: RationalLike) -> tuple["Valuation", Fraction]:
        """Condition on [x, 1]: truncate segments and rescale to mass 1.

        The returned valuation keeps the domain [x, 1] (it is not
        re-mapped onto [0, 1]); the second element is the scale factor
        ``eval([x, 1])`` of the original valuation.
        """
        x = frac(x)
        scale = self.eval_interval(x, self.domain[1])
        if scale == ZERO:
            raise ZeroRemainder(f"no value remains in [{x}, 1]")
        if x <= self.domain[0]:
            return self, scale
        segs = []
        for a, b, d in self.segments:
            if b <= x:
                continue
            segs.append((max(a, x), b, d / scale))
        return Valuation(tuple(segs)), scale

    def divisibility_point(
        self, x: RationalLike, y: RationalLike, lam: RationalLike
    ) -> Fraction:
        """The minimal z in [x, y] with ``eval([x, z]) == lam * eval([x, y])``."""
        x, y, lam = frac(x), frac(y), frac(lam)
        if y < x:
            raise ValueError("need x <= y")
        if lam < ZERO or lam > ONE:
            raise ValueError("need 0 <= lambda <= 1")
        target = lam * self.eval_interval(x, y)
        if target == ZERO:
            return x
        return self.cut(x, target)

    def __str__(self) -> str:
        body = ", ".join(f"[{a},{b}]@{d}" for a, b, d in self.segments)
        return f"Valuation({body})"
