"""Exact counting helpers and canonical t-subset enumeration.

All cost arithmetic in the package goes through :class:`fractions.Fraction`
(aliased here as ``Rational``) and Python integers, so nothing is ever rounded
and nothing can overflow.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import NamedTuple, Sequence

from .errors import ParameterError

Rational = Fraction


class SubsetId(NamedTuple):
    """A size-t subset of databases, 1-based members in ascending order."""

    members: tuple[int, ...]
    rank: int

    def label(self) -> str:
        sep = "" if self.members[-1] < 10 else ","
        return sep.join(str(m) for m in self.members)


def binom(n: int, k: int) -> int:
    """Binomial coefficient with ``binom(n, k) == 0`` for k < 0 or k > n."""
    if n < 0:
        raise ParameterError(f"binom requires n >= 0, got n={n}")
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def _check_nt(N: int, t: int) -> None:
    if N < 1 or not 1 <= t <= N:
        raise ParameterError(f"need 1 <= t <= N, got N={N}, t={t}")


@lru_cache(maxsize=256)
def enum_subsets(N: int, t: int) -> tuple[SubsetId, ...]:
    """All size-t subsets of {1..N} in lexicographic order of their sorted members."""
    _check_nt(N, t)
    return tuple(
        SubsetId(members, rank)
        for rank, members in enumerate(combinations(range(1, N + 1), t))
    )


@lru_cache(maxsize=1024)
def subsets_containing(N: int, t: int, n: int) -> tuple[SubsetId, ...]:
    """The subsets (in rank order) that include database ``n``."""
    return tuple(s for s in enum_subsets(N, t) if n in s.members)


def rank_subset(members: Sequence[int], N: int) -> int:
    """Lexicographic rank of a subset among all subsets of the same size.

    Counts the subsets that precede ``members``: at each position, every
    smaller candidate value fixes a block of ``binom(N - value, remaining)``
    subsets that sort earlier.
    """
    ms = sorted(members)
    t = len(ms)
    _check_nt(N, t)
    if len(set(ms)) != t or ms[0] < 1 or ms[-1] > N:
        raise ParameterError(f"{members!r} is not a subset of 1..{N}")
    rank = 0
    prev = 0
    for i, m in enumerate(ms):
        remaining = t - i - 1
        for v in range(prev + 1, m):
            rank += binom(N - v, remaining)
        prev = m
    return rank


def unrank_subset(rank: int, N: int, t: int) -> SubsetId:
    """Inverse of :func:`rank_subset`."""
    _check_nt(N, t)
    total = binom(N, t)
    if not 0 <= rank < total:
        raise ParameterError(f"rank {rank} out of range [0, {total})")
    members = []
    r = rank
    v = 1
    for i in range(t):
        remaining = t - i - 1
        while True:
            block = binom(N - v, remaining)
            if r < block:
                break
            r -= block
            v += 1
        members.append(v)
        v += 1
    return SubsetId(tuple(members), rank)


def fmt_rational(x: Fraction) -> str:
    """``p/q`` form; integers print without a denominator."""
    return str(Fraction(x))


def parse_rational(text: str) -> Fraction:
    """Parse ``"p/q"`` or an integer. Decimal strings are rejected."""
    text = text.strip()
    if "." in text or "e" in text.lower():
        raise ParameterError(f"expected a rational 'p/q', got {text!r}")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParameterError(f"cannot parse rational {text!r}: {exc}") from None
