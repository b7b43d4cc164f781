from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from scpir.combinatorics import (
    SubsetId,
    binom,
    enum_subsets,
    fmt_rational,
    parse_rational,
    rank_subset,
    subsets_containing,
    unrank_subset,
)
from scpir.errors import ParameterError

from oracles import binom_oracle, subsets_oracle


@pytest.mark.parametrize("n,k,expected", [(3, 2, 3), (1, -1, 0), (6, 3, 20), (0, 0, 1), (4, 5, 0)])
def test_binom_examples(n, k, expected):
    assert binom(n, k) == expected


def test_binom_rejects_negative_n():
    with pytest.raises(ParameterError):
        binom(-1, 0)


def test_binom_matches_pascal_oracle():
    for n in range(31):
        for k in range(-2, n + 3):
            assert binom(n, k) == binom_oracle(n, k)


def test_pascal_recurrence():
    for n in range(1, 31):
        for k in range(0, n + 1):
            assert binom(n, k) == binom(n - 1, k - 1) + binom(n - 1, k)


def test_binom_is_exact_for_large_arguments():
    # 2^64 would wrap in fixed-width arithmetic
    assert binom(200, 100) == 90548514656103281165404177077484163874504589675413336841320
    assert binom(200, 100) > 2**64


@pytest.mark.parametrize(
    "N,t,expected",
    [
        (3, 2, [(1, 2), (1, 3), (2, 3)]),
        (3, 3, [(1, 2, 3)]),
        (4, 1, [(1,), (2,), (3,), (4,)]),
    ],
)
def test_enum_subsets_examples(N, t, expected):
    subs = enum_subsets(N, t)
    assert [s.members for s in subs] == expected
    assert [s.rank for s in subs] == list(range(len(expected)))


@pytest.mark.parametrize("N,t", [(3, 0), (3, 4), (0, 1)])
def test_enum_subsets_rejects_bad_params(N, t):
    with pytest.raises(ParameterError):
        enum_subsets(N, t)


def test_enum_matches_bitmask_oracle():
    for N in range(1, 9):
        for t in range(1, N + 1):
            assert [s.members for s in enum_subsets(N, t)] == subsets_oracle(N, t)


def test_rank_unrank_round_trip_all_small():
    for N in range(1, 11):
        for t in range(1, N + 1):
            for s in enum_subsets(N, t):
                assert rank_subset(s.members, N) == s.rank
                assert unrank_subset(s.rank, N, t) == s


def test_rank_accepts_unsorted_members():
    assert rank_subset([3, 1], 3) == 1


@pytest.mark.parametrize("members", [[1, 1], [0, 2], [2, 4]])
def test_rank_rejects_non_subsets(members):
    with pytest.raises(ParameterError):
        rank_subset(members, 3)


def test_unrank_out_of_range():
    with pytest.raises(ParameterError):
        unrank_subset(3, 3, 2)


def test_subsets_containing():
    assert [s.members for s in subsets_containing(3, 2, 1)] == [(1, 2), (1, 3)]
    assert [s.members for s in subsets_containing(3, 2, 3)] == [(1, 3), (2, 3)]


def test_storage_identity_used_by_stage_sums():
    for N in range(2, 11):
        for t in range(2, N + 1):
            assert (N - 1) * binom(N - 2, t - 2) == binom(N - 1, t - 1) * (t - 1)


def test_rational_examples():
    assert 1 + Fraction(1, 2) == Fraction(3, 2)
    assert Fraction(1, 3) + Fraction(1, 9) + 1 == Fraction(13, 9)
    assert Fraction(3, 2) < Fraction(5, 3)
    assert Fraction(6, 4) == Fraction(3, 2) and Fraction(6, 4).denominator == 2
    with pytest.raises(ZeroDivisionError):
        Fraction(1, 0)


def test_rational_text_round_trip():
    assert fmt_rational(Fraction(3, 2)) == "3/2"
    assert fmt_rational(Fraction(4, 2)) == "2"
    assert parse_rational("1/2") == Fraction(1, 2)
    assert parse_rational(" 3 ") == 3
    for bad in ["0.5", "1/0", "abc", "1e3"]:
        with pytest.raises(ParameterError):
            parse_rational(bad)


@given(st.integers(1, 12).flatmap(lambda N: st.tuples(st.just(N), st.integers(1, N))).flatmap(
    lambda nt: st.tuples(st.just(nt[0]), st.just(nt[1]), st.integers(0, binom(nt[0], nt[1]) - 1))
))
def test_unrank_then_rank(args):
    N, t, r = args
    s = unrank_subset(r, N, t)
    assert isinstance(s, SubsetId)
    assert len(s.members) == t and list(s.members) == sorted(set(s.members))
    assert rank_subset(s.members, N) == r
