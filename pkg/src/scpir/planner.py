"""K-stage XOR query construction.

Stage 1 downloads one fresh bit of every message from every sub-message a
database stores. Stage i >= 2 downloads i-tuples that all live in a single
sub-message S:

* desired-containing tuples pair one fresh desired bit with an undesired
  (i-1)-tuple that another member of S downloaded at stage i-1 (side
  information, cancelled at decode time);
* pure-undesired tuples keep the per-(S, M) census identical for every
  desired index and are themselves recorded as side information for stage i+1.

Bit positions are drawn through a private uniform permutation of each
sub-message, so a database only ever sees uniformly random distinct positions.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations, permutations, product
from typing import Iterator, NamedTuple

import numpy as np

from .combinatorics import SubsetId, binom, subsets_containing
from .errors import ParameterError, PlanInvariantError
from .placement import Params, Placement

PLAN_SCHEMA_VERSION = 1

DESIRED = "desired-containing"
UNDESIRED = "pure-undesired"


class BitRef(NamedTuple):
    """One stored bit: message m, sub-message S, true position inside S."""

    message: int
    subset: SubsetId
    position: int


@dataclass(frozen=True)
class SecretPermutations:
    """User-private relabeling of every sub-message, keyed by (message, subset rank)."""

    seed: int | None
    perms: dict[tuple[int, int], tuple[int, ...]]

    def __getitem__(self, key: tuple[int, int]) -> tuple[int, ...]:
        return self.perms[key]

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "perms": [
                {"message": m, "subset_rank": r, "perm": list(p)}
                for (m, r), p in sorted(self.perms.items())
            ],
        }


def _keys(params: Params) -> list[tuple[int, int]]:
    return [(m, s.rank) for m in range(1, params.K + 1) for s in params.subsets]


def sample_permutations(params: Params, seed: int | None = None) -> SecretPermutations:
    """Draw one independent uniform permutation per sub-message."""
    rng = np.random.default_rng(seed)
    perms = {key: tuple(int(x) for x in rng.permutation(params.sub_size)) for key in _keys(params)}
    return SecretPermutations(seed, perms)


def identity_permutations(params: Params) -> SecretPermutations:
    ident = tuple(range(params.sub_size))
    return SecretPermutations(None, {key: ident for key in _keys(params)})


def joint_permutation_count(params: Params) -> int:
    return math.factorial(params.sub_size) ** (params.K * params.sub_count)


def enumerate_permutations(params: Params) -> Iterator[SecretPermutations]:
    """Every joint assignment of sub-message permutations, each exactly once."""
    keys = _keys(params)
    all_perms = list(permutations(range(params.sub_size)))
    for combo in product(all_perms, repeat=len(keys)):
        yield SecretPermutations(None, dict(zip(keys, combo)))


@dataclass(frozen=True)
class QueryElement:
    """One downloaded XOR: one bit from each message in ``messages``, all in ``subset``."""

    stage: int
    subset: SubsetId
    messages: tuple[int, ...]
    bits: tuple[BitRef, ...]
    desired: bool  # user-side only

    @property
    def kind(self) -> str:
        return DESIRED if self.desired else UNDESIRED

    @property
    def signature(self) -> tuple[int, int, tuple[int, ...]]:
        return (self.stage, self.subset.rank, self.messages)


@dataclass(frozen=True)
class LedgerEntry:
    """An undesired tuple downloaded by ``generator`` and reused by the rest of ``subset``."""

    stage: int
    generator: int
    subset: SubsetId
    messages: tuple[int, ...]
    element_index: int
    consumers: tuple[tuple[int, int], ...]  # (db, element index) per reuse


@dataclass(frozen=True)
class DatabaseQuery:
    """What database ``db`` receives: bare bit sets, nothing about the desired index."""

    db: int
    elements: tuple[tuple[BitRef, ...], ...]

    def to_json(self) -> dict:
        return {
            "version": PLAN_SCHEMA_VERSION,
            "db": self.db,
            "elements": [_element_json(bits) for bits in self.elements],
        }

    def canonical(self) -> tuple:
        """Hashable form used by the privacy audits."""
        return tuple(tuple((b.message, b.subset.rank, b.position) for b in e) for e in self.elements)


def _element_json(bits: tuple[BitRef, ...]) -> dict:
    return {
        "stage": len(bits),
        "subset_members": list(bits[0].subset.members),
        "bits": [{"message": b.message, "position": b.position} for b in bits],
    }


@dataclass(frozen=True)
class QueryPlan:
    params: Params
    theta: int
    queries: dict[int, tuple[QueryElement, ...]]
    permutations: SecretPermutations
    # (db, element index) of a desired tuple -> (db, element index) of the side information it cancels
    decode_map: dict[tuple[int, int], tuple[int, int]]
    ledger: tuple[LedgerEntry, ...]
    counters: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def downloaded_bits(self) -> int:
        return sum(len(q) for q in self.queries.values())

    def stage_census(self, n: int) -> dict[int, tuple[int, int]]:
        """Per stage: (elements, desired-containing elements) at database n."""
        out: dict[int, list[int]] = defaultdict(lambda: [0, 0])
        for e in self.queries[n]:
            out[e.stage][0] += 1
            out[e.stage][1] += e.desired
        return {i: (out[i][0], out[i][1]) for i in range(1, self.params.K + 1)}

    def to_json(self) -> dict:
        """Full user-side form, secrets included."""
        return {
            "version": PLAN_SCHEMA_VERSION,
            "params": self.params.as_dict(),
            "theta": self.theta,
            "queries": [
                {
                    "db": n,
                    "elements": [
                        dict(_element_json(e.bits), kind=e.kind) for e in self.queries[n]
                    ],
                }
                for n in sorted(self.queries)
            ],
            "decode_map": [
                {"db": n, "element": j, "source_db": d, "source_element": k}
                for (n, j), (d, k) in sorted(self.decode_map.items())
            ],
            "permutations": self.permutations.to_json(),
        }


def stage_counts(params: Params, i: int) -> tuple[int, int]:
    """Closed-form (total, desired) elements per database at stage i."""
    N, K, t = params.N, params.K, params.t
    if not 1 <= i <= K:
        raise ParameterError(f"stage must lie in [1, K={K}], got {i}")
    if i == 1:
        return K * binom(N - 1, t - 1), binom(N - 1, t - 1)
    shared = (N - 1) * binom(N - 2, t - 2) if N >= 2 else 0
    scale = shared * (t - 1) ** (i - 2)
    return binom(K, i) * scale, binom(K - 1, i - 1) * scale


def build_query_plan(
    params: Params,
    placement: Placement,
    theta: int,
    permutations: SecretPermutations,
) -> QueryPlan:
    """Build the full query plan for desired message ``theta``.

    Message contents are never touched; only sizes and the private
    permutations are used.

    Raises:
        ParameterError: theta out of range or permutations of the wrong shape.
        PlanInvariantError: a count or coverage check failed after construction.
    """
    N, K, t = params.N, params.K, params.t
    if placement.params != params:
        raise ParameterError("placement was built for different parameters")
    if isinstance(theta, bool) or not isinstance(theta, int) or not 1 <= theta <= K:
        raise ParameterError(f"theta must lie in [1, K={K}], got {theta!r}")
    _check_permutations(params, permutations)

    others = tuple(m for m in range(1, K + 1) if m != theta)
    counters: dict[tuple[int, int], int] = defaultdict(int)

    def fresh(m: int, s: SubsetId) -> BitRef:
        key = (m, s.rank)
        c = counters[key]
        if c >= params.sub_size:
            raise PlanInvariantError(f"sub-message {key} exhausted")
        counters[key] = c + 1
        return BitRef(m, s, permutations[key][c])

    # raw[n]: elements in generation order; handles are (n, generation index)
    raw: dict[int, list[QueryElement]] = {n: [] for n in range(1, N + 1)}
    ledger: dict[tuple[int, int, int, tuple[int, ...]], list[tuple[int, int]]] = defaultdict(list)
    raw_decode: dict[tuple[int, int], tuple[int, int]] = {}
    consumers: dict[tuple[int, int], list[tuple[int, int]]] = defaultdict(list)

    def emit(n: int, elem: QueryElement) -> tuple[int, int]:
        raw[n].append(elem)
        return (n, len(raw[n]) - 1)

    for n in range(1, N + 1):
        for s in subsets_containing(N, t, n):
            for m in range(1, K + 1):
                h = emit(n, QueryElement(1, s, (m,), (fresh(m, s),), m == theta))
                if m != theta:
                    ledger[(1, n, s.rank, (m,))].append(h)

    for i in range(2, K + 1):
        for n in range(1, N + 1):
            for s in subsets_containing(N, t, n):
                for side_msgs in combinations(others, i - 1):
                    msgs = tuple(sorted(side_msgs + (theta,)))
                    for d in s.members:
                        if d == n:
                            continue
                        for src in ledger[(i - 1, d, s.rank, side_msgs)]:
                            side_bits = raw[src[0]][src[1]].bits
                            bits = tuple(sorted(side_bits + (fresh(theta, s),), key=lambda b: b.message))
                            h = emit(n, QueryElement(i, s, msgs, bits, True))
                            raw_decode[h] = src
                            consumers[src].append(h)
                for msgs in combinations(others, i):
                    for _ in range((t - 1) ** (i - 1)):
                        bits = tuple(fresh(m, s) for m in msgs)
                        h = emit(n, QueryElement(i, s, msgs, bits, False))
                        ledger[(i, n, s.rank, msgs)].append(h)

    # canonical emission order, computable without knowing theta
    index_of: dict[tuple[int, int], tuple[int, int]] = {}
    queries: dict[int, tuple[QueryElement, ...]] = {}
    for n, elems in raw.items():
        order = sorted(range(len(elems)), key=lambda g: elems[g].signature)
        for new, g in enumerate(order):
            index_of[(n, g)] = (n, new)
        queries[n] = tuple(elems[g] for g in order)

    decode_map = {index_of[h]: index_of[src] for h, src in raw_decode.items()}
    entries = []
    for (stage, d, _, msgs), handles in sorted(ledger.items()):
        for h in handles:
            el = raw[h[0]][h[1]]
            entries.append(
                LedgerEntry(
                    stage=stage,
                    generator=d,
                    subset=el.subset,
                    messages=msgs,
                    element_index=index_of[h][1],
                    consumers=tuple(index_of[c] for c in consumers[h]),
                )
            )

    plan = QueryPlan(
        params=params,
        theta=theta,
        queries=queries,
        permutations=permutations,
        decode_map=decode_map,
        ledger=tuple(entries),
        counters=dict(counters),
    )
    _check_plan(plan)
    return plan


def _check_permutations(params: Params, permutations: SecretPermutations) -> None:
    expected = set(_keys(params))
    if set(permutations.perms) != expected:
        raise ParameterError("permutations do not cover exactly the sub-messages of these params")
    target = list(range(params.sub_size))
    for key, p in permutations.perms.items():
        if sorted(p) != target:
            raise ParameterError(f"permutation for {key} is not a bijection of [0, {params.sub_size})")


def _check_plan(plan: QueryPlan) -> None:
    params, theta = plan.params, plan.theta
    K, t = params.K, params.t
    for n, elems in plan.queries.items():
        census = plan.stage_census(n)
        for i in range(1, K + 1):
            if census[i] != stage_counts(params, i):
                raise PlanInvariantError(
                    f"db {n} stage {i}: built {census[i]}, closed form {stage_counts(params, i)}"
                )
        for e in elems:
            if n not in e.subset.members:
                raise PlanInvariantError(f"db {n} queried for sub-message {e.subset.members}")
    for s in params.subsets:
        used = plan.counters.get((theta, s.rank), 0)
        if used != params.sub_size:
            raise PlanInvariantError(f"desired sub-message {s.members} used {used} of {params.sub_size} bits")
    for entry in plan.ledger:
        if len(entry.consumers) != t - 1:
            raise PlanInvariantError(
                f"side information {entry} consumed {len(entry.consumers)} times, expected {t - 1}"
            )
    desired = Counter(
        (b.subset.rank, b.position)
        for elems in plan.queries.values()
        for e in elems
        if e.desired
        for b in e.bits
        if b.message == theta
    )
    if len(desired) != params.L or any(c != 1 for c in desired.values()):
        raise PlanInvariantError("desired bits do not partition the desired message")


def db_view(plan: QueryPlan, n: int) -> DatabaseQuery:
    """Strip everything user-private from database n's query."""
    if n not in plan.queries:
        raise ParameterError(f"database index must lie in [1, N={plan.params.N}], got {n}")
    return DatabaseQuery(n, tuple(e.bits for e in plan.queries[n]))
