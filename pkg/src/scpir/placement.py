"""Subset-indexed storage layout.

Each message of L = C(N,t) * t^K bits is cut into C(N,t) contiguous sub-messages
of t^K bits, in subset-rank order. Sub-message (m, S) lives on exactly the
databases in S.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .combinatorics import SubsetId, binom, enum_subsets, rank_subset, subsets_containing
from .errors import ParameterError, VerificationError

PLACEMENT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Params:
    """System parameters and every size derived from them."""

    N: int  # databases
    K: int  # messages
    t: int  # storage level, mu = t/N

    def __post_init__(self):
        for name in ("N", "K", "t"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ParameterError(f"{name} must be an integer, got {value!r}")
        if self.N < 1:
            raise ParameterError(f"N must be >= 1, got {self.N}")
        if self.K < 1:
            raise ParameterError(f"K must be >= 1, got {self.K}")
        if not 1 <= self.t <= self.N:
            raise ParameterError(f"t must lie in [1, N={self.N}], got {self.t}")

    @property
    def sub_count(self) -> int:
        return binom(self.N, self.t)

    @property
    def sub_size(self) -> int:
        return self.t**self.K

    @property
    def L(self) -> int:
        return self.sub_count * self.sub_size

    @property
    def mu(self) -> Fraction:
        return Fraction(self.t, self.N)

    @property
    def subs_per_db(self) -> int:
        """Sub-messages of one message held by a single database."""
        return binom(self.N - 1, self.t - 1)

    @property
    def per_db_storage(self) -> int:
        return self.K * self.subs_per_db * self.sub_size

    @property
    def subsets(self) -> tuple[SubsetId, ...]:
        return enum_subsets(self.N, self.t)

    def as_dict(self) -> dict:
        return {"N": self.N, "K": self.K, "t": self.t}


def make_params(N: int, K: int, t: int) -> Params:
    params = Params(N, K, t)
    if params.per_db_storage * params.N != params.t * params.K * params.L:
        raise VerificationError(f"storage identity broken for {params}")
    return params


@dataclass(frozen=True)
class Placement:
    """Which (message, subset) sub-messages each database holds."""

    params: Params
    assignments: dict[int, tuple[tuple[int, SubsetId], ...]]

    def stored_at(self, n: int) -> tuple[tuple[int, SubsetId], ...]:
        return self.assignments[n]

    def holders(self, subset: SubsetId) -> tuple[int, ...]:
        return subset.members

    def to_json(self) -> dict:
        p = self.params
        return {
            "version": PLACEMENT_SCHEMA_VERSION,
            "N": p.N,
            "K": p.K,
            "t": p.t,
            "assignments": [
                {"db": n, "message": m, "subset_members": list(s.members)}
                for n in range(1, p.N + 1)
                for m, s in self.assignments[n]
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Placement":
        if doc.get("version") != PLACEMENT_SCHEMA_VERSION:
            raise ParameterError(f"unsupported placement version {doc.get('version')!r}")
        params = make_params(doc["N"], doc["K"], doc["t"])
        by_db: dict[int, list] = {n: [] for n in range(1, params.N + 1)}
        for a in doc["assignments"]:
            members = tuple(sorted(a["subset_members"]))
            subset = SubsetId(members, rank_subset(members, params.N))
            by_db[a["db"]].append((a["message"], subset))
        placement = cls(params, {n: tuple(v) for n, v in by_db.items()})
        if placement != build_placement(params):
            raise ParameterError("placement document does not follow the subset-membership rule")
        return placement


def build_placement(params: Params) -> Placement:
    """Database n stores every sub-message whose index set contains n."""
    assignments = {}
    for n in range(1, params.N + 1):
        mine = subsets_containing(params.N, params.t, n)
        assignments[n] = tuple((m, s) for m in range(1, params.K + 1) for s in mine)
    return Placement(params, assignments)


@dataclass(frozen=True)
class DatabaseStore:
    """Contents Z_n of one database: (message, subset rank) -> bit vector."""

    db: int
    contents: dict[tuple[int, int], np.ndarray]

    def stored_bits(self) -> int:
        return sum(int(v.size) for v in self.contents.values())

    def holds(self, message: int, subset: SubsetId) -> bool:
        return (message, subset.rank) in self.contents


def _as_bits(msg, L: int, index: int) -> np.ndarray:
    arr = np.asarray(msg, dtype=np.uint8)
    if arr.ndim != 1 or arr.size != L:
        raise ParameterError(f"message {index} must be {L} bits, got shape {arr.shape}")
    if arr.size and arr.max() > 1:
        raise ParameterError(f"message {index} contains values other than 0/1")
    return arr


def sub_message(bits: np.ndarray, params: Params, subset: SubsetId) -> np.ndarray:
    lo = subset.rank * params.sub_size
    return bits[lo : lo + params.sub_size]


def init_databases(placement: Placement, messages: Sequence) -> list[DatabaseStore]:
    """Materialize every database from the K full messages.

    Each replica gets its own copy of the slice, so stores never alias each other.
    """
    params = placement.params
    if len(messages) != params.K:
        raise ParameterError(f"expected {params.K} messages, got {len(messages)}")
    msgs = [_as_bits(m, params.L, i + 1) for i, m in enumerate(messages)]
    stores = []
    for n in range(1, params.N + 1):
        contents = {
            (m, s.rank): sub_message(msgs[m - 1], params, s).copy()
            for m, s in placement.stored_at(n)
        }
        stores.append(DatabaseStore(n, contents))
    return stores


@dataclass(frozen=True)
class StorageReport:
    params: Params
    per_db_bits: dict[int, int]
    closed_form: int  # K * C(N-1,t-1) * t^K
    mu_KL: Fraction

    @property
    def ok(self) -> bool:
        return all(b == self.closed_form for b in self.per_db_bits.values()) and self.mu_KL == self.closed_form

    def to_json(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "per_db_bits": {str(n): b for n, b in self.per_db_bits.items()},
            "closed_form": self.closed_form,
            "mu_KL": str(self.mu_KL),
            "pass": self.ok,
        }


def verify_storage(placement: Placement, params: Params | None = None) -> StorageReport:
    """Check that every database stores exactly mu*K*L bits."""
    params = params or placement.params
    per_db = {
        n: len(placement.stored_at(n)) * params.sub_size for n in range(1, params.N + 1)
    }
    report = StorageReport(
        params=params,
        per_db_bits=per_db,
        closed_form=params.K * binom(params.N - 1, params.t - 1) * params.t**params.K,
        mu_KL=params.mu * params.K * params.L,
    )
    if not report.ok:
        raise VerificationError(f"storage mismatch: {report.to_json()}")
    return report
