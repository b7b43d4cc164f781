"""In-process multi-database execution and zero-error decoding."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .analysis import theoretical_cost
from .combinatorics import fmt_rational
from .errors import IllegalQueryError, ParameterError, VerificationError
from .placement import DatabaseStore, Params, build_placement, init_databases, make_params
from .planner import DatabaseQuery, QueryPlan, build_query_plan, db_view, sample_permutations, stage_counts


def answer_query(store: DatabaseStore, view: DatabaseQuery) -> list[int]:
    """XOR the referenced stored bits for every element of the query.

    An honest database refuses references to sub-messages it does not hold.
    """
    contents = store.contents
    answers = []
    for j, bits in enumerate(view.elements):
        acc = 0
        for b in bits:
            vec = contents.get((b.message, b.subset.rank))
            if vec is None:
                raise IllegalQueryError(
                    f"db {store.db}: element {j} references message {b.message} "
                    f"sub-message {b.subset.members}, which is not stored here"
                )
            if not 0 <= b.position < vec.size:
                raise IllegalQueryError(f"db {store.db}: element {j} position {b.position} out of range")
            acc ^= int(vec[b.position])
        answers.append(acc)
    return answers


@dataclass(frozen=True)
class AnswerSet:
    answers: dict[int, tuple[int, ...]]

    def to_json(self) -> dict:
        return {"answers": [{"db": n, "bits": list(a)} for n, a in sorted(self.answers.items())]}


def collect_answers(plan: QueryPlan, stores: Sequence[DatabaseStore], concurrent: bool = False) -> AnswerSet:
    """Send each database its sanitized view and gather the replies."""
    views = [db_view(plan, s.db) for s in stores]
    if concurrent:
        with ThreadPoolExecutor() as pool:
            replies = list(pool.map(answer_query, stores, views))
    else:
        replies = [answer_query(s, v) for s, v in zip(stores, views)]
    return AnswerSet({s.db: tuple(r) for s, r in zip(stores, replies)})


def decode(plan: QueryPlan, answers: AnswerSet) -> np.ndarray:
    """Recover the L bits of the desired message.

    Stage-1 desired singles are read directly; every later desired tuple is
    XORed with the answer of the side-information tuple it was built from.
    """
    params, theta = plan.params, plan.theta
    for n, elems in plan.queries.items():
        got = answers.answers.get(n)
        if got is None or len(got) != len(elems):
            raise VerificationError(f"answers for db {n} are missing or misaligned with its query")

    subs = {s.rank: np.full(params.sub_size, 255, dtype=np.uint8) for s in params.subsets}
    for n, elems in plan.queries.items():
        ans = answers.answers[n]
        for j, e in enumerate(elems):
            if not e.desired:
                continue
            bit = ans[j]
            if e.stage > 1:
                try:
                    d, k = plan.decode_map[(n, j)]
                    bit ^= answers.answers[d][k]
                except (KeyError, IndexError):
                    raise VerificationError(f"decode map reference for ({n}, {j}) is out of range") from None
            ref = next(b for b in e.bits if b.message == theta)
            subs[ref.subset.rank][ref.position] = bit
    out = np.concatenate([subs[s.rank] for s in params.subsets])
    if (out > 1).any():
        raise VerificationError("some desired positions were never recovered")
    return out


def stage_table(plan: QueryPlan) -> list[dict]:
    params = plan.params
    census = {n: plan.stage_census(n) for n in plan.queries}
    rows = []
    for i in range(1, params.K + 1):
        total, desired = stage_counts(params, i)
        rows.append(
            {
                "t": params.t,
                "stage": i,
                "total_per_db": [census[n][i][0] for n in sorted(census)],
                "desired_per_db": [census[n][i][1] for n in sorted(census)],
                "formula_total": total,
                "formula_desired": desired,
            }
        )
    return rows


@dataclass
class RetrievalReport:
    params: Params | None
    theta: int
    decoded: np.ndarray
    downloaded_bits: int
    desired_bits: int
    stage_table: list[dict] = field(default_factory=list)
    verified: bool = False

    @property
    def cost(self) -> Fraction:
        return Fraction(self.downloaded_bits, self.desired_bits)

    def to_json(self, include_bits: bool = False) -> dict:
        doc = {
            "params": self.params.as_dict() if self.params else None,
            "theta": self.theta,
            "downloaded_bits": self.downloaded_bits,
            "desired_bits": self.desired_bits,
            "cost": fmt_rational(self.cost),
            "cost_decimal": float(self.cost),
            "stage_table": self.stage_table,
            "verified": self.verified,
        }
        if include_bits:
            doc["decoded"] = "".join(str(int(b)) for b in self.decoded)
        return doc


def run_retrieval(params: Params, messages: Sequence, theta: int, seed: int | None = None) -> RetrievalReport:
    """Full pipeline: permutations, plan, sanitized queries, answers, decode.

    Raises:
        VerificationError: decoded bits differ from the stored message, or the
            measured cost differs from the closed form.
    """
    if not isinstance(params, Params):
        params = make_params(*params)
    placement = build_placement(params)
    stores = init_databases(placement, messages)
    plan = build_query_plan(params, placement, theta, sample_permutations(params, seed))
    answers = collect_answers(plan, stores)
    decoded = decode(plan, answers)

    wanted = np.asarray(messages[theta - 1], dtype=np.uint8)
    if not np.array_equal(decoded, wanted):
        bad = int(np.count_nonzero(decoded != wanted))
        raise VerificationError(f"decode mismatch at {bad} of {params.L} positions")
    report = RetrievalReport(
        params=params,
        theta=theta,
        decoded=decoded,
        downloaded_bits=plan.downloaded_bits,
        desired_bits=params.L,
        stage_table=stage_table(plan),
    )
    expected = theoretical_cost(params.t, params.K)
    if report.cost != expected:
        raise VerificationError(f"cost {report.cost} differs from closed form {expected}")
    report.verified = True
    return report


def random_messages(params: Params, rng: np.random.Generator) -> list[np.ndarray]:
    return [rng.integers(0, 2, params.L, dtype=np.uint8) for _ in range(params.K)]


def zero_messages(params: Params) -> list[np.ndarray]:
    return [np.zeros(params.L, dtype=np.uint8) for _ in range(params.K)]


def read_message_file(path, params: Params) -> list[np.ndarray]:
    """K concatenated messages, bits packed little-endian within bytes, zero padded."""
    raw = np.fromfile(path, dtype=np.uint8)
    total = params.K * params.L
    if raw.size != (total + 7) // 8:
        raise ParameterError(
            f"message file holds {raw.size} bytes; K*L = {total} bits needs {(total + 7) // 8}"
        )
    bits = np.unpackbits(raw, bitorder="little")
    if bits[total:].any():
        raise ParameterError("message file has nonzero padding bits")
    return [bits[k * params.L : (k + 1) * params.L].copy() for k in range(params.K)]


def write_message_file(path, messages: Sequence) -> None:
    bits = np.concatenate([np.asarray(m, dtype=np.uint8) for m in messages])
    np.packbits(bits, bitorder="little").tofile(path)
