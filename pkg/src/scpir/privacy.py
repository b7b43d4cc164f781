"""Per-database privacy audits.

Three tiers, weakest to strongest evidence:

structural
    The (subset, message-set) census of every database's query and its
    emission order must be the same for every desired index.
exhaustive
    Enumerate every joint permutation assignment and compare the multisets of
    sanitized queries across desired indices. Only feasible for tiny params.
montecarlo
    Sample plans per desired index and bound the empirical total-variation
    distance between the query distributions.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy import stats

from .errors import EnumerationBoundError
from .placement import Params, build_placement
from .planner import (
    QueryPlan,
    SecretPermutations,
    build_query_plan,
    db_view,
    enumerate_permutations,
    identity_permutations,
    joint_permutation_count,
)

DEFAULT_EXHAUSTIVE_BOUND = 10**6
DEFAULT_TV_THRESHOLD = 0.05


@dataclass
class AuditReport:
    mode: str
    params: Params
    per_db: list[dict]
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(row["pass"] for row in self.per_db)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "params": self.params.as_dict(),
            "per_db": self.per_db,
            "pass": self.passed,
            **self.details,
        }


def _plans(params: Params, permutations: SecretPermutations) -> dict[int, QueryPlan]:
    placement = build_placement(params)
    return {theta: build_query_plan(params, placement, theta, permutations) for theta in range(1, params.K + 1)}


def _nonempty_message_sets(K: int):
    for size in range(1, K + 1):
        yield from combinations(range(1, K + 1), size)


def structural_audit(params: Params) -> AuditReport:
    plans = _plans(params, identity_permutations(params))
    t = params.t
    rows = []
    for n in range(1, params.N + 1):
        diffs = []
        censuses = {}
        for theta, plan in plans.items():
            census = Counter((e.subset.rank, e.messages) for e in plan.queries[n])
            censuses[theta] = census
            for s in params.subsets:
                if n not in s.members:
                    continue
                for msgs in _nonempty_message_sets(params.K):
                    got = census.get((s.rank, msgs), 0)
                    want = (t - 1) ** (len(msgs) - 1)
                    if got != want:
                        diffs.append(
                            {"theta": theta, "subset": list(s.members), "messages": list(msgs), "count": got, "expected": want}
                        )
            illegal = [e.subset.members for e in plan.queries[n] if n not in e.subset.members]
            if illegal:
                diffs.append({"theta": theta, "illegal_subsets": [list(m) for m in illegal]})
        base_order = [e.signature for e in plans[1].queries[n]]
        for theta, plan in plans.items():
            if theta == 1:
                continue
            if censuses[theta] != censuses[1]:
                diffs.append({"theta_pair": [1, theta], "census_differs": True})
            if [e.signature for e in plan.queries[n]] != base_order:
                diffs.append({"theta_pair": [1, theta], "emission_order_differs": True})
        rows.append({"db": n, "elements": len(base_order), "census_diff": diffs, "pass": not diffs})
    return AuditReport("structural", params, rows)


def exhaustive_audit(params: Params, bound: int = DEFAULT_EXHAUSTIVE_BOUND) -> AuditReport:
    """Exact check: identical query multisets over all joint permutations.

    Raises:
        EnumerationBoundError: when (sub_size!)^(K * sub_count) exceeds ``bound``.
    """
    total = joint_permutation_count(params)
    if total > bound:
        digits = len(str(total))
        shown = str(total) if digits <= 24 else f"about 10^{digits - 1}"
        raise EnumerationBoundError(
            f"exhaustive audit needs {shown} joint permutations per desired index, above the bound {bound}; "
            "use the montecarlo mode instead"
        )
    placement = build_placement(params)
    multisets = {theta: {n: Counter() for n in range(1, params.N + 1)} for theta in range(1, params.K + 1)}
    for perms in enumerate_permutations(params):
        for theta in range(1, params.K + 1):
            plan = build_query_plan(params, placement, theta, perms)
            for n in range(1, params.N + 1):
                multisets[theta][n][db_view(plan, n).canonical()] += 1
    rows = []
    for n in range(1, params.N + 1):
        base = multisets[1][n]
        diff = sum(((multisets[theta][n] - base) + (base - multisets[theta][n])).total() for theta in multisets)
        rows.append({"db": n, "distinct_queries": len(base), "multiset_diff": diff, "pass": diff == 0})
    return AuditReport("exhaustive", params, rows, {"joint_permutations": total})


# -- Monte Carlo -------------------------------------------------------------


def _slots(plan: QueryPlan, n: int, key_index: dict) -> tuple[np.ndarray, np.ndarray]:
    """(key index, counter) for every bit slot of db n's query under identity permutations."""
    keys, counters = [], []
    for bits in db_view(plan, n).elements:
        for b in bits:
            keys.append(key_index[(b.message, b.subset.rank)])
            counters.append(b.position)
    return np.array(keys, dtype=np.intp), np.array(counters, dtype=np.intp)


def _draw_perms(params: Params, keys: list, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Shape (keys, trials, sub_size): one uniform permutation per key per trial."""
    base = np.broadcast_to(np.arange(params.sub_size, dtype=np.int16), (len(keys), trials, params.sub_size))
    return rng.permuted(base, axis=2)


def _tv(a: Counter, b: Counter, n_a: int, n_b: int) -> float:
    return 0.5 * sum(abs(a.get(k, 0) / n_a - b.get(k, 0) / n_b) for k in set(a) | set(b))


def _chi2(a: Counter, b: Counter) -> tuple[float, float]:
    support = sorted(set(a) | set(b), key=repr)
    if len(support) < 2:
        return 0.0, 1.0
    table = np.array([[a.get(k, 0) for k in support], [b.get(k, 0) for k in support]])
    res = stats.chi2_contingency(table, correction=False)
    return float(res.statistic), float(res.pvalue)


def _row_counter(matrix: np.ndarray) -> Counter:
    if matrix.shape[1] == 0:
        return Counter({(): matrix.shape[0]})
    uniq, counts = np.unique(matrix, axis=0, return_counts=True)
    return Counter({tuple(int(x) for x in row): int(c) for row, c in zip(uniq, counts)})


def _features(positions: np.ndarray, slot_keys: np.ndarray) -> dict[str, Counter]:
    """Per-slot position marginals plus the within-sub-message equality pattern.

    The full joint query has far too large a support to estimate from 10^5
    samples; these projections keep the sampling noise small while still
    exposing non-uniform positions (marginals) and reuse structure (pattern).
    """
    feats = {}
    for j in range(positions.shape[1]):
        vals, counts = np.unique(positions[:, j], return_counts=True)
        feats[f"slot{j}"] = Counter({int(v): int(c) for v, c in zip(vals, counts)})
    pairs = [
        (a, b)
        for a in range(len(slot_keys))
        for b in range(a + 1, len(slot_keys))
        if slot_keys[a] == slot_keys[b]
    ]
    if pairs:
        left = np.array([a for a, _ in pairs])
        right = np.array([b for _, b in pairs])
        feats["equality_pattern"] = _row_counter(positions[:, left] == positions[:, right])
    else:
        feats["equality_pattern"] = Counter({(): positions.shape[0]})
    return feats


def _arm(params: Params, placement, theta: int, trials: int, seed, keys, key_index, verify: int):
    """Sample ``trials`` sanitized queries per database for one desired index."""
    skeleton = build_query_plan(params, placement, theta, identity_permutations(params))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(theta,)))
    perms = _draw_perms(params, keys, trials, rng)
    out = {}
    for n in range(1, params.N + 1):
        slot_keys, counters = _slots(skeleton, n, key_index)
        positions = perms[slot_keys, :, counters].T  # (trials, slots)
        out[n] = (skeleton.queries[n], slot_keys, positions)

    # replay a few trials through the real planner; the vectorized path must agree exactly
    for r in range(min(verify, trials)):
        sp = SecretPermutations(None, {k: tuple(int(x) for x in perms[i, r]) for i, k in enumerate(keys)})
        plan = build_query_plan(params, placement, theta, sp)
        for n in range(1, params.N + 1):
            real = [b.position for bits in db_view(plan, n).elements for b in bits]
            if real != out[n][2][r].tolist():
                raise AssertionError(f"vectorized sampling diverged from planner at trial {r}, db {n}")
    return out


def monte_carlo_audit(
    params: Params,
    trials: int = 100_000,
    seed: int | None = 0,
    threshold: float = DEFAULT_TV_THRESHOLD,
    verify_trials: int = 8,
) -> AuditReport:
    """Empirical TV distance between query distributions for theta = 1 vs every other theta.

    The structure (element signatures in emission order) comes from the real
    planner with identity permutations; positions are then drawn by pushing
    the planner's counters through fresh uniform permutations, vectorized over
    trials. The first ``verify_trials`` trials are replayed through
    :func:`build_query_plan` to confirm both paths agree.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    placement = build_placement(params)
    keys = [(m, s.rank) for m in range(1, params.K + 1) for s in params.subsets]
    key_index = {k: i for i, k in enumerate(keys)}
    arms = {
        theta: _arm(params, placement, theta, trials, seed, keys, key_index, verify_trials)
        for theta in range(1, params.K + 1)
    }

    rows = []
    for n in range(1, params.N + 1):
        elems1, keys1, pos1 = arms[1][n]
        feats1 = _features(pos1, keys1)
        worst = {"max_tv": 0.0, "feature": None, "theta_pair": None, "chi2": 0.0, "p_value": 1.0}
        for theta in range(2, params.K + 1):
            elems, slot_keys, pos = arms[theta][n]
            if [e.signature for e in elems] != [e.signature for e in elems1] or not np.array_equal(slot_keys, keys1):
                worst.update(max_tv=1.0, feature="structure", theta_pair=[1, theta], chi2=float("inf"), p_value=0.0)
                continue
            feats = _features(pos, slot_keys)
            for name, counter in feats.items():
                tv = _tv(feats1[name], counter, trials, trials)
                if worst["feature"] is None or tv > worst["max_tv"]:
                    chi2, p = _chi2(feats1[name], counter)
                    worst.update(max_tv=tv, feature=name, theta_pair=[1, theta], chi2=chi2, p_value=p)
        rows.append({"db": n, **worst, "pass": worst["max_tv"] <= threshold})
    return AuditReport("montecarlo", params, rows, {"trials": trials, "seed": seed, "threshold": threshold})
