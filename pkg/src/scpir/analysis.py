"""Closed-form storage/download tradeoff and memory-sharing composition."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .combinatorics import binom, fmt_rational
from .errors import ParameterError, VerificationError


def theoretical_cost(t: int, K: int) -> Fraction:
    """1 + 1/t + ... + 1/t^(K-1), exactly."""
    if t < 1 or K < 1:
        raise ParameterError(f"need t >= 1 and K >= 1, got t={t}, K={K}")
    return sum((Fraction(1, t**i) for i in range(K)), Fraction(0))


@dataclass(frozen=True)
class TradeoffPoint:
    mu: Fraction
    cost: Fraction
    t: int | None = None
    on_hull: bool = False


def _check_nk(N: int, K: int) -> None:
    if N < 1 or K < 1:
        raise ParameterError(f"need N >= 1 and K >= 1, got N={N}, K={K}")


def _cross(o: TradeoffPoint, a: TradeoffPoint, b: TradeoffPoint) -> Fraction:
    return (a.mu - o.mu) * (b.cost - o.cost) - (a.cost - o.cost) * (b.mu - o.mu)


def lower_hull_flags(points: Sequence[TradeoffPoint]) -> list[bool]:
    """Membership of each point (sorted by mu) in the lower convex hull.

    Monotone chain in exact arithmetic. Collinear points on a hull edge count
    as on the hull.
    """
    hull: list[int] = []
    for i, p in enumerate(points):
        while len(hull) >= 2 and _cross(points[hull[-2]], points[hull[-1]], p) < 0:
            hull.pop()
        hull.append(i)
    keep = set(hull)
    return [i in keep for i in range(len(points))]


def tradeoff_curve(N: int, K: int) -> list[TradeoffPoint]:
    _check_nk(N, K)
    pts = [TradeoffPoint(Fraction(t, N), theoretical_cost(t, K), t) for t in range(1, N + 1)]
    flags = lower_hull_flags(pts)
    return [TradeoffPoint(p.mu, p.cost, p.t, f) for p, f in zip(pts, flags)]


def baseline_extremes(N: int, K: int, mu: Fraction) -> Fraction:
    """Cost of memory-sharing between mu = 1/N (cost K) and mu = 1 (full storage)."""
    _check_nk(N, K)
    mu = Fraction(mu)
    lo = Fraction(1, N)
    if not lo <= mu <= 1:
        raise ParameterError(f"mu must lie in [1/{N}, 1], got {mu}")
    if N == 1:
        return Fraction(K)
    full = theoretical_cost(N, K)
    return K + (mu - lo) / (1 - lo) * (full - K)


def improvement_report(N: int, K: int) -> list[dict]:
    """Interior grid points against the extremes baseline, with a strict-inequality verdict."""
    if N < 3:
        raise ParameterError(f"interior storage levels need N >= 3, got N={N}")
    _check_nk(N, K)
    rows = []
    for t in range(2, N):
        cost = theoretical_cost(t, K)
        base = baseline_extremes(N, K, Fraction(t, N))
        rows.append({"t": t, "mu": Fraction(t, N), "cost": cost, "baseline": base, "strict": cost < base})
    return rows


def curve_csv(N: int, K: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "mu_num", "mu_den", "cost_num", "cost_den", "cost_decimal", "on_hull", "baseline_decimal"])
    for p in tradeoff_curve(N, K):
        base = baseline_extremes(N, K, p.mu)
        w.writerow(
            [
                p.t,
                p.mu.numerator,
                p.mu.denominator,
                p.cost.numerator,
                p.cost.denominator,
                repr(float(p.cost)),
                str(p.on_hull).lower(),
                repr(float(base)),
            ]
        )
    return buf.getvalue()


def curve_json(N: int, K: int) -> dict:
    return {
        "N": N,
        "K": K,
        "points": [
            {
                "t": p.t,
                "mu": fmt_rational(p.mu),
                "cost": fmt_rational(p.cost),
                "cost_decimal": float(p.cost),
                "on_hull": p.on_hull,
                "baseline": fmt_rational(baseline_extremes(N, K, p.mu)),
                "baseline_decimal": float(baseline_extremes(N, K, p.mu)),
            }
            for p in tradeoff_curve(N, K)
        ],
    }


def unit_length(N: int, t: int, K: int) -> int:
    return binom(N, t) * t**K


@dataclass(frozen=True)
class MemShareSpec:
    N: int
    K: int
    mu: Fraction
    t1: int
    t2: int
    alpha: Fraction  # share of each message handled at level t1
    L1: int
    L2: int
    cost: Fraction

    @property
    def L(self) -> int:
        return self.L1 + self.L2

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "K": self.K,
            "mu": fmt_rational(self.mu),
            "t1": self.t1,
            "t2": self.t2,
            "alpha": fmt_rational(self.alpha),
            "L1": self.L1,
            "L2": self.L2,
            "cost": fmt_rational(self.cost),
            "cost_decimal": float(self.cost),
        }


def memory_share(N: int, K: int, mu: Fraction) -> MemShareSpec:
    """Split messages between the two grid levels adjacent to mu.

    Part sizes are the smallest integers with L1 : L2 = alpha : 1 - alpha
    such that each part is a whole number of scheme instances.
    """
    _check_nk(N, K)
    mu = Fraction(mu)
    if not Fraction(1, N) <= mu <= 1:
        raise ParameterError(f"mu must lie in [1/{N}, 1], got {mu}")
    scaled = mu * N
    if scaled.denominator == 1:
        t = int(scaled)
        return MemShareSpec(N, K, mu, t, t, Fraction(1), unit_length(N, t, K), 0, theoretical_cost(t, K))

    t1 = math.floor(scaled)
    t2 = t1 + 1
    alpha = t2 - scaled  # alpha*t1 + (1-alpha)*t2 = mu*N
    if alpha * Fraction(t1, N) + (1 - alpha) * Fraction(t2, N) != mu:
        raise VerificationError("memory-sharing weight does not reproduce mu")
    p, q = alpha.numerator, alpha.denominator - alpha.numerator
    u1, u2 = unit_length(N, t1, K), unit_length(N, t2, K)
    scale = math.lcm(u1 // math.gcd(u1, p), u2 // math.gcd(u2, q))
    cost = alpha * theoretical_cost(t1, K) + (1 - alpha) * theoretical_cost(t2, K)
    return MemShareSpec(N, K, mu, t1, t2, alpha, p * scale, q * scale, cost)


def _block_seed(seed: int | None, part: int, block: int) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(part, block))
    return int(ss.generate_state(1)[0])


def composite_retrieval(N: int, K: int, mu: Fraction, messages: Sequence, theta: int, seed: int | None = None):
    """Retrieve W_theta at fractional storage by running the grid scheme on two parts.

    Each part is cut into whole scheme instances (unit length C(N,t) t^K) and
    each instance runs the complete pipeline independently.
    """
    from .runtime import RetrievalReport, run_retrieval

    spec = memory_share(N, K, mu)
    msgs = [np.asarray(m, dtype=np.uint8) for m in messages]
    if len(msgs) != K or any(m.size != spec.L for m in msgs):
        raise ParameterError(f"need {K} messages of L1+L2 = {spec.L} bits")

    downloaded = 0
    decoded_parts = []
    table = []
    offset = 0
    for part, (t, length) in enumerate(((spec.t1, spec.L1), (spec.t2, spec.L2))):
        if length == 0:
            continue
        unit = unit_length(N, t, K)
        for block in range(length // unit):
            chunk = [m[offset : offset + unit] for m in msgs]
            rep = run_retrieval((N, K, t), chunk, theta, _block_seed(seed, part, block))
            downloaded += rep.downloaded_bits
            decoded_parts.append(rep.decoded)
            if block == 0:
                table.extend(dict(row, blocks=length // unit) for row in rep.stage_table)
            offset += unit

    decoded = np.concatenate(decoded_parts)
    if not np.array_equal(decoded, msgs[theta - 1]):
        raise VerificationError("composite decode mismatch")
    report = RetrievalReport(
        params=None,
        theta=theta,
        decoded=decoded,
        downloaded_bits=downloaded,
        desired_bits=spec.L,
        stage_table=table,
    )
    if report.cost != spec.cost:
        raise VerificationError(f"composite cost {report.cost} differs from {spec.cost}")
    report.verified = True
    return report
