import json
from fractions import Fraction

import jsonschema
import numpy as np
import pytest

from scpir import schemas
from scpir.errors import ParameterError
from scpir.placement import Placement, build_placement, init_databases, make_params, verify_storage

from oracles import storage_closed_forms


@pytest.mark.parametrize(
    "args,L,per_db",
    [((3, 2, 2), 12, 16), ((3, 3, 2), 24, 48), ((3, 2, 3), 9, 18)],
)
def test_make_params_golden(args, L, per_db):
    p = make_params(*args)
    assert p.L == L
    assert p.per_db_storage == per_db
    assert p.per_db_storage == p.mu * p.K * p.L


def test_params_derived_fields():
    p = make_params(3, 3, 2)
    assert (p.sub_count, p.sub_size, p.mu) == (3, 8, Fraction(2, 3))


@pytest.mark.parametrize("args", [(3, 2, 4), (3, 2, 0), (0, 1, 1), (3, 0, 1), (3.0, 2, 2), (3, True, 1)])
def test_make_params_rejects(args):
    with pytest.raises(ParameterError):
        make_params(*args)


def test_mu_range():
    for N in range(1, 8):
        for t in range(1, N + 1):
            mu = make_params(N, 2, t).mu
            assert Fraction(1, N) <= mu <= 1


def _labels(placement, n):
    names = "ABCDEFG"
    return [f"{names[m - 1]}{s.label()}" for m, s in placement.stored_at(n)]


def test_placement_matches_listing():
    pl = build_placement(make_params(3, 2, 2))
    assert _labels(pl, 1) == ["A12", "A13", "B12", "B13"]
    assert _labels(pl, 2) == ["A12", "A23", "B12", "B23"]
    assert _labels(pl, 3) == ["A13", "A23", "B13", "B23"]


def test_placement_t1_partitions():
    pl = build_placement(make_params(3, 2, 1))
    assert _labels(pl, 2) == ["A2", "B2"]


def test_placement_full_replication():
    p = make_params(4, 3, 4)
    pl = build_placement(p)
    for n in range(1, 5):
        assert len(pl.stored_at(n)) == 3
        assert all(s.members == (1, 2, 3, 4) for _, s in pl.stored_at(n))


def test_membership_rule_and_holder_count():
    for N in range(1, 7):
        for t in range(1, N + 1):
            p = make_params(N, 3, t)
            pl = build_placement(p)
            holders = {}
            for n in range(1, N + 1):
                assert len(pl.stored_at(n)) == p.K * p.subs_per_db
                for m, s in pl.stored_at(n):
                    assert n in s.members
                    holders.setdefault((m, s.rank), []).append(n)
            assert len(holders) == p.K * p.sub_count
            for (m, r), dbs in holders.items():
                assert tuple(dbs) == p.subsets[r].members


def test_init_databases_slicing():
    p = make_params(3, 2, 2)
    a = np.arange(12) % 2
    b = 1 - a
    stores = init_databases(build_placement(p), [a, b])
    s1 = stores[0]
    # A12 = bits[0:4], A13 = bits[4:8], A23 = bits[8:12]
    assert s1.contents[(1, 0)].tolist() == a[0:4].tolist()
    assert s1.contents[(1, 1)].tolist() == a[4:8].tolist()
    assert stores[1].contents[(1, 2)].tolist() == a[8:12].tolist()
    assert all(s.stored_bits() == 16 for s in stores)


def test_init_databases_replicas_identical_and_independent(rng):
    p = make_params(4, 2, 2)
    msgs = [rng.integers(0, 2, p.L) for _ in range(2)]
    stores = init_databases(build_placement(p), msgs)
    for m in (1, 2):
        for s in p.subsets:
            copies = [st.contents[(m, s.rank)] for st in stores if st.holds(m, s)]
            assert len(copies) == p.t
            assert all(np.array_equal(c, copies[0]) for c in copies)
            assert len({id(c) for c in copies}) == p.t


def test_union_of_stores_reconstructs_messages(rng):
    p = make_params(5, 3, 2)
    msgs = [rng.integers(0, 2, p.L).astype(np.uint8) for _ in range(3)]
    stores = init_databases(build_placement(p), msgs)
    for m in range(1, 4):
        rebuilt = np.full(p.L, 9, dtype=np.uint8)
        for st in stores:
            for (mm, r), bits in st.contents.items():
                if mm == m:
                    rebuilt[r * p.sub_size : (r + 1) * p.sub_size] = bits
        assert np.array_equal(rebuilt, msgs[m - 1])


def test_zero_messages_give_zero_stores():
    p = make_params(3, 2, 2)
    stores = init_databases(build_placement(p), [np.zeros(12), np.zeros(12)])
    assert all(not v.any() for s in stores for v in s.contents.values())


@pytest.mark.parametrize("msgs", [[np.zeros(11), np.zeros(12)], [np.zeros(12)], [np.full(12, 2), np.zeros(12)]])
def test_init_databases_rejects_bad_messages(msgs):
    with pytest.raises(ParameterError):
        init_databases(build_placement(make_params(3, 2, 2)), msgs)


@pytest.mark.parametrize("args,bits", [((3, 2, 2), 16), ((3, 3, 2), 48)])
def test_verify_storage_golden(args, bits):
    rep = verify_storage(build_placement(make_params(*args)))
    assert rep.ok
    assert set(rep.per_db_bits.values()) == {bits}
    assert rep.mu_KL == bits


def test_verify_storage_against_oracle():
    for N in range(1, 9):
        for K in range(1, 6):
            for t in range(1, N + 1):
                lhs, rhs = storage_closed_forms(N, K, t)
                assert lhs == rhs
                rep = verify_storage(build_placement(make_params(N, K, t)))
                assert set(rep.per_db_bits.values()) == {lhs}


def test_placement_json_round_trip():
    pl = build_placement(make_params(4, 2, 3))
    doc = json.loads(json.dumps(pl.to_json()))
    jsonschema.validate(doc, schemas.PLACEMENT)
    assert doc["assignments"][0] == {"db": 1, "message": 1, "subset_members": [1, 2, 3]}
    assert Placement.from_json(doc) == pl


def test_placement_json_rejects_tampering():
    doc = build_placement(make_params(3, 2, 2)).to_json()
    doc["assignments"][0]["db"] = 3
    with pytest.raises(ParameterError):
        Placement.from_json(doc)
    doc = build_placement(make_params(3, 2, 2)).to_json()
    doc["version"] = 99
    with pytest.raises(ParameterError):
        Placement.from_json(doc)
