from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import kr_norm_lp
from lipfree import Molecule, ValidationError, kr_norm
from lipfree.quotient import (FiniteMetricGroup, audit_projection, averaging_projection,
                              biinvariant_majorant, cyclic_group, dihedral_group, quotient,
                              reversed_metric, symmetric_group, tower_convergence)


def labels_to_idx(G, labels):
    return [G.labels.index(x) for x in labels]


S3 = symmetric_group(3)
A3 = labels_to_idx(S3, ["012", "120", "201"])
S4 = symmetric_group(4)
V4 = labels_to_idx(S4, ["0123", "1032", "2301", "3210"])

CORPUS = [
    (cyclic_group(4), [0, 2]),
    (cyclic_group(8), [0, 4]),
    (cyclic_group(8), [0, 2, 4, 6]),
    (dihedral_group(4), [0, 2]),
    (S3, A3),
    (S4, V4),
    (biinvariant_majorant(S3), [0, 1]),
    (reversed_metric(S3), A3),
    (cyclic_group(6), [0]),
    (cyclic_group(6), list(range(6))),
]


def test_word_metric_flags():
    assert S3.left_invariant and not S3.right_invariant
    z4 = cyclic_group(4)
    assert z4.bi_invariant
    r = reversed_metric(S3)
    assert r.right_invariant and not r.left_invariant


def test_group_json_round_trip():
    obj = S3.to_json()
    again = FiniteMetricGroup.from_json({"table": obj["table"], "dist": obj["dist"]})
    assert np.array_equal(again.dist, S3.dist)
    gen = FiniteMetricGroup.from_json({"table": obj["table"], "generators": [1, 2]})
    assert np.array_equal(gen.dist, S3.dist)
    with pytest.raises(ValidationError):
        FiniteMetricGroup(obj["table"], [[0, 5, 1, 1, 1, 1]] + obj["dist"][1:])


def test_majorant_examples():
    z4 = cyclic_group(4)
    assert np.array_equal(biinvariant_majorant(z4).dist, z4.dist)
    B = biinvariant_majorant(S3)
    assert B.bi_invariant
    assert (B.dist >= S3.dist).all() and (B.dist > S3.dist).any()
    assert np.array_equal(biinvariant_majorant(B).dist, B.dist)
    # brute force over the definition
    n = len(S3)
    for g in range(n):
        for f in range(n):
            want = max(S3.dist[S3.table[g, h], S3.table[f, h]] for h in range(n))
            assert B.dist[g, f] == want
    with pytest.raises(ValidationError):
        biinvariant_majorant(reversed_metric(S3))


def test_z4_projection_example():
    z4 = cyclic_group(4)
    P = averaging_projection(z4, [0, 2])
    half = Fraction(1, 2)
    assert P.point_image(1) == Molecule(z4.space, {1: half, 3: half, 2: -half})
    assert not P.point_image(0) and not P.point_image(2)
    assert kr_norm(P.point_image(0) - P.point_image(1)).value == 1
    cert = kr_norm(P.point_image(1))
    assert cert.witness[1] == cert.witness[3] == 1 and cert.witness[2] == 0


def test_quotient_metric_by_definition():
    for G, H in CORPUS:
        q = quotient(G, H)
        for a, A in enumerate(q.cosets):
            for b, B in enumerate(q.cosets):
                want = min(G.dist[G.table[A[0], h1], G.table[B[0], h2]] for h1 in H for h2 in H)
                assert q.metric.d(a, b) == want
        assert q.metric_violations == []


def test_hypothesis_detection():
    assert quotient(S3, A3).hypotheses == ["i"]
    assert quotient(reversed_metric(S3), A3).hypotheses == ["ii"]
    assert quotient(biinvariant_majorant(S3), [0, 1]).hypotheses == ["iii"]
    assert quotient(cyclic_group(8), [0, 4]).hypotheses == ["i", "ii", "iii"]


def test_no_hypothesis_rejected_with_diagnostic():
    H = labels_to_idx(S4, ["0123", "0213"])
    q = quotient(S4, H)
    assert q.hypotheses == [] and not q.normal
    assert q.metric_violations and q.metric_violations[0].startswith("triangle")
    with pytest.raises(ValidationError, match="not normal"):
        averaging_projection(S4, H)


def test_subgroup_checks():
    with pytest.raises(ValidationError):
        quotient(cyclic_group(4), [0, 1])
    with pytest.raises(ValidationError):
        averaging_projection(S3, A3, side="middle")


def test_left_form_needs_hypothesis_i():
    with pytest.raises(ValidationError):
        averaging_projection(biinvariant_majorant(S3), [0, 1], side="left")


@pytest.mark.parametrize("G,H", CORPUS)
def test_audit_projection_corpus(G, H):
    rep = audit_projection(G, H)
    assert rep.ok, rep.failures
    assert rep.idempotent and rep.well_defined and rep.isometric
    if len(H) == len(G):
        assert rep.lip == 0
    else:
        assert rep.lip == 1
    if quotient(G, H).normal:
        assert rep.sides_agree is True


def test_trivial_subgroup_is_identity():
    G = dihedral_group(3)
    P = averaging_projection(G, [0])
    for g in range(len(G)):
        assert P.point_image(g) == Molecule(G.space, {g: 1})


def test_whole_group_is_zero():
    G = cyclic_group(5)
    P = averaging_projection(G, range(5))
    assert all(not P.point_image(g) for g in range(5))
    assert len(quotient(G, range(5)).cosets) == 1


def test_isometry_against_lp_oracle():
    G, H = dihedral_group(4), [0, 2]
    P = averaging_projection(G, H)
    q = P.quotient
    D = G.space.as_float()
    for a in range(len(q.cosets)):
        for b in range(a + 1, len(q.cosets)):
            m = P.point_image(q.cosets[a][0]) - P.point_image(q.cosets[b][0])
            lp = kr_norm_lp(D, G.identity, {i: float(c) for i, c in m.coeffs.items()})
            assert lp == pytest.approx(float(q.metric.d(a, b)), abs=1e-9)


@given(st.integers(0, 2**32 - 1))
def test_projection_is_linear_idempotent_contraction(seed):
    rng = np.random.default_rng(seed)
    G, H = S4, V4
    P = averaging_projection(G, H)
    pts = rng.choice(np.arange(1, len(G)), size=4, replace=False)
    m = Molecule(G.space, {int(p): int(rng.integers(-4, 5)) for p in pts})
    Pm = P(m)
    assert P(Pm) == Pm
    assert kr_norm(Pm).value <= kr_norm(m).value


def test_z8_tower_values():
    G = cyclic_group(8)
    chain = [[0, 2, 4, 6], [0, 4], [0]]
    rep = tower_convergence(G, chain, Molecule(G.space, {1: 1}))
    assert [lv.error for lv in rep.levels] == [Fraction(3, 2), 1, 0]
    assert [lv.epsilon for lv in rep.levels] == [4, 4, 0]
    assert [lv.bound for lv in rep.levels] == [8, 8, 0]
    assert rep.ok


def test_tower_trivial_cases():
    G = cyclic_group(8)
    chain = [[0, 2, 4, 6], [0, 4], [0]]
    rep = tower_convergence(G, chain, Molecule.zero(G.space))
    assert all(lv.error == 0 for lv in rep.levels)
    one = tower_convergence(G, [[0]], Molecule(G.space, {3: 2}))
    assert one.levels[0].error == 0 and one.ok


def test_tower_chain_validation():
    G = cyclic_group(8)
    m = Molecule(G.space, {1: 1})
    with pytest.raises(ValidationError):
        tower_convergence(G, [[0, 4], [0, 2, 4, 6], [0]], m)
    with pytest.raises(ValidationError):
        tower_convergence(G, [[0, 2, 4, 6], [0, 4]], m)
    with pytest.raises(ValidationError):
        tower_convergence(G, [[0, 1], [0]], m)


@given(st.integers(0, 2**32 - 1))
def test_tower_bound_random_molecules(seed):
    rng = np.random.default_rng(seed)
    G = dihedral_group(4)
    pts = rng.choice(np.arange(1, 8), size=3, replace=False)
    m = Molecule(G.space, {int(p): Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 4)))
                           for p in pts})
    rep = tower_convergence(G, [[0, 1, 2, 3], [0, 2], [0]], m)
    assert rep.ok
    assert all(lv.error <= lv.bound for lv in rep.levels)
