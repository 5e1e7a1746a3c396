import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import kr_norm_lp, random_metric
from lipfree import (FreeAbelian, Molecule, PointedMetricSpace, ValidationError, brute_force_norm,
                     build_ball, kr_norm, kr_norm_float, lip_constant, validate)
from lipfree.metric import greedy_net, random_hyperboloid_samples

THREE = PointedMetricSpace(["0", "a", "b"], [[0, 1, 1], [1, 0, 2], [1, 2, 0]])


def space_from_seed(seed, n=None):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(2, 8))
    den = int(rng.integers(1, 4))
    return PointedMetricSpace.from_integer_matrix(list(range(n)), random_metric(rng, n), den), rng


def random_molecule(space, rng, max_support=6):
    k = int(rng.integers(0, min(max_support, len(space) - 1) + 1))
    pts = rng.choice(np.arange(1, len(space)), size=k, replace=False)
    return Molecule(space, {int(p): Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 5)))
                            for p in pts})


def test_three_point_example():
    m = Molecule.from_points(THREE, {"a": 1, "b": 1})
    cert = kr_norm(m)
    assert cert.value == 2
    assert cert.witness_map() == {"0": 0, "a": 1, "b": 1}
    assert brute_force_norm(m) == 2
    assert cert.verify(m) == []
    assert kr_norm_float(m).value == pytest.approx(2.0, abs=1e-9)


def test_delta_is_isometric():
    for p in ("a", "b"):
        m = Molecule.delta(THREE, p)
        assert kr_norm(m).value == 1 == brute_force_norm(m)
    assert kr_norm(Molecule.delta(THREE, "a") - Molecule.delta(THREE, "b")).value == 2


def test_basepoint_dropped_and_zero():
    m = Molecule(THREE, {0: 5, 1: 0})
    assert not m and m.support == []
    cert = kr_norm(m)
    assert cert.value == 0 and cert.flow == []
    assert brute_force_norm(m) == 0
    assert kr_norm_float(m).value == 0.0


def test_molecule_algebra_and_json():
    a = Molecule.from_points(THREE, {"a": "1/2"})
    b = Molecule.from_points(THREE, {"a": "1/2", "b": -1})
    assert (a + b).coeffs == {1: 1, 2: -1}
    assert (a - a) == Molecule.zero(THREE)
    assert (3 * b).coeffs == {1: Fraction(3, 2), 2: -3}
    assert b.l1 == Fraction(3, 2) and b.total == Fraction(-1, 2)
    obj = b.to_json(inline_space=True)
    assert obj["coeffs"] == {"a": "1/2", "b": "-1"}
    assert Molecule.from_json(obj).coeffs == b.coeffs
    with pytest.raises(ValidationError):
        Molecule.from_json({"coeffs": {"zz": 1}}, THREE)
    other = PointedMetricSpace(["0", "a", "b"], [[0, 1, 1], [1, 0, 2], [1, 2, 0]])
    with pytest.raises(ValidationError):
        a + Molecule.delta(other, "a")


def test_kr_norm_rejects_float_space():
    fl = THREE.to_float_space()
    with pytest.raises(ValidationError):
        kr_norm(Molecule.delta(fl, "a"))
    with pytest.raises(ValidationError):
        brute_force_norm(Molecule.delta(fl, "a"))


def test_brute_force_support_limit():
    sp, rng = space_from_seed(0, 9)
    m = Molecule(sp, {i: 1 for i in range(1, 9)})
    with pytest.raises(ValidationError):
        brute_force_norm(m)


def test_all_three_point_instances():
    seen = 0
    for d01, d02, d12 in itertools.product([1, 2, 3], repeat=3):
        D = [[0, d01, d02], [d01, 0, d12], [d02, d12, 0]]
        sp = PointedMetricSpace([0, 1, 2], D)
        if validate(sp):
            continue
        for a, b in itertools.product(range(-3, 4), repeat=2):
            m = Molecule(sp, {1: a, 2: b})
            cert = kr_norm(m)
            assert cert.value == brute_force_norm(m)
            assert cert.verify(m) == []
            seen += 1
    assert seen > 300


@given(st.integers(0, 2**32 - 1))
def test_kr_norm_matches_oracles(seed):
    sp, rng = space_from_seed(seed)
    m = random_molecule(sp, rng)
    cert = kr_norm(m)
    assert cert.primal == cert.dual == cert.value
    assert cert.value == brute_force_norm(m)
    assert cert.verify(m) == []
    lp = kr_norm_lp(sp.as_float(), sp.base_index, {i: float(a) for i, a in m.coeffs.items()})
    assert float(cert.value) == pytest.approx(lp, abs=1e-7)
    assert kr_norm_float(m).value == pytest.approx(float(cert.value), abs=1e-7)


@given(st.integers(0, 2**32 - 1))
def test_norm_is_subadditive_and_homogeneous(seed):
    sp, rng = space_from_seed(seed)
    x, y = random_molecule(sp, rng), random_molecule(sp, rng)
    c = Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 4)))
    assert kr_norm(x + y).value <= kr_norm(x).value + kr_norm(y).value
    assert kr_norm(c * x).value == abs(c) * kr_norm(x).value


def test_isometry_on_ball_pairs(balls):
    ball = balls["Z2"]
    sp = ball.to_space(3)
    for g in range(len(sp)):
        for h in range(g + 1, len(sp)):
            m = Molecule(sp, {g: 1, h: -1})
            assert kr_norm(m).value == sp.d(g, h)


def test_lip_constant_examples(systems):
    sp = build_ball(FreeAbelian(2), 3).to_space()
    n = len(sp)
    assert lip_constant(list(range(n)), sp, sp) == 1
    assert lip_constant([0] * n, sp, sp) == 0
    system = systems["Z2"]
    for k in (2, 5, 17, 40):
        assert lip_constant(system.retraction_table(k), system.space, system.space) <= 3


@given(st.integers(0, 2**32 - 1))
def test_lift_norm_identity(seed):
    sp, rng = space_from_seed(seed, 6)
    img = [0] + [int(x) for x in rng.integers(0, 6, size=5)]
    L = lip_constant(img, sp, sp)
    best = Fraction(0)
    for _ in range(20):
        m = random_molecule(sp, rng, 4)
        norm = kr_norm(m).value
        if norm:
            r = kr_norm(m.push_forward(img)).value / norm
            assert r <= L
            best = max(best, r)
    pairs = [kr_norm(Molecule(sp, {x: 1, y: -1}).push_forward(img)).value / sp.d(x, y)
             for x in range(6) for y in range(x + 1, 6)]
    assert max(pairs) == L


def test_float_norm_on_hyperbolic_net():
    rng = np.random.default_rng(3)
    net = greedy_net(random_hyperboloid_samples(2, 40, 2.0, rng), 0.4)
    for i in range(1, min(len(net), 6)):
        cert = kr_norm_float(Molecule(net, {i: 1}), tol=1e-9)
        assert cert.value == pytest.approx(net.d(i, net.base_index), abs=1e-9)
        assert cert.verify(Molecule(net, {i: 1})) == []


def test_certificate_json():
    m = Molecule.from_points(THREE, {"a": 1, "b": 1})
    obj = kr_norm(m).to_json()
    assert obj["value"] == "2"
    assert obj["witness"] == {"0": "0", "a": "1", "b": "1"}
    assert sum(Fraction(q) for _, _, q in obj["flow"]) == 2
