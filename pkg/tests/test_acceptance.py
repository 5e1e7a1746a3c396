"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` to see the summary lines.
"""
import json
import time
from fractions import Fraction

import numpy as np
import pytest

from oracles import divergence, random_metric
from lipfree import (BasisSystem, FreeAbelian, FreeGroup, FreeProductCyclic, Molecule,
                     PointedMetricSpace, audit_claim, audit_combability, audit_projection,
                     brute_force_norm, build_ball, expand, kr_norm, project, reconstruct,
                     tower_convergence)
from lipfree.cli import data_path
from lipfree.harmonic import (CircleFunction, FejerKernel, SphereFunction, SphereGrid,
                              SphereKernelSpec, audit_pointwise_convergence, audit_young,
                              cesaro_kernel, fejer_convolve, sphere_convolve)
from lipfree.quotient import cyclic_group, dihedral_group, symmetric_group


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} | {detail}")
        assert ok, detail
    return emit


# combability constants with the radius each is audited at
COMB_CASES = [
    ("Z", FreeAbelian(1), [6], 0),
    ("Z2", FreeAbelian(2), [5], 2),
    ("F2", FreeGroup(2), [5], 0),
    ("Z2*Z2*Z2", FreeProductCyclic([2, 2, 2]), [4, 5], None),
]
# K for criterion 2 follows from criterion 1 (K >= 1 by convention)
CLAIM_K = {"Z": 1, "Z2": 2, "F2": 1, "Z2*Z2*Z2": 1}


def test_criterion_1_combability(report):
    lines, ok = [], True
    for name, spec, radii, want in COMB_CASES:
        values = []
        for r in radii:
            t = time.perf_counter()
            rep = audit_combability(build_ball(spec, r))
            elapsed = time.perf_counter() - t
            oracle = divergence(spec, r)
            ok &= (rep.max_divergence, rep.max_divergence_extended) == oracle
            ok &= elapsed < 60
            values.append(rep.max_divergence)
        ok &= len(set(values)) == 1 and (want is None or values[0] == want)
        lines.append(f"{name}={values}")
    report(1, ok, "max divergence " + ", ".join(lines))


def test_criterion_2_retraction_claim(report, balls):
    lines, ok = [], True
    for name, ball in balls.items():
        rep = audit_claim(BasisSystem.from_ball(ball, CLAIM_K[name]))
        ok &= rep.ok
        lines.append(f"{name}: n_max={rep.n_max} lip={rep.lip_max} case1={rep.case1_max} "
                     f"bound={CLAIM_K[name] + 1}")
    report(2, ok, "; ".join(lines))


def random_molecule(space, rng, max_support=6):
    k = int(rng.integers(1, max_support + 1))
    pts = rng.choice(np.arange(len(space)), size=min(k, len(space)), replace=False)
    return Molecule(space, {int(p): Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 6)))
                            for p in pts})


def test_criterion_3_schauder_structure(report, systems):
    rng = np.random.default_rng(2024)
    lines, ok = [], True
    for name, system in systems.items():
        N = system.n_max
        mols = [random_molecule(system.space, rng) for _ in range(500)]
        exps = [expand(system, m) for m in mols]
        round_trip = all(reconstruct(system, c) == m for m, c in zip(mols, exps))
        # partial sums against L_n for every n: on every point mass (a spanning set,
        # so this fixes the linear maps) and on the random molecules
        deltas = [Molecule(system.space, {g: 1}) for g in range(1, N)]
        dexp = [expand(system, m) for m in deltas]
        partial = True
        for n in range(1, N + 1):
            table = system.retraction_table(n)
            for m, c in zip(deltas, dexp):
                partial &= reconstruct(system, c, upto=n) == m.push_forward(table)
            for m, c in zip(mols[:50], exps[:50]):
                partial &= reconstruct(system, c, upto=n) == project(system, n, m)
        ok &= round_trip and partial
        lines.append(f"{name}: round_trip={round_trip} partial_sums={partial} (n<={N})")
    report(3, ok, "; ".join(lines))


def test_criterion_4_kr_oracle(report):
    rng = np.random.default_rng(7)
    mismatches = gaps = 0
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        space = PointedMetricSpace.from_integer_matrix(list(range(n)), random_metric(rng, n),
                                                       int(rng.integers(1, 5)))
        m = random_molecule(space, rng)
        cert = kr_norm(m)
        mismatches += cert.value != brute_force_norm(m)
        gaps += cert.primal != cert.dual or bool(cert.verify(m))
    pairs = bad_pairs = 0
    for spec, r in [(FreeAbelian(1), 6), (FreeAbelian(2), 5), (FreeGroup(2), 5),
                    (FreeProductCyclic([2, 2, 2]), 5)]:
        sp = build_ball(spec, r).to_space()
        for x in range(len(sp)):
            for y in range(x + 1, len(sp)):
                pairs += 1
                bad_pairs += kr_norm(Molecule(sp, {x: 1, y: -1})).value != sp.d(x, y)
    ok = mismatches == 0 and gaps == 0 and bad_pairs == 0
    report(4, ok, f"1000 instances: {mismatches} norm mismatches, {gaps} primal/dual gaps; "
                  f"delta isometry {pairs - bad_pairs}/{pairs} pairs")


def _labels(G, names):
    return [G.labels.index(x) for x in names]


def test_criterion_5_quotients_and_tower(report):
    S3 = symmetric_group(3)
    corpus = [
        ("Z4/{0,2}", cyclic_group(4), [0, 2]),
        ("Z8/{0,2,4,6}", cyclic_group(8), [0, 2, 4, 6]),
        ("Z8/{0,4}", cyclic_group(8), [0, 4]),
        ("D4/centre", dihedral_group(4), [0, 2]),
        ("S3/A3", S3, _labels(S3, ["012", "120", "201"])),
    ]
    lines, ok = [], True
    for name, G, H in corpus:
        rep = audit_projection(G, H)
        good = rep.idempotent and rep.lip == 1 and rep.isometric and rep.ok
        ok &= good
        lines.append(f"{name} lip={rep.lip}")
    rng = np.random.default_rng(11)
    towers = [(cyclic_group(8), [[0, 2, 4, 6], [0, 4], [0]], "tower_z8.json"),
              (dihedral_group(4), [[0, 1, 2, 3], [0, 2], [0]], None)]
    checked = 0
    for G, chain, bundled in towers:
        mols = [random_molecule(G.space, rng) for _ in range(50)]
        if bundled:
            cfg = json.loads(data_path(bundled).read_text())
            mols.append(Molecule.from_json(cfg["molecule"], G.space))
        for m in mols:
            t = tower_convergence(G, chain, m)
            ok &= t.ok and all(lv.error <= lv.bound for lv in t.levels)
            ok &= t.levels[-1].error == 0
            checked += 1
    report(5, ok, "; ".join(lines) + f"; tower bound and final error 0 on {checked} molecules")


def _fejer_corpus(M):
    cfg = json.loads(data_path("fejer.json").read_text())
    rng = np.random.default_rng(0)
    out = []
    for spec in cfg["functions"]:
        if spec["kind"] == "cos":
            f = CircleFunction.cosine()
        elif spec["kind"] == "abs":
            f = CircleFunction.from_callable(lambda t: np.abs(t - np.pi), M)
        else:
            deg = spec["degree"]
            c = rng.standard_normal(2 * deg + 1) + 1j * rng.standard_normal(2 * deg + 1)
            f = CircleFunction((c + np.conj(c[::-1])) / 2)
        out.append((spec["name"], f, spec["young_n"]))
    return out


def test_criterion_6_fejer(report):
    start = time.perf_counter()
    M = 4096
    kernels_ok = all(FejerKernel(n).unit_mass and FejerKernel(n).symmetric
                     and FejerKernel(n).values(M).min() >= -1e-12 for n in range(0, 257))
    young_ok = all(audit_young(f, n, M).ok for _, f, ns in _fejer_corpus(M) for n in ns)
    cos_err = max(abs(np.abs(fejer_convolve(CircleFunction.cosine(), n).to_grid(M)
                             - CircleFunction.cosine().to_grid(M)).max() - 1 / (n + 1))
                  for n in range(1, 257))
    absf = CircleFunction.from_callable(lambda t: np.abs(t - np.pi), M)
    conv = audit_pointwise_convergence(absf, [256], M, 0.02)
    final = conv.rows[-1][1]
    elapsed = time.perf_counter() - start
    ok = kernels_ok and young_ok and cos_err <= 1e-12 and final < 0.02 and elapsed < 30
    report(6, ok, f"kernels={kernels_ok} young={young_ok} cos_dev={cos_err:.1e} "
                  f"abs_err(n=256)={final:.5f} time={elapsed:.1f}s")


def test_criterion_7_sphere(report):
    start = time.perf_counter()
    t = np.linspace(-1, 1, 1001)
    closed = np.abs(cesaro_kernel(SphereKernelSpec(1, 2))(t) - (1 + t)).max()
    mins, norms = [], []
    for n in range(51):
        k = cesaro_kernel(SphereKernelSpec(n, 2))
        mins.append(k.min_value)
        norms.append(abs(k.norm - 1))
    rng = np.random.default_rng(5)
    grid = SphereGrid(24)
    c = rng.standard_normal(6)

    def f(P):
        x, y, z = P[:, 0], P[:, 1], P[:, 2]
        return c[0] + c[1] * x + c[2] * y * z + c[3] * x ** 3 + c[4] * z ** 4 + c[5] * x * y * z

    equi, rank_ok = 0.0, True
    pts = grid.points().reshape(-1, 3)
    for n in (1, 4, 10):
        spec = SphereKernelSpec(n, 2)
        base = sphere_convolve(SphereFunction.from_callable(grid, f), spec)
        for _ in range(3):
            q, r = np.linalg.qr(rng.standard_normal((3, 3)))
            R = q * np.sign(np.diag(r))
            rot = sphere_convolve(SphereFunction.from_callable(grid, lambda P: f(P @ R)), spec)
            equi = max(equi, np.abs(rot.to_grid(grid).reshape(-1) - base.evaluate(pts @ R)).max())
        noise = SphereFunction.from_grid(grid, rng.standard_normal((grid.nlat, grid.nphi)))
        out = sphere_convolve(noise, spec)
        rank_ok &= out.lmax == n and out.rank <= (n + 1) ** 2
        rank_ok &= bool(np.all(out.coeffs[np.triu_indices(n + 1, 1)] == 0))
    elapsed = time.perf_counter() - start
    ok = (closed <= 1e-12 and min(mins) >= -1e-10 and max(norms) <= 1e-8
          and equi <= 1e-8 and rank_ok and elapsed < 120)
    report(7, ok, f"K_1 dev={closed:.1e} min={min(mins):.2e} |norm-1|<={max(norms):.1e} "
                  f"equivariance={equi:.1e} finite_rank={rank_ok} time={elapsed:.1f}s")
