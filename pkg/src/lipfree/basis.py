"""Retractions onto initial shortlex segments and the induced Schauder basis.

For a ball enumerated in shortlex order as g_1 = 1, g_2, ..., G_n is the set
of the first n elements.  The retraction P_n sends g to its longest
normal-form prefix lying in G_n; its linear lift L_n is a projection on the
free space whose partial sums are given by the basis vectors
b_n = delta(g_n) - delta(parent(g_n)).

Indices ``n`` below are 1-based counts of elements (G_n = first n elements);
element handles are 0-based ball positions, so g_n has position n - 1.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import OutOfRangeError, ValidationError
from .freespace import Molecule, kr_norm, lip_constant
from .groups import CayleyBall, audit_combability
from .metric import PointedMetricSpace, format_rational


@dataclass
class BasisSystem:
    ball: CayleyBall
    K: int
    n_max: int
    space: PointedMetricSpace = field(repr=False)

    @classmethod
    def from_ball(cls, ball: CayleyBall, K: int | None = None) -> BasisSystem:
        """Auditable core = elements of length <= radius - 1 (all neighbours in the ball)."""
        if ball.radius < 1:
            raise ValidationError("basis system needs a ball of radius >= 1")
        if K is None:
            K = audit_combability(ball).constant
        n_max = ball.size_of_radius(ball.radius - 1)
        return cls(ball, int(K), n_max, ball.to_space(ball.radius - 1))

    def truncated(self, n_max: int) -> BasisSystem:
        """The system on G_{n_max}; prefixes of its elements stay inside it."""
        if not 2 <= n_max <= self.n_max:
            raise OutOfRangeError(f"n_max={n_max} outside 2..{self.n_max}")
        return BasisSystem(self.ball, self.K, n_max, self.space.restrict(range(n_max)))

    def _check(self, n: int, g: int | None = None):
        if not 1 <= n <= self.n_max:
            raise OutOfRangeError(f"n={n} outside 1..{self.n_max}")
        if g is not None and not 0 <= g < self.n_max:
            raise OutOfRangeError(f"element {g} outside the auditable core")

    def retraction_table(self, n: int) -> np.ndarray:
        """P_n on every core element, via the longest-prefix characterisation."""
        self._check(n)
        pre = self.ball.prefix_table[: self.n_max]
        k = (pre < n).sum(axis=1) - 1
        return pre[np.arange(self.n_max), k]

    def literal_table(self, n: int) -> np.ndarray:
        """P_n on every core element, via the three-case definition."""
        self._check(n)
        pre = self.ball.prefix_table[: self.n_max]
        m = int(self.ball.length[n - 1])
        g = np.arange(self.n_max)
        at_m = pre[:, m]
        below = pre[:, max(m - 1, 0)]
        return np.where(g < n, g, np.where(at_m < n, at_m, below))


def retraction(system: BasisSystem, n: int, g: int) -> int:
    """P_n(g) by the three-case rule, cross-checked against the longest prefix."""
    system._check(n, g)
    ball = system.ball
    pre = ball.prefix_table
    if g < n:
        out = g
    else:
        m = int(ball.length[n - 1])
        out = int(pre[g, m]) if pre[g, m] < n else int(pre[g, m - 1])
    i = int(ball.length[g])
    while pre[g, i] >= n:
        i -= 1
    assert out == pre[g, i], "three-case retraction disagrees with longest prefix"
    return out


def project(system: BasisSystem, n: int, m: Molecule) -> Molecule:
    """L_n(m): push coefficients forward along P_n (identity coefficients vanish)."""
    if m.space is not system.space:
        raise ValidationError("molecule must live over the system's core space")
    return m.push_forward(system.retraction_table(n))


def basis_vector(system: BasisSystem, n: int) -> Molecule:
    """b_n = delta(g_n) - delta(parent(g_n)), n >= 2."""
    if not 2 <= n <= system.n_max:
        raise OutOfRangeError(f"basis index {n} outside 2..{system.n_max}")
    g = n - 1
    p = int(system.ball.parent[g])
    return Molecule(system.space, {g: 1, p: -1})


def expand(system: BasisSystem, m: Molecule) -> list[tuple[int, Fraction]]:
    """Basis coefficients of ``m``: c_n = sum of m(h) over h having g_n as a prefix."""
    if m.space is not system.space:
        raise ValidationError("molecule must live over the system's core space")
    ball = system.ball
    coef: dict[int, Fraction] = {}
    for h, a in m.coeffs.items():
        g = h
        while g != 0:
            coef[g] = coef.get(g, 0) + a
            g = int(ball.parent[g])
    return [(g + 1, c) for g, c in sorted(coef.items()) if c]


def reconstruct(system: BasisSystem, coeffs: Sequence[tuple[int, Fraction]],
                upto: int | None = None) -> Molecule:
    """sum_{n <= upto} c_n b_n (all terms when ``upto`` is None)."""
    out: dict[int, Fraction] = {}
    for n, c in coeffs:
        if upto is not None and n > upto:
            continue
        g = n - 1
        p = int(system.ball.parent[g])
        out[g] = out.get(g, 0) + c
        out[p] = out.get(p, 0) - c
    return Molecule(system.space, out)


# -- audit of the retraction claim -----------------------------------------

@dataclass
class ClaimReport:
    K: int
    n_max: int
    records: list
    commuting: bool
    idempotent: bool
    min_composition: bool
    literal_agrees: bool
    rank_ok: bool

    @property
    def lip_max(self) -> Fraction:
        return max((r["lip"] for r in self.records), default=Fraction(0))

    @property
    def case1_max(self) -> int:
        return max((r["case1_max"] for r in self.records), default=0)

    @property
    def lip_bound_ok(self) -> bool:
        return all(r["lip"] <= self.K + 1 for r in self.records)

    @property
    def case1_ok(self) -> bool:
        return self.case1_max <= 2

    @property
    def ok(self) -> bool:
        return (self.commuting and self.idempotent and self.min_composition
                and self.literal_agrees and self.rank_ok
                and self.lip_bound_ok and self.case1_ok)

    def to_json(self) -> dict:
        return {
            "records": [
                {"n": r["n"], "lip_exact": format_rational(r["lip"]),
                 "case1_max": r["case1_max"], "commuting": r["commuting"],
                 "idempotent": r["idempotent"]}
                for r in self.records
            ],
            "summary": {
                "K": self.K,
                "n_max": self.n_max,
                "K_plus_1_bound_ok": self.lip_bound_ok,
                "case1_bound_ok": self.case1_ok,
                "basis_constant_observed": format_rational(self.lip_max),
                "case1_max": self.case1_max,
                "commuting": self.commuting,
                "idempotent": self.idempotent,
                "min_composition": self.min_composition,
                "literal_agrees": self.literal_agrees,
                "rank_ok": self.rank_ok,
                "ok": self.ok,
            },
        }


def audit_claim(system: BasisSystem, threads: int = 1) -> ClaimReport:
    """Exhaustive check of the retraction claim on the auditable core.

    For all n, m <= n_max: P_n P_m = P_m P_n = P_min(n,m), P_n idempotent,
    three-case rule equals longest prefix, exact Lipschitz constant of P_n
    over all core pairs, and the largest image distance on core edges with
    exactly one endpoint in G_n.
    """
    N = system.n_max
    if N < 2:
        raise ValidationError("audit needs n_max >= 2")
    P = np.stack([system.retraction_table(n) for n in range(1, N + 1)])
    literal = all(np.array_equal(system.literal_table(n), P[n - 1]) for n in range(1, N + 1))
    D = system.space.num
    edges = [(g, h) for g, h in system.ball.edges if h < N]
    eg = np.array([e[0] for e in edges], dtype=np.int64)
    eh = np.array([e[1] for e in edges], dtype=np.int64)

    commute_row = np.ones(N, dtype=bool)
    minimal = True
    for m in range(N):
        left = P[:, P[m]]           # P_n o P_m, all n at once
        right = P[m][P]             # P_m o P_n
        same = (left == right).all(axis=1)
        commute_row &= same
        lo = np.minimum(np.arange(N), m)
        if not (left == P[lo]).all():
            minimal = False

    def per_n(n):
        img = P[n - 1]
        idem = bool(np.array_equal(img[img], img))
        lip = lip_constant(img, system.space, system.space)
        boundary = (eg < n) != (eh < n)
        c1 = int(D[img[eg[boundary]], img[eh[boundary]]].max()) if boundary.any() else 0
        rank = len(set(img.tolist()) - {0}) == n - 1
        return {"n": n, "lip": lip, "case1_max": c1, "commuting": bool(commute_row[n - 1]),
                "idempotent": idem, "rank_ok": rank}

    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        records = list(ex.map(per_n, range(1, N + 1)))
    return ClaimReport(
        K=system.K, n_max=N, records=records,
        commuting=bool(commute_row.all()),
        idempotent=all(r["idempotent"] for r in records),
        min_composition=minimal,
        literal_agrees=literal,
        rank_ok=all(r["rank_ok"] for r in records),
    )


def sweep_projection_norms(system: BasisSystem, samples: int = 200, rng=None,
                           max_support: int = 4, ns: Sequence[int] | None = None) -> Fraction:
    """Largest observed ||L_n m|| / ||m|| over random molecules (exact).

    Raises AssertionError if any ratio exceeds K + 1.
    """
    rng = np.random.default_rng(rng)
    N = system.n_max
    worst = Fraction(0)
    for n in (ns or range(1, N + 1)):
        table = system.retraction_table(n)
        for _ in range(samples):
            k = int(rng.integers(1, max_support + 1))
            pts = rng.choice(np.arange(1, N), size=min(k, N - 1), replace=False)
            m = Molecule(system.space, {int(p): Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 4)))
                                        for p in pts})
            norm = kr_norm(m).value
            if norm == 0:
                continue
            r = kr_norm(m.push_forward(table)).value / norm
            assert r <= system.K + 1, (n, m, r)
            worst = max(worst, r)
    return worst
