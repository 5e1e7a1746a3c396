"""Quotients of finite metric groups and Haar-averaging projections.

Everything here is exact: the Haar measure of a finite subgroup H is uniform
with weight 1/|H|, metrics are rational tables, and free-space norms come from
:func:`lipfree.freespace.kr_norm`.  The basepoint is always the identity.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .freespace import Molecule, kr_norm
from .groups import _table_lengths, check_group_table, identity_of
from .metric import PointedMetricSpace, format_rational, validate


class FiniteMetricGroup:
    """A finite group (multiplication table) with a rational metric table.

    Invariance flags are computed from the table, never declared.
    """

    def __init__(self, table, dist, labels: Sequence | None = None):
        self.table = check_group_table(table)
        n = len(self.table)
        self.identity = identity_of(self.table)
        self.inv = np.argmax(self.table == self.identity, axis=1)
        self.labels = list(labels) if labels is not None else list(range(n))
        if isinstance(dist, PointedMetricSpace):
            sp = dist
        else:
            sp = PointedMetricSpace(list(range(n)), dist, basepoint=self.identity)
        if not sp.is_rational or len(sp) != n:
            raise ValidationError("group metric must be a rational table of matching size")
        problems = validate(sp)
        if problems:
            raise ValidationError(f"not a metric: {problems[0]}")
        self.space = sp

    @classmethod
    def word_metric(cls, table, generators: Sequence[int], labels=None) -> FiniteMetricGroup:
        """d(g, f) = |g^{-1} f| for the symmetric closure of ``generators``."""
        t = check_group_table(table)
        e = identity_of(t)
        inv = np.argmax(t == e, axis=1)
        gens = sorted(set(int(s) for s in generators) | {int(inv[s]) for s in generators})
        length = _table_lengths(t, e, gens)
        if (length < 0).any():
            raise ValidationError("generators do not generate the group")
        n = len(t)
        prod = t[inv[:, None], np.arange(n)[None, :]]   # g^{-1} f
        obj = cls.__new__(cls)
        obj.table, obj.identity, obj.inv = t, e, inv
        obj.labels = list(labels) if labels is not None else list(range(n))
        obj.space = PointedMetricSpace.from_integer_matrix(list(range(n)), length[prod], 1, e)
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> FiniteMetricGroup:
        if "dist" in obj:
            return cls(obj["table"], obj["dist"], obj.get("labels"))
        return cls.word_metric(obj["table"], obj["generators"], obj.get("labels"))

    def to_json(self) -> dict:
        return {"table": self.table.tolist(), "dist": self.space.to_json()["dist"],
                "labels": [str(x) for x in self.labels]}

    def __len__(self):
        return len(self.table)

    @property
    def dist(self) -> np.ndarray:
        return self.space.num

    def _invariant_under(self, perms) -> bool:
        D = self.dist
        return all(np.array_equal(D[np.ix_(p, p)], D) for p in perms)

    @property
    def left_invariant(self) -> bool:
        return self._invariant_under(self.table)          # g -> h g

    @property
    def right_invariant(self) -> bool:
        return self._invariant_under(self.table.T)        # g -> g h

    def right_invariant_under(self, H: Sequence[int]) -> bool:
        return self._invariant_under(self.table[:, list(H)].T)

    @property
    def bi_invariant(self) -> bool:
        return self.left_invariant and self.right_invariant

    # subgroup helpers

    def is_subgroup(self, H: Sequence[int]) -> bool:
        Hs = set(int(h) for h in H)
        if self.identity not in Hs:
            return False
        return all(int(self.table[a, b]) in Hs for a in Hs for b in Hs)

    def is_normal(self, H: Sequence[int]) -> bool:
        Hs = set(int(h) for h in H)
        t, inv = self.table, self.inv
        return all(int(t[t[g, h], inv[g]]) in Hs for g in range(len(self)) for h in Hs)

    def left_cosets(self, H: Sequence[int]) -> list[tuple[int, ...]]:
        """Cosets gH as sorted tuples, ordered by their smallest element."""
        seen, out = set(), []
        for g in range(len(self)):
            if g in seen:
                continue
            c = tuple(sorted({int(self.table[g, h]) for h in H}))
            seen.update(c)
            out.append(c)
        return out


# -- standard small groups ---------------------------------------------------

def cyclic_group(n: int) -> FiniteMetricGroup:
    """Z_n with the word metric of {1, -1}."""
    t = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    return FiniteMetricGroup.word_metric(t, [1 % n, (n - 1) % n] if n > 1 else [], list(range(n)))


def _perm_group(perms, generators, labels):
    index = {p: i for i, p in enumerate(perms)}
    t = [[index[tuple(a[b[k]] for k in range(len(a)))] for b in perms] for a in perms]
    return FiniteMetricGroup.word_metric(t, [index[g] for g in generators], labels)


def symmetric_group(n: int) -> FiniteMetricGroup:
    """S_n with the word metric of adjacent transpositions (not bi-invariant for n >= 3)."""
    perms = sorted(itertools.permutations(range(n)))
    gens = []
    for i in range(n - 1):
        p = list(range(n))
        p[i], p[i + 1] = p[i + 1], p[i]
        gens.append(tuple(p))
    return _perm_group(perms, gens, ["".join(map(str, p)) for p in perms])


def dihedral_group(n: int) -> FiniteMetricGroup:
    """Symmetries of the n-gon (order 2n); generators r, r^{-1}, s.

    Element k < n is r^k, element n + k is s r^k.
    """
    def mul(a, b):
        fa, ka = divmod(a, n)
        fb, kb = divmod(b, n)
        # (s^fa r^ka)(s^fb r^kb) = s^(fa+fb) r^(+-ka + kb)
        k = ((-ka if fb else ka) + kb) % n
        return ((fa + fb) % 2) * n + k

    t = [[mul(a, b) for b in range(2 * n)] for a in range(2 * n)]
    labels = [f"r{k}" for k in range(n)] + [f"sr{k}" for k in range(n)]
    return FiniteMetricGroup.word_metric(t, [1, n - 1, n], labels)


def reversed_metric(G: FiniteMetricGroup) -> FiniteMetricGroup:
    """d'(g, f) = d(g^{-1}, f^{-1}): turns a left-invariant metric into a right-invariant one."""
    inv = G.inv
    D = G.dist[np.ix_(inv, inv)]
    sp = PointedMetricSpace.from_integer_matrix(list(range(len(G))), D, G.space.denominator, G.identity)
    return FiniteMetricGroup(G.table, sp, G.labels)


def biinvariant_majorant(G: FiniteMetricGroup) -> FiniteMetricGroup:
    """D(g, f) = max_h d(g h, f h); bi-invariant and >= d when d is left-invariant."""
    if not G.left_invariant:
        raise ValidationError("majorant needs a left-invariant metric")
    D = np.zeros_like(G.dist)
    for h in range(len(G)):
        col = G.table[:, h]
        D = np.maximum(D, G.dist[np.ix_(col, col)])
    sp = PointedMetricSpace.from_integer_matrix(list(range(len(G))), D, G.space.denominator, G.identity)
    return FiniteMetricGroup(G.table, sp, G.labels)


# -- quotients and projections -----------------------------------------------

HYPOTHESES = {
    "i": "d left-invariant and H normal",
    "ii": "d right-invariant and H normal",
    "iii": "d left-invariant and right H-invariant",
}


@dataclass
class QuotientStructure:
    group: FiniteMetricGroup
    subgroup: tuple
    cosets: list
    coset_of: np.ndarray
    metric: PointedMetricSpace           # D on cosets, basepoint = coset of the identity
    normal: bool
    hypotheses: list
    metric_violations: list = field(default_factory=list)


def quotient(G: FiniteMetricGroup, H: Sequence[int]) -> QuotientStructure:
    """Coset space G/H with D(gH, fH) = min over h1, h2 of d(g h1, f h2)."""
    H = tuple(sorted(set(int(h) for h in H)))
    if not G.is_subgroup(H):
        raise ValidationError(f"{list(H)} is not a subgroup")
    cosets = G.left_cosets(H)
    coset_of = np.empty(len(G), dtype=np.int64)
    for k, c in enumerate(cosets):
        coset_of[list(c)] = k
    m = len(cosets)
    D = np.zeros((m, m), dtype=np.int64)
    for a in range(m):
        for b in range(a + 1, m):
            D[a, b] = D[b, a] = G.dist[np.ix_(cosets[a], cosets[b])].min()
    normal = G.is_normal(H)
    hyp = []
    if G.left_invariant and normal:
        hyp.append("i")
    if G.right_invariant and normal:
        hyp.append("ii")
    if G.left_invariant and G.right_invariant_under(H):
        hyp.append("iii")
    sp = PointedMetricSpace.from_integer_matrix(list(range(m)), D, G.space.denominator,
                                                int(coset_of[G.identity]))
    return QuotientStructure(G, H, cosets, coset_of, sp, normal, hyp, validate(sp))


class AveragingProjection:
    """P(delta(g)) = (1/|H|) sum_h (delta(g h) - delta(h)), extended linearly.

    With ``side="left"`` the translate is h g instead; that form is the one used
    when only hypothesis (i) holds.
    """

    def __init__(self, G: FiniteMetricGroup, H: Sequence[int], side: str | None = None):
        self.quotient = quotient(G, H)
        q = self.quotient
        if not q.hypotheses:
            fails = []
            if not G.left_invariant:
                fails.append("d is not left-invariant")
            if not G.right_invariant:
                fails.append("d is not right-invariant")
            if not q.normal:
                fails.append("H is not normal")
            if not G.right_invariant_under(q.subgroup):
                fails.append("d is not right H-invariant")
            raise ValidationError("no projection hypothesis holds: " + "; ".join(fails))
        if side is None:
            side = "right" if ("ii" in q.hypotheses or "iii" in q.hypotheses) else "left"
        if side not in ("left", "right"):
            raise ValidationError("side must be 'left' or 'right'")
        if side == "left" and "i" not in q.hypotheses:
            raise ValidationError("left-translate form needs hypothesis (i)")
        self.G = G
        self.H = q.subgroup
        self.side = side
        self._cache: dict[int, Molecule] = {}

    @property
    def space(self) -> PointedMetricSpace:
        return self.G.space

    def point_image(self, g: int) -> Molecule:
        """P'(g) as an exact molecule."""
        m = self._cache.get(g)
        if m is None:
            w = Fraction(1, len(self.H))
            t = self.G.table
            out: dict[int, Fraction] = {}
            for h in self.H:
                x = int(t[g, h]) if self.side == "right" else int(t[h, g])
                out[x] = out.get(x, 0) + w
                out[h] = out.get(h, 0) - w
            m = self._cache[g] = Molecule(self.space, out)
        return m

    def __call__(self, m: Molecule) -> Molecule:
        if m.space is not self.space:
            raise ValidationError("molecule must live over the group's space")
        out = Molecule.zero(self.space)
        for g, a in m.coeffs.items():
            out = out + a * self.point_image(g)
        return out


def averaging_projection(G: FiniteMetricGroup, H: Sequence[int], side: str | None = None):
    return AveragingProjection(G, H, side)


@dataclass
class ProjectionReport:
    hypotheses: list
    side: str
    idempotent: bool
    well_defined: bool
    lip: Fraction
    isometric: bool
    quotient_metric_valid: bool
    trivial_quotient: bool
    sides_agree: bool | None
    failures: list = field(default_factory=list)

    @property
    def norm_one(self) -> bool:
        return self.lip == 1 or (self.trivial_quotient and self.lip == 0)

    @property
    def ok(self) -> bool:
        return (self.idempotent and self.well_defined and self.isometric
                and self.quotient_metric_valid and self.norm_one
                and self.sides_agree is not False)

    def to_json(self) -> dict:
        return {"hypotheses": self.hypotheses, "formula": self.side,
                "idempotent": self.idempotent, "well_defined": self.well_defined,
                "lip_exact": format_rational(self.lip), "norm_one": self.norm_one,
                "isometric": self.isometric, "quotient_metric_valid": self.quotient_metric_valid,
                "sides_agree": self.sides_agree, "failures": self.failures[:20], "ok": self.ok}


def audit_projection(G: FiniteMetricGroup, H: Sequence[int], side: str | None = None) -> ProjectionReport:
    """Exact check of idempotence, norm one and the coset isometry."""
    P = averaging_projection(G, H, side)
    q = P.quotient
    n = len(G)
    fails = []
    idem = True
    for g in range(n):
        if P(P.point_image(g)) != P.point_image(g):
            idem = False
            fails.append(f"P(P'({g})) != P'({g})")
    well = all(P.point_image(int(G.table[g, h])) == P.point_image(g)
               for g in range(n) for h in P.H)
    lip = Fraction(0)
    for g in range(n):
        for f in range(g + 1, n):
            r = kr_norm(P.point_image(g) - P.point_image(f)).value / G.space.d(g, f)
            lip = max(lip, r)
    iso = True
    for a in range(len(q.cosets)):
        for b in range(a + 1, len(q.cosets)):
            g, f = q.cosets[a][0], q.cosets[b][0]
            v = kr_norm(P.point_image(g) - P.point_image(f)).value
            if v != q.metric.d(a, b):
                iso = False
                fails.append(f"||T'({g}H) - T'({f}H)|| = {v} != D = {q.metric.d(a, b)}")
    # for normal H the left and right translate forms must give the same molecule
    agree = None
    if q.normal:
        w = Fraction(1, len(P.H))
        agree = True
        for g in range(n):
            alt: dict[int, Fraction] = {}
            for h in P.H:
                x = int(G.table[h, g]) if P.side == "right" else int(G.table[g, h])
                alt[x] = alt.get(x, 0) + w
                alt[h] = alt.get(h, 0) - w
            if Molecule(G.space, alt) != P.point_image(g):
                agree = False
                fails.append(f"left and right averaging differ at {g}")
    return ProjectionReport(q.hypotheses, P.side, idem, well, lip, iso,
                            not q.metric_violations, len(q.cosets) == 1, agree, fails)


@dataclass
class TowerLevel:
    subgroup: tuple
    epsilon: Fraction
    error: Fraction
    bound: Fraction

    @property
    def ok(self) -> bool:
        return self.error <= self.bound


@dataclass
class TowerReport:
    levels: list
    l1: Fraction

    @property
    def ok(self) -> bool:
        return all(lv.ok for lv in self.levels) and (not self.levels or self.levels[-1].error == 0)

    def to_json(self) -> dict:
        return {"l1": format_rational(self.l1), "ok": self.ok,
                "levels": [{"subgroup": list(lv.subgroup), "epsilon": format_rational(lv.epsilon),
                            "error": format_rational(lv.error), "bound": format_rational(lv.bound),
                            "ok": lv.ok} for lv in self.levels]}


def tower_convergence(G: FiniteMetricGroup, chain: Sequence[Sequence[int]], m: Molecule) -> TowerReport:
    """Errors ||m - P_n m|| along a decreasing subgroup chain ending at {1}.

    Each level is compared with 2 * sum|a_i| * diam_D(H_n), D the bi-invariant
    majorant of d.
    """
    chain = [tuple(sorted(set(int(h) for h in H))) for H in chain]
    if not chain:
        raise ValidationError("empty subgroup chain")
    for H in chain:
        if not G.is_subgroup(H):
            raise ValidationError(f"{list(H)} is not a subgroup")
    for A, B in zip(chain, chain[1:]):
        if not (set(B) < set(A)):
            raise ValidationError("subgroup chain is not strictly decreasing")
    if chain[-1] != (G.identity,):
        raise ValidationError("subgroup chain must end at the trivial subgroup")
    Dm = biinvariant_majorant(G)
    l1 = m.l1
    levels = []
    for H in chain:
        eps = max(Dm.space.d(h, G.identity) for h in H)
        P = averaging_projection(G, H)
        err = kr_norm(m - P(m)).value
        levels.append(TowerLevel(H, eps, err, 2 * l1 * eps))
    return TowerReport(levels, l1)
