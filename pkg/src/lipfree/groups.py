"""Finitely generated groups with ordered generators, Cayley balls and shortlex combings.

A :class:`GroupSpec` is a concrete group together with a linearly ordered
symmetric generating set.  :func:`build_ball` enumerates the radius-r ball in
shortlex order; ball elements are then addressed by their position in that
enumeration (0 is the identity), and each element's canonical key is its
shortlex normal form, a tuple of generator positions.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .errors import OutOfRangeError, ResourceError, ValidationError
from .metric import PointedMetricSpace

DEFAULT_ELEMENT_CAP = 500_000


class GroupSpec:
    """Base class: a group with an ordered symmetric generating set.

    Subclasses provide ``identity``, ``multiply``, ``inverse`` and an exact
    word-length function ``length`` with respect to the generating set.
    """

    family = "abstract"
    identity: Hashable

    def __init__(self, names: Sequence[str], gens: Sequence[Hashable],
                 generator_order: Sequence[str] | None = None):
        if generator_order is not None:
            order = list(generator_order)
            if sorted(order) != sorted(names) or len(set(order)) != len(order):
                raise ValidationError(
                    f"generator_order {order} is not a permutation of {list(names)}")
            lookup = dict(zip(names, gens))
            names, gens = order, [lookup[n] for n in order]
        self.generator_names = list(names)
        self.generators = list(gens)
        gen_set = set(self.generators)
        if len(gen_set) != len(self.generators):
            raise ValidationError("generating set lists an element twice")
        if self.identity in gen_set:
            raise ValidationError("identity cannot be a generator")
        for g in self.generators:
            if self.inverse(g) not in gen_set:
                raise ValidationError(f"generating set is not symmetric: missing inverse of {g!r}")
        pos = {g: i for i, g in enumerate(self.generators)}
        self.inverse_letter = [pos[self.inverse(g)] for g in self.generators]

    def multiply(self, a, b):
        raise NotImplementedError

    def inverse(self, a):
        raise NotImplementedError

    def length(self, a) -> int:
        raise NotImplementedError

    def evaluate(self, word: Sequence[int]):
        g = self.identity
        for s in word:
            g = self.multiply(g, self.generators[s])
        return g

    def word_names(self, word: Sequence[int]) -> str:
        return ".".join(self.generator_names[s] for s in word) or "1"

    def to_json(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_json(obj: dict) -> GroupSpec:
        fam = obj.get("family")
        order = obj.get("generator_order")
        if fam == "free_abelian":
            return FreeAbelian(int(obj["rank"]), obj.get("torsion", []), order)
        if fam == "free":
            return FreeGroup(int(obj["rank"]), order)
        if fam == "free_product_cyclic":
            return FreeProductCyclic(obj["orders"], order)
        if fam == "finite_table":
            return FiniteTable(obj["table"], obj["generators"],
                               obj.get("generator_names"), order)
        raise ValidationError(f"unknown group family {fam!r}")

    def __repr__(self):
        return f"{type(self).__name__}({self.generator_names})"


class FreeAbelian(GroupSpec):
    """Z^rank (+) Z_{m1} (+) ... with generators e1 <= -e1 <= ... <= f1 <= ... <= fk.

    The torsion generators ``f*`` are all nonzero elements of the finite part,
    in lexicographic order, so the torsion contributes length 0 or 1.
    """

    family = "free_abelian"

    def __init__(self, rank: int, torsion: Sequence[int] = (), generator_order=None):
        if rank < 0 or any(int(m) < 2 for m in torsion):
            raise ValidationError("rank must be >= 0 and torsion orders >= 2")
        if rank == 0 and not torsion:
            raise ValidationError("trivial group has no generators")
        self.rank = rank
        self.torsion = tuple(int(m) for m in torsion)
        dim = rank + len(self.torsion)
        self.identity = (0,) * dim
        names, gens = [], []
        for i in range(rank):
            for sign, suffix in ((1, ""), (-1, "inv")):
                v = [0] * dim
                v[i] = sign
                names.append(f"e{i + 1}{suffix}")
                gens.append(tuple(v))
        tors = [t for t in itertools.product(*(range(m) for m in self.torsion)) if any(t)]
        for k, t in enumerate(tors):
            names.append(f"f{k + 1}")
            gens.append((0,) * rank + t)
        super().__init__(names, gens, generator_order)

    def _reduce(self, v):
        r = self.rank
        return tuple(v[:r]) + tuple(x % m for x, m in zip(v[r:], self.torsion))

    def multiply(self, a, b):
        return self._reduce([x + y for x, y in zip(a, b)])

    def inverse(self, a):
        return self._reduce([-x for x in a])

    def length(self, a):
        r = self.rank
        return sum(abs(x) for x in a[:r]) + (1 if any(a[r:]) else 0)

    def to_json(self):
        return {"family": self.family, "rank": self.rank, "torsion": list(self.torsion),
                "generator_order": self.generator_names}


class FreeGroup(GroupSpec):
    """Free group on ``rank`` letters; elements are reduced tuples of +-(i+1)."""

    family = "free"

    def __init__(self, rank: int, generator_order=None):
        if rank < 1:
            raise ValidationError("free group rank must be >= 1")
        self.rank = rank
        self.identity = ()
        names, gens = [], []
        for i in range(rank):
            names += [f"a{i + 1}", f"a{i + 1}inv"]
            gens += [(i + 1,), (-(i + 1),)]
        super().__init__(names, gens, generator_order)

    def multiply(self, a, b):
        out = list(a)
        for x in b:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
        return tuple(out)

    def inverse(self, a):
        return tuple(-x for x in reversed(a))

    def length(self, a):
        return len(a)

    def to_json(self):
        return {"family": self.family, "rank": self.rank, "generator_order": self.generator_names}


class FreeProductCyclic(GroupSpec):
    """Free product Z_{m1} * Z_{m2} * ...; generators x_i and (for m_i > 2) x_i^{-1}.

    Elements are alternating syllable tuples ``((factor, exponent), ...)`` with
    exponents in 1..m-1 and no two adjacent syllables from the same factor.
    """

    family = "free_product_cyclic"

    def __init__(self, orders: Sequence[int], generator_order=None):
        orders = tuple(int(m) for m in orders)
        if not orders or any(m < 2 for m in orders):
            raise ValidationError("free product needs factor orders >= 2")
        self.orders = orders
        self.identity = ()
        names, gens = [], []
        for i, m in enumerate(orders):
            names.append(f"x{i + 1}")
            gens.append(((i, 1),))
            if m > 2:
                names.append(f"x{i + 1}inv")
                gens.append(((i, m - 1),))
        super().__init__(names, gens, generator_order)

    def multiply(self, a, b):
        out = list(a)
        for f, e in b:
            if out and out[-1][0] == f:
                e2 = (out[-1][1] + e) % self.orders[f]
                out.pop()
                if e2:
                    out.append((f, e2))
            else:
                out.append((f, e))
        return tuple(out)

    def inverse(self, a):
        return tuple((f, self.orders[f] - e) for f, e in reversed(a))

    def length(self, a):
        return sum(min(e, self.orders[f] - e) for f, e in a)

    def to_json(self):
        return {"family": self.family, "orders": list(self.orders),
                "generator_order": self.generator_names}


class FiniteTable(GroupSpec):
    """A finite group given by its multiplication table (elements 0..N-1)."""

    family = "finite_table"

    def __init__(self, table, generators: Sequence[int], generator_names=None,
                 generator_order=None):
        self.table = check_group_table(table)
        n = len(self.table)
        self.identity = identity_of(self.table)
        self._inv = np.argmax(self.table == self.identity, axis=1)
        gens = [int(g) for g in generators]
        if any(not 0 <= g < n for g in gens):
            raise ValidationError("generator index out of range")
        names = list(generator_names) if generator_names else [f"g{g}" for g in gens]
        super().__init__(names, gens, generator_order)
        self._lengths = _table_lengths(self.table, self.identity, self.generators)
        if (self._lengths < 0).any():
            raise ValidationError("generators do not generate the group")

    def multiply(self, a, b):
        return int(self.table[a, b])

    def inverse(self, a):
        return int(self._inv[a])

    def length(self, a):
        return int(self._lengths[a])

    def to_json(self):
        gens = dict(zip(self.generator_names, self.generators))
        return {"family": self.family, "table": self.table.tolist(),
                "generators": [gens[n] for n in self.generator_names],
                "generator_names": self.generator_names}


def check_group_table(table) -> np.ndarray:
    """Return the table as an array after checking the group axioms exhaustively."""
    t = np.asarray(table, dtype=np.int64)
    n = t.shape[0] if t.ndim == 2 else 0
    if t.ndim != 2 or t.shape != (n, n) or n == 0:
        raise ValidationError("multiplication table must be a nonempty square")
    if t.min() < 0 or t.max() >= n:
        raise ValidationError("table entries out of range")
    ar = np.arange(n)
    for row in t:
        if not np.array_equal(np.sort(row), ar):
            raise ValidationError("table row is not a permutation")
    for col in t.T:
        if not np.array_equal(np.sort(col), ar):
            raise ValidationError("table column is not a permutation")
    # (ab)c == a(bc) for all a, b, c
    if not np.array_equal(_assoc_left(t), _assoc_right(t)):
        raise ValidationError("multiplication is not associative")
    identity_of(t)
    return t


def _assoc_left(t):
    # [a, b, c] -> (ab)c
    return t[t[:, :, None], np.arange(t.shape[0])[None, None, :]]


def _assoc_right(t):
    # [a, b, c] -> a(bc)
    return t[np.arange(t.shape[0])[:, None, None], t[None, :, :]]


def identity_of(t: np.ndarray) -> int:
    n = t.shape[0]
    ar = np.arange(n)
    for e in range(n):
        if np.array_equal(t[e], ar) and np.array_equal(t[:, e], ar):
            return e
    raise ValidationError("table has no identity element")


def _table_lengths(t, identity, gens) -> np.ndarray:
    n = t.shape[0]
    dist = np.full(n, -1, dtype=np.int64)
    dist[identity] = 0
    q = deque([identity])
    while q:
        g = q.popleft()
        for s in gens:
            h = t[g, s]
            if dist[h] < 0:
                dist[h] = dist[g] + 1
                q.append(h)
    return dist


# -- Cayley balls -----------------------------------------------------------

@dataclass
class CayleyBall:
    """The radius-r ball of a group in shortlex enumeration order.

    Elements are referred to by position; ``words[g]`` is the shortlex normal
    form of element ``g`` as generator positions, ``parent[g]`` the element
    given by dropping its last letter, ``length[g]`` its word length.
    """

    spec: GroupSpec
    radius: int
    raw: list
    words: list
    parent: np.ndarray
    length: np.ndarray
    neighbor: np.ndarray          # neighbor[g, s] = position of g*s, or -1
    index: dict = field(repr=False)

    def __len__(self):
        return len(self.raw)

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Unordered pairs {g, h} at word distance 1, as (min, max)."""
        out = set()
        for g, row in enumerate(self.neighbor):
            for h in row:
                if h >= 0:
                    out.add((min(g, int(h)), max(g, int(h))))
        return sorted(out)

    def find(self, element) -> int:
        """Position of a raw group element; raises if it lies outside the ball."""
        try:
            return self.index[element]
        except KeyError:
            raise OutOfRangeError(f"{element!r} lies outside the radius-{self.radius} ball") from None

    def key(self, g: int) -> tuple:
        return self.words[g]

    def name(self, g: int) -> str:
        return self.spec.word_names(self.words[g])

    def size_of_radius(self, r: int) -> int:
        """Number of elements of length <= r (a prefix of the enumeration)."""
        return int(np.searchsorted(self.length, r, side="right"))

    @property
    def prefix_table(self) -> np.ndarray:
        """``table[g, i]`` = prefix of length i of g's normal form, saturating at g."""
        t = getattr(self, "_prefix_table", None)
        if t is None:
            n, r = len(self), self.radius
            t = np.empty((n, r + 1), dtype=np.int64)
            t[0, :] = 0
            for g in range(1, n):
                L = self.length[g]
                p = self.parent[g]
                t[g, :L] = t[p, :L]
                t[g, L:] = g
            t.setflags(write=False)
            self._prefix_table = t
        return t

    def exact_distance(self, g: int, h: int) -> int:
        """Word distance via the family's closed-form length (valid beyond the ball)."""
        s = self.spec
        return s.length(s.multiply(s.inverse(self.raw[g]), self.raw[h]))

    def distance_matrix(self, elements: Sequence[int] | None = None) -> np.ndarray:
        idx = range(len(self)) if elements is None else list(elements)
        idx = list(idx)
        s = self.spec
        inv = [s.inverse(self.raw[g]) for g in idx]
        n = len(idx)
        out = np.zeros((n, n), dtype=np.int64)
        for a in range(n):
            for b in range(a + 1, n):
                out[a, b] = out[b, a] = s.length(s.multiply(inv[a], self.raw[idx[b]]))
        return out

    def to_space(self, max_length: int | None = None) -> PointedMetricSpace:
        """The ball (or its elements of length <= max_length) as a pointed space."""
        n = len(self) if max_length is None else self.size_of_radius(max_length)
        return PointedMetricSpace.from_integer_matrix(
            list(range(n)), self.distance_matrix(range(n)), 1, 0)


def build_ball(spec: GroupSpec, radius: int, cap: int = DEFAULT_ELEMENT_CAP) -> CayleyBall:
    """Enumerate {g : |g| <= radius} in shortlex order.

    Frontier elements are expanded in enumeration order and generators appended
    in generator order; the first word to reach an element is its shortlex
    normal form.
    """
    if radius < 0:
        raise ValidationError("radius must be >= 0")
    gens = spec.generators
    k = len(gens)
    raw = [spec.identity]
    words = [()]
    parent = [-1]
    length = [0]
    index = {spec.identity: 0}
    frontier = [0]
    for L in range(radius):
        nxt = []
        for g in frontier:
            x = raw[g]
            for si, s in enumerate(gens):
                h = spec.multiply(x, s)
                if h in index:
                    continue
                if len(raw) >= cap:
                    raise ResourceError(f"ball exceeds element cap {cap}")
                index[h] = len(raw)
                raw.append(h)
                words.append(words[g] + (si,))
                parent.append(g)
                length.append(L + 1)
                nxt.append(index[h])
        frontier = nxt
        if not frontier:
            break
    n = len(raw)
    neighbor = np.full((n, k), -1, dtype=np.int64)
    for g, x in enumerate(raw):
        for si, s in enumerate(gens):
            neighbor[g, si] = index.get(spec.multiply(x, s), -1)
    ball = CayleyBall(spec, radius, raw, words, np.array(parent, dtype=np.int64),
                      np.array(length, dtype=np.int64), neighbor, index)
    _check_ball(ball)
    return ball


def _check_ball(ball: CayleyBall) -> None:
    spec = ball.spec
    inv = spec.inverse_letter
    for g in range(1, len(ball)):
        w = ball.words[g]
        p = ball.parent[g]
        # downward closure: the parent's normal form is the prefix
        assert ball.words[p] == w[:-1], (g, w)
        assert ball.length[p] == ball.length[g] - 1
        assert spec.length(ball.raw[g]) == len(w), "closed-form length disagrees with BFS"
        assert all(inv[a] != b for a, b in zip(w, w[1:])), "normal form not reduced"


def word_distance(ball: CayleyBall, g: int, h: int) -> int:
    """d_S(g, h) = |g^{-1} h|, looked up in the ball (raises if out of range)."""
    s = ball.spec
    x = s.multiply(s.inverse(ball.raw[g]), ball.raw[h])
    return int(ball.length[ball.find(x)])


def prefix_element(ball: CayleyBall, g: int, i: int) -> int:
    L = int(ball.length[g])
    if not 0 <= i <= L:
        raise OutOfRangeError(f"prefix index {i} outside 0..{L}")
    for _ in range(L - i):
        g = int(ball.parent[g])
    return g


# -- combability audit ------------------------------------------------------

@dataclass
class CombabilityReport:
    radius: int
    edges_audited: int
    max_divergence: int
    witness: tuple | None
    max_divergence_extended: int
    witness_extended: tuple | None
    convention: str = ("definition: 0 <= i <= min(|g|,|h|); "
                       "extended: 0 <= i < max(|g|,|h|), shorter prefix saturating")

    @property
    def constant(self) -> int:
        """Empirical combability constant max(1, both maxima)."""
        return max(1, self.max_divergence, self.max_divergence_extended)

    def to_json(self, ball: CayleyBall | None = None) -> dict:
        def wit(w):
            if w is None:
                return None
            g, h, i = w
            out = {"g": g, "h": h, "i": i}
            if ball is not None:
                out.update(g_word=ball.name(g), h_word=ball.name(h))
            return out

        return {
            "radius": self.radius,
            "edges_audited": self.edges_audited,
            "max_divergence": self.max_divergence,
            "witness": wit(self.witness),
            "max_divergence_extended": self.max_divergence_extended,
            "witness_extended": wit(self.witness_extended),
            "constant": self.constant,
            "convention": self.convention,
        }


def audit_combability(ball: CayleyBall) -> CombabilityReport:
    """Exhaustive prefix-divergence audit over edges with both ends of length <= r-1."""
    if ball.radius < 1:
        raise ValidationError("combability audit needs radius >= 1")
    pre = ball.prefix_table
    core = ball.size_of_radius(ball.radius - 1)
    cache: dict[tuple[int, int], int] = {}

    def dist(a, b):
        if a == b:
            return 0
        key = (a, b) if a < b else (b, a)
        v = cache.get(key)
        if v is None:
            v = cache[key] = word_distance(ball, a, b)
        return v

    best = best_ext = -1
    wit = wit_ext = None
    edges = [(g, h) for g, h in ball.edges if h < core]
    for g, h in edges:
        lg, lh = int(ball.length[g]), int(ball.length[h])
        for i in range(max(lg, lh, min(lg, lh) + 1)):
            dv = dist(int(pre[g, i]), int(pre[h, i]))
            if i <= min(lg, lh) and dv > best:
                best, wit = dv, (g, h, i)
            if i < max(lg, lh) and dv > best_ext:
                best_ext, wit_ext = dv, (g, h, i)
    return CombabilityReport(ball.radius, len(edges), max(best, 0), wit,
                             max(best_ext, 0), wit_ext)
