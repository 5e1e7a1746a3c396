"""Pointed finite metric spaces, metric transforms and hyperboloid nets.

Rational spaces keep their distance table as int64 numerators over a single
common denominator, so every comparison stays exact and still vectorises.
Float spaces keep a float64 table.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce
from typing import Any, Hashable, Iterable, Sequence

import numpy as np

from .errors import ValidationError

RATIONAL = "rational"
FLOAT = "float"


def parse_rational(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValidationError(f"not a rational: {value!r}")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise ValidationError(f"not a rational: {value!r}")


def format_rational(value: Fraction | int) -> str:
    return str(Fraction(value))


def _freeze_id(p: Any) -> Hashable:
    if isinstance(p, list):
        return tuple(_freeze_id(q) for q in p)
    return p


def _json_id(p: Hashable) -> Any:
    if isinstance(p, tuple):
        return [_json_id(q) for q in p]
    return p


class PointedMetricSpace:
    """A finite metric space with a distinguished basepoint.

    ``points`` are opaque hashable identifiers.  Distances are addressed either
    by position (:meth:`d`) or by identifier (:meth:`distance`).
    """

    def __init__(
        self,
        points: Sequence[Hashable],
        dist: Any,
        basepoint: Hashable | None = None,
        scalar: str | None = None,
    ):
        points = [_freeze_id(p) for p in points]
        n = len(points)
        if n == 0:
            raise ValidationError("a pointed space needs at least one point")
        if basepoint is None:
            basepoint = points[0]
        basepoint = _freeze_id(basepoint)

        if isinstance(dist, np.ndarray) and dist.dtype.kind == "f":
            kind = FLOAT
            rows = dist
        else:
            rows = [list(r) for r in dist]
            if len(rows) != n or any(len(r) != n for r in rows):
                raise ValidationError(f"distance table must be {n}x{n}")
            flat = [v for r in rows for v in r]
            has_float = any(isinstance(v, (float, np.floating)) for v in flat)
            has_exact = any(
                isinstance(v, (Fraction, str)) for v in flat
            )
            if has_float and has_exact:
                raise ValidationError("mixed rational and float distances")
            kind = FLOAT if has_float else RATIONAL
        if scalar is not None and scalar != kind:
            if scalar == FLOAT:
                kind = FLOAT
            else:
                raise ValidationError(f"float distances given for scalar={scalar!r}")

        if kind == FLOAT:
            num = np.asarray(rows, dtype=np.float64)
            den = 1
        else:
            fr = [[parse_rational(v) for v in r] for r in rows]
            den = reduce(math.lcm, (v.denominator for r in fr for v in r), 1)
            num = np.array(
                [[v.numerator * (den // v.denominator) for v in r] for r in fr],
                dtype=np.int64,
            ).reshape(n, n)
        self._init(points, num, den, basepoint, kind)

    def _init(self, points, num, den, basepoint, kind):
        self.points = list(points)
        self._index = {p: i for i, p in enumerate(self.points)}
        if len(self._index) != len(self.points):
            raise ValidationError("duplicate point identifiers")
        self.basepoint = basepoint
        self.scalar = kind
        self.num = num
        self.num.setflags(write=False)
        self.denominator = int(den)

    @classmethod
    def from_integer_matrix(cls, points, num, denominator=1, basepoint=None):
        """Fast path for exact tables already on a common denominator."""
        obj = cls.__new__(cls)
        points = [_freeze_id(p) for p in points]
        num = np.array(num, dtype=np.int64)
        obj._init(points, num, denominator,
                  points[0] if basepoint is None else basepoint, RATIONAL)
        return obj

    @classmethod
    def from_float_matrix(cls, points, table, basepoint=None):
        obj = cls.__new__(cls)
        points = [_freeze_id(p) for p in points]
        obj._init(points, np.array(table, dtype=np.float64),
                  1, points[0] if basepoint is None else basepoint, FLOAT)
        return obj

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"PointedMetricSpace(n={len(self)}, scalar={self.scalar!r}, basepoint={self.basepoint!r})"

    @property
    def is_rational(self) -> bool:
        return self.scalar == RATIONAL

    @property
    def base_index(self) -> int:
        return self._index[self.basepoint]

    def index(self, p: Hashable) -> int:
        try:
            return self._index[_freeze_id(p)]
        except KeyError:
            raise KeyError(f"{p!r} is not a point of this space") from None

    def __contains__(self, p) -> bool:
        return _freeze_id(p) in self._index

    def d(self, i: int, j: int):
        """Distance between the points at positions ``i`` and ``j``."""
        if self.scalar == RATIONAL:
            return Fraction(int(self.num[i, j]), self.denominator)
        return float(self.num[i, j])

    def distance(self, p, q):
        return self.d(self.index(p), self.index(q))

    def as_float(self) -> np.ndarray:
        return self.num / self.denominator if self.is_rational else self.num

    def to_float_space(self) -> PointedMetricSpace:
        return PointedMetricSpace.from_float_matrix(self.points, self.as_float(), self.basepoint)

    def restrict(self, indices: Iterable[int], basepoint=None) -> PointedMetricSpace:
        idx = list(indices)
        pts = [self.points[i] for i in idx]
        bp = self.basepoint if basepoint is None else basepoint
        if bp not in pts:
            raise ValidationError("restriction must keep the basepoint")
        sub = self.num[np.ix_(idx, idx)].copy()
        obj = PointedMetricSpace.__new__(PointedMetricSpace)
        obj._init(pts, sub, self.denominator, bp, self.scalar)
        return obj

    def to_json(self) -> dict:
        if self.is_rational:
            dist = [[format_rational(Fraction(int(v), self.denominator)) for v in row]
                    for row in self.num]
        else:
            dist = [[float(v) for v in row] for row in self.num]
        return {
            "points": [_json_id(p) for p in self.points],
            "basepoint": _json_id(self.basepoint),
            "dist": dist,
            "scalar": self.scalar,
        }

    @classmethod
    def from_json(cls, obj: dict) -> PointedMetricSpace:
        scalar = obj.get("scalar", RATIONAL)
        dist = obj["dist"]
        if scalar == FLOAT:
            dist = np.asarray(dist, dtype=np.float64)
        else:
            for row in dist:
                for v in row:
                    if isinstance(v, float):
                        raise ValidationError("float entry in a rational space")
        return cls(obj["points"], dist, obj.get("basepoint"), scalar)


def validate(space: PointedMetricSpace, atol: float = 1e-9) -> list[str]:
    """List every violated metric-space invariant (empty when valid).

    Exact for rational spaces; float spaces compare with absolute tolerance
    ``atol``.  Triangle checks are exhaustive, O(n^3).
    """
    out = []
    pts = space.points
    D = space.num
    n = len(pts)
    tol = 0 if space.is_rational else atol
    if space.basepoint not in space:
        out.append(f"basepoint {space.basepoint!r} is not a point")
    for i in range(n):
        if D[i, i] != 0:
            out.append(f"d({pts[i]!r},{pts[i]!r}) != 0")
    asym = np.argwhere(np.abs(D - D.T) > tol)
    for i, j in asym:
        if i < j:
            out.append(f"asymmetric pair ({pts[i]!r},{pts[j]!r})")
    nonpos = np.argwhere(D <= (0 if space.is_rational else 0.0))
    for i, j in nonpos:
        if i < j:
            out.append(f"non-positive distance on pair ({pts[i]!r},{pts[j]!r})")
    found = []
    for k in range(n):
        bad = D > D[:, [k]] + D[[k], :] + tol
        for i, j in np.argwhere(bad):
            if i < j:
                found.append((int(i), k, int(j)))
    for i, k, j in sorted(found):
        out.append(
            f"triangle ({pts[i]!r},{pts[k]!r},{pts[j]!r}): "
            f"d={space.d(i, j)} > {space.d(i, k)} + {space.d(k, j)}"
        )
    return out


def snowflake(space: PointedMetricSpace, alpha) -> PointedMetricSpace:
    """The metric ``d**alpha``; the identity when ``alpha == 1``."""
    if not 0 < alpha <= 1:
        raise ValidationError(f"snowflake exponent must lie in (0, 1], got {alpha}")
    if alpha == 1:
        return space
    table = np.power(space.as_float(), float(alpha))
    return PointedMetricSpace.from_float_matrix(space.points, table, space.basepoint)


# -- hyperboloid model ------------------------------------------------------

def minkowski(x: np.ndarray, y: np.ndarray) -> float:
    """The Lorentzian form: sum of the first n products minus the last."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(x[:-1] @ y[:-1] - x[-1] * y[-1])


class HyperboloidPoint:
    """A point of the upper sheet of the hyperboloid in R^{n+1}.

    The sheet condition is checked relative to the size of the last
    coordinate, since rounding in the form grows with it.
    """

    __slots__ = ("coords",)

    def __init__(self, coords, tol: float = 1e-12):
        x = np.array(coords, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise ValidationError("hyperboloid point needs n+1 >= 2 coordinates")
        if not x[-1] > 0:
            raise ValidationError("last coordinate must be positive")
        q = minkowski(x, x)
        if abs(q + 1.0) > tol * max(1.0, x[-1] ** 2):
            raise ValidationError(f"<x,x> = {q!r}, expected -1")
        x.setflags(write=False)
        self.coords = x

    @classmethod
    def lift(cls, v) -> HyperboloidPoint:
        """The point over ``v`` in R^n: (v, sqrt(1 + |v|^2))."""
        v = np.asarray(v, dtype=float)
        return cls(np.append(v, math.sqrt(1.0 + float(v @ v))))

    def __repr__(self):
        return f"HyperboloidPoint({self.coords.tolist()})"


def hyperbolic_distance(x: HyperboloidPoint, y: HyperboloidPoint) -> float:
    c = -minkowski(x.coords, y.coords)
    return math.acosh(max(1.0, c))


def random_hyperboloid_samples(dim: int, count: int, radius: float, rng) -> list[HyperboloidPoint]:
    """Samples with hyperbolic distance to the origin uniform in [0, radius]."""
    out = []
    for _ in range(count):
        u = rng.standard_normal(dim)
        u /= np.linalg.norm(u)
        r = rng.uniform(0.0, radius)
        out.append(HyperboloidPoint(np.append(math.sinh(r) * u, math.cosh(r))))
    return out


def greedy_net(samples: Sequence[HyperboloidPoint], eps: float) -> PointedMetricSpace:
    """Greedy eps-net of ``samples``, scanned in the given order.

    Point identifiers are the positions of kept samples; the first sample is
    always kept and is the basepoint.
    """
    if eps <= 0:
        raise ValidationError("net separation must be positive")
    if not samples:
        raise ValidationError("need at least one sample")
    kept: list[int] = []
    for i, s in enumerate(samples):
        if all(hyperbolic_distance(s, samples[j]) >= eps for j in kept):
            kept.append(i)
    k = len(kept)
    table = np.zeros((k, k))
    for a in range(k):
        for b in range(a + 1, k):
            table[a, b] = table[b, a] = hyperbolic_distance(samples[kept[a]], samples[kept[b]])
    return PointedMetricSpace.from_float_matrix(kept, table, kept[0])
