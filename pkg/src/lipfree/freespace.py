"""Lipschitz-free space norms over finite pointed metric spaces.

The norm of a molecule sum_x a_x delta(x) is the optimal transport cost of
the signed measure sum_x a_x [x] - (sum_x a_x) [basepoint]: the basepoint
acts as a free source or sink.  :func:`kr_norm` solves that transportation
problem exactly in rationals and returns both a primal flow and a 1-Lipschitz
dual witness vanishing at the basepoint.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConvergenceError, ValidationError
from .metric import PointedMetricSpace, format_rational, parse_rational


class Molecule:
    """A finitely supported combination of point evaluations.

    Coefficients are keyed by point *position* in ``space``.  The basepoint
    coefficient is dropped on construction since delta(basepoint) = 0.
    """

    __slots__ = ("space", "coeffs")

    def __init__(self, space: PointedMetricSpace, coeffs: Mapping[int, object] | None = None):
        self.space = space
        base = space.base_index
        clean = {}
        for i, a in (coeffs or {}).items():
            i = int(i)
            if not 0 <= i < len(space):
                raise ValidationError(f"point position {i} out of range")
            a = parse_rational(a)
            if a and i != base:
                clean[i] = clean.get(i, 0) + a
        self.coeffs = {i: a for i, a in sorted(clean.items()) if a}

    @classmethod
    def delta(cls, space, point) -> Molecule:
        return cls(space, {space.index(point): 1})

    @classmethod
    def from_points(cls, space, coeffs: Mapping) -> Molecule:
        return cls(space, {space.index(p): a for p, a in coeffs.items()})

    @classmethod
    def zero(cls, space) -> Molecule:
        return cls(space)

    def _check(self, other):
        if other.space is not self.space:
            raise ValidationError("molecules live over different spaces")

    def __add__(self, other: Molecule) -> Molecule:
        self._check(other)
        out = dict(self.coeffs)
        for i, a in other.coeffs.items():
            out[i] = out.get(i, 0) + a
        return Molecule(self.space, out)

    def __neg__(self):
        return Molecule(self.space, {i: -a for i, a in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        c = parse_rational(c)
        return Molecule(self.space, {i: c * a for i, a in self.coeffs.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        return (isinstance(other, Molecule) and other.space is self.space
                and other.coeffs == self.coeffs)

    def __hash__(self):
        return hash(tuple(self.coeffs.items()))

    def __bool__(self):
        return bool(self.coeffs)

    def __repr__(self):
        terms = " + ".join(f"{a}*d({self.space.points[i]!r})" for i, a in self.coeffs.items())
        return f"Molecule({terms or '0'})"

    @property
    def support(self) -> list[int]:
        return list(self.coeffs)

    @property
    def total(self) -> Fraction:
        return sum(self.coeffs.values(), Fraction(0))

    @property
    def l1(self) -> Fraction:
        return sum((abs(a) for a in self.coeffs.values()), Fraction(0))

    def push_forward(self, image: Sequence[int] | Callable[[int], int],
                     target: PointedMetricSpace | None = None) -> Molecule:
        """Linear lift of a point map (given on positions) applied to this molecule."""
        f = image if callable(image) else image.__getitem__
        out: dict[int, Fraction] = {}
        for i, a in self.coeffs.items():
            j = int(f(i))
            out[j] = out.get(j, 0) + a
        return Molecule(target or self.space, out)

    def to_json(self, inline_space: bool = False) -> dict:
        pts = self.space.points
        out = {"coeffs": {str(pts[i]): format_rational(a) for i, a in self.coeffs.items()}}
        if inline_space:
            out["space"] = self.space.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict, space: PointedMetricSpace | None = None) -> Molecule:
        if space is None:
            space = PointedMetricSpace.from_json(obj["space"])
        by_name = {str(p): i for i, p in enumerate(space.points)}
        try:
            coeffs = {by_name[str(k)]: parse_rational(v) for k, v in obj["coeffs"].items()}
        except KeyError as e:
            raise ValidationError(f"unknown point {e.args[0]!r} in molecule") from None
        return cls(space, coeffs)


def _imbalance(m: Molecule):
    """Supply and demand lists of the balanced measure behind ``m``."""
    mu = dict(m.coeffs)
    tot = m.total
    if tot:
        mu[m.space.base_index] = -tot
    supply = [(i, a) for i, a in sorted(mu.items()) if a > 0]
    demand = [(i, -a) for i, a in sorted(mu.items()) if a < 0]
    return supply, demand


@dataclass
class TransportCertificate:
    """Primal flow plus dual witness certifying a free-space norm.

    ``flow`` holds (source, sink, mass) in point positions.  The dual witness is
    built on demand over the whole space from the support potentials.
    """

    space: PointedMetricSpace
    value: object
    flow: list
    primal: object
    dual: object
    gap: float = 0.0
    _sinks: list = field(default_factory=list, repr=False)
    _sink_values: list = field(default_factory=list, repr=False)
    _witness: list | None = field(default=None, repr=False)

    @property
    def witness(self) -> list:
        """Dual witness value at every point position (zero at the basepoint)."""
        if self._witness is None:
            self._witness = _c_transform(self.space, self._sinks, self._sink_values)
        return self._witness

    def witness_map(self) -> dict:
        return dict(zip(self.space.points, self.witness))

    def verify(self, m: Molecule) -> list[str]:
        """Recheck conservation, Lipschitz-ness of the witness and duality."""
        problems = []
        sp = self.space
        exact = sp.is_rational
        net: dict[int, object] = {}
        for s, t, q in self.flow:
            if q < 0:
                problems.append(f"negative flow {q} on ({s},{t})")
            net[s] = net.get(s, 0) + q
            net[t] = net.get(t, 0) - q
        supply, demand = _imbalance(m)
        want = {i: a for i, a in supply}
        want.update({i: -a for i, a in demand})
        for i in set(net) | set(want):
            a, b = net.get(i, 0), want.get(i, 0)
            if (a != b) if exact else abs(float(a) - float(b)) > 1e-9:
                problems.append(f"conservation fails at {sp.points[i]!r}: {a} != {b}")
        w = self.witness
        if w[sp.base_index] != 0:
            problems.append("witness does not vanish at the basepoint")
        if exact:
            den = sp.denominator
            # witness values share denominator den with the distances
            wn = np.array([int(x * den) for x in w], dtype=np.int64)
            if any(Fraction(int(v), den) != x for v, x in zip(wn, w)):
                problems.append("witness not on the distance denominator")
            bad = np.abs(wn[:, None] - wn[None, :]) > sp.num
        else:
            wf = np.asarray(w, dtype=float)
            bad = np.abs(wf[:, None] - wf[None, :]) > sp.num + 1e-9
        if bad.any():
            i, j = map(int, np.argwhere(bad)[0])
            problems.append(f"witness not 1-Lipschitz on ({sp.points[i]!r},{sp.points[j]!r})")
        cost = sum((q * sp.d(s, t) for s, t, q in self.flow), Fraction(0) if exact else 0.0)
        pairing = sum((a * w[i] for i, a in m.coeffs.items()), Fraction(0) if exact else 0.0)
        if exact:
            if not cost == pairing == self.value:
                problems.append(f"duality gap: flow {cost}, pairing {pairing}, value {self.value}")
        elif abs(cost - pairing) > max(self.gap, 1e-9) * 2 + 1e-9:
            problems.append(f"float duality gap: flow {cost}, pairing {pairing}")
        return problems

    def to_json(self) -> dict:
        pts = self.space.points
        fmt = format_rational if self.space.is_rational else float
        return {
            "value": fmt(self.value),
            "gap": float(self.gap),
            "flow": [[pts[s], pts[t], fmt(q)] for s, t, q in self.flow],
            "witness": {str(p): fmt(v) for p, v in zip(pts, self.witness)},
        }


def _c_transform(space, sinks, sink_values):
    """f(z) = min_j (value_j + d(z, sink_j)), recentred to vanish at the basepoint."""
    n = len(space)
    base = space.base_index
    if not sinks:
        return [Fraction(0) if space.is_rational else 0.0] * n
    if space.is_rational:
        den = space.denominator
        vals = np.array([int(v * den) for v in sink_values], dtype=object)
        cols = space.num[:, sinks].astype(object) + vals[None, :]
        f = cols.min(axis=1)
        f = f - f[base]
        return [Fraction(int(x), den) for x in f]
    vals = np.asarray(sink_values, dtype=float)
    f = (space.num[:, sinks] + vals[None, :]).min(axis=1)
    return list(f - f[base])


# -- exact transportation simplex ------------------------------------------

def transport_simplex(supply: Sequence, demand: Sequence, cost: Sequence[Sequence]):
    """Minimum-cost transportation with exact arithmetic.

    ``supply`` and ``demand`` are positive amounts with equal totals, ``cost`` an
    m x n table.  Starts from the northwest-corner basis (kept as a spanning
    tree, zero-flow cells included) and pivots with Bland's rule on both the
    entering and the leaving cell.  Returns (flows, u, v): a dict cell -> flow
    over the final basis and potentials with u_i + v_j = cost_ij on basic cells
    and u_i + v_j <= cost_ij everywhere.
    """
    m, n = len(supply), len(demand)
    if sum(supply) != sum(demand):
        raise ValidationError("unbalanced transportation problem")
    flow: dict[tuple[int, int], object] = {}
    s = list(supply)
    d = list(demand)
    i = j = 0
    while True:
        q = min(s[i], d[j])
        flow[(i, j)] = q
        s[i] -= q
        d[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if s[i] == 0 and i < m - 1:
            i += 1
        else:
            j += 1
    assert len(flow) == m + n - 1

    while True:
        rows: list[list[int]] = [[] for _ in range(m)]
        cols: list[list[int]] = [[] for _ in range(n)]
        for (a, b) in flow:
            rows[a].append(b)
            cols[b].append(a)
        u: list = [None] * m
        v: list = [None] * n
        u[0] = 0
        queue = deque([("r", 0)])
        while queue:
            kind, k = queue.popleft()
            if kind == "r":
                for b in rows[k]:
                    if v[b] is None:
                        v[b] = cost[k][b] - u[k]
                        queue.append(("c", b))
            else:
                for a in cols[k]:
                    if u[a] is None:
                        u[a] = cost[a][k] - v[k]
                        queue.append(("r", a))
        entering = None
        for a in range(m):
            for b in range(n):
                if (a, b) not in flow and cost[a][b] - u[a] - v[b] < 0:
                    entering = (a, b)
                    break
            if entering:
                break
        if entering is None:
            return flow, u, v

        a0, b0 = entering
        # tree path from column b0 back to row a0
        prev = {("c", b0): None}
        queue = deque([("c", b0)])
        while ("r", a0) not in prev:
            kind, k = queue.popleft()
            nbrs = [("r", a) for a in cols[k]] if kind == "c" else [("c", b) for b in rows[k]]
            for nb in nbrs:
                if nb not in prev:
                    prev[nb] = (kind, k)
                    queue.append(nb)
        path = []
        node = ("r", a0)
        while prev[node] is not None:
            p = prev[node]
            cell = (node[1], p[1]) if node[0] == "r" else (p[1], node[1])
            path.append(cell)
            node = p
        # path runs r_a0 -> ... -> c_b0; walking back from c_b0 the signs alternate -,+,-,...
        path.reverse()
        minus = path[0::2]
        plus = path[1::2]
        theta = min(flow[c] for c in minus)
        leaving = min(c for c in minus if flow[c] == theta)
        for c in minus:
            flow[c] -= theta
        for c in plus:
            flow[c] += theta
        del flow[leaving]
        flow[entering] = theta


def kr_norm(m: Molecule) -> TransportCertificate:
    """Exact free-space norm of ``m`` with primal and dual certificates."""
    sp = m.space
    if not sp.is_rational:
        raise ValidationError("kr_norm needs a rational space; use kr_norm_float")
    supply, demand = _imbalance(m)
    if not supply:
        z = Fraction(0)
        return TransportCertificate(sp, z, [], z, z)
    cost = [[int(sp.num[s, t]) for t, _ in demand] for s, _ in supply]
    flows, u, v = transport_simplex([a for _, a in supply], [a for _, a in demand], cost)
    den = sp.denominator
    flow = [(supply[a][0], demand[b][0], q) for (a, b), q in sorted(flows.items()) if q]
    primal = sum((q * cost[a][b] for (a, b), q in flows.items()), Fraction(0)) / den
    dual = (sum((a * ui for (_, a), ui in zip(supply, u)), Fraction(0))
            + sum((a * vj for (_, a), vj in zip(demand, v)), Fraction(0))) / den
    if primal != dual:
        raise AssertionError(f"strong duality failed: {primal} != {dual}")
    sinks = [t for t, _ in demand]
    sink_values = [Fraction(-vj, den) for vj in v]
    return TransportCertificate(sp, primal, flow, primal, dual,
                                _sinks=sinks, _sink_values=sink_values)


def kr_norm_float(m: Molecule, tol: float = 1e-9) -> TransportCertificate:
    """Free-space norm over a float space, certified to within ``tol``.

    The primal LP goes to HiGHS; the dual witness is rebuilt from the LP
    marginals by a c-transform and its pairing is recomputed independently.
    """
    from scipy.optimize import linprog

    if tol <= 0:
        raise ValidationError("tol must be positive")
    sp = m.space
    supply, demand = _imbalance(m)
    if not supply:
        return TransportCertificate(sp, 0.0, [], 0.0, 0.0)
    table = sp.as_float()
    S = [i for i, _ in supply]
    T = [j for j, _ in demand]
    a = np.array([float(x) for _, x in supply])
    b = np.array([float(x) for _, x in demand])
    ms, nd = len(S), len(T)
    c = table[np.ix_(S, T)].ravel()
    A = np.zeros((ms + nd, ms * nd))
    for i in range(ms):
        A[i, i * nd:(i + 1) * nd] = 1.0
    for j in range(nd):
        A[ms + j, j::nd] = 1.0
    res = linprog(c, A_eq=A, b_eq=np.concatenate([a, b]), bounds=(0, None), method="highs")
    if res.status != 0:
        raise ConvergenceError(f"LP solver failed: {res.message}")
    y = res.eqlin.marginals
    v = y[ms:]
    sink_values = list(-v)
    witness = _c_transform(sp, T, sink_values)
    mu = {i: float(x) for i, x in m.coeffs.items()}
    dual = sum(x * witness[i] for i, x in mu.items())
    primal = float(res.fun)
    gap = abs(primal - dual)
    if gap > tol:
        raise ConvergenceError(f"primal {primal} and dual {dual} differ by {gap} > {tol}")
    x = res.x.reshape(ms, nd)
    flow = [(S[i], T[j], float(x[i, j])) for i in range(ms) for j in range(nd) if x[i, j] > 0]
    cert = TransportCertificate(sp, 0.5 * (primal + dual), flow, primal, dual, gap,
                                _sinks=T, _sink_values=sink_values)
    cert._witness = witness
    return cert


def lip_constant(image: Sequence[int] | Callable | Mapping,
                 domain: PointedMetricSpace, codomain: PointedMetricSpace):
    """Max over pairs x != y of d(f x, f y) / d(x, y).

    ``image`` maps domain positions to codomain positions (sequence, mapping or
    callable).  Exact when both spaces are rational.
    """
    n = len(domain)
    if callable(image):
        img = np.array([image(i) for i in range(n)], dtype=np.int64)
    else:
        img = np.array([image[i] for i in range(n)], dtype=np.int64)
    if n < 2:
        return Fraction(0) if domain.is_rational else 0.0
    iu = np.triu_indices(n, 1)
    num = codomain.num[img[:, None], img[None, :]][iu]
    den = domain.num[iu]
    if not (domain.is_rational and codomain.is_rational):
        return float(np.max((num / codomain.denominator) / (den / domain.denominator)))
    ratio = num.astype(float) / den.astype(float)
    top = ratio.max()
    cand = np.nonzero(ratio >= top * (1 - 1e-9))[0]
    # the (num, den) pairs near the float maximum are few; dedupe before going exact
    width = int(den[cand].max()) + 1
    keys = np.unique(num[cand] * width + den[cand])
    best = max(Fraction(int(k // width), int(k % width)) for k in keys)
    return best * Fraction(domain.denominator, codomain.denominator)


def brute_force_norm(m: Molecule, max_support: int = 6) -> Fraction:
    """Free-space norm by enumerating vertices of the dual polytope.

    The dual is sup sum_i a_i f(x_i) over f with f(0) = 0 and
    |f(x) - f(y)| <= d(x, y) on the support plus basepoint (any such f extends
    to the whole space).  Every vertex of that polytope has a spanning tree of
    tight constraints through the basepoint, so vertices are generated by
    attaching one point at a time at a tight distance from an already placed
    point, keeping only feasible partial assignments.
    """
    sp = m.space
    if not sp.is_rational:
        raise ValidationError("brute_force_norm needs a rational space")
    supp = m.support
    if len(supp) > max_support:
        raise ValidationError(f"support {len(supp)} exceeds {max_support}")
    if not supp:
        return Fraction(0)
    nodes = [sp.base_index] + supp
    k = len(nodes)
    D = [[int(sp.num[a, b]) for b in nodes] for a in nodes]
    alpha = [0] + [m.coeffs[i] for i in supp]
    best = None
    seen = set()
    stack = [((0,), (0,))]
    while stack:
        placed, values = stack.pop()
        if len(placed) == k:
            val = sum(alpha[p] * x for p, x in zip(placed, values))
            if best is None or val > best:
                best = val
            continue
        for x in range(1, k):
            if x in placed:
                continue
            for y, fy in zip(placed, values):
                for cand in (fy + D[x][y], fy - D[x][y]):
                    if all(abs(cand - fz) <= D[x][z] for z, fz in zip(placed, values)):
                        state = tuple(sorted(zip(placed + (x,), values + (cand,))))
                        if state not in seen:
                            seen.add(state)
                            p2, v2 = zip(*state)
                            stack.append((p2, v2))
    return Fraction(best) / sp.denominator
