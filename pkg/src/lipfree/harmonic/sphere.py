"""Cesàro kernels on the sphere S^2 and zonal convolution.

For d = 3 the Gegenbauer index is 1/2, so C_k is the Legendre polynomial P_k,
the weight is 1 and the normalising constant is 1/2.  Kernels are evaluated
with a Clenshaw recurrence; sphere functions are held as spherical-harmonic
coefficients computed by Gauss-Legendre x trapezoid quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma, roots_jacobi, roots_legendre

from ..errors import UnsupportedError, ValidationError


def cesaro_numbers(delta: float, n: int) -> np.ndarray:
    """A_0..A_n with A_0 = 1 and A_k = A_{k-1} (delta + k) / k."""
    A = np.empty(n + 1)
    A[0] = 1.0
    for k in range(1, n + 1):
        A[k] = A[k - 1] * (delta + k) / k
    return A


@dataclass(frozen=True)
class SphereKernelSpec:
    n: int
    delta: float = 2.0
    d: int = 3

    def __post_init__(self):
        if self.d < 3:
            raise ValidationError("sphere dimension d must be >= 3")
        if self.n < 0:
            raise ValidationError("kernel degree must be >= 0")
        if self.delta < self.d - 1:
            raise ValidationError(f"Cesàro order must be >= d - 1 = {self.d - 1}")

    @property
    def lam(self) -> float:
        return (self.d - 2) / 2

    @property
    def A(self) -> np.ndarray:
        return cesaro_numbers(self.delta, self.n)

    @property
    def damping(self) -> np.ndarray:
        """A_{n-k} / A_n, the multiplier on degree-k harmonics."""
        A = self.A
        return A[::-1] / A[-1]

    @property
    def coefficients(self) -> np.ndarray:
        """Coefficients of K_n in the Gegenbauer basis C_k, k = 0..n."""
        k = np.arange(self.n + 1)
        return self.damping * (k + self.lam) / self.lam

    def to_json(self) -> dict:
        return {"d": self.d, "delta": self.delta, "n": self.n, "lambda": self.lam,
                "coefficients": self.coefficients.tolist()}


def _require_legendre(spec: SphereKernelSpec):
    if spec.d != 3:
        raise UnsupportedError("only d = 3 (Legendre case) is implemented")


def legendre_series(coeffs, t) -> np.ndarray:
    """sum_k c_k P_k(t) by Clenshaw's recurrence."""
    c = np.asarray(coeffs, dtype=float)
    t = np.asarray(t, dtype=float)
    b1 = np.zeros_like(t)
    b2 = np.zeros_like(t)
    # P_{k+1} = alpha_k P_k + beta_{k+1} P_{k-1}, alpha_k = (2k+1)t/(k+1), beta_k = -k/(k+1)
    for k in range(c.size - 1, -1, -1):
        b1, b2 = c[k] + (2 * k + 1) * t / (k + 1) * b1 - (k + 1) / (k + 2) * b2, b1
    return b1


def legendre_p(k: int, t) -> np.ndarray:
    """P_k by the three-term recurrence."""
    t = np.asarray(t, dtype=float)
    p0, p1 = np.ones_like(t), t.copy()
    if k == 0:
        return p0
    for j in range(1, k):
        p0, p1 = p1, ((2 * j + 1) * t * p1 - j * p0) / (j + 1)
    return p1


def weight_constant(lam: float) -> float:
    """c_lam with c_lam * integral of (1-x^2)^(lam-1/2) over [-1,1] equal to 1."""
    return gamma(lam + 1) / (math.sqrt(math.pi) * gamma(lam + 0.5))


def weighted_l1(f, lam: float, nodes: int) -> float:
    """c_lam * integral |f(x)| (1-x^2)^(lam-1/2) dx by Gauss-Jacobi quadrature.

    Exact for |f| a polynomial of degree <= 2 nodes - 1.
    """
    a = lam - 0.5
    x, w = roots_legendre(nodes) if a == 0 else roots_jacobi(nodes, a, a)
    return float(weight_constant(lam) * np.sum(w * np.abs(f(x))))


@dataclass
class CesaroKernel:
    spec: SphereKernelSpec
    nodes: np.ndarray
    values: np.ndarray
    norm: float

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    def __call__(self, t) -> np.ndarray:
        return legendre_series(self.spec.coefficients, t)

    def to_json(self) -> dict:
        return {"spec": self.spec.to_json(), "weighted_norm": self.norm,
                "min_value": self.min_value, "nodes": int(self.nodes.size)}


def cesaro_kernel(spec: SphereKernelSpec, nodes: int | None = None) -> CesaroKernel:
    """Sample K_n^delta at Gauss-Legendre nodes and compute its weighted L1 norm.

    The default node count 2(n+1) integrates degree <= 4n+3 exactly, well past
    the degree 2n needed for |K| when K is nonnegative.
    """
    _require_legendre(spec)
    q = nodes or 2 * (spec.n + 1)
    if 2 * q - 1 < 2 * spec.n:
        raise ValidationError(f"{q} nodes cannot integrate degree {2 * spec.n} exactly")
    x, _ = roots_legendre(q)
    coeffs = spec.coefficients
    vals = legendre_series(coeffs, x)
    norm = weighted_l1(lambda t: legendre_series(coeffs, t), spec.lam, q)
    return CesaroKernel(spec, x, vals, norm)


# -- spherical harmonics ------------------------------------------------------

def normalized_legendre(lmax: int, x) -> np.ndarray:
    """p[l, m, :] with Y_l^m(theta, phi) = p[l, m](cos theta) e^{i m phi}, m >= 0.

    Orthonormal on the unit sphere, Condon-Shortley phase included.
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.clip(1 - x * x, 0, None))
    p = np.zeros((lmax + 1, lmax + 1) + x.shape)
    p[0, 0] = 1 / math.sqrt(4 * math.pi)
    for m in range(1, lmax + 1):
        p[m, m] = -math.sqrt((2 * m + 1) / (2 * m)) * s * p[m - 1, m - 1]
    for m in range(lmax):
        p[m + 1, m] = math.sqrt(2 * m + 3) * x * p[m, m]
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4 * l * l - 1) / (l * l - m * m))
            b = math.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
            p[l, m] = a * (x * p[l - 1, m] - b * p[l - 2, m])
    return p


class SphereGrid:
    """nlat Gauss-Legendre latitudes times 2 nlat equispaced longitudes."""

    def __init__(self, nlat: int):
        if nlat < 1:
            raise ValidationError("grid needs nlat >= 1")
        self.nlat = nlat
        self.nphi = 2 * nlat
        self.x, self.w = roots_legendre(nlat)
        self.theta = np.arccos(self.x)
        self.phi = 2 * np.pi * np.arange(self.nphi) / self.nphi

    @property
    def degree(self) -> int:
        """Largest polynomial degree integrated exactly."""
        return 2 * self.nlat - 1

    def points(self) -> np.ndarray:
        st = np.sqrt(1 - self.x ** 2)[:, None]
        return np.stack([st * np.cos(self.phi)[None, :], st * np.sin(self.phi)[None, :],
                         np.broadcast_to(self.x[:, None], (self.nlat, self.nphi))], axis=-1)

    def sample(self, f) -> np.ndarray:
        """Values of f(xyz) on the grid, shape (nlat, nphi)."""
        P = self.points()
        return np.asarray(f(P.reshape(-1, 3)), dtype=float).reshape(self.nlat, self.nphi)


class SphereFunction:
    """Real band-limited function: a[l, m] for 0 <= m <= l <= lmax."""

    def __init__(self, coeffs, grid_degree: int | None = None):
        a = np.asarray(coeffs, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError("coefficients must be (lmax+1)x(lmax+1)")
        self.coeffs = np.tril(a)
        self.grid_degree = grid_degree

    @property
    def lmax(self) -> int:
        return self.coeffs.shape[0] - 1

    @classmethod
    def from_grid(cls, grid: SphereGrid, values, lmax: int | None = None) -> SphereFunction:
        v = np.asarray(values, dtype=float)
        if v.shape != (grid.nlat, grid.nphi):
            raise ValidationError("sample array does not match the grid")
        L = grid.nlat - 1 if lmax is None else lmax
        if L > grid.nlat - 1:
            raise ValidationError("lmax exceeds what the grid resolves")
        Fm = np.fft.rfft(v, axis=1)[:, : L + 1] * (2 * np.pi / grid.nphi)   # (nlat, m)
        p = normalized_legendre(L, grid.x)                                  # (l, m, nlat)
        a = np.einsum("lmi,i,im->lm", p, grid.w, Fm)
        return cls(a, grid.degree)

    @classmethod
    def from_callable(cls, grid: SphereGrid, f, lmax: int | None = None) -> SphereFunction:
        return cls.from_grid(grid, grid.sample(f), lmax)

    def to_grid(self, grid: SphereGrid) -> np.ndarray:
        p = normalized_legendre(self.lmax, grid.x)
        Gm = np.einsum("lmi,lm->im", p, self.coeffs)        # (nlat, m)
        e = np.exp(1j * np.outer(np.arange(self.lmax + 1), grid.phi))
        Gm[:, 1:] *= 2
        return (Gm @ e).real

    def evaluate(self, xyz) -> np.ndarray:
        P = np.asarray(xyz, dtype=float).reshape(-1, 3)
        x = np.clip(P[:, 2], -1, 1)
        phi = np.arctan2(P[:, 1], P[:, 0])
        p = normalized_legendre(self.lmax, x)
        e = np.exp(1j * np.outer(np.arange(self.lmax + 1), phi))
        e[1:] *= 2
        return np.einsum("lmi,lm,mi->i", p, self.coeffs, e).real

    @property
    def rank(self) -> int:
        """Nonzero complex harmonics counted over m = -l..l."""
        nz = np.abs(self.coeffs) > 0
        return int(nz[:, 0].sum() + 2 * nz[:, 1:].sum())

    @property
    def degree(self) -> int:
        nz = np.nonzero(np.abs(self.coeffs).sum(axis=1))[0]
        return int(nz[-1]) if nz.size else 0


def sphere_convolve(f: SphereFunction, spec: SphereKernelSpec) -> SphereFunction:
    """Zonal convolution with K_n^delta: multiply degree-l harmonics by A_{n-l}/A_n."""
    _require_legendre(spec)
    if f.grid_degree is not None and f.grid_degree < 2 * spec.n:
        raise ValidationError(
            f"grid integrates degree {f.grid_degree} exactly, need {2 * spec.n} for n = {spec.n}")
    L = min(f.lmax, spec.n)
    out = np.zeros((L + 1, L + 1), dtype=complex)
    out[:, :] = f.coeffs[: L + 1, : L + 1] * spec.damping[: L + 1, None]
    return SphereFunction(out, f.grid_degree)


def direct_convolve(grid: SphereGrid, values, spec: SphereKernelSpec, xyz) -> np.ndarray:
    """(1/4pi) sum over grid nodes of f(y) K(x.y) dsigma(y), evaluated at ``xyz``."""
    _require_legendre(spec)
    Y = grid.points().reshape(-1, 3)
    dsig = (np.repeat(grid.w, grid.nphi) * (2 * np.pi / grid.nphi))
    fv = np.asarray(values, dtype=float).reshape(-1)
    X = np.asarray(xyz, dtype=float).reshape(-1, 3)
    K = legendre_series(spec.coefficients, np.clip(X @ Y.T, -1, 1))
    return K @ (fv * dsig) / (4 * np.pi)
