"""Fejér summability on the circle and the 2-torus.

Functions are held as Fourier coefficients c_k, k = -N..N, of a real function
on [0, 2pi).  Lipschitz constants are estimated on an M-point grid by
exhaustive divided differences with the arc-length metric (or a power of it).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ..errors import ValidationError

REAL_TOL = 1e-10


class CircleFunction:
    """A real trigonometric polynomial given by coefficients c_{-N..N}."""

    def __init__(self, coeffs, check: bool = True):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim != 1 or c.size % 2 == 0:
            raise ValidationError("coefficients must be a 1-D array of odd length 2N+1")
        if check and not np.allclose(c, np.conj(c[::-1]), rtol=0, atol=REAL_TOL):
            raise ValidationError("coefficients do not describe a real function")
        self.coeffs = c
        self.coeffs.setflags(write=False)

    @property
    def N(self) -> int:
        return self.coeffs.size // 2

    def coeff(self, k: int) -> complex:
        return complex(self.coeffs[k + self.N]) if abs(k) <= self.N else 0j

    @classmethod
    def constant(cls, value: float) -> CircleFunction:
        return cls([value])

    @classmethod
    def cosine(cls, k: int = 1, amplitude: float = 1.0) -> CircleFunction:
        c = np.zeros(2 * k + 1, dtype=complex)
        c[0] = c[-1] = amplitude / 2
        return cls(c)

    @classmethod
    def from_grid(cls, values) -> CircleFunction:
        """Interpolating trigonometric polynomial through M equispaced samples.

        For even M the Nyquist term is split evenly between k = +-M/2, which
        keeps the result real and reproduces the samples exactly.
        """
        v = np.asarray(values, dtype=float)
        M = v.size
        if M == 0:
            raise ValidationError("empty sample grid")
        F = np.fft.fft(v) / M
        if M % 2:
            N = (M - 1) // 2
            c = np.concatenate([F[M - N:], F[: N + 1]])
        else:
            N = M // 2
            c = np.concatenate([[F[N] / 2], F[N + 1:], F[:N], [F[N] / 2]])
        # symmetrise away rounding so the realness check is exact
        return cls((c + np.conj(c[::-1])) / 2)

    @classmethod
    def from_callable(cls, f: Callable, M: int) -> CircleFunction:
        return cls.from_grid(f(grid(M)))

    def to_grid(self, M: int) -> np.ndarray:
        """Exact samples at t_j = 2 pi j / M (aliasing folded in, so any M works)."""
        buf = np.zeros(M, dtype=complex)
        k = np.arange(-self.N, self.N + 1)
        np.add.at(buf, k % M, self.coeffs)
        return (np.fft.ifft(buf) * M).real

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        k = np.arange(-self.N, self.N + 1)
        return (np.exp(1j * np.multiply.outer(t, k)) @ self.coeffs).real

    @property
    def rank(self) -> int:
        """Number of nonzero Fourier modes."""
        return int(np.count_nonzero(self.coeffs))


def grid(M: int) -> np.ndarray:
    if M < 2:
        raise ValidationError("grid needs M >= 2 points")
    return 2 * np.pi * np.arange(M) / M


@dataclass(frozen=True)
class FejerKernel:
    """F_n with exact coefficients 1 - |k|/(n+1), |k| <= n."""

    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValidationError("Fejér degree must be >= 0")

    @property
    def exact_coefficients(self) -> list[Fraction]:
        return [1 - Fraction(abs(k), self.n + 1) for k in range(-self.n, self.n + 1)]

    @property
    def coefficients(self) -> np.ndarray:
        k = np.arange(-self.n, self.n + 1)
        return 1.0 - np.abs(k) / (self.n + 1)

    @property
    def unit_mass(self) -> bool:
        return self.exact_coefficients[self.n] == 1

    @property
    def symmetric(self) -> bool:
        c = self.exact_coefficients
        return c == c[::-1]

    def as_function(self) -> CircleFunction:
        return CircleFunction(self.coefficients)

    def values(self, M: int) -> np.ndarray:
        """Kernel samples from its coefficients."""
        return self.as_function().to_grid(M)

    def closed_form(self, t) -> np.ndarray:
        """(1/(n+1)) * (sin((n+1)t/2) / sin(t/2))**2, with value n+1 at t = 0."""
        t = np.asarray(t, dtype=float)
        s = np.sin(t / 2)
        safe = np.abs(s) > 1e-12
        out = np.full(t.shape, float(self.n + 1))
        out[safe] = (np.sin((self.n + 1) * t[safe] / 2) / s[safe]) ** 2 / (self.n + 1)
        return out


def fejer_convolve(f: CircleFunction, n: int) -> CircleFunction:
    """f * F_n: damp c_k by 1 - |k|/(n+1) and drop |k| > n."""
    if n < 0:
        raise ValidationError("Fejér degree must be >= 0")
    m = min(f.N, n)
    k = np.arange(-m, m + 1)
    c = f.coeffs[f.N - m: f.N + m + 1] * (1.0 - np.abs(k) / (n + 1))
    return CircleFunction(c, check=False)


def arc_distance(s, t):
    d = np.abs(np.asarray(s) - np.asarray(t)) % (2 * np.pi)
    return np.minimum(d, 2 * np.pi - d)


def lip_estimate(values, alpha: float = 1.0) -> float:
    """max |v_i - v_j| / arc(t_i, t_j)**alpha over all grid pairs."""
    if not 0 < alpha <= 1:
        raise ValidationError("snowflake exponent must lie in (0, 1]")
    v = np.asarray(values, dtype=float)
    M = v.size
    best = 0.0
    for s in range(1, M // 2 + 1):
        diff = np.abs(v - np.roll(v, s)).max()
        best = max(best, diff / (2 * np.pi * s / M) ** alpha)
    return float(best)


@dataclass
class YoungReport:
    n: int
    M: int
    kernel_l1: float
    rows: list = field(default_factory=list)   # (alpha, lip_f, lip_Tf, ok)

    @property
    def ok(self) -> bool:
        return all(r[3] for r in self.rows)

    def to_json(self) -> dict:
        return {"n": self.n, "grid": self.M, "kernel_l1": self.kernel_l1,
                "checks": [{"alpha": a, "lip_f": lf, "lip_Tf": lt, "ok": ok}
                           for a, lf, lt, ok in self.rows],
                "ok": self.ok}


def audit_young(f: CircleFunction, n: int, M: int = 4096,
                alphas: Sequence[float] = (1.0, 0.5, 0.75)) -> YoungReport:
    """Check Lip(f * F_n) <= ||F_n||_1 Lip(f) (1 + 10/M) for each metric d**alpha."""
    eps = 10.0 / M
    kernel = FejerKernel(n).values(M)
    l1 = float(np.abs(kernel).mean())       # normalized Haar measure
    fv = f.to_grid(M)
    tv = fejer_convolve(f, n).to_grid(M)
    rep = YoungReport(n, M, l1)
    for a in alphas:
        lf, lt = lip_estimate(fv, a), lip_estimate(tv, a)
        rep.rows.append((float(a), lf, lt, lt <= l1 * lf * (1 + eps) + 1e-12))
    return rep


@dataclass
class ConvergenceReport:
    M: int
    target: float
    rows: list        # (n, sup_error)

    @property
    def monotone(self) -> bool:
        e = [r[1] for r in self.rows]
        return all(b <= a * 1.05 + 1e-15 for a, b in zip(e, e[1:]))

    @property
    def final_ok(self) -> bool:
        return bool(self.rows) and self.rows[-1][1] < self.target

    @property
    def ok(self) -> bool:
        return self.monotone and self.final_ok

    def to_json(self) -> dict:
        return {"grid": self.M, "target": self.target,
                "errors": [{"n": n, "sup_error": e} for n, e in self.rows],
                "monotone": self.monotone, "final_ok": self.final_ok, "ok": self.ok}


def audit_pointwise_convergence(f: CircleFunction, n_list: Sequence[int], M: int = 4096,
                                target: float = 0.02) -> ConvergenceReport:
    """Grid sup-norm errors ||f * F_n - f|| for increasing n."""
    fv = f.to_grid(M)
    rows = [(int(n), float(np.abs(fejer_convolve(f, n).to_grid(M) - fv).max()))
            for n in sorted(n_list)]
    return ConvergenceReport(M, target, rows)


# -- 2-torus ------------------------------------------------------------------

class TorusFunction:
    """Real function on T^2 with coefficients c[k1 + N, k2 + N]."""

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] % 2 == 0:
            raise ValidationError("torus coefficients must be a (2N+1)x(2N+1) array")
        if not np.allclose(c, np.conj(c[::-1, ::-1]), rtol=0, atol=REAL_TOL):
            raise ValidationError("coefficients do not describe a real function")
        self.coeffs = c

    @property
    def N(self) -> int:
        return self.coeffs.shape[0] // 2

    @classmethod
    def from_grid(cls, values) -> TorusFunction:
        v = np.asarray(values, dtype=float)
        M = v.shape[0]
        if v.shape != (M, M) or M % 2 == 0:
            raise ValidationError("torus samples must be an odd square grid")
        F = np.fft.fftshift(np.fft.fft2(v)) / (M * M)
        return cls((F + np.conj(F[::-1, ::-1])) / 2)

    def to_grid(self, M: int) -> np.ndarray:
        buf = np.zeros((M, M), dtype=complex)
        k = np.arange(-self.N, self.N + 1) % M
        np.add.at(buf, (k[:, None], k[None, :]), self.coeffs)
        return (np.fft.ifft2(buf) * M * M).real

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.coeffs))


def fejer_convolve_torus(f: TorusFunction, n: int) -> TorusFunction:
    """Convolution with the product kernel F_n(s) F_n(t)."""
    if n < 0:
        raise ValidationError("Fejér degree must be >= 0")
    m = min(f.N, n)
    k = np.arange(-m, m + 1)
    w = 1.0 - np.abs(k) / (n + 1)
    c = f.coeffs[f.N - m: f.N + m + 1, f.N - m: f.N + m + 1] * np.outer(w, w)
    return TorusFunction(c)


def torus_lip_estimate(values) -> float:
    """Divided differences over all grid pairs for the l1 sum of arc metrics."""
    v = np.asarray(values, dtype=float)
    M = v.shape[0]
    h = 2 * np.pi / M
    best = 0.0
    for a in range(M // 2 + 1):
        for b in range(-(M // 2), M // 2 + 1):
            if a == 0 and b <= 0:
                continue
            diff = np.abs(v - np.roll(v, (a, b), axis=(0, 1))).max()
            best = max(best, diff / (h * (a + abs(b))))
    return float(best)
