"""Sparse polynomial arithmetic and Cauchy-integral differentiation.

Polynomials are stored as ``{exponent tuple: complex coefficient}`` maps; the
fixtures never need more than a handful of terms, so dense storage buys
nothing.  Everything here is immutable and side-effect free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InputError, NotHomogeneous

MultiIndex = tuple  # tuple[int, ...] of non-negative exponents


def multi_index(exponents: Iterable[int], nvars: int | None = None) -> MultiIndex:
    alpha = tuple(int(e) for e in exponents)
    if any(e < 0 for e in alpha):
        raise InputError(f"negative exponent in multi-index {alpha}")
    if nvars is not None and len(alpha) != nvars:
        raise InputError(f"multi-index {alpha} has length {len(alpha)}, expected {nvars}")
    return alpha


class Poly:
    """Polynomial in ``nvars`` complex variables with sparse coefficients."""

    __slots__ = ("nvars", "coeffs")

    def __init__(self, nvars: int, coeffs: dict | None = None):
        self.nvars = int(nvars)
        clean = {}
        for key, c in (coeffs or {}).items():
            alpha = multi_index(key, self.nvars)
            c = complex(c)
            if c != 0:
                clean[alpha] = clean.get(alpha, 0) + c
        self.coeffs = {k: v for k, v in clean.items() if v != 0}

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, nvars):
        return cls(nvars)

    @classmethod
    def const(cls, c, nvars):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, i, nvars):
        alpha = [0] * nvars
        alpha[i] = 1
        return cls(nvars, {tuple(alpha): 1})

    @classmethod
    def from_terms(cls, terms, nvars=None):
        """Build from the config literal ``[[e0, e1, ...], [re, im]]``."""
        terms = list(terms)
        if nvars is None:
            if not terms:
                raise InputError("cannot infer the number of variables of an empty term list")
            nvars = len(terms[0][0])
        coeffs = {}
        for term in terms:
            try:
                exps, c = term
                if isinstance(c, (list, tuple)):
                    re, im = c
                    c = complex(re, im)
            except (TypeError, ValueError) as exc:
                raise InputError(f"bad polynomial term {term!r}: expected [[exponents], [re, im]]") from exc
            alpha = multi_index(exps, nvars)
            coeffs[alpha] = coeffs.get(alpha, 0) + complex(c)
        return cls(nvars, coeffs)

    def to_terms(self):
        return [[list(a), [c.real, c.imag]] for a, c in sorted(self.coeffs.items())]

    # -- structure --------------------------------------------------------
    @property
    def total_degree(self) -> int:
        return max((sum(a) for a in self.coeffs), default=0)

    def degree_in(self, i: int) -> int:
        return max((a[i] for a in self.coeffs), default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_homogeneous(self) -> bool:
        return len({sum(a) for a in self.coeffs}) <= 1

    def variables(self) -> set:
        return {i for a in self.coeffs for i, e in enumerate(a) if e}

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise InputError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
            return other
        return Poly.const(other, self.nvars)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = out.get(a, 0) + c
        return Poly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.nvars, {a: -c for a, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out = {}
        for a, c in self.coeffs.items():
            for b, d in other.coeffs.items():
                key = tuple(x + y for x, y in zip(a, b))
                out[key] = out.get(key, 0) + c * d
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if int(k) != k or k < 0:
            raise InputError("only non-negative integer powers")
        out = Poly.const(1, self.nvars)
        base = self
        k = int(k)
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.nvars == other.nvars and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.nvars, tuple(sorted(self.coeffs.items(), key=lambda kv: kv[0]))))

    def __repr__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for a, c in sorted(self.coeffs.items(), reverse=True):
            mono = "*".join(f"z{i}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(a) if e)
            parts.append(f"({c:g})" + ("*" + mono if mono else ""))
        return " + ".join(parts)

    # -- calculus ---------------------------------------------------------
    def diff(self, j: int) -> "Poly":
        out = {}
        for a, c in self.coeffs.items():
            if a[j]:
                b = list(a)
                b[j] -= 1
                out[tuple(b)] = c * a[j]
        return Poly(self.nvars, out)

    def grad(self) -> list:
        return [self.diff(j) for j in range(self.nvars)]

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if z.shape[-1:] != (self.nvars,):
            raise InputError(f"point has {z.shape[-1:]} coordinates, polynomial expects {self.nvars}")
        out = np.zeros(z.shape[:-1], dtype=complex)
        for a, c in self.coeffs.items():
            term = np.full(z.shape[:-1], c, dtype=complex)
            for i, e in enumerate(a):
                if e:
                    term = term * z[..., i] ** e
            out = out + term
        return out if out.ndim else complex(out)

    def shift(self, p) -> "Poly":
        """Return ``x -> P(p + x)``."""
        p = [complex(v) for v in p]
        out = Poly.zero(self.nvars)
        lin = [Poly.var(i, self.nvars) + p[i] for i in range(self.nvars)]
        for a, c in self.coeffs.items():
            term = Poly.const(c, self.nvars)
            for i, e in enumerate(a):
                if e:
                    term = term * lin[i] ** e
            out = out + term
        return out

    def dense(self, shape=None) -> np.ndarray:
        """Dense coefficient array ``A[a0, a1, ...]``, truncated or padded to ``shape``."""
        if shape is None:
            shape = tuple(self.degree_in(i) + 1 for i in range(self.nvars))
        arr = np.zeros(shape, dtype=complex)
        for a, c in self.coeffs.items():
            if all(x < s for x, s in zip(a, shape)):
                arr[a] += c
        return arr

    def univariate_coeffs(self, var: int, z) -> np.ndarray:
        """Coefficients (ascending) of ``t -> P(z with z[var] = t)``, vectorised over ``z[..., :]``."""
        z = np.asarray(z, dtype=complex)
        d = self.degree_in(var)
        out = np.zeros(z.shape[:-1] + (d + 1,), dtype=complex)
        for a, c in self.coeffs.items():
            term = np.full(z.shape[:-1], c, dtype=complex)
            for i, e in enumerate(a):
                if e and i != var:
                    term = term * z[..., i] ** e
            out[..., a[var]] += term
        return out

    def dehomogenize(self, chart: int = 0) -> "Poly":
        """Set ``z_chart = 1`` and drop that variable."""
        out = {}
        for a, c in self.coeffs.items():
            b = a[:chart] + a[chart + 1:]
            out[b] = out.get(b, 0) + c
        return Poly(self.nvars - 1, out)


class HomPoly(Poly):
    """Homogeneous polynomial of fixed ``degree`` in the ``n + 1`` coordinates of CP^n."""

    __slots__ = ("degree",)

    def __init__(self, n: int, degree: int, coeffs: dict | None = None):
        super().__init__(n + 1, coeffs)
        self.degree = int(degree)
        bad = [a for a in self.coeffs if sum(a) != self.degree]
        if bad:
            raise InputError(f"terms {bad} do not have total degree {self.degree}")

    @property
    def n(self) -> int:
        return self.nvars - 1

    @classmethod
    def from_poly(cls, p: Poly, degree: int | None = None) -> "HomPoly":
        if degree is None:
            if not p.is_homogeneous():
                raise InputError(f"{p!r} is not homogeneous")
            degree = p.total_degree
        return cls(p.nvars - 1, degree, p.coeffs)

    @classmethod
    def from_literal(cls, terms, degree: int | None = None) -> "HomPoly":
        return cls.from_poly(Poly.from_terms(terms), degree)

    def __repr__(self):
        return f"HomPoly[deg {self.degree}]({super().__repr__()})"


def eval_poly(P: Poly, z):
    """Evaluate ``sum c_a z^a``; rejects points of the wrong dimension."""
    return P(z)


def grad_poly(P: HomPoly) -> list:
    """Partial derivatives as homogeneous polynomials of degree ``deg P - 1``."""
    d = max(P.degree - 1, 0)
    return [HomPoly(P.n, d, P.diff(j).coeffs) for j in range(P.nvars)]


# ---------------------------------------------------------------------------
# Cauchy differentiation on polydiscs


@dataclass(frozen=True)
class DiscStencil:
    """Samples of a function on the distinguished boundary of a polydisc.

    ``samples[m1, ..., mk] = g(center + radius * exp(2j*pi*m/N))``.
    """

    center: np.ndarray
    radius: np.ndarray
    N: int
    samples: np.ndarray

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=complex))
        radius = np.broadcast_to(np.asarray(self.radius, dtype=float), center.shape).copy()
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", radius)
        if self.N < 8 or self.N % 2:
            raise InputError(f"nodes per circle must be even and >= 8, got {self.N}")
        if np.any(radius <= 0):
            raise InputError("stencil radii must be positive")

    @property
    def dim(self) -> int:
        return self.center.size

    @staticmethod
    def node_grid(center, radius, N) -> np.ndarray:
        center = np.atleast_1d(np.asarray(center, dtype=complex))
        radius = np.broadcast_to(np.asarray(radius, dtype=float), center.shape)
        roots = np.exp(2j * np.pi * np.arange(N) / N)
        axes = [center[i] + radius[i] * roots for i in range(center.size)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    @classmethod
    def sample(cls, func: Callable, center, radius=None, N: int = 16) -> "DiscStencil":
        """Sample a vectorised ``func`` (``(..., k) -> (...)``) around ``center``."""
        center = np.atleast_1d(np.asarray(center, dtype=complex))
        if radius is None:
            radius = default_radius(center)
        nodes = cls.node_grid(center, radius, N)
        return cls(center, radius, N, np.asarray(func(nodes), dtype=complex))


def default_radius(center) -> float:
    return max(0.1 * float(np.linalg.norm(center)), 0.05)


def _taylor_table(stencil: DiscStencil) -> np.ndarray:
    k, N = stencil.dim, stencil.N
    s = np.asarray(stencil.samples)
    if s.shape != (N,) * k:
        raise InputError(f"incomplete stencil: samples shape {s.shape}, expected {(N,) * k}")
    if not np.all(np.isfinite(s)):
        raise InputError("incomplete stencil: non-finite samples")
    return np.fft.fftn(s) / N**k


def cauchy_derivatives(stencil: DiscStencil, orders: Sequence) -> list:
    """Several mixed partials from one stencil (one FFT)."""
    table = _taylor_table(stencil)
    out = []
    for order in orders:
        alpha = multi_index(order, stencil.dim)
        if max(alpha) >= stencil.N // 2:
            raise InputError(f"order {alpha} too high for N = {stencil.N}")
        scale = 1.0
        for a, rad in zip(alpha, stencil.radius):
            scale *= math.factorial(a) / rad**a
        out.append(complex(table[alpha] * scale))
    return out


def cauchy_derivative(stencil: DiscStencil, order) -> complex:
    """``d^alpha g(center)`` from discrete Cauchy integrals on the stencil circles.

    The trapezoidal rule on each circle picks out the Taylor coefficient
    ``c_alpha * radius^alpha`` up to aliasing from ``c_{alpha + N}``, so the
    result is exact for polynomials of per-variable degree below
    ``N - max(alpha)``.
    """
    return cauchy_derivatives(stencil, [order])[0]


# ---------------------------------------------------------------------------

_PROBE_LAMBDAS = (2.0, 0.5, 1.3 * np.exp(0.7j), 0.8 * np.exp(-2.1j))


def homogeneity_of(f: Callable, probes, tol: float = 1e-8, lambdas=_PROBE_LAMBDAS) -> int:
    """Integer ``w`` with ``f(lam z) = lam^w f(z)`` at every probe point.

    ``f`` is vectorised over a trailing coordinate axis.  Raises
    :class:`NotHomogeneous` when the exponents disagree or no probe gives a
    nonzero value.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=complex))
    base = np.asarray(f(probes), dtype=complex)
    scale = np.max(np.abs(base)) if base.size else 0.0
    live = np.abs(base) > 1e-12 * max(scale, 1e-300)
    if not np.any(live) or scale == 0:
        raise NotHomogeneous("function vanishes at every probe; weight undetermined")
    ratio = np.asarray(f(2.0 * probes), dtype=complex)[live] / base[live]
    estimates = np.round(np.log(np.abs(ratio)) / np.log(2.0))
    if np.ptp(estimates) != 0:
        raise NotHomogeneous(f"inconsistent exponents across probes: {sorted(set(estimates.tolist()))}")
    w = int(estimates[0])
    for lam in lambdas:
        lhs = np.asarray(f(lam * probes), dtype=complex)
        rhs = lam**w * base
        err = np.abs(lhs - rhs)
        if np.any(err > tol * (np.abs(lhs) + np.abs(rhs) + 1e-300)):
            raise NotHomogeneous(f"f(lam z) != lam^{w} f(z) for lam = {lam}")
    return w
