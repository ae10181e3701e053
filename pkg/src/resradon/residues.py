"""Residue currents of complete intersections.

Three independent evaluation paths are provided:

* ``grothendieck_residue``: exact point residues by series substitution
  (triangular generator tuples, m <= 2);
* ``tube_integral``: quadrature over the real tube ``{|F_k| = eps_k}`` along an
  admissible schedule, either around an isolated zero (point mode) or fibered
  over a contour on a parametrised curve (curve mode);
* ``residue_pairing``: one-dimensional contour integrals of the Leray density
  ``J(s) ds`` on a parametrised curve.

Every residue is normalised by ``(2 pi i)^(-m)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.signal import convolve2d

from .errors import (
    BranchPointError,
    GeometryError,
    InputError,
    NotStabilizedError,
    SingularPointError,
    UnsupportedBasisError,
)
from .geometry import CurveParam, Cycle
from .polyalg import HomPoly, Poly
from .rational import RationalExpr


# ---------------------------------------------------------------------------
# data


@dataclass
class VarietySpec:
    """Complete intersection ``{P_1 = ... = P_m = 0}`` in CP^n."""

    n: int
    generators: list
    weight: int | None = None
    param: CurveParam | None = None
    charts: list | None = None

    def __post_init__(self):
        gens = [g if isinstance(g, HomPoly) else HomPoly.from_poly(g) for g in self.generators]
        self.generators = gens
        if not gens:
            raise InputError("at least one generator is required")
        for g in gens:
            if g.n != self.n:
                raise InputError(f"generator {g!r} lives in CP^{g.n}, expected CP^{self.n}")
            if g.is_zero():
                raise InputError("zero generator")
        if self.m > self.n - 1:
            raise InputError(f"codimension {self.m} too large for CP^{self.n}")
        expected = sum(self.degrees) - (self.n + 1)
        if self.weight is None:
            self.weight = expected
        elif self.weight != expected:
            raise InputError(f"weight {self.weight} inconsistent with degrees {self.degrees} (expected {expected})")
        if self.param is not None:
            if self.param.n != self.n:
                raise InputError("parametrisation has the wrong ambient dimension")
            s = 0.37 + 0.61j + 0.9 * np.exp(2j * np.pi * np.arange(7) / 7)
            z = self.param.z(s)
            for g in gens:
                scale = np.max(np.abs(z)) ** g.degree
                if np.max(np.abs(g(z))) > 1e-10 * scale:
                    raise InputError(f"generator {g!r} does not vanish along the parametrisation")

    @property
    def m(self) -> int:
        return len(self.generators)

    @property
    def degrees(self) -> list:
        return [g.degree for g in self.generators]

    def affine_generators(self) -> list:
        return [g.dehomogenize(0) for g in self.generators]


@dataclass
class ResidualFormSpec:
    """Numerator data of a residual current.

    ``mode == "leray"``: ``func`` is the density ``J(s)`` on the curve chart.
    ``mode == "affine"``: ``func`` is the coefficient ``phi(u)`` of
    ``phi du_1 ^ ... ^ du_n / (F_1 ... F_m)``, taking ``u[..., n]``.
    """

    mode: str
    func: Callable
    weight: int | None = None
    expr: str | None = None

    def __post_init__(self):
        if self.mode not in ("leray", "affine"):
            raise InputError(f"unknown form mode {self.mode!r}")

    @classmethod
    def leray(cls, J, weight=None):
        if isinstance(J, str):
            r = RationalExpr.parse(J, ("s",))
            return cls("leray", r, weight, J)
        return cls("leray", J, weight)

    @classmethod
    def affine(cls, phi, n: int = 2, weight=None):
        if isinstance(phi, str):
            r = RationalExpr.parse(phi, tuple(f"u{k}" for k in range(1, n + 1)))
            return cls("affine", r.on_last_axis, weight, phi)
        return cls("affine", phi, weight)

    def check_decay(self, radii=(1e3, 1e4)) -> None:
        """Require ``J(s) = O(1/s^2)``, i.e. ``J ds`` regular at ``s = infinity``."""
        if self.mode != "leray":
            raise InputError("decay check applies to Leray densities")
        ring = np.exp(2j * np.pi * (np.arange(16) + 0.5) / 16)
        growth = []
        for R in radii:
            s = R * ring
            growth.append(np.max(np.abs(s**2 * np.asarray(self.func(s), dtype=complex))))
        if not np.all(np.isfinite(growth)) or growth[-1] > 2 * growth[0] + 1e-300:
            raise InputError("J(s) ds does not extend over the point s = infinity (need J = O(1/s^2))")


@dataclass(frozen=True)
class AdmissibleSchedule:
    """Tube radii ``eps_m = t``, ``eps_j = eps_{j+1}^kappa`` with ``t`` halved."""

    eps0: float = 0.05
    kappa: float = 2.0
    halvings: int = 4
    tol: float = 1e-8

    def __post_init__(self):
        if not self.eps0 > 0:
            raise InputError("schedule start must be positive")
        if self.kappa < 2:
            raise InputError("hierarchy exponent must be >= 2")
        if self.halvings < 3:
            raise InputError("at least three halvings are required")
        if not self.tol > 0:
            raise InputError("tolerance must be positive")

    def radii(self, t: float, m: int) -> np.ndarray:
        eps = np.empty(m)
        eps[-1] = t
        for j in range(m - 2, -1, -1):
            eps[j] = eps[j + 1] ** self.kappa
        return eps

    def stages(self):
        return [self.eps0 / 2**k for k in range(self.halvings + 1)]


@dataclass(frozen=True)
class PolydiscRegion:
    """Neighbourhood ``|z_k - p_k| < radius`` of an isolated zero."""

    center: tuple
    radius: float = 0.5

    @property
    def p(self) -> np.ndarray:
        return np.asarray(self.center, dtype=complex)


# ---------------------------------------------------------------------------
# numerics helpers


def batched_roots(coeffs) -> np.ndarray:
    """Roots of many polynomials (ascending coefficients along the last axis).

    Rows whose leading coefficient vanishes get ``inf`` for the missing roots.
    """
    c = np.asarray(coeffs, dtype=complex)
    while c.shape[-1] > 1 and not np.any(c[..., -1]):
        c = c[..., :-1]
    d = c.shape[-1] - 1
    batch = c.shape[:-1]
    if d == 0:
        return np.empty(batch + (0,), dtype=complex)
    flat = c.reshape(-1, d + 1)
    out = np.full((flat.shape[0], d), np.inf + 0j)
    lead = flat[:, -1]
    scale = np.max(np.abs(flat), axis=1)
    ok = np.abs(lead) > 1e-14 * scale
    if np.any(ok):
        mon = flat[ok, :-1] / lead[ok, None]
        comp = np.zeros((mon.shape[0], d, d), dtype=complex)
        comp[:, 0, :] = -mon[:, ::-1]
        if d > 1:
            comp[:, np.arange(1, d), np.arange(d - 1)] = 1
        out[ok] = np.linalg.eigvals(comp)
    for i in np.flatnonzero(~ok):
        r = np.roots(flat[i, ::-1])
        out[i, : len(r)] = r
    return out.reshape(batch + (d,))


def _stable(history, tol) -> bool:
    """Two successive changes below ``tol`` (relative, floor 1)."""
    if len(history) < 3:
        return False
    v = history[-1]
    scale = max(1.0, abs(v))
    return abs(history[-1] - history[-2]) <= tol * scale and abs(history[-2] - history[-3]) <= tol * scale


def refine_quadrature(evaluate: Callable[[int], complex], N0: int = 64, tol: float = 1e-8, N_max: int = 1024):
    """Double the node count until two consecutive results agree within ``0.1 * tol``."""
    N = N0
    prev = evaluate(N)
    history = [prev]
    while N < N_max:
        N *= 2
        cur = evaluate(N)
        history.append(cur)
        if abs(cur - prev) <= 0.1 * tol * max(1.0, abs(cur)):
            return cur, N
        prev = cur
    raise NotStabilizedError(f"quadrature did not settle up to {N_max} nodes per circle", history)


def _run_schedule(stage_value: Callable[[float], complex], sched: AdmissibleSchedule) -> complex:
    history = []
    for t in sched.stages():
        history.append(stage_value(t))
        if _stable(history, sched.tol):
            return history[-1]
    raise NotStabilizedError(f"tube values did not stabilise after {sched.halvings} halvings", history)


def _as_numerator(h, nvars):
    if h is None:
        return lambda x: np.ones(np.shape(x)[:-1], dtype=complex)
    if isinstance(h, Poly):
        if h.nvars != nvars:
            raise InputError(f"numerator has {h.nvars} variables, expected {nvars}")
        return h
    if callable(h):
        return h
    c = complex(h)
    return lambda x: np.full(np.shape(x)[:-1], c, dtype=complex)


def _univariate_in(F: Poly):
    """Index of the only variable ``F`` depends on, or ``None``."""
    vs = F.variables()
    return next(iter(vs)) if len(vs) == 1 else None


def _perm_sign(order) -> int:
    return -1 if order[0] > order[1] else 1


# ---------------------------------------------------------------------------
# tube quadrature


def _point_fiber(F: list, w: np.ndarray, region: PolydiscRegion):
    """All ``z`` in the region with ``F(z) = w`` for a batch of ``w`` values.

    Returns points ``(batch, k, m)`` padded with nan and a validity mask.
    """
    m = len(F)
    p, R = region.p, region.radius
    batch = w.shape[:-1]
    if m == 1:
        z = np.zeros(batch + (1,), dtype=complex)
        coeffs = F[0].univariate_coeffs(0, z)
        coeffs[..., 0] -= w[..., 0]
        roots = batched_roots(coeffs)[..., None]
        inside = np.abs(roots[..., 0] - p[0]) < R
        return roots, inside

    outer = [k for k in range(2) if _univariate_in(F[k]) is not None]
    if outer:
        ko = outer[-1]
        ki = 1 - ko
        vo = _univariate_in(F[ko])
        vi = 1 - vo
        z = np.zeros(batch + (2,), dtype=complex)
        co = F[ko].univariate_coeffs(vo, z)
        co[..., 0] -= w[..., ko]
        t = batched_roots(co)
        t_in = np.abs(t - p[vo]) < R
        zz = np.zeros(t.shape + (2,), dtype=complex)
        zz[..., vo] = np.where(t_in, t, p[vo])
        ci = F[ki].univariate_coeffs(vi, zz)
        ci[..., 0] -= w[..., None, ki]
        x = batched_roots(ci)
        pts = np.zeros(x.shape + (2,), dtype=complex)
        pts[..., vi] = x
        pts[..., vo] = t[..., None]
        inside = t_in[..., None] & (np.abs(x - p[vi]) < R)
        return pts.reshape(batch + (-1, 2)), inside.reshape(batch + (-1,))
    return _resultant_fiber(F, w, region)


def _x_coeff_table(f: Poly) -> np.ndarray:
    """``T[i, j]`` = coefficient of ``x^i t^j`` for a polynomial in ``(x, t)``."""
    dx = max(a[0] for a in f.coeffs)
    dt = max(a[1] for a in f.coeffs)
    T = np.zeros((dx + 1, dt + 1), dtype=complex)
    for a, c in f.coeffs.items():
        T[a[0], a[1]] = c
    return T


def _sylvester_det(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Resultant in ``x`` from ascending coefficient arrays ``a[..., i]``, ``b[..., j]``."""
    da, db = a.shape[-1] - 1, b.shape[-1] - 1
    size = da + db
    S = np.zeros(a.shape[:-1] + (size, size), dtype=complex)
    for r in range(db):
        S[..., r, r:r + da + 1] = a[..., ::-1]
    for r in range(da):
        S[..., db + r, r:r + db + 1] = b[..., ::-1]
    return np.linalg.det(S)


def _newton_polish(F, pts, w, steps: int = 4):
    """A few Newton steps on ``F(z) = w`` for candidate fiber points."""
    J = [[F[i].diff(j) for j in range(2)] for i in range(2)]
    z = pts.copy()
    ok = np.all(np.isfinite(z), axis=-1)
    z[~ok] = 0
    for _ in range(steps):
        r = np.stack([F[i](z) for i in range(2)], axis=-1) - w
        a, b = J[0][0](z), J[0][1](z)
        c, d = J[1][0](z), J[1][1](z)
        det = a * d - b * c
        safe = np.where(det == 0, 1, det)
        z = z - np.stack([d * r[..., 0] - b * r[..., 1], a * r[..., 1] - c * r[..., 0]], axis=-1) / safe[..., None]
    z[~ok] = np.nan
    return z


def _resultant_fiber(F, w, region, chunk: int = 1024):
    """General m = 2 fibers: eliminate ``z_1`` with a resultant in ``z_2``.

    The resultant is sampled at roots of unity and its coefficients in
    ``z_2`` recovered by FFT; Bezout bounds its degree by the product of
    the total degrees.  Candidates are polished by Newton's method, since
    clustered roots of the eliminant are only accurate to a fractional
    power of machine precision.
    """
    if any(f.is_zero() for f in F):
        raise GeometryError("zero generator; fibers are not finite")
    tabs = [_x_coeff_table(f) for f in F]
    if tabs[0].shape[0] < 2 or tabs[1].shape[0] < 2:
        raise GeometryError("a generator does not involve the first variable")
    batch = w.shape[:-1]
    flat = w.reshape(-1, 2)
    parts = [_resultant_fiber_flat(F, tabs, flat[i:i + chunk], region) for i in range(0, flat.shape[0], chunk)]
    k = max(p[0].shape[1] for p in parts)
    pts = np.full((flat.shape[0], k, 2), np.nan + 0j)
    inside = np.zeros((flat.shape[0], k), dtype=bool)
    row = 0
    for p, ins in parts:
        pts[row:row + p.shape[0], : p.shape[1]] = p
        inside[row:row + p.shape[0], : p.shape[1]] = ins
        row += p.shape[0]
    return pts.reshape(batch + (k, 2)), inside.reshape(batch + (k,))


def _resultant_fiber_flat(F, tabs, w, region):
    p, R = region.p, region.radius
    K = F[0].total_degree * F[1].total_degree + 1
    ts = np.exp(2j * np.pi * np.arange(K) / K)
    vals = []
    for T, k in zip(tabs, range(2)):
        c = (ts[:, None] ** np.arange(T.shape[1])) @ T.T  # (K, dx+1)
        c = np.broadcast_to(c, (w.shape[0],) + c.shape).copy()
        c[..., 0] -= w[:, None, k]
        vals.append(c)
    co = np.fft.fft(_sylvester_det(vals[0], vals[1]), axis=-1) / K
    co[np.abs(co) < 1e-13 * np.max(np.abs(co), axis=-1, keepdims=True)] = 0
    if np.all(co[..., 1:] == 0):
        raise GeometryError("resultant is constant; fibers are not finite")
    t = batched_roots(co)
    near = np.abs(t - p[1]) < 1.5 * R
    zz = np.zeros(t.shape + (2,), dtype=complex)
    zz[..., 1] = np.where(near, t, p[1])
    ci = F[0].univariate_coeffs(0, zz)
    ci[..., 0] -= w[:, None, 0]
    x = batched_roots(ci)
    pts = np.zeros(x.shape + (2,), dtype=complex)
    pts[..., 0] = x
    pts[..., 1] = t[..., None]
    pts = pts.reshape(w.shape[0], -1, 2)
    keep = (near[..., None] & (np.abs(x - p[0]) < 1.5 * R)).reshape(w.shape[0], -1)
    # compact to the plausible candidates before polishing
    k = max(int(keep.sum(axis=-1).max()), 1)
    order = np.argsort(~keep, axis=-1, kind="stable")[:, :k]
    pts = np.take_along_axis(pts, order[..., None], axis=1)
    pts[~np.take_along_axis(keep, order, axis=1)] = np.nan
    pts = _newton_polish(F, pts, w[:, None, :])
    finite = np.all(np.isfinite(pts), axis=-1)
    safe = np.where(finite[..., None], pts, 0)
    resid = np.max(np.abs(np.stack([F[i](safe) for i in range(2)], axis=-1) - w[:, None, :]), axis=-1)
    scale = 1 + np.max(np.abs(w), axis=-1, keepdims=True)
    inside = finite & np.all(np.abs(safe - p) < R, axis=-1) & (resid < 1e-10 * scale)
    # several candidates may polish onto the same fiber point
    return _dedupe(pts, inside)


def _dedupe(pts, inside, tol: float = 1e-9):
    """Drop fiber points that repeat an earlier valid point."""
    safe = np.where(inside[..., None], pts, 0)
    dist = np.max(np.abs(safe[..., :, None, :] - safe[..., None, :, :]), axis=-1)
    k = inside.shape[-1]
    earlier = np.tril(np.ones((k, k), dtype=bool), -1)  # [c, a] with a < c
    dup = np.any((dist < tol) & earlier & inside[..., None, :], axis=-1)
    return pts, inside & ~dup


def _point_tube(F, h, region, sched):
    m = len(F)
    if m not in (1, 2):
        raise InputError("point-mode tubes support m = 1 or 2")
    for f in F:
        if f.nvars != m:
            raise InputError("point-mode generators must be polynomials in m variables")
    jac = [[F[i].diff(j) for j in range(m)] for i in range(m)]
    num = _as_numerator(h, m)

    def stage(t):
        eps = sched.radii(t, m)

        def evaluate(N):
            theta = 2 * np.pi * np.arange(N) / N
            grids = np.meshgrid(*([theta] * m), indexing="ij")
            w = np.stack([eps[k] * np.exp(1j * grids[k]) for k in range(m)], axis=-1)
            pts, inside = _point_fiber(F, w, region)
            counts = inside.sum(axis=-1)
            if counts.min() != counts.max() or counts.max() == 0:
                raise GeometryError(
                    f"tube is not compact in the region: fiber sizes range over [{counts.min()}, {counts.max()}]")
            safe = np.where(inside[..., None], pts, region.p)
            if m == 1:
                det = jac[0][0](safe)
            else:
                det = jac[0][0](safe) * jac[1][1](safe) - jac[0][1](safe) * jac[1][0](safe)
            vals = np.where(inside, np.asarray(num(safe), dtype=complex) / np.where(inside, det, 1), 0)
            return complex(np.mean(vals.sum(axis=-1)))

        return refine_quadrature(evaluate, 32, sched.tol, 512 if m == 2 else 4096)[0]

    return _run_schedule(stage, sched)


def _choose_fiber_var(F: Poly, u: np.ndarray) -> int:
    g = [np.min(np.abs(F.diff(k)(u))) for k in range(2)]
    return int(np.argmax(g))


def _curve_tube(V: VarietySpec, numerator, cycle: Cycle, sched: AdmissibleSchedule, N_theta0=16):
    if V.m != 1 or V.n != 2 or V.param is None:
        raise InputError("curve-mode tubes need a parametrised plane curve (n = 2, m = 1)")
    F = V.affine_generators()[0]
    num = _as_numerator(numerator, 2)
    s = cycle.quad_nodes
    u_curve = V.param.u(s)
    du = V.param.du(s)
    f = _choose_fiber_var(F, u_curve)
    b = 1 - f
    if np.min(np.abs(F.diff(f)(u_curve))) < 1e-10 * (1 + np.max(np.abs(u_curve))):
        raise SingularPointError("the contour meets a singular point of the curve")
    sgn = 1 if f < b else -1

    def stage(eps):
        def evaluate(N):
            theta = 2 * np.pi * np.arange(N) / N
            w = eps * np.exp(1j * theta)[:, None]
            base = np.broadcast_to(u_curve, (N,) + u_curve.shape).copy()
            coeffs = F.univariate_coeffs(f, base)
            coeffs[..., 0] -= w
            roots = batched_roots(coeffs)
            dist = np.abs(roots - u_curve[None, :, f, None])
            order = np.argsort(dist, axis=-1)
            near = np.take_along_axis(roots, order[..., :1], axis=-1)[..., 0]
            if roots.shape[-1] > 1:
                d1 = np.take_along_axis(dist, order[..., :1], axis=-1)[..., 0]
                d2 = np.take_along_axis(dist, order[..., 1:2], axis=-1)[..., 0]
                if np.any(d1 >= 0.5 * d2):
                    raise GeometryError("tube fiber is not separated from other sheets; decrease eps")
            pts = base
            pts[..., f] = near
            Ff = F.diff(f)(pts)
            vals = sgn * 1j * np.asarray(num(pts), dtype=complex) * du[None, :, b] / Ff
            # (2 pi i)^-1 * integral dtheta ds: mean over theta, divided by i
            return complex(np.sum(vals.mean(axis=0) * cycle.weights) / 1j)

        return refine_quadrature(evaluate, N_theta0, sched.tol, 1024)[0]

    return _run_schedule(stage, sched)


def tube_integral(V, numerator, region, sched: AdmissibleSchedule | None = None) -> complex:
    """``lim (2 pi i)^-m * integral over {|F_k| = eps_k} of numerator / prod F_k``.

    Point mode: ``V`` is a sequence of ``m`` polynomials in ``m`` variables,
    ``region`` a :class:`PolydiscRegion` isolating one common zero, and the
    numerator multiplies ``dz_1 ^ ... ^ dz_m``.

    Curve mode: ``V`` is a parametrised plane curve, ``region`` a
    :class:`Cycle` in its parameter plane, and the numerator is the affine
    coefficient ``phi(u) * h(u)`` of ``du_1 ^ du_2``; the tube over the contour
    then equals ``contour integral of J h ds``, i.e. ``2 pi i`` times
    :func:`residue_pairing`.
    """
    sched = sched or AdmissibleSchedule()
    if isinstance(region, Cycle):
        return _curve_tube(V, numerator, region, sched)
    if not isinstance(region, PolydiscRegion):
        raise InputError("region must be a PolydiscRegion or a Cycle")
    F = V.affine_generators() if isinstance(V, VarietySpec) else list(V)
    return _point_tube(F, numerator, region, sched)


# ---------------------------------------------------------------------------
# exact point residues


def _inverse_series(c: np.ndarray, order: int) -> np.ndarray:
    """First ``order`` coefficients of ``1 / sum c_k x^k`` (``c_0 != 0``)."""
    out = np.zeros(order, dtype=complex)
    c = np.concatenate([c, np.zeros(max(0, order - len(c)), dtype=complex)])
    out[0] = 1 / c[0]
    for k in range(1, order):
        out[k] = -np.dot(c[1: k + 1], out[k - 1:: -1][:k]) / c[0]
    return out


def _valuation(c: np.ndarray, tol=1e-13) -> int:
    scale = np.max(np.abs(c)) if c.size else 0.0
    nz = np.flatnonzero(np.abs(c) > tol * max(scale, 1e-300))
    if nz.size == 0:
        raise InputError("the zero is not isolated")
    return int(nz[0])


def _mul_trunc(A, B, shape):
    out = convolve2d(A, B)
    res = np.zeros(shape, dtype=complex)
    sx, sy = min(shape[0], out.shape[0]), min(shape[1], out.shape[1])
    res[:sx, :sy] = out[:sx, :sy]
    return res


def grothendieck_residue(F: Sequence[Poly], h, p=None) -> complex:
    """Exact ``(2 pi i)^-m`` normalised residue of ``h dz / (F_1 ... F_m)`` at ``p``.

    Supported shapes: m = 1, and m = 2 with one generator depending on a
    single variable (triangular substitution).
    """
    F = list(F)
    m = len(F)
    if m not in (1, 2):
        raise UnsupportedBasisError("only m = 1 and m = 2 are supported")
    p = np.zeros(m) if p is None else np.asarray(p, dtype=complex)
    if isinstance(h, (int, float, complex)):
        h = Poly.const(h, m)
    if not isinstance(h, Poly):
        raise UnsupportedBasisError("the algebraic oracle needs a polynomial numerator")
    Fs = [f.shift(p) for f in F]
    hs = h.shift(p)

    if m == 1:
        f = Fs[0].dense()[:]
        a = _valuation(f)
        U = f[a:]
        inv = _inverse_series(U, a)
        hc = hs.dense((a,))
        return complex(sum(hc[j] * inv[a - 1 - j] for j in range(a)))

    outer = [k for k in range(2) if _univariate_in(Fs[k]) is not None]
    if not outer:
        raise UnsupportedBasisError("no generator depends on a single variable")
    ko = outer[-1]
    ki = 1 - ko
    vo = _univariate_in(Fs[ko])
    vi = 1 - vo

    # arrays indexed [x-power, t-power] with x = z_vi, t = z_vo
    def arr(P: Poly, shape):
        d = P.dense(tuple(max(P.degree_in(k) + 1, 1) for k in range(2)))
        d = d if vi == 0 else d.T
        out = np.zeros(shape, dtype=complex)
        sx, sy = min(shape[0], d.shape[0]), min(shape[1], d.shape[1])
        out[:sx, :sy] = d[:sx, :sy]
        return out

    fo = arr(Fs[ko], (1, Fs[ko].degree_in(vo) + 1))[0]
    b = _valuation(fo)
    V = fo[b:]
    Fi = arr(Fs[ki], (Fs[ki].degree_in(vi) + 1, Fs[ki].degree_in(vo) + 1))
    fi0 = Fi[:, 0]
    a = _valuation(fi0)
    U = fi0[a:]
    G = Fi[:, 1:]  # (F_i(x, t) - F_i(x, 0)) / t
    if G.shape[1] == 0:
        G = np.zeros((Fi.shape[0], 1), dtype=complex)

    I = np.zeros(b, dtype=complex)
    for k in range(b):
        X, T = a * (k + 1), b - k
        shape = (X, T)
        term = arr(hs, shape)
        negG = -G
        for _ in range(k):
            term = _mul_trunc(term, negG, shape)
        invU = _inverse_series(U, X)
        invUk = np.zeros(X, dtype=complex)
        invUk[0] = 1
        for _ in range(k + 1):
            invUk = np.convolve(invUk, invU)[:X]
        term = _mul_trunc(term, invUk[:, None], shape)
        I[k:] += term[X - 1, : b - k]
    invV = _inverse_series(V, b)
    val = sum(I[j] * invV[b - 1 - j] for j in range(b))
    return complex(val * _perm_sign((vi, vo)) * _perm_sign((ki, ko)))


# ---------------------------------------------------------------------------
# fibered residues and Leray densities


def fibered_residue(V: VarietySpec, numerator, base_cycle: Cycle, base_var: int | None = None) -> complex:
    """``(2 pi i)^-1 * integral over the base of sum over fiber of num / F_f d u_b``.

    With a parametrised ``V`` the cycle lives in the parameter plane and the
    fiber point is the sheet through the curve; otherwise the cycle lives in
    the base coordinate ``u_{base_var}`` and every fiber root is summed.
    """
    if V.m != 1 or V.n != 2:
        raise InputError("fibered residues are implemented for plane curves")
    F = V.affine_generators()[0]
    num = _as_numerator(numerator, 2)
    s = base_cycle.quad_nodes
    if V.param is not None:
        u_curve = V.param.u(s)
        f = _choose_fiber_var(F, u_curve) if base_var is None else 1 - base_var
        b = 1 - f
        ub = u_curve[:, b]
        dub = V.param.du(s)[:, b]
    else:
        b = 1 if base_var is None else base_var
        f = 1 - b
        ub = s
        dub = np.ones_like(s)
    base = np.zeros((len(s), 2), dtype=complex)
    base[:, b] = ub
    coeffs = F.univariate_coeffs(f, base)
    roots = batched_roots(coeffs)
    if roots.shape[-1] == 0:
        raise GeometryError("the projection has empty fibers")
    if roots.shape[-1] > 1:
        gaps = np.abs(roots[:, :, None] - roots[:, None, :])
        gaps[:, np.arange(roots.shape[1]), np.arange(roots.shape[1])] = np.inf
        if np.min(gaps) < 1e-8 * (1 + np.max(np.abs(roots[np.isfinite(roots)]))):
            raise BranchPointError("a branch point of the projection lies on the base cycle")
    if V.param is not None:
        pick = np.argmin(np.abs(roots - u_curve[:, f, None]), axis=-1)
        roots = np.take_along_axis(roots, pick[:, None], axis=-1)
    pts = np.repeat(base[:, None, :], roots.shape[-1], axis=1)
    pts[..., f] = roots
    Ff = F.diff(f)(pts)
    if np.min(np.abs(Ff)) < 1e-10:
        raise BranchPointError("the fiber degenerates on the base cycle")
    sgn = 1 if f < b else -1
    dens = sgn * np.sum(np.asarray(num(pts), dtype=complex) / Ff, axis=-1) * dub
    return complex(base_cycle.integrate(dens) / (2j * np.pi))


def leray_residue_density(V: VarietySpec, phi: ResidualFormSpec, cycle: Cycle | None = None) -> ResidualFormSpec:
    """Pull ``phi du_1 ^ du_2 / dF`` back to the curve chart.

    ``du_1 ^ du_2 = dF ^ sigma`` with ``sigma = -du_1 / F_{u2}`` (or
    ``du_2 / F_{u1}``), giving ``J = -phi u_1' / F_{u2} = phi u_2' / F_{u1}``.
    """
    if phi.mode == "leray":
        return phi
    if V.m != 1 or V.n != 2 or V.param is None:
        raise InputError("Leray densities need a parametrised plane curve")
    F = V.affine_generators()[0]
    F1, F2 = F.diff(0), F.diff(1)
    param = V.param
    if cycle is not None:
        u = param.u(cycle.quad_nodes)
        g = np.hypot(np.abs(F1(u)), np.abs(F2(u)))
        if np.min(g) < 1e-10 * (1 + np.max(np.abs(u))):
            raise SingularPointError("the contour passes through a singular point of the curve")

    def J(s):
        s = np.asarray(s, dtype=complex)
        u, du = param.u(s), param.du(s)
        a, b = F2(u), F1(u)
        use_b = np.abs(b) > np.abs(a)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(use_b, du[..., 1] / np.where(use_b, b, 1), -du[..., 0] / np.where(use_b, 1, a))
        return np.asarray(phi.func(u), dtype=complex) * val

    return ResidualFormSpec("leray", J, phi.weight if phi.weight is not None else V.weight, phi.expr)


def _eval_on_curve(h, z):
    if h is None:
        return np.ones(z.shape[:-1], dtype=complex)
    if isinstance(h, (int, float, complex)):
        return np.full(z.shape[:-1], complex(h))
    return np.asarray(h(z), dtype=complex)


def residue_pairing(V: VarietySpec, phi: ResidualFormSpec, h, cycle: Cycle, tol: float = 1e-13,
                    refine: bool = True) -> complex:
    """``mu^phi(h) = (2 pi i)^-1 * contour integral of h(z(s)) J(s) ds``.

    ``h`` acts on the chart representative ``z(s)`` (shape ``(..., n + 1)``).
    Circular cycles are refined until the trapezoid sum settles.
    """
    if V.param is None:
        raise InputError("residue pairing on the contour needs a parametrised curve")
    form = leray_residue_density(V, phi, cycle)

    def evaluate(c: Cycle):
        s = c.quad_nodes
        J = np.asarray(form.func(s), dtype=complex)
        if not np.all(np.isfinite(J)):
            raise InputError("the Leray density has a pole on the contour")
        vals = _eval_on_curve(h, V.param.z(s))
        if not np.all(np.isfinite(vals)):
            raise InputError("the numerator has a pole on the contour")
        return complex(c.integrate(vals * J) / (2j * np.pi))

    val = evaluate(cycle)
    if not refine or cycle.radius is None:
        return val
    M = cycle.M
    history = [val]
    while M < 2**15:
        M *= 2
        nxt = evaluate(cycle.refined(M))
        history.append(nxt)
        if abs(nxt - val) <= tol * max(1.0, abs(nxt)):
            return nxt
        val = nxt
    raise NotStabilizedError("contour quadrature did not settle", history)


def transformation_law_check(P: Sequence[Poly], A, h, region: PolydiscRegion,
                             sched: AdmissibleSchedule | None = None, with_det: bool = True) -> dict:
    """Compare ``res_P(h)`` with ``res_{A P}(det A * h)``.

    The left side uses the algebraic oracle when it applies (tube otherwise),
    the right side always uses tube quadrature.
    """
    P = list(P)
    m = len(P)
    A = [[a if isinstance(a, Poly) else Poly.const(a, m) for a in row] for row in A]
    if len(A) != m or any(len(row) != m for row in A):
        raise InputError("transition matrix must be m x m")
    if m == 1:
        det = A[0][0]
    elif m == 2:
        det = A[0][0] * A[1][1] - A[0][1] * A[1][0]
    else:
        raise InputError("m <= 2 only")
    # det A must not vanish on the region
    th = 2 * np.pi * np.arange(24) / 24
    axis = [np.concatenate([region.p[k] + r * np.exp(1j * th) for r in (0.0, 0.5 * region.radius, region.radius)])
            for k in range(m)]
    probe = np.array(list(itertools.product(*axis)))
    if np.min(np.abs(det(probe))) < 1e-10:
        raise InputError("det A vanishes on the region")
    F = [sum((A[i][j] * P[j] for j in range(m)), Poly.zero(m)) for i in range(m)]
    hp = h if isinstance(h, Poly) else Poly.const(h, m)
    try:
        lhs = grothendieck_residue(P, hp, region.p)
    except UnsupportedBasisError:
        lhs = tube_integral(P, hp, region, sched)
    rhs = tube_integral(F, det * hp if with_det else hp, region, sched)
    disc = abs(lhs - rhs) / max(abs(lhs), 1e-300)
    return {"lhs": lhs, "rhs": rhs, "discrepancy": disc, "F": F, "det": det}


def check_transition(F_alpha: Sequence[Poly], F_beta: Sequence[Poly], A, samples) -> float:
    """Max relative residual of ``F_alpha = A F_beta`` on overlap sample points."""
    samples = np.asarray(samples, dtype=complex)
    fa = np.stack([f(samples) for f in F_alpha], axis=-1)
    fb = np.stack([f(samples) for f in F_beta], axis=-1)
    Am = np.stack([np.stack([np.broadcast_to(a(samples) if isinstance(a, Poly) else a, samples.shape[:-1])
                             for a in row], axis=-1) for row in A], axis=-2)
    lhs = np.einsum("...ij,...j->...i", Am, fb)
    return float(np.max(np.abs(fa - lhs)) / max(np.max(np.abs(fa)), 1e-300))
