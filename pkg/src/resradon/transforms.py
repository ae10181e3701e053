"""Radon and Fantappie transforms, Martineau inversion and PDE verification.

Radon outputs are computed from the Leray density on a boundary contour
``|s| = rho_delta``: for a class ``J(s) ds`` on a parametrised curve,

    f_j(xi) = (2 pi i)^-1 * contour integral of z_j(s) J(s) / <xi . z(s)> ds,

with the contour oriented as the boundary of the part of the curve outside
``G_delta``.  The functional ``h -> (2 pi i)^2 * (2 pi i)^-1 * contour
integral of h J ds`` has this 1-form as its Fantappie transform, up to the
factor ``(2 pi i)^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    GeometryError,
    InputError,
    NearIncidenceError,
    NotHomogeneous,
    NotStabilizedError,
)
from .geometry import Cycle, DomainSpec, Location, boundary_cycle, contains, dual_contains, dual_margin, exhaust
from .polyalg import DiscStencil, HomPoly, Poly, cauchy_derivatives, default_radius, homogeneity_of
from .residues import (
    AdmissibleSchedule,
    ResidualFormSpec,
    VarietySpec,
    leray_residue_density,
    residue_pairing,
    tube_integral,
)

TWO_PI_I = 2j * np.pi


@dataclass(frozen=True)
class Covector1Form:
    """``sum_j f_j d xi_j`` at the point ``xi``."""

    xi: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=complex))
        object.__setattr__(self, "f", np.asarray(self.f, dtype=complex))
        if self.xi.shape != self.f.shape:
            raise InputError("base point and components must have the same length")

    def norm(self) -> float:
        return float(np.linalg.norm(self.f))


def euler_contraction(f: Covector1Form) -> complex:
    """``sum_j xi_j f_j``; equals ``mu(1)`` when ``f`` is a Fantappie transform."""
    return complex(np.dot(f.xi, f.f))


def _exhausted(dom: DomainSpec, delta: float) -> DomainSpec:
    return exhaust(dom, delta) if delta > 0 else dom


def _require_dual(dom: DomainSpec, xi, what="xi"):
    xi = np.asarray(xi, dtype=complex)
    if xi.shape != (dom.n + 1,):
        raise InputError(f"{what} must have {dom.n + 1} components")
    if not dual_contains(dom, xi):
        raise InputError(f"{what} = {xi} is not in the dual domain (|xi_0| <= {dom.radius} |xi'|)")
    return xi


# ---------------------------------------------------------------------------
# Radon transform via boundary contours


@dataclass
class RadonSetup:
    """Contour data shared by all evaluations for one (curve, class, delta)."""

    V: VarietySpec
    form: ResidualFormSpec
    dom: DomainSpec
    delta: float
    cycle: Cycle

    @classmethod
    def build(cls, V: VarietySpec, phi: ResidualFormSpec, dom: DomainSpec, delta: float = 0.0, M: int = 256):
        if V.param is None or V.m != 1:
            raise InputError("the Radon pipeline needs a parametrised curve")
        if dom.n != V.n:
            raise InputError("domain and variety live in different dimensions")
        cycle = boundary_cycle(dom, V.param, delta, M)
        form = leray_residue_density(V, phi, cycle)
        form.check_decay()
        return cls(V, form, dom, delta, cycle)

    def nodes(self, M: int):
        c = self.cycle.refined(M)
        s = c.quad_nodes
        return s, self.V.param.z(s), np.asarray(self.form.func(s), dtype=complex) * c.weights

    def kernel_roots(self, xi) -> np.ndarray:
        c = self.V.param.pairing_coeffs(xi)
        nz = np.flatnonzero(np.abs(c) > 1e-14 * np.max(np.abs(c)))
        c = c[: nz[-1] + 1]
        return np.roots(c[::-1]) if len(c) > 1 else np.empty(0, dtype=complex)

    def check_incidence(self, xi, dist_tol: float = 1e-6, disc_tol: float = 1e-10) -> None:
        roots = self.kernel_roots(xi)
        rho = self.cycle.radius
        near = np.abs(np.abs(roots - self.cycle.center) - rho)
        if roots.size and np.min(near) < dist_tol:
            raise NearIncidenceError(f"hyperplane meets the curve within {np.min(near):.2e} of the contour")
        for a in range(roots.size):
            for b in range(a + 1, roots.size):
                sep = abs(roots[a] - roots[b]) ** 2 / (1 + abs(roots[a])) ** 2
                if sep < disc_tol:
                    raise NearIncidenceError("hyperplane section of the curve is degenerate (repeated intersection)")


def _radon_batch(setup: RadonSetup, xi, M: int) -> np.ndarray:
    _, z, Jw = setup.nodes(M)
    xi = np.asarray(xi, dtype=complex)
    q = xi @ z.T  # (..., M)
    return np.einsum("...m,mj->...j", Jw / q, z) / TWO_PI_I


def radon_components(setup: RadonSetup, xi, M: int | None = None, tol: float = 1e-13) -> np.ndarray:
    """Vectorised ``f(xi)`` for ``xi[..., n+1]`` (no incidence screening)."""
    M = M or setup.cycle.M
    prev = _radon_batch(setup, xi, M)
    for _ in range(7):
        M *= 2
        cur = _radon_batch(setup, xi, M)
        if np.max(np.abs(cur - prev)) <= tol * max(1.0, np.max(np.abs(cur))):
            return cur
        prev = cur
    raise NotStabilizedError("Radon contour quadrature did not settle", [prev, cur])


def radon_transform(V: VarietySpec, phi: ResidualFormSpec, dom: DomainSpec, delta: float, xi,
                    M: int = 256) -> Covector1Form:
    """The 1-form ``R_V[phi](xi)`` from the boundary contour at level ``r + delta``."""
    xi = _require_dual(_exhausted(dom, delta), xi)
    setup = RadonSetup.build(V, phi, dom, delta, M)
    setup.check_incidence(xi)
    return Covector1Form(xi, radon_components(setup, xi))


def radon_potential_batch(setup: RadonSetup, xi, M: int | None = None) -> np.ndarray:
    """``g(xi) = (2 pi i)^-1 * contour integral of Log(<xi . z> / (xi_0 z_0)) J ds``.

    ``dg`` is the Radon transform whenever ``mu(1) = 0``; the principal
    branch is valid on the dual of the exhausted domain.
    """
    M = M or 2 * setup.cycle.M
    _, z, Jw = setup.nodes(M)
    xi = np.asarray(xi, dtype=complex)
    ratio = (xi @ z.T) / (xi[..., :1] * z[:, 0])
    return np.log(ratio) @ Jw / TWO_PI_I


# ---------------------------------------------------------------------------
# analytic functionals


class PointMass:
    """``h -> h(z*)`` for a point ``z*`` of the compact ``G``."""

    def __init__(self, z_star, dom: DomainSpec):
        z = np.asarray(z_star, dtype=complex)
        if contains(dom, z) is not Location.IN_G:
            raise InputError("point masses must sit inside G")
        self.z, self.dom = z, dom

    def __call__(self, h):
        return complex(np.asarray(h(self.z[None, :]))[0])

    def log_kernel(self, xi) -> complex:
        q = complex(np.dot(xi, self.z))
        if q.real <= 0:
            raise InputError("principal logarithm of <xi . z*> is not certified (Re <= 0)")
        return complex(np.log(q))


class BoundaryResidue:
    """``mu^phi(h) = (2 pi i)^(m+1) * residue_pairing(V, phi, h, cycle_delta)``.

    ``method="tube"`` evaluates the pairing through curve-mode tube
    quadrature of an affine extension of the class; ``"leray"`` through the
    contour density directly.
    """

    def __init__(self, V: VarietySpec, phi: ResidualFormSpec, dom: DomainSpec, delta: float = 0.0,
                 method: str = "tube", M: int = 256, sched: AdmissibleSchedule | None = None):
        if method not in ("tube", "leray"):
            raise InputError(f"unknown method {method!r}")
        self.V, self.phi, self.dom, self.delta, self.method = V, phi, dom, delta, method
        self.cycle = boundary_cycle(dom, V.param, delta, M)
        self.sched = sched or AdmissibleSchedule(eps0=1e-3, tol=1e-12)
        self.prefactor = TWO_PI_I ** (V.m + 1)
        if method == "tube":
            self._affine = affine_extension(V, phi)

    @property
    def domain(self) -> DomainSpec:
        return _exhausted(self.dom, self.delta)

    def __call__(self, h):
        if self.method == "leray":
            return self.prefactor * residue_pairing(self.V, self.phi, h, self.cycle)

        def numerator(u):
            z = np.concatenate([np.ones(u.shape[:-1] + (1,), dtype=complex), u], axis=-1)
            return self._affine(u) * np.asarray(h(z), dtype=complex)

        return self.prefactor * tube_integral(self.V, numerator, self.cycle, self.sched) / TWO_PI_I


def affine_extension(V: VarietySpec, phi: ResidualFormSpec) -> Callable:
    """An affine coefficient ``phi(u)`` whose Leray density is the given class.

    Leray-mode classes are extended off the curve through the rational
    inverse ``s(u)`` of the parametrisation.
    """
    if phi.mode == "affine":
        return phi.func
    s_of_u = V.param.s_from_u()
    if s_of_u is None:
        raise InputError("no rational inverse of the parametrisation; cannot extend the class")
    F = V.affine_generators()[0]
    F1 = F.diff(0)
    param = V.param

    def coeff(u):
        s = s_of_u(u)
        return np.asarray(phi.func(s), dtype=complex) * F1(u) / param.du(s)[..., 1]

    return coeff


class Martineau:
    """The functional ``mu^g(h) = integral over |u| = r + nu of h * Omega_g``.

    ``Omega_g = -(2 pi i)^-n d^n g / d xi_0^n (eta) * omega'(eta) ^ du`` with
    ``omega'(eta) = sum_j (-1)^j eta_j d eta_1 ^ .. (omit j) .. ^ d eta_n``.
    The sphere is oriented as the boundary of the ball.
    """

    def __init__(self, g: Callable, dom: DomainSpec, nu: float = 0.25, grid: int = 48,
                 d0n: Callable | None = None, refine: bool = True, tol: float = 1e-6):
        if dom.n not in (1, 2):
            raise InputError("Martineau quadrature is implemented for n <= 2")
        if not nu > 0:
            raise InputError("sphere offset nu must be positive")
        self.g, self.dom, self.nu, self.grid = g, dom, nu, int(grid)
        self.d0n, self.refine, self.tol = d0n, refine, tol
        self.R = dom.radius + nu
        self._check_homogeneity()
        self._cache: dict = {}

    @property
    def domain(self) -> DomainSpec:
        return exhaust(self.dom, self.nu)

    def _check_homogeneity(self):
        rng = np.random.default_rng(7)
        n = self.dom.n
        probes = np.zeros((6, n + 1), dtype=complex)
        probes[:, 0] = 1
        d = rng.normal(size=(6, n)) + 1j * rng.normal(size=(6, n))
        probes[:, 1:] = 0.5 * d / (np.linalg.norm(d, axis=1, keepdims=True) * self.dom.radius)
        vals = np.asarray(self.g(probes), dtype=complex)
        if np.max(np.abs(vals)) == 0:
            return
        try:
            w = homogeneity_of(self.g, probes)
        except NotHomogeneous as exc:
            raise InputError(f"g is not homogeneous: {exc}") from None
        if w != 0:
            raise InputError(f"g must have homogeneity 0, found {w}")

    # -- kernel ---------------------------------------------------------
    def _d0n(self, eta: np.ndarray) -> np.ndarray:
        n = self.dom.n
        if self.d0n is not None:
            return np.asarray(self.d0n(eta), dtype=complex)
        # batched Cauchy derivative in the xi_0 direction; use homogeneity -n
        norm = np.linalg.norm(eta, axis=-1, keepdims=True)
        e = eta / norm
        margin = dual_margin(self.dom, e)
        rad = np.minimum(0.5 * margin, 0.1)[..., None]
        N = 16
        roots = np.exp(2j * np.pi * np.arange(N) / N)
        pts = np.repeat(e[..., None, :], N, axis=-2)
        pts[..., 0] = pts[..., 0] + rad * roots
        samples = np.asarray(self.g(pts), dtype=complex)
        coef = np.fft.fft(samples, axis=-1)[..., n] / N
        return coef * math.factorial(n) / rad[..., 0] ** n / norm[..., 0] ** n

    def _sphere(self, K: int):
        R, n = self.R, self.dom.n
        if n == 1:
            alpha = 2 * np.pi * np.arange(K) / K
            u = (R * np.exp(1j * alpha))[:, None]
            du = 1j * u[:, 0]
            eta = np.stack([-np.abs(u[:, 0]) ** 2, np.conj(u[:, 0])], axis=-1)
            # in one variable the circle is traversed clockwise so that F[mu^g] = dg
            form = eta[:, 1] * du
            return u, form * (2 * np.pi / K), eta
        x, wx = np.polynomial.legendre.leggauss(K)
        chi = (x + 1) * np.pi / 4
        wchi = wx * np.pi / 4
        ang = 2 * np.pi * np.arange(K) / K
        C, A, B = np.meshgrid(chi, ang, ang, indexing="ij")
        W = np.broadcast_to(wchi[:, None, None], C.shape) * (2 * np.pi / K) ** 2
        u1 = R * np.cos(C) * np.exp(1j * A)
        u2 = R * np.sin(C) * np.exp(1j * B)
        zero = np.zeros_like(u1)
        # tangent vectors d/dchi, d/dalpha, d/dbeta as (du1, du2) values
        T = [(-R * np.sin(C) * np.exp(1j * A), R * np.cos(C) * np.exp(1j * B)),
             (1j * u1, zero),
             (zero, 1j * u2)]

        def det3(f1, f2, f3):
            m = np.stack([np.stack([f(t) for f in (f1, f2, f3)], axis=-1) for t in T], axis=-2)
            return np.linalg.det(m)

        du1 = lambda t: t[0]
        du2 = lambda t: t[1]
        dbu1 = lambda t: np.conj(t[0])
        dbu2 = lambda t: np.conj(t[1])
        # omega' ^ du1 ^ du2 with eta_j = conj(u_j): conj(u2) d(bar u1) - conj(u1) d(bar u2)
        form = np.conj(u2) * det3(dbu1, du1, du2) - np.conj(u1) * det3(dbu2, du1, du2)
        u = np.stack([u1, u2], axis=-1)
        eta = np.concatenate([-(np.abs(u1) ** 2 + np.abs(u2) ** 2)[..., None], np.conj(u)], axis=-1)
        return u.reshape(-1, 2), (self._orientation() * form * W).reshape(-1), eta.reshape(-1, 3)

    def _orientation(self) -> int:
        """Sign making (chi, alpha, beta) agree with the boundary orientation of the ball."""
        R, c, a, b = self.R, 0.6, 0.3, 1.1

        def real(v):
            return np.array([v[0].real, v[0].imag, v[1].real, v[1].imag])

        u1, u2 = R * np.cos(c) * np.exp(1j * a), R * np.sin(c) * np.exp(1j * b)
        normal = real(np.array([u1, u2]) / R)
        tch = real(np.array([-R * np.sin(c) * np.exp(1j * a), R * np.cos(c) * np.exp(1j * b)]))
        tal = real(np.array([1j * u1, 0]))
        tbe = real(np.array([0, 1j * u2]))
        return int(np.sign(np.linalg.det(np.stack([normal, tch, tal, tbe]))))

    def weights(self, K: int):
        if K not in self._cache:
            u, form, eta = self._sphere(K)
            n = self.dom.n
            w = -(TWO_PI_I ** -n) * self._d0n(eta) * form
            z = np.concatenate([np.ones((u.shape[0], 1), dtype=complex), u], axis=-1)
            self._cache[K] = (z, w)
        return self._cache[K]

    def _eval(self, h, K):
        z, w = self.weights(K)
        vals = np.asarray(h(z), dtype=complex) * w
        return complex(np.sum(vals)), float(np.sum(np.abs(vals)))

    def __call__(self, h):
        val, scale = self._eval(h, self.grid)
        if not self.refine:
            return val
        fine, scale = self._eval(h, self.grid + self.grid // 2)
        if abs(fine - val) > self.tol * max(abs(fine), scale, 1e-300):
            raise NotStabilizedError("sphere quadrature did not settle under refinement", [val, fine])
        return fine


def martineau_invert(g: Callable, dom: DomainSpec, nu: float = 0.25, grid: int = 48,
                     d0n: Callable | None = None, **kw) -> Martineau:
    """Analytic functional on ``G`` whose Fantappie transform is ``dg``."""
    return Martineau(g, dom, nu, grid, d0n, **kw)


# ---------------------------------------------------------------------------
# Fantappie transform and potentials


def _functional_domain(mu, dom):
    d = getattr(mu, "domain", None)
    return d if d is not None else dom


def fantappie_transform(mu, xi, dom: DomainSpec | None = None) -> Covector1Form:
    """``f_j(xi) = mu(z_j / <xi . z>)``."""
    dom = dom or getattr(mu, "dom", None)
    if dom is None:
        raise InputError("a domain is needed to validate xi")
    xi = _require_dual(_functional_domain(mu, dom), xi)
    if isinstance(mu, PointMass):
        q = complex(np.dot(xi, mu.z))
        assert q != 0, "kernel pole cannot occur for xi in D* and z* in G"
        return Covector1Form(xi, mu.z / q)
    f = [mu(lambda z, j=j: z[..., j] / (z @ xi)) for j in range(dom.n + 1)]
    return Covector1Form(xi, np.array(f))


def _segments(path):
    path = [np.asarray(p, dtype=complex) for p in path]
    if len(path) < 2:
        raise InputError("a path needs at least two vertices")
    return list(zip(path[:-1], path[1:]))


def fantappie_potential(mu, xi, xi_ref=None, dom: DomainSpec | None = None, path=None, nodes: int = 32,
                        g_ref: complex | None = None) -> complex:
    """``g(xi) = g(xi_ref) + integral along a path in D* of sum f_j d xi_j``.

    ``mu`` is an analytic functional or any callable returning the 1-form
    components at ``xi``.  The path defaults to the segment ``xi_ref -> xi``;
    ``path`` may list intermediate vertices.  ``g(xi_ref)`` is the principal
    ``mu(log <xi_ref . z>)`` for point masses and 0 otherwise.
    """
    dom = dom or getattr(mu, "dom", None)
    if dom is None:
        raise InputError("a domain is needed to validate the path")
    dual = _functional_domain(mu, dom)
    xi = np.asarray(xi, dtype=complex)
    if xi_ref is None:
        xi_ref = np.zeros(dom.n + 1, dtype=complex)
        xi_ref[0] = 1
    xi_ref = np.asarray(xi_ref, dtype=complex)
    verts = [xi_ref] + [np.asarray(p, dtype=complex) for p in (path or [])] + [xi]
    if callable(mu) and not isinstance(mu, (PointMass, BoundaryResidue, Martineau)):
        form = lambda p: np.asarray(mu(p), dtype=complex)
    else:
        form = lambda p: fantappie_transform(mu, p, dom).f

    x, w = np.polynomial.legendre.leggauss(nodes)
    t, w = (x + 1) / 2, w / 2
    total = 0j
    for a, b in _segments(verts):
        pts = a + t[:, None] * (b - a)
        check = np.concatenate([pts, a[None], b[None]])
        if np.any(dual_margin(dual, check) <= 0):
            raise InputError("integration path leaves the dual domain")
        vals = np.array([form(p) for p in pts])
        total += np.sum(w * (vals @ (b - a)))
    if g_ref is None:
        g_ref = mu.log_kernel(xi_ref) if isinstance(mu, PointMass) else 0j
    return complex(g_ref + total)


# ---------------------------------------------------------------------------
# PDE verification


@dataclass
class SystemReport:
    xi: np.ndarray
    residuals: list
    scales: list
    radius: float
    status: str = "ok"

    @property
    def relative(self) -> list:
        return [abs(r) / s if s > 0 else abs(r) for r, s in zip(self.residuals, self.scales)]


def verify_system(g: Callable, system: Sequence[HomPoly], points, dom: DomainSpec | None = None,
                  radius: float | None = None, N: int = 16, shrink: int = 3) -> list:
    """``P_k(d/dxi) g`` at each point by Cauchy differentiation on a polydisc.

    ``g`` is vectorised over ``xi[..., n+1]``.  When ``dom`` is given the
    stencil must stay inside its dual; the radius is halved up to ``shrink``
    times, after which the point is reported as skipped.
    """
    reports = []
    for xi in np.atleast_2d(np.asarray(points, dtype=complex)):
        rad = default_radius(xi) if radius is None else radius
        for _ in range(shrink + 1):
            nodes = DiscStencil.node_grid(xi, rad, N)
            if dom is None or np.all(dual_margin(dom, nodes) > 0):
                break
            rad /= 2
        else:
            reports.append(SystemReport(xi, [np.nan] * len(system), [np.nan] * len(system), rad, "skipped"))
            continue
        stencil = DiscStencil(xi, rad, N, np.asarray(g(nodes), dtype=complex))
        res, scales = [], []
        for P in system:
            orders = list(P.coeffs)
            ders = cauchy_derivatives(stencil, orders)
            terms = [P.coeffs[a] * d for a, d in zip(orders, ders)]
            res.append(complex(sum(terms)))
            scales.append(float(max(abs(t) for t in terms)))
        reports.append(SystemReport(xi, res, scales, rad))
    return reports
