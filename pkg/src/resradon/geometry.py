"""Ball-complement model domains, their duals, and boundary cycles on curves.

The model linearly concave domain is ``D = CP^n \\ G`` with ``G`` the closed
ball ``|u| <= r`` in the affine chart ``z_0 = 1``.  Its dual is
``D* = {|xi_0| > r |xi'|}``, and ``eta(z) = (-|u|^2, conj(u))`` is the
tangent-hyperplane family witnessing linear concavity.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .errors import EmptyCycleError, InputError, UnsupportedGeometryError


class Location(enum.Enum):
    IN_D = "in D"
    IN_G = "in G"
    ON_BG = "on bG"


@dataclass(frozen=True)
class DomainSpec:
    n: int
    radius: float
    delta: float = 0.0
    kind: str = "ball_complement"

    def __post_init__(self):
        if self.kind != "ball_complement":
            raise InputError(f"unsupported domain kind {self.kind!r}")
        if self.n < 1:
            raise InputError("ambient dimension must be >= 1")
        if not self.radius > 0:
            raise InputError("ball radius must be positive")
        if self.delta < 0:
            raise InputError("exhaustion parameter must be non-negative")


def _point(z, n):
    z = np.asarray(z, dtype=complex)
    if z.shape != (n + 1,):
        raise InputError(f"expected {n + 1} homogeneous coordinates, got shape {z.shape}")
    if not np.any(z):
        raise InputError("the zero vector is not a projective point")
    return z


def contains(dom: DomainSpec, z) -> Location:
    z = _point(z, dom.n)
    if z[0] == 0:
        return Location.IN_D
    rad = np.linalg.norm(z[1:] / z[0])
    if abs(rad - dom.radius) <= 1e-14 * dom.radius:
        return Location.ON_BG
    return Location.IN_G if rad < dom.radius else Location.IN_D


def dual_contains(dom: DomainSpec, xi) -> bool:
    """True iff the hyperplane ``<xi . z> = 0`` misses ``G``."""
    xi = _point(xi, dom.n)
    return bool(abs(xi[0]) > dom.radius * np.linalg.norm(xi[1:]))


def dual_margin(dom: DomainSpec, xi) -> np.ndarray:
    """``|xi_0| - r |xi'|`` vectorised over leading axes; positive inside ``D*``."""
    xi = np.asarray(xi, dtype=complex)
    return np.abs(xi[..., 0]) - dom.radius * np.linalg.norm(xi[..., 1:], axis=-1)


def eta_map(dom: DomainSpec, z) -> np.ndarray:
    """Hyperplane through ``z`` contained in ``D``.

    For affine points this is ``(-|u|^2, conj(u))``; at infinity the
    projective limit ``(-1, 0, ..., 0)`` (the line at infinity) is returned.
    """
    where = contains(dom, z)
    if where is not Location.IN_D:
        raise InputError(f"eta is only defined on D; point is {where.value}")
    z = np.asarray(z, dtype=complex)
    if z[0] == 0:
        out = np.zeros(dom.n + 1, dtype=complex)
        out[0] = -1
        return out
    u = z[1:] / z[0]
    return np.concatenate([[-np.vdot(u, u).real], np.conj(u)]).astype(complex)


def exhaust(dom: DomainSpec, delta: float) -> DomainSpec:
    """``D_delta``: complement of the ball of radius ``r + delta``."""
    if not delta > 0:
        raise InputError("exhaustion parameter must be positive")
    return DomainSpec(dom.n, dom.radius + delta, 0.0, dom.kind)


# ---------------------------------------------------------------------------
# parametrised curves


@dataclass(frozen=True)
class CurveParam:
    """Polynomial parametrisation ``s -> z(s)`` of a curve in CP^n.

    ``coords[j]`` holds the ascending coefficients of ``z_j(s)``.  ``s_max``
    restricts the parameter to ``|s| <= s_max`` (infinite by default).
    """

    coords: tuple
    s_max: float = np.inf
    powers: tuple | None = field(default=None, compare=False)

    @classmethod
    def monomial_curve(cls, powers, s_max=np.inf):
        powers = tuple(int(p) for p in powers)
        if powers[0] != 0:
            raise InputError("monomial curves must have z_0 = 1 (first power 0)")
        coords = []
        for p in powers:
            c = np.zeros(p + 1, dtype=complex)
            c[p] = 1
            coords.append(c)
        return cls(tuple(coords), s_max, powers)

    @property
    def n(self) -> int:
        return len(self.coords) - 1

    def z(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        return np.stack([np.polynomial.polynomial.polyval(s, c) for c in self.coords], axis=-1)

    def dz(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        return np.stack(
            [np.polynomial.polynomial.polyval(s, np.polynomial.polynomial.polyder(c)) if len(c) > 1
             else np.zeros_like(s) for c in self.coords],
            axis=-1,
        )

    def u(self, s) -> np.ndarray:
        z = self.z(s)
        return z[..., 1:] / z[..., :1]

    def du(self, s) -> np.ndarray:
        z, dz = self.z(s), self.dz(s)
        return (dz[..., 1:] * z[..., :1] - z[..., 1:] * dz[..., :1]) / z[..., :1] ** 2

    def pairing_coeffs(self, xi) -> np.ndarray:
        """Ascending coefficients of ``s -> <xi . z(s)>``."""
        xi = np.asarray(xi, dtype=complex)
        deg = max(len(c) for c in self.coords)
        out = np.zeros(deg, dtype=complex)
        for x, c in zip(xi, self.coords):
            out[: len(c)] += x * c
        return out

    def s_from_u(self):
        """Rational inverse ``u -> s`` on the curve, when one is available.

        Monomial curves ``(1, s^a, s^(a+1))`` give ``s = u_2 / u_1``.
        """
        p = self.powers
        if p is not None and len(p) == 3 and p[2] - p[1] == 1 and p[1] >= 1:
            return lambda u: u[..., 1] / u[..., 0]
        return None


@dataclass(frozen=True)
class Cycle:
    """Closed contour in the parameter plane, discretised for the periodic trapezoid rule.

    ``nodes`` has ``M + 1`` entries with ``nodes[-1] == nodes[0]``;
    ``weights[i]`` is the ``ds`` element at ``nodes[i]``.  ``orientation`` is
    ``-1`` for clockwise traversal (the boundary of the exterior region).
    """

    nodes: np.ndarray
    weights: np.ndarray
    orientation: int
    center: complex = 0j
    radius: float | None = None
    closed: bool = True

    @classmethod
    def circle(cls, center, radius, M, orientation=-1):
        if M < 8:
            raise InputError("a cycle needs at least 8 nodes")
        if orientation not in (1, -1):
            raise InputError("orientation must be +1 or -1")
        theta = 2 * np.pi * np.arange(M) / M
        pts = center + radius * np.exp(1j * orientation * theta)
        w = 1j * orientation * (pts - center) * (2 * np.pi / M)
        nodes = np.append(pts, pts[0])
        return cls(nodes, w, orientation, complex(center), float(radius))

    @property
    def M(self) -> int:
        return len(self.weights)

    @property
    def quad_nodes(self) -> np.ndarray:
        return self.nodes[:-1]

    def integrate(self, values) -> np.ndarray:
        """``sum_i values[..., i] * ds_i`` with a fixed summation order."""
        return np.sum(np.asarray(values) * self.weights, axis=-1)

    def winding(self) -> float:
        """Signed total argument change of ``node - center``."""
        d = np.angle((self.nodes[1:] - self.center) / (self.nodes[:-1] - self.center))
        return float(np.sum(d))

    def refined(self, M: int) -> "Cycle":
        if self.radius is None:
            raise InputError("only circular cycles can be refined")
        return Cycle.circle(self.center, self.radius, M, self.orientation)


def _radial_profile(param: CurveParam, rho):
    return np.linalg.norm(param.u(rho), axis=-1)


def boundary_cycle(dom: DomainSpec, param: CurveParam, delta: float | None = None, M: int = 256) -> Cycle:
    """The curve's trace of ``bD_delta`` as a circle ``|s| = rho_delta``.

    Oriented as the boundary of ``V cap D_delta``, i.e. of the exterior
    region in the ``s``-plane (clockwise).
    """
    if M < 64:
        raise InputError("boundary cycles need M >= 64")
    delta = dom.delta if delta is None else delta
    target = dom.radius + delta

    # level sets must be circles: |u(s)| may only depend on |s|
    ring = np.exp(2j * np.pi * np.arange(16) / 16)
    for rad in (0.3, 0.9, 1.7):
        if np.isfinite(param.s_max) and rad > param.s_max:
            continue
        prof = _radial_profile(param, rad * ring)
        if np.ptp(prof) > 1e-12 * max(np.mean(prof), 1.0):
            raise UnsupportedGeometryError("|u(s)| depends on arg(s); level sets are not circles")

    if _radial_profile(param, 0.0) >= target:
        raise EmptyCycleError("the curve point s = 0 is not inside G_delta")
    hi = param.s_max if np.isfinite(param.s_max) else 1.0
    while not np.isfinite(param.s_max) and _radial_profile(param, hi) < target:
        hi *= 2
        if hi > 1e8:
            raise EmptyCycleError("the curve does not reach bD_delta")
    if _radial_profile(param, hi) < target:
        raise EmptyCycleError(f"variety misses bD_delta inside |s| <= {param.s_max}")

    grid = np.linspace(0, hi, 257)
    prof = _radial_profile(param, grid.astype(complex))
    if np.any(np.diff(prof) < -1e-14 * np.max(prof)):
        raise UnsupportedGeometryError("|u(s)| is not radially monotone")

    rho = bisect(lambda t: _radial_profile(param, complex(t)) - target, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return Cycle.circle(0j, rho, M, orientation=-1)
