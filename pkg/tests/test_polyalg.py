import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resradon import DiscStencil, HomPoly, InputError, NotHomogeneous, Poly
from resradon.polyalg import cauchy_derivative, cauchy_derivatives, eval_poly, grad_poly, homogeneity_of


def test_eval_conic_points(conic_poly):
    assert eval_poly(conic_poly, [1, 1, 1]) == 0
    assert eval_poly(conic_poly, [1, 0, 1]) == 1


def test_eval_cubic_on_parametrization(cubic_poly):
    s = 2.0
    assert eval_poly(cubic_poly, [1, s**2, s**3]) == 0


def test_eval_rejects_wrong_dimension(conic_poly):
    with pytest.raises(InputError):
        eval_poly(conic_poly, [1, 2])


def test_eval_vectorised(conic_poly):
    z = np.array([[1, 1, 1], [1, 0, 1], [2, 3, 4.5]])
    np.testing.assert_allclose(eval_poly(conic_poly, z), [0, 1, 0])


def test_grad_conic(conic_poly):
    g = grad_poly(conic_poly)
    z = np.array([0.3 + 1j, -2.0, 0.7j])
    np.testing.assert_allclose([p(z) for p in g], [z[2], -2 * z[1], z[0]])
    assert all(p.degree == 1 for p in g)


def test_grad_linear():
    g = grad_poly(HomPoly.from_literal([[[0, 1, 0], [1, 0]]]))
    assert [p.is_zero() for p in g] == [True, False, True]
    assert g[1]([5, 6, 7]) == 1
    assert all(p.degree == 0 for p in g)


def test_grad_cubic_vanishes_at_cusp(cubic_poly):
    assert [p([1, 0, 0]) for p in grad_poly(cubic_poly)] == [0, 0, 0]


def test_hompoly_rejects_mixed_degree():
    with pytest.raises(InputError):
        HomPoly.from_literal([[[1, 0, 0], [1, 0]], [[0, 2, 0], [1, 0]]])
    with pytest.raises(InputError):
        HomPoly(2, 3, {(1, 1, 0): 1.0})


def test_zero_coefficients_dropped():
    p = Poly.var(0, 2) - Poly.var(0, 2) + Poly.var(1, 2)
    assert list(p.coeffs) == [(0, 1)]


def test_literal_roundtrip(cubic_poly):
    assert HomPoly.from_literal(cubic_poly.to_terms()) == cubic_poly


def _random_hompoly(rng, n=2, degree=3, terms=4):
    coeffs = {}
    for _ in range(terms):
        cuts = np.sort(rng.integers(0, degree + 1, size=n))
        a = np.diff(np.concatenate([[0], cuts, [degree]]))
        coeffs[tuple(int(x) for x in a)] = complex(rng.normal(), rng.normal())
    return HomPoly(n, degree, coeffs)


@pytest.mark.parametrize("degree", [0, 1, 2, 3, 5])
def test_homogeneity_random(rng, degree):
    P = _random_hompoly(rng, degree=degree)
    for _ in range(20):
        z = rng.normal(size=3) + 1j * rng.normal(size=3)
        lam = complex(rng.normal(), rng.normal())
        scale = max(1.0, abs(lam) ** degree * np.linalg.norm(z) ** degree * sum(map(abs, P.coeffs.values())))
        assert abs(P(lam * z) - lam**degree * P(z)) <= 1e-10 * scale


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_euler_identity(degree, seed):
    rng = np.random.default_rng(seed)
    P = _random_hompoly(rng, degree=degree, terms=5)
    g = grad_poly(P)
    z = rng.normal(size=3) + 1j * rng.normal(size=3)
    lhs = sum(z[j] * g[j](z) for j in range(3))
    rhs = degree * P(z)
    assert abs(lhs - rhs) <= 1e-12 * max(abs(rhs), sum(abs(z[j] * g[j](z)) for j in range(3)), 1e-300)


# -- Cauchy differentiation -------------------------------------------------


def test_cauchy_monomial_second_derivative():
    st_ = DiscStencil.sample(lambda x: x[..., 1] ** 2, [0, 0, 0], radius=0.5)
    assert abs(cauchy_derivative(st_, (0, 2, 0)) - 2) < 1e-13


def test_cauchy_exp():
    st_ = DiscStencil.sample(lambda x: np.exp(x[..., 1]), [0, 0, 0], radius=0.1, N=16)
    assert abs(cauchy_derivative(st_, (0, 1, 0)) - 1) < 1e-12


def test_cauchy_mixed_rational():
    g = lambda x: 1 / (x[..., 0] + x[..., 2])
    st_ = DiscStencil.sample(g, [1, 0, 1], radius=0.1)
    # d^2/dxi0 dxi2 of 1/(xi0 + xi2) = 2/(xi0 + xi2)^3
    assert abs(cauchy_derivative(st_, (1, 0, 1)) - 0.25) < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_cauchy_exact_on_polynomials(seed):
    rng = np.random.default_rng(seed)
    shape = (6, 6, 6)
    C = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    P = Poly(3, {a: C[a] for a in np.ndindex(*shape)})
    c = rng.normal(size=3) * 0.5
    st_ = DiscStencil.sample(P, c, radius=0.3, N=16)
    for order in [(0, 0, 0), (1, 0, 2), (2, 2, 1), (3, 0, 0)]:
        Q = P
        for var, k in enumerate(order):
            for _ in range(k):
                Q = Q.diff(var)
        exact = Q(c)
        assert abs(cauchy_derivative(st_, order) - exact) <= 1e-10 * max(abs(exact), 1.0)


def test_cauchy_radius_invariance():
    g = lambda x: np.exp(x[..., 0] * x[..., 1]) / (2 - x[..., 2])
    c = [0.2, -0.1, 0.3]
    orders = [(1, 1, 0), (0, 0, 2), (2, 1, 1)]
    a = cauchy_derivatives(DiscStencil.sample(g, c, radius=0.1), orders)
    b = cauchy_derivatives(DiscStencil.sample(g, c, radius=0.2), orders)
    for x, y in zip(a, b):
        assert abs(x - y) <= 1e-8 * abs(y)


def test_cauchy_rejects_incomplete_stencil():
    st_ = DiscStencil([0, 0], [0.1, 0.1], 16, np.zeros((16, 15)))
    with pytest.raises(InputError):
        cauchy_derivative(st_, (0, 0))
    bad = np.ones((16, 16))
    bad[3, 4] = np.nan
    with pytest.raises(InputError):
        cauchy_derivative(DiscStencil([0, 0], [0.1, 0.1], 16, bad), (0, 0))


def test_cauchy_rejects_high_order():
    st_ = DiscStencil.sample(lambda x: x[..., 0], [0.0], N=8)
    with pytest.raises(InputError):
        cauchy_derivative(st_, (4,))


def test_stencil_requires_even_n():
    with pytest.raises(InputError):
        DiscStencil.sample(lambda x: x[..., 0], [0.0], N=9)


def test_default_radius_floor():
    st_ = DiscStencil.sample(lambda x: x[..., 0], [0.0, 0.0])
    assert np.allclose(st_.radius, 0.05)
    st_ = DiscStencil.sample(lambda x: x[..., 0], [3.0, 4.0])
    assert np.allclose(st_.radius, 0.5)


# -- homogeneity ------------------------------------------------------------

PROBES = np.array([[1, 0.2, 0.1], [2, -0.3j, 0.5], [1j, 0.4, -0.2]])


def test_homogeneity_degree_zero():
    assert homogeneity_of(lambda x: x[..., 1] / x[..., 0], PROBES) == 0


def test_homogeneity_fantappie_kernel():
    z = np.array([1, 0.5, 0.25])
    for j in range(3):
        assert homogeneity_of(lambda x: z[j] / (x @ z), PROBES) == -1


@pytest.mark.parametrize("degree", [1, 2, 4])
def test_homogeneity_of_hompoly(rng, degree):
    P = _random_hompoly(rng, degree=degree)
    assert homogeneity_of(P, PROBES) == degree


def test_not_homogeneous():
    with pytest.raises(NotHomogeneous):
        homogeneity_of(lambda x: x[..., 0] + x[..., 1] ** 2, PROBES)
    with pytest.raises(NotHomogeneous):
        homogeneity_of(lambda x: 0 * x[..., 0], PROBES)


def test_univariate_coeffs_and_shift():
    x, y = Poly.var(0, 2), Poly.var(1, 2)
    P = (1 + y) * x**2 + 3 * y
    c = P.univariate_coeffs(0, np.array([7.0, 2.0]))
    np.testing.assert_allclose(c, [6, 0, 3])
    Q = P.shift([1, -1])
    pt = np.array([0.3, 0.2])
    assert abs(Q(pt) - P(pt + np.array([1, -1]))) < 1e-14
    assert math.isclose(P.total_degree, 3)
