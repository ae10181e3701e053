import numpy as np
import pytest

from resradon import (
    BoundaryResidue,
    Covector1Form,
    DiscStencil,
    DomainSpec,
    HomPoly,
    InputError,
    Martineau,
    NearIncidenceError,
    PointMass,
    RadonSetup,
    ResidualFormSpec,
    cauchy_derivative,
    euler_contraction,
    fantappie_potential,
    fantappie_transform,
    martineau_invert,
    radon_potential_batch,
    radon_transform,
    verify_system,
)
from resradon.transforms import radon_components

from oracles import potential_oracle, radon_oracle, random_dual_points

CONIC_CLASS = {3: 1, 4: 1, 5: 1}
CONIC_J = "1/s^3 + 1/s^4 + 1/s^5"


# -- Radon transform ------------------------------------------------------------


def test_radon_example(conic, unit_domain):
    f = radon_transform(conic, ResidualFormSpec.leray("1/s^2"), unit_domain, 0.1, [1, 0, -1 / 9])
    np.testing.assert_allclose(f.f, [0, -1, 0], atol=1e-12)


def test_radon_zero_class(conic, unit_domain):
    f = radon_transform(conic, ResidualFormSpec.leray("0"), unit_domain, 0.1, [1, 0.2, 0.1])
    assert f.norm() == 0


def test_radon_rejects_points_outside_dual(conic, unit_domain):
    with pytest.raises(InputError):
        radon_transform(conic, ResidualFormSpec.leray("1/s^2"), unit_domain, 0.1, [1, 0.95, 0])


def test_radon_near_incidence(conic, unit_domain):
    setup = RadonSetup.build(conic, ResidualFormSpec.leray("1/s^2"), unit_domain, 0.1)
    rho = setup.cycle.radius
    # <xi . z(s)> = (s - rho)(s - 5) vanishes on the contour
    with pytest.raises(NearIncidenceError):
        setup.check_incidence(np.array([5 * rho, -(rho + 5), 1]))
    with pytest.raises(NearIncidenceError):
        setup.check_incidence(np.array([9, -6, 1]))  # (s - 3)^2


@pytest.mark.parametrize("which, classes, powers", [
    ("conic", CONIC_CLASS, [0, 1, 2]),
    ("cubic", {3: 1, 5: 1, 7: 1}, [0, 2, 3]),
])
def test_radon_matches_root_oracle(request, unit_domain, rng, which, classes, powers):
    V = request.getfixturevalue(which)
    J = " + ".join(f"{c}/s^{k}" for k, c in classes.items())
    setup = RadonSetup.build(V, ResidualFormSpec.leray(J), unit_domain, 0.1)
    xi = random_dual_points(rng, 20)
    f = radon_components(setup, xi)
    want = np.array([radon_oracle(powers, classes, x) for x in xi])
    assert np.max(np.abs(f - want)) <= 1e-10 * max(1, np.max(np.abs(want)))


def test_radon_independent_of_delta(conic, unit_domain, rng):
    xi = random_dual_points(rng, 10, delta=0.2)
    phi = ResidualFormSpec.leray(CONIC_J)
    vals = [radon_components(RadonSetup.build(conic, phi, unit_domain, d), xi) for d in (0.05, 0.1, 0.2)]
    assert max(np.max(np.abs(v - vals[0])) for v in vals) < 1e-7


def test_radon_closed(conic, unit_domain):
    setup = RadonSetup.build(conic, ResidualFormSpec.leray(CONIC_J), unit_domain, 0.1)
    xi = np.array([1, 0.2 + 0.1j, -0.15])
    comps = [DiscStencil.sample(lambda x, j=j: radon_components(setup, x)[..., j], xi, radius=0.05) for j in range(3)]
    for j in range(3):
        for k in range(j + 1, 3):
            ej, ek = np.eye(3, dtype=int)[j], np.eye(3, dtype=int)[k]
            djfk = cauchy_derivative(comps[k], tuple(ej))
            dkfj = cauchy_derivative(comps[j], tuple(ek))
            assert abs(djfk - dkfj) <= 1e-6 * max(1, abs(djfk))


def test_radon_homogeneity(cubic, unit_domain, rng):
    setup = RadonSetup.build(cubic, ResidualFormSpec.leray("1/s^3 + 1/s^5"), unit_domain, 0.1)
    xi = random_dual_points(rng, 5)
    for lam in (2.0, -0.5j, 3 - 1j):
        a, b = radon_components(setup, lam * xi), radon_components(setup, xi) / lam
        assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(b))


def test_radon_potential_matches_oracle(conic, unit_domain, rng):
    setup = RadonSetup.build(conic, ResidualFormSpec.leray(CONIC_J), unit_domain, 0.1)
    xi = random_dual_points(rng, 10)
    g = radon_potential_batch(setup, xi)
    want = np.array([potential_oracle([0, 1, 2], CONIC_CLASS, x) for x in xi])
    assert np.max(np.abs(g - want)) < 1e-10


# -- Fantappie transform ------------------------------------------------------------


def test_point_mass_transform(unit_domain):
    mu = PointMass([1, 0.5, 0], unit_domain)
    f = fantappie_transform(mu, [2, 1, 0])
    np.testing.assert_allclose(f.f, [0.4, 0.2, 0])
    assert abs(euler_contraction(f) - 1) < 1e-15


def test_point_mass_must_lie_in_g(unit_domain):
    with pytest.raises(InputError):
        PointMass([1, 2, 0], unit_domain)


def test_point_mass_potential():
    dom = DomainSpec(2, 0.5)
    mu = PointMass([1, 0.25, 0], dom)
    g = fantappie_potential(mu, [1, 1, 0])
    assert abs(g - np.log(1.25)) < 1e-13


def test_potential_of_exact_form():
    # (1, 1, 0) sits on the boundary of the dual for r = 1, so use r = 1/2
    dg = lambda x: np.array([-x[1] / x[0] ** 2, 1 / x[0], 0])
    g = fantappie_potential(dg, [1, 1, 0], [1, 0, 0], dom=DomainSpec(2, 0.5))
    assert abs(g - 1) < 1e-14


def test_potential_around_closed_loop():
    dom = DomainSpec(2, 0.5)
    mu = PointMass([1, 0.25, 0.3j], dom)
    base = np.array([1, 0, 0])
    loop = [[1, 0.8, 0], [1, 0.5, 0.5j], [1, -0.3, 0.2]]
    g = fantappie_potential(mu, base, base, path=loop, g_ref=0)
    assert abs(g) < 1e-13


def test_potential_rejects_path_leaving_dual(unit_domain):
    mu = PointMass([1, 0.25, 0], unit_domain)
    with pytest.raises(InputError):
        fantappie_potential(mu, [1, 0.2, 0], path=[[1, 1.5, 0]])


def test_boundary_residue_transform_is_radon(conic, unit_domain):
    phi = ResidualFormSpec.leray(CONIC_J)
    xi = np.array([1, 0.2 - 0.1j, 0.3])
    R = radon_transform(conic, phi, unit_domain, 0.1, xi)
    for method in ("tube", "leray"):
        F = fantappie_transform(BoundaryResidue(conic, phi, unit_domain, 0.2, method=method), xi)
        assert np.max(np.abs((2j * np.pi) ** 2 * R.f - F.f)) <= 1e-8 * np.max(np.abs(F.f))


def test_boundary_residue_of_one(conic, unit_domain):
    mu = BoundaryResidue(conic, ResidualFormSpec.leray("1/s^2"), unit_domain, 0.1)
    assert abs(mu(lambda z: np.ones(z.shape[:-1]))) < 1e-10


# -- Martineau inversion ------------------------------------------------------------


@pytest.mark.parametrize("g, dg", [
    (lambda x: x[..., 1] / x[..., 0], lambda x: [-x[1] / x[0] ** 2, 1 / x[0], 0]),
    (lambda x: x[..., 2] / x[..., 0], lambda x: [-x[2] / x[0] ** 2, 0, 1 / x[0]]),
])
def test_martineau_roundtrip(unit_domain, g, dg):
    mu = martineau_invert(g, unit_domain, grid=32)
    for xi in ([1, 0.2, 0.1], [1j, -0.1, 0.3j]):
        xi = np.array(xi, dtype=complex)
        f = fantappie_transform(mu, xi)
        assert np.max(np.abs(f.f - np.array(dg(xi)))) < 1e-8


def test_martineau_constant_is_zero(unit_domain):
    mu = Martineau(lambda x: np.full(x.shape[:-1], 3.0 + 0j), unit_domain, grid=16)
    assert abs(mu(lambda z: z[..., 1] ** 2 + 1)) < 1e-14


def test_martineau_one_dimensional():
    mu = Martineau(lambda x: x[..., 1] / x[..., 0], DomainSpec(1, 1.0), grid=64)
    f = fantappie_transform(mu, [2, 0.5])
    np.testing.assert_allclose(f.f, [-0.125, 0.5], atol=1e-12)


def test_martineau_rejects_non_homogeneous(unit_domain):
    with pytest.raises(InputError):
        Martineau(lambda x: x[..., 1], unit_domain)
    with pytest.raises(InputError):
        Martineau(lambda x: x[..., 1] + x[..., 0] ** 2, unit_domain)


# -- PDE systems and Euler contraction ------------------------------------------------


def test_verify_conic_kernel(conic_poly):
    z = np.array([1, 2, 4])
    rep = verify_system(lambda x: 1 / (x @ z), [conic_poly], [[1, 0.1, -0.1]], radius=0.02)[0]
    assert rep.relative[0] < 1e-8


def test_verify_negative_control(conic_poly):
    rep = verify_system(lambda x: x[..., 1] ** 2 / x[..., 0], [conic_poly], [[1, 0.2, 0.3]])[0]
    assert abs(rep.residuals[0] + 2) < 1e-10


def test_verify_radon_potential(conic, conic_poly, unit_domain, rng):
    setup = RadonSetup.build(conic, ResidualFormSpec.leray(CONIC_J), unit_domain, 0.1)
    g = lambda x: radon_potential_batch(setup, x)
    for rep in verify_system(g, [conic_poly], random_dual_points(rng, 4, max_ratio=0.4), dom=unit_domain):
        assert rep.status == "ok" and rep.relative[0] < 1e-8


def test_verify_skips_points_near_boundary(conic_poly, unit_domain):
    rep = verify_system(lambda x: 1 / x[..., 0], [conic_poly], [[1, 0.999, 0]], dom=unit_domain, radius=0.5, shrink=1)[0]
    assert rep.status == "skipped"


def test_euler_contraction_examples(conic, unit_domain):
    assert euler_contraction(Covector1Form([1, 2, 3], [1, 1, 1])) == 6
    f = radon_transform(conic, ResidualFormSpec.leray("1/s^2 + 1/s^3"), unit_domain, 0.1, [1, 0.3, 0.2])
    assert abs(euler_contraction(f)) < 1e-12


def test_covector_shape_check():
    with pytest.raises(InputError):
        Covector1Form([1, 2, 3], [1, 2])


def test_martineau_annihilates_ideal(conic_poly, unit_domain, rng):
    # this g solves d0 d2 g = d1^2 g, so mu^g kills multiples of the conic
    g = lambda x: (x[..., 1] / x[..., 0]) ** 2 - 2 * x[..., 2] / x[..., 0]
    mu = Martineau(g, unit_domain, grid=32)
    for _ in range(5):
        c = rng.normal(size=3) + 1j * rng.normal(size=3)
        h = lambda z: c[0] + c[1] * z[..., 1] / z[..., 0] + c[2] * (z[..., 2] / z[..., 0]) ** 3
        assert abs(mu(lambda z: h(z) * conic_poly(z) / z[..., 0] ** 2)) < 1e-10
    # a multiple of a non-characteristic polynomial is not annihilated
    assert abs(mu(lambda z: z[..., 1] ** 2 / z[..., 0] ** 2)) > 0.1


def test_euler_contraction_of_exact_form():
    xi = np.array([1.5, 0.2 - 0.3j, 0.4])
    dg = [-2 * xi[1] ** 2 / xi[0] ** 3 + 2 * xi[2] / xi[0] ** 2, 2 * xi[1] / xi[0] ** 2, -2 / xi[0]]
    assert abs(euler_contraction(Covector1Form(xi, dg))) < 1e-15
