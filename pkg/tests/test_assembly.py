from types import SimpleNamespace

import numpy as np
import pytest
from scipy import linalg

from rotating_atmosphere.assembly import (
    BasisCombination, CallableField, ConstantField, PencilMatrices, assemble_coriolis, assemble_mass,
    assemble_pencil, assemble_stiffness, initial_upsilon_from_displacement, linearized_force,
)
from rotating_atmosphere.atmosphere import StationaryState, reference_params, rho_of_upsilon
from rotating_atmosphere.basis import basis_fields
from rotating_atmosphere.errors import DegenerateBasisError, DomainError, GeometryError
from rotating_atmosphere.geometry import domain_contains
from rotating_atmosphere.mesh import build_mesh, coordinate_jet
from rotating_atmosphere.spectrum import coriolis_bound


def shell_volume(r0, r):
    return 4 * np.pi / 3 * (r ** 3 - r0 ** 3)


def test_mesh_volume_of_spherical_shell(rest_state):
    mesh = build_mesh(rest_state, n_s=32, n_zeta=32)
    assert mesh.volume() == pytest.approx(shell_volume(1.0, 2.0), rel=1e-6)


def test_mesh_volume_with_bulge(ref_state):
    assert build_mesh(ref_state, n_s=16, n_zeta=16).volume() > shell_volume(1.0, 2.0)


def test_mesh_mass_self_convergence(ref_state):
    meshes = [build_mesh(ref_state, n_s=n, n_zeta=n) for n in (64, 128)]
    mass = [mesh.integrate(mesh.rho) for mesh in meshes]
    assert abs(mass[1] - mass[0]) < 1e-8 * abs(mass[1])


def test_mesh_nodes_inside(ref_state):
    mesh = build_mesh(ref_state, n_s=6, n_zeta=6)
    assert np.all(mesh.weights > 0)
    pts = np.column_stack([mesh.varpi, np.zeros_like(mesh.varpi), mesh.z])
    assert np.all(domain_contains(pts, ref_state))


def test_mesh_rejects_bad_input(ref_state):
    with pytest.raises(GeometryError):
        build_mesh(ref_state, n_s=3, n_zeta=8)
    critical = StationaryState(reference_params(omega=np.sqrt(2 * 4 / 27 / 8)))
    with pytest.raises(GeometryError):
        build_mesh(critical)


def test_basis_families(pencil_m0):
    _, _, basis = pencil_m0
    counts = basis.counts()
    assert counts["gradient"] > 0 and counts["kernel"] > 0
    assert counts["gradient"] + counts["kernel"] == len(basis)
    with pytest.raises(ValueError):
        basis_fields(basis.mesh, "bogus")


def _sphere_density(params, w, z):
    # the state evaluators stop short of r = R0, so the density jet on the sphere is built here
    r = np.hypot(w, z)
    u = params.gm0 * (1 / r - 1 / params.r_cap) + 0.5 * params.omega_sq * w * w
    rho = rho_of_upsilon(u, params)
    drho = rho ** (2 - params.gamma) / (params.a_const * params.gamma)
    return rho, drho * (-params.gm0 * w / r ** 3 + params.omega_sq * w), drho * (-params.gm0 * z / r ** 3)


@pytest.mark.parametrize("fixture", ["pencil_m0", "pencil_m1"])
def test_normal_component_vanishes_on_sphere(fixture, request):
    _, mesh, basis = request.getfixturevalue(fixture)
    th = np.linspace(0.05, np.pi - 0.05, 20)
    w, z = np.sin(th), np.cos(th)
    jet = coordinate_jet(mesh.surface, w, z)
    assert np.allclose(jet.s, 0.0, atol=1e-15)
    xi, _ = basis.evaluate_jet(jet, *_sphere_density(mesh.state.params, w, z))
    normal = xi[0] * w[:, None] + xi[2] * z[:, None]
    assert np.max(np.abs(xi)) > 1.0
    assert np.max(np.abs(normal)) <= 1e-12


def test_mass_properties(pencil_m0, pencil_m1):
    for mats, _, _ in (pencil_m0, pencil_m1):
        a = mats.a_mass
        assert np.linalg.norm(a - a.conj().T) <= 1e-13 * np.linalg.norm(a)
        assert np.linalg.eigvalsh(a)[0] > 0


def test_mass_disjoint_supports_exact_zero(pencil_m0):
    mats, _, basis = pencil_m0
    grad = [f for f in basis.fields if f.family == "gradient"]
    first = next(f for f in grad if f.zeta_index == 0 and len(f.s_coef) == 3)
    last = next(f for f in grad if f.zeta_index >= 6 and len(f.s_coef) >= 7)
    assert mats.a_mass[first.index, last.index] == 0.0
    assert mats.a_mass[first.index, first.index] > 0


def test_mass_rank_check(pencil_m0):
    _, mesh, basis = pencil_m0
    twice = SimpleNamespace(xi=np.concatenate([basis.xi, basis.xi[:, :, :1]], axis=2))
    with pytest.raises(DegenerateBasisError):
        assemble_mass(mesh, twice)


def test_matrices_match_refined_quadrature(ref_state):
    coarse, _, _ = assemble_pencil(ref_state, m=1, n_s=6, n_zeta=6, order=8)
    fine, _, _ = assemble_pencil(ref_state, m=1, n_s=6, n_zeta=6, order=12)
    scale = lambda m: np.max(np.abs(m))
    assert np.max(np.abs(coarse.a_mass - fine.a_mass)) <= 1e-8 * scale(fine.a_mass)
    assert np.max(np.abs(coarse.c_stiffness - fine.c_stiffness)) <= 1e-7 * scale(fine.c_stiffness)


class _Fields:
    def __init__(self, xi):
        self.xi = xi

    def __len__(self):
        return self.xi.shape[2]


def test_coriolis_polarized_field(pencil_m0):
    _, mesh, _ = pencil_m0
    n = mesh.n_nodes
    xi = np.zeros((3, n, 1), dtype=complex)
    xi[0], xi[1] = 1.0, 1j
    basis = _Fields(xi)
    om = 0.3
    b = assemble_coriolis(mesh, basis, om)
    a = assemble_mass(mesh, basis)
    assert b[0, 0].real == pytest.approx(2 * om * a[0, 0].real, rel=1e-14)


def test_coriolis_examples(pencil_m0, rest_state):
    mats, mesh, basis = pencil_m0
    assert not np.any(assemble_coriolis(mesh, basis, 0.0))
    assert not np.any(assemble_pencil(rest_state, m=1, n_s=5, n_zeta=5)[0].b_coriolis)
    # real m = 0 fields carry no circulation of their own
    assert np.max(np.abs(np.diag(mats.b_coriolis))) <= 1e-12


@pytest.mark.parametrize("fixture", ["pencil_m0", "pencil_m1"])
def test_coriolis_hermitian_and_bounded(fixture, request):
    mats, _, _ = request.getfixturevalue(fixture)
    b = mats.b_coriolis
    assert np.linalg.norm(b - b.conj().T) <= 1e-13 * np.linalg.norm(b)
    assert coriolis_bound(mats) <= 2 * abs(mats.omega) + 1e-10


@pytest.mark.parametrize("fixture", ["pencil_m0", "pencil_m1"])
def test_stiffness_properties(fixture, request):
    mats, _, basis = request.getfixturevalue(fixture)
    c = mats.c_stiffness
    assert np.linalg.norm(c - c.conj().T) <= 1e-13 * np.linalg.norm(c)
    ev = np.linalg.eigvalsh(c)
    assert ev[0] >= -1e-10 * ev[-1]
    kern = basis.indices("kernel")
    grad = basis.indices("gradient")
    assert np.max(np.abs(c[kern])) <= 1e-10
    assert np.max(np.abs(c[np.ix_(grad, kern)])) <= 1e-10
    assert np.all(np.real(np.diag(c))[grad] > 0)


def test_stiffness_rejects_infinite_weights(pencil_m0):
    _, mesh, basis = pencil_m0
    bad = SimpleNamespace(weights=mesh.weights, sigma=np.where(np.arange(mesh.n_nodes) == 0, np.inf, mesh.sigma))
    with pytest.raises(DomainError):
        assemble_stiffness(bad, basis)


def test_rest_frequencies_self_convergence(rest_state):
    lows = []
    for n in (6, 12):
        mats, _, _ = assemble_pencil(rest_state, m=0, n_s=n, n_zeta=n, family="gradient")
        ev = linalg.eigh(mats.c_stiffness, mats.a_mass, eigvals_only=True)
        lows.append(ev[ev > 1e-8 * ev[-1]][:3])
    np.testing.assert_allclose(lows[0], lows[1], rtol=0.02)


def test_initial_enthalpy_zero_displacement(ref_state):
    up0 = initial_upsilon_from_displacement(ConstantField([0, 0, 0]), ref_state)
    w, z = np.array([1.3, 0.2]), np.array([0.4, 1.6])
    np.testing.assert_allclose(up0(w, z), ref_state.upsilon(w, z), rtol=1e-15)


def test_initial_enthalpy_axial_shift(ref_state):
    eps = 1e-3
    up0 = initial_upsilon_from_displacement(ConstantField([0, 0, eps]), ref_state)
    w, z = np.array([1.05, 0.3, 0.7]), np.array([0.2, 1.02, -0.9])
    _, gz = ref_state.grad_upsilon(w, z)
    np.testing.assert_allclose(up0(w, z) - ref_state.upsilon(w, z), -eps * gz, atol=1e-10)


def test_initial_enthalpy_keeps_domain(pencil_m0, ref_state):
    mats, mesh, basis = pencil_m0
    coef = np.zeros(len(basis))
    coef[basis.indices("kernel")[::7]] = 1.0
    xi0 = BasisCombination(basis, coef, scale=1e-4)
    rng = np.random.default_rng(0)
    s = rng.uniform(0.001, 0.999, 1000)
    zeta = rng.uniform(-0.999, 0.999, 1000)
    rb = 2.0 * mesh.surface.shape(zeta * zeta)
    r = 1.0 + s * (rb - 1.0)
    w, z = r * np.sqrt(1 - zeta * zeta), r * zeta
    assert np.all(initial_upsilon_from_displacement(xi0, ref_state)(w, z) > 0)


def test_force_of_kernel_field_vanishes(pencil_m0, ref_state):
    _, mesh, basis = pencil_m0
    coef = np.zeros(len(basis))
    coef[basis.indices("kernel")[:5]] = 1.0
    g = linearized_force(BasisCombination(basis, coef), ref_state)(mesh.varpi[::37], mesh.z[::37])
    assert np.max(np.abs(g)) <= 1e-10


def test_force_is_linear(pencil_m0, ref_state):
    _, mesh, basis = pencil_m0
    coef = np.random.default_rng(1).standard_normal(len(basis))
    w, z = mesh.varpi[::53], mesh.z[::53]
    g1 = linearized_force(BasisCombination(basis, coef), ref_state)(w, z)
    g2 = linearized_force(BasisCombination(basis, coef, scale=2.0), ref_state)(w, z)
    np.testing.assert_allclose(g2, 2 * g1, rtol=1e-14, atol=1e-14 * np.max(np.abs(g1)))


def test_force_reproduces_stiffness(pencil_m0, ref_state):
    mats, mesh, basis = pencil_m0
    idx = basis.indices("gradient")[[0, 5, 17]]
    g = basis.g[:, idx]
    forces = []
    for j in idx:
        e = np.zeros(len(basis))
        e[j] = 1.0
        forces.append(linearized_force(BasisCombination(basis, e), ref_state)(mesh.varpi, mesh.z))
    forces = np.column_stack(forces)
    weak = -(g.conj().T @ (mesh.weights[:, None] * forces))
    np.testing.assert_allclose(weak, mats.c_stiffness[np.ix_(idx, idx)], rtol=1e-10,
                               atol=1e-12 * np.max(np.abs(mats.c_stiffness)))


class _PolynomialAtmosphere:
    """Stand-in background with rho = 1 + varpi^2 + z^2 on a test patch."""

    params = reference_params()

    def upsilon(self, w, z):
        return np.ones_like(np.asarray(w, dtype=float))

    def rho(self, w, z):
        return 1.0 + w * w + z * z

    def rho_and_grad(self, w, z):
        return self.rho(w, z), 2 * w, 2 * z


def test_force_manufactured_gradient_field():
    # chi = varpi^2 z: grad chi = (2 varpi z, 0, varpi^2), laplacian 4 z
    field = CallableField(lambda w, z: (np.array([2 * w * z, 0 * w, w * w]), 4 * z))
    st = _PolynomialAtmosphere()
    w = np.linspace(1.1, 1.6, 7)
    z = np.linspace(-0.4, 0.5, 7)
    rho = st.rho(w, z)
    p = st.params
    exact = -p.a_const * p.gamma * rho ** (p.gamma - 2) * (4 * z * rho + 6 * w * w * z)
    np.testing.assert_allclose(linearized_force(field, st)(w, z), exact, rtol=1e-8)


def test_force_outside_domain_refused(ref_state):
    with pytest.raises(DomainError):
        linearized_force(ConstantField([0, 0, 1.0]), ref_state)(np.array([3.5]), np.array([0.0]))


def test_pencil_subset(pencil_m1):
    mats, _, basis = pencil_m1
    idx = basis.indices("gradient")
    sub = mats.subset(idx)
    assert isinstance(sub, PencilMatrices) and sub.size == idx.size
    assert np.array_equal(sub.c_stiffness, mats.c_stiffness[np.ix_(idx, idx)])
