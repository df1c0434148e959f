import numpy as np
import pytest
from scipy import linalg

from conftest import random_pencil
from rotating_atmosphere.assembly import PencilMatrices, assemble_pencil
from rotating_atmosphere.errors import AssemblyOrderError, BranchError, DomainError, PreconditionError
from rotating_atmosphere.spectrum import (
    companion_linearize, coriolis_bound, log_determinant, orthonormalized, phase_reality_test,
    rayleigh_coefficients, reality_check, resolvent_bound_check, secular_determinant_scan, sigma_functional,
    simple_real_frequencies, solve_pencil, stationarity_residual,
)


def scalar(a, b, c, omega=0.0):
    return PencilMatrices(np.array([[a]], float), np.array([[b]], float), np.array([[c]], float), omega=omega)


def pair_eigenvalues(mats):
    left, right = companion_linearize(mats)
    return np.sort(linalg.eigvals(left, right).real)


def test_companion_scalar_examples():
    np.testing.assert_allclose(pair_eigenvalues(scalar(1, 0, 4)), [-2, 2], atol=1e-14)
    np.testing.assert_allclose(pair_eigenvalues(scalar(1, 0.2, 0, omega=0.1)), [0, 0.2], atol=1e-14)


def test_companion_against_determinant():
    rng = np.random.default_rng(11)
    mats = random_pencil(rng, 5)
    left, right = companion_linearize(mats)
    assert left.shape == (10, 10)
    sig = linalg.eigvals(left, right)
    na, nb, nc = (np.linalg.norm(m, 2) for m in (mats.a_mass, mats.b_coriolis, mats.c_stiffness))
    for s in sig:
        p = -s * s * mats.a_mass + s * mats.b_coriolis + mats.c_stiffness
        scale = (na * abs(s) ** 2 + nb * abs(s) + nc) ** 5
        assert abs(np.linalg.det(p)) <= 1e-8 * scale


def test_companion_needs_positive_mass():
    with pytest.raises(AssemblyOrderError):
        companion_linearize(scalar(-1, 0, 1))


def test_solve_rest_state_factorises(pencil_rest, spectrum_rest):
    mats = pencil_rest[0]
    res = spectrum_rest
    mu = linalg.eigh(mats.c_stiffness, mats.a_mass, eigvals_only=True)
    mu = mu[mu > 1e-8 * mu[-1]]
    sig = np.sort(np.abs(res.sigma[res.nonzero()].real))
    expected = np.sort(np.repeat(np.sqrt(mu), 2))
    np.testing.assert_allclose(sig, expected, rtol=1e-10)
    assert res.zero_cluster.sum() == 2 * (mats.size - mu.size)


def test_solve_kernel_only_basis(ref_state):
    mats, _, _ = assemble_pencil(ref_state, m=1, n_s=5, n_zeta=5, family="kernel")
    res = solve_pencil(mats)
    scale = np.max(np.abs(np.linalg.eigvalsh(mats.b_coriolis))) / np.min(np.linalg.eigvalsh(mats.a_mass))
    # C vanishes, so s = 0 (N times) and the Coriolis eigenvalues of (B, A)
    assert np.max(np.abs(res.sigma)) <= scale
    assert np.sum(np.abs(res.sigma) <= 1e-8 * scale) >= mats.size


def test_solve_reality_and_residuals(pencil_m0, spectrum_m1):
    res0 = solve_pencil(pencil_m0[0])
    for res in (res0, spectrum_m1):
        rep = reality_check(res)
        assert rep.passed and rep.unpaired == 0
        assert np.all(res.relative_residuals <= 1e-8)
    # m = 0: B is imaginary, so the spectrum is symmetric under s -> -conj(s)
    s = np.sort(res0.sigma.real)
    np.testing.assert_allclose(s, -s[::-1], atol=1e-8 * np.max(np.abs(s)))


def test_reality_check_detects_negative_stiffness():
    rng = np.random.default_rng(5)
    mats = random_pencil(rng, 6, omega=0.0)
    ev, vec = np.linalg.eigh(mats.c_stiffness)
    ev[0] = -0.1
    bad = PencilMatrices(mats.a_mass, np.zeros((6, 6)), (vec * ev) @ vec.T)
    rep = reality_check(solve_pencil(bad))
    assert not rep.passed and rep.unpaired == 0


def test_rayleigh_identity_on_eigenvectors(pencil_m1, spectrum_m1):
    mats = pencil_m1[0]
    for k in range(0, mats.size * 2, 7):
        rc = rayleigh_coefficients(spectrum_m1.vectors[:, k], mats)
        s = spectrum_m1.sigma[k].real
        assert abs(rc.quadratic(s)) <= 1e-8 * (rc.a * s * s + abs(rc.b * s) + rc.c + 1e-300) + 1e-12
        assert rc.discriminant() >= 0
        assert abs(rc.b) <= 2 * abs(mats.omega) * rc.a + 1e-10


def test_rayleigh_kernel_vector(pencil_m1):
    mats, _, basis = pencil_m1
    x = np.zeros(mats.size)
    x[basis.indices("kernel")[3]] = 1.0
    rc = rayleigh_coefficients(x, mats)
    assert abs(rc.c) <= 1e-10
    assert np.roots([-rc.a, rc.b, rc.c]) == pytest.approx(sorted([0.0, rc.b / rc.a], reverse=rc.b > 0), abs=1e-10)


def test_rayleigh_polarized_scalar():
    om = 0.1
    rc = rayleigh_coefficients(np.array([1.0]), scalar(1.0, 2 * om, 0.0, omega=om))
    assert rc.b == 2 * om * rc.a
    with pytest.raises(DomainError):
        rayleigh_coefficients(np.zeros(1), scalar(1, 0, 1))


def test_sigma_functional_examples(pencil_m1, spectrum_m1):
    assert sigma_functional(np.array([1.0]), scalar(1, 0, 4)) == 2.0
    assert sigma_functional(np.array([1.0]), scalar(1, 0, 4), branch=-1) == -2.0
    with pytest.raises(BranchError):
        sigma_functional(np.array([1.0]), scalar(1, 0, 0))
    with pytest.raises(ValueError):
        sigma_functional(np.array([1.0]), scalar(1, 0, 4), branch=2)
    mats = pencil_m1[0]
    xi = np.random.default_rng(2).standard_normal(mats.size)
    assert sigma_functional(3 * xi, mats) == pytest.approx(sigma_functional(xi, mats), rel=1e-14)
    k = spectrum_m1.nonzero()[-3]
    v, s = spectrum_m1.vectors[:, k], spectrum_m1.sigma[k].real
    rc = rayleigh_coefficients(v, mats)
    branch = 1 if s > rc.b / (2 * rc.a) else -1
    assert sigma_functional(v, mats, branch) == pytest.approx(s, abs=1e-10 * max(1.0, abs(s)))


def test_stationarity_at_eigenvectors(pencil_m1, spectrum_m1):
    mats = pencil_m1[0]
    s = spectrum_m1.sigma.real
    picks = [k for k in spectrum_m1.nonzero() if abs(s[k]) > 2 * abs(mats.omega)][:4]
    for k in picks:
        v = spectrum_m1.vectors[:, k]
        rc = rayleigh_coefficients(v, mats)
        branch = 1 if s[k] > rc.b / (2 * rc.a) else -1
        assert stationarity_residual(v, mats, branch).normalized <= 1e-5


def test_stationarity_at_random_vectors(pencil_m1):
    mats = pencil_m1[0]
    rng = np.random.default_rng(9)
    for _ in range(5):
        xi = rng.standard_normal(mats.size) + 1j * rng.standard_normal(mats.size)
        assert stationarity_residual(xi, mats).normalized > 1e-2


def test_stationarity_along_kernel_directions(pencil_m1):
    mats, _, basis = pencil_m1
    kern = basis.indices("kernel")
    x = np.zeros(mats.size, dtype=complex)
    x[kern[:4]] = 1.0
    rc = rayleigh_coefficients(x, mats)
    branch = -1 if rc.b > 0 else 1  # the root that is zero
    assert sigma_functional(x, mats, branch) == pytest.approx(0.0, abs=1e-12)
    h = 1e-6
    for k in kern[::5]:
        e = np.zeros(mats.size)
        e[k] = h
        d = (sigma_functional(x + e, mats, branch) - sigma_functional(x - e, mats, branch)) / (2 * h)
        assert abs(d) <= 1e-8


def test_secular_scan_scalar():
    br = secular_determinant_scan(scalar(1, 0, 4), np.linspace(-3, 3, 61) + 0.013)
    np.testing.assert_allclose([b.root for b in br], [-2, 2], atol=1e-10)
    assert secular_determinant_scan(scalar(1, 0, 4), np.linspace(-1.5, 1.5, 31)) == []
    with pytest.raises(DomainError):
        secular_determinant_scan(scalar(1, 0, 4), [1.0, 0.5])


def test_secular_scan_matches_eigensolver(pencil_m1, spectrum_m1):
    mats = pencil_m1[0]
    hi = 1.02 * np.max(spectrum_m1.sigma.real)
    grid = np.linspace(0.5, hi, 800)
    sep = 2 * (grid[1] - grid[0])
    simple = simple_real_frequencies(spectrum_m1, grid[0], grid[-1], sep)
    roots = np.array([b.root for b in secular_determinant_scan(mats, grid)])
    assert simple.size > 5
    for s in simple:
        assert np.min(np.abs(roots - s)) <= 1e-6


def test_log_determinant_large_system(pencil_m0):
    sign, logabs = log_determinant(pencil_m0[0], 0.31)
    assert sign in (-1.0, 1.0) and np.isfinite(logabs)


def test_resolvent_examples(pencil_m1, pencil_rest):
    mats = pencil_m1[0]
    l_d, _ = orthonormalized(mats)
    lam_min = np.linalg.eigvalsh(l_d)[0]
    rep = resolvent_bound_check(mats, 0.0, 0.5)
    assert rep.norm == pytest.approx(1 / (max(lam_min, 0.0) + 0.5), rel=1e-8)
    assert rep.passed and rep.norm <= 2.0 + 1e-10
    beta = coriolis_bound(mats)
    assert resolvent_bound_check(mats, 1.0, 2 * beta).passed
    assert resolvent_bound_check(mats, 1.0, 2 * beta, skew=True).passed
    rest = resolvent_bound_check(pencil_rest[0], 1.0, 0.7)
    assert rest.beta == 0.0 and rest.norm == pytest.approx(1 / 0.7, rel=1e-8)
    with pytest.raises(PreconditionError):
        resolvent_bound_check(mats, 1.0, 0.5 * beta)


def test_phase_reality_examples(pencil_m0, pencil_m1, spectrum_rest, spectrum_m1):
    eye = PencilMatrices(np.eye(2), np.zeros((2, 2)), np.eye(2))
    assert phase_reality_test(np.array([0.3, -1.2]), eye)
    assert phase_reality_test(np.exp(0.7j) * np.array([0.3, -1.2]), eye)
    assert not phase_reality_test(np.array([1.0, 1j]) / np.sqrt(2), eye)
    with pytest.raises(DomainError):
        phase_reality_test(np.zeros(2), eye)
    rot0 = solve_pencil(pencil_m0[0])
    for res, mats in ((rot0, pencil_m0[0]), (spectrum_m1, pencil_m1[0])):
        for k in res.nonzero()[::9]:
            assert not phase_reality_test(res.vectors[:, k], mats)
