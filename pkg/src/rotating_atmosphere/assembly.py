"""Galerkin matrices of the linearised wave equation.

For trial fields ``Xi_j`` the entries are

    A[i, j] = int rho Xi_j . conj(Xi_i)
    B[i, j] = 2 Omega int rho (Jstar Xi_j) . conj(Xi_i),   Jstar xi = i (-xi_phi, xi_varpi, 0)
    C[i, j] = int sigma g_j conj(g_i),                       g = div(rho Xi)

so that ``c^H A c`` is the weighted norm of ``sum_j c_j Xi_j``.  The time
harmonic ansatz ``exp(i s t)`` turns the wave equation into
``(-s^2 A + s B + C) c = 0``.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .atmosphere import StationaryState
from .basis import BasisSet, basis_fields
from .errors import DegenerateBasisError, DomainError
from .mesh import MeridionalMesh, build_mesh

RANK_TOL = 1e-12


@dataclass
class PencilMatrices:
    a_mass: np.ndarray
    b_coriolis: np.ndarray
    c_stiffness: np.ndarray
    omega: float = 0.0
    m: int = 0
    a_bilinear: Optional[np.ndarray] = None  # int rho Xi_i . Xi_j over the full azimuth
    families: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def size(self):
        return self.a_mass.shape[0]

    def subset(self, idx):
        idx = np.asarray(idx)
        sub = lambda a: None if a is None else a[np.ix_(idx, idx)]
        return PencilMatrices(sub(self.a_mass), sub(self.b_coriolis), sub(self.c_stiffness),
                              self.omega, self.m, sub(self.a_bilinear),
                              None if self.families is None else self.families[idx], dict(self.meta))


def _hermitian(mat):
    return 0.5 * (mat + mat.conj().T)


def _gram(x, weight, y=None):
    y = x if y is None else y
    return x.conj().T @ (weight[:, None] * y)


def assemble_mass(mesh: MeridionalMesh, basis: BasisSet, check=True):
    wr = mesh.weights * mesh.rho
    a = sum(_gram(basis.xi[c], wr) for c in range(3))
    a = _hermitian(a)
    if check:
        ev = np.linalg.eigvalsh(a)
        if ev[0] < RANK_TOL * ev[-1]:
            raise DegenerateBasisError("mass matrix is numerically singular",
                                       min_eig=ev[0], max_eig=ev[-1])
    return a


def assemble_bilinear(mesh: MeridionalMesh, basis: BasisSet):
    """Non-conjugated Gram matrix; vanishes identically for ``m != 0``."""
    n = len(basis)
    if mesh.m != 0:
        return np.zeros((n, n))
    wr = mesh.weights * mesh.rho
    out = sum(basis.xi[c].T @ (wr[:, None] * basis.xi[c]) for c in range(3))
    return 0.5 * (out + out.T)


def assemble_coriolis(mesh: MeridionalMesh, basis: BasisSet, omega):
    n = len(basis)
    if omega == 0:
        return np.zeros((n, n), dtype=complex)
    wr = mesh.weights * mesh.rho
    xw, xp = basis.xi[0], basis.xi[1]
    b = 2.0 * omega * 1j * (_gram(xp, wr, xw) - _gram(xw, wr, xp))
    return _hermitian(b)


def assemble_stiffness(mesh: MeridionalMesh, basis: BasisSet, state: StationaryState = None):
    ws = mesh.weights * mesh.sigma
    if not np.all(np.isfinite(ws)):
        bad = np.flatnonzero(~np.isfinite(ws))
        raise DomainError("stiffness weight not finite at quadrature nodes", count=bad.size)
    return _hermitian(_gram(basis.g, ws))


def _real_if_close(mat, tol=1e-14):
    scale = max(np.max(np.abs(mat)), 1e-300)
    if np.max(np.abs(np.imag(mat))) <= tol * scale:
        return np.real(mat).copy()
    return mat


def assemble_pencil(state: StationaryState, m=0, n_s=8, n_zeta=8, family="mixed", order=8,
                    grading_levels=3):
    """Mesh, basis and the three matrices in one call."""
    mesh = build_mesh(state, m, n_s, n_zeta, order, grading_levels)
    basis = basis_fields(mesh, family)
    a = assemble_mass(mesh, basis)
    b = assemble_coriolis(mesh, basis, state.params.omega)
    c = assemble_stiffness(mesh, basis, state)
    mats = PencilMatrices(
        _real_if_close(a), b if np.any(b) else np.zeros_like(np.real(b)), _real_if_close(c),
        omega=state.params.omega, m=m,
        a_bilinear=assemble_bilinear(mesh, basis), families=basis.families,
        meta={"m": m, "n_s": n_s, "n_zeta": n_zeta, "order": order, "family": family,
              "grading_levels": grading_levels, "size": len(basis), **basis.counts()},
    )
    return mats, mesh, basis


class DisplacementField:
    """Displacement given by cylindrical components and their divergence."""

    def evaluate(self, varpi, z):
        """Return ``(xi, div_xi)`` with ``xi`` of shape ``(3, n)``."""
        raise NotImplementedError

    def flux_divergence(self, varpi, z, state):
        xi, div = self.evaluate(varpi, z)
        rho, rw, rz = state.rho_and_grad(varpi, z)
        return rho * div + rw * xi[0] + rz * xi[2]


class ConstantField(DisplacementField):
    """Constant cylindrical components, e.g. ``(0, 0, eps)`` for ``eps e_z``."""

    def __init__(self, components):
        self.components = np.asarray(components, dtype=complex)
        if self.components[0] != 0 or self.components[1] != 0:
            raise ValueError("only constant axial fields are divergence free in these components")

    def evaluate(self, varpi, z):
        varpi = np.atleast_1d(np.asarray(varpi, dtype=float))
        xi = np.repeat(self.components[:, None], varpi.size, axis=1)
        return xi, np.zeros(varpi.size, dtype=complex)


class CallableField(DisplacementField):
    def __init__(self, func):
        self.func = func

    def evaluate(self, varpi, z):
        xi, div = self.func(np.atleast_1d(varpi), np.atleast_1d(z))
        return np.asarray(xi, dtype=complex), np.asarray(div, dtype=complex)


class BasisCombination(DisplacementField):
    """``sum_j c_j Xi_j`` for coefficients on a basis set."""

    def __init__(self, basis: BasisSet, coeffs, scale=1.0):
        self.basis = basis
        self.coeffs = scale * np.asarray(coeffs, dtype=complex)

    def _fields(self, varpi, z):
        xi, g = self.basis.evaluate(np.atleast_1d(varpi), np.atleast_1d(z))
        return np.einsum("cpn,n->cp", xi, self.coeffs), g @ self.coeffs

    def evaluate(self, varpi, z):
        xi, g = self._fields(varpi, z)
        rho, rw, rz = self.basis.mesh.state.rho_and_grad(np.atleast_1d(varpi), np.atleast_1d(z))
        return xi, (g - rw * xi[0] - rz * xi[2]) / rho

    def flux_divergence(self, varpi, z, state):
        return self._fields(varpi, z)[1]


def _inside(state, varpi, z):
    varpi = np.atleast_1d(np.asarray(varpi, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    r = np.hypot(varpi, z)
    if np.any(r <= state.params.r0):
        raise DomainError("point inside the sphere", r=np.min(r))
    u = state.upsilon(varpi, z)
    if np.any(u <= 0):
        raise DomainError("point outside the atmosphere", upsilon=np.min(u))
    return varpi, z, u


def initial_upsilon_from_displacement(xi0: DisplacementField, state: StationaryState):
    """Evaluator of ``U - (gamma - 1) U div(xi0) - grad(U) . xi0`` with ``U`` the background enthalpy."""
    gam = state.params.gamma

    def upsilon0(varpi, z):
        varpi = np.atleast_1d(np.asarray(varpi, dtype=float))
        z = np.atleast_1d(np.asarray(z, dtype=float))
        u = state.upsilon(varpi, z)
        uw, uz = state.grad_upsilon(varpi, z)
        xi, div = xi0.evaluate(varpi, z)
        out = u - (gam - 1.0) * u * div - (uw * xi[0] + uz * xi[2])
        return np.real_if_close(out, tol=1)

    return upsilon0


def linearized_force(xi: DisplacementField, state: StationaryState):
    """Evaluator of ``G = -sigma div(rho xi)``; the force on the perturbation is ``grad G``."""
    p = state.params

    def force(varpi, z):
        varpi, z, _ = _inside(state, varpi, z)
        sigma = p.a_const * p.gamma * np.asarray(state.rho(varpi, z)) ** (p.gamma - 2.0)
        return -sigma * xi.flux_divergence(varpi, z, state)

    return force
