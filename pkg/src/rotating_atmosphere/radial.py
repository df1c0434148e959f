"""Radial eigenproblem of the non-rotating atmosphere.

With ``w = sigma * h`` the operator ``-div(rho grad(sigma g))`` on
``g = h(r) Y_lm`` becomes

    -(r^2 rho w')' + l(l+1) rho w = lam r^2 w / sigma,   R0 < r < R,

with ``w'(R0) = 0`` (no normal displacement on the sphere) and no condition at
``r = R`` where ``r^2 rho`` vanishes.  Cell-centred finite volumes on a grid
graded toward ``R`` give a symmetric definite pair.
"""
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .atmosphere import PhysicalParams, rho_of_upsilon
from .errors import DomainError, NumericError


def static_rho(r, params: PhysicalParams):
    u = params.gm0 * (1.0 / np.asarray(r) - 1.0 / params.r_cap)
    return rho_of_upsilon(u, params)


def graded_faces(params, n_r, power=2.0):
    t = np.linspace(0.0, 1.0, n_r + 1)
    return params.r0 + (params.r_cap - params.r0) * (1.0 - (1.0 - t) ** power)


@dataclass
class RadialSpectrum:
    eigenvalues: np.ndarray
    centers: np.ndarray
    functions: np.ndarray  # columns are h = w / sigma at the cell centres
    l: int


def radial_sturm_liouville(params: PhysicalParams, l=0, n_r=256, n_eig=None, power=2.0):
    """Sorted positive eigenvalues of the radial operator for degree ``l``.

    For ``l = 0`` the constant ``w`` (zero eigenvalue) is removed by restricting
    to ``int h r^2 dr = 0``.
    """
    if params.omega != 0:
        raise DomainError("the radial reduction needs Omega = 0", omega=params.omega)
    if l < 0 or n_r < 32:
        raise DomainError("need l >= 0 and n_r >= 32", l=l, n_r=n_r)
    faces = graded_faces(params, n_r, power)
    centers = 0.5 * (faces[1:] + faces[:-1])
    widths = np.diff(faces)
    rho_c = static_rho(centers, params)
    sigma_c = params.a_const * params.gamma * rho_c ** (params.gamma - 2.0)
    p_face = faces ** 2 * static_rho(faces, params)  # zero at r = R
    # interior faces only: zero flux at R0 (Neumann) and at R (degenerate)
    flux = p_face[1:-1] / np.diff(centers)
    k = np.zeros((n_r, n_r))
    i = np.arange(n_r - 1)
    k[i, i] += flux
    k[i + 1, i + 1] += flux
    k[i, i + 1] -= flux
    k[i + 1, i] -= flux
    k[np.arange(n_r), np.arange(n_r)] += l * (l + 1) * rho_c * widths
    mass = centers ** 2 * widths / sigma_c
    if l == 0:
        # orthogonal complement of the constant in the mass inner product
        basis = linalg.null_space(mass[None, :])
        kk = basis.T @ k @ basis
        mm = basis.T @ (mass[:, None] * basis)
    else:
        basis = None
        kk, mm = k, np.diag(mass)
    try:
        ev, vec = linalg.eigh(kk, mm)
    except linalg.LinAlgError as exc:
        raise NumericError("symmetric eigensolve failed") from exc
    if basis is not None:
        vec = basis @ vec
    if n_eig is not None:
        ev, vec = ev[:n_eig], vec[:, :n_eig]
    return RadialSpectrum(ev, centers, vec / sigma_c[:, None], l)


def combined_spectrum(params, l_max=6, n_r=256, per_l=6):
    """Eigenvalues over degrees ``0..l_max`` as ``(value, l, n)`` sorted by value."""
    rows = []
    for l in range(l_max + 1):
        sp = radial_sturm_liouville(params, l, n_r, n_eig=per_l)
        rows += [(float(v), l, n) for n, v in enumerate(sp.eigenvalues)]
    return sorted(rows)
