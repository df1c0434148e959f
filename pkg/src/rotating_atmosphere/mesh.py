"""Quadrature mesh on the meridional section of the atmosphere.

Mapped coordinates ``(s, zeta)`` in ``[0, 1] x [-1, 1]`` with
``zeta = z / r`` and ``r = R0 + s * (r_b(zeta) - R0)``, where ``r_b`` is the
vacuum-boundary radius along the ray.  The volume element is
``2 pi r^2 dr dzeta = 2 pi r^2 L(zeta) ds dzeta`` with ``L = r_b - R0``.
"""
from dataclasses import dataclass

import numpy as np

from .atmosphere import StationaryState
from .errors import GeometryError
from .geometry import BoundarySurface, analyze_state


@dataclass
class CoordinateJet:
    """Mapped coordinates of physical points and their derivatives.

    ``*_w`` and ``*_z`` are first derivatives with respect to ``varpi`` and
    ``z``; ``*_ww``, ``*_wz``, ``*_zz`` the second ones.
    """

    varpi: np.ndarray
    z: np.ndarray
    s: np.ndarray
    zeta: np.ndarray
    s_w: np.ndarray
    s_z: np.ndarray
    s_ww: np.ndarray
    s_wz: np.ndarray
    s_zz: np.ndarray
    zeta_w: np.ndarray
    zeta_z: np.ndarray
    zeta_ww: np.ndarray
    zeta_wz: np.ndarray
    zeta_zz: np.ndarray
    span: np.ndarray  # L(zeta)


def coordinate_jet(surface: BoundarySurface, varpi, z):
    w = np.asarray(varpi, dtype=float)
    z = np.asarray(z, dtype=float)
    r = np.hypot(w, z)
    r2, r3, r5 = r * r, r ** 3, r ** 5
    zeta = z / r
    rb, rb1, rb2 = surface.outer_radius_jet(zeta)
    span = rb - surface.r0
    p = r - surface.r0
    inv = 1.0 / span
    inv_1 = -rb1 * inv * inv
    inv_2 = -rb2 * inv * inv + 2.0 * rb1 * rb1 * inv ** 3
    r_w, r_z = w / r, z / r
    r_ww, r_wz, r_zz = z * z / r3, -w * z / r3, w * w / r3
    zt_w, zt_z = -z * w / r3, w * w / r3
    zt_ww = -z * (r2 - 3.0 * w * w) / r5
    zt_wz = -w * (r2 - 3.0 * z * z) / r5
    zt_zz = -3.0 * w * w * z / r5
    s = p * inv
    s_w = r_w * inv + p * inv_1 * zt_w
    s_z = r_z * inv + p * inv_1 * zt_z

    def second(r_ab, ra, rb_, za, zb, z_ab):
        return r_ab * inv + ra * inv_1 * zb + rb_ * inv_1 * za + p * (inv_2 * za * zb + inv_1 * z_ab)

    return CoordinateJet(
        w, z, s, zeta, s_w, s_z,
        second(r_ww, r_w, r_w, zt_w, zt_w, zt_ww),
        second(r_wz, r_w, r_z, zt_w, zt_z, zt_wz),
        second(r_zz, r_z, r_z, zt_z, zt_z, zt_zz),
        zt_w, zt_z, zt_ww, zt_wz, zt_zz, span,
    )


def mapped_to_physical(surface, s, zeta):
    rb = surface.r_cap * surface.shape(np.asarray(zeta) ** 2)
    r = surface.r0 + np.asarray(s) * (rb - surface.r0)
    return r * np.sqrt(1.0 - np.asarray(zeta) ** 2), r * np.asarray(zeta)


def _gauss_on(breaks, order):
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def graded_breaks(n_cells, levels=3, factor=2.0):
    """Uniform breaks on [0, 1] with the last cell split geometrically toward 1."""
    br = list(np.linspace(0.0, 1.0, n_cells + 1))
    a = br[-2]
    h = 1.0 - a
    extra = []
    for _ in range(levels):
        h /= factor
        extra.append(1.0 - h)
    return np.array(br[:-1] + extra + [1.0])


@dataclass
class MeridionalMesh:
    state: StationaryState
    surface: BoundarySurface
    m: int
    n_s: int
    n_zeta: int
    order: int
    s_breaks: np.ndarray  # cell boundaries (basis knots)
    zeta_breaks: np.ndarray
    jet: CoordinateJet  # flattened node arrays
    weights: np.ndarray  # volume weights including 2 pi r^2 L
    rho: np.ndarray
    rho_w: np.ndarray
    rho_z: np.ndarray
    sigma: np.ndarray
    shape: tuple

    @property
    def varpi(self):
        return self.jet.varpi

    @property
    def z(self):
        return self.jet.z

    @property
    def n_nodes(self):
        return self.weights.size

    def volume(self):
        return float(np.sum(self.weights))

    def integrate(self, values):
        return np.sum(self.weights * values)


def build_mesh(state: StationaryState, m=0, n_s=8, n_zeta=8, order=8, grading_levels=3):
    """Tensor Gauss-Legendre mesh on the atmosphere of a strict case H state."""
    if n_s < 4 or n_zeta < 4:
        raise GeometryError("need at least 4 cells per direction", n_s=n_s, n_zeta=n_zeta)
    an = analyze_state(state)
    if an.case_label not in ("H", "H_degenerate_kappa0"):
        raise GeometryError("mesh needs a strictly admissible (case H) configuration",
                            case=an.case_label)
    surface = BoundarySurface(an, state.params.r0, state.params.r_cap)
    s_breaks = np.linspace(0.0, 1.0, n_s + 1)
    z_breaks = np.linspace(-1.0, 1.0, n_zeta + 1)
    sq, sw = _gauss_on(graded_breaks(n_s, grading_levels), order)
    zq, zw = _gauss_on(z_breaks, order)
    S, Zt = np.meshgrid(sq, zq, indexing="ij")
    WS, WZ = np.meshgrid(sw, zw, indexing="ij")
    S, Zt, WS, WZ = S.ravel(), Zt.ravel(), WS.ravel(), WZ.ravel()
    rb = surface.r_cap * surface.shape(Zt * Zt)
    r = surface.r0 + S * (rb - surface.r0)
    varpi = r * np.sqrt(1.0 - Zt * Zt)
    z = r * Zt
    jet = coordinate_jet(surface, varpi, z)
    weights = 2.0 * np.pi * r * r * jet.span * WS * WZ
    rho, rho_w, rho_z = state.rho_and_grad(varpi, z)
    if np.any(rho <= 0):
        raise GeometryError("quadrature node outside the atmosphere", count=int(np.sum(rho <= 0)))
    p = state.params
    sigma = p.a_const * p.gamma * rho ** (p.gamma - 2.0)
    return MeridionalMesh(state, surface, int(m), n_s, n_zeta, order, s_breaks, z_breaks, jet,
                          weights, rho, rho_w, rho_z, sigma, (sq.size, zq.size))
