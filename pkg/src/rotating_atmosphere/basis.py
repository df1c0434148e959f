"""Trial displacement fields for one azimuthal wavenumber ``m``.

Two families, both built from tensor cubic B-splines in the mapped
coordinates ``(s, zeta)``:

* ``gradient``: ``xi = grad(chi)`` with ``d chi / ds = 0`` on the sphere, so the
  normal component vanishes there.
* ``kernel``: ``xi = curl(a) / rho`` with ``a`` vanishing on the sphere and
  supported away from the vacuum boundary, hence ``div(rho xi) = 0``.

Fields carry the factor ``exp(i m phi)`` and are stored in cylindrical
components ``(varpi, phi, z)``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

from .mesh import MeridionalMesh, coordinate_jet

DEGREE = 3
FAMILIES = ("gradient", "kernel", "mixed")


def clamped_knots(breaks, k=DEGREE):
    return np.concatenate([[breaks[0]] * k, breaks, [breaks[-1]] * k])


def spline_design(breaks, x, k=DEGREE):
    """Values, first and second derivatives of every B-spline at ``x``."""
    t = clamped_knots(breaks, k)
    n = len(t) - k - 1
    b = BSpline(t, np.eye(n), k, extrapolate=True)
    x = np.asarray(x, dtype=float)
    return b(x), b.derivative(1)(x), b.derivative(2)(x)


@dataclass(frozen=True)
class BasisField:
    index: int
    family: str  # "gradient" or "kernel"
    kind: str  # "grad", "curl_phi" (a = varpi psi e_phi) or "curl_z" (a = psi e_z)
    s_coef: tuple  # coefficients on the s-splines
    zeta_index: int

    def label(self):
        return f"{self.kind}[{self.s_coef}x{self.zeta_index}]"


@dataclass
class ScalarJet:
    v: np.ndarray
    w: np.ndarray
    z: np.ndarray
    ww: np.ndarray
    wz: np.ndarray
    zz: np.ndarray


def _physical_jet(jet, p, ps, pz, pss, psz, pzz):
    """Chain rule from ``(s, zeta)`` derivatives to ``(varpi, z)`` derivatives."""
    c = lambda a: a[:, None]
    sw, sz, tw, tz = c(jet.s_w), c(jet.s_z), c(jet.zeta_w), c(jet.zeta_z)
    d_w = ps * sw + pz * tw
    d_z = ps * sz + pz * tz
    d_ww = pss * sw * sw + 2 * psz * sw * tw + pzz * tw * tw + ps * c(jet.s_ww) + pz * c(jet.zeta_ww)
    d_wz = (pss * sw * sz + psz * (sw * tz + sz * tw) + pzz * tw * tz
            + ps * c(jet.s_wz) + pz * c(jet.zeta_wz))
    d_zz = pss * sz * sz + 2 * psz * sz * tz + pzz * tz * tz + ps * c(jet.s_zz) + pz * c(jet.zeta_zz)
    return ScalarJet(p, d_w, d_z, d_ww, d_wz, d_zz)


def curl_with_divergence(m, varpi, a_w, a_phi, a_z):
    """``q = curl(a exp(i m phi))`` in cylindrical components and ``div q``.

    The divergence is assembled term by term from the derivatives of ``q``, so
    it vanishes only up to rounding.
    """
    im = 1j * m
    w = varpi[:, None]
    q_w = im * a_z.v / w - a_phi.z
    q_phi = a_w.z - a_z.w
    q_z = a_phi.v / w + a_phi.w - im * a_w.v / w
    dq_w_dw = im * (a_z.w / w - a_z.v / (w * w)) - a_phi.wz
    dq_z_dz = a_phi.z / w + a_phi.wz - im * a_w.z / w
    div = q_w / w + dq_w_dw + im * q_phi / w + dq_z_dz
    return (q_w, q_phi, q_z), div


class BasisSet:
    """Basis fields with their values on the mesh nodes.

    Attributes
    ----------
    xi : complex array (3, n_nodes, N), cylindrical components
    g : complex array (n_nodes, N), ``div(rho xi)``
    """

    def __init__(self, mesh: MeridionalMesh, fields):
        self.mesh = mesh
        self.fields = list(fields)
        self.m = mesh.m
        self.xi, self.g = self.evaluate_jet(mesh.jet, mesh.rho, mesh.rho_w, mesh.rho_z)

    def __len__(self):
        return len(self.fields)

    @property
    def families(self):
        return np.array([f.family for f in self.fields])

    def counts(self):
        fam = self.families
        return {k: int(np.sum(fam == k)) for k in ("gradient", "kernel")}

    def indices(self, family):
        return np.flatnonzero(self.families == family)

    def _scalar_jets(self, jet, fields):
        sv, s1, s2 = spline_design(self.mesh.s_breaks, jet.s)
        zv, z1, z2 = spline_design(self.mesh.zeta_breaks, jet.zeta)
        ns = sv.shape[1]
        coef = np.zeros((ns, len(fields)))
        zsel = np.array([f.zeta_index for f in fields], dtype=int)
        for j, f in enumerate(fields):
            coef[: len(f.s_coef), j] = f.s_coef
        S0, S1, S2 = sv @ coef, s1 @ coef, s2 @ coef
        Z0, Z1, Z2 = zv[:, zsel], z1[:, zsel], z2[:, zsel]
        return _physical_jet(jet, S0 * Z0, S1 * Z0, S0 * Z1, S2 * Z0, S1 * Z1, S0 * Z2)

    def evaluate_jet(self, jet, rho, rho_w, rho_z):
        m = self.m
        npts = jet.s.size
        n = len(self.fields)
        xi = np.zeros((3, npts, n), dtype=complex)
        g = np.zeros((npts, n), dtype=complex)
        w = jet.varpi[:, None]
        kinds = np.array([f.kind for f in self.fields])
        for kind in ("grad", "curl_phi", "curl_z"):
            cols = np.flatnonzero(kinds == kind)
            if cols.size == 0:
                continue
            p = self._scalar_jets(jet, [self.fields[c] for c in cols])
            if kind == "grad":
                lap = p.ww + p.w / w + p.zz - m * m * p.v / (w * w)
                xi[0][:, cols] = p.w
                xi[1][:, cols] = 1j * m * p.v / w
                xi[2][:, cols] = p.z
                g[:, cols] = rho[:, None] * lap + rho_w[:, None] * p.w + rho_z[:, None] * p.z
                continue
            nil = ScalarJet(*(np.zeros_like(p.v) for _ in range(6)))
            if kind == "curl_phi":
                # a_phi = varpi * psi keeps the potential regular on the axis
                a_phi = ScalarJet(w * p.v, p.v + w * p.w, w * p.z,
                                  2 * p.w + w * p.ww, p.z + w * p.wz, w * p.zz)
                q, div = curl_with_divergence(m, jet.varpi, nil, a_phi, nil)
            else:
                q, div = curl_with_divergence(m, jet.varpi, nil, nil, p)
            for c in range(3):
                xi[c][:, cols] = q[c] / rho[:, None]
            g[:, cols] = div
        return xi, g

    def evaluate(self, varpi, z):
        """Fields and ``div(rho xi)`` at arbitrary points of the atmosphere."""
        jet = coordinate_jet(self.mesh.surface, varpi, z)
        rho, rho_w, rho_z = self.mesh.state.rho_and_grad(jet.varpi, jet.z)
        return self.evaluate_jet(jet, np.asarray(rho), np.asarray(rho_w), np.asarray(rho_z))


def _n_splines(breaks):
    return len(breaks) + DEGREE - 1


def basis_fields(mesh: MeridionalMesh, family="mixed"):
    """Build the trial space on the mesh knots.

    ``family`` is ``"gradient"``, ``"kernel"`` or ``"mixed"`` (both).
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    ns = _n_splines(mesh.s_breaks)
    nz = _n_splines(mesh.zeta_breaks)
    m = mesh.m
    # away from the axis unless m = 0
    zeta_idx = range(nz) if m == 0 else range(2, nz - 2)
    fields = []

    def add(fam, kind, coef, j):
        fields.append(BasisField(len(fields), fam, kind, tuple(coef), j))

    if family in ("gradient", "mixed"):
        s_coefs = [[1.0, 1.0]] + [[0.0] * i + [1.0] for i in range(2, ns)]
        for ci, coef in enumerate(s_coefs):
            for j in zeta_idx:
                if m == 0 and ci == 0 and j == 0:
                    continue  # drop one function so constants are not in the span
                add("gradient", "grad", coef, j)
    if family in ("kernel", "mixed"):
        # potentials vanish on the sphere (i >= 1) and stop one cell short of s = 1
        for kind in ("curl_phi", "curl_z"):
            for i in range(1, ns - 4):
                for j in zeta_idx:
                    add("kernel", kind, [0.0] * i + [1.0], j)
    return BasisSet(mesh, fields)
