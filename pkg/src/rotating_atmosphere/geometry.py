"""Level-set analysis of the uniformly rotating atmosphere.

In the non-dimensional coordinates ``X = varpi / R0``, ``Z = z / R0`` the static
enthalpy is ``(GM / R0) * (F - lam)`` with ``F = 1/sqrt(X^2 + Z^2) + kappa X^2``
and ``lam = R0 / R``.  On the equator ``Q = X^2`` the condition ``F = lam``
reduces to the cubic ``g(Q) = 0``.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .atmosphere import StationaryState
from .errors import DomainError, GeometryError, NumericError, UnboundedDomainError

TIE_RTOL = 1e-13
ROOT_RTOL = 1e-12


def cubic_g(q, kappa, lam):
    """Value and derivative of ``g(Q) = 1 - lam^2 Q + 2 lam kappa Q^2 - kappa^2 Q^3``."""
    q = np.asarray(q, dtype=float)
    val = 1.0 - lam * lam * q + 2.0 * lam * kappa * q * q - kappa * kappa * q ** 3
    dval = (lam - kappa * q) * (3.0 * kappa * q - lam)
    if q.ndim == 0:
        return float(val), float(dval)
    return val, dval


def classify_case(kappa, lam):
    if kappa < 0 or not 0.0 < lam < 1.0:
        raise DomainError("need kappa >= 0 and 0 < lam < 1", kappa=kappa, lam=lam)
    if kappa == 0:
        return "H_degenerate_kappa0"
    lhs = lam ** 3
    rhs = 6.75 * kappa
    if abs(lhs - rhs) <= TIE_RTOL * lhs:
        return "M"
    return "H" if lhs > rhs else "L"


def _bisect(fun, lo, hi, rtol=ROOT_RTOL, maxiter=200):
    flo = fun(lo)
    fhi = fun(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise NumericError("root not bracketed", lo=lo, hi=hi)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if fm == 0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= rtol * abs(mid):
            break
    return 0.5 * (lo + hi)


def _polish(q, kappa, lam):
    val, dval = cubic_g(q, kappa, lam)
    if dval != 0:
        step = val / dval
        if abs(step) < 1e-6 * max(abs(q), 1.0):
            return q - step
    return q


@dataclass(frozen=True)
class LevelSetAnalysis:
    kappa: float
    lam: float
    case_label: str
    q_minus: Optional[float] = None
    q_plus: Optional[float] = None
    q_inf: Optional[float] = None

    @property
    def equator_x(self):
        return float(np.sqrt(self.q_minus))


def cubic_roots(kappa, lam):
    """Roots ``(Q-, Q+, Qinf)`` of the equatorial cubic."""
    case = classify_case(kappa, lam)
    if case == "L":
        raise UnboundedDomainError("no bounded component: lam^3 < 27 kappa / 4",
                                   kappa=kappa, lam=lam)
    if case == "H_degenerate_kappa0":
        return 1.0 / (lam * lam), np.inf, np.inf
    g = lambda q: cubic_g(q, kappa, lam)[0]
    q_turn = lam / (3.0 * kappa)
    q_one = lam / kappa
    hi = 2.0 * q_one
    while g(hi) >= 0:
        hi *= 2.0
        if hi > 1e300:
            raise NumericError("could not bracket the outer root", kappa=kappa, lam=lam)
    q_inf = _polish(_bisect(g, q_one, hi), kappa, lam)
    if case == "M":
        return q_turn, q_turn, q_inf
    q_minus = _polish(_bisect(g, 0.0, q_turn), kappa, lam)
    q_plus = _polish(_bisect(g, q_turn, q_one), kappa, lam)
    return q_minus, q_plus, q_inf


def analyze(kappa, lam):
    """Classify and, unless unbounded, attach the roots."""
    case = classify_case(kappa, lam)
    if case == "L":
        return LevelSetAnalysis(kappa, lam, case)
    qm, qp, qi = cubic_roots(kappa, lam)
    return LevelSetAnalysis(kappa, lam, case, qm, qp, qi)


def analyze_state(state: StationaryState):
    return analyze(state.kappa, state.lam)


def _require_h(analysis):
    if analysis.case_label not in ("H", "H_degenerate_kappa0"):
        raise GeometryError("operation needs a case H configuration", case=analysis.case_label)


def root_estimates_check(analysis):
    """``sqrt(Q-) < 3 / (2 lam) < sqrt(Q+)``."""
    _require_h(analysis)
    mid = 1.5 / analysis.lam
    return bool(np.sqrt(analysis.q_minus) < mid < np.sqrt(analysis.q_plus))


def boundary_curve(x_coord, analysis):
    """Height ``Z = f(X)`` of the vacuum boundary above the equatorial plane."""
    _require_h(analysis)
    x = np.asarray(x_coord, dtype=float)
    xmax = analysis.equator_x
    if np.any(x < 0) or np.any(x > xmax * (1 + 1e-14)):
        raise DomainError("X outside [0, sqrt(Q-)]", x=np.max(x), xmax=xmax)
    q = np.minimum(x * x, analysis.q_minus)
    val, _ = cubic_g(q, analysis.kappa, analysis.lam)
    out = np.sqrt(np.maximum(val, 0.0)) / (analysis.lam - analysis.kappa * q)
    return out if out.ndim else float(out)


def boundary_slope(x_coord, analysis):
    """``Df(X)`` on the open interval ``0 < X < sqrt(Q-)``, from the closed form of ``f``."""
    _require_h(analysis)
    x = np.asarray(x_coord, dtype=float)
    if np.any(x <= 0) or np.any(x >= analysis.equator_x):
        raise DomainError("X outside (0, sqrt(Q-))", x=np.max(x), xmax=analysis.equator_x)
    k, lam = analysis.kappa, analysis.lam
    q = x * x
    root = np.sqrt(cubic_g(q, k, lam)[0])
    den = lam - k * q
    out = x * ((3.0 * k * q - lam) / root + 2.0 * k * root / (den * den))
    return out if out.ndim else float(out)


def level_function(x, z, kappa):
    """``F(X^2, Z^2; kappa)`` in non-dimensional coordinates."""
    return 1.0 / np.hypot(x, z) + kappa * x * x


def shape_map(zeta_sq, analysis, n_iter=80):
    """``H(zeta^2)``: boundary radius along the ray ``z / r = zeta`` divided by ``R``.

    Vectorised bisection on ``rho = r / R0`` between the sphere and the equatorial
    radius, which brackets the inner root on every ray in case H.
    """
    _require_h(analysis)
    u = np.asarray(zeta_sq, dtype=float)
    if np.any(u < 0) or np.any(u > 1):
        raise DomainError("zeta^2 outside [0, 1]")
    k, lam = analysis.kappa, analysis.lam
    s2 = 1.0 - u
    fun = lambda rho: 1.0 / rho + k * rho * rho * s2 - lam
    lo = np.ones_like(u)
    hi = np.full_like(u, analysis.equator_x * (1.0 + 1e-12))
    if np.any(fun(lo) <= 0) or np.any(fun(hi) > 1e-12):
        raise NumericError("no bracketing root for the shape map")
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        pos = fun(mid) > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    rho = 0.5 * (lo + hi)
    out = rho * lam  # r / R = (r / R0) * (R0 / R)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BoundarySurface:
    """Inner vacuum boundary in physical units."""

    analysis: LevelSetAnalysis
    r0: float
    r_cap: float

    @classmethod
    def from_state(cls, state):
        an = analyze_state(state)
        _require_h(an)
        return cls(an, state.params.r0, state.params.r_cap)

    def curve(self, x_coord):
        return boundary_curve(x_coord, self.analysis)

    def shape(self, zeta_sq):
        return shape_map(zeta_sq, self.analysis)

    def outer_radius_jet(self, zeta):
        """Boundary radius ``r_b(zeta)`` with first and second ``zeta`` derivatives.

        Derivatives follow from implicit differentiation of
        ``R0/r + kappa r^2 (1 - u) / R0^2 = lam`` with ``u = zeta^2``.
        """
        zeta = np.asarray(zeta, dtype=float)
        u = zeta * zeta
        r = self.r_cap * shape_map(u, self.analysis)
        k, r0 = self.analysis.kappa, self.r0
        g_r = -r0 / r ** 2 + 2.0 * k * r * (1.0 - u) / r0 ** 2
        g_u = -k * r * r / r0 ** 2
        g_ur = -2.0 * k * r / r0 ** 2
        g_rr = 2.0 * r0 / r ** 3 + 2.0 * k * (1.0 - u) / r0 ** 2
        r_u = -g_u / g_r
        r_uu = -(2.0 * g_ur * r_u + g_rr * r_u * r_u) / g_r
        return r, 2.0 * zeta * r_u, 2.0 * r_u + 4.0 * u * r_uu


def domain_contains(x, state: StationaryState):
    """Membership in the bounded atmosphere: ``r > R0``, ``varpi < 3R/2`` and positive enthalpy."""
    x = np.asarray(x, dtype=float)
    w = np.hypot(x[..., 0], x[..., 1])
    z = x[..., 2]
    r = np.hypot(w, z)
    inside = (r > state.params.r0) & (w < 1.5 * state.params.r_cap)
    out = np.zeros(np.shape(r), dtype=bool)
    if np.any(inside):
        out[inside] = np.asarray(state.upsilon(np.asarray(w)[inside], np.asarray(z)[inside])) > 0
    return bool(out) if out.ndim == 0 else out


def vacuum_normal_sign(point, state: StationaryState, tol=1e-8):
    """``grad(upsilon) . n`` at a point of the vacuum boundary.

    ``point`` is ``(varpi, z)`` in physical units.  The normal is the unit
    level-set gradient, oriented to point away from the sphere.
    """
    w, z = float(point[0]), float(point[1])
    r0 = state.params.r0
    x, zz = w / r0, z / r0
    k, lam = state.kappa, state.lam
    if abs(level_function(x, zz, k) - lam) > tol:
        raise DomainError("point is not on the vacuum boundary",
                          residual=level_function(x, zz, k) - lam)
    rho = np.hypot(x, zz)
    s2 = (x / rho) ** 2
    if k > 0 and s2 > 0 and rho ** 3 >= 1.0 / (2.0 * k * s2):
        raise DomainError("point lies on the outer component")
    gw, gz = state.grad_upsilon(w, z)
    grad = np.array([gw, gz], dtype=float)
    norm = np.linalg.norm(grad)
    if norm == 0:
        raise NumericError("vanishing enthalpy gradient on the boundary")
    n = grad / norm
    if n @ np.array([w, z]) < 0:
        n = -n
    return float(grad @ n)


def curve_normal_derivative(x_coord, analysis, gm0=1.0, r0=1.0, h=1e-6):
    """Same quantity computed from the boundary curve ``Z = f(X)`` instead.

    Uses the graph normal ``(-Df, 1) / sqrt(1 + Df^2)`` with a central
    difference for ``Df``; valid on the open interval ``0 < X < sqrt(Q-)``.
    """
    x = float(x_coord)
    f = boundary_curve(x, analysis)
    df = (boundary_curve(x + h, analysis) - boundary_curve(x - h, analysis)) / (2 * h)
    rho3 = (x * x + f * f) ** 1.5
    k = analysis.kappa
    val = (x * df - f) / rho3 - 2.0 * k * x * df
    return gm0 / r0 ** 2 * val / np.sqrt(1.0 + df * df)
