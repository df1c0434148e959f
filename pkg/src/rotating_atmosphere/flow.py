"""Flow maps of velocity fields and the Lagrangian form of mass conservation.

The position ``phi(t, xbar)`` and its Jacobian ``Dphi`` are advanced together
by classical RK4 on

    dx/dt = v(t, x),    d(Dphi)/dt = Dv(t, x) @ Dphi.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, EscapeError, NoContractionError, NumericError, SingularFlowError

DEFAULT_DT = 1e-3


@dataclass(frozen=True)
class VelocityField:
    name: str
    velocity: Callable  # (t, x) -> (3,)
    jacobian: Callable  # (t, x) -> (3, 3), d v^i / d x^j
    region: Optional[Callable] = None  # x -> bool, where the field may be evaluated
    params: dict = field(default_factory=dict)

    def divergence(self, t, x):
        return float(np.trace(self.jacobian(t, x)))


def rigid_rotation(omega0=1.0):
    k = np.array([[0.0, -omega0, 0.0], [omega0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    return VelocityField("rigid", lambda t, x: k @ x, lambda t, x: k, params={"omega0": omega0})


def radial_field(rate=1.0):
    eye = rate * np.eye(3)
    return VelocityField("radial", lambda t, x: rate * np.asarray(x, dtype=float),
                         lambda t, x: eye, params={"rate": rate})


def zero_field():
    z = np.zeros((3, 3))
    return VelocityField("zero", lambda t, x: np.zeros(3), lambda t, x: z)


def profile_field(omega_of_varpi, d_omega=None, h=1e-6):
    """Differential rotation ``v = omega(varpi) e_z x x``, tangential to every sphere."""
    if d_omega is None:
        d_omega = lambda w: (omega_of_varpi(w + h) - omega_of_varpi(w - h)) / (2 * h)

    def vel(t, x):
        w = np.hypot(x[0], x[1])
        om = omega_of_varpi(w)
        return np.array([-om * x[1], om * x[0], 0.0])

    def jac(t, x):
        w = np.hypot(x[0], x[1])
        om = omega_of_varpi(w)
        dom = d_omega(w)
        grad_w = np.array([x[0], x[1], 0.0]) / w if w > 0 else np.zeros(3)
        out = np.outer([-x[1], x[0], 0.0], dom * grad_w)
        out[0, 1] -= om
        out[1, 0] += om
        return out

    return VelocityField("custom-profile", vel, jac)


def polynomial_field(coef=0.1):
    """Manufactured non-linear test field with non-zero divergence."""

    def vel(t, x):
        a, b, c = x
        return coef * np.array([a * b, b * b - c, a * c + t * a])

    def jac(t, x):
        a, b, c = x
        return coef * np.array([[b, a, 0.0], [0.0, 2 * b, -1.0], [c + t, 0.0, a]])

    return VelocityField("polynomial", vel, jac, params={"coef": coef})


FIELD_REGISTRY = {
    "rigid": rigid_rotation,
    "radial": radial_field,
    "custom-profile": profile_field,
    "zero": zero_field,
    "polynomial": polynomial_field,
}


@dataclass
class FlowResult:
    times: np.ndarray
    points: np.ndarray  # (n+1, 3)
    jacobians: np.ndarray  # (n+1, 3, 3)
    dets: np.ndarray
    dt: float
    integrator: str = "rk4"

    @property
    def final_point(self):
        return self.points[-1]

    @property
    def final_jacobian(self):
        return self.jacobians[-1]


def _rhs(v, t, x, m):
    return v.velocity(t, x), v.jacobian(t, x) @ m


def _check_region(v, t, x):
    if not np.all(np.isfinite(x)) or (v.region is not None and not v.region(x)):
        raise EscapeError("trajectory left the evaluable region", time=t)


def integrate_flow(v: VelocityField, x_bar, t_final, dt=DEFAULT_DT):
    """RK4 for the point and its Jacobian; lands exactly on ``t_final``."""
    if dt <= 0:
        raise DomainError("dt must be positive", dt=dt)
    if t_final < 0:
        raise DomainError("t_final must be non-negative", t_final=t_final)
    x = np.array(x_bar, dtype=float)
    m = np.eye(3)
    n = int(np.ceil(t_final / dt - 1e-12)) if t_final > 0 else 0
    h = t_final / n if n else 0.0
    times = np.linspace(0.0, t_final, n + 1)
    pts = np.empty((n + 1, 3))
    jacs = np.empty((n + 1, 3, 3))
    dets = np.empty(n + 1)
    pts[0], jacs[0], dets[0] = x, m, 1.0
    _check_region(v, 0.0, x)
    for k in range(n):
        t = times[k]
        k1x, k1m = _rhs(v, t, x, m)
        k2x, k2m = _rhs(v, t + h / 2, x + h / 2 * k1x, m + h / 2 * k1m)
        k3x, k3m = _rhs(v, t + h / 2, x + h / 2 * k2x, m + h / 2 * k2m)
        k4x, k4m = _rhs(v, t + h, x + h * k3x, m + h * k3m)
        x = x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        m = m + h / 6 * (k1m + 2 * k2m + 2 * k3m + k4m)
        _check_region(v, times[k + 1], x)
        d = np.linalg.det(m)
        if not d > 0:
            raise SingularFlowError("Jacobian determinant not positive", time=times[k + 1], det=d)
        pts[k + 1], jacs[k + 1], dets[k + 1] = x, m, d
    return FlowResult(times, pts, jacs, dets, h if n else dt)


def lagrangian_upsilon(upsilon0, det_dphi, gamma):
    """Transported enthalpy ``upsilon0 * det(Dphi)^-(gamma - 1)``."""
    det_dphi = np.asarray(det_dphi, dtype=float)
    if np.any(det_dphi <= 0):
        raise SingularFlowError("non-positive Jacobian determinant", det=np.min(det_dphi))
    out = np.asarray(upsilon0, dtype=float) * det_dphi ** (-(gamma - 1.0))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class FlowMap:
    """``xbar -> phi(t, xbar)`` at a fixed time, with its Jacobian."""

    v: VelocityField
    t: float
    dt: float = DEFAULT_DT

    def evaluate(self, x_bar):
        if self.t == 0:
            return np.array(x_bar, dtype=float), np.eye(3)
        res = integrate_flow(self.v, x_bar, self.t, self.dt)
        return res.final_point, res.final_jacobian

    def __call__(self, x_bar):
        return self.evaluate(x_bar)[0]


def spectral_norm(mat, iters=50, seed=0):
    """Largest singular value by power iteration on ``M^T M``."""
    mat = np.asarray(mat, dtype=float)
    gram = mat.T @ mat
    vec = np.random.default_rng(seed).standard_normal(mat.shape[1])
    nrm = 0.0
    for _ in range(iters):
        w = gram @ vec
        wn = np.linalg.norm(w)
        if wn == 0:
            return 0.0
        vec = w / wn
        nrm = wn
    return float(np.sqrt(nrm))


@dataclass
class InverseResult:
    x_bar: np.ndarray
    iterations: int
    residual: float
    lipschitz: float


def inverse_flow(phi: FlowMap, x, region=None, tol=1e-10, max_iter=200, threshold=0.5):
    """Solve ``phi(xbar) = x`` by the fixed point ``xbar <- x + xbar - phi(xbar)``.

    The contraction constant is estimated as ``|I - Dphi|_2`` at the target and
    at any extra ``region`` sample points; it must not exceed ``threshold``.
    """
    x = np.asarray(x, dtype=float)
    probes = [x] + ([np.asarray(p, dtype=float) for p in region] if region is not None else [])
    lip = 0.0
    for p in probes:
        _, jac = phi.evaluate(p)
        lip = max(lip, spectral_norm(np.eye(3) - jac))
    if lip > threshold:
        raise NoContractionError("estimated |I - Dphi| exceeds the contraction threshold",
                                 lipschitz=lip, threshold=threshold)
    x_bar = x.copy()
    img = phi(x_bar)
    res = float(np.linalg.norm(img - x))
    it = 0
    while res > tol:
        if it >= max_iter:
            raise NumericError("fixed-point iteration did not converge", residual=res, iterations=it)
        x_bar = x + x_bar - img
        img = phi(x_bar)
        res = float(np.linalg.norm(img - x))
        it += 1
    return InverseResult(x_bar, it, res, lip)


def boundary_invariance_check(v: VelocityField, seeds, t_final, r0=None, dt=DEFAULT_DT):
    """Largest ``| |phi(t, xbar)| - r0 |`` over the seeds and all time steps."""
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    if r0 is None:
        r0 = float(np.linalg.norm(seeds[0]))
    dev = 0.0
    for s in seeds:
        res = integrate_flow(v, s, t_final, dt)
        dev = max(dev, float(np.max(np.abs(np.linalg.norm(res.points, axis=1) - r0))))
    return dev
