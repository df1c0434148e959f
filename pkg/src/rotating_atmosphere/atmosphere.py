"""Barotropic closure and stationary atmospheres around a rotating sphere.

Points are Cartesian triples ``(x, y, z)`` with the rotation axis along ``z``.
The evaluators on :class:`StationaryState` take cylindrical coordinates
``(varpi, z)`` because the background is axisymmetric.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericError

FOUR_27 = 4.0 / 27.0
QUAD_TOL = 1e-10


@dataclass(frozen=True)
class PhysicalParams:
    """Constants of one model instance.

    Parameters
    ----------
    gm0 : gravitational parameter of the sphere
    r0 : radius of the solid sphere
    r_cap : radius where the atmosphere ends on the rotation axis
    a_const : constant of the pressure law ``P = a_const * rho**gamma``
    gamma : adiabatic exponent, strictly between 1 and 2
    omega : angular velocity of the sphere
    """

    gm0: float = 1.0
    r0: float = 1.0
    r_cap: float = 2.0
    a_const: float = 2.0 / 7.0
    gamma: float = 1.4
    omega: float = 0.0

    def __post_init__(self):
        if not self.gm0 > 0:
            raise DomainError("gm0 must be positive", field="gm0", value=self.gm0)
        if not self.r0 > 0:
            raise DomainError("r0 must be positive", field="r0", value=self.r0)
        if not self.a_const > 0:
            raise DomainError("a_const must be positive", field="a_const", value=self.a_const)
        if not 1.0 < self.gamma < 2.0:
            raise DomainError("gamma must satisfy 1 < gamma < 2", field="gamma", value=self.gamma)

    @property
    def omega_sq(self):
        return self.omega * self.omega

    def with_omega(self, omega):
        return PhysicalParams(self.gm0, self.r0, self.r_cap, self.a_const, self.gamma, float(omega))

    def as_dict(self):
        return {
            "gm0": self.gm0, "r0": self.r0, "r_cap": self.r_cap,
            "a_const": self.a_const, "gamma": self.gamma, "omega": self.omega,
        }


def reference_params(omega=None):
    """The shipped reference model: GM=1, R0=1, R=2, gamma=1.4, A=2/7, Omega^2=0.02."""
    return PhysicalParams(1.0, 1.0, 2.0, 2.0 / 7.0, 1.4, np.sqrt(0.02) if omega is None else omega)


@dataclass(frozen=True)
class RotationProfile:
    """Differential rotation ``omega(varpi)`` superposed on the uniform rotation."""

    omega_of_varpi: Callable[[float], float]
    differentiable: bool = True
    n_samples: int = 4096

    def sup_norm(self, omega, r_cap):
        # sampled, so only an estimate of the true supremum
        w = np.linspace(0.0, 1.5 * r_cap, self.n_samples)
        vals = np.array([self.omega_of_varpi(v) for v in w], dtype=float)
        return float(np.max(np.abs(vals + omega)))


def zero_profile():
    return RotationProfile(lambda w: 0.0)


def cylindrical(x):
    x = np.asarray(x, dtype=float)
    return np.hypot(x[..., 0], x[..., 1]), x[..., 2]


def _radius_checked(x, params):
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.sum(x * x, axis=-1))
    if np.any(r <= params.r0):
        raise DomainError("point inside or on the solid sphere", r=np.min(r), r0=params.r0)
    return r


def upsilon_of_rho(rho, params):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise DomainError("negative density", rho=np.min(rho))
    g = params.gamma
    out = params.a_const * g / (g - 1.0) * rho ** (g - 1.0)
    return out if out.ndim else float(out)


def rho_of_upsilon(upsilon, params):
    g = params.gamma
    u = np.maximum(np.asarray(upsilon, dtype=float), 0.0)
    out = ((g - 1.0) / (params.a_const * g) * u) ** (1.0 / (g - 1.0))
    return out if out.ndim else float(out)


def geopotential(x, params):
    r = _radius_checked(x, params)
    w, _ = cylindrical(x)
    out = -params.gm0 / r - 0.5 * params.omega_sq * w * w
    return out if np.ndim(out) else float(out)


def static_upsilon(x, params):
    r = _radius_checked(x, params)
    w, _ = cylindrical(x)
    out = params.gm0 * (1.0 / r - 1.0 / params.r_cap) + 0.5 * params.omega_sq * w * w
    return out if np.ndim(out) else float(out)


def centrifugal_integral(varpi, params, profile=None):
    """``int_0^varpi (omega(s) + Omega)^2 s ds`` by adaptive quadrature."""
    if profile is None:
        return 0.5 * params.omega_sq * np.asarray(varpi, dtype=float) ** 2
    varpi = np.asarray(varpi, dtype=float)
    flat = np.atleast_1d(varpi).ravel()
    out = np.empty_like(flat)
    f = profile.omega_of_varpi
    om = params.omega
    for i, w in enumerate(flat):
        if w == 0.0:
            out[i] = 0.0
            continue
        val, err = integrate.quad(lambda s: (f(s) + om) ** 2 * s, 0.0, w,
                                  epsabs=QUAD_TOL, epsrel=0.0, limit=200)
        if err > QUAD_TOL:
            raise NumericError("quadrature did not converge", achieved=err, varpi=w)
        out[i] = val
    return out.reshape(varpi.shape) if varpi.ndim else float(out[0])


def rotating_upsilon(x, params, profile):
    r = _radius_checked(x, params)
    w, _ = cylindrical(x)
    out = params.gm0 * (1.0 / r - 1.0 / params.r_cap) + centrifugal_integral(w, params, profile)
    return out if np.ndim(out) else float(out)


def kappa_of(params):
    return params.omega_sq * params.r0 ** 3 / (2.0 * params.gm0)


def kappa_tilde(x_sq, params, profile):
    x_sq = np.asarray(x_sq, dtype=float)
    if np.any(x_sq <= 0):
        raise DomainError("X^2 must be positive", x_sq=np.min(x_sq))
    b = centrifugal_integral(params.r0 * np.sqrt(x_sq), params, profile)
    out = params.r0 / params.gm0 * b / x_sq
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class AdmissibilityReport:
    condition_k: bool
    value: float
    margin: float
    r1: float
    omega_max_sq: float


def check_admissibility(params, profile=None):
    """Condition for a bounded atmosphere: ``R^3 max(omega+Omega)^2 / (2 GM) < 4/27``."""
    if not params.r_cap > params.r0:
        raise DomainError("need r_cap > r0", r_cap=params.r_cap, r0=params.r0)
    if profile is None:
        value = (params.r_cap / params.r0) ** 3 * kappa_of(params)
    else:
        sup = profile.sup_norm(params.omega, params.r_cap)
        value = params.r_cap ** 3 * sup * sup / (2.0 * params.gm0)
    om2 = params.omega_sq
    r1 = np.inf if om2 == 0 else (2.0 / 3.0) * (params.gm0 / om2) ** (1.0 / 3.0)
    return AdmissibilityReport(
        condition_k=bool(value < FOUR_27),
        value=float(value),
        margin=float(FOUR_27 - value),
        r1=float(r1),
        omega_max_sq=4.0 / 9.0 * params.gm0 / params.r0 ** 3,
    )


def pole_density(params):
    if params.r_cap < params.r0:
        raise DomainError("need r_cap >= r0", r_cap=params.r_cap, r0=params.r0)
    g = params.gamma
    u = params.gm0 * (1.0 / params.r0 - 1.0 / params.r_cap)
    return float(((g - 1.0) * u / (params.a_const * g)) ** (1.0 / (g - 1.0)))


@dataclass(frozen=True)
class StationaryState:
    """Background enthalpy, density and sound-speed factor of one model."""

    params: PhysicalParams
    profile: Optional[RotationProfile] = None
    kappa: float = field(init=False)
    lam: float = field(init=False)

    def __post_init__(self):
        if not self.params.r_cap > self.params.r0:
            raise DomainError("need r_cap > r0", r_cap=self.params.r_cap, r0=self.params.r0)
        object.__setattr__(self, "kappa", kappa_of(self.params))
        object.__setattr__(self, "lam", self.params.r0 / self.params.r_cap)

    def _check(self, varpi, z):
        r = np.hypot(varpi, z)
        if np.any(r <= self.params.r0):
            raise DomainError("evaluation at r <= r0", r=np.min(r))
        return r

    def upsilon(self, varpi, z):
        varpi = np.asarray(varpi, dtype=float)
        r = self._check(varpi, z)
        p = self.params
        return p.gm0 * (1.0 / r - 1.0 / p.r_cap) + centrifugal_integral(varpi, p, self.profile)

    def grad_upsilon(self, varpi, z):
        """``(d/dvarpi, d/dz)`` of the enthalpy."""
        varpi = np.asarray(varpi, dtype=float)
        z = np.asarray(z, dtype=float)
        r = self._check(varpi, z)
        p = self.params
        if self.profile is None:
            spin2 = p.omega_sq
        else:
            f = np.vectorize(self.profile.omega_of_varpi, otypes=[float])
            spin2 = (f(varpi) + p.omega) ** 2
        r3 = r ** 3
        return -p.gm0 * varpi / r3 + spin2 * varpi, -p.gm0 * z / r3

    def rho(self, varpi, z):
        return rho_of_upsilon(self.upsilon(varpi, z), self.params)

    def sigma(self, varpi, z):
        """``d upsilon / d rho = A gamma rho^(gamma-2)``; infinite where rho vanishes."""
        p = self.params
        rho = np.asarray(self.rho(varpi, z))
        with np.errstate(divide="ignore"):
            return p.a_const * p.gamma * rho ** (p.gamma - 2.0)

    def rho_and_grad(self, varpi, z):
        """Density and its cylindrical gradient, finite up to the vacuum boundary."""
        p = self.params
        g = p.gamma
        u = np.maximum(self.upsilon(varpi, z), 0.0)
        du_w, du_z = self.grad_upsilon(varpi, z)
        rho = rho_of_upsilon(u, p)
        # d rho / d upsilon = rho^(2-gamma) / (A gamma)
        drho = np.asarray(rho) ** (2.0 - g) / (p.a_const * g)
        return rho, drho * du_w, drho * du_z
