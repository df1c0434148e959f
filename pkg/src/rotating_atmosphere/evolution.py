"""Time integration of the Galerkin wave system.

The coefficient vector ``xi(t)`` obeys

    A xi'' - i B xi' + C xi = A f(t),

which reproduces ``(-s^2 A + s B + C) c = 0`` for ``xi = exp(i s t) c``.  In
A-orthonormal coordinates ``y = A^(1/2) xi`` the state ``U = (y, y')`` solves
``U' = M U + F`` with ``M = [[0, I], [-K, i B_d]]``, stepped by the implicit
midpoint rule with one LU factorisation per step size.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from .assembly import PencilMatrices
from .errors import AssemblyOrderError, DomainError, NumericError


@dataclass
class EvolutionState:
    xi: np.ndarray
    xi_dot: np.ndarray
    t: float = 0.0
    log: list = field(default_factory=list)  # rows (t, E, E_phys)

    def copy(self):
        return EvolutionState(self.xi.copy(), self.xi_dot.copy(), self.t, list(self.log))


def energy(state: EvolutionState, mats: PencilMatrices):
    """``(E, E_phys)`` with ``E = xi*(A + C)xi + xi'*A xi'`` and ``E_phys = xi*C xi + xi'*A xi'``."""
    a, c = mats.a_mass, mats.c_stiffness
    q = lambda m, v: float(np.real(np.vdot(v, m @ v)))
    kin = q(a, state.xi_dot)
    pot = q(c, state.xi)
    return q(a, state.xi) + pot + kin, pot + kin


def forcing_norm(f, mats: PencilMatrices):
    f = np.asarray(f)
    return float(np.sqrt(max(np.real(np.vdot(f, mats.a_mass @ f)), 0.0)))


class WaveSystem:
    """First-order form of the wave system in A-orthonormal coordinates."""

    def __init__(self, mats: PencilMatrices):
        ev, vecs = np.linalg.eigh(mats.a_mass)
        if ev[0] <= 0:
            raise AssemblyOrderError("mass matrix is not positive definite", min_eig=ev[0])
        root = np.sqrt(ev)
        self.mats = mats
        self.n = mats.size
        self.half = (vecs * root[None, :]) @ vecs.conj().T
        self.inv_half = (vecs / root[None, :]) @ vecs.conj().T
        k = self.inv_half @ mats.c_stiffness @ self.inv_half
        b = self.inv_half @ mats.b_coriolis @ self.inv_half
        self.k = 0.5 * (k + k.conj().T)
        self.b_d = 0.5 * (b + b.conj().T)
        n = self.n
        gen = np.zeros((2 * n, 2 * n), dtype=complex)
        gen[:n, n:] = np.eye(n)
        gen[n:, :n] = -self.k
        gen[n:, n:] = 1j * self.b_d
        self.generator = np.real_if_close(gen, tol=1)
        self.beta = float(np.max(np.abs(np.linalg.eigvalsh(self.b_d)))) if n else 0.0
        self._lu = {}

    @property
    def is_real(self):
        return not np.iscomplexobj(self.generator)

    @property
    def growth_rate(self):
        return max(1.0, self.beta)

    def factor(self, dt):
        if dt not in self._lu:
            lhs = np.eye(2 * self.n) - 0.5 * dt * self.generator
            try:
                lu = linalg.lu_factor(lhs, check_finite=True)
            except (linalg.LinAlgError, ValueError) as exc:
                raise NumericError("factorisation of the midpoint matrix failed", dt=dt) from exc
            if np.any(np.diag(lu[0]) == 0):
                raise NumericError("singular midpoint matrix", dt=dt)
            self._lu[dt] = lu
        return self._lu[dt]

    def to_internal(self, xi, xi_dot):
        return np.concatenate([self.half @ xi, self.half @ xi_dot])

    def from_internal(self, u):
        return self.inv_half @ u[: self.n], self.inv_half @ u[self.n:]

    def load(self, f):
        """Right-hand side block for a force ``f`` given in basis coefficients."""
        g = self.half @ np.asarray(f)
        out = np.zeros(2 * self.n, dtype=g.dtype)
        out[self.n:] = g
        return out

    def advance(self, u, dt, f_mid=None):
        rhs = u + 0.5 * dt * (self.generator @ u)
        if f_mid is not None:
            rhs = rhs + dt * self.load(f_mid)
        return linalg.lu_solve(self.factor(dt), rhs)


def _as_state(u0, n):
    if isinstance(u0, EvolutionState):
        return u0.copy()
    xi, xi_dot = u0
    xi = np.asarray(xi)
    xi_dot = np.asarray(xi_dot)
    if xi.shape != (n,) or xi_dot.shape != (n,):
        raise DomainError("initial data has the wrong size", expected=n, got=[xi.shape, xi_dot.shape])
    return EvolutionState(xi.copy(), xi_dot.copy(), 0.0)


def _forcing_at(forcing, t):
    if forcing is None:
        return None
    return forcing(t) if callable(forcing) else np.asarray(forcing)


def step(state: EvolutionState, dt, mats: PencilMatrices, forcing=None, system: WaveSystem = None):
    """One implicit midpoint step; ``forcing`` is a vector or a function of time."""
    if dt == 0:
        raise DomainError("dt must be nonzero")
    system = system or WaveSystem(mats)
    u = system.to_internal(state.xi, state.xi_dot)
    u = system.advance(u, dt, _forcing_at(forcing, state.t + 0.5 * dt))
    xi, xi_dot = system.from_internal(u)
    return EvolutionState(xi, xi_dot, state.t + dt, state.log)


@dataclass
class EnergyReport:
    times: np.ndarray
    energy: np.ndarray
    energy_phys: np.ndarray
    bound: np.ndarray
    growth_rate: float  # max(1, beta_d)
    beta_d: float
    coriolis_limit: float  # 2 |Omega|
    passed: bool
    first_violation: Optional[float]
    final: EvolutionState
    max_imag: float = 0.0

    @property
    def phys_drift(self):
        e0 = self.energy_phys[0]
        # a start in the kernel of C has E_phys at round-off level; measure against E then
        scale = e0 if e0 > 1e-12 * self.energy[0] else self.energy[0]
        return float(np.max(np.abs(self.energy_phys - e0)) / scale) if scale > 0 else 0.0

    def rows(self):
        return np.column_stack([self.times, self.energy, self.energy_phys, self.bound])


def evolve(u0, t_final, dt, mats: PencilMatrices, forcing=None, system: WaveSystem = None,
           trajectory=False, bound_rtol=1e-12):
    """Integrate to ``t_final`` and check the exponential energy bound at every step.

    The bound is ``sqrt(E(t)) <= exp(L t) (sqrt(E(0)) + int_0^t exp(-L s) |f(s)| ds)``
    with ``L = max(1, beta_d)``; the integral uses the trapezoid rule on the
    step grid.  Returns an :class:`EnergyReport` (and the trajectory if asked).
    """
    if not dt > 0:
        raise DomainError("dt must be positive", dt=dt)
    if not t_final >= 0:
        raise DomainError("t_final must be nonnegative", t_final=t_final)
    system = system or WaveSystem(mats)
    state = _as_state(u0, system.n)
    n_steps = int(round(t_final / dt))
    if n_steps == 0 and t_final > 0:
        n_steps = 1
    h = t_final / n_steps if n_steps else dt
    rate = system.growth_rate
    u = system.to_internal(state.xi, state.xi_dot)
    times = np.empty(n_steps + 1)
    e_full = np.empty(n_steps + 1)
    e_phys = np.empty(n_steps + 1)
    traj = [] if trajectory else None

    def record(i, t, u):
        y, v = u[: system.n], u[system.n:]
        kin = np.real(np.vdot(v, v))
        pot = np.real(np.vdot(y, system.k @ y))
        times[i] = t
        e_phys[i] = pot + kin
        e_full[i] = np.real(np.vdot(y, y)) + pot + kin
        if traj is not None:
            traj.append(system.from_internal(u))

    record(0, 0.0, u)
    max_imag = 0.0
    check_real = system.is_real and not np.iscomplexobj(state.xi) and not np.iscomplexobj(state.xi_dot)
    for i in range(1, n_steps + 1):
        t_prev = (i - 1) * h
        u = system.advance(u, h, _forcing_at(forcing, t_prev + 0.5 * h))
        if check_real and np.iscomplexobj(u):
            max_imag = max(max_imag, float(np.max(np.abs(u.imag))))
        record(i, i * h, u)
    if forcing is None:
        fn = np.zeros(n_steps + 1)
    else:
        fn = np.array([forcing_norm(_forcing_at(forcing, t), mats) for t in times])
    weighted = np.exp(-rate * times) * fn
    integral = np.concatenate([[0.0], np.cumsum(0.5 * h * (weighted[1:] + weighted[:-1]))])
    bound = np.exp(rate * times) * (np.sqrt(e_full[0]) + integral)
    root = np.sqrt(np.maximum(e_full, 0.0))
    bad = np.flatnonzero(root > bound * (1.0 + bound_rtol) + 1e-300)
    xi, xi_dot = system.from_internal(u)
    final = EvolutionState(xi, xi_dot, n_steps * h,
                           [tuple(r) for r in np.column_stack([times, e_full, e_phys])])
    report = EnergyReport(times, e_full, e_phys, bound, rate, system.beta, 2.0 * abs(mats.omega),
                          bool(bad.size == 0), float(times[bad[0]]) if bad.size else None, final,
                          max_imag)
    if trajectory:
        return report, traj
    return report


def single_mode_error(mats: PencilMatrices, mode_vector, frequency, t_final, dt, system=None):
    """Energy-norm error of a standing mode ``cos(s t) X`` started at rest (no Coriolis)."""
    system = system or WaveSystem(mats)
    x = np.asarray(mode_vector)
    rep = evolve((x, np.zeros_like(x)), t_final, dt, mats, system=system)
    t = rep.final.t
    exact_xi = np.cos(frequency * t) * x
    exact_dot = -frequency * np.sin(frequency * t) * x
    diff = system.to_internal(rep.final.xi - exact_xi, rep.final.xi_dot - exact_dot)
    ref = system.to_internal(x, frequency * x)
    return float(np.linalg.norm(diff) / np.linalg.norm(ref)), rep
