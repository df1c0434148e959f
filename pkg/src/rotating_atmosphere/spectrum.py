"""Quadratic pencil ``-s^2 A + s B + C`` and diagnostics of its spectrum.

The pencil is linearised as the first-order pair

    [[0, I], [C, B]] [x; y] = s [[I, 0], [0, A]] [x; y],   y = s x,

and solved with the QZ algorithm.  Nothing in that route forces real
eigenvalues, so the reality check below is a genuine test of the assembled
matrices (``A > 0``, ``C >= 0``, ``B`` Hermitian).
"""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .assembly import PencilMatrices
from .errors import AssemblyOrderError, BranchError, DomainError, NumericError, PreconditionError


def _norms(mats):
    return (np.linalg.norm(mats.a_mass, 2), np.linalg.norm(mats.b_coriolis, 2),
            np.linalg.norm(mats.c_stiffness, 2))


def pencil_matrix(mats, sigma):
    return -sigma * sigma * mats.a_mass + sigma * mats.b_coriolis + mats.c_stiffness


def _require_positive_mass(a):
    try:
        linalg.cholesky(a, lower=True)
    except linalg.LinAlgError as exc:
        raise AssemblyOrderError("mass matrix is not positive definite") from exc


def companion_linearize(mats: PencilMatrices):
    """Return ``(left, right)`` of size ``2N`` whose eigenvalues are the pencil's."""
    a, b, c = mats.a_mass, mats.b_coriolis, mats.c_stiffness
    _require_positive_mass(a)
    n = a.shape[0]
    dt = np.result_type(a, b, c)
    eye = np.eye(n, dtype=dt)
    zero = np.zeros((n, n), dtype=dt)
    left = np.block([[zero, eye], [c, b]])
    right = np.block([[eye, zero], [zero, a]])
    return left, right


@dataclass
class SpectrumResult:
    sigma: np.ndarray  # complex, sorted by real part
    vectors: np.ndarray  # (N, 2N), unit A-norm columns
    residuals: np.ndarray  # |(pencil) v| / |v|
    scale: np.ndarray  # |A||s|^2 + |B||s| + |C| per eigenvalue
    max_imag: float
    zero_cluster: np.ndarray  # bool mask

    @property
    def relative_residuals(self):
        return self.residuals / self.scale

    def nonzero(self):
        return np.flatnonzero(~self.zero_cluster)


def solve_pencil(mats: PencilMatrices, zero_tol=1e-8):
    """Dense QZ solve of the companion pair with diagonal and frequency scaling."""
    a, b, c = mats.a_mass, mats.b_coriolis, mats.c_stiffness
    _require_positive_mass(a)
    d = 1.0 / np.sqrt(np.real(np.diag(a)))
    sa = d[:, None] * a * d[None, :]
    sb = d[:, None] * b * d[None, :]
    sc = d[:, None] * c * d[None, :]
    na, nb, nc = (np.linalg.norm(x, 2) for x in (sa, sb, sc))
    # frequency scale of the larger of the stiffness and Coriolis terms; a round-off C must not set it
    tau = max(np.sqrt(nc / na), nb / na)
    tau = tau if tau > 0 else 1.0
    # s = tau * mu:  -mu^2 (tau^2 A) + mu (tau B) + C
    scaled = PencilMatrices(tau * tau * sa, tau * sb, sc, mats.omega, mats.m)
    left, right = companion_linearize(scaled)
    try:
        w, vr = linalg.eig(left, right)
    except linalg.LinAlgError as exc:
        raise NumericError("QZ iteration failed") from exc
    if not np.all(np.isfinite(w)):
        raise NumericError("infinite eigenvalue in the companion pair")
    sigma = tau * w
    n = a.shape[0]
    vec = d[:, None] * vr[:n, :]
    vec = vec / np.sqrt(np.real(np.einsum("ij,ik,kj->j", vec.conj(), a, vec)))[None, :]
    order = np.lexsort((np.imag(sigma), np.real(sigma)))
    sigma, vec = sigma[order], vec[:, order]
    a_n, b_n, c_n = _norms(mats)
    res = np.empty(sigma.size)
    scale = a_n * np.abs(sigma) ** 2 + b_n * np.abs(sigma) + c_n
    for k in range(sigma.size):
        v = vec[:, k]
        res[k] = np.linalg.norm(pencil_matrix(mats, sigma[k]) @ v) / np.linalg.norm(v)
    smax = np.max(np.abs(sigma)) if sigma.size else 0.0
    zero = np.abs(sigma) <= zero_tol * max(smax, 1e-300)
    return SpectrumResult(sigma, vec, res, scale, float(np.max(np.abs(np.imag(sigma)))), zero)


@dataclass
class RealityReport:
    max_imag: float
    max_abs: float
    passed: bool
    unpaired: int


def reality_check(result: SpectrumResult, tol=1e-8):
    """``max |Im s| <= tol * max |s|``; complex values must also come in conjugate pairs."""
    smax = float(np.max(np.abs(result.sigma))) if result.sigma.size else 0.0
    limit = tol * smax
    strays = np.flatnonzero(np.abs(np.imag(result.sigma)) > limit)
    unpaired = 0
    for k in strays:
        conj = np.conj(result.sigma[k])
        if np.min(np.abs(result.sigma - conj)) > 1e-6 * max(smax, 1.0):
            unpaired += 1
    passed = result.max_imag <= limit
    return RealityReport(result.max_imag, smax, bool(passed), unpaired)


@dataclass
class RayleighCoefficients:
    a: float
    b: float
    c: float

    def discriminant(self):
        return self.b * self.b / (4 * self.a * self.a) + self.c / self.a

    def quadratic(self, sigma):
        return -self.a * sigma * sigma + self.b * sigma + self.c


def rayleigh_coefficients(xi, mats: PencilMatrices, tol=1e-12):
    xi = np.asarray(xi)
    if not np.any(xi):
        raise DomainError("zero vector")
    vals = [np.vdot(xi, m @ xi) for m in (mats.a_mass, mats.b_coriolis, mats.c_stiffness)]
    ref = max(abs(v) for v in vals)
    if any(abs(np.imag(v)) > tol * max(ref, 1e-300) for v in vals):
        warnings.warn("non-negligible imaginary part in a Hermitian form discarded")
    return RayleighCoefficients(*(float(np.real(v)) for v in vals))


def _sigma_from(a, b, c, branch):
    disc = b * b / (4 * a * a) + c / a
    if np.any(disc <= 0):
        raise BranchError("degenerate discriminant", discriminant=np.min(disc))
    return b / (2 * a) + branch * np.sqrt(disc)


def sigma_functional(xi, mats: PencilMatrices, branch=+1):
    """``b/(2a) + branch * sqrt(b^2/(4a^2) + c/a)`` at the vector ``xi``."""
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    rc = rayleigh_coefficients(xi, mats)
    if rc.a <= 0:
        raise BranchError("non-positive mass form", a=rc.a)
    return float(_sigma_from(rc.a, rc.b, rc.c, branch))


def branch_of(sigma, rc: RayleighCoefficients):
    return 1 if np.real(sigma) >= rc.b / (2 * rc.a) else -1


@dataclass
class StationarityReport:
    sigma: float
    gradient_norm: float
    normalized: float
    pencil_residual: float


def _unit_basis(xi, mats):
    d = 1.0 / np.sqrt(np.real(np.diag(mats.a_mass)))
    sc = lambda m: d[:, None] * m * d[None, :]
    scaled = PencilMatrices(sc(mats.a_mass), sc(mats.b_coriolis), sc(mats.c_stiffness), mats.omega, mats.m)
    return np.asarray(xi) / d, scaled


def stationarity_residual(xi, mats: PencilMatrices, branch=+1, step=1e-6, unit_basis=True):
    """Central-difference gradient of the frequency functional.

    Derivatives are taken along every real and imaginary coordinate direction
    with step ``step * |xi|``.  ``normalized`` is ``|grad| |xi| / |sigma|``.
    With ``unit_basis`` the coordinates refer to the basis rescaled to unit
    A-norm, so the step has the same size in every direction.
    """
    if unit_basis:
        xi, mats = _unit_basis(xi, mats)
    xi = np.asarray(xi, dtype=complex)
    h = step * np.linalg.norm(xi)
    sigma0 = sigma_functional(xi, mats, branch)
    grads = []
    for direction in (1.0, 1j):
        # forms at xi +- h d e_k, all k at once: f(xi) +- 2h Re(conj(d) (M xi)_k) + h^2 M_kk
        cols = []
        for m in (mats.a_mass, mats.b_coriolis, mats.c_stiffness):
            base = float(np.real(np.vdot(xi, m @ xi)))
            lin = 2.0 * np.real(np.conj(direction) * (m @ xi))
            quad = np.real(np.diag(m)) * abs(direction) ** 2
            cols.append((base + h * lin + h * h * quad, base - h * lin + h * h * quad))
        (ap, am), (bp, bm), (cp, cm) = cols
        grads.append((_sigma_from(ap, bp, cp, branch) - _sigma_from(am, bm, cm, branch)) / (2 * h))
    grad = np.concatenate(grads)
    gnorm = float(np.linalg.norm(grad))
    xn = float(np.linalg.norm(xi))
    normalized = gnorm * xn / abs(sigma0) if sigma0 != 0 else gnorm * xn
    pres = float(np.linalg.norm(pencil_matrix(mats, sigma0) @ xi) / xn)
    return StationarityReport(sigma0, gnorm, normalized, pres)


def log_determinant(mats: PencilMatrices, sigma):
    """Sign and log-magnitude of ``det(-s^2 A + s B + C)`` for real ``s``."""
    sign, logabs = np.linalg.slogdet(pencil_matrix(mats, sigma))
    return float(np.sign(np.real(sign))) if logabs > -np.inf else 0.0, float(logabs)


@dataclass
class Bracket:
    lo: float
    hi: float
    root: float


def secular_determinant_scan(mats: PencilMatrices, sigma_grid, refine_tol=1e-12, max_iter=200):
    """Sign changes of the secular determinant on a sorted real grid, refined by bisection."""
    grid = np.asarray(sigma_grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise DomainError("sigma grid must be strictly increasing")
    signs = np.array([log_determinant(mats, s)[0] for s in grid])
    brackets = []
    for k in range(grid.size - 1):
        if signs[k] == 0:
            brackets.append(Bracket(grid[k], grid[k], grid[k]))
            continue
        if signs[k + 1] != 0 and signs[k] != signs[k + 1]:
            lo, hi, slo = grid[k], grid[k + 1], signs[k]
            for _ in range(max_iter):
                if hi - lo <= refine_tol * max(1.0, abs(lo)):
                    break
                mid = 0.5 * (lo + hi)
                sm = log_determinant(mats, mid)[0]
                if sm == 0:
                    lo = hi = mid
                    break
                if sm == slo:
                    lo = mid
                else:
                    hi = mid
            brackets.append(Bracket(grid[k], grid[k + 1], 0.5 * (lo + hi)))
    return brackets


def simple_real_frequencies(result: SpectrumResult, lo, hi, sep):
    """Frequencies in ``(lo, hi)`` separated from every other one by more than ``sep``."""
    s = np.real(result.sigma)
    inside = np.flatnonzero((s > lo) & (s < hi) & ~result.zero_cluster)
    out = []
    for k in inside:
        others = np.delete(s, k)
        if np.min(np.abs(others - s[k])) > sep:
            out.append(s[k])
    return np.array(out)


def orthonormalized(mats: PencilMatrices):
    """``(L_d, B_d)``: stiffness and Coriolis matrices in A-orthonormal coordinates."""
    ev, vecs = np.linalg.eigh(mats.a_mass)
    if ev[0] <= 0:
        raise AssemblyOrderError("mass matrix is not positive definite")
    inv_half = (vecs / np.sqrt(ev)[None, :]) @ vecs.conj().T
    l_d = inv_half @ mats.c_stiffness @ inv_half
    b_d = inv_half @ mats.b_coriolis @ inv_half
    return 0.5 * (l_d + l_d.conj().T), 0.5 * (b_d + b_d.conj().T)


def coriolis_bound(mats: PencilMatrices):
    """Discrete ``beta_d = |A^(-1/2) B A^(-1/2)|``."""
    _, b_d = orthonormalized(mats)
    return float(np.max(np.abs(np.linalg.eigvalsh(b_d)))) if b_d.size else 0.0


@dataclass
class ResolventReport:
    norm: float
    bound: float
    beta: float
    passed: bool


def resolvent_bound_check(mats: PencilMatrices, c_scalar, lambda_shift, skew=False, tol=1e-10):
    """Operator norm of ``(L_d + c B_d + lambda)^-1`` against ``1 / (lambda - |c| beta_d)``.

    With ``skew=True`` the Coriolis term enters as the real antisymmetric
    operator ``-i B_d`` (the form it takes in the first-order system).
    """
    l_d, b_d = orthonormalized(mats)
    beta = float(np.max(np.abs(np.linalg.eigvalsh(b_d)))) if b_d.size else 0.0
    if not lambda_shift > abs(c_scalar) * beta:
        raise PreconditionError("shift below |c| beta_d", shift=lambda_shift, threshold=abs(c_scalar) * beta)
    cor = -1j * b_d if skew else b_d
    op = l_d + c_scalar * cor + lambda_shift * np.eye(l_d.shape[0])
    smin = linalg.svdvals(op)[-1]
    norm = 1.0 / smin
    bound = 1.0 / (lambda_shift - abs(c_scalar) * beta)
    return ResolventReport(float(norm), float(bound), beta, bool(norm <= bound + tol))


def phase_reality_test(xi, mats: PencilMatrices, tol=1e-8):
    """True when ``xi`` is a real field up to one global phase.

    Compares the non-conjugated form ``|xi^T S xi|`` with ``xi^H A xi``, where ``S``
    is the bilinear Gram matrix of the basis; the two agree exactly for
    ``exp(i theta)`` times a real field.
    """
    xi = np.asarray(xi)
    if not np.any(xi):
        raise DomainError("zero vector")
    sym = mats.a_bilinear if mats.a_bilinear is not None else mats.a_mass
    herm = float(np.real(np.vdot(xi, mats.a_mass @ xi)))
    bil = abs(xi @ (sym @ xi))
    return bool(bil >= (1.0 - tol) * herm)
