"""The acceptance suite: twelve end-to-end checks with tolerances and time limits.

Each check builds what it needs from scratch (no shared caches), so the
measured runtime covers the whole pipeline behind it.  ``run_suite`` is used
by the ``verify-all`` command and by the test suite.
"""
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .assembly import assemble_pencil
from .atmosphere import (FOUR_27, PhysicalParams, StationaryState, check_admissibility, kappa_of,
                         reference_params)
from .evolution import WaveSystem, evolve, single_mode_error
from .flow import (FlowMap, boundary_invariance_check, integrate_flow, inverse_flow,
                   lagrangian_upsilon, polynomial_field, radial_field, rigid_rotation)
from .geometry import (analyze, analyze_state, boundary_slope, classify_case, cubic_g, cubic_roots,
                       root_estimates_check, shape_map, vacuum_normal_sign)
from .radial import radial_sturm_liouville
from .spectrum import (branch_of, coriolis_bound, phase_reality_test, rayleigh_coefficients,
                       reality_check, resolvent_bound_check, secular_determinant_scan,
                       simple_real_frequencies, solve_pencil, stationarity_residual)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    runtime: float
    limit: float
    details: dict = field(default_factory=dict)

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.number:2d} {self.title:<32s} {self.runtime:7.2f} s (limit {self.limit:g} s)"

    def as_dict(self):
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "runtime": self.runtime, "limit": self.limit, "details": _plain(self.details)}


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj


def _timed(number, title, limit, body):
    t0 = time.perf_counter()
    ok, details = body()
    runtime = time.perf_counter() - t0
    details["within_time"] = runtime < limit
    return CriterionResult(number, title, bool(ok) and runtime < limit, runtime, limit, details)


def _reference_state(omega=None):
    return StationaryState(reference_params(omega))


# sizes giving N close to 200 for the mixed basis
SIZE_200 = {0: (7, 7), 1: (9, 9), 2: (9, 9)}


def criterion_admissibility():
    def body():
        gm0, r0, r_cap = 1.0, 1.0, 2.0
        # (R/R0)^3 kappa = R^3 Omega^2 / (2 GM) equals 4/27 here
        omega_crit = np.sqrt(8.0 * gm0 / (27.0 * r_cap ** 3))
        sweep = np.concatenate([np.linspace(0.0, 2.0 * omega_crit, 48),
                                omega_crit * np.array([1 - 1e-12, 1 + 1e-12])])
        mismatches = 0
        for om in sweep:
            rep = check_admissibility(PhysicalParams(gm0, r0, r_cap, omega=om))
            mismatches += rep.condition_k != bool(om < omega_crit)
        # locate the flip by bisection on the report itself
        lo, hi = 0.0, 2.0 * omega_crit
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if check_admissibility(PhysicalParams(gm0, r0, r_cap, omega=mid)).condition_k:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-16 * omega_crit:
                break
        flip = 0.5 * (lo + hi)
        flip_value = (r_cap / r0) ** 3 * kappa_of(PhysicalParams(gm0, r0, r_cap, omega=flip))
        rel = abs(flip / omega_crit - 1.0)
        ok = mismatches == 0 and rel <= 1e-12 and abs(flip_value - FOUR_27) <= 1e-12
        return ok, {"points": sweep.size, "mismatches": mismatches, "omega_flip": flip,
                    "omega_crit": omega_crit, "relative_offset": rel}
    return _timed(1, "admissibility threshold", 1.0, body)


def criterion_cubic():
    def body():
        worst_double = 0.0
        m_ok = True
        for lam in (0.2, 0.5, 0.8, 0.95):
            kappa = 4.0 * lam ** 3 / 27.0
            m_ok &= classify_case(kappa, lam) == "M"
            qm, qp, _ = cubic_roots(kappa, lam)
            target = 9.0 / (4.0 * lam * lam)
            worst_double = max(worst_double, abs(qm - target) / target, abs(qp - target) / target)
        order_fail = g_fail = est_fail = 0
        for lam in np.linspace(0.05, 0.95, 20):
            for frac in np.linspace(0.025, 0.975, 20):
                kappa = frac * 4.0 * lam ** 3 / 27.0
                an = analyze(kappa, lam)
                if an.case_label != "H":
                    order_fail += 1
                    continue
                chain = [0.0, an.q_minus, lam / (3 * kappa), an.q_plus, lam / kappa, an.q_inf]
                order_fail += not all(a < b for a, b in zip(chain[:-1], chain[1:]))
                g_fail += not cubic_g(9.0 / (4 * lam * lam), kappa, lam)[0] < 0
                est_fail += not root_estimates_check(an)
        ok = m_ok and worst_double <= 1e-8 and order_fail == 0 and g_fail == 0 and est_fail == 0
        return ok, {"case_m": m_ok, "double_root_rel_err": worst_double, "ordering_failures": order_fail,
                    "g_sign_failures": g_fail, "estimate_failures": est_fail, "grid": "20x20"}
    return _timed(2, "cubic structure", 5.0, body)


def criterion_physical_vacuum():
    def body():
        state = _reference_state()
        an = analyze_state(state)
        p = state.params
        zeta = np.linspace(-1.0, 1.0, 100)
        rb = p.r_cap * shape_map(zeta * zeta, an)
        pts = np.column_stack([rb * np.sqrt(1 - zeta * zeta), rb * zeta])
        normals = np.array([vacuum_normal_sign(pt, state) for pt in pts])
        xs = np.linspace(0.0, an.equator_x, 52)[1:-1]
        slopes = boundary_slope(xs, an)
        ok = bool(np.all(normals < 0) and np.all(slopes < 0))
        return ok, {"max_normal_derivative": normals.max(), "boundary_points": len(pts),
                    "max_slope": slopes.max(), "slope_points": xs.size}
    return _timed(3, "physical vacuum", 1.0, body)


def criterion_lagrangian():
    def body():
        gamma = 1.4
        rigid = rigid_rotation(1.0)
        seeds = np.array([[1.0, 0.0, 0.0], [0.0, 0.6, 0.8], [0.48, -0.6, 0.64]])
        dets = [abs(integrate_flow(rigid, s, 10.0).dets - 1.0).max() for s in seeds[:1]]
        inv_dev = boundary_invariance_check(rigid, seeds, 10.0, r0=1.0)
        rad = integrate_flow(radial_field(1.0), [1.2, 0.3, -0.4], 1.0)
        u0 = 0.7
        ul = lagrangian_upsilon(u0, rad.dets[-1], gamma)
        rad_err = abs(ul - u0 * np.exp(-3 * (gamma - 1))) / (u0 * np.exp(-3 * (gamma - 1)))
        jac_err = 0.0
        for v in (rigid, polynomial_field(0.1)):
            x0 = np.array([0.9, -0.4, 0.5])
            jac = integrate_flow(v, x0, 1.0).final_jacobian
            h = 1e-5
            fd = np.empty((3, 3))
            for j in range(3):
                e = np.zeros(3)
                e[j] = h
                fd[:, j] = (integrate_flow(v, x0 + e, 1.0).final_point
                            - integrate_flow(v, x0 - e, 1.0).final_point) / (2 * h)
            jac_err = max(jac_err, np.abs(fd - jac).max() / np.abs(jac).max())
        trip = 0.0
        for v, t in ((rigid, 0.1), (radial_field(1.0), 0.01)):
            phi = FlowMap(v, t)
            for s in seeds:
                x = phi(s * 1.3)
                back = inverse_flow(phi, x).x_bar
                trip = max(trip, np.linalg.norm(back - s * 1.3))
        ok = max(dets) <= 1e-10 and inv_dev <= 1e-10 and rad_err <= 1e-7 and jac_err <= 1e-6 and trip <= 1e-9
        return ok, {"rigid_det_err": max(dets), "boundary_deviation": inv_dev, "radial_upsilon_rel_err": rad_err,
                    "jacobian_fd_rel_err": jac_err, "inverse_round_trip": trip}
    return _timed(4, "lagrangian kinematics", 10.0, body)


def criterion_matrices():
    def body():
        det = {}
        ok = True
        for m in (0, 1, 2):
            mats, _, basis = assemble_pencil(_reference_state(), m)
            a_min = np.linalg.eigvalsh(mats.a_mass)[0]
            c_ev = np.linalg.eigvalsh(mats.c_stiffness)
            herm = np.abs(mats.b_coriolis - mats.b_coriolis.conj().T).max()
            kern = basis.indices("kernel")
            kern_c = np.abs(mats.c_stiffness[kern]).max() if kern.size else 0.0
            beta = coriolis_bound(mats)
            limit = 2.0 * abs(mats.omega)
            row_ok = a_min > 0 and herm == 0 and c_ev[0] >= -1e-10 * c_ev[-1] and kern_c <= 1e-10 \
                and beta <= limit + 1e-10
            ok &= bool(row_ok)
            det[f"m{m}"] = {"N": mats.size, "min_eig_A": a_min, "min_eig_C": c_ev[0], "max_eig_C": c_ev[-1],
                            "kernel_rows_C": kern_c, "beta_d": beta, "two_omega": limit}
        mats0, _, _ = assemble_pencil(_reference_state(0.0), 1)
        b_zero = not np.any(mats0.b_coriolis)
        det["B_zero_at_rest"] = b_zero
        return ok and b_zero, det
    return _timed(5, "matrix structure", 30.0, body)


def criterion_reality():
    def body():
        det = {}
        ok = True
        for m in (0, 1, 2):
            mats, _, _ = assemble_pencil(_reference_state(), m, *SIZE_200[m])
            res = solve_pencil(mats)
            rep = reality_check(res)
            worst = 0.0
            for k in range(res.sigma.size):
                # eigenvectors have unit A-norm, so a = 1 and the residual is absolute
                rc = rayleigh_coefficients(res.vectors[:, k], mats)
                worst = max(worst, abs(rc.quadratic(res.sigma[k].real)) / rc.a)
            ok &= rep.passed and rep.unpaired == 0 and worst <= 1e-8
            det[f"m{m}"] = {"N": mats.size, "max_imag": rep.max_imag, "max_abs": rep.max_abs,
                            "rayleigh_abs": worst, "zero_cluster": int(res.zero_cluster.sum())}
        return ok, det
    return _timed(6, "discrete spectral reality", 60.0, body)


def criterion_oracle(n_r=512, coarse=(8, 8), fine=(10, 10), count=5):
    def body():
        params = reference_params(0.0)
        rows = []
        oracle_ok = True
        stability = 0.0
        for l in range(9):
            ev = radial_sturm_liouville(params, l, n_r, n_eig=4).eigenvalues
            half = radial_sturm_liouville(params, l, n_r // 2, n_eig=4).eigenvalues
            oracle_ok &= bool(ev[0] > 0 and np.all(np.diff(ev) > 0))
            stability = max(stability, np.max(np.abs(half / ev - 1)))
            rows += [(v, l) for v in ev]
        rows.sort()
        target = np.sqrt([v for v, _ in rows[:count]])
        errs = {}
        for label, (ns, nz) in (("coarse", coarse), ("refined", fine)):
            mats, _, _ = assemble_pencil(StationaryState(params), 0, ns, nz, family="gradient")
            res = solve_pencil(mats)
            pos = np.sort(res.sigma[res.nonzero()].real)
            pos = pos[pos > 0][:count]
            errs[label] = np.abs(pos / target - 1.0)
        ok = oracle_ok and stability <= 5e-3 and np.max(errs["refined"]) <= 0.01
        return ok, {"oracle_sqrt": target, "degrees": [l for _, l in rows[:count]],
                    "coarse_rel_err": errs["coarse"], "refined_rel_err": errs["refined"],
                    "oracle_positive_increasing": oracle_ok, "oracle_grid_stability": stability}
    return _timed(7, "rest-state oracle equivalence", 120.0, body)


def criterion_variational(count=5, n_random=20):
    def body():
        det = {}
        ok = True
        for m in (0, 1):
            mats, _, _ = assemble_pencil(_reference_state(), m, *SIZE_200[m])
            res = solve_pencil(mats)
            idx = res.nonzero()
            # modes above the inertial band |s| <= 2|Omega|, lowest first
            band = 2.0 * abs(mats.omega)
            idx = idx[np.abs(res.sigma[idx]) > band]
            idx = idx[np.argsort(np.abs(res.sigma[idx]))][:count]
            eig_vals = []
            for k in idx:
                x = res.vectors[:, k]
                rep = stationarity_residual(x, mats, branch_of(res.sigma[k], rayleigh_coefficients(x, mats)))
                eig_vals.append(rep.normalized)
            rng = np.random.default_rng(20 + m)
            rnd = []
            for _ in range(n_random):
                x = rng.standard_normal(mats.size) + 1j * rng.standard_normal(mats.size)
                rnd.append(stationarity_residual(x, mats, +1).normalized)
            ok &= max(eig_vals) <= 1e-5 and min(rnd) >= 1e-2
            det[f"m{m}"] = {"frequencies": res.sigma[idx].real, "eigen_max": max(eig_vals),
                            "random_min": min(rnd)}
        return ok, det
    return _timed(8, "variational principle", 60.0, body)


def criterion_secular(m=1, n_grid=2000, lo=0.5):
    def body():
        mats, _, _ = assemble_pencil(_reference_state(), m, *SIZE_200[m])
        res = solve_pencil(mats)
        hi = 1.02 * float(np.max(np.abs(res.sigma)))
        grid = np.linspace(lo, hi, n_grid)
        spacing = grid[1] - grid[0]
        brackets = secular_determinant_scan(mats, grid)
        roots = np.array([b.root for b in brackets])
        simple = simple_real_frequencies(res, lo, hi, 2.0 * spacing)
        all_real = np.real(res.sigma)
        missed = [s for s in simple if roots.size == 0 or np.min(np.abs(roots - s)) > 1e-6]
        extra = [r for r in roots if np.min(np.abs(all_real - r)) > 1e-6]
        ok = not missed and not extra and simple.size > 0
        return ok, {"range": [lo, hi], "brackets": len(brackets), "simple_frequencies": simple.size,
                    "missed": len(missed), "unmatched_brackets": len(extra),
                    "max_offset": max((np.min(np.abs(all_real - r)) for r in roots), default=0.0)}
    return _timed(9, "secular determinant", 60.0, body)


def criterion_energy():
    def body():
        det = {}
        mats, _, _ = assemble_pencil(_reference_state(), 1, 6, 6)
        system = WaveSystem(mats)
        rng = np.random.default_rng(10)
        x0 = rng.standard_normal(mats.size) + 1j * rng.standard_normal(mats.size)
        v0 = rng.standard_normal(mats.size) + 1j * rng.standard_normal(mats.size)
        hom = evolve((x0, v0), 10.0, 0.01, mats, system=system)
        force = rng.standard_normal(mats.size)
        forced = evolve((x0, v0), 10.0, 0.01, mats, forcing=force, system=system)
        det["homogeneous"] = {"passed": hom.passed, "beta_d": hom.beta_d, "two_omega": hom.coriolis_limit,
                              "growth_rate": hom.growth_rate, "max_E_ratio": float(hom.energy.max() / hom.energy[0])}
        det["forced"] = {"passed": forced.passed, "first_violation": forced.first_violation}
        rest, _, _ = assemble_pencil(_reference_state(0.0), 0, 6, 6)
        rest_sys = WaveSystem(rest)
        xr = rng.standard_normal(rest.size)
        drift = evolve((xr, np.zeros_like(xr)), 100.0, 0.01, rest, system=rest_sys)
        det["drift"] = {"steps": drift.times.size - 1, "relative": drift.phys_drift, "max_imag": drift.max_imag}
        ev, vec = linalg.eigh(rest.c_stiffness, rest.a_mass)
        k = int(np.searchsorted(ev, 1e-6 * ev[-1]))
        s0 = float(np.sqrt(ev[k]))
        period = 2 * np.pi / s0
        e1, _ = single_mode_error(rest, vec[:, k], s0, period, period / 500, system=rest_sys)
        e2, _ = single_mode_error(rest, vec[:, k], s0, period, period / 1000, system=rest_sys)
        ratio = e1 / e2
        det["order"] = {"frequency": s0, "error_dt": e1, "error_dt_half": e2, "ratio": ratio}
        ok = hom.passed and forced.passed and drift.phys_drift <= 1e-10 and abs(ratio - 4.0) <= 0.3
        return ok, det
    return _timed(10, "energy estimates", 120.0, body)


def criterion_nonreal():
    def body():
        det = {}
        ok = True
        for m in (0, 1):
            mats, _, _ = assemble_pencil(_reference_state(), m, *SIZE_200[m])
            res = solve_pencil(mats)
            idx = res.nonzero()
            real_like = sum(phase_reality_test(res.vectors[:, k], mats) for k in idx)
            ok &= real_like == 0
            det[f"rotating_m{m}"] = {"tested": idx.size, "real_like": int(real_like)}
        mats, _, _ = assemble_pencil(_reference_state(0.0), 0, 8, 8, family="gradient")
        res = solve_pencil(mats)
        idx = res.nonzero()
        count = 0
        for k in idx:
            v = res.vectors[:, k]
            j = int(np.argmax(np.abs(v)))
            v = v * np.exp(-1j * np.angle(v[j]))
            count += phase_reality_test(v, mats)
        ok &= count == idx.size
        det["rest_gradient_m0"] = {"tested": idx.size, "real_like": int(count)}
        return ok, det
    return _timed(11, "non-real eigenvectors", 30.0, body)


def criterion_resolvent():
    def body():
        mats, _, _ = assemble_pencil(_reference_state(), 1, 7, 7)
        beta = coriolis_bound(mats)
        rows = []
        ok = True
        for c in (0.0, 1.0, 2.0 * abs(mats.omega)):
            lam = 2.0 * c * beta + 1.0
            for skew in (False, True):
                rep = resolvent_bound_check(mats, c, lam, skew=skew)
                ok &= rep.passed
                rows.append({"c": c, "lambda": lam, "skew": skew, "norm": rep.norm, "bound": rep.bound})
        return ok, {"beta_d": beta, "cases": rows}
    return _timed(12, "resolvent bound", 30.0, body)


CRITERIA = [criterion_admissibility, criterion_cubic, criterion_physical_vacuum, criterion_lagrangian,
            criterion_matrices, criterion_reality, criterion_oracle, criterion_variational,
            criterion_secular, criterion_energy, criterion_nonreal, criterion_resolvent]


def run_suite(select=None, echo=None):
    """Run the checks (all, or the numbers in ``select``) and return their results."""
    out = []
    for k, fn in enumerate(CRITERIA, start=1):
        if select is not None and k not in select:
            continue
        res = fn()
        out.append(res)
        if echo is not None:
            echo(res.line())
    return out
