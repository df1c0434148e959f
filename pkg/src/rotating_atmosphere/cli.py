"""Command line front end.

Every subcommand reads a configuration (``--config`` file or ``--preset``),
writes its artifacts into ``--out`` together with ``manifest.json`` and prints
a short JSON summary on stdout.  Errors are reported as one JSON object on
stderr.  Exit codes: 0 success, 1 numeric or check failure, 2 usage, 3
configuration.
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from .assembly import PencilMatrices, assemble_pencil
from .atmosphere import StationaryState, check_admissibility, pole_density
from .config import parse_config, preset_config
from .errors import AtmosphereError, ConfigError, DomainError
from .evolution import WaveSystem, evolve
from .flow import FIELD_REGISTRY, integrate_flow
from .geometry import analyze_state, boundary_curve, root_estimates_check
from .radial import radial_sturm_liouville
from .spectrum import rayleigh_coefficients, reality_check, solve_pencil
from .storage import RunManifest, dumps, read_csv_points, read_matrix, write_csv, write_json, write_matrix

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CONFIG = 0, 1, 2, 3


def _load_config(args):
    if args.config is not None:
        cfg = parse_config(args.config)
    else:
        cfg = preset_config(args.preset or "reference")
    disc = cfg.discretization
    for attr, key in (("m", "m"), ("ns", "n_s"), ("nz", "n_zeta"), ("family", "family")):
        value = getattr(args, attr, None)
        if value is not None:
            setattr(disc, key, value)
    return cfg


def _state(cfg, uniform_only=False):
    if uniform_only and cfg.profile is not None:
        raise DomainError("the discretisation supports uniform rotation only; use a zero profile")
    return StationaryState(cfg.params, cfg.profile)


def _assemble(cfg):
    d = cfg.discretization
    return assemble_pencil(_state(cfg, True), d.m, d.n_s, d.n_zeta, d.family, d.order, d.grading_levels)


class Run:
    """Output directory plus manifest bookkeeping for one command."""

    def __init__(self, command, cfg, out):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(command, cfg.snapshot(), cfg.snapshot()["tolerances"])

    def path(self, name):
        return self.out / name

    def json(self, name, obj):
        p = self.path(name)
        write_json(p, obj)
        self.manifest.add(p)
        return p

    def csv(self, name, header, rows):
        p = self.path(name)
        write_csv(p, header, rows)
        self.manifest.add(p)
        return p

    def matrix(self, name, mat):
        p = self.path(name)
        write_matrix(p, mat)
        self.manifest.add(p)
        return p

    def finish(self):
        return self.manifest.write(self.out)


def cmd_stationary(args, cfg, run):
    state = _state(cfg)
    p = cfg.params
    adm = check_admissibility(p, cfg.profile)
    report = {
        "params": p.as_dict(), "omega_sq": p.omega_sq, "kappa": state.kappa, "lambda": state.lam,
        "admissible": adm.condition_k, "admissibility_value": adm.value, "admissibility_margin": adm.margin,
        "r1": adm.r1, "omega_max_sq": adm.omega_max_sq, "pole_density": pole_density(p),
        "profile": cfg.profile_spec,
    }
    r = np.linspace(p.r0, 1.5 * p.r_cap, 101)[1:]
    z0 = np.zeros_like(r)
    rows = np.column_stack([r, state.upsilon(z0, r), state.rho(z0, r), state.upsilon(r, z0), state.rho(r, z0)])
    run.csv("profile.csv", ["r", "upsilon_axis", "rho_axis", "upsilon_equator", "rho_equator"], rows)
    run.json("stationary.json", report)
    return report, EXIT_OK


def cmd_geometry(args, cfg, run):
    state = _state(cfg, True)
    an = analyze_state(state)
    report = {"case": an.case_label, "kappa": an.kappa, "lambda": an.lam,
              "case_margin": an.lam ** 3 - 6.75 * an.kappa}
    if an.case_label in ("H", "H_degenerate_kappa0", "M"):
        report.update({"q_minus": an.q_minus, "q_plus": an.q_plus, "q_inf": an.q_inf})
    if an.case_label in ("H", "H_degenerate_kappa0"):
        x = np.linspace(0.0, an.equator_x, args.points)
        z = boundary_curve(x, an)
        report.update({"root_estimates_hold": root_estimates_check(an),
                       "equator_radius": cfg.params.r0 * an.equator_x,
                       "pole_radius": cfg.params.r0 * float(z[0])})
        run.csv("boundary.csv", ["X", "Z"], np.column_stack([x, z]))
    run.json("geometry.json", report)
    return report, EXIT_OK


def _field(args, cfg):
    name = args.field
    if name not in FIELD_REGISTRY:
        raise ConfigError(f"unknown field {name!r}", field="--field", known=", ".join(FIELD_REGISTRY))
    if name == "custom-profile":
        if cfg.profile is None:
            raise ConfigError("custom-profile needs a polynomial profile in the configuration", field="profile")
        return FIELD_REGISTRY[name](cfg.profile.omega_of_varpi)
    if name in ("zero",):
        return FIELD_REGISTRY[name]()
    return FIELD_REGISTRY[name](args.strength)


def cmd_flow(args, cfg, run):
    v = _field(args, cfg)
    if args.seeds is not None:
        if not Path(args.seeds).exists():
            raise ConfigError(f"seed file not found: {args.seeds}", field="--seeds")
        seeds = read_csv_points(args.seeds)
    else:
        seeds = np.array([[cfg.params.r0, 0.0, 0.0], [0.0, 0.6 * cfg.params.r0, 0.8 * cfg.params.r0]])
    rows = []
    summary = []
    for k, s in enumerate(seeds):
        res = integrate_flow(v, s, args.tfinal, args.dt)
        stride = max(1, (res.times.size - 1) // args.samples)
        keep = np.unique(np.concatenate([np.arange(0, res.times.size, stride), [res.times.size - 1]]))
        for i in keep:
            rows.append([k, res.times[i], *res.points[i], res.dets[i]])
        summary.append({"seed": s, "final_point": res.final_point, "final_det": res.dets[-1],
                        "radius_change": float(np.linalg.norm(res.final_point) - np.linalg.norm(s))})
    run.csv("trajectory.csv", ["seed", "t", "x", "y", "z", "det"], rows)
    report = {"field": v.name, "t_final": args.tfinal, "dt": args.dt, "seeds": summary}
    run.json("flow.json", report)
    return report, EXIT_OK


def _matrix_meta(mats, cfg):
    return {"m": mats.m, "omega": mats.omega, "size": mats.size, "families": mats.families,
            "discretization": cfg.snapshot()["discretization"], **{k: v for k, v in mats.meta.items()
                                                                  if k in ("gradient", "kernel")}}


def cmd_assemble(args, cfg, run):
    mats, mesh, _ = _assemble(cfg)
    for name, mat in (("A", mats.a_mass), ("B", mats.b_coriolis), ("C", mats.c_stiffness),
                      ("S", mats.a_bilinear)):
        run.matrix(f"{name}.bin", mat)
    meta = _matrix_meta(mats, cfg)
    meta.update({"nodes": mesh.n_nodes, "volume": mesh.volume(), "config_hash": run.manifest.config_hash(),
                 "files": {"A": "A.bin", "B": "B.bin", "C": "C.bin", "S": "S.bin"}})
    run.json("matrices.json", meta)
    return {"size": mats.size, "m": mats.m, "out": str(run.out)}, EXIT_OK


def load_matrices(directory):
    directory = Path(directory)
    meta_path = directory / "matrices.json"
    if not meta_path.exists():
        raise ConfigError(f"no matrices.json in {directory}", field="--matrices")
    meta = json.loads(meta_path.read_text())
    get = lambda k: read_matrix(directory / meta["files"][k])
    return PencilMatrices(get("A"), get("B"), get("C"), meta["omega"], meta["m"], get("S"),
                          np.array(meta["families"]), meta)


def cmd_spectrum(args, cfg, run):
    mats = load_matrices(args.matrices) if args.matrices else _assemble(cfg)[0]
    tol = cfg.tolerances
    res = solve_pencil(mats, zero_tol=tol.zero_cluster)
    rep = reality_check(res, tol.reality)
    rows = []
    worst = 0.0
    for k in range(res.sigma.size):
        rc = rayleigh_coefficients(res.vectors[:, k], mats)
        q = abs(rc.quadratic(res.sigma[k].real)) / rc.a
        worst = max(worst, q)
        rows.append([k, res.sigma[k].real, res.sigma[k].imag, res.residuals[k], rc.a, rc.b, rc.c,
                     int(res.zero_cluster[k])])
    run.csv("modes.csv", ["index", "sigma_re", "sigma_im", "residual", "a", "b", "c", "zero_cluster"], rows)
    report = {"size": mats.size, "m": mats.m, "omega": mats.omega, "frequencies": res.sigma,
              "residuals": res.residuals, "max_relative_residual": float(np.max(res.relative_residuals)),
              "max_imag": rep.max_imag, "max_abs": rep.max_abs, "reality_passed": rep.passed,
              "unpaired": rep.unpaired, "zero_cluster": int(res.zero_cluster.sum()), "rayleigh_max": worst}
    run.json("spectrum.json", report)
    summary = {k: report[k] for k in ("size", "max_imag", "reality_passed", "zero_cluster", "rayleigh_max")}
    return summary, EXIT_OK if rep.passed else EXIT_FAIL


def cmd_oracle(args, cfg, run):
    o = cfg.oracle
    l = o.l if args.l is None else args.l
    n_r = o.n_r if args.nr is None else args.nr
    n_eig = o.n_eig if args.neig is None else args.neig
    sp = radial_sturm_liouville(cfg.params, l, n_r, n_eig=n_eig)
    rows = [[n, v, np.sqrt(v)] for n, v in enumerate(sp.eigenvalues)]
    run.csv("oracle.csv", ["n", "eigenvalue", "frequency"], rows)
    report = {"l": l, "n_r": n_r, "eigenvalues": sp.eigenvalues, "frequencies": np.sqrt(sp.eigenvalues)}
    run.json("oracle.json", report)
    return report, EXIT_OK


def _initial_data(spec, mats, basis):
    kind, _, arg = spec.partition(":")
    if kind == "eigenmode":
        k = int(arg or 0)
        res = solve_pencil(mats)
        idx = res.nonzero()
        idx = idx[res.sigma[idx].real > 0]
        idx = idx[np.argsort(res.sigma[idx].real)]
        if k >= idx.size:
            raise ConfigError(f"only {idx.size} positive modes", field="--init")
        x = res.vectors[:, idx[k]]
        s = res.sigma[idx[k]].real
        return x, 1j * s * x, {"frequency": s}
    if kind == "kernel":
        k = int(arg or 0)
        kern = basis.indices("kernel")
        if k >= kern.size:
            raise ConfigError(f"only {kern.size} kernel fields", field="--init")
        x = np.zeros(mats.size)
        x[kern[k]] = 1.0
        return x, np.zeros(mats.size), {}
    if kind == "file":
        if not Path(arg).exists():
            raise ConfigError(f"initial data file not found: {arg}", field="--init")
        data = read_csv_points(arg, ("xi_re", "xi_im", "xidot_re", "xidot_im"))
        if data.shape[0] != mats.size:
            raise ConfigError(f"initial data needs {mats.size} rows", field="--init")
        xi = data[:, 0] + 1j * data[:, 1]
        xd = data[:, 2] + 1j * data[:, 3]
        if not np.any(data[:, [1, 3]]):
            xi, xd = xi.real, xd.real
        return xi, xd, {}
    raise ConfigError(f"unknown initial data {spec!r}", field="--init")


def cmd_evolve(args, cfg, run):
    mats, _, basis = _assemble(cfg)
    ev = cfg.evolution
    t_final = ev.t_final if args.tfinal is None else args.tfinal
    dt = ev.dt if args.dt is None else args.dt
    xi, xd, info = _initial_data(args.init, mats, basis)
    rep = evolve((xi, xd), t_final, dt, mats, system=WaveSystem(mats))
    run.csv("energy.csv", ["t", "E", "E_phys", "bound"], rep.rows())
    report = {"init": args.init, **info, "t_final": float(rep.times[-1]), "dt": dt, "steps": rep.times.size - 1,
              "bound_holds": rep.passed, "first_violation": rep.first_violation,
              "growth_rate": rep.growth_rate, "beta_d": rep.beta_d, "two_omega": rep.coriolis_limit,
              "physical_energy_drift": rep.phys_drift, "max_imag": rep.max_imag}
    run.json("evolve.json", report)
    return report, EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify_all(args, cfg, run):
    select = None
    if args.only:
        try:
            select = {int(s) for s in args.only.split(",")}
        except ValueError as exc:
            raise ConfigError("--only takes comma separated criterion numbers", field="--only") from exc
    results = acceptance.run_suite(select, echo=lambda line: print(line, file=sys.stderr))
    table = [{k: v for k, v in r.as_dict().items() if k != "runtime"} for r in results]
    for row in table:
        row["details"].pop("within_time", None)
    run.json("acceptance.json", table)
    run.csv("acceptance.csv", ["number", "title", "passed"], [[r.number, r.title, int(r.passed)] for r in results])
    run.manifest.extra["timings"] = {str(r.number): r.runtime for r in results}
    passed = all(r.passed for r in results)
    summary = {"passed": sum(r.passed for r in results), "total": len(results)}
    return summary, EXIT_OK if passed else EXIT_FAIL


COMMANDS = {
    "stationary": cmd_stationary, "geometry": cmd_geometry, "flow": cmd_flow, "assemble": cmd_assemble,
    "spectrum": cmd_spectrum, "oracle": cmd_oracle, "evolve": cmd_evolve, "verify-all": cmd_verify_all,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", help="JSON configuration file")
    src.add_argument("--preset", help="named parameter set (default: reference)")
    common.add_argument("--out", default=None, help="output directory (default: ./out/<command>)")
    disc = argparse.ArgumentParser(add_help=False)
    disc.add_argument("--m", type=int, help="azimuthal wavenumber")
    disc.add_argument("--ns", type=int, help="radial cells")
    disc.add_argument("--nz", type=int, help="angular cells")
    disc.add_argument("--family", choices=["gradient", "kernel", "mixed"])

    parser = argparse.ArgumentParser(prog="rotating-atmosphere", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    sub.add_parser("stationary", parents=[common], help="stationary state and admissibility")
    p = sub.add_parser("geometry", parents=[common], help="vacuum boundary and case report")
    p.add_argument("--points", type=int, default=201)
    p = sub.add_parser("flow", parents=[common], help="flow map and Jacobian along trajectories")
    p.add_argument("--field", default="rigid", help="one of " + ", ".join(FIELD_REGISTRY))
    p.add_argument("--strength", type=float, default=1.0, help="angular rate, expansion rate or coefficient")
    p.add_argument("--seeds", help="CSV with columns x, y, z")
    p.add_argument("--tfinal", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--samples", type=int, default=100, help="rows per trajectory in the CSV")
    sub.add_parser("assemble", parents=[common, disc], help="mass, Coriolis and stiffness matrices")
    p = sub.add_parser("spectrum", parents=[common, disc], help="eigenfrequencies of the pencil")
    p.add_argument("--matrices", help="directory written by assemble")
    p = sub.add_parser("oracle", parents=[common], help="radial eigenvalues at rest")
    p.add_argument("--l", type=int)
    p.add_argument("--nr", type=int)
    p.add_argument("--neig", type=int)
    p = sub.add_parser("evolve", parents=[common, disc], help="time integration with energy log")
    p.add_argument("--tfinal", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--init", default="eigenmode:0", help="eigenmode:k, kernel:k or file:PATH")
    p = sub.add_parser("verify-all", parents=[common], help="run the acceptance suite")
    p.add_argument("--only", help="comma separated criterion numbers")
    return parser


def _error(exc, code):
    rec = exc.to_record() if isinstance(exc, AtmosphereError) else {"error": type(exc).__name__,
                                                                    "message": str(exc)}
    rec["exit_code"] = code
    print(json.dumps(rec, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        run = Run(args.command, cfg, args.out or Path("out") / args.command)
        summary, code = COMMANDS[args.command](args, cfg, run)
        run.manifest.extra["exit_code"] = code
        run.finish()
    except ConfigError as exc:
        return _error(exc, EXIT_CONFIG)
    except AtmosphereError as exc:
        return _error(exc, EXIT_FAIL)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _error(exc, EXIT_FAIL)
    sys.stdout.write(dumps(summary))
    return code


if __name__ == "__main__":
    sys.exit(main())
