"""Command-line front end: solve / eigen / verify-identities /
check-hypotheses / exist / oracle-radial / sweep.

Each run writes its artifacts plus a RunManifest JSON into a fresh
``runs/<timestamp>/`` directory (override with --out-dir).  Exit codes:
0 all requested gates pass, 1 numerical non-convergence (reports are still
written), 2 configuration / schema errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
try:
    import tomllib
except ModuleNotFoundError:        # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .eigen import first_eigenpair, lumped_lp_norm
from .existence import (HomotopyConfig, estimate_lambda_max, fixed_point_solve,
                        homotopy_branch, sweep_alpha)
from .fem import InnerProblem, inner_solve
from .geometry import (FeFunction, InvalidDomainError, InvalidParameterError,
                       Mesh, mesh_disc, mesh_polygon, mesh_to_text)
from .identities import (boundary_gradient_bound, energy_identity_residual,
                         hopf_boundary_check, monotonicity_diagnostic,
                         picone_value, pohozaev_residual)
from .nonlinearity import classify, estimate_Lambda, from_spec
from .radial import NoSolutionFound, radial_eigen, radial_solve_bvp

EXIT_OK, EXIT_NUMERIC, EXIT_SCHEMA = 0, 1, 2


class SchemaError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    config: dict
    versions: dict = field(default_factory=dict)
    mesh_stats: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    wall_clock: float = 0.0
    checks: dict = field(default_factory=dict)
    seed: int | None = None

    def passed(self) -> bool:
        return all(bool(v) for v in self.checks.values())


class RunDir:
    """Single-writer artifact directory for one run."""

    def __init__(self, out_dir: str | None, command: str):
        if out_dir is None:
            stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S.%f")
            out_dir = os.path.join("runs", stamp)
        self.path = Path(out_dir)
        self.path.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(
            command=command, config={},
            versions={"plapd": __version__, "numpy": np.__version__,
                      "scipy": scipy.__version__,
                      "python": sys.version.split()[0]})
        self._t0 = time.time()

    def write_text(self, name: str, text: str) -> str:
        p = self.path / name
        p.write_text(text)
        self.manifest.outputs.append(name)
        return str(p)

    def write_json(self, name: str, obj) -> str:
        return self.write_text(name, json.dumps(obj, indent=2, default=str) + "\n")

    def write_solution_csv(self, name: str, u: FeFunction) -> str:
        lines = ["x,y,u"]
        for (x, y), v in zip(u.mesh.nodes, u.values):
            lines.append(f"{x:.17g},{y:.17g},{v:.17g}")
        return self.write_text(name, "\n".join(lines) + "\n")

    def finish(self) -> None:
        self.manifest.wall_clock = time.time() - self._t0
        payload = asdict(self.manifest)
        (self.path / "manifest.json").write_text(
            json.dumps(payload, indent=2, default=str) + "\n")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise SchemaError(f"cannot read config {path}: {exc}")
    if not cfg:
        raise SchemaError(f"config file {path} is empty")
    return cfg


def _solver_kwargs(cfg: dict) -> dict:
    solver = cfg.get("solver", {})
    allowed = {"tol", "max_iter", "eps_final"}
    bad = set(solver) - allowed
    if bad:
        raise SchemaError(f"unknown [solver] keys: {sorted(bad)}")
    out = {}
    if "tol" in solver:
        out["tol"] = float(solver["tol"])
    if "max_iter" in solver:
        out["max_iter"] = int(solver["max_iter"])
    if "eps_final" in solver:
        out["eps_final"] = float(solver["eps_final"])
    return out


def _build_mesh(args) -> Mesh:
    if args.domain == "disc":
        return mesh_disc(args.R, args.h)
    if args.domain == "square":
        s = args.R
        return mesh_polygon([(-s, -s), (s, -s), (s, s), (-s, s)], args.h)
    raise SchemaError(f"unknown domain {args.domain!r}")


def _mesh_stats(mesh: Mesh) -> dict:
    return {"n_nodes": int(mesh.n_nodes), "n_triangles": int(mesh.n_triangles),
            "n_boundary": int(np.sum(mesh.boundary)), "h": float(mesh.h)}


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("PLAPD_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# subcommands

def cmd_solve(args, cfg, run: RunDir) -> int:
    f = from_spec(args.f, p=args.p, N=2)
    mesh = _build_mesh(args)
    run.manifest.mesh_stats = _mesh_stats(mesh)
    if args.mesh_out:
        Path(args.mesh_out).write_text(mesh_to_text(mesh))
        run.manifest.outputs.append(args.mesh_out)
    skw = _solver_kwargs(cfg)
    hcfg = HomotopyConfig(Lambda=estimate_Lambda(f, args.p), lambda0=0.0,
                          max_outer=skw.get("max_iter", args.max_outer),
                          solver_tol=skw.get("tol", 1e-10))
    bp = fixed_point_solve(f, args.p, hcfg, mesh, t=0.0)
    run.write_json("branch_point.json",
                   {"status": bp.status, "converged": bp.converged,
                    "sup_norm": bp.sup_norm, "residual": bp.residual,
                    "iterations": bp.outer_iterations})
    run.manifest.checks["fixed_point_converged"] = bp.converged
    if not bp.converged or bp.solution is None:
        return EXIT_NUMERIC
    u = bp.solution
    run.write_solution_csv("solution.csv", u)
    eig = first_eigenpair(args.p, mesh, tol=1e-6)
    reports = [pohozaev_residual(u, f, args.p),
               picone_value(u, f, args.p, eig),
               energy_identity_residual(u, f, args.p),
               hopf_boundary_check(u),
               monotonicity_diagnostic(u)]
    run.write_json("identities.json", [r.to_dict() for r in reports])
    for r in reports:
        run.manifest.checks[r.name] = r.passed
    return EXIT_OK if run.manifest.passed() else EXIT_NUMERIC


def cmd_eigen(args, cfg, run: RunDir) -> int:
    mesh = _build_mesh(args)
    run.manifest.mesh_stats = _mesh_stats(mesh)
    skw = _solver_kwargs(cfg)
    pair = first_eigenpair(args.p, mesh, tol=skw.get("tol", args.tol),
                           max_outer=skw.get("max_iter", 200))
    run.write_solution_csv("phi1.csv", pair.phi)
    run.write_json("eigen.json", {
        "lambda1": pair.lam, "iterations": pair.iterations,
        "converged": pair.converged, "rayleigh_trace": pair.rayleigh_trace,
        "phi1_lp_norm": lumped_lp_norm(pair.phi, args.p)})
    run.manifest.checks["eigen_converged"] = pair.converged
    print(f"lambda1 = {pair.lam:.10g}")
    return EXIT_OK if pair.converged else EXIT_NUMERIC


def cmd_verify_identities(args, cfg, run: RunDir) -> int:
    f = from_spec(args.f, p=args.p, N=2)
    mesh = _build_mesh(args)
    run.manifest.mesh_stats = _mesh_stats(mesh)
    hcfg = HomotopyConfig(Lambda=estimate_Lambda(f, args.p), lambda0=0.0,
                          max_outer=args.max_outer)
    bp = fixed_point_solve(f, args.p, hcfg, mesh, t=0.0)
    if not bp.converged or bp.solution is None:
        run.manifest.checks["fixed_point_converged"] = False
        return EXIT_NUMERIC
    u = bp.solution
    wanted = [c.strip() for c in args.checks.split(",") if c.strip()]
    known = {"pohozaev", "picone", "energy", "hopf", "monotone", "boundary"}
    bad = set(wanted) - known
    if bad:
        raise SchemaError(f"unknown checks: {sorted(bad)}")
    eig = None
    reports = []
    for c in wanted:
        if c == "pohozaev":
            reports.append(pohozaev_residual(u, f, args.p))
        elif c == "picone":
            eig = eig or first_eigenpair(args.p, mesh, tol=1e-6)
            reports.append(picone_value(u, f, args.p, eig))
        elif c == "energy":
            reports.append(energy_identity_residual(u, f, args.p))
        elif c == "hopf":
            reports.append(hopf_boundary_check(u))
        elif c == "monotone":
            reports.append(monotonicity_diagnostic(u))
        elif c == "boundary":
            reports.append(boundary_gradient_bound(u, f, args.p))
    run.write_json("identities.json", [r.to_dict() for r in reports])
    for r in reports:
        run.manifest.checks[r.name] = r.passed
        print(f"{r.name}: {'pass' if r.passed else 'FAIL'} (relative {r.relative:.3g})")
    return EXIT_OK if run.manifest.passed() else EXIT_NUMERIC


def cmd_check_hypotheses(args, cfg, run: RunDir) -> int:
    f = from_spec(args.f, p=args.p, N=args.N)
    rep = classify(f, args.p, args.N)
    run.write_json("hypotheses.json", rep.to_dict())
    print(json.dumps(rep.to_dict(), indent=2, default=str))
    run.manifest.checks["classified"] = True
    return EXIT_OK


def cmd_exist(args, cfg, run: RunDir) -> int:
    f = from_spec(args.f, p=args.p, N=2)
    mesh = _build_mesh(args)
    run.manifest.mesh_stats = _mesh_stats(mesh)
    Lam = estimate_Lambda(f, args.p)
    if args.alpha_sweep:
        a, b, n = args.alpha_sweep.split(":")
        rows = sweep_alpha(args.p, args.N, np.linspace(float(a), float(b), int(n)))
        run.write_json("alpha_sweep.json", rows)
        run.manifest.checks["sweep_completed"] = True
        return EXIT_OK
    if args.lambda_sweep:
        a, b, n = args.lambda_sweep.split(":")
        grid = tuple(np.geomspace(float(a), float(b), int(n)))
        hcfg = HomotopyConfig(Lambda=Lam, max_outer=args.max_outer)
        rep = estimate_lambda_max(f, args.p, mesh, lambda_grid=grid, cfg=hcfg)
        run.write_json("lambda_max.json", {
            "lambda_hat": rep.lambda_hat, "bracket": list(rep.bracket),
            "lower_bound_only": rep.lower_bound_only,
            "anomalies": rep.anomalies, "points": rep.points})
        run.manifest.checks["threshold_found"] = not rep.lower_bound_only
        print(f"lambda_hat = {rep.lambda_hat}  bracket = {rep.bracket}")
        return EXIT_OK if not rep.lower_bound_only else EXIT_NUMERIC
    lam0 = args.homotopy if args.homotopy is not None else 1.0
    hcfg = HomotopyConfig(Lambda=Lam, lambda0=lam0, max_outer=args.max_outer)
    pts = homotopy_branch(f, args.p, hcfg, mesh)
    run.write_json("branch.json", [
        {"t": bp.parameter, "status": bp.status, "converged": bp.converged,
         "sup_norm": bp.sup_norm, "residual": bp.residual} for bp in pts])
    ok = pts[-1].converged
    run.manifest.checks["branch_end_converged"] = ok
    if ok and pts[-1].solution is not None:
        run.write_solution_csv("solution.csv", pts[-1].solution)
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_oracle_radial(args, cfg, run: RunDir) -> int:
    f = from_spec(args.f, p=args.p, N=args.N)
    try:
        prof = radial_solve_bvp(args.p, args.N, f, args.R)
    except NoSolutionFound as exc:
        run.write_json("oracle.json", {"solved": False, "error": str(exc)})
        run.manifest.checks["oracle_solved"] = False
        print(f"no solution found: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    lines = ["r,u"] + [f"{r:.17g},{u:.17g}" for r, u in zip(prof.r, prof.values)]
    name = args.out if args.out else "profile.csv"
    run.write_text(name, "\n".join(lines) + "\n")
    run.write_json("oracle.json", {"solved": True,
                                   "sup_norm": float(np.max(prof.values))})
    run.manifest.checks["oracle_solved"] = True
    return EXIT_OK


def cmd_sweep(args, cfg, run: RunDir) -> int:
    """Eigenvalue scaling sweep lambda1(R) * R^p across radii."""
    rows = []
    for R in np.linspace(args.r_min, args.r_max, args.n):
        lam = radial_eigen(args.p, args.N, float(R))
        rows.append({"R": float(R), "lambda1": lam,
                     "scaled": lam * float(R) ** args.p})
    run.write_json("eigen_sweep.json", rows)
    scaled = [r["scaled"] for r in rows]
    spread = (max(scaled) - min(scaled)) / max(scaled)
    run.manifest.checks["scaling_constant"] = spread < 1e-6
    print(f"lambda1 * R^p spread: {spread:.3g}")
    return EXIT_OK if spread < 1e-6 else EXIT_NUMERIC


# ---------------------------------------------------------------------------

def _add_common(sp, mesh=True):
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--config", default=None, help="TOML config file")
    sp.add_argument("--out-dir", default=None)
    if mesh:
        sp.add_argument("--domain", default="disc", choices=["disc", "square"])
        sp.add_argument("--R", type=float, default=1.0)
        sp.add_argument("--h", type=float, default=0.1)
        sp.add_argument("--mesh-out", default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plapd",
                                 description="p-Laplacian Dirichlet laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="fixed-point solve + identity reports")
    _add_common(s)
    s.add_argument("--f", default="power:q=3")
    s.add_argument("--max-outer", type=int, default=200)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("eigen", help="first eigenpair")
    _add_common(s)
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_eigen)

    s = sub.add_parser("verify-identities", help="identity checks on a solve")
    _add_common(s)
    s.add_argument("--f", default="power:q=3")
    s.add_argument("--max-outer", type=int, default=200)
    s.add_argument("--checks",
                   default="pohozaev,picone,energy,hopf,monotone,boundary")
    s.set_defaults(func=cmd_verify_identities)

    s = sub.add_parser("check-hypotheses", help="classify a nonlinearity")
    _add_common(s, mesh=False)
    s.add_argument("--f", required=True)
    s.add_argument("--N", type=int, default=2)
    s.set_defaults(func=cmd_check_hypotheses)

    s = sub.add_parser("exist", help="homotopy branch / threshold / alpha sweep")
    _add_common(s)
    s.add_argument("--f", default="power:q=3")
    s.add_argument("--N", type=int, default=3)
    s.add_argument("--max-outer", type=int, default=200)
    s.add_argument("--lambda-sweep", default=None, metavar="A:B:N")
    s.add_argument("--homotopy", type=float, default=None, metavar="LAMBDA0")
    s.add_argument("--alpha-sweep", default=None, metavar="A:B:N")
    s.set_defaults(func=cmd_exist)

    s = sub.add_parser("oracle-radial", help="radial BVP oracle")
    _add_common(s, mesh=False)
    s.add_argument("--f", required=True)
    s.add_argument("--N", type=int, default=2)
    s.add_argument("--R", type=float, default=1.0)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_oracle_radial)

    s = sub.add_parser("sweep", help="eigenvalue scaling sweep over radii")
    _add_common(s, mesh=False)
    s.add_argument("--N", type=int, default=2)
    s.add_argument("--r-min", type=float, default=1.0)
    s.add_argument("--r-max", type=float, default=2.0)
    s.add_argument("--n", type=int, default=3)
    s.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SCHEMA if exc.code not in (0, None) else 0
    os.environ.setdefault("OMP_NUM_THREADS", str(_threads()))
    run = None
    try:
        cfg = _load_config(args.config)
        run = RunDir(args.out_dir, args.command)
        run.manifest.config = {**cfg, **{k: v for k, v in vars(args).items()
                                         if k not in ("func", "config")}}
        if "solver" in cfg:
            _solver_kwargs(cfg)   # validate eagerly
        code = args.func(args, cfg, run)
        return code
    except (SchemaError, InvalidParameterError, InvalidDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    finally:
        if run is not None:
            run.finish()


if __name__ == "__main__":
    sys.exit(main())
