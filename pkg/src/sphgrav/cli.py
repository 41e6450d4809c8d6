"""Command-line driver: ``sphgrav {run,riemann,converge,diagnose}``.

Exit codes: 0 success, 1 failed convergence or diagnostic checks that are
not monitor violations, 2 configuration or input error, 3 CFL abort,
4 invariant-monitor abort (``diagnose`` also uses 4 for failed checks).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict
from importlib import metadata
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .diagnostics import Diagnostics, DiagnosticsReport, evaluate_checks
from .errors import CFLViolation, ConfigError, DomainError, InvariantViolation
from .gravity import prefix_mass
from .riemann import FanBatch, solve_batch, solve_boundary_batch
from .scheme import CellArray, Trajectory, run

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CFL, EXIT_MONITOR = 0, 1, 2, 3, 4

CSV_COLUMNS = ("x", "rho", "m", "vrho", "omega", "w", "z", "phi_x")


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def snapshot_table(cells: CellArray, N: int) -> np.ndarray:
    x = cells.centers
    wgt = x ** (N - 1)
    pm = prefix_mass(cells).at_centers()
    w, z = cells.invariants()
    return np.column_stack([x, cells.vrho / wgt, cells.omega / wgt, cells.vrho, cells.omega,
                            w, z, -pm / wgt])


def write_csv(path: Path, table: np.ndarray, columns=CSV_COLUMNS) -> None:
    np.savetxt(path, table, delimiter=",", header=",".join(columns), comments="", fmt="%.17g")


def _out_dir(arg: str | None) -> Path:
    out = Path(arg or os.environ.get("SPHGRAV_OUT_DIR", "sphgrav-out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_times(text: str | None):
    if text is None:
        return None
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"invalid --snapshot-times {text!r}") from None


def _load(args, **extra) -> RunConfig:
    overrides = dict(extra)
    times = _parse_times(getattr(args, "snapshot_times", None))
    if times is not None:
        overrides["snapshot_times"] = times
    if getattr(args, "l", None) is not None:
        overrides["l"] = args.l
    if getattr(args, "T", None) is not None:
        overrides["T"] = args.T
    return load_config(args.config, overrides=overrides)


def execute(cfg: RunConfig) -> tuple[Trajectory, DiagnosticsReport]:
    diag = Diagnostics(trace_eps=cfg.trace_eps, consistency=cfg.consistency)
    traj = run(cfg.scheme, observers=[diag])
    return traj, diag.finish()


def _report_json(report: DiagnosticsReport, cfg: RunConfig) -> str:
    data = asdict(report)
    data["checks"] = evaluate_checks(report, entropy_tol=cfg.entropy_tol)
    return json.dumps(data, indent=1, sort_keys=True)


def cmd_run(args) -> int:
    cfg = _load(args)
    out = _out_dir(args.out_dir)
    t0 = time.perf_counter()
    traj, report = execute(cfg)
    elapsed = time.perf_counter() - t0
    N = cfg.scheme.N
    files = []
    snaps = traj.snapshots or [traj.final]
    for i, cells in enumerate(snaps):
        name = f"snapshot_{i:03d}_t{cells.time:.6f}.csv"
        write_csv(out / name, snapshot_table(cells, N))
        files.append(name)
    diag_text = _report_json(report, cfg)
    (out / "diagnostics.json").write_text(diag_text)
    files.append("diagnostics.json")
    manifest = {
        "config": cfg.raw,
        "version": _version(),
        "h": cfg.scheme.h,
        "n_steps": traj.n_steps,
        "alpha0": traj.alpha0,
        "monitor_C": traj.monitor_C,
        "wall_clock_seconds": elapsed,
        "files": files,
        "diagnostics_sha256": hashlib.sha256(diag_text.encode()).hexdigest(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    checks = evaluate_checks(report, entropy_tol=cfg.entropy_tol)
    print(f"steps={traj.n_steps} h={cfg.scheme.h:.6g} t={traj.final.time:.6g} "
          f"alpha0={traj.alpha0:.6g} C={traj.monitor_C:.6g} wall={elapsed:.2f}s")
    for name, ok in checks.items():
        print(f"  {'PASS' if ok else 'FAIL'} {name}")
    print(f"outputs in {out}")
    return EXIT_OK


def _parse_state(text: str) -> tuple[float, float]:
    try:
        rho, u = (float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"state must be 'rho,u', got {text!r}") from None
    if not rho > 0.0:
        raise ConfigError(f"density must be positive, got {rho!r}")
    return rho, u


def describe_fan(batch: FanBatch) -> list[str]:
    lines = []
    fan = batch.fan(0)
    if not fan.waves:
        lines.append("constant solution")
    for w in fan.waves:
        if w.is_shock:
            lines.append(f"{w.family}-shock speed {w.speed_lo:.12g}")
        else:
            lines.append(f"{w.family}-rarefaction speeds [{w.speed_lo:.12g}, {w.speed_hi:.12g}]")
    m = fan.middle
    lines.append(f"middle state rho={m.vrho:.12g} u={m.omega / m.vrho:.12g}")
    if batch.boundary:
        lines.append(f"wall state rho={m.vrho:.12g} u=0")
    return lines


def cmd_riemann(args) -> int:
    rho_r, u_r = _parse_state(args.right)
    if args.wall:
        batch = solve_boundary_batch(np.array([rho_r]), np.array([rho_r * u_r]))
    else:
        if args.left is None:
            raise ConfigError("--left is required unless --wall is given")
        rho_l, u_l = _parse_state(args.left)
        batch = solve_batch(np.array([rho_l]), np.array([rho_l * u_l]),
                            np.array([rho_r]), np.array([rho_r * u_r]))
    for line in describe_fan(batch):
        print(line)
    if args.csv:
        lo = max(args.xi_min, 0.0) if args.wall else args.xi_min
        xi = np.linspace(lo, args.xi_max, args.points)
        cols = [getattr(batch, f) for f in (
            "rho_l", "u_l", "rho_m", "u_m", "rho_r", "u_r", "shock1", "shock2",
            "s1_lo", "s1_hi", "s2_lo", "s2_hi")]
        rho, om = FanBatch(*cols, boundary=batch.boundary).sample(xi)
        write_csv(Path(args.csv), np.column_stack([xi, rho, om / rho]), ("xi", "rho", "u"))
    return EXIT_OK


def restrict_conservative(fine: CellArray, coarse_edges: np.ndarray) -> np.ndarray:
    """Average the piecewise-constant weighted density of ``fine`` over coarse cells."""
    e = fine.edges
    cum = np.concatenate(([0.0], np.cumsum(fine.vrho * fine.widths)))
    Q = np.interp(coarse_edges, e, cum)
    return np.diff(Q) / np.diff(coarse_edges)


def convergence_table(levels, final_cells, reports):
    coarse = final_cells[0]
    end = min(c.edges[-1] for c in final_cells)
    edges = coarse.edges[coarse.edges <= end + 1e-12]
    widths = np.diff(edges)
    proj = [restrict_conservative(c, edges) for c in final_cells]
    rows = []
    for k, (lev, rep) in enumerate(zip(levels, reports)):
        d = float(np.sum(np.abs(proj[k] - proj[k - 1]) * widths)) if k else float("nan")
        res = rep.weak_residuals.get("standard", {})
        rows.append({"l": lev, "h": rep.h, "n_steps": rep.n_steps, "l1_diff": d,
                     "r_mass": res.get("mass", float("nan")),
                     "r_momentum": res.get("momentum", float("nan")),
                     "r_entropy": res.get("entropy", float("nan")),
                     "consistency_sum": rep.consistency_sum if rep.consistency_sum is not None else float("nan"),
                     "monitor_rate": rep.monitor_rate, "max_speed": rep.max_speed})
    return rows


def convergence_ok(rows, slack: float = 1.0) -> bool:
    def nonincreasing(vals):
        return all(b <= slack * a for a, b in zip(vals[:-1], vals[1:]))

    d = [r["l1_diff"] for r in rows[1:]]
    ok = nonincreasing(d)
    for key in ("r_mass", "r_momentum"):
        ok = ok and nonincreasing([abs(r[key]) for r in rows])
    return ok


def cmd_converge(args) -> int:
    try:
        levels = [float(v) for v in args.levels.split(",")]
    except ValueError:
        raise ConfigError(f"invalid --levels {args.levels!r}") from None
    if len(levels) < 2 or any(b >= a for a, b in zip(levels[:-1], levels[1:])):
        raise ConfigError("--levels needs at least two strictly decreasing mesh lengths")
    base = _load(args, l=levels[0])
    out = _out_dir(args.out_dir)
    finals, reports = [], []
    for lev in levels:
        cfg = base.with_level(lev)
        traj, rep = execute(cfg)
        finals.append(traj.final)
        reports.append(rep)
        print(f"level l={lev:g}: {traj.n_steps} steps, t={traj.final.time:.6g}")
    rows = convergence_table(levels, finals, reports)
    keys = list(rows[0])
    write_csv(out / "convergence.csv", np.array([[r[k] for k in keys] for r in rows]), keys)
    ok = convergence_ok(rows, args.slack)
    clean = [{k: (None if isinstance(v, float) and np.isnan(v) else v) for k, v in r.items()} for r in rows]
    (out / "convergence.json").write_text(json.dumps({"rows": clean, "slack": args.slack, "pass": ok},
                                                     indent=1, sort_keys=True))
    print(" ".join(f"{k:>15}" for k in keys))
    for r in rows:
        print(" ".join(f"{r[k]:>15.6g}" for k in keys))
    print("PASS" if ok else "FAIL", "convergence: L1 differences and residuals nonincreasing")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_diagnose(args) -> int:
    try:
        data = json.loads(Path(args.path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read diagnostics {args.path}: {exc}") from None
    data.pop("checks", None)
    try:
        report = DiagnosticsReport(**data)
    except TypeError as exc:
        raise ConfigError(f"not a diagnostics file: {exc}") from None
    checks = evaluate_checks(report, entropy_tol=args.entropy_tol)
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if all(checks.values()) else EXIT_MONITOR


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sphgrav", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the scheme and write snapshots and diagnostics")
    r.add_argument("--config", required=True)
    r.add_argument("--out-dir")
    r.add_argument("--snapshot-times", help="comma-separated times")
    r.add_argument("--l", type=float, help="override the mesh length")
    r.add_argument("--T", type=float, help="override the final time")
    r.set_defaults(func=cmd_run)

    q = sub.add_parser("riemann", help="solve one (wall) Riemann problem")
    q.add_argument("--left", help="left state 'rho,u'")
    q.add_argument("--right", required=True, help="right state 'rho,u'")
    q.add_argument("--wall", action="store_true", help="reflecting wall on the left")
    q.add_argument("--csv", help="write the sampled profile here")
    q.add_argument("--xi-min", type=float, default=-3.0)
    q.add_argument("--xi-max", type=float, default=3.0)
    q.add_argument("--points", type=int, default=601)
    q.set_defaults(func=cmd_riemann)

    c = sub.add_parser("converge", help="refinement study over several mesh lengths")
    c.add_argument("--config", required=True)
    c.add_argument("--levels", required=True, help="comma-separated decreasing mesh lengths")
    c.add_argument("--out-dir")
    c.add_argument("--slack", type=float, default=1.0)
    c.set_defaults(func=cmd_converge)

    d = sub.add_parser("diagnose", help="re-check a diagnostics JSON file")
    d.add_argument("path")
    d.add_argument("--entropy-tol", type=float, default=1e-8)
    d.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CFLViolation as exc:
        print(f"CFL abort: {exc}", file=sys.stderr)
        return EXIT_CFL
    except InvariantViolation as exc:
        print(f"invariant monitor abort: {exc}", file=sys.stderr)
        return EXIT_MONITOR


if __name__ == "__main__":
    sys.exit(main())
