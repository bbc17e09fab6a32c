"""Command line entry point ``gpliouville``.

Subcommands: check-operators, simulate, liouville-report, coercivity-sweep,
golden-regen. Each writes a JSON report and exits with 0 only if every
enabled check passed (2 on configuration errors).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import golden_entry_for, load_golden, regenerate
from .config import ConfigError, RunConfig, load_config
from .evolution import (
    BINARY_MAGIC,
    perturbed_soliton,
    read_binary,
    read_csv,
    simulate,
)
from .grid import Grid, l2_norm
from .operators import OperatorContext, bump_test_function, kernel_kc, verify_factorization
from .pipeline import analyze, modulation_rows, summarize, virial_rows
from .reporting import Report, write_csv, write_field_csv
from .soliton import AdmissibilityError, SQRT2, check_velocity

log = logging.getLogger("gpliouville")

TOL_FACTORIZATION = 1e-5
TOL_INVERSION = 1e-7
TOL_KC = 1e-8
TOL_ORTHO = 1e-9
TOL_ENERGY = 1e-6
TOL_IDENTITY = 1e-10


# check-operators ------------------------------------------------------------

def inversion_checks(ctx: OperatorContext, trials: int, seed: int) -> tuple[float, float]:
    """Worst round-trip residual and worst one-sided disagreement (on |x| <= L/4)."""
    rng = np.random.default_rng(seed + 1)
    g = ctx.grid
    inner = np.abs(g.x) <= 0.25 * g.half_length
    rt, agree = 0.0, 0.0
    for _ in range(trials):
        f = ctx.perp_project(bump_test_function(g, rng))
        gsol = ctx.invert_S_star(f)
        rt = max(rt, l2_norm(g, ctx.apply_S_star(gsol) - f) / l2_norm(g, f))
        gr, gl = ctx.invert_S_star(f, one_sided=True)
        scale = np.max(np.abs(gsol[inner]))
        agree = max(agree, float(np.max(np.abs(gr - gl)[inner]) / scale))
    return rt, agree


def kc_error(ctx: OperatorContext) -> float:
    x, k = kernel_kc(ctx)
    half = x <= 0.5 * ctx.grid.half_length
    return float(np.max(np.abs(k[half] + np.exp(-ctx.beta * x[half]))))


def cmd_check_operators(args) -> Report:
    c = check_velocity(args.c)
    if args.trials < 1:
        raise ConfigError("trials must be >= 1")
    grid = Grid.from_spacing(args.half_length, args.h)
    ctx = OperatorContext.for_velocity(c, grid)
    rep = Report("check-operators", __version__)
    fac = verify_factorization(ctx, args.trials, args.seed)
    rep.check("factorization_L_plus", fac.r1_max, TOL_FACTORIZATION)
    rep.check("factorization_conjugation", fac.r2_max, TOL_FACTORIZATION)
    rt, agree = inversion_checks(ctx, args.trials, args.seed)
    rep.check("S_star_round_trip", rt, TOL_INVERSION)
    rep.check("S_star_one_sided_agreement", agree, TOL_INVERSION)
    rep.check("k_c_identity", kc_error(ctx), TOL_KC)
    rep.summary = {"c": c, "beta": ctx.beta, "h": grid.spacing, "half_length": grid.half_length,
                   "trials": args.trials, "seed": args.seed, "r1": fac.r1, "r2": fac.r2}
    rep.config = (f"c = {c}\nhalf_length = {grid.half_length}\nn_points = {grid.n_points}\n"
                  f"trials = {args.trials}\nseed = {args.seed}\n")
    return rep


# simulate -------------------------------------------------------------------

def _overrides(args) -> dict:
    keys = ("c0", "c_frame", "delta", "t_end", "dt", "half_length", "n_points", "snapshot_stride",
            "shape", "seed", "output_dir", "format")
    return {k: getattr(args, k, None) for k in keys if getattr(args, k, None) is not None}


def _load(args) -> RunConfig:
    if args.config is None:
        raise ConfigError("--config is required")
    return load_config(args.config, _overrides(args))


def cmd_simulate(args) -> Report:
    cfg = _load(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ev = cfg.evolution(args.backend)
    grid = ev.grid
    psi0 = perturbed_soliton(grid, cfg.c0, cfg.delta, cfg.shape, cfg.seed, cfg.project)
    traj = simulate(psi0, ev)
    rep = Report("simulate", __version__, cfg.hash(), cfg.to_text())
    if cfg.format == "csv":
        rep.files.append(traj.save_csv(out / "trajectory.csv"))
    else:
        rep.files.append(traj.save_binary(out / "trajectory.bin"))
    rep.files.append(traj.save_energy_csv(out / "energy.csv"))
    rep.check("relative_energy_drift", traj.relative_energy_drift(), TOL_ENERGY)
    rep.check("relative_mass_drift", traj.relative_mass_drift(), TOL_ENERGY)
    edge = psi0[[0, -1]]
    rep.flag("boundary_pinned", bool(np.all(traj.states[:, [0, -1]] == edge)))
    rep.summary = {
        "n_snapshots": len(traj), "snapshot_dt": traj.snapshot_dt,
        "energy_initial": float(traj.energies[0]), "energy_final": float(traj.energies[-1]),
        "boundary_activity": traj.boundary_activity(),
    }
    rep.files.append(rep.write(out / "run.json"))
    return rep


# liouville-report -------------------------------------------------------------

def load_trajectory(path, n_points: int):
    path = Path(path)
    with path.open("rb") as fh:
        head = fh.read(4)
    if head == BINARY_MAGIC:
        return read_binary(path, n_points)
    return read_csv(path, n_points)


def _compare_golden(rep: Report, summary: dict, entry: dict):
    ref = entry.get("summary", {})
    rtol = entry.get("rtol", 1e-6)
    for key, g in ref.items():
        if not isinstance(g, (int, float)) or key not in summary:
            continue
        v = summary[key]
        rep.check(f"golden:{key}", abs(v - g), rtol * abs(g) + 1e-15)


def cmd_liouville_report(args) -> Report:
    cfg = _load(args)
    out = Path(cfg.output_dir)
    traj_path = args.trajectory
    if traj_path is None:
        name = "trajectory.csv" if cfg.format == "csv" else "trajectory.bin"
        traj_path = out / name
    times, states = load_trajectory(traj_path, cfg.n_points)
    if len(times) < 3:
        raise ConfigError(f"insufficient frames for time derivatives: need >= 3, got {len(times)}")
    grid = Grid(cfg.half_length, cfg.n_points)
    an = analyze(grid, times, states, cfg.c_frame, cfg.gamma, cfg.edge_band, cfg.ortho_tol,
                 field_stride=args.field_stride)
    s = summarize(an)
    rep = Report("liouville-report", __version__, cfg.hash(), cfg.to_text(), summary=s)
    rep.files.append(write_csv(out / "modulation.csv",
                               ["t", "a", "c", "theta", "a_dot", "c_dot", "theta_dot", "r1", "r2", "r3"],
                               modulation_rows(an)))
    if an.fields:
        rep.files.append(write_field_csv(out / "transformed.csv", an.t, an.fields))
    rep.files.append(write_csv(out / "theta12.csv", ["t", "theta12"], zip(an.t, an.theta12)))
    from .virial import VirialReport
    rep.files.append(write_csv(out / "virial.csv", VirialReport.CSV_FIELDS, virial_rows(an)))

    rep.check("orthogonality", s["max_ortho_residual"], TOL_ORTHO)
    rep.check("zeta_identity", s["max_zeta_err"], TOL_IDENTITY)
    rep.check("q_identity", s["max_q_err"], TOL_IDENTITY)
    n_sq = np.array([x.N_sq for x in an.scalars])
    slack = 1e-12 * float(np.max(n_sq)) if len(n_sq) else 0.0
    rep.check("coercivity_min_margin", s["min_coercivity_margin"], -slack, mode="ge")
    name, entry = golden_entry_for(cfg)
    golden = load_golden()
    if name is not None:
        rep.summary["golden_entry"] = name
        if "summary" in entry:
            _compare_golden(rep, s, entry)
        if "tol_system_eps" in entry:
            rep.check("eps_system_residual", s["max_eps_residual"], entry["tol_system_eps"])
            rep.check("transformed_system_residual", s["max_transformed_residual"],
                      entry["tol_system_transformed"])
        if "tol_virial" in entry:
            rep.check("virial_balance", s["max_balance_residual"], entry["tol_virial"])
    if args.trend_checks:
        thr = golden.get("entries", {}).get("trend", {}).get("thresholds", {})
        from .calibration import trend_metrics
        tm = trend_metrics(an)
        rep.summary["trend"] = tm
        rep.check("trend_N_ratio", tm["N_ratio"], thr.get("N_ratio_max", 0.5))
        rep.check("trend_int_N_sq_tail_fraction", tm["int_N_sq_tail_fraction"],
                  thr.get("int_N_sq_tail_fraction_max", 0.1))
        if "I_ripple_max" in thr:
            rep.check("trend_I_ripple", tm["I_max_drop"], thr["I_ripple_max"])
    rep.files.append(rep.write(out / "report.json"))
    return rep


# coercivity-sweep -------------------------------------------------------------

def random_decaying_frame(grid: Grid, rng: np.random.Generator):
    """Smooth random (w1, w2) with Gaussian envelopes of random width and centre."""
    x = grid.x
    fields = []
    for _ in range(2):
        width = rng.uniform(0.5, 4.0)
        centre = rng.uniform(-3.0, 3.0)
        env = np.exp(-0.5 * ((x - centre) / width) ** 2)
        poly = sum(rng.normal() * np.cos(rng.uniform(0.0, 3.0) * x + rng.uniform(0, 2 * np.pi))
                   for _ in range(3))
        fields.append(rng.lognormal(0.0, 1.0) * env * poly)
    return fields


def coercivity_sweep(velocities, frames: int, seed: int, grid: Grid) -> dict:
    from .transform import TransformedFrame
    from .virial import coercivity_check, norm_N_sq

    out = {}
    for c in velocities:
        c = check_velocity(c)
        ctx = OperatorContext.for_velocity(c, grid)
        rng = np.random.default_rng([seed, int(round(1000 * (c + 2)))])
        violations = 0
        min_ratio = np.inf
        min_sharp = np.inf
        for _ in range(frames):
            w1, w2 = random_decaying_frame(grid, rng)
            tf = TransformedFrame(0.0, c, w1, w1, w2, ctx)
            ok, margin, sharp = coercivity_check(tf)
            n2 = norm_N_sq(tf)
            violations += not ok
            min_ratio = min(min_ratio, margin / n2)
            min_sharp = min(min_sharp, sharp / n2)
        out[c] = {"violations": violations, "min_margin_over_N_sq": float(min_ratio),
                  "min_sharp_margin_over_N_sq": float(min_sharp)}
    return out


def cmd_coercivity_sweep(args) -> Report:
    if args.frames < 1:
        raise ConfigError("frames must be >= 1")
    grid = Grid.from_spacing(args.half_length, args.h)
    res = coercivity_sweep(args.c, args.frames, args.seed, grid)
    rep = Report("coercivity-sweep", __version__)
    for c, r in res.items():
        rep.check(f"violations[c={c:+g}]", r["violations"], 0)
    rep.summary = {f"{c:+g}": r for c, r in res.items()}
    rep.config = (f"c = {','.join(f'{c:g}' for c in args.c)}\nframes = {args.frames}\n"
                  f"seed = {args.seed}\nhalf_length = {grid.half_length}\nn_points = {grid.n_points}\n")
    return rep


# golden-regen -----------------------------------------------------------------

def cmd_golden_regen(args) -> Report:
    parts = tuple(args.parts) if args.parts else ("default", "system", "virial", "trend")
    golden = regenerate(args.output, args.backend, parts)
    rep = Report("golden-regen", __version__, config="".join(
        golden["entries"][name]["config"] for name in parts))
    for name in parts:
        e = golden["entries"][name]
        if "converged" in e:
            rep.flag(f"{name}_refinement_converged", e["converged"], json.dumps(e["order"]))
        else:
            rep.flag(f"{name}_generated", True)
    rep.summary = golden
    return rep


# argument parsing -------------------------------------------------------------

def _velocity_list(s: str):
    return [float(v) for v in s.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gpliouville", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--report", help="also write the JSON report here")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-operators", help="factorization, S* inversion and k_c checks")
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--half-length", type=float, default=30.0)
    p.add_argument("--h", type=float, default=0.02)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check_operators)

    def run_flags(p):
        p.add_argument("--config", required=True, help="key = value run configuration")
        p.add_argument("--c0", type=float)
        p.add_argument("--c-frame", dest="c_frame", type=float)
        p.add_argument("--delta", type=float)
        p.add_argument("--t-end", dest="t_end", type=float)
        p.add_argument("--dt", type=float)
        p.add_argument("--half-length", dest="half_length", type=float)
        p.add_argument("--n-points", dest="n_points", type=int)
        p.add_argument("--snapshot-stride", dest="snapshot_stride", type=int)
        p.add_argument("--shape")
        p.add_argument("--seed", type=int)
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--format", choices=("csv", "binary"))

    p = sub.add_parser("simulate", help="evolve a perturbed soliton and store the trajectory")
    run_flags(p)
    p.add_argument("--backend", choices=("compiled", "python"))
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("liouville-report", help="modulation, transformed variables and virial balance")
    run_flags(p)
    p.add_argument("--trajectory", help="trajectory file (default: <output_dir>/trajectory.*)")
    p.add_argument("--field-stride", type=int, default=0,
                   help="write v1, w1, w2 every this many frames (0: none)")
    p.add_argument("--trend-checks", action="store_true",
                   help="also apply the long-time decay trend thresholds")
    p.set_defaults(func=cmd_liouville_report)

    p = sub.add_parser("coercivity-sweep", help="random-frame test of the coercivity bound")
    p.add_argument("--c", type=_velocity_list, default=[0.0, 0.5, -0.5, 1.0, -1.0, 1.3, -1.3])
    p.add_argument("--frames", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--half-length", type=float, default=30.0)
    p.add_argument("--h", type=float, default=0.05)
    p.set_defaults(func=cmd_coercivity_sweep)

    p = sub.add_parser("golden-regen", help="recompute the calibrated reference values")
    p.add_argument("--output", help="golden file (default: the packaged data/golden.json)")
    p.add_argument("--parts", nargs="*", choices=("default", "system", "virial", "trend"))
    p.add_argument("--backend", choices=("compiled", "python"))
    p.set_defaults(func=cmd_golden_regen)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        rep = args.func(args)
    except (ConfigError, AdmissibilityError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.report:
        rep.write(args.report)
    print(rep.text())
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
