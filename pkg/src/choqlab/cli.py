"""Command-line interface.

Subcommands mirror the lab's workflows: regime validation, constant
tables, ground states, single solves, fiber curves, level sweeps,
concentration and multiplicity experiments, and the verification battery.
Exit code 0 only when every assertion requested by the subcommand holds.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .errors import ChoqlabError, Indistinct
from .fiber import extract_profile, fiber_maximizer, fiber_value, psi
from .harness import (ExperimentConfig, ReportRow, SCHEMA_VERSION, barycenter,
                      default_config, run_concentration, run_multiplicity,
                      run_verify, write_check_report, write_report)
from .params import (hls_constant, mass_threshold, riesz_normalization,
                     s_alpha_reference, sharp_constant, validate_regime)
from .snapshot import load_field, save_field, save_solve_sidecar
from .solver import (compute_S_alpha, level_curves, make_profile,
                     solve_autonomous, solve_nonautonomous,
                     solve_scalar_ground, x_star_root)
from .spectral import Grid


def _load_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
    else:
        cfg = default_config()
    if args.out:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _outpath(cfg, name):
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def cmd_validate(args) -> int:
    try:
        exps = validate_regime(args.N, args.s, args.alpha, args.q)
    except ChoqlabError as exc:
        print(f"REJECTED: {exc}")
        return 1
    print("regime admissible:")
    for name in ("p", "p_bar", "p_lower", "delta_q", "delta_p", "gamma_q",
                 "sigma", "theta_q", "k_q_coeff"):
        print(f"  {name} = {getattr(exps, name):.12g}")
    return 0


def cmd_constants(args) -> int:
    cfg = _load_config(args)
    exps = cfg.exps
    print(f"# choqlab {__version__} constants (N={exps.N}, s={exps.s}, "
          f"alpha={exps.alpha}, q={exps.q})")
    a_na = riesz_normalization(exps.N, exps.alpha)
    c_hls = hls_constant(exps.N, exps.alpha)
    s_ref = s_alpha_reference(exps)
    print(f"A_N_alpha  = {a_na:.12g}")
    print(f"C_HLS      = {c_hls:.12g}")
    print(f"S_alpha    = {s_ref:.12g}   (sharp Sobolev x HLS composition)")
    sweep = compute_S_alpha(exps, Grid(1, 60.0, 4096))
    print(f"S_alpha sweep min = {sweep.value:.6g} "
          f"(sensitivity {sweep.sensitivity:.1%}; grid bubbles are "
          f"tail-truncated in this regime)")
    gs = solve_scalar_ground(exps, Grid(1, 96.0, 4096))
    c_aq = sharp_constant(exps, exps.q, gs.norm2)
    print(f"||U||_2    = {gs.norm2:.12g}  (scalar ground state, residual "
          f"{gs.residual:.1e})")
    print(f"C_alpha_q  = {c_aq:.12g}")
    mt = mass_threshold(exps, s_ref, c_aq)
    print(f"K_q        = {mt.k_q:.12g}")
    print(f"theta_q    = {mt.theta_q:.12g}")
    print(f"a_max      = {mt.a_max:.12g}"
          + ("   [near-degenerate exponent]" if mt.near_degenerate else ""))
    xs = x_star_root(exps, s_ref, mt.k_q, cfg.a)
    print(f"X*(a={cfg.a}) = {xs:.12g}   (kinetic ridge root, diagnostic)")
    return 0


def cmd_groundstate(args) -> int:
    cfg = _load_config(args)
    gs = solve_scalar_ground(cfg.exps, Grid(1, 96.0, 4096), cfg.solver)
    print(f"scalar ground state: residual={gs.residual:.2e} "
          f"iterations={gs.iterations} converged={gs.converged}")
    print(f"  ||U||_2 = {gs.norm2:.12g}  action = {gs.action:.12g} "
          f"scaling identity defect = {gs.poho_residual:.2e}")
    save_field(gs.field, _outpath(cfg, "scalar_ground.chqf"))
    print(f"snapshot -> {_outpath(cfg, 'scalar_ground.chqf')}")
    return 0 if gs.converged else 1


def cmd_solve(args) -> int:
    cfg = _load_config(args)
    if args.mu is not None:
        res = solve_autonomous(cfg.exps, args.mu, cfg.a, cfg.grid,
                               config=cfg.solver)
        tag = f"autonomous_mu{args.mu:g}"
    else:
        v = cfg.potential.sample_on(cfg.grid, args.eps)
        init, cells = None, 0
        wells = cfg.potential.well_points()
        if wells:
            auto = solve_autonomous(cfg.exps, 0.0, cfg.a, cfg.grid,
                                    config=cfg.solver)
            init, y_act = make_profile(auto.field, wells[-1], args.eps, cfg.a)
            cells = int(round((y_act / args.eps) / cfg.grid.dx))
        res = solve_nonautonomous(cfg.exps, v, cfg.a, cfg.grid, init=init,
                                  config=cfg.solver, center_cells=cells)
        tag = f"nonautonomous_eps{args.eps:g}"
    beta = barycenter(res.field, args.eps if args.mu is None else 1.0,
                      cfg.box_radius)
    print(f"{tag}: level={res.level:.10g} lambda={res.lam:.8g}")
    print(f"  grad_residual={res.grad_residual:.2e} "
          f"poho_residual={res.poho_residual:.2e} iterations={res.iterations} "
          f"converged={res.converged}")
    snap = _outpath(cfg, f"{tag}.chqf")
    save_field(res.field, snap)
    save_solve_sidecar(res, snap + ".txt", cfg.solver,
                       extra={"barycenter": float(beta[0])})
    print(f"snapshot -> {snap}")
    return 0 if res.converged else 1


def cmd_fiber(args) -> int:
    cfg = _load_config(args)
    res = solve_autonomous(cfg.exps, 0.0, cfg.a, cfg.grid, config=cfg.solver)
    prof = extract_profile(res.field, cfg.exps, 0.0)
    fm = fiber_maximizer(prof)
    path = _outpath(cfg, "fiber.csv")
    with open(path, "w") as fh:
        fh.write(f"# {SCHEMA_VERSION}\n")
        fh.write("t,phi,psi\n")
        for t in np.geomspace(args.tmin, args.tmax, args.samples):
            fh.write(f"{t!r},{fiber_value(prof, t)!r},{psi(prof, t)!r}\n")
    print(f"fiber curve at the a={cfg.a} solution (t*={fm.t_star:.6g}, "
          f"R={fm.value:.8g}) -> {path}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    a_list = [f * cfg.a for f in (0.5, 1.0, 1.5, 2.0)]
    mu_list = [0.0, 0.5, 1.0]
    a_rows, mu_rows = level_curves(cfg.exps, a_list, mu_list, cfg.grid,
                                   cfg.solver, a0=cfg.a)
    rows = []
    for r in a_rows + mu_rows:
        rows.append(ReportRow("sweep", 0.0, r["a"], r["mu"], r["level"],
                              r["lam"], r["poho"], r["grad"], 0.0, 0.0,
                              r["iterations"], r["converged"]))
    path = _outpath(cfg, "levels.csv")
    write_report(rows, path)
    levels = [r["level"] for r in a_rows]
    mono = all(levels[i + 1] <= levels[i] + 1e-6 for i in range(len(levels) - 1))
    slope_pairs = [(r["mu"], r["level"]) for r in mu_rows]
    coeffs = np.polyfit([m for m, _ in slope_pairs],
                        [l for _, l in slope_pairs], 1)
    slope_ok = abs(coeffs[0] - cfg.a / 2.0) <= 1e-3 * (cfg.a / 2.0)
    print(f"levels over a={a_list}: {['%.6f' % l for l in levels]} "
          f"nonincreasing={mono}")
    print(f"level slope in mu: {coeffs[0]:.8g} (a/2 = {cfg.a / 2}) "
          f"ok={slope_ok}")
    print(f"table -> {path}")
    return 0 if (mono and slope_ok
                 and all(r["converged"] for r in a_rows + mu_rows)) else 1


def cmd_concentrate(args) -> int:
    cfg = _load_config(args)
    out = run_concentration(cfg, threads=args.threads)
    path = _outpath(cfg, "concentration.csv")
    write_report(out["rows"], path)
    if out.get("skipped"):
        print(f"skipped: {out['reason']}")
        return 1
    print(f"distance to M per eps: "
          f"{['%.5f' % d for d in out['dists']]} monotone={out['monotone']}")
    print(f"|level - b0| per eps: {['%.5f' % gp for gp in out['gaps']]}")
    print(f"report -> {path}")
    return 0 if out["passed"] else 1


def cmd_multiplicity(args) -> int:
    cfg = _load_config(args)
    try:
        out = run_multiplicity(cfg, threads=args.threads)
    except Indistinct as exc:
        print(f"INDISTINCT: {exc}")
        return 1
    path = _outpath(cfg, "multiplicity.csv")
    write_report(out["rows"], path)
    print(f"wells {out['wells']}: barycenters {['%.4f' % b for b in out['betas']]}")
    print(f"H^s separation {out['separation']:.4f} "
          f"(aligned {out['separation_aligned']:.2e}), "
          f"level gap {out['level_gap']:.2e}, lambdas {out['lams']}")
    print(f"report -> {path}")
    return 0 if out["passed"] else 1


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    out = run_verify(cfg, quick=not args.full)
    path = _outpath(cfg, "verify.csv")
    write_check_report(out["rows"], path)
    for name, status, measured, tol in out["rows"]:
        print(f"  [{status:>7}] {name:<28} measured={measured} tol={tol}")
    print(f"report -> {path}")
    if out.get("reason"):
        print(f"NOTE: {out['reason']}")
    return 0 if out["passed"] else 1


def cmd_snapshot(args) -> int:
    u = load_field(args.path)
    print(f"grid: N={u.grid.N} extent={u.grid.extent} points={u.grid.points}")
    print(f"mass = {float(np.sum(u.values ** 2)) * u.grid.cell_volume!r}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="choqlab",
        description="Pseudospectral lab for normalized fractional Choquard solutions")
    parser.add_argument("--config", help="experiment config file (key = value INI)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="RNG seed override")
    parser.add_argument("--threads", type=int, default=1,
                        help="concurrent experiment cells")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a parameter regime")
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--s", type=float, default=0.4)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--q", type=float, default=3.0)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("constants", help="derived exponents and sharp constants")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("groundstate", help="scalar ground state and C_alpha_q")
    p.set_defaults(func=cmd_groundstate)

    p = sub.add_parser("solve", help="one autonomous or non-autonomous solve")
    p.add_argument("--mu", type=float, default=None,
                   help="constant potential (autonomous mode)")
    p.add_argument("--eps", type=float, default=0.1,
                   help="potential scale for the non-autonomous mode")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("fiber", help="emit (t, phi, Psi) fiber curve CSV")
    p.add_argument("--tmin", type=float, default=0.05)
    p.add_argument("--tmax", type=float, default=20.0)
    p.add_argument("--samples", type=int, default=200)
    p.set_defaults(func=cmd_fiber)

    p = sub.add_parser("sweep", help="level curves over masses and mu")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("concentrate", help="eps-halving concentration sweep")
    p.set_defaults(func=cmd_concentrate)

    p = sub.add_parser("multiplicity", help="two-well multiplicity experiment")
    p.set_defaults(func=cmd_multiplicity)

    p = sub.add_parser("verify", help="cross-module verification battery")
    p.add_argument("--full", action="store_true", help="larger corpora")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("snapshot", help="inspect a field snapshot")
    p.add_argument("path")
    p.set_defaults(func=cmd_snapshot)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ChoqlabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
