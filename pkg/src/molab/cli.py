"""Command line interface.

Subcommands: lux, proj, campanato, equiv, jn, aq, atoms (make|validate|pair),
carleson, suite. Each run reads an ExperimentConfig JSON (defaults apply when
--config is omitted), writes <out>/<command>.json atomically, plus per-command
CSV/SVG side files. Exit codes: 0 success, 1 numeric/model error, 2 usage or
config error. MOLAB_THREADS overrides the configured thread budget.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .atoms import duality_pairing, lambda_q, make_atom, validate_atom
from .campanato import (
    bmo_phi_norm,
    campanato_eps_norm,
    campanato_inf_norm,
    campanato_norm,
    campanato_per_ball,
    equivalence_report,
)
from .carleson import (
    build_kernel,
    calderon_deviation,
    carleson_norm,
    default_t_levels,
    square_transform,
)
from .config import ExperimentConfig
from .corpus import corpus
from .errors import ConfigError, MolabError, NotA1Error
from .grid import Ball, Box, Grid, GridFunction, ball_family, indicator, read_csv, write_csv
from .growth import critical_indices, muckenhoupt_constant, phi_measure
from .johnnirenberg import jn_distribution, jn_fit
from .luxembourg import chi_ball_norm, luxembourg_solve
from .parallel import thread_budget
from .polyproj import orthogonality_residuals, project
from .report import Report, atomic_write_text, write_report

OUT_DEFAULT = "out"


def _load_cfg(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = ExperimentConfig.from_json(args.config)
    else:
        cfg = ExperimentConfig()
    if getattr(args, "threads", None):
        cfg.threads = args.threads
    return cfg


def _function(cfg: ExperimentConfig, args) -> GridFunction:
    path = getattr(args, "function", None) or cfg.function_csv
    if path:
        return read_csv(path)
    return corpus(cfg.corpus, cfg.grid())


def _parse_ball(text: str, n: int) -> Ball:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != n + 1:
        raise ConfigError(f"--ball wants {n + 1} comma-separated numbers")
    return Ball(center=tuple(parts[:-1]), radius=parts[-1])


def _emit(args, name: str, cfg: ExperimentConfig, results: dict, warnings, t0) -> str:
    rep = Report(
        command=name,
        config_fingerprint=cfg.fingerprint(),
        results=results,
        warnings=list(warnings),
        wall_time_s=time.perf_counter() - t0,
    )
    path = f"{args.out}/{name}.json"
    write_report(path, rep)
    return path


def _write_table(path: str, fingerprint: str, command: str, header: list[str], rows):
    lines = [f"# command={command} config_fingerprint={fingerprint}"]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------


def cmd_lux(args) -> int:
    t0 = time.perf_counter()
    cfg = _load_cfg(args)
    f = _function(cfg, args)
    gf = cfg.growth_function()
    res = luxembourg_solve(f, gf, cfg.lux_tol)
    path = _emit(
        args,
        "lux",
        cfg,
        {
            "norm": res.norm,
            "iterations": res.iterations,
            "theta_residual": res.theta_residual,
        },
        [],
        t0,
    )
    print(f"lux norm={res.norm:.12g} residual={res.theta_residual:.3g} -> {path}")
    return 0


def cmd_proj(args) -> int:
    t0 = time.perf_counter()
    cfg = _load_cfg(args)
    f = _function(cfg, args)
    ball = _parse_ball(args.ball, f.grid.n)
    poly = project(f, ball, args.degree)
    resid = orthogonality_residuals(f, poly, ball)
    path = _emit(
        args,
        "proj",
        cfg,
        {
            "ball": ball.label(),
            "degree": args.degree,
            "exponents": [list(e) for e in poly.exponents],
            "coefficients": list(poly.coeffs),
            "orthogonality_residuals": resid.tolist(),
        },
        [],
        t0,
    )
    print(f"proj degree={args.degree} max_residual={float(np.max(resid)):.3g} -> {path}")
    return 0


def _campanato_results(cfg, f, gf, q_list, s, eps, balls, threads):
    indices = None
    chi = cfg.chi_tol
    out = {
        "value_i": campanato_norm(f, gf, 1.0, s, balls, chi, threads),
        "value_ii": {},
        "value_iii": {},
        "bmo_phi": bmo_phi_norm(f, gf, balls, chi, threads) if s == 0 else None,
    }
    for q in q_list:
        out["value_ii"][f"{q:g}"] = campanato_norm(f, gf, q, s, balls, chi, threads)
        out["value_iii"][f"{q:g}"] = campanato_inf_norm(f, gf, q, s, balls, chi, threads)
    out["value_iv"] = campanato_eps_norm(f, gf, s, eps, balls, indices, chi, threads)
    return out


def cmd_campanato(args) -> int:
    t0 = time.perf_counter()
    cfg = _load_cfg(args)
    f = _function(cfg, args)
    gf = cfg.growth_function()
    balls = cfg.ball_list(f.grid)
    threads = thread_budget(cfg.threads)
    q_list = [float(q) for q in args.q.split(",")]
    results = _campanato_results(cfg, f, gf, q_list, args.s, args.eps, balls, threads)
    rows = []
    per_i = campanato_per_ball(f, gf, 1.0, args.s, balls, cfg.chi_tol, threads)
    per_q = {
        q: campanato_per_ball(f, gf, q, args.s, balls, cfg.chi_tol, threads)
        for q in q_list
    }
    for i, b in enumerate(balls):
        row = [b.label(), b.radius, per_i[i]]
        row.extend(per_q[q][i] for q in q_list)
        rows.append(row)
    _write_table(
        f"{args.out}/campanato_per_ball.csv",
        cfg.fingerprint(),
        "campanato",
        ["ball", "radius", "value_q1"] + [f"value_q{q:g}" for q in q_list],
        rows,
    )
    path = _emit(args, "campanato", cfg, results, [], t0)
    print(f"campanato value_i={results['value_i']:.9g} -> {path}")
    return 0


def cmd_equiv(args) -> int:
    t0 = time.perf_counter()
    cfg = _load_cfg(args)
    f = _function(cfg, args)
    gf = cfg.growth_function()
    balls = cfg.ball_list(f.grid)
    threads = thread_budget(cfg.threads)
    q_list = [float(q) for q in args.q.split(",")]
    rep = equivalence_report(
        f, gf, args.s, q_list, args.eps, balls, None, args.bracket, cfg.chi_tol, threads
    )
    # per-ball ratio scatter: general-q value against the q=1 value per ball
    per_i = campanato_per_ball(f, gf, 1.0, args.s, balls, cfg.chi_tol, threads)
    groups = []
    for q in q_list:
        per = campanato_per_ball(f, gf, q, args.s, balls, cfg.chi_tol, threads)
        xs = [b.radius for b in balls]
        ys = [p / pi if pi > 0 else np.nan for p, pi in zip(per, per_i)]
        groups.append((f"q={q:g}", xs, ys))
    from .plots import scatter_svg

    scatter_svg(
        f"{args.out}/equiv_ratios.svg",
        groups,
        "ball radius",
        "per-ball ratio vs q=1",
        "seminorm variant ratios",
    )
    path = _emit(args, "equiv", cfg, rep.to_dict(), rep.flags, t0)
    print(f"equiv flags={len(rep.flags)} -> {path}")
    return 0


def cmd_jn(args) -> int:
    t0 = time.perf_counter()
    cfg = _load_cfg(args)
    f = _function(cfg, args)
    gf = cfg.growth_function()
    balls = cfg.ball_list(f.grid)
    base = _parse_ball(args.ball, f.grid.n) if args.ball else balls[0]
    subs = [b for b in balls if base.contains_ball(b)]
    curve = jn_distribution(f, gf, base, args.s, subs, chi_tol=cfg.chi_tol)
    fit = jn_fit(curve, args.model)
    rows = list(zip(curve.alphas, curve.lambda_vals, curve.f_vals))
    _write_table(
        f"{args.out}/jn_curve.csv",
        cfg.fingerprint(),
        "jn",
        ["alpha", "lambda", "f_sup"],
        rows,
    )
    from .plots import curve_svg

    positive = curve.lambda_vals > 0
    curve_svg(
        f"{args.out}/jn_curve.svg",
        curve.alphas[positive],
        curve.lambda_vals[positive],
        "alpha",
        "level-set phi-measure",
        f"oscillation decay ({args.model} fit, R2={fit.r_squared:.3f})",
        logx=(args.model == "power"),
        logy=True,
    )
    results = {"curve": curve.to_dict(), "fit": fit.to_dict()}
    path = _emit(args, "jn", cfg, results, [], t0)
    print(
        f"jn model={args.model} rate={fit.rate:.4g} r2={fit.r_squared:.4f} -> {path}"
    )
    return 0


def _indices_for(cfg: ExperimentConfig, refine: bool = True):
    grid = cfg.grid()
    gf = cfg.growth_function()
    balls = cfg.ball_list(grid)
    grid_fine = balls_fine = None
    if refine:
        grid_fine = Grid(box=grid.box, res=tuple(2 * r for r in grid.res))
        b = cfg.balls
        balls_fine = ball_family(
            grid_fine,
            2 * int(b["center_stride"]),
            int(b["radii_levels"]),
            2 * int(b["min_radius_cells"]),
        )
    return critical_indices(gf, grid, balls, grid_fine=grid_fine, balls_fine=balls_fine)


def cmd_aq(args) -> int:
    t0 = time.perf_counter()
    cfg = _load_cfg(args)
    idx = _indices_for(cfg, refine=not args.no_refine)
    path = _emit(args, "aq", cfg, idx.to_dict(), idx.notes, t0)
    print(f"aq i_est={idx.i_est:g} q_est={idx.q_est:g} m_est={idx.m_est} -> {path}")
    return 0


def cmd_atoms(args) -> int:
    t0 = time.perf_counter()
    cfg = _load_cfg(args)
    grid = cfg.grid()
    gf = cfg.growth_function()
    ball = _parse_ball(args.ball, grid.n)
    q = np.inf if args.q == "inf" else float(args.q)
    if args.action == "make":
        profile = corpus(args.profile, grid)
        atom = make_atom(profile, ball, q, args.s, gf)
        write_csv(atom.values, f"{args.out}/atom.csv")
        results = {
            "ball": ball.label(),
            "q": args.q,
            "s": args.s,
            "report": atom.report.to_dict(),
            "lambda_q_single": lambda_q(
                gf, grid, [(ball, 1.0 / chi_ball_norm(gf, grid, ball))]
            ),
        }
        path = _emit(args, "atoms", cfg, results, [], t0)
        print(f"atoms make ok={atom.report.ok} -> {path}")
        return 0
    if args.action == "validate":
        values = read_csv(args.atom)
        from .atoms import Atom

        atom = Atom(values=values, ball=ball, q=q, s=args.s)
        rep = validate_atom(atom, gf)
        path = _emit(args, "atoms", cfg, {"report": rep.to_dict()}, [], t0)
        print(f"atoms validate ok={rep.ok} -> {path}")
        return 0 if rep.ok else 1
    # pair
    profile = corpus(args.profile, grid)
    atom = make_atom(profile, ball, q, args.s, gf)
    g = _function(cfg, args)
    pairing = duality_pairing(atom, g, gf, cfg.chi_tol)
    path = _emit(args, "atoms", cfg, {"pairing": pairing.to_dict()}, [], t0)
    print(f"atoms pair passed={pairing.passed} -> {path}")
    return 0 if pairing.passed else 1


def cmd_carleson(args) -> int:
    t0 = time.perf_counter()
    cfg = _load_cfg(args)
    b = _function(cfg, args)
    gf = cfg.growth_function()
    balls = cfg.ball_list(b.grid)
    threads = thread_budget(cfg.threads)
    idx = _indices_for(cfg, refine=False)
    q_step = 0.10
    if idx.q_est > 1.0 + q_step and not args.force:
        raise NotA1Error(
            f"growth function is not grid-certified A_1 (q_est={idx.q_est:g}); "
            "pass --force to run the comparison anyway"
        )
    kernel = build_kernel(args.s, n=b.grid.n)
    field = square_transform(b, kernel, default_t_levels(b.grid))
    res = carleson_norm(field, gf, balls, cfg.chi_tol, threads)
    bmo = bmo_phi_norm(b, gf, balls, cfg.chi_tol, threads)
    results = {
        "norm": res["value"],
        "per_ball": res["per_ball"],
        "bmo_phi": bmo,
        "ratio_vs_bmo": res["value"] / bmo if bmo > 0 else None,
        "kernel_deviation": kernel.deviation,
        "q_est": idx.q_est,
        "t_levels": int(field.t_levels.size),
    }
    from .plots import scatter_svg

    radii = {row["ball"]: next(bb.radius for bb in balls if bb.label() == row["ball"]) for row in res["per_ball"]}
    scatter_svg(
        f"{args.out}/carleson_per_ball.svg",
        [("tent value", [radii[r["ball"]] for r in res["per_ball"]], [r["value"] for r in res["per_ball"]])],
        "ball radius",
        "per-ball Carleson value",
        "Carleson tent energies",
    )
    path = _emit(args, "carleson", cfg, results, res["warnings"], t0)
    print(f"carleson norm={res['value']:.9g} deviation={kernel.deviation:.3g} -> {path}")
    return 0


def _suite_battery(cfg: ExperimentConfig) -> dict:
    """Small fixed battery touching every module; deterministic for a fixed
    config + thread budget."""
    from .growth import WeightSpec, ky_log, power, weighted_power

    threads = thread_budget(cfg.threads)
    out: dict = {}
    grid = Grid(box=Box(lo=(-2.0,), hi=(2.0,)), res=(512,))

    balls = ball_family(grid, center_stride=128, radii_levels=3, min_radius_cells=32)
    out["family"] = [b.label() for b in balls]

    lux_rows = {}
    for label, gf in (
        ("power(1)", power(1.0)),
        ("power(0.5)", power(0.5)),
        ("weighted", weighted_power(1.0, WeightSpec(kind="abs_power", a=1.0 / 3.0))),
        ("ky_log", ky_log()),
    ):
        chis = [chi_ball_norm(gf, grid, b) for b in balls]
        resid = [
            abs(phi_measure(gf, grid, b, 1.0 / c) - 1.0) for b, c in zip(balls, chis)
        ]
        lux_rows[label] = {"chi": chis, "unit_residual_max": max(resid)}
    out["lux"] = lux_rows

    gf1 = power(1.0)
    f = corpus("log_abs", grid)
    out["campanato"] = {
        "value_i": campanato_norm(f, gf1, 1.0, 0, balls, threads=threads),
        "value_ii_q2": campanato_norm(f, gf1, 2.0, 0, balls, threads=threads),
        "value_iii_q2": campanato_inf_norm(f, gf1, 2.0, 0, balls, threads=threads),
        "value_iv_eps1": campanato_eps_norm(f, gf1, 0, 1.0, balls, threads=threads),
        "bmo": bmo_phi_norm(f, gf1, balls, threads=threads),
    }

    base = balls[0]
    curve = jn_distribution(f, gf1, base, 0, [b for b in balls if base.contains_ball(b)])
    fit = jn_fit(curve, "exp", lambda_window=(1e-3, 0.5))
    out["jn"] = {"rate": fit.rate, "r_squared": fit.r_squared, "points": fit.n_points}

    idx = critical_indices(power(0.5), grid, balls)
    out["aq"] = {"i_est": idx.i_est, "q_est": idx.q_est, "m_est": idx.m_est}

    ball = balls[-1]
    atom = make_atom(corpus("random_seeded(77)", grid), ball, 2.0, 1, gf1)
    pairing = duality_pairing(atom, f, gf1)
    out["atoms"] = {
        "report": atom.report.to_dict(),
        "pairing_passed": pairing.passed,
        "lambda_q": lambda_q(gf1, grid, [(ball, 1.0 / chi_ball_norm(gf1, grid, ball))]),
    }

    kernel = build_kernel(0, n=1)
    field = square_transform(f, kernel)
    car = carleson_norm(field, gf1, balls, threads=threads)
    out["carleson"] = {
        "norm": car["value"],
        "kernel_deviation": kernel.deviation,
        "warnings": car["warnings"],
    }

    chi = indicator(grid, balls[0])
    out["lux_chi_ball_norm"] = luxembourg_solve(chi, power(0.5)).norm
    return out


def cmd_suite(args) -> int:
    t0 = time.perf_counter()
    cfg = _load_cfg(args)
    results = _suite_battery(cfg)
    path = _emit(args, "suite", cfg, results, [], t0)
    print(f"suite -> {path}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="molab",
        description="Numerical laboratory for Musielak-Orlicz Campanato analysis",
    )
    ap.add_argument("--version", action="version", version=f"molab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="experiment config JSON")
        p.add_argument("--function", help="grid function CSV (overrides corpus)")
        p.add_argument("--out", default=OUT_DEFAULT, help="output directory")
        p.add_argument("--threads", type=int, help="thread budget override")

    p = sub.add_parser("lux", help="Luxembourg norm of a grid function")
    common(p)
    p.set_defaults(fn=cmd_lux)

    p = sub.add_parser("proj", help="polynomial projection on a ball")
    common(p)
    p.add_argument("--ball", required=True, help="center...,radius")
    p.add_argument("--degree", type=int, default=0)
    p.set_defaults(fn=cmd_proj)

    p = sub.add_parser("campanato", help="Campanato seminorm variants")
    common(p)
    p.add_argument("--q", default="1,2")
    p.add_argument("--s", type=int, default=0)
    p.add_argument("--eps", type=float, default=1.0)
    p.set_defaults(fn=cmd_campanato)

    p = sub.add_parser("equiv", help="equivalence report across variants")
    common(p)
    p.add_argument("--q", default="1,2")
    p.add_argument("--s", type=int, default=0)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--bracket", type=float, default=64.0)
    p.set_defaults(fn=cmd_equiv)

    p = sub.add_parser("jn", help="oscillation distribution decay + fit")
    common(p)
    p.add_argument("--ball", help="base ball center...,radius (default: largest family ball)")
    p.add_argument("--s", type=int, default=0)
    p.add_argument("--model", choices=("exp", "power"), default="exp")
    p.set_defaults(fn=cmd_jn)

    p = sub.add_parser("aq", help="growth indices (type + Muckenhoupt scans)")
    common(p)
    p.add_argument("--no-refine", action="store_true", help="skip the refined grid pass")
    p.set_defaults(fn=cmd_aq)

    p = sub.add_parser("atoms", help="make/validate/pair atoms")
    common(p)
    p.add_argument("action", choices=("make", "validate", "pair"))
    p.add_argument("--ball", required=True, help="center...,radius")
    p.add_argument("--q", default="2")
    p.add_argument("--s", type=int, default=0)
    p.add_argument("--profile", default="random_seeded(7)", help="corpus profile for make/pair")
    p.add_argument("--atom", help="atom CSV for validate")
    p.set_defaults(fn=cmd_atoms)

    p = sub.add_parser("carleson", help="square transform + Carleson norm")
    common(p)
    p.add_argument("--s", type=int, default=0)
    p.add_argument("--force", action="store_true", help="run despite a non-A_1 growth certificate")
    p.set_defaults(fn=cmd_carleson)

    p = sub.add_parser("suite", help="fixed cross-module battery")
    common(p)
    p.set_defaults(fn=cmd_suite)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MolabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
