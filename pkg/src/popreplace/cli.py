"""Batch command-line front end.

Exit status: 0 success, 1 domain failure (hypothesis, feasibility, numerics),
2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import math
import platform
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, _backend
from ._numerics import set_threads
from .config import RunConfig, load_config
from .dynamics import WolbachiaParams, check_hypotheses
from .errors import ConfigError, Infeasible, PopReplaceError
from .integrate import ControlSignal, reduction_gap
from .io import svg_line_chart, write_csv, write_json, write_manifest
from .optimize import (cost_curve, eta_sweep, finite_s_infimum, pulse_ocp,
                       two_release_experiment)
from .periodic import classify_basin, find_periodic_envelope
from .release import ReleaseSchedule, build_cost_potential, simulate_schedule

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class Run:
    """Output directory, format switches and per-stage timings of one command."""

    def __init__(self, cfg: RunConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.timings: dict[str, float] = {}
        self._t = time.perf_counter()

    def stage(self, name: str) -> None:
        now = time.perf_counter()
        self.timings[name] = round(now - self._t, 6)
        self._t = now

    def csv(self, name, header, rows):
        if "csv" in self.cfg.formats:
            write_csv(self.out / name, header, rows)

    def json(self, name, obj):
        if "json" in self.cfg.formats:
            write_json(self.out / name, obj)

    def svg(self, name, *args, **kw):
        if "svg" in self.cfg.formats:
            svg_line_chart(self.out / name, *args, **kw)

    def num(self, key):
        return self.cfg.numerics[key]

    def exp(self, key):
        return self.cfg.experiment[key]


def _envelope(run: Run, model):
    return find_periodic_envelope(model, run.num("grid_n"), run.num("tol"), run.num("orbit_n"))


# --- commands -----------------------------------------------------------------


def cmd_check(run: Run) -> int:
    model = run.cfg.build_model(validate=False)
    report = check_hypotheses(model)
    run.stage("hypotheses")
    run.json("hypotheses.json", report.to_dict())
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.10g} {c.detail}")
    return EXIT_OK if report.passed else EXIT_DOMAIN


def cmd_periodic(run: Run) -> int:
    model = run.cfg.build_model()
    env = _envelope(run, model)
    run.stage("envelope")
    s = env.sample
    run.csv("phi.csv", ("p0", "phi"), s.csv_rows())
    run.svg("phi.svg", [("Phi = P - Id", s.p0, s.phi)], title="Poincare map minus identity",
            xlabel="p0", ylabel="Phi(p0)", hlines=[0.0])
    run.csv("envelope.csv", ("t", "p_min", "p_max"), env.csv_rows())
    run.json("envelope.json", env.to_dict())
    print(f"periodic zeros: {list(env.zeros)}; lambda_M = {env.lambda_M:.10g}")
    return EXIT_OK


def cmd_optimize(run: Run) -> int:
    model = run.cfg.build_model()
    env = _envelope(run, model)
    pot = build_cost_potential(model, run.num("delta"))
    run.stage("envelope")
    cc = cost_curve(model, env, pot, run.num("cost_grid_n"))
    run.stage("cost_curve")
    run.csv("cbar.csv", ("t", "cbar"), cc.csv_rows())
    run.svg("cbar.svg", [("K(t) G(p_M(t))", cc.grid, cc.values)], title="Minimal impulse cost",
            xlabel="t", ylabel="Cbar(t)")
    run.json("optimum.json", cc.to_dict())
    print(f"t0* = {cc.t0_star:.10g}, C* = {cc.C_star:.10g}")
    return EXIT_OK


def cmd_convergence(run: Run) -> int:
    model = run.cfg.build_model()
    env = _envelope(run, model)
    pot = build_cost_potential(model, run.num("delta"))
    cc = cost_curve(model, env, pot, run.num("cost_grid_n"))
    run.stage("cost_curve")
    rows = []
    for S in run.exp("S"):
        r = finite_s_infimum(model, env, S, run.num("t0_grid_n"), run.num("c_tol"),
                             run.num("finite_s_tol"))
        rows.append((r.S, r.c_s_star, r.t0_s_star, abs(r.c_s_star - cc.C_star)))
        run.stage(f"S={S:g}")
        print(f"S = {r.S:g}: C_S* = {r.c_s_star:.10g} at t0 = {r.t0_s_star:.6g}, "
              f"gap {rows[-1][3]:.3e}")
    run.csv("s_convergence.csv", ("S", "c_s_star", "t0_s_star", "gap"), rows)
    gaps = [r[3] for r in rows]
    if all(g > 0 for g in gaps):
        run.svg("s_convergence.svg", [("|C_S* - C*|", [r[0] for r in rows], gaps)],
                title="Finite release rate convergence", xlabel="S", ylabel="gap",
                logx=True, logy=True)
    run.json("s_convergence.json", {"C_star": cc.C_star, "t0_star": cc.t0_star,
                                    "rows": [dict(zip(("S", "c_s_star", "t0_s_star", "gap"), r))
                                             for r in rows]})
    return EXIT_OK


def cmd_pulse(run: Run) -> int:
    model = run.cfg.build_model()
    env = _envelope(run, model)
    run.stage("envelope")
    periods = run.exp("periods")
    T = model.T
    plans, rows = [], []
    for M in run.exp("M"):
        try:
            plan = pulse_ocp(model, env, M, periods, run.num("coarse_n"), run.num("tol"),
                             run.num("d_tol"))
            plans.append(plan)
            rows.append((plan.M, plan.start, plan.duration, plan.cost, True))
            print(f"M = {M:g}: start {plan.start:.6g}, duration {plan.duration:.6g}, "
                  f"cost {plan.cost:.6g}")
        except Infeasible as exc:
            rows.append((M, math.nan, math.nan, math.nan, False))
            print(f"M = {M:g}: infeasible ({exc})")
        run.stage(f"M={M:g}")
    run.csv("pulse_plans.csv", ("M", "start", "duration", "cost", "feasible"), rows)
    run.json("pulse_plans.json", {"plans": [p.to_dict() for p in plans],
                                  "infeasible_M": [r[0] for r in rows if not r[4]]})
    if not plans:
        return EXIT_DOMAIN
    best = min(plans, key=lambda p: (p.cost, p.M))
    sched = ReleaseSchedule.from_lists(pulses=[(best.start, best.duration, best.cost)])
    tr = simulate_schedule(model, None, sched, 0.0, (0.0, periods * T), run.num("tol"))
    tt = np.linspace(0.0, periods * T, 1201)
    from .periodic import envelope_at
    run.svg("solution.svg", [(f"p(t), M = {best.M:g}", tt, tr(tt)),
                             ("p_M(t)", tt, envelope_at(env, "max", tt))],
            title="Proportion under the best pulse", xlabel="t", ylabel="p")
    ctrl_series = []
    for p in plans:
        xs = [0.0, p.start, p.start, p.start + p.duration, p.start + p.duration, periods * T]
        ctrl_series.append((f"M = {p.M:g}", xs, [0.0, 0.0, p.M, p.M, 0.0, 0.0]))
    run.svg("control.svg", ctrl_series, title="Release rate of the cheapest pulse",
            xlabel="t", ylabel="u(t)")
    return EXIT_OK


def _separated_model(run: Run):
    cfg = run.cfg
    if cfg.model["family"] == "wolbachia":
        raise ConfigError("two-release needs model.family = separated or cubic")
    return cfg.build_model()


def cmd_two_release(run: Run) -> int:
    model = _separated_model(run)
    env = _envelope(run, model)
    pot = build_cost_potential(model, run.num("delta"))
    run.stage("envelope")
    res = two_release_experiment(model, pot, env, run.exp("t0"), run.exp("t1"), run.exp("split"),
                                 run.exp("budget_factor"), run.num("tol"))
    run.stage("experiment")
    out = res.to_dict()
    out["exploratory"] = run.exp("budget_factor") != 1.0
    run.json("two_release.json", out)
    print(f"verdict {res.verdict.outcome.value}; p(t1-) = {res.p_t1_minus:.8g} < "
          f"p(t0+) = {res.p_t0_plus:.8g}: {res.decays}")
    return EXIT_OK


def cmd_eta_sweep(run: Run) -> int:
    q = run.cfg.wolbachia_params()
    base = replace(q, d1=q.d2)
    sw = eta_sweep(base, run.cfg.capacity_obj(), run.exp("etas"), run.num("grid_n"),
                   run.num("tol"), run.num("cost_grid_n"), run.num("delta"))
    run.stage("sweep")
    run.csv("eta_sweep.csv", ("eta", "e", "m"), sw.csv_rows())
    run.json("eta_sweep.json", sw.to_dict())
    pos = [p for p in sw.points if p.eta > 0 and p.e > 0 and p.m > 0]
    if pos:
        run.svg("eta_sweep.svg", [("e(eta)", [p.eta for p in pos], [p.e for p in pos]),
                                  ("m(eta)", [p.eta for p in pos], [p.m for p in pos])],
                title="Distance to the separated case", xlabel="eta", ylabel="",
                logx=True, logy=True)
    print(f"slope e: {sw.slope_e:.4g}, slope m: {sw.slope_m:.4g}")
    return EXIT_OK


def cmd_reduction(run: Run) -> int:
    q = run.cfg.wolbachia_params()
    K = run.cfg.capacity_obj()
    s, d, c = run.exp("reduction_pulse")
    ctrl = ControlSignal(((s, s + d, c / d),))
    span = (0.0, run.exp("periods") * K.T)
    rows = []
    for sigma in run.exp("sigmas"):
        rows.append((sigma, reduction_gap(q, K, sigma, ctrl, span, max(run.num("tol"), 1e-10))))
        run.stage(f"sigma={sigma:g}")
        print(f"sigma = {sigma:g}: sup gap {rows[-1][1]:.6g}")
    run.csv("reduction.csv", ("sigma", "sup_gap"), rows)
    run.svg("reduction.svg", [("sup gap", [r[0] for r in rows], [r[1] for r in rows])],
            title="Compartment model vs reduced model", xlabel="sigma", ylabel="sup |p - p_red|")
    return EXIT_OK


def cmd_simulate(run: Run, args) -> int:
    model = run.cfg.build_model()
    imp = args.impulse if args.impulse else run.exp("impulse")
    pul = args.pulse if args.pulse else run.exp("pulse")
    sched = ReleaseSchedule.from_lists(imp, pul)
    p0 = run.exp("p0") if args.p0 is None else args.p0
    t_end = run.exp("t_end") if args.t_end is None else args.t_end
    pot = build_cost_potential(model, run.num("delta")) if sched.impulses else None
    tr = simulate_schedule(model, pot, sched, p0, (0.0, t_end), run.num("tol"))
    run.stage("simulate")
    run.csv("trajectory.csv", ("t", "p"), tr.csv_rows())
    tt = np.linspace(0.0, t_end, 1201)
    run.svg("trajectory.svg", [("p(t)", tt, tr(tt))], title="Simulated proportion",
            xlabel="t", ylabel="p")
    env = _envelope(run, model)
    p_end = float(tr.at_end())
    verdict = classify_basin(env, t_end, p_end)
    run.json("simulate.json", {"p_end": p_end, "t_end": t_end, "verdict": verdict.outcome.value,
                               "witness": verdict.witness,
                               "jumps": [list(j) for j in tr.jumps]})
    print(f"p({t_end:g}) = {p_end:.10g}: {verdict.outcome.value}")
    return EXIT_OK


COMMANDS = {
    "check": cmd_check, "periodic": cmd_periodic, "optimize": cmd_optimize,
    "convergence": cmd_convergence, "pulse": cmd_pulse, "two-release": cmd_two_release,
    "eta-sweep": cmd_eta_sweep, "reduction": cmd_reduction,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="configuration file (default: packaged reference config)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS,
                        help="integrator tolerance override")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker threads for grid evaluations")
    parser = argparse.ArgumentParser(prog="popreplace", parents=[common],
                                     description="Optimal release strategies for periodic "
                                                 "bistable population replacement.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "check": "check the model hypotheses",
        "periodic": "periodic solutions and the Poincare map",
        "optimize": "minimal impulse cost over one period",
        "convergence": "finite release-rate infimum for each S",
        "pulse": "cheapest single pulse under a rate bound",
        "two-release": "two impulses sharing the minimal budget",
        "eta-sweep": "distance to the equal-death-rate case",
        "reduction": "compartment model against the reduced model",
        "simulate": "simulate a release schedule",
    }
    for name, h in helps.items():
        p = sub.add_parser(name, parents=[common], help=h)
        if name == "simulate":
            p.add_argument("--impulse", nargs=2, type=float, action="append",
                           metavar=("TIME", "AMOUNT"))
            p.add_argument("--pulse", nargs=3, type=float, action="append",
                           metavar=("START", "DURATION", "AMOUNT"))
            p.add_argument("--p0", type=float, default=None)
            p.add_argument("--t-end", type=float, default=None)
    return parser


def _versions() -> dict:
    import scipy
    return {"popreplace": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "backend": _backend.DEFAULT}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(getattr(args, "config", None))
        if getattr(args, "tol", None) is not None:
            if not 1e-13 <= args.tol <= 1e-3:
                raise ConfigError("--tol must lie in [1e-13, 1e-3]")
            cfg.numerics["tol"] = args.tol
        threads = getattr(args, "threads", None)
        if threads is not None:
            if threads < 1:
                raise ConfigError("--threads must be >= 1")
            cfg.numerics["threads"] = threads
        set_threads(cfg.numerics["threads"])
        out = Path(getattr(args, "out", None) or cfg.output["dir"])
        out.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        print(f"popreplace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    run = Run(cfg, out)
    try:
        if args.command == "simulate":
            code = cmd_simulate(run, args)
        else:
            code = COMMANDS[args.command](run)
    except ConfigError as exc:
        print(f"popreplace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PopReplaceError, ValueError) as exc:
        print(f"popreplace: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_DOMAIN
    write_manifest(out, {"command": args.command, **cfg.to_dict()}, run.timings, _versions())
    return code


if __name__ == "__main__":
    sys.exit(main())
