"""Command-line front-end.

Exit codes: 0 success, 1 I/O or schema error, 2 degenerate analysis,
3 numeric divergence.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io as fio
from .bias_model import BiasParameters
from .config import ConfigError, ServoRunConfig, load_config, to_dict
from .dynamics import simulate
from .experiments import (
    CohortResult,
    ExperimentBConfig,
    NoisyHumanConfig,
    evaluation_samples,
    run_cohort,
    run_interaction_experiment,
)
from .fitting import DegenerateFitError, FitResult, fit_power_law
from .servo_sim import (
    DivergenceError,
    HumanLoad,
    PlantParams,
    run_force_control,
    run_position_control,
    settling_time,
)
from .stability import estimate_unstable_region, group_samples, level_tests

log = logging.getLogger("forcebias")

EXIT_OK, EXIT_IO, EXIT_DEGENERATE, EXIT_DIVERGED = 0, 1, 2, 3


class Degenerate(Exception):
    pass


def _finite(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _fit_dict(fit: FitResult) -> dict:
    return {
        "alpha": fit.params.alpha,
        "beta": fit.params.beta,
        "gamma": fit.gamma,
        "rmse": fit.rmse,
        "n_trials": fit.n_trials,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "at_bound": fit.at_bound,
    }


def _region_dict(region) -> Optional[dict]:
    if region is None:
        return None
    rep = region.reported()
    return {
        "lower": region.lower,
        "upper": region.upper,
        "error_radius": region.error_radius,
        "reported": {"lower": rep.lower, "upper": rep.upper, "error_radius": rep.error_radius},
    }


def _level_dicts(tests) -> list[dict]:
    return [{"level": t.level, "n": t.n, "mean_e": t.mean, "p_value": t.p_value,
             "significant": t.significant} for t in tests]


def _write_outputs(out_dir: Path, files: dict[str, str]) -> dict[str, str]:
    hashes = {}
    for name, text in files.items():
        fio.write_text(out_dir / name, text)
        hashes[name] = fio.blob_hash(text.encode("utf-8"))
    return hashes


# --- fit -----------------------------------------------------------------

def cmd_fit(args) -> int:
    trials = fio.trials_from_csv(Path(args.trials).read_text(encoding="utf-8"))
    fit = fit_power_law(trials)
    out = {"kind": "fit", "schema_version": 1, "input": str(args.trials), "fit": _fit_dict(fit)}
    _write_outputs(Path(args.out_dir), {"fit.json": fio.dump_json(out)})
    print(f"alpha={fit.params.alpha:.6g} beta={fit.params.beta:.6g} "
          f"gamma={fit.gamma:.6g} rmse={fit.rmse:.6g} "
          f"converged={fit.converged} iterations={fit.iterations}")
    if not fit.converged:
        raise Degenerate("fit did not converge to an interior optimum (beta on a bound)")
    return EXIT_OK


# --- simulate ------------------------------------------------------------

def cmd_simulate(args) -> int:
    params = BiasParameters(args.alpha, args.beta)
    if args.sigma > 0:
        human = NoisyHumanConfig(params, args.sigma, args.seed)
        traces = run_interaction_experiment(
            human, ExperimentBConfig(tuple(args.r0), args.phases))
    else:
        traces = [simulate(params, r0, args.phases) for r0 in args.r0]
    _write_outputs(Path(args.out_dir), {"traces.csv": fio.traces_to_csv(traces)})
    gamma = params.gamma
    for r0, t in zip(args.r0, traces):
        print(f"r0={r0:.6g} final={t.final:.6g} final/gamma={t.final / gamma:.6g}")
    return EXIT_OK


# --- stability -----------------------------------------------------------

def cmd_stability(args) -> int:
    trials = fio.trials_from_csv(Path(args.trials).read_text(encoding="utf-8"))
    fit = fit_power_law(trials)
    if not fit.converged:
        raise Degenerate("fit did not converge; equilibrium point undefined")
    samples = evaluation_samples(trials, fit.gamma)
    groups = group_samples(samples)
    try:
        region = estimate_unstable_region(groups, args.significance)
    except ValueError as exc:
        raise Degenerate(str(exc)) from None
    out = {
        "kind": "stability",
        "schema_version": 1,
        "input": str(args.trials),
        "fit": _fit_dict(fit),
        "significance": args.significance,
        "level_tests": _level_dicts(level_tests(groups, args.significance)),
        "unstable_region": _region_dict(region),
    }
    _write_outputs(Path(args.out_dir), {"stability.json": fio.dump_json(out)})
    print(_region_line(region))
    return EXIT_OK


def _region_line(region) -> str:
    if region is None:
        return "unstable region: none detected"
    return (f"unstable region: {region.lower:.4f} < r/gamma < {region.upper:.4f}, "
            f"|e|/gamma < {region.error_radius:.4f}")


# --- experiment ----------------------------------------------------------

def experiment_report(res: CohortResult) -> tuple[dict, dict[str, str]]:
    """Report dict and output files (name -> text) of a cohort run."""
    files: dict[str, str] = {}
    for a in res.agents:
        files[f"trials_agent{a.index:03d}.csv"] = fio.trials_to_csv(a.trials)
    files["traces.csv"] = fio.traces_to_csv([t for a in res.agents for t in a.traces])
    files["evaluation.csv"] = fio.rows_to_csv(
        ("source", "trial", "normalized_force", "e_value"),
        ((s.source, s.trial, s.normalized_force, s.e_value) for a in res.agents for s in a.samples))

    rmses = np.array([a.fit.rmse for a in res.agents])
    conv, div = res.divergence_counts
    report = {
        "kind": "experiment",
        "schema_version": 1,
        "config": to_dict(res.config),
        "agents": [
            {"index": a.index, "seed": a.human.seed, "true_alpha": a.human.params.alpha,
             "true_beta": a.human.params.beta, "true_gamma": a.human.params.gamma,
             "fit": _fit_dict(a.fit)}
            for a in res.agents
        ],
        "rmse": {"mean": float(rmses.mean()),
                 "sd": _finite(rmses.std(ddof=1)) if rmses.size > 1 else None},
        "pooled_normalized_fit": _fit_dict(res.pooled_fit),
        "level_tests": _level_dicts(res.level_tests),
        "unstable_region": _region_dict(res.region),
        "outliers": sorted(res.outliers),
        "group_tests": [
            {"group": g.label, "n": g.n, "mean_initial_error": g.mean_initial,
             "mean_final_error": g.mean_final, "alternative": g.direction,
             "statistic": _finite(g.result.statistic) if g.result else None,
             "dof": _finite(g.result.dof) if g.result else None,
             "p_value": _finite(g.result.p_value) if g.result else None}
            for g in res.group_tests
        ],
        "divergence": {
            "convergent": conv,
            "divergent": div,
            "rate": 100.0 * div / (conv + div) if conv + div else None,
            "by_range": [{"lower": lo, "upper": hi, "rate": rate}
                         for lo, hi, rate in res.divergence_by_range],
        },
        "asymptotic_convergence_rate": res.convergence_rate,
    }
    return report, files


def cmd_experiment(args) -> int:
    overrides = {"seed": args.seed} if args.seed is not None else None
    cfg = load_config(args.config, "experiment", overrides)
    res = run_cohort(cfg, jobs=args.jobs)
    report, files = experiment_report(res)
    report["outputs"] = _write_outputs(Path(args.out_dir), files)
    _write_outputs(Path(args.out_dir), {"report.json": fio.dump_json(report)})
    print(_region_line(res.region))
    print(f"pooled normalized fit: alpha={res.pooled_fit.params.alpha:.4f} "
          f"beta={res.pooled_fit.params.beta:.4f}")
    print(f"asymptotic convergence rate: {res.convergence_rate:.1f}%")
    return EXIT_OK


# --- servo ---------------------------------------------------------------

def servo_scenarios(cfg: ServoRunConfig):
    ctrl = cfg.controller
    step = run_force_control(ctrl, cfg.plant, cfg.step_torque, cfg.seconds, cfg.load)
    matched = PlantParams(J=ctrl.J_n, K_t=ctrl.K_tn, b=0.0, tau_ext=cfg.disturbance)
    dist = run_position_control(ctrl, matched, cfg.disturbance_seconds,
                                HumanLoad(stiffness=0.0, damping=0.0))
    return step, dist


def servo_metrics(cfg: ServoRunConfig, step, dist) -> dict:
    ctrl = cfg.controller
    steady = step.window_mean(step.t_res, cfg.steady_window)
    k = min(dist.theta.size - 1, int(round(5.0 / ctrl.g / ctrl.dt)))
    residual = np.abs(dist.d_true - dist.d_hat) / abs(cfg.disturbance) if cfg.disturbance else None
    return {
        "force_step": {
            "command": cfg.step_torque,
            "settling_time": _finite(settling_time(step.t_res, cfg.step_torque,
                                                   cfg.settle_tolerance, ctrl.dt)),
            "steady_estimate": steady,
            "steady_error": abs(steady - cfg.step_torque) / abs(cfg.step_torque),
            "steady_contact": step.window_mean(step.contact, cfg.steady_window),
        },
        "disturbance": None if residual is None else {
            "torque": cfg.disturbance,
            "residual_at_5_over_g": float(residual[k - 1]) if k >= 1 else None,
            "final_residual": float(residual[-1]),
            "peak_angle": float(np.abs(dist.theta).max()),
            "final_angle": float(dist.theta[-1]),
        },
    }


def cmd_servo(args) -> int:
    cfg = load_config(args.config, "servo")
    step, dist = servo_scenarios(cfg)
    metrics = servo_metrics(cfg, step, dist)
    rows = []
    for run, (sim, phase) in enumerate(((step, "robot"), (dist, "human"))):
        for k in range(0, sim.t_res.size, cfg.decimation):
            rows.append((run, k, phase, float(sim.t_res[k])))
    files = {"servo_timeseries.csv": fio.rows_to_csv(fio.TRACE_HEADER, rows)}
    out = {"kind": "servo", "schema_version": 1, "config": to_dict(cfg), "metrics": metrics}
    out["outputs"] = _write_outputs(Path(args.out_dir), files)
    _write_outputs(Path(args.out_dir), {"servo_metrics.json": fio.dump_json(out)})
    fs = metrics["force_step"]
    print(f"force step: settling={fs['settling_time']} s steady_error={fs['steady_error']:.3g}")
    if metrics["disturbance"]:
        print(f"disturbance residual at 5/g: {metrics['disturbance']['residual_at_5_over_g']:.3g}")
    return EXIT_OK


# --- report --------------------------------------------------------------

def cmd_report(args) -> int:
    import json

    try:
        data = json.loads(Path(args.report).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise fio.SchemaError(f"{args.report}: invalid JSON ({exc})") from None
    kind = data.get("kind")
    lines = [f"# {kind} report"]
    if "fit" in data:
        f = data["fit"]
        lines.append(f"fit: alpha={f['alpha']:.4f} beta={f['beta']:.4f} "
                     f"gamma={f['gamma']:.4f} rmse={f['rmse']:.4f}")
    if kind == "experiment":
        p = data["pooled_normalized_fit"]
        lines.append(f"agents: {len(data['agents'])}, outliers: {data['outliers']}")
        lines.append(f"mean RMSE: {data['rmse']['mean']:.4f}")
        lines.append(f"pooled normalized fit: alpha={p['alpha']:.4f} beta={p['beta']:.4f}")
    if "unstable_region" in data:
        r = data["unstable_region"]
        if r is None:
            lines.append("unstable region: none detected")
        else:
            rep = r["reported"]
            lines.append(f"unstable region: {rep['lower']:.3f} < r/gamma < {rep['upper']:.3f}, "
                         f"|e|/gamma < {rep['error_radius']:.3f}")
    if kind == "experiment":
        lines.append("")
        lines.append("| group | n | initial | final | H1 | p |")
        lines.append("|---|---|---|---|---|---|")
        for g in data["group_tests"]:
            h1 = "initial > final" if g["alternative"] == "greater" else "initial < final"
            p = "n/a" if g["p_value"] is None else f"{g['p_value']:.3g}"
            lines.append(f"| {g['group']} | {g['n']} | {g['mean_initial_error']:.3f} | "
                         f"{g['mean_final_error']:.3f} | {h1} | {p} |")
        d = data["divergence"]
        lines.append("")
        lines.append(f"divergent E in [0.5, 1.5]: {d['divergent']} of "
                     f"{d['convergent'] + d['divergent']}")
        lines.append(f"asymptotic convergence rate: {data['asymptotic_convergence_rate']:.1f}%")
    if kind == "servo":
        m = data["metrics"]["force_step"]
        lines.append(f"force step settling time: {m['settling_time']} s, "
                     f"steady error {m['steady_error']:.3g}")
    print("\n".join(lines))
    return EXIT_OK


# --- entry point ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="forcebias", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("fit", help="fit the power-law transfer model to a trial CSV")
    s.add_argument("trials")
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", help="simulate interaction traces")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--r0", type=float, nargs="+", required=True)
    s.add_argument("--phases", type=int, default=20)
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("stability", help="evaluation values and unstable region of a trial CSV")
    s.add_argument("trials")
    s.add_argument("--significance", type=float, default=0.05)
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_stability)

    s = sub.add_parser("experiment", help="run a synthetic cohort through both experiments")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--out-dir", default=".")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("servo", help="simulate the force/position servo")
    s.add_argument("--config")
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_servo)

    s = sub.add_parser("report", help="summarize a JSON report")
    s.add_argument("report")
    s.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DegenerateFitError, Degenerate) as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (OSError, ValueError) as exc:
        # SchemaError and ConfigError are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
