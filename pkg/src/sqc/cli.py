"""Command-line frontend: sqc simulate | filter | validate."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, control, ekf, engine, oracle
from .errors import ParseError, SqcError, ValidationError
from .process import ItoProcessModel, make_drift
from .scenario import parse_scenario

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _write_trajectory_csv(path: Path, records, m: int, ldim: int) -> None:
    cols = (
        ["step"]
        + [f"x{i}" for i in range(1, m + 1)]
        + [f"u{i}" for i in range(1, ldim + 1)]
        + [f"mean{i}" for i in range(1, m + 1)]
        + [f"cov{i}{j}" for i in range(1, m + 1) for j in range(1, m + 1)]
        + ["V", "logN"]
    )
    lines = [f"# sqc {__version__}", ",".join(cols)]
    for rec in records:
        row = [str(rec.step)]
        row += [_fmt(v) for v in rec.x]
        row += [_fmt(v) for v in rec.u]
        row += [_fmt(v) for v in rec.mean]
        row += [_fmt(v) for v in rec.cov.ravel()]
        row += [_fmt(rec.value), _fmt(rec.log_n)]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def _run_one_simulation(scenario, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    result = control.run_scenario_config(scenario)
    ldim = scenario.B.shape[1]
    _write_trajectory_csv(out_dir / "trajectory.csv", result.records, scenario.dim, ldim)
    code = EXIT_OK if result.completed else EXIT_DOMAIN
    summary = {
        "name": scenario.name,
        "seed": scenario.seed,
        "mode": scenario.mode,
        "horizon": scenario.horizon,
        "rows": len(result.records),
        "completed": result.completed,
        "failure": result.failure,
        "failed_step": result.failed_step,
        "exit_code": code,
    }
    (out_dir / "run.json").write_text(json.dumps(summary, indent=2) + "\n")
    return code


def _sweep_worker(args) -> int:
    scenario_path, seed, steps, mode, out_dir = args
    scenario = parse_scenario(scenario_path)
    scenario.seed = seed
    if steps is not None:
        scenario.horizon = steps
    if mode is not None:
        scenario.mode = mode
    return _run_one_simulation(scenario, Path(out_dir) / f"seed_{seed}")


def cmd_simulate(args) -> int:
    scenario = parse_scenario(args.scenario)
    if scenario.potential_kind == "observation":
        raise ValidationError("observation scenarios are driven by `sqc filter`")
    if args.steps is not None:
        if args.steps < 1:
            raise ValidationError("--steps must be >= 1")
        scenario.horizon = args.steps
    if args.mode is not None:
        scenario.mode = args.mode
    out_dir = Path(args.out)

    if args.seeds is not None:
        first, last = args.seeds
        tasks = [
            (args.scenario, seed, args.steps, args.mode, str(out_dir))
            for seed in range(first, last + 1)
        ]
        if len(tasks) == 1:
            codes = [_sweep_worker(tasks[0])]
        else:
            with ProcessPoolExecutor() as pool:
                codes = list(pool.map(_sweep_worker, tasks))
        print(f"{len(tasks)} runs under {out_dir}, {sum(c == EXIT_OK for c in codes)} completed")
        return max(codes)

    if args.seed is not None:
        scenario.seed = args.seed
    code = _run_one_simulation(scenario, out_dir)
    status = "completed" if code == EXIT_OK else "stopped on domain violation"
    print(f"{scenario.name}: seed {scenario.seed}, {status}; output in {out_dir}")
    return code


def cmd_filter(args) -> int:
    scenario = parse_scenario(args.scenario)
    obs_model = scenario.build_observation_model()
    stream = ekf.read_observations(args.obs)
    if len(stream) and int(stream.steps.max()) > scenario.horizon:
        raise ValidationError(
            f"observation at step {int(stream.steps.max())} is beyond horizon {scenario.horizon}"
        )
    model = scenario.build_model()
    initial = engine.GaussianBelief(
        mean=scenario.mean0, cov=scenario.cov0, step=0, tag="predicted"
    )
    horizon = scenario.horizon if len(stream) == 0 else int(stream.steps.max())
    beliefs, logliks = ekf.filter_with_likelihood(model, obs_model, stream, initial, horizon)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    m = scenario.dim
    cols = (
        ["step"]
        + [f"mean{i}" for i in range(1, m + 1)]
        + [f"cov{i}{j}" for i in range(1, m + 1) for j in range(1, m + 1)]
        + ["loglik"]
    )
    lines = [f"# sqc {__version__}", ",".join(cols)]
    for belief, loglik in zip(beliefs, logliks):
        row = [str(belief.step)]
        row += [_fmt(v) for v in belief.mean]
        row += [_fmt(v) for v in belief.cov.ravel()]
        row.append(_fmt(loglik))
        lines.append(",".join(row))
    (out_dir / "beliefs.csv").write_text("\n".join(lines) + "\n")
    total = float(np.nansum(logliks))
    print(f"cumulative log-likelihood: {total:.12g} over {len(stream)} observations")
    return EXIT_OK


def _quadrature_checks() -> dict:
    """Engine moments against the quadrature oracle on fixed instances."""
    from .potential import eval_log_barrier, eval_quadratic_penalty

    checks = {}

    belief = engine.GaussianBelief(mean=[0.0], cov=[[1.0]], step=0, tag="predicted")
    pot = eval_quadratic_penalty(belief.mean, np.array([1.0]), np.array([[1.0]]))
    upd = engine.update(belief, pot, 1.0)
    mean, cov, log_norm = oracle.weighted_gaussian_moments(
        belief.mean, belief.cov, lambda x: eval_quadratic_penalty(x, np.array([1.0]), np.array([[1.0]])), 1.0
    )
    diag = engine.normalization(belief, pot, 1.0)
    checks["quadratic_1d"] = {
        "mean_err": float(np.max(np.abs(upd.mean - mean))),
        "cov_err": float(np.max(np.abs(upd.cov - cov))),
        "log_norm_err": abs(diag.log_n + log_norm),
        "tol": 1e-8,
    }

    mean0 = np.array([0.3, -0.2])
    cov0 = np.array([[1.0, 0.3], [0.3, 0.7]])
    d = np.array([1.0, 0.0])
    s_inv = np.array([[2.0, 0.0], [0.0, 0.5]])
    dt = 0.5
    belief2 = engine.GaussianBelief(mean=mean0, cov=cov0, step=0, tag="predicted")
    pot2 = eval_quadratic_penalty(mean0, d, s_inv)
    upd2 = engine.update(belief2, pot2, dt)
    mean2, cov2, log_norm2 = oracle.weighted_gaussian_moments(
        mean0, cov0, lambda x: eval_quadratic_penalty(x, d, s_inv), dt
    )
    diag2 = engine.normalization(belief2, pot2, dt)
    checks["quadratic_2d"] = {
        "mean_err": float(np.max(np.abs(upd2.mean - mean2))),
        "cov_err": float(np.max(np.abs(upd2.cov - cov2))),
        "log_norm_err": abs(diag2.log_n + log_norm2),
        "tol": 1e-8,
    }

    a = np.array([10.0, 10.0])
    mean_b = np.array([1.0, 1.0])
    cov_b = 0.01 * np.eye(2)
    belief_b = engine.GaussianBelief(mean=mean_b, cov=cov_b, step=0, tag="predicted")
    upd_b = engine.update(belief_b, eval_log_barrier(mean_b, a), 1.0)
    mean_q, _, _ = oracle.weighted_gaussian_moments(
        mean_b, cov_b, lambda x: eval_log_barrier(x, a), 1.0
    )
    checks["barrier_expansion"] = {
        "mean_rel_err": float(np.max(np.abs(upd_b.mean - mean_q) / np.abs(mean_q))),
        "tol": 0.05,
    }

    for entry in checks.values():
        entry["passed"] = all(
            v <= entry["tol"] for k, v in entry.items() if k.endswith("err")
        )
    return checks


def _fp_convergence() -> dict:
    """Residual halving study for the three canonical 1-D cases."""
    grid = oracle.Grid1D(-9.0, 9.0, 2048)
    x = grid.points()
    density = np.exp(-0.5 * x**2) / np.sqrt(2 * np.pi)
    dts = [1e-2, 5e-3, 2.5e-3, 1.25e-3]

    def model_with(kind, params):
        drift, jac = make_drift(kind, params, 1)
        return ItoProcessModel(dim=1, drift=drift, drift_jacobian=jac, g_inv=[[1.0]], dt=1.0)

    cases = {
        "free_diffusion": (model_with("zero", None), None),
        "linear_drift": (model_with("linear", {"A": [[-1.0]]}), None),
        "constant_potential": (model_with("zero", None), lambda x: 0.5),
    }
    out = {}
    for name, (model, potential) in cases.items():
        residuals = [
            oracle.fokker_planck_residual(model, potential, grid, density, dt) for dt in dts
        ]
        ratios = [residuals[i] / residuals[i + 1] for i in range(len(residuals) - 1)]
        out[name] = {
            "dts": dts,
            "residuals": residuals,
            "ratios": ratios,
            "passed": all(1.5 <= r <= 3.0 for r in ratios),
        }
    return out


def cmd_validate(args) -> int:
    report: dict = {"level": args.level}
    ident = oracle.identity_suite(seed=0, trials=500)
    report["identity"] = ident.to_dict()
    report["quadrature"] = _quadrature_checks()
    if args.level == "full":
        report["fokker_planck"] = _fp_convergence()

    passed = ident.passed and all(c["passed"] for c in report["quadrature"].values())
    if args.level == "full":
        passed = passed and all(c["passed"] for c in report["fokker_planck"].values())
    report["passed"] = passed

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "validation.json").write_text(json.dumps(report, indent=2) + "\n")

    print(f"identity suite: {ident.checked} checked, {ident.skipped} skipped, "
          f"{len(ident.failures)} failed")
    for name, check in report["quadrature"].items():
        print(f"quadrature {name}: {'ok' if check['passed'] else 'FAILED'}")
    if args.level == "full":
        for name, case in report["fokker_planck"].items():
            ratios = ", ".join(f"{r:.2f}" for r in case["ratios"])
            print(f"kernel residual {name}: ratios [{ratios}] {'ok' if case['passed'] else 'FAILED'}")
    print(f"validation {'passed' if passed else 'FAILED'}; report in {out_dir / 'validation.json'}")
    return EXIT_OK if passed else EXIT_USAGE


def _parse_seed_range(text: str) -> tuple[int, int]:
    try:
        first, last = text.split("..")
        first, last = int(first), int(last)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a..b, for example 0..99") from None
    if last < first:
        raise argparse.ArgumentTypeError("seed range must be nondecreasing")
    return first, last


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqc",
        description="Potential-constrained belief recursion: simulate, filter, validate.",
    )
    parser.add_argument("--version", action="version", version=f"sqc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and write trajectory.csv")
    sim.add_argument("--scenario", required=True, help="scenario JSON file")
    sim.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sim.add_argument("--steps", type=int, default=None, help="override the horizon")
    sim.add_argument("--mode", choices=["belief", "sampled"], default=None)
    sim.add_argument("--out", default=".", help="output directory")
    sim.add_argument("--seeds", type=_parse_seed_range, default=None, metavar="A..B",
                     help="run a seed sweep, one subdirectory per seed")
    sim.set_defaults(func=cmd_simulate)

    flt = sub.add_parser("filter", help="run the observation filter over a CSV stream")
    flt.add_argument("--scenario", required=True, help="scenario JSON with an observation potential")
    flt.add_argument("--obs", required=True, help="observation CSV with header step,y1,...,yk")
    flt.add_argument("--out", default=".", help="output directory")
    flt.set_defaults(func=cmd_filter)

    val = sub.add_parser("validate", help="run the oracle suites and write a JSON report")
    val.add_argument("--level", choices=["fast", "full"], default="fast")
    val.add_argument("--out", default=".", help="output directory")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SqcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
