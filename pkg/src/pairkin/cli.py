"""Command-line interface: scenario runs, model comparisons, rate ladders.

Subcommands:
  run <config>         propagate one model and write a time-series CSV
  compare <config>     propagate two models on one grid and report deviations
  bornmarkov <config>  pseudomode coupling ladder vs predicted rates
  selftest             run the invariant suite and print a pass/fail table

Exit codes: 0 success, 2 configuration/usage error, 3 numerical-contract
violation. All files are written whole after computation finishes. With
``--reproducible`` the timestamp header line is suppressed so consecutive
runs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .config import (CompareConfig, ConfigError, ModelSpec, RunConfig,
                     load_toml, parse_bornmarkov_config, parse_compare_config,
                     parse_run_config)
from .fock import (FockSpace, fock_occupation_state, integrate_multipair,
                   prepare_one_pair, second_quantize)
from .models import Generator
from .propagate import (NumericalContractError, StepSizeError, Trajectory,
                        compute_observables, hermiticity_defects, integrate,
                        min_eigenvalues)
from .bornmarkov import pseudomode_ladder
from .spin import validate_state

MAX_LADDER_RATIO = 0.2


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path, names, columns, reproducible: bool) -> None:
    lines = []
    if not reproducible:
        stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        lines.append(f"# generated by pairkin {__version__} at {stamp}")
    lines.append(",".join(names))
    for row in zip(*columns):
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _check_one_pair_contracts(traj: Trajectory, generator: Generator,
                              positivity: bool) -> None:
    times = traj.times
    defects = hermiticity_defects(traj.states)
    bad = np.nonzero(defects > 1e-10)[0]
    if len(bad):
        i = int(bad[0])
        raise NumericalContractError(
            f"Hermiticity defect {defects[i]:.3e} at t = {times[i]:.6g} "
            f"(grid point {i})")
    traces = traj.observables["trace"]
    if generator.conserves_trace:
        drift = np.abs(traces - traces[0])
        bad = np.nonzero(drift > 1e-9)[0]
        if len(bad):
            i = int(bad[0])
            raise NumericalContractError(
                f"trace drift {drift[i]:.3e} under a trace-conserving model "
                f"at t = {times[i]:.6g} (grid point {i})")
    else:
        increases = np.diff(traces)
        bad = np.nonzero(increases > 1e-9)[0]
        if len(bad):
            i = int(bad[0])
            raise NumericalContractError(
                f"trace increased by {increases[i]:.3e} at t = {times[i + 1]:.6g} "
                f"(grid point {i + 1})")
    if positivity:
        eigs = min_eigenvalues(traj.states)
        bad = np.nonzero(eigs < -1e-9)[0]
        if len(bad):
            i = int(bad[0])
            raise NumericalContractError(
                f"negative eigenvalue {eigs[i]:.3e} at t = {times[i]:.6g} "
                f"(grid point {i})")


def _multipair_n_max(spec: ModelSpec, initial) -> int:
    if spec.n_max is not None:
        return spec.n_max
    if initial.preset == "fock":
        return max(1, max(initial.occupations))
    return 1  # one-pair preparations never hold more than one quantum per mode


def _run_multipair(spec: ModelSpec, h, initial, grid, rng):
    space = FockSpace(_multipair_n_max(spec, initial))
    h_hat = second_quantize(h, space)
    if initial.preset == "fock":
        rho_f = fock_occupation_state(space, initial.occupations)
    else:
        rho_f = prepare_one_pair(initial.build(rng), space)
    return integrate_multipair(rho_f, h_hat, spec.rates, grid, space,
                               keep_states=False)


def _model_states_and_observables(spec: ModelSpec, h, rho0, grid):
    """One-pair trajectory of a model; multipair models are reduced."""
    if spec.kind == "multipair":
        space = FockSpace(spec.n_max if spec.n_max is not None else 1)
        h_hat = second_quantize(h, space)
        traj = integrate_multipair(prepare_one_pair(rho0, space), h_hat,
                                   spec.rates, grid, space, keep_states=False)
        obs = compute_observables(traj.reduced,
                                  (2.0 * spec.rates.kS, 2.0 * spec.rates.kT))
        return traj.reduced, obs
    gen = spec.build_generator(h)
    traj = integrate(gen, rho0, grid)
    _check_one_pair_contracts(traj, gen,
                              positivity=validate_state(rho0, 1e-10).positive_ok)
    return traj.states, traj.observables


def _model_label(spec: ModelSpec) -> str:
    return spec.kind


def cmd_run(args) -> int:
    cfg: RunConfig = parse_run_config(load_toml(args.config), args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    rng = np.random.default_rng(seed) if seed is not None else None
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, f"{cfg.name}.csv")

    if cfg.model.kind == "multipair":
        traj = _run_multipair(cfg.model, cfg.hamiltonian, cfg.initial, cfg.grid, rng)
        observables = traj.observables
        times = traj.times
    else:
        generator = cfg.model.build_generator(cfg.hamiltonian)
        rho0 = cfg.initial.build(rng)
        traj = integrate(generator, rho0, cfg.grid)
        _check_one_pair_contracts(traj, generator,
                                  positivity=validate_state(rho0, 1e-10).positive_ok)
        observables = traj.observables
        times = traj.times

    columns = [times] + [observables[name] for name in cfg.observables]
    _write_csv(out_path, ["t"] + cfg.observables, columns, args.reproducible)
    print(f"wrote {out_path}")
    return 0


def cmd_compare(args) -> int:
    cfg: CompareConfig = parse_compare_config(load_toml(args.config), args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    rng = np.random.default_rng(seed) if seed is not None else None
    os.makedirs(args.out, exist_ok=True)

    n_instances = cfg.initial.count if cfg.initial.randomized else 1
    state_dev = None
    obs_dev = {name: None for name in cfg.observables}
    for _ in range(n_instances):
        rho0 = cfg.initial.build(rng)
        states_a, obs_a = _model_states_and_observables(
            cfg.model_a, cfg.hamiltonian, rho0, cfg.grid)
        states_b, obs_b = _model_states_and_observables(
            cfg.model_b, cfg.hamiltonian, rho0, cfg.grid)
        dev = np.max(np.abs(states_a - states_b), axis=(1, 2))
        state_dev = dev if state_dev is None else np.maximum(state_dev, dev)
        for name in cfg.observables:
            d = np.abs(obs_a[name] - obs_b[name])
            obs_dev[name] = d if obs_dev[name] is None else np.maximum(obs_dev[name], d)

    times = cfg.grid.times()
    names = ["t", "state_dev"] + [f"dev_{n}" for n in cfg.observables]
    columns = [times, state_dev] + [obs_dev[n] for n in cfg.observables]
    dev_path = os.path.join(args.out, f"{cfg.name}_deviation.csv")
    _write_csv(dev_path, names, columns, args.reproducible)

    summary = {
        "name": cfg.name,
        "model_a": _model_label(cfg.model_a),
        "model_b": _model_label(cfg.model_b),
        "max_state_deviation": float(np.max(state_dev)),
        "max_observable_deviation": {n: float(np.max(obs_dev[n]))
                                     for n in cfg.observables},
        "grid": {"t0": cfg.grid.t0, "t_end": cfg.grid.t_end,
                 "n_steps": cfg.grid.n_steps},
        "initial": cfg.initial.preset,
        "instances": n_instances,
        "seed": seed,
        "version": __version__,
    }
    if not args.reproducible:
        summary["generated_at"] = datetime.now(timezone.utc).strftime(
            "%Y-%m-%dT%H:%M:%SZ")
    summary_path = os.path.join(args.out, f"{cfg.name}_summary.json")
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    max_dev = float(np.max(state_dev))
    print(f"max state deviation: {max_dev:.6e}")
    print(f"wrote {dev_path}")
    print(f"wrote {summary_path}")
    if cfg.require_max_le is not None and max_dev > cfg.require_max_le:
        print(f"requirement failed: max deviation {max_dev:.3e} > "
              f"{cfg.require_max_le:.3e}", file=sys.stderr)
        return 3
    if cfg.require_max_gt is not None and max_dev <= cfg.require_max_gt:
        print(f"requirement failed: max deviation {max_dev:.3e} <= "
              f"{cfg.require_max_gt:.3e}", file=sys.stderr)
        return 3
    return 0


def cmd_bornmarkov(args) -> int:
    cfg = parse_bornmarkov_config(load_toml(args.config), args.config)
    for r in cfg.coupling_ratios:
        if r > MAX_LADDER_RATIO:
            raise ConfigError(f"ladder.coupling_ratios: {r} exceeds the "
                              f"weak-coupling bound {MAX_LADDER_RATIO}")
    os.makedirs(args.out, exist_ok=True)
    ratios = sorted(cfg.coupling_ratios, reverse=True)
    results = pseudomode_ladder(ratios, cfg.gamma, cfg.delta)

    names = ["lambda_over_gamma", "lambda", "predicted_kS", "fitted_rate",
             "relative_error"]
    columns = [
        np.array(ratios),
        np.array([r.lam for r in results]),
        np.array([r.predicted_kS for r in results]),
        np.array([r.fitted_rate for r in results]),
        np.array([r.relative_error for r in results]),
    ]
    out_path = os.path.join(args.out, f"{cfg.name}.csv")
    _write_csv(out_path, names, columns, args.reproducible)
    print(f"wrote {out_path}")

    errors = [r.relative_error for r in results]
    for weaker, stronger in zip(errors[1:], errors[:-1]):
        if weaker > stronger + 1e-12:
            print(f"relative error is not monotone down the ladder: "
                  f"{weaker:.3e} > {stronger:.3e}", file=sys.stderr)
            return 3
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    passed, report = run_selftest()
    os.makedirs(args.out, exist_ok=True)
    report_path = os.path.join(args.out, "selftest_report.txt")
    prefix = ""
    if not args.reproducible:
        stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        prefix = f"# generated by pairkin {__version__} at {stamp}\n"
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(prefix + report)
    print(report, end="")
    print(f"wrote {report_path}")
    return 0 if passed else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairkin",
        description="Spin-selective radical-pair recombination kinetics")
    parser.add_argument("--version", action="version",
                        version=f"pairkin {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", default="./out", help="output directory")
        p.add_argument("--reproducible", action="store_true",
                       help="suppress timestamps for byte-identical outputs")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")

    p_run = sub.add_parser("run", help="propagate one scenario")
    p_run.add_argument("config")
    add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="compare two model trajectories")
    p_cmp.add_argument("config")
    add_common(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_bm = sub.add_parser("bornmarkov", help="pseudomode rate ladder")
    p_bm.add_argument("config")
    add_common(p_bm)
    p_bm.set_defaults(func=cmd_bornmarkov)

    p_st = sub.add_parser("selftest", help="run the invariant suite")
    add_common(p_st)
    p_st.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, StepSizeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalContractError as exc:
        print(f"numerical contract violated: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
