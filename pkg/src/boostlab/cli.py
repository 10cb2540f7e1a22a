"""``boostlab`` command line: run, verify, compare.

Exit codes: 0 success, 1 configuration error, 2 contract or bound violation.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .boosting import run_kale_smoothboost, run_quantumboost, theorem_iterations
from .config import ALGOS, FIELDS, LEARNERS, ON_VIOLATION, build_config, read_config_file
from .dataio import load_csv
from .diagnostics import (
    check_regret_bound,
    misclassified_reference,
    potential_diagnostics,
    uniform_reference,
)
from .errors import (
    BoundViolation,
    ConfigError,
    EstimatorFailure,
    FloorViolation,
    WeakLearnerContractViolation,
)
from .fsutil import atomic_write_json, atomic_write_text
from .learners import PlantedLearner, StumpLearner
from .quantum import MODES
from .rng import substream
from .tasks import generate_task, parse_task_spec
from .verify import SUITES, run_suite

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION = 0, 1, 2

COMPARE_COLUMNS = ("name", "algo", "estimator", "gamma", "epsilon", "seed", "T", "projections",
                   "final_error", "oracle_queries", "grover_applications", "modeled_quantum_cost",
                   "samples_drawn")


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not argparse's exit 2."""

    def error(self, message):
        raise ConfigError(message)


def _add_run_flags(p):
    p.add_argument("--config", help="key = value file; flags override its values")
    p.add_argument("--algo", choices=ALGOS)
    p.add_argument("--gamma")
    p.add_argument("--epsilon")
    p.add_argument("--delta")
    p.add_argument("--estimator", choices=MODES)
    p.add_argument("--learner", choices=LEARNERS)
    p.add_argument("--samples", help="examples drawn per learner call")
    p.add_argument("--task", help="e.g. junta:k=3,n=20,m=2000")
    p.add_argument("--data", help="training CSV instead of a synthetic task")
    p.add_argument("--T", "-T", dest="T", help="iteration override")
    p.add_argument("--K", dest="K", help="projection interval override")
    p.add_argument("--seed", help="default: $BOOSTLAB_SEED or 0")
    p.add_argument("--dense-trace", dest="dense_trace", action="store_const", const=True)
    p.add_argument("--on-violation", dest="on_violation", choices=ON_VIOLATION)


def build_parser():
    parser = _Parser(prog="boostlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="one boosting run: JSONL log + summary JSON")
    _add_run_flags(run)
    run.add_argument("--out", help="output directory (run.jsonl, summary.json)")

    ver = sub.add_parser("verify", help="run an invariant suite")
    ver.add_argument("suite", choices=SUITES + ("all",))
    ver.add_argument("--trials", type=int)
    ver.add_argument("--seed", type=int)

    cmp_ = sub.add_parser("compare", help="counter table across algorithms/estimators")
    cmp_.add_argument("--member", action="append", default=[], metavar="FILE",
                      help="config file of one member (repeatable)")
    cmp_.add_argument("--algos", help="comma-separated algorithms sharing the flags below")
    cmp_.add_argument("--estimators", help="comma-separated estimator modes sharing the flags below")
    cmp_.add_argument("--sweep", help="name=v1,v2,... (epsilon or gamma) with log-log slope fits")
    cmp_.add_argument("--jobs", type=int, default=1)
    cmp_.add_argument("--out", default="compare.csv")
    _add_run_flags(cmp_)
    return parser


def _overrides(args):
    return {k: getattr(args, k, None) for k in FIELDS if k != "out"}


def config_from_args(args, config_path=None):
    path = config_path if config_path is not None else getattr(args, "config", None)
    file_values = read_config_file(path) if path else {}
    over = _overrides(args)
    if getattr(args, "out", None) is not None and args.command == "run":
        over["out"] = args.out
    return build_config(file_values, over)


# execution -----------------------------------------------------------------

def training_set(cfg):
    if cfg.data:
        try:
            return load_csv(cfg.data)
        except OSError as exc:
            raise ConfigError(f"cannot read {cfg.data}: {exc.strerror}", field="data") from None
    task, m = parse_task_spec(cfg.task, seed=cfg.seed)
    return generate_task(task, m)


def make_learner(cfg, S):
    if cfg.learner == "planted":
        return PlantedLearner.seeded(cfg.gamma, S.m, substream(cfg.seed, "learner"), cfg.samples)
    return StumpLearner(cfg.samples)


def execute(cfg):
    """Run one configuration; returns (record, summary dict)."""
    S = training_set(cfg)
    learner = make_learner(cfg, S)
    common = dict(seed=cfg.seed, dense_trace=cfg.dense_trace, on_violation=cfg.on_violation)
    if cfg.algo == "kale":
        H, rec = run_kale_smoothboost(S, learner, cfg.gamma, cfg.epsilon, cfg.T, **common)
    else:
        H, rec = run_quantumboost(S, learner, cfg.gamma, cfg.epsilon, cfg.estimator, cfg.delta, cfg.T,
                                  K=cfg.K, **common)
    summary = rec.summary()
    summary["estimator"] = cfg.estimator if cfg.algo == "quantumboost" else None
    summary["seed"] = cfg.seed
    summary["learner"] = cfg.learner
    if cfg.dense_trace:
        summary["diagnostics"] = run_diagnostics(rec, S, H)
    return rec, summary


def run_diagnostics(rec, S, H):
    """Potential and regret checks against D^1 and against the misclassified set."""
    refs = {"uniform": uniform_reference(rec.m)}
    D_E = misclassified_reference(S, H)
    if D_E is not None and np.count_nonzero(D_E) >= rec.epsilon * rec.m:
        refs["misclassified"] = D_E
    out = {}
    for name, D in refs.items():
        pot = potential_diagnostics(rec, D)
        reg = check_regret_bound(rec, D)
        out[name] = {
            "psi1": pot.psi1,
            "worst_update_slack": pot.worst_update_slack,
            "worst_projection_slack": pot.worst_proj_slack,
            "regret_slack": reg.slack,
        }
    return out


def _totals(ledgers):
    keys = ("oracle_queries", "grover_applications", "modeled_quantum_cost", "samples_drawn")
    return {k: sum(l.get(k, 0) for l in ledgers.values()) for k in keys}


def _run_member(cfg):
    rec, summary = execute(cfg)
    row = {"name": cfg.out, "algo": cfg.algo, "estimator": summary["estimator"] or "",
           "gamma": cfg.gamma, "epsilon": cfg.epsilon, "seed": cfg.seed, "T": rec.T,
           "projections": rec.R, "final_error": rec.final_error}
    row.update(_totals(rec.ledgers))
    return row


# commands ------------------------------------------------------------------

def cmd_run(args):
    cfg = config_from_args(args)
    try:
        rec, summary = execute(cfg)
    except WeakLearnerContractViolation as exc:
        if exc.record is not None:
            _write_outputs(cfg.out, exc.record, {**exc.record.summary(), "aborted": str(exc)})
        print(f"boostlab: weak-learner contract violated: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (BoundViolation, EstimatorFailure, FloorViolation) as exc:
        where = f" at iteration {exc.iteration}" if getattr(exc, "iteration", None) else ""
        print(f"boostlab: {type(exc).__name__}{where}: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    _write_outputs(cfg.out, rec, summary)
    print(json.dumps({k: summary[k] for k in ("algo", "T", "R", "final_error", "max_smoothness")}))
    at_theorem_T = cfg.T is None or cfg.T >= theorem_iterations(cfg.epsilon, cfg.gamma)
    if at_theorem_T and rec.contract_violations == 0 and rec.final_error >= cfg.epsilon:
        print(f"boostlab: final error {rec.final_error} >= epsilon {cfg.epsilon} although the "
              "weak-learner contract held", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def _write_outputs(out, rec, summary):
    os.makedirs(out, exist_ok=True)
    atomic_write_text(os.path.join(out, "run.jsonl"), rec.jsonl())
    atomic_write_json(os.path.join(out, "summary.json"), summary)


def cmd_verify(args):
    seed = args.seed if args.seed is not None else int(os.environ.get("BOOSTLAB_SEED", 0))
    results = run_suite(args.suite, args.trials, seed)
    for r in results:
        print(r.line())
    failed = sum(not r.ok for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_VIOLATION


def _parse_list(text, field):
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ConfigError("empty list", field=field)
    return items


def _with(cfg, **changes):
    """Copy of ``cfg`` with ``changes`` validated like any other config value."""
    values = {k: getattr(cfg, k) for k in FIELDS}
    values.update(changes)
    return build_config(None, values)


def compare_members(args):
    if args.member:
        members = [config_from_args(args, path) for path in args.member]
    else:
        base = config_from_args(args)
        algos = _parse_list(args.algos, "algos") if args.algos else [base.algo]
        modes = _parse_list(args.estimators, "estimators") if args.estimators else [base.estimator]
        members = []
        for algo in algos:
            for mode in (modes if algo == "quantumboost" else modes[:1]):
                members.append(_with(base, algo=algo, estimator=mode))
    for i, cfg in enumerate(members):
        name = f"{cfg.algo}-{cfg.estimator}" if cfg.algo == "quantumboost" else cfg.algo
        members[i] = dataclasses.replace(cfg, out=name)
    if len(members) < 2 and not args.sweep:
        raise ConfigError("compare needs at least two configurations (or a sweep)", field="member")
    key = members[0].comparable_key()
    for cfg in members[1:]:
        diff = sorted(k for k, v in cfg.comparable_key().items() if key[k] != v)
        if diff:
            raise ConfigError(f"configurations differ beyond algo/estimator in {', '.join(diff)}",
                              field=diff[0])
    return members


def fit_slope(xs, ys):
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def cmd_compare(args):
    members = compare_members(args)
    jobs = []
    sweep_name, sweep_values = None, [None]
    if args.sweep:
        sweep_name, _, vals = args.sweep.partition("=")
        sweep_name = sweep_name.strip()
        if sweep_name not in ("epsilon", "gamma"):
            raise ConfigError("sweep over epsilon or gamma", field="sweep")
        try:
            sweep_values = [float(v) for v in _parse_list(vals, "sweep")]
        except ValueError:
            raise ConfigError(f"bad sweep values {vals!r}", field="sweep") from None
    for cfg in members:
        for v in sweep_values:
            jobs.append(cfg if v is None else _with(cfg, **{sweep_name: v}))
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_run_member, jobs))
    else:
        rows = [_run_member(cfg) for cfg in jobs]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COMPARE_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    atomic_write_text(args.out, buf.getvalue())
    sys.stdout.write(buf.getvalue())
    if sweep_name and len(sweep_values) > 1:
        fits = {}
        for cfg in members:
            mine = [r for r in rows if r["name"] == cfg.out]
            xs = [r[sweep_name] for r in mine]
            fits[cfg.out] = {
                "modeled_cost_per_iteration": fit_slope(xs, [r["modeled_quantum_cost"] / r["T"] for r in mine]),
                "modeled_cost_total": fit_slope(xs, [r["modeled_quantum_cost"] for r in mine]),
                "projections": fit_slope(xs, [r["projections"] for r in mine]),
            } if all(r["modeled_quantum_cost"] > 0 for r in mine) else {
                "projections": fit_slope(xs, [r["projections"] for r in mine])}
        stem, _ = os.path.splitext(args.out)
        atomic_write_json(stem + ".fit.json", {"sweep": sweep_name, "values": sweep_values, "slopes": fits})
        for name, f in fits.items():
            print(f"# {name}: " + ", ".join(f"{k} slope {v:.3f}" for k, v in f.items()))
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            if args.command == "run":
                return cmd_run(args)
            if args.command == "verify":
                return cmd_verify(args)
            return cmd_compare(args)
    except ConfigError as exc:
        print(f"boostlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
