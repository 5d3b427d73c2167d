"""Command-line front end.

Pipelines compose through JSONL files (``-`` is stdin/stdout)::

    knar generate --n 16 --capacity 16 --num 64 --seed 1 --out inst.jsonl
    knar solve --in inst.jsonl --out solved.jsonl --brute-force-verify
    knar traj --phase reconstruct --in solved.jsonl --out recon.jsonl
    knar softrecon --in solved.jsonl --use-true-decisions --out soft.jsonl
    knar eval --truth solved.jsonl --predictions soft.jsonl

Exit codes: 0 success, 1 validation/schema/usage error, 2 a verification
subcommand exceeded its tolerance.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from knar import dataset, instance, metrics, oracle, processor, softrecon, trajectory
from knar.errors import KnarError

EXIT_OK, EXIT_INVALID, EXIT_TOLERANCE = 0, 1, 2
BRUTE_FORCE_VERIFY_MAX_N = 12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _default_seed():
    raw = os.environ.get("KNAR_SEED")
    if raw is None:
        return 0
    try:
        return int(raw, 0)
    except ValueError:
        raise UsageError(f"KNAR_SEED must be an integer, got {raw!r}") from None


def _seed(args):
    return args.seed if args.seed is not None else _default_seed()


def _map(fn, items, jobs):
    """Order-preserving map, fanned out over a process pool when ``jobs > 1``."""
    items = list(items)
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def _diag(obj):
    print(json.dumps(obj), file=sys.stderr)


def _write_json(obj, destination):
    text = json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"
    if destination in (None, "-"):
        sys.stdout.write(text)
        return
    dirname = os.path.dirname(os.path.abspath(destination))
    fd, tmp = tempfile.mkstemp(dir=dirname, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, destination)


# -- subcommands -------------------------------------------------------------

def cmd_generate(args):
    seed = _seed(args)
    grid = instance.EVAL_GRID if args.grid else [(args.n, args.capacity)]
    if not args.grid and (args.n is None or args.capacity is None):
        raise UsageError("generate needs --n and --capacity (or --grid)")
    records = []
    for n, cap in grid:
        cfg = instance.SamplerConfig(
            n=n, capacity=cap, w_max=args.w_max, value_low=args.value_low,
            value_high=args.value_high, value_scale=args.value_scale,
            num_samples=args.num, seed=seed,
        )
        records.extend(instance.sample_instances(cfg))
    dataset.write_dataset(records, args.out)
    return EXIT_OK


def _verify(inst):
    if inst.n > BRUTE_FORCE_VERIFY_MAX_N:
        return None
    got = oracle.backtrack(inst, oracle.build_dp(inst)).total_value
    ref = oracle.brute_force(inst).total_value
    return abs(got - ref) <= 1e-9


def cmd_solve(args):
    insts = dataset.read_dataset(args.input, kind="instance")
    solved = _map(oracle.solve, insts, args.jobs)
    status = EXIT_OK
    if args.brute_force_verify:
        results = _map(_verify, insts, args.jobs)
        checked = [r for r in results if r is not None]
        ok = sum(checked)
        _diag({"verified": ok, "checked": len(checked),
               "skipped": len(results) - len(checked),
               "summary": f"{ok}/{len(checked)} verified"})
        if ok != len(checked):
            status = EXIT_TOLERANCE
    dataset.write_dataset(solved, args.out)
    return status


def _construct(s):
    return trajectory.construction_trajectory(s.instance, s.tables)


def _reconstruct(s):
    return trajectory.reconstruction_trajectory(s.instance, s.tables.decision_table)


def cmd_traj(args):
    solved = dataset.read_dataset(args.input, kind="solved")
    fn = _construct if args.phase == "construct" else _reconstruct
    dataset.write_dataset(_map(fn, solved, args.jobs), args.out)
    return EXIT_OK


def cmd_softrecon(args):
    solved = dataset.read_dataset(args.input, kind="solved")
    if args.use_true_decisions:
        tables = {s.id: s.tables.decision_table for s in solved}
    else:
        if not args.predictions:
            raise UsageError("softrecon needs --predictions or --use-true-decisions")
        tables = {}
        for p in dataset.read_dataset(args.predictions, kind="prediction"):
            if p.decision_probs is None:
                raise KnarError(f"prediction {p.id!r} carries no decision_probs")
            tables[p.id] = p.decision_probs
    out = []
    worst = 0.0
    for s in solved:
        if s.id not in tables:
            continue
        res = softrecon.soft_reconstruct(s.instance, np.asarray(tables[s.id], dtype=np.float64))
        err = res.row_mass_error()
        worst = max(worst, err)
        out.append(dataset.SoftReconRecord(s.id, tuple(float(x) for x in res.soft_selected), err))
    dataset.write_dataset(out, args.out)
    _diag({"records": len(out), "max_row_mass_error": worst})
    return EXIT_OK if worst <= args.tol else EXIT_TOLERANCE


def cmd_gradcheck(args):
    report = softrecon.random_gradcheck(
        args.trials, n_max=args.n, c_max=args.capacity, w_max=args.w_max,
        p_low=args.p_low, p_high=args.p_high, h=args.h, seed=_seed(args),
    )
    print(json.dumps(report.to_record()))
    return EXIT_OK if report.max_rel_err < args.tol else EXIT_TOLERANCE


def cmd_homocheck(args):
    cfg = processor.ProcessorConfig(
        hidden_dim=args.hidden_dim, use_bias=args.bias, use_layer_norm=args.layer_norm,
        use_gating=args.gating, aggregation=args.aggregation,
    )
    seed = _seed(args)
    params = processor.init_params(cfg, {"node": 1, "edge": 1, "graph": 1}, seed)
    dev = processor.homogeneity_check(params, cfg, args.trials, tuple(args.alphas), seed)
    if cfg.homogeneous:
        passed = dev < args.tol
    else:
        passed = dev > args.control_threshold
    print(json.dumps({
        "config": {"hidden_dim": cfg.hidden_dim, "use_bias": cfg.use_bias,
                   "use_layer_norm": cfg.use_layer_norm, "use_gating": cfg.use_gating,
                   "aggregation": cfg.aggregation},
        "alphas": list(args.alphas), "trials": args.trials,
        "max_deviation": dev, "expect_homogeneous": cfg.homogeneous, "passed": passed,
    }))
    return EXIT_OK if passed else EXIT_TOLERANCE


def cmd_reduce(args):
    seed = _seed(args)
    if args.numbers:
        if args.problem == "subset-sum":
            if args.target is None:
                raise UsageError("subset-sum needs --target")
            problems = [(list(args.numbers), args.target)]
        else:
            problems = [list(args.numbers)]
    elif args.problem == "subset-sum":
        problems = instance.sample_subset_sum(args.num, args.n_max, args.max_number, seed)
    else:
        problems = instance.sample_partition(args.num, args.n_max, args.max_number, seed)
    records, summary = [], []
    for k, prob in enumerate(problems):
        ident = f"{args.problem}_s{seed}_{k:05d}"
        if args.problem == "subset-sum":
            numbers, target = prob
            inst = instance.reduce_subset_sum(numbers, target, ident)
            parity = 1
        else:
            inst, parity = instance.reduce_partition(prob, ident)
        best = oracle.solve(inst).solution.total_value
        summary.append({"id": ident, "target": inst.capacity, "optimal_value": best,
                        "solvable": bool(parity and best == inst.capacity)})
        records.append(inst)
    dataset.write_dataset(records, args.out)
    for line in summary:
        _diag(line)
    return EXIT_OK


def cmd_eval(args):
    truth = dataset.read_dataset(args.truth, kind="solved")
    preds = dataset.read_dataset(args.predictions)
    if preds and not hasattr(preds[0], "item_probs"):
        raise KnarError("predictions must be prediction or softrecon records")
    report = metrics.evaluate(truth, preds, stop_at_first_misfit=args.stop_at_first_misfit)
    _write_json(report.to_record(), args.out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="knar", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_seed(sp):
        sp.add_argument("--seed", type=int, default=None,
                        help="RNG seed (falls back to $KNAR_SEED, then 0)")

    def with_jobs(sp):
        sp.add_argument("--jobs", type=int, default=None,
                        help="worker processes (default: number of processors)")

    g = sub.add_parser("generate", help="sample knapsack instances")
    g.add_argument("--n", type=int)
    g.add_argument("--capacity", type=int)
    g.add_argument("--num", type=int, default=instance.DEFAULT_NUM_SAMPLES)
    g.add_argument("--w-max", type=int, default=instance.DEFAULT_W_MAX)
    g.add_argument("--value-low", type=float, default=0.0)
    g.add_argument("--value-high", type=float, default=1.0)
    g.add_argument("--value-scale", type=float, default=1.0)
    g.add_argument("--grid", action="store_true",
                   help="sample the whole (n, C) evaluation grid instead of one config")
    g.add_argument("--out", default="-")
    with_seed(g)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="build DP tables and optimal selections")
    s.add_argument("--in", dest="input", default="-")
    s.add_argument("--out", default="-")
    s.add_argument("--brute-force-verify", action="store_true",
                   help=f"cross-check optima by enumeration for n <= {BRUTE_FORCE_VERIFY_MAX_N}")
    with_jobs(s)
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("traj", help="emit hint trajectories from solved instances")
    t.add_argument("--phase", choices=("construct", "reconstruct"), required=True)
    t.add_argument("--in", dest="input", default="-")
    t.add_argument("--out", default="-")
    with_jobs(t)
    t.set_defaults(func=cmd_traj)

    r = sub.add_parser("softrecon", help="differentiable reconstruction of item selections")
    r.add_argument("--in", dest="input", default="-", help="solved instances")
    r.add_argument("--predictions", help="prediction records carrying decision_probs")
    r.add_argument("--use-true-decisions", action="store_true")
    r.add_argument("--tol", type=float, default=1e-9, help="row mass conservation tolerance")
    r.add_argument("--out", default="-")
    r.set_defaults(func=cmd_softrecon)

    c = sub.add_parser("gradcheck", help="reverse-mode vs finite-difference gradients")
    c.add_argument("--n", type=int, default=6, help="max items per trial")
    c.add_argument("--capacity", type=int, default=10, help="max capacity per trial")
    c.add_argument("--w-max", type=int, default=instance.DEFAULT_W_MAX)
    c.add_argument("--trials", type=int, default=50)
    c.add_argument("--p-low", type=float, default=0.1)
    c.add_argument("--p-high", type=float, default=0.9)
    c.add_argument("--h", type=float, default=1e-6)
    c.add_argument("--tol", type=float, default=1e-5)
    with_seed(c)
    c.set_defaults(func=cmd_gradcheck)

    h = sub.add_parser("homocheck", help="positive-homogeneity report for the processor")
    h.add_argument("--hidden-dim", type=int, default=128)
    h.add_argument("--trials", type=int, default=100)
    h.add_argument("--alphas", type=float, nargs="+", default=[0.5, 2.0, 10.0, 100.0])
    h.add_argument("--bias", action="store_true")
    h.add_argument("--layer-norm", action="store_true")
    h.add_argument("--gating", action="store_true")
    h.add_argument("--aggregation", choices=("max", "sum"), default="max")
    h.add_argument("--tol", type=float, default=1e-6)
    h.add_argument("--control-threshold", type=float, default=1e-3,
                   help="minimum deviation expected when any switch is on")
    with_seed(h)
    h.set_defaults(func=cmd_homocheck)

    d = sub.add_parser("reduce", help="Subset Sum / Partition as knapsack instances")
    d.add_argument("--problem", choices=("subset-sum", "partition"), required=True)
    d.add_argument("--numbers", type=int, nargs="+")
    d.add_argument("--target", type=int)
    d.add_argument("--num", type=int, default=instance.DEFAULT_NUM_SAMPLES)
    d.add_argument("--n-max", type=int, default=12)
    d.add_argument("--max-number", type=int, default=20)
    d.add_argument("--out", default="-")
    with_seed(d)
    d.set_defaults(func=cmd_reduce)

    e = sub.add_parser("eval", help="micro-F1 / exact-match report")
    e.add_argument("--truth", required=True, help="solved instances")
    e.add_argument("--predictions", required=True, help="prediction or softrecon records")
    e.add_argument("--stop-at-first-misfit", action="store_true")
    e.add_argument("--out", default="-")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _diag({"error": "UsageError", "message": str(exc)})
        return EXIT_INVALID
    except (KnarError, OSError, ValueError) as exc:
        _diag({"error": type(exc).__name__, "message": str(exc)})
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
