"""Command-line entry point ``lab``.

Exit codes: 0 success / all criteria pass, 1 a criterion failed,
2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .charlier import charlier_coefficients
from .correlations import NonSummableError, correlation_sequence, tail_sum
from .fieldsim import Job, run_batch
from .kernels import StepLaw, kernel_row
from .stats import distance_estimate
from .variance import growth, report_D, report_W, report_Y

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _write_csv(stream, header, rows):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _emit(args, header, rows, summary: dict | None = None):
    """CSV to --out (or stdout); JSON summary to --json (or stderr when CSV is on stdout)."""
    if args.out:
        with open(args.out, "w", newline="") as fh:
            _write_csv(fh, header, rows)
    else:
        _write_csv(sys.stdout, header, rows)
    if summary is not None:
        text = ex.dump_json(summary)
        if getattr(args, "json", None):
            Path(args.json).write_text(text)
        elif args.out:
            sys.stdout.write(text)
        else:
            sys.stderr.write(text)


def cmd_run(args) -> int:
    cfg = ex.load_config(args.config)
    bundle = ex.run_experiment(cfg, threads=args.threads)
    out = ex.resolve_output_dir(cfg, args.output_dir)
    bundle.write(out)
    for c in bundle.summary["criteria"]:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']}")
    if not bundle.complete:
        print(f"INCOMPLETE  {bundle.summary.get('error')}", file=sys.stderr)
    print(f"outputs written to {out}")
    return EXIT_OK if bundle.passed else EXIT_FAIL


def cmd_validate(args) -> int:
    cfg = ex.load_config(args.config)
    print(f"ok: {cfg.kind} with {len(cfg.N_grid)} grid points")
    return EXIT_OK


def cmd_kernels(args) -> int:
    law = StepLaw(args.p) if args.p is not None else None
    rows = []
    for n in args.n:
        row = kernel_row(n, law)
        rows += [[n, x, p] for x, p in zip(row.sites, row.probs)]
    _emit(args, ["n", "x", "prob"], rows)
    return EXIT_OK


def cmd_charlier(args) -> int:
    coeffs = charlier_coefficients(args.phi, args.lam)
    print(json.dumps(coeffs.to_json(), indent=2))
    return EXIT_OK


def cmd_correlations(args) -> int:
    law = StepLaw(args.p)
    rows, summary = [], {"p": args.p, "T": args.T, "series": []}
    for q in args.q:
        seq = correlation_sequence(q, law, args.T)
        rows += [[q, t, a] for t, a in enumerate(seq.values, start=1)]
        entry = {"q": q}
        try:
            total, err = tail_sum(q, law, args.eps)
            entry.update(sum=total, error_bound=err, summable=True)
        except NonSummableError as exc:
            entry.update(summable=False, reason=str(exc))
        summary["series"].append(entry)
    _emit(args, ["q", "t", "a_t"], rows, summary)
    return EXIT_OK


def cmd_variance(args) -> int:
    law = StepLaw(args.p)
    rows, reports = [], []
    for N in args.N:
        if args.observable == "W":
            rep = report_W(N, args.sites, args.lam)
        elif args.observable == "D":
            rep = report_D(N, args.sites, args.lam)
        else:
            rep = report_Y(N, args.phi, args.lam, law)
        rows.append([N, rep.exact, rep.leading_constant * growth(rep.regime, N), rep.ratio])
        reports.append(rep.to_json())
    _emit(args, ["N", "exact", "predicted", "ratio"], rows, {"reports": reports})
    return EXIT_OK


def cmd_simulate(args) -> int:
    job = Job(args.observable, args.N, args.lam, args.p, tuple(args.phi), tuple(args.sites), args.q)
    batch = run_batch(job, args.replicates, args.seed, threads=args.threads)
    summary = {"params": batch.params, "master_seed": batch.master_seed, **batch.summary()}
    _emit(args, ["replicate", "value"], [[i, float(v)] for i, v in enumerate(batch.values)], summary)
    return EXIT_OK


def cmd_distance(args) -> int:
    text = Path(args.csv).read_text() if args.csv != "-" else sys.stdin.read()
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or args.column not in reader.fieldnames:
        raise ValueError(f"column {args.column!r} not found in {args.csv}")
    vals = np.array([float(r[args.column]) for r in reader])
    if args.standardize:
        vals = (vals - vals.mean()) / vals.std(ddof=1)
    est = distance_estimate(vals, resamples=args.resamples, seed=args.bootstrap_seed)
    print(json.dumps(est.to_json(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lab", description="Poisson random-walk field: kernels, variances, simulation, experiments")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--output-dir", help="overrides config output_dir and OUTPUT_DIR")
    r.add_argument("--threads", type=int)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="validate an experiment config")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    k = sub.add_parser("kernels", help="transition kernel rows as CSV n,x,prob")
    k.add_argument("--n", type=_ints, required=True, help="comma-separated times")
    k.add_argument("--p", type=float, help="up-probability (default symmetric)")
    k.add_argument("--out")
    k.set_defaults(func=cmd_kernels)

    c = sub.add_parser("charlier", help="Charlier coefficients of a polynomial observable")
    c.add_argument("--phi", required=True, help="monomial coefficients b0,b1,...")
    c.add_argument("--lambda", dest="lam", type=float, default=1.0)
    c.set_defaults(func=cmd_charlier)

    co = sub.add_parser("correlations", help="drift-averaged correlations a_t^(q)")
    co.add_argument("--q", type=_ints, default=[1])
    co.add_argument("--p", type=float, default=0.75)
    co.add_argument("--T", type=int, default=64)
    co.add_argument("--eps", type=float, default=1e-12)
    co.add_argument("--out")
    co.add_argument("--json")
    co.set_defaults(func=cmd_correlations)

    va = sub.add_parser("variance", help="exact variances and leading-order ratios")
    va.add_argument("--observable", choices=["W", "D", "Y"], required=True)
    va.add_argument("--N", type=_ints, required=True)
    va.add_argument("--lambda", dest="lam", type=float, default=1.0)
    va.add_argument("--p", type=float, default=0.75)
    va.add_argument("--phi", default="0,1")
    va.add_argument("--sites", type=_ints, default=[0])
    va.add_argument("--out")
    va.add_argument("--json")
    va.set_defaults(func=cmd_variance)

    s = sub.add_parser("simulate", help="Monte-Carlo draws of an observable")
    s.add_argument("--observable", choices=["W", "D", "Y", "sigma"], required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--lambda", dest="lam", type=float, default=1.0)
    s.add_argument("--p", type=float, default=0.75)
    s.add_argument("--phi", type=_floats, default=[0.0, 1.0])
    s.add_argument("--sites", type=_ints, default=[0])
    s.add_argument("--q", type=int, default=1)
    s.add_argument("--replicates", type=int, default=1000)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--threads", type=int, help="default: THREADS env or all cores")
    s.add_argument("--out")
    s.add_argument("--json")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("distance", help="Gaussian distances of a CSV column of draws")
    d.add_argument("csv", help="path or - for stdin")
    d.add_argument("--column", default="value")
    d.add_argument("--standardize", action="store_true", help="use empirical mean and sd")
    d.add_argument("--resamples", type=int, default=200)
    d.add_argument("--bootstrap-seed", type=int, default=20240611)
    d.set_defaults(func=cmd_distance)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ex.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
