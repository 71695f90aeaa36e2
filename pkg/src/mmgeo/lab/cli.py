"""Command line entry point: ``python -m mmgeo <subcommand> ...``.

Exit codes: 0 success, 1 configuration or input error, 2 a verdict
contradicted its expectation.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import os
import sys
from pathlib import Path

import numpy as np

from .. import _accel
from ..core import FiniteMMSpace
from ..errors import ConfigError, MMGeoError
from ..models import ModelSpec, sample
from ..mpf import load_function, validate_mpf
from ..probmetrics import ky_fan, prokhorov, prokhorov_line, WeightedDeviation
from ..pyramids import PyramidApprox, dist_to_pyramid
from ..transform import transform_space
from .config import EXPERIMENTS, ExperimentConfig

EXIT_OK, EXIT_CONFIG, EXIT_VERDICT = 0, 1, 2

SCHEMA_HELP = """\
space JSON:     {"labels": [...], "dist": [[...]], "weights": [...]}
function JSON:  {"breakpoints": [[s, F(s)], ...], "tail": {"kind": "constant" | "linear", "slope": c}}
                or {"builtin": "chordal", "params": {"r": 3.0}}
pyramid JSON:   {"chain": [space, ...], "witnesses": [[...], ...]}
config JSON:    see mmgeo/lab/config.py; "experiment" is one of %s
""" % (", ".join(EXPERIMENTS),)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n\n{SCHEMA_HELP}")
        raise SystemExit(EXIT_CONFIG)


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MMGEO_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise ConfigError(f"MMGEO_SEED must be an integer, got {env!r}") from exc


def _parse_expect(items):
    """``name=true`` pairs, or a JSON file mapping names to booleans."""
    out = {}
    for item in items or ():
        if os.path.isfile(item):
            with open(item) as fh:
                out.update(json.load(fh))
            continue
        name, sep, val = item.partition("=")
        if not sep or val.lower() not in ("true", "false"):
            raise ConfigError(f"--expect wants name=true|false, got {item!r}")
        out[name] = val.lower() == "true"
    return out


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def write_outputs(report, out_dir):
    """report.json (full) and metrics.csv (trajectory rows)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = report.to_dict()
    data["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    _dump(data, out / "report.json")
    with open(out / "metrics.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["experiment", "series", "index", "value", "method"])
        w.writeheader()
        w.writerows(report.rows)
    return out / "report.json"


def _plot(report, out_dir):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series = {}
    for r in report.rows:
        series.setdefault((r["experiment"], r["series"]), []).append((r["index"], r["value"]))
    fig, ax = plt.subplots(figsize=(7, 4))
    for (exp, name), pts in series.items():
        if len(pts) > 1 and all(isinstance(i, (int, float)) and i > 0 for i, _ in pts):
            xs, ys = zip(*pts)
            ax.plot(xs, ys, marker="o", label=f"{exp}:{name}")
    ax.set_xscale("log")
    ax.set_xlabel("index")
    ax.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(Path(out_dir) / "trajectories.png", dpi=120)
    plt.close(fig)


# ------------------------------------------------------------------ subcommands

def cmd_validate_mpf(args):
    F = load_function(Path(args.file).read_text())
    rep = validate_mpf(F, s_max=args.s_max, seed=_seed(args))
    _dump(rep.to_dict(), args.out)
    return EXIT_OK


def cmd_transform(args):
    X = FiniteMMSpace.from_json(args.space)
    F = load_function(Path(args.function).read_text())
    Y = transform_space(X, F)
    _dump(Y.to_dict(), args.out)
    return EXIT_OK


def cmd_dist(args):
    seed = _seed(args)
    if args.metric == "kyfan":
        data = json.loads(Path(args.a).read_text())
        _dump({"metric": "kyfan", "value": ky_fan(WeightedDeviation(data["values"], data["masses"]))}, args.out)
        return EXIT_OK
    A = FiniteMMSpace.from_json(args.a)
    if args.b is None:
        raise ConfigError(f"--metric {args.metric} needs --b")
    if args.metric == "prokhorov":
        B = FiniteMMSpace.from_json(args.b)
        if A.n != B.n or not np.array_equal(A.dist, B.dist):
            raise ConfigError("prokhorov needs two measures on the same distance matrix")
        out = {"metric": "prokhorov", "value": prokhorov(A.dist, A.weights, B.weights)}
    elif args.metric == "box":
        from ..boxdist import box_estimate

        B = FiniteMMSpace.from_json(args.b)
        out = {"metric": "box", **box_estimate(A, B, budget=args.budget, seed=seed, workers=args.threads).to_dict()}
    else:  # distance-distribution lower bound only
        from ..boxdist import box_lower_dd

        B = FiniteMMSpace.from_json(args.b)
        out = {"metric": "dd-lower", "value": box_lower_dd(A, B)}
    _dump(out, args.out)
    return EXIT_OK


def cmd_sample(args):
    spec = ModelSpec(kind=args.kind, n=args.n, radius=args.radius, lam=args.lam, field=args.field,
                     flavor=args.flavor, k=args.k, seed=_seed(args))
    _dump(sample(spec).to_dict(), args.out)
    return EXIT_OK


def cmd_pyramid(args):
    P = PyramidApprox.from_json(args.pyramid)
    Y = FiniteMMSpace.from_json(args.probe)
    br = dist_to_pyramid(Y, P, budget=args.budget, seed=_seed(args), workers=args.threads)
    _dump(br.to_dict(), args.out)
    return EXIT_OK


def _run_and_write(args, report, expect):
    out_dir = args.out or "mmgeo-out"
    path = write_outputs(report, out_dir)
    if args.plot:
        _plot(report, out_dir)
    bad = report.contradictions(expect)
    print(f"wrote {path}")
    for name in sorted(report.verdicts):
        v = report.verdicts[name]
        print(f"  {'ok ' if v['holds'] else 'no '} {name}")
    if bad:
        print("expectation mismatch: " + ", ".join(bad), file=sys.stderr)
        return EXIT_VERDICT
    return EXIT_OK


def cmd_experiment(args):
    from .experiments import run_experiment, run_suite

    seed = _seed(args)
    expect = _parse_expect(args.expect)
    if args.name == "suite":
        report = run_suite(seed, workers=args.threads)
        return _run_and_write(args, report, expect)
    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
    else:
        cfg = ExperimentConfig(args.name, case=args.case)
    if cfg.experiment != args.name:
        raise ConfigError(f"config describes {cfg.experiment!r}, not {args.name!r}")
    if args.seed is None and cfg.seed is not None:
        seed = cfg.seed
    expect = {**cfg.expect, **expect}
    return _run_and_write(args, run_experiment(cfg, seed, workers=args.threads), expect)


def cmd_report(args):
    """Re-check a written report against expectations without recomputing."""
    data = json.loads(Path(args.report).read_text())
    expect = _parse_expect(args.expect)
    verdicts = data.get("verdicts", {})
    bad = [k for k, want in expect.items() if k not in verdicts or verdicts[k]["holds"] != want]
    for name in sorted(verdicts):
        print(f"{'ok ' if verdicts[name]['holds'] else 'no '} {name}")
    if bad:
        print("expectation mismatch: " + ", ".join(bad), file=sys.stderr)
        return EXIT_VERDICT
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="defaults to $MMGEO_SEED, then 0")
    common.add_argument("--out", default=None, help="output file (or directory for experiments)")
    common.add_argument("--threads", type=int, default=1)

    p = _Parser(prog="mmgeo", description="metric measure space toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate-mpf", parents=[common], help="check a metric preserving function")
    s.add_argument("--file", required=True)
    s.add_argument("--s-max", type=float, default=None)
    s.set_defaults(func=cmd_validate_mpf)

    s = sub.add_parser("transform", parents=[common], help="apply a function to a space")
    s.add_argument("--space", required=True)
    s.add_argument("--function", required=True)
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("dist", parents=[common], help="distances between spaces or measures")
    s.add_argument("--metric", choices=("prokhorov", "box", "kyfan", "dd-lower"), required=True)
    s.add_argument("--a", required=True, help="space JSON (deviation table for kyfan)")
    s.add_argument("--b", help="second space; not used by kyfan")
    s.add_argument("--budget", type=int, default=2000)
    s.set_defaults(func=cmd_dist)

    s = sub.add_parser("sample", parents=[common], help="sample a model space")
    s.add_argument("--kind", required=True, choices=("sphere", "projective", "gaussian", "gaussian_quotient",
                                                     "two_point"))
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--radius", type=float)
    s.add_argument("--lam", type=float)
    s.add_argument("--field", choices=("R", "C", "H"))
    s.add_argument("--flavor", default="geodesic", choices=("geodesic", "euclidean"))
    s.add_argument("--k", type=int, default=100)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("pyramid", parents=[common], help="distance from a probe to a chain")
    s.add_argument("--pyramid", required=True)
    s.add_argument("--probe", required=True)
    s.add_argument("--budget", type=int, default=500)
    s.set_defaults(func=cmd_pyramid)

    s = sub.add_parser("experiment", parents=[common], help="run an experiment and write report.json")
    s.add_argument("name", choices=EXPERIMENTS)
    s.add_argument("--config")
    s.add_argument("--case", help="counterexample case when no config is given")
    s.add_argument("--expect", action="append", help="name=true|false, or a JSON file; repeatable")
    s.add_argument("--plot", action="store_true", help="also write trajectories.png")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("report", parents=[common], help="check a report.json against expectations")
    s.add_argument("report")
    s.add_argument("--expect", action="append")
    s.set_defaults(func=cmd_report)
    return p


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _accel.set_threads(args.threads)
    try:
        return args.func(args)
    except (ConfigError, MMGeoError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}\n\n{SCHEMA_HELP}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(cli_main())
