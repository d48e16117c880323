"""Command-line front end: ``mets {synth,embed,extend,corrupt,eval}``.

Exit codes: 0 success, 1 computation error, 2 usage or I/O error. Values come
from command-line flags first, then the JSON ``--config`` file, then defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from .baselines import StIsomapParams, st_isomap_oose
from .corruption import NOISE_KINDS, NoiseSpec, corrupt_dataset
from .dataio import MatrixFormatError, SyntheticSpec, generate_synthetic, read_matrix, write_matrix
from .evaluation import ExperimentConfig, run_experiment, write_reports
from .extension import TemporalWeighting, TimeSeriesSet, isomap_oose, mets_solve, temporal_laplacian
from .geodesics import extend_distances
from .isomap import fit_isomap

log = logging.getLogger("mets")

EXIT_OK, EXIT_COMPUTE, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "k": 20, "m": 2, "K": 10, "alpha": 0.0, "weighting": "exponential",
    "solver": "sylvester-eigen", "seed": 42, "out": None, "lambda": 0.0,
    "method": "mets", "epsilon": 1, "c_ctn": 1.0, "c_atn": 1.0,
}
SOLVER_NAMES = {"kronecker": "kronecker-direct", "sylvester": "sylvester-eigen"}


class UsageError(Exception):
    pass


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError("cannot read config %s: %s" % (path, exc)) from None
    if not isinstance(raw, dict):
        raise UsageError("config must be a JSON object")
    return raw


def _check_keys(raw):
    known = {f.name for f in dataclasses.fields(ExperimentConfig)} | set(DEFAULTS)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise UsageError("unknown config keys: %s" % ", ".join(unknown))


def _setting(args, raw, key):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return raw.get(key, DEFAULTS.get(key))


def _solver(value):
    return SOLVER_NAMES.get(value, value)


def _output_path(path):
    if not path:
        raise UsageError("--out is required")
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return path


def _timestamps(path, count):
    if path is None:
        return np.arange(count)
    ts = read_matrix(path).ravel()
    if ts.size != count:
        raise UsageError("timestamp file %s has %d values, expected %d" % (path, ts.size, count))
    return ts.astype(np.int64)


def cmd_synth(args, raw):
    out_dir = _setting(args, raw, "out")
    if not out_dir:
        raise UsageError("--out is required")
    ext = "." + args.format
    spec = SyntheticSpec(height=args.height, width=args.width, blob_width=args.blob_width,
                         n=args.n, N=args.N, seed=int(_setting(args, raw, "seed")))
    data = generate_synthetic(spec)
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, name + ext)
             for name in ("train", "test", "ground_truth")}
    write_matrix(paths["train"], data.training)
    write_matrix(paths["test"], data.test.points)
    write_matrix(paths["ground_truth"], data.test_params)
    for path in paths.values():
        print(path)
    return EXIT_OK


def cmd_embed(args, raw):
    out = _output_path(_setting(args, raw, "out"))
    training = read_matrix(args.train)
    _, _, emb = fit_isomap(training, int(_setting(args, raw, "k")), int(_setting(args, raw, "m")))
    write_matrix(out, emb.l_matrix)
    return EXIT_OK


def cmd_extend(args, raw):
    out = _output_path(_setting(args, raw, "out"))
    training = read_matrix(args.train)
    test = read_matrix(args.test)
    k = int(_setting(args, raw, "k"))
    m = int(_setting(args, raw, "m"))
    method = _setting(args, raw, "method")

    if method == "st-isomap":
        p = StIsomapParams(float(_setting(args, raw, "c_atn")), float(_setting(args, raw, "c_ctn")),
                           int(_setting(args, raw, "epsilon")), k)
        train_ts = _timestamps(args.train_timestamps, training.shape[0])
        _, x = st_isomap_oose(training, train_ts, test, p, m)
        write_matrix(out, x)
        return EXIT_OK

    graph, field, emb = fit_isomap(training, k, m)
    delta_x = extend_distances(training, graph, field, test, k).delta_x
    if method == "isomap":
        x = isomap_oose(emb, field.delta_n, delta_x)
    else:
        series = TimeSeriesSet(test, _timestamps(args.test_timestamps, test.shape[0]))
        w = TemporalWeighting(_setting(args, raw, "weighting"),
                              float(_setting(args, raw, "alpha")), int(_setting(args, raw, "K")))
        a = temporal_laplacian(series.N, series.timestamps, w)
        x = mets_solve(emb, field.delta_n, delta_x, a, float(_setting(args, raw, "lambda")),
                       _solver(_setting(args, raw, "solver"))).x_matrix
    write_matrix(out, x)
    return EXIT_OK


def cmd_corrupt(args, raw):
    out = _output_path(_setting(args, raw, "out"))
    points = read_matrix(args.input)
    spec = NoiseSpec(args.kind, args.level, int(_setting(args, raw, "seed")))
    write_matrix(out, corrupt_dataset(points, (args.height, args.width), spec))
    return EXIT_OK


def cmd_eval(args, raw):
    cfg_raw = dict(raw)
    overrides = {"seed": args.seed, "out": args.out, "k": args.k, "m": args.m, "K": args.K,
                 "alpha": args.alpha, "solver": _solver(args.solver) if args.solver else None}
    for key, value in overrides.items():
        if value is not None:
            cfg_raw[key] = value
    if args.method:
        cfg_raw["methods"] = args.method
    if args.lam is not None:
        cfg_raw["lambda_grid"] = [args.lam]
    if "solver" in cfg_raw:
        cfg_raw["solver"] = _solver(cfg_raw["solver"])
    try:
        cfg = ExperimentConfig.from_dict(cfg_raw)
    except (TypeError, ValueError) as exc:
        raise UsageError("invalid config: %s" % exc) from None
    reports = run_experiment(cfg)
    try:
        paths = write_reports(reports, cfg.out)
    except OSError as exc:
        raise UsageError("cannot write reports: %s" % exc) from None
    for path in paths:
        print(path)
    failed = [r for r in reports if r.error]
    for r in failed:
        print("failed: %s %s=%g: %s" % (r.method, r.noise_kind, r.noise_level, r.error),
              file=sys.stderr)
    return EXIT_COMPUTE if failed else EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default values")
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--k", type=int, help="spatial neighbors (default 20)")
    common.add_argument("--m", type=int, help="embedding dimension (default 2)")
    common.add_argument("-v", "--verbose", action="store_true")

    temporal = argparse.ArgumentParser(add_help=False)
    temporal.add_argument("--K", type=int, help="temporal window (default 10)")
    temporal.add_argument("--alpha", type=float, help="temporal decay (default 0)")
    temporal.add_argument("--solver", choices=sorted(SOLVER_NAMES))

    parser = argparse.ArgumentParser(prog="mets", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic image manifold")
    p.add_argument("--n", type=int, default=900)
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--height", type=int, default=24)
    p.add_argument("--width", type=int, default=24)
    p.add_argument("--blob-width", type=float, default=2.5)
    p.add_argument("--format", choices=("bin", "csv"), default="bin")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("embed", parents=[common], help="Isomap embedding of training points")
    p.add_argument("--train", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extend", parents=[common, temporal], help="embed out-of-sample points")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--method", choices=("isomap", "mets", "st-isomap"))
    p.add_argument("--lambda", dest="lambda", type=float)
    p.add_argument("--weighting", choices=("exponential", "gaussian"))
    p.add_argument("--test-timestamps")
    p.add_argument("--train-timestamps")
    p.add_argument("--epsilon", type=int)
    p.add_argument("--c-ctn", dest="c_ctn", type=float)
    p.add_argument("--c-atn", dest="c_atn", type=float)
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("corrupt", parents=[common], help="add noise to flattened images")
    p.add_argument("--input", required=True)
    p.add_argument("--kind", choices=NOISE_KINDS, required=True)
    p.add_argument("--level", type=float, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("eval", parents=[common, temporal], help="run the comparison protocol")
    p.add_argument("--method", action="append", help="restrict to a method (repeatable)")
    p.add_argument("--lambda", dest="lam", type=float, help="fix METS lambda")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = _load_config(args.config)
        if args.command != "eval":
            _check_keys(raw)
        return args.func(args, raw)
    except UsageError as exc:
        print("mets: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except (OSError, MatrixFormatError) as exc:
        print("mets: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, np.linalg.LinAlgError) as exc:
        print("mets: %s" % exc, file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
