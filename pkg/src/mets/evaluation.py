"""Alignment, error metric, parameter tuning and the experiment runner.

For each method and noise level, six corrupted copies of the test sequence
are drawn. The first one tunes the method's free parameters by grid search;
the other five are scored with the tuned values. Every score is the mean
per-point distance after similarity alignment to a clean reference.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .baselines import (MBMS_SIGMA_GRID, ST_CTN_GRID, ST_EPSILON_GRID, MbmsParams,
                        StIsomapParams, mbms_denoise, st_isomap_graph)
from .corruption import (DEFAULT_NOISE_GRIDS, N_INSTANCES, NOISE_KINDS, NoiseSpec,
                         corrupt_dataset, instance_seeds)
from .dataio import SyntheticSpec, generate_synthetic, read_matrix
from .extension import (TemporalWeighting, TimeSeriesSet, isomap_oose, mets_solve,
                        temporal_laplacian)
from .geodesics import extend_distances, shortest_path_distances
from .isomap import fit_isomap, isomap_embed

__all__ = [
    "AlignmentTransform",
    "DegenerateAlignmentError",
    "procrustes_align",
    "oose_error",
    "aligned_error",
    "tune_parameter",
    "standard_error",
    "ExperimentConfig",
    "ExperimentReport",
    "Experiment",
    "run_experiment",
    "reports_to_csv",
    "reports_to_jsonl",
    "write_reports",
    "METHODS",
    "DEFAULT_LAMBDA_GRID",
]

log = logging.getLogger(__name__)

METHODS = ("isomap", "mets", "st-isomap", "mbms")
DEFAULT_LAMBDA_GRID = (0.0,) + tuple(float(v) for v in np.logspace(-1, 6, 15))


class DegenerateAlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class AlignmentTransform:
    rotation: np.ndarray
    scale: float
    translation: np.ndarray

    def apply(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return self.scale * self.rotation @ w + self.translation[:, None]


def procrustes_align(reference, target):
    """Similarity transform of ``target`` that best matches ``reference``.

    Both arrays are ``(m, N)`` with points in columns. The rotation ranges over
    the full orthogonal group, so reflections are allowed.

    Returns
    -------
    transform : AlignmentTransform
    aligned : (m, N) array
    """
    z = np.asarray(reference, dtype=float)
    w = np.asarray(target, dtype=float)
    if z.shape != w.shape or z.ndim != 2:
        raise ValueError("reference and target must share a 2-D shape (%s vs %s)"
                         % (z.shape, w.shape))
    if w.shape[1] < w.shape[0]:
        raise ValueError("need at least as many points as dimensions")
    z_mean = z.mean(axis=1)
    w_mean = w.mean(axis=1)
    zc = z - z_mean[:, None]
    wc = w - w_mean[:, None]
    w_norm2 = float(np.sum(wc**2))
    if w_norm2 <= np.finfo(float).eps * max(1.0, float(np.sum(w**2))):
        raise DegenerateAlignmentError("target points are all identical")
    u, s, vt = np.linalg.svd(zc @ wc.T)
    rotation = u @ vt
    scale = float(s.sum() / w_norm2)
    if scale <= 0.0:
        raise DegenerateAlignmentError("reference points are all identical")
    translation = z_mean - scale * rotation @ w_mean
    transform = AlignmentTransform(rotation, scale, translation)
    return transform, transform.apply(w)


def oose_error(z, w_aligned) -> float:
    """Mean Euclidean distance between matching columns."""
    z = np.asarray(z, dtype=float)
    w = np.asarray(w_aligned, dtype=float)
    if z.shape != w.shape:
        raise ValueError("shape mismatch %s vs %s" % (z.shape, w.shape))
    return float(np.linalg.norm(z - w, axis=0).mean())


def aligned_error(reference, embedding) -> float:
    return oose_error(reference, procrustes_align(reference, embedding)[1])


def _param_key(value):
    if isinstance(value, dict):
        return tuple(sorted(value.items()))
    return value


def tune_parameter(method: Callable, grid, tuning_instance, reference):
    """Grid search on a single corrupted instance.

    ``method(tuning_instance, value)`` returns an ``(m, N)`` embedding. It is
    aligned to ``reference`` (an array, or a callable of the grid value) and
    scored with :func:`oose_error`. Ties go to the smallest grid value.

    Returns
    -------
    best : grid value
    errors : list of float, one per grid value
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty parameter grid")
    errors = []
    for value in grid:
        ref = reference(value) if callable(reference) else reference
        errors.append(aligned_error(ref, method(tuning_instance, value)))
    best_err = min(errors)
    tied = [v for v, e in zip(grid, errors) if e == best_err]
    return min(tied, key=_param_key), errors


def standard_error(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.std(values, ddof=1) / math.sqrt(values.size))


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one comparison sweep.

    ``dataset`` is either ``{"synthetic": {...}}`` with :class:`SyntheticSpec`
    fields, or ``{"train": path, "test": path, "image_shape": [h, w]}`` with
    optional ``train_timestamps`` / ``test_timestamps`` matrix paths.
    """

    dataset: dict = field(default_factory=lambda: {"synthetic": {}})
    methods: list = field(default_factory=lambda: list(METHODS))
    noise: dict = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_NOISE_GRIDS.items()})
    lambda_grid: list = field(default_factory=lambda: list(DEFAULT_LAMBDA_GRID))
    epsilon_grid: list = field(default_factory=lambda: list(ST_EPSILON_GRID))
    c_ctn_grid: list = field(default_factory=lambda: list(ST_CTN_GRID))
    c_atn: float = 1.0
    sigma_grid: list = field(default_factory=lambda: list(MBMS_SIGMA_GRID))
    mbms_local_dims: list = field(default_factory=lambda: [1, 2])
    mbms_iterations: int = 3
    mbms_k: int | None = None
    k: int = 20
    m: int = 2
    K: int = 10
    alpha: float = 0.0
    weighting: str = "exponential"
    solver: str = "sylvester-eigen"
    seed: int = 42
    out: str = "results"

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ValueError("unknown config keys: %s" % ", ".join(unknown))
        return cls(**raw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self):
        bad = sorted(set(self.methods) - set(METHODS))
        if bad:
            raise ValueError("unknown methods %s; choose from %s" % (bad, METHODS))
        if not self.methods:
            raise ValueError("methods must be nonempty")
        for kind, levels in self.noise.items():
            if kind not in NOISE_KINDS:
                raise ValueError("unknown noise kind %r" % (kind,))
            if not levels:
                raise ValueError("noise grid for %s is empty" % kind)
        grids = {"lambda_grid": self.lambda_grid, "epsilon_grid": self.epsilon_grid,
                 "c_ctn_grid": self.c_ctn_grid, "sigma_grid": self.sigma_grid,
                 "mbms_local_dims": self.mbms_local_dims}
        for name, grid in grids.items():
            if not grid:
                raise ValueError("%s must be nonempty" % name)
        if self.m < 1 or self.k < 1 or self.K < 1:
            raise ValueError("k, m and K must be positive")
        if self.solver not in ("sylvester-eigen", "kronecker-direct"):
            raise ValueError("unknown solver %r" % (self.solver,))
        ds = self.dataset
        if "synthetic" in ds:
            extra = set(ds) - {"synthetic"}
            if extra:
                raise ValueError("unknown dataset keys: %s" % ", ".join(sorted(extra)))
            SyntheticSpec(**ds["synthetic"])
        else:
            allowed = {"train", "test", "image_shape", "train_timestamps", "test_timestamps"}
            extra = set(ds) - allowed
            if extra:
                raise ValueError("unknown dataset keys: %s" % ", ".join(sorted(extra)))
            for key in ("train", "test", "image_shape"):
                if key not in ds:
                    raise ValueError("dataset needs %r (or a 'synthetic' section)" % key)


@dataclass
class ExperimentReport:
    method: str
    noise_kind: str
    noise_level: float
    mean_error: float
    sem: float
    per_instance_errors: list
    tuned_params: dict
    tuning_error: float | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key in ("mean_error", "sem", "tuning_error"):
            if isinstance(out[key], float) and not math.isfinite(out[key]):
                out[key] = None
        return out


def _load_dataset(cfg: ExperimentConfig):
    ds = cfg.dataset
    if "synthetic" in ds:
        spec = SyntheticSpec(**ds["synthetic"])
        data = generate_synthetic(spec)
        return data.training, data.training_timestamps, data.test, (spec.height, spec.width)
    training = read_matrix(ds["train"])
    test_points = read_matrix(ds["test"])
    if "train_timestamps" in ds:
        train_ts = read_matrix(ds["train_timestamps"]).ravel().astype(np.int64)
    else:
        train_ts = np.arange(training.shape[0])
    if "test_timestamps" in ds:
        test_ts = read_matrix(ds["test_timestamps"]).ravel().astype(np.int64)
    else:
        test_ts = np.arange(test_points.shape[0])
    return training, train_ts, TimeSeriesSet(test_points, test_ts), tuple(ds["image_shape"])


class Experiment:
    """Shared state for one sweep: clean training fit, reference and caches."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.training, self.train_ts, self.test, self.image_shape = _load_dataset(cfg)
        self.graph, self.field, self.emb = fit_isomap(self.training, cfg.k, cfg.m)
        self.reference = self.extend_isomap(self.test.points)
        w = TemporalWeighting(cfg.weighting, cfg.alpha, cfg.K)
        self.laplacian = temporal_laplacian(self.test.N, self.test.timestamps, w)
        self._st_cache = {}

    def delta_x(self, points):
        return extend_distances(self.training, self.graph, self.field, points, self.cfg.k).delta_x

    def extend_isomap(self, points):
        return isomap_oose(self.emb, self.field.delta_n, self.delta_x(points))

    def noisy_instances(self, kind, level, kind_index, level_index):
        seeds = instance_seeds(self.cfg.seed, N_INSTANCES, kind_index, level_index)
        spec = NoiseSpec(kind, level)
        return [corrupt_dataset(self.test.points, self.image_shape, spec, s) for s in seeds]

    # Each method: (grid, run(instance_points, value) -> embedding, reference)

    def isomap_method(self):
        return [None], (lambda y, _: self.extend_isomap(y)), self.reference

    def mets_method(self):
        cache = {}

        def run(y, lam):
            # keyed by identity; the stored array keeps the id valid
            if id(y) not in cache:
                cache[id(y)] = (y, self.delta_x(y))
            dx = cache[id(y)][1]
            return mets_solve(self.emb, self.field.delta_n, dx, self.laplacian,
                              lam, self.cfg.solver).x_matrix

        return [float(v) for v in self.cfg.lambda_grid], run, self.reference

    def _st_model(self, params):
        key = (params["epsilon"], params["c_ctn"])
        if key not in self._st_cache:
            p = StIsomapParams(self.cfg.c_atn, params["c_ctn"], params["epsilon"], self.cfg.k)
            graph = st_isomap_graph(self.training, self.train_ts, p)
            fld = shortest_path_distances(graph)
            emb = isomap_embed(fld.delta_n, self.cfg.m)
            model = (graph, fld, emb)
            clean = self._st_extend(model, self.test.points)
            # the method's own clean extension, brought into the Isomap frame
            ref = procrustes_align(self.reference, clean)[1]
            self._st_cache[key] = (model, ref)
        return self._st_cache[key]

    def _st_extend(self, model, points):
        graph, fld, emb = model
        dx = extend_distances(self.training, graph, fld, points, self.cfg.k).delta_x
        return isomap_oose(emb, fld.delta_n, dx)

    def st_isomap_method(self):
        grid = [{"epsilon": int(e), "c_ctn": float(c)}
                for e in self.cfg.epsilon_grid for c in self.cfg.c_ctn_grid]
        run = lambda y, p: self._st_extend(self._st_model(p)[0], y)  # noqa: E731
        ref = lambda p: self._st_model(p)[1]  # noqa: E731
        return grid, run, ref

    def mbms_method(self):
        grid = [{"sigma": float(s), "local_dim": int(d)}
                for s in self.cfg.sigma_grid for d in self.cfg.mbms_local_dims]
        n = self.training.shape[0]
        k = self.cfg.mbms_k or self.cfg.k

        def run(y, p):
            params = MbmsParams(p["sigma"], p["local_dim"], k, self.cfg.mbms_iterations)
            denoised = mbms_denoise(np.vstack([self.training, y]), params)
            train_d, test_d = denoised[:n], denoised[n:]
            graph, fld, emb = fit_isomap(train_d, self.cfg.k, self.cfg.m)
            dx = extend_distances(train_d, graph, fld, test_d, self.cfg.k).delta_x
            return isomap_oose(emb, fld.delta_n, dx)

        return grid, run, self.reference

    def method(self, name):
        return {"isomap": self.isomap_method, "mets": self.mets_method,
                "st-isomap": self.st_isomap_method, "mbms": self.mbms_method}[name]()

    def evaluate_cell(self, name, kind, level, instances) -> ExperimentReport:
        grid, run, reference = self.method(name)
        best, errors = tune_parameter(run, grid, instances[0], reference)
        ref = reference(best) if callable(reference) else reference
        per_instance = [aligned_error(ref, run(y, best)) for y in instances[1:]]
        tuned = {} if best is None else (dict(best) if isinstance(best, dict) else {"lambda": best})
        return ExperimentReport(
            method=name, noise_kind=kind, noise_level=float(level),
            mean_error=float(np.mean(per_instance)), sem=standard_error(per_instance),
            per_instance_errors=[float(e) for e in per_instance], tuned_params=tuned,
            tuning_error=float(min(errors)))


def run_experiment(config: ExperimentConfig) -> list[ExperimentReport]:
    """Run every method at every noise level; reports in canonical order.

    A failure inside one cell is recorded in that report's ``error`` field and
    the sweep continues.
    """
    exp = Experiment(config)
    reports = []
    for kind_index, kind in enumerate(NOISE_KINDS):
        if kind not in config.noise:
            continue
        for level_index, level in enumerate(config.noise[kind]):
            instances = exp.noisy_instances(kind, float(level), kind_index, level_index)
            for name in config.methods:
                try:
                    reports.append(exp.evaluate_cell(name, kind, level, instances))
                except Exception as exc:  # one bad cell must not sink the sweep
                    log.exception("cell %s / %s=%g failed", name, kind, level)
                    reports.append(ExperimentReport(
                        name, kind, float(level), float("nan"), float("nan"), [], {},
                        error="%s: %s" % (type(exc).__name__, exc)))
    return reports


CSV_COLUMNS = ("method", "noise_kind", "noise_level", "mean_error", "sem", "tuned_params")


def _fmt(value):
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return ""
    return repr(float(value))


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        writer.writerow([r.method, r.noise_kind, _fmt(r.noise_level), _fmt(r.mean_error),
                         _fmt(r.sem), json.dumps(r.tuned_params, sort_keys=True)])
    return buf.getvalue()


def reports_to_jsonl(reports) -> str:
    return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in reports)


def write_reports(reports, out_dir) -> tuple[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    jsonl_path = os.path.join(out_dir, "reports.jsonl")
    csv_path = os.path.join(out_dir, "reports.csv")
    with open(jsonl_path, "w") as fh:
        fh.write(reports_to_jsonl(reports))
    with open(csv_path, "w", newline="") as fh:
        fh.write(reports_to_csv(reports))
    return jsonl_path, csv_path
