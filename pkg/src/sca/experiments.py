"""Domain-adaptation and domain-generalization pipelines, and the scaling benchmark."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .core import HyperParams, Variant, build_operators, assemble_pencil, fit, labeled_prefix
from .data import Dataset, SynthSpec, gen_synthetic, load_csv, require_unlabeled_targets, shifted_grid_spec
from .errors import ConfigError, DataError, ProtocolError
from .evaluation import CvPlan, accuracy, cross_validate, knn1_predict, make_grid
from .kernels import median_bandwidth
from .scatter import ClassLayout, DomainLayout, kernel_domain_product

CONFIG_FORMAT_VERSION = 1

DEFAULT_BETAS = tuple(round(0.1 * i, 1) for i in range(1, 11))
DEFAULT_DELTAS = (1e-2, 1e-1, 1.0, 1e1, 1e2)


def default_ks(n_s: int) -> tuple:
    """Powers of two from 2 up to ``min(n_s, 128)``."""
    ks, k = [], 2
    while k <= min(n_s, 128):
        ks.append(k)
        k *= 2
    return tuple(ks) or (1,)


@dataclass
class ExperimentConfig:
    """One experiment. Exactly one of ``data`` (CSV path) or ``synth`` (generator spec) is set.

    ``sources``/``target`` default to the roles recorded in the data. For a
    synthetic spec the generator seed is replaced by ``seed``.
    """

    data: str | None = None
    synth: dict | None = None
    sources: list | None = None
    target: str | None = None
    variant: str = "sca"
    seed: int = 0
    folds: int = 5
    grid_k: list | None = None
    grid_beta: list = field(default_factory=lambda: list(DEFAULT_BETAS))
    grid_delta: list = field(default_factory=lambda: list(DEFAULT_DELTAS))
    delta: float = 1.0  # fixed in domain adaptation
    beta: float = 1.0  # fixed in domain generalization
    eps: float | None = None
    bandwidth: str = "median"  # or "median-literal"
    class_rows: str = "all"
    format_version: int = CONFIG_FORMAT_VERSION

    def __post_init__(self):
        if self.format_version != CONFIG_FORMAT_VERSION:
            raise ConfigError(f"unsupported config version {self.format_version}")
        if (self.data is None) == (self.synth is None):
            raise ConfigError("set exactly one of 'data' and 'synth'")
        if self.bandwidth not in ("median", "median-literal"):
            raise ConfigError(f"unknown bandwidth mode {self.bandwidth!r}")
        try:
            Variant(self.variant)
        except ValueError:
            raise ConfigError(f"unknown variant {self.variant!r}") from None

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None

    def to_dict(self):
        return asdict(self)


@dataclass
class ExperimentReport:
    task: str
    protocol: str
    variant: str
    hyper: dict
    accuracy: float
    raw_accuracy: float
    fit_seconds: float
    transform_seconds: float
    seed: int
    version: str
    n_train: int
    n_target: int
    cv_table: list
    label_reads: list

    TIMING_FIELDS = ("fit_seconds", "transform_seconds")

    def to_dict(self):
        return asdict(self)

    def fingerprint(self):
        """Everything except wall-clock timings; identical for identical config and seed."""
        return {k: v for k, v in self.to_dict().items() if k not in self.TIMING_FIELDS}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def summary_line(self):
        h = self.hyper
        return (
            f"{self.task:<16} {self.variant:<5} k={h['k']:<4} beta={h['beta']:<5g} delta={h['delta']:<6g} "
            f"acc={100 * self.accuracy:6.2f}%  raw={100 * self.raw_accuracy:6.2f}%  "
            f"fit={self.fit_seconds:.3f}s  transform={self.transform_seconds:.3f}s"
        )


def load_dataset(config: ExperimentConfig) -> Dataset:
    if config.data is not None:
        return load_csv(config.data)
    spec = SynthSpec.from_dict({**config.synth, "seed": config.seed})
    return gen_synthetic(spec)


def _kernel(config, X):
    return median_bandwidth(X, literal=config.bandwidth == "median-literal")


def _score(model, data, sources, target_X, truth_fn):
    """Project, run 1NN from the projected sources, and only then read the target truth."""
    t0 = time.perf_counter()
    Zs = model.transform(data.X[data.mask(sources)])
    Zt = model.transform(target_X)
    t_transform = time.perf_counter() - t0
    src_y = [y for d, y in zip(data.domains, data.labels) if d in set(sources)]
    pred = knn1_predict(Zs, src_y, Zt)
    raw_pred = knn1_predict(data.X[data.mask(sources)], src_y, target_X)
    truth = truth_fn()
    return accuracy(pred, truth), accuracy(raw_pred, truth), t_transform


def _report(config, protocol, task, best, acc, raw_acc, t_fit, t_tr, n_train, n_target, table, held):
    return ExperimentReport(
        task=task,
        protocol=protocol,
        variant=best.variant.value,
        hyper=best.to_dict(),
        accuracy=acc,
        raw_accuracy=raw_acc,
        fit_seconds=t_fit,
        transform_seconds=t_tr,
        seed=config.seed,
        version=__version__,
        n_train=n_train,
        n_target=n_target,
        cv_table=[{"hyper": r.hyper.to_dict(), "mean_accuracy": r.mean_accuracy} for r in table],
        label_reads=[list(e) for e in held.access_log],
    )


def run_da(config: ExperimentConfig, data: Dataset | None = None) -> ExperimentReport:
    """Domain adaptation: one labeled source, one unlabeled target inside the kernel.

    Median bandwidth on the pooled sample, cross-validation of ``(k, beta)``
    on source labels with ``delta`` fixed, fit on source and target rows,
    1NN from projected source to projected target.
    """
    data = load_dataset(config) if data is None else data
    sources = config.sources or list(data.source_domains)
    target = config.target or (data.target_domains[0] if data.target_domains else None)
    if len(sources) != 1 or target is None:
        raise ConfigError(f"domain adaptation needs one source and one target, got {sources} -> {target}")
    if target in sources:
        raise ConfigError("target domain is also listed as a source")
    d = data.select([sources[0], target], roles={sources[0]: "source", target: "target"})
    require_unlabeled_targets(d)
    if d.held_out is None or target not in d.held_out:
        raise DataError(f"no ground-truth labels for target domain {target!r}")

    kernel = _kernel(config, d.X)
    n_s = labeled_prefix(d.labels)
    grid = make_grid(
        config.grid_k or default_ks(n_s),
        betas=config.grid_beta,
        deltas=(config.delta,),
        kernel=kernel,
        eps=config.eps,
        variant=Variant(config.variant),
    )
    best, table = cross_validate(d, CvPlan(grid=grid, folds=config.folds, seed=config.seed), class_rows=config.class_rows)
    t0 = time.perf_counter()
    model = fit(d, best, class_rows=config.class_rows)
    t_fit = time.perf_counter() - t0
    acc, raw_acc, t_tr = _score(
        model, d, sources, d.rows(target), lambda: d.held_out.reveal(target, "final_scoring")
    )
    return _report(config, "da", f"{sources[0]}->{target}", best, acc, raw_acc, t_fit, t_tr, d.n, len(d.rows(target)), table, d.held_out)


def run_dg(config: ExperimentConfig, data: Dataset | None = None) -> ExperimentReport:
    """Domain generalization: fit on labeled sources only, project an unseen target.

    Cross-validation of ``(k, delta)`` with ``beta`` fixed, on the pooled
    source labels.
    """
    data = load_dataset(config) if data is None else data
    sources = config.sources or list(data.source_domains)
    target = config.target or (data.target_domains[0] if data.target_domains else None)
    if target is None:
        raise ConfigError("domain generalization needs a held-out target domain")
    if target in sources:
        raise ProtocolError(f"target domain {target!r} would enter the training kernel")
    if len(sources) < 2:
        raise ConfigError(f"domain generalization needs at least two source domains, got {sources}")
    full = data.select(list(sources) + [target], roles={**{s: "source" for s in sources}, target: "target"})
    require_unlabeled_targets(full)
    if full.held_out is None or target not in full.held_out:
        raise DataError(f"no ground-truth labels for target domain {target!r}")
    train = full.select(list(sources))
    target_X = full.rows(target)

    kernel = _kernel(config, train.X)
    grid = make_grid(
        config.grid_k or default_ks(train.n),
        betas=(config.beta,),
        deltas=config.grid_delta,
        kernel=kernel,
        eps=config.eps,
        variant=Variant(config.variant),
    )
    best, table = cross_validate(train, CvPlan(grid=grid, folds=config.folds, seed=config.seed), class_rows=config.class_rows)
    t0 = time.perf_counter()
    model = fit(train, best, class_rows=config.class_rows)
    t_fit = time.perf_counter() - t0
    acc, raw_acc, t_tr = _score(
        model, train, sources, target_X, lambda: full.held_out.reveal(target, "final_scoring")
    )
    task = "+".join(sources) + f"->{target}"
    return _report(config, "dg", task, best, acc, raw_acc, t_fit, t_tr, train.n, len(target_X), table, full.held_out)


# -- scaling -----------------------------------------------------------------


@dataclass
class BenchResult:
    sizes: list
    assembly_seconds: list
    fit_seconds: list
    assembly_slope: float
    fit_slope: float
    partial: bool = False

    def to_dict(self):
        return asdict(self)


MIN_BENCH_N = 12


def _loglog_slope(ns, ts):
    return float(np.polyfit(np.log(ns), np.log(ts), 1)[0])


def run_scaling_bench(sizes, repeats: int = 3, k: int = 10, seed: int = 0) -> BenchResult:
    """Time operator assembly and the full fit on two-domain synthetic data of growing size.

    Assembly covers the Gram matrix, centering, ``L``/``P``/``Q`` and the
    pencil products; the fit adds the eigendecomposition.
    """
    sizes = sorted(int(s) for s in sizes)
    if len(sizes) < 3 or sizes[-1] < 8 * sizes[0]:
        raise ConfigError("need at least three sizes spanning an 8x range")
    if sizes[0] < MIN_BENCH_N:
        raise ConfigError(f"sizes must be at least {MIN_BENCH_N}")
    if repeats < 1:
        raise ConfigError("repeats must be positive")
    hyper = HyperParams(beta=0.5, delta=1.0, k=k)
    done, t_asm, t_fit, partial = [], [], [], False
    for n in sizes:
        per_cluster = n // 6
        spec = shifted_grid_spec(samples_per_cluster=per_cluster, seed=seed)
        data = gen_synthetic(spec)
        # pad with extra target rows so the sample has exactly n rows
        extra = n - data.n
        if extra:
            rng = np.random.default_rng([seed, n])
            X = np.vstack([data.X, data.X[-1] + 0.1 * rng.standard_normal((extra, data.p))])
            data = Dataset(X, data.domains + (data.domains[-1],) * extra, data.labels + (None,) * extra, data.roles)
        try:
            asm, full = [], []
            for _ in range(repeats):
                t0 = time.perf_counter()
                layout = DomainLayout.from_ids(data.domains)
                n_s = labeled_prefix(data.labels)
                classes = ClassLayout(labels=data.labels[:n_s], n=data.n)
                kernel = median_bandwidth(data.X)
                ops, _ = build_operators(data.X, layout, classes, kernel)
                KLK = kernel_domain_product(ops.K, layout)
                assemble_pencil(ops.K, ops.L, ops.P, ops.Q, replace(hyper, kernel=kernel), KLK=KLK)
                asm.append(time.perf_counter() - t0)
                t0 = time.perf_counter()
                fit(data, hyper)
                full.append(time.perf_counter() - t0)
        except MemoryError:
            partial = True
            break
        done.append(n)
        t_asm.append(float(np.mean(asm)))
        t_fit.append(float(np.mean(full)))
    if len(done) < 2:
        return BenchResult(done, t_asm, t_fit, float("nan"), float("nan"), True)
    return BenchResult(done, t_asm, t_fit, _loglog_slope(done, t_asm), _loglog_slope(done, t_fit), partial)

