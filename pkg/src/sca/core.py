"""Scatter Component Analysis: pencil assembly, fitting and feature extraction."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .data import Dataset
from .errors import DataError, DegenerateProjectionError, ShapeError
from .kernels import (
    CenteringStats,
    KernelSpec,
    center_cross,
    center_gram,
    centering_stats,
    default_eps,
    gram,
    median_bandwidth,
    solve_gen_eig,
    symmetrize,
)
from .scatter import (
    ClassLayout,
    DomainLayout,
    ScatterOperators,
    between_class,
    domain_coeff,
    kernel_domain_product,
    within_class,
)

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
# Eigenvalues at or below this fraction of the largest are dropped before Lambda^{-1/2}.
EIGEN_FLOOR = 1e-10


class Variant(str, Enum):
    SCA = "sca"
    USCA = "usca"
    KPCA = "kpca"
    KFD = "kfd"

    @property
    def supervised(self):
        return self in (Variant.SCA, Variant.KFD)


@dataclass(frozen=True)
class HyperParams:
    """Trade-offs and sizes for one fit.

    ``kernel=None`` selects the median heuristic on the training sample and
    ``eps=None`` the trace-scaled default regularizer. The degenerate variants
    pin the trade-offs they switch off: USCA sets ``beta=0``, KPCA sets
    ``beta=delta=0``, KFD sets ``beta=1, delta=0``.
    """

    beta: float = 0.5
    delta: float = 1.0
    k: int = 2
    kernel: KernelSpec | None = None
    eps: float | None = None
    variant: Variant = Variant.SCA

    def __post_init__(self):
        variant = Variant(self.variant)
        object.__setattr__(self, "variant", variant)
        if variant is Variant.USCA:
            object.__setattr__(self, "beta", 0.0)
        elif variant is Variant.KPCA:
            object.__setattr__(self, "beta", 0.0)
            object.__setattr__(self, "delta", 0.0)
        elif variant is Variant.KFD:
            object.__setattr__(self, "beta", 1.0)
            object.__setattr__(self, "delta", 0.0)
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "delta", float(self.delta))
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.delta < 0:
            raise ValueError(f"delta must be non-negative, got {self.delta}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        if self.eps is not None and not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")

    def to_dict(self):
        return {
            "beta": self.beta,
            "delta": self.delta,
            "k": self.k,
            "kernel": None if self.kernel is None else self.kernel.to_dict(),
            "eps": self.eps,
            "variant": self.variant.value,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("kernel") is not None:
            d["kernel"] = KernelSpec(**d["kernel"])
        return cls(**d)


def labeled_prefix(labels) -> int:
    """Length of the leading run of labeled samples; later samples must be unlabeled."""
    n_s = 0
    while n_s < len(labels) and labels[n_s] is not None:
        n_s += 1
    if any(y is not None for y in labels[n_s:]):
        raise DataError("labeled samples must form a prefix of the training set")
    return n_s


def build_operators(
    X, domains: DomainLayout, classes: ClassLayout | None, kernel: KernelSpec, class_rows: str = "all"
):
    """Centered Gram, ``L``, ``P`` and ``Q`` for a training sample.

    Returns the operators together with the centering statistics of the
    uncentered Gram (needed to project new samples). ``P`` and ``Q`` are zero
    when ``classes`` is None; ``class_rows`` is passed to
    :func:`~sca.scatter.between_class`.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[0] != domains.n:
        raise ShapeError(f"{X.shape[0]} samples but domain layout covers {domains.n}")
    K_raw = gram(X, spec=kernel)
    stats = centering_stats(K_raw)
    K = center_gram(K_raw)
    L = domain_coeff(domains)
    if classes is None:
        P = Q = np.zeros_like(K)
    else:
        P = between_class(K, classes, class_rows)
        Q = within_class(K, classes, class_rows)
    return ScatterOperators(K=K, L=L, P=P, Q=Q), stats


def assemble_pencil(K, L, P, Q, hyper: HyperParams, *, KLK=None):
    """Left and right matrices of the SCA generalized eigenproblem.

    ``A = (1-beta)/n K K + beta P`` and ``B = delta K L K + K + Q`` (the solver
    adds ``eps I``). Unused terms of the degenerate variants are skipped.
    ``KLK`` may be passed precomputed, e.g. from the low-rank factor of ``L``.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    for name, M in (("L", L), ("P", P), ("Q", Q)):
        if np.shape(M) != (n, n):
            raise ShapeError(f"{name} has shape {np.shape(M)}, expected {(n, n)}")
    v = hyper.variant
    use_classes = v.supervised
    use_domain = v in (Variant.SCA, Variant.USCA) and hyper.delta != 0.0
    beta = hyper.beta

    if beta < 1.0:
        A = ((1.0 - beta) / n) * (K @ K)
        if use_classes and beta > 0.0:
            A = A + beta * P
    else:
        A = np.array(P, dtype=float) if use_classes else np.zeros((n, n))
    B = K.copy()
    if use_domain:
        if KLK is None:
            KLK = K @ L @ K
        B = B + hyper.delta * KLK
    if use_classes:
        B = B + Q
    return symmetrize(A), symmetrize(B)


def objective_ratio(A, B, proj) -> float:
    """``Tr(W^T A W) / Tr(W^T B W)`` for a coefficient matrix ``proj``."""
    proj = np.asarray(proj, dtype=float)
    return float(np.sum(proj * (A @ proj)) / np.sum(proj * (B @ proj)))


@dataclass(frozen=True, eq=False)
class ScaModel:
    training_X: np.ndarray
    B_star: np.ndarray
    lambdas: np.ndarray
    kernel: KernelSpec
    centering: CenteringStats
    hyper: HyperParams
    eps: float
    domain_sizes: tuple
    class_labels: tuple | None = None
    warnings: tuple = ()

    @property
    def k(self):
        return self.B_star.shape[1]

    @property
    def n(self):
        return self.training_X.shape[0]

    def transform(self, X_new):
        return transform(self, X_new)

    def truncate(self, k: int) -> "ScaModel":
        """Model keeping only the ``k`` leading components (``k`` may not exceed ``self.k``)."""
        if not 1 <= k <= self.k:
            raise ValueError(f"cannot truncate {self.k} components to {k}")
        return replace(self, B_star=self.B_star[:, :k], lambdas=self.lambdas[:k], hyper=replace(self.hyper, k=k))

    def save(self, path):
        meta = {
            "format_version": MODEL_FORMAT_VERSION,
            "kernel": self.kernel.to_dict(),
            "hyper": self.hyper.to_dict(),
            "eps": self.eps,
            "grand_mean": self.centering.grand_mean,
            "domain_sizes": list(self.domain_sizes),
            "class_labels": None if self.class_labels is None else list(self.class_labels),
            "warnings": list(self.warnings),
        }
        with Path(path).open("wb") as fh:
            np.savez(
                fh,
                meta=np.array(json.dumps(meta)),
                training_X=self.training_X,
                B_star=self.B_star,
                lambdas=self.lambdas,
                col_means=self.centering.col_means,
            )

    @classmethod
    def load(cls, path) -> "ScaModel":
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            if meta.get("format_version") != MODEL_FORMAT_VERSION:
                raise DataError(f"unsupported model format version {meta.get('format_version')}")
            return cls(
                training_X=z["training_X"],
                B_star=z["B_star"],
                lambdas=z["lambdas"],
                kernel=KernelSpec(**meta["kernel"]),
                centering=CenteringStats(col_means=z["col_means"], grand_mean=meta["grand_mean"]),
                hyper=HyperParams.from_dict(meta["hyper"]),
                eps=meta["eps"],
                domain_sizes=tuple(meta["domain_sizes"]),
                class_labels=None if meta["class_labels"] is None else tuple(meta["class_labels"]),
                warnings=tuple(meta["warnings"]),
            )


def solve_operators(ops: ScatterOperators, hyper: HyperParams, *, KLK=None):
    """Assemble and solve the pencil; returns ``(B_star, lambdas, eps, warnings, A, B)``."""
    n = ops.n
    if hyper.k > n:
        raise ValueError(f"k={hyper.k} exceeds the number of training samples {n}")
    A, B = assemble_pencil(ops.K, ops.L, ops.P, ops.Q, hyper, KLK=KLK)
    eps = hyper.eps if hyper.eps is not None else default_eps(B)
    eig = solve_gen_eig(A, B, hyper.k, eps)
    lam = eig.eigenvalues
    top = lam[0] if len(lam) else 0.0
    if not top > 0:
        raise DegenerateProjectionError("degenerate projection: no positive eigenvalue")
    keep = lam > EIGEN_FLOOR * top
    notes = ()
    if not keep.all():
        kept = int(keep.sum())
        notes = (f"dropped {hyper.k - kept} of {hyper.k} components with eigenvalue <= {EIGEN_FLOOR:g} * max",)
        log.info(notes[0])
    return eig.eigenvectors[:, keep], lam[keep], eps, notes, A, B


@dataclass(frozen=True, eq=False)
class Prepared:
    """Hyper-parameter independent pieces of a fit, reusable across candidates."""

    X: np.ndarray
    layout: DomainLayout
    classes: ClassLayout | None
    kernel: KernelSpec
    ops: ScatterOperators
    stats: CenteringStats
    KLK: np.ndarray


def prepare(data: Dataset, kernel: KernelSpec, supervised: bool = True, class_rows: str = "all") -> Prepared:
    layout = DomainLayout.from_ids(data.domains)
    classes = None
    if supervised:
        n_s = labeled_prefix(data.labels)
        if n_s == 0:
            raise DataError("supervised variants need labeled source samples")
        classes = ClassLayout(labels=data.labels[:n_s], n=data.n)
    ops, stats = build_operators(data.X, layout, classes, kernel, class_rows)
    KLK = kernel_domain_product(ops.K, layout)
    return Prepared(data.X, layout, classes, kernel, ops, stats, KLK)


def fit_prepared(prep: Prepared, hyper: HyperParams) -> ScaModel:
    if hyper.variant.supervised and prep.classes is None:
        raise DataError(f"variant {hyper.variant.value} needs class operators")
    if hyper.kernel is not None and hyper.kernel != prep.kernel:
        raise ValueError("hyper-parameters name a different kernel than the prepared operators")
    B_star, lambdas, eps, notes, _, _ = solve_operators(prep.ops, hyper, KLK=prep.KLK)
    return ScaModel(
        training_X=prep.X,
        B_star=B_star,
        lambdas=lambdas,
        kernel=prep.kernel,
        centering=prep.stats,
        hyper=replace(hyper, kernel=prep.kernel),
        eps=eps,
        domain_sizes=prep.layout.sizes,
        class_labels=None if prep.classes is None else prep.classes.labels,
        warnings=notes,
    )


def fit(data: Dataset, hyper: HyperParams, class_rows: str = "all") -> ScaModel:
    """Fit SCA (or one of its degenerate variants) on every row of ``data``.

    Labeled rows must come first; supervised variants need at least one.
    ``class_rows="labeled"`` builds the class operators over the labeled rows
    only, zero-padded (see :func:`~sca.scatter.between_class`).
    """
    kernel = hyper.kernel if hyper.kernel is not None else median_bandwidth(data.X)
    supervised = hyper.variant.supervised
    if supervised and labeled_prefix(data.labels) == 0:
        raise DataError(f"variant {hyper.variant.value} needs labeled source samples")
    return fit_prepared(prepare(data, kernel, supervised, class_rows), hyper)


def transform(model: ScaModel, X_new) -> np.ndarray:
    """Features ``K_t^T B* Lambda^{-1/2}`` of new samples, centred with the training statistics."""
    X_new = np.asarray(X_new, dtype=float)
    if X_new.ndim == 1:
        X_new = X_new[None, :]
    if X_new.shape[1] != model.training_X.shape[1]:
        raise ShapeError(f"expected {model.training_X.shape[1]} features, got {X_new.shape[1]}")
    Kt = center_cross(gram(X_new, model.training_X, model.kernel), model.centering)
    return (Kt @ model.B_star) / np.sqrt(model.lambdas)
