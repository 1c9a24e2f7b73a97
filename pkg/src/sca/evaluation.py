"""1-nearest-neighbour scoring and source-only cross-validation."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import cdist

from .core import HyperParams, Variant, fit_prepared, labeled_prefix, prepare
from .kernels import median_bandwidth
from .data import Dataset
from .errors import DataError, ShapeError


def knn1_predict(train_Z, train_y, test_Z):
    """Label of the Euclidean-nearest training row; ties go to the smallest index."""
    train_Z = np.atleast_2d(np.asarray(train_Z, dtype=float))
    test_Z = np.atleast_2d(np.asarray(test_Z, dtype=float))
    train_y = list(train_y)
    if len(train_y) == 0 or train_Z.shape[0] == 0:
        raise DataError("1NN needs a non-empty training set")
    if len(train_y) != train_Z.shape[0]:
        raise ShapeError(f"{train_Z.shape[0]} training rows but {len(train_y)} labels")
    if train_Z.shape[1] != test_Z.shape[1]:
        raise ShapeError(f"dimension mismatch: {train_Z.shape[1]} vs {test_Z.shape[1]}")
    nearest = np.argmin(cdist(test_Z, train_Z, "sqeuclidean"), axis=1)
    return [train_y[i] for i in nearest]


def accuracy(pred, truth) -> float:
    pred, truth = list(pred), list(truth)
    if len(pred) != len(truth):
        raise ShapeError(f"length mismatch: {len(pred)} vs {len(truth)}")
    if not pred:
        raise ShapeError("cannot score an empty prediction")
    return sum(p == t for p, t in zip(pred, truth)) / len(pred)


def stratified_folds(labels, folds: int, seed: int, stratified: bool = True):
    """Partition ``range(len(labels))`` into ``folds`` held-out index arrays.

    Stratified: each class is shuffled and dealt round-robin, continuing the
    deal across classes so fold sizes differ by at most one.
    """
    labels = list(labels)
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if len(labels) < folds:
        raise DataError(f"{len(labels)} samples cannot fill {folds} folds")
    rng = np.random.default_rng(seed)
    if not stratified:
        return [np.sort(f) for f in np.array_split(rng.permutation(len(labels)), folds)]
    buckets = [[] for _ in range(folds)]
    slot = 0
    for c in sorted(set(labels), key=str):
        idx = np.flatnonzero([y == c for y in labels])
        if len(idx) < folds:
            raise DataError(f"class {c!r} has {len(idx)} samples, fewer than {folds} folds")
        for i in rng.permutation(idx):
            buckets[slot % folds].append(i)
            slot += 1
    return [np.sort(np.asarray(b, dtype=int)) for b in buckets]


@dataclass(frozen=True)
class CvPlan:
    grid: tuple
    folds: int = 5
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(self.grid))
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if not self.grid:
            raise ValueError("grid must be non-empty")


@dataclass(frozen=True)
class CvRow:
    hyper: HyperParams
    mean_accuracy: float
    fold_accuracies: tuple


def _selection_key(row: CvRow):
    h = row.hyper
    return (-row.mean_accuracy, h.k, h.beta, h.delta)


def make_grid(ks, betas=(0.5,), deltas=(1.0,), kernel=None, eps=None, variant=Variant.SCA):
    """Cartesian product of candidate settings; duplicates after variant pinning are removed."""
    seen = {}
    for k in ks:
        for b in betas:
            for d in deltas:
                h = HyperParams(beta=b, delta=d, k=k, kernel=kernel, eps=eps, variant=variant)
                seen.setdefault(h, None)
    return tuple(seen)


def cross_validate(data: Dataset, plan: CvPlan, variant: Variant | None = None, class_rows: str = "all"):
    """Pick hyper-parameters by k-fold 1NN accuracy on the labeled source rows.

    Every fold fit uses the training part of the source rows plus all unlabeled
    rows of ``data`` (target rows in domain adaptation). Candidates that differ
    only in ``k`` share one eigendecomposition, and all candidates of a fold
    share the kernel operators. Returns ``(best, table)`` where
    the best row maximizes mean accuracy, ties going to smaller ``k``, ``beta``,
    then ``delta``.
    """
    grid = plan.grid if variant is None else tuple(dict.fromkeys(replace(h, variant=variant) for h in plan.grid))
    n_s = labeled_prefix(data.labels)
    if n_s == 0:
        raise DataError("cross-validation needs labeled source rows")
    y = data.labels[:n_s]
    unlabeled = np.arange(n_s, data.n)
    held_sets = stratified_folds(y, plan.folds, plan.seed, plan.stratified)

    groups = {}
    for h in grid:
        groups.setdefault(replace(h, k=1), []).append(h)

    scores = {h: [] for h in grid}
    for held in held_sets:
        train_src = np.setdiff1d(np.arange(n_s), held)
        train = data.subset_rows(np.concatenate([train_src, unlabeled]))
        train_y = [y[i] for i in train_src]
        held_y = [y[i] for i in held]
        prepared = {}
        for base, members in groups.items():
            kernel = base.kernel if base.kernel is not None else median_bandwidth(train.X)
            key = (kernel, base.variant.supervised)
            if key not in prepared:
                prepared[key] = prepare(train, kernel, base.variant.supervised, class_rows)
            k_max = min(max(h.k for h in members), train.n)
            model = fit_prepared(prepared[key], replace(base, k=k_max))
            Z_train = model.transform(data.X[train_src])
            Z_held = model.transform(data.X[held])
            for h in members:
                kk = min(h.k, model.k)
                pred = knn1_predict(Z_train[:, :kk], train_y, Z_held[:, :kk])
                scores[h].append(accuracy(pred, held_y))

    table = [CvRow(h, float(np.mean(scores[h])), tuple(scores[h])) for h in grid]
    best = min(table, key=_selection_key)
    return best.hyper, table
