"""Scatter statistics and the operator matrices of the SCA pencil.

All operators live in the n-dimensional coordinate system of the training
sample: a projection ``W = Phi^T B`` is represented by ``B`` (n x k) and every
scatter of projected data becomes a quadratic form ``Tr(B^T M B)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ShapeError
from .kernels import KernelSpec, gram


@dataclass(frozen=True)
class DomainLayout:
    """Sizes of contiguous per-domain blocks of the training sample."""

    sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes or min(sizes) < 1:
            raise DataError(f"domain sizes must be positive, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @property
    def n(self):
        return sum(self.sizes)

    @property
    def m(self):
        return len(self.sizes)

    @classmethod
    def from_ids(cls, domain_ids):
        ids = list(domain_ids)
        sizes, seen = [], set()
        for i, d in enumerate(ids):
            if i == 0 or d != ids[i - 1]:
                if d in seen:
                    raise DataError(f"domain {d!r} is not contiguous")
                seen.add(d)
                sizes.append(0)
            sizes[-1] += 1
        return cls(tuple(sizes))


@dataclass(frozen=True)
class ClassLayout:
    """Labels of the labeled prefix ``0..n_s-1`` of an ``n``-sample training set."""

    labels: tuple
    n: int
    classes: tuple = field(init=False)
    codes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        if not labels:
            raise DataError("class layout needs at least one labeled sample")
        if any(y is None for y in labels):
            raise DataError("labeled prefix contains a missing label")
        if self.n < len(labels):
            raise DataError(f"{len(labels)} labels for only {self.n} samples")
        classes = tuple(sorted(set(labels), key=str))
        index = {c: i for i, c in enumerate(classes)}
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "codes", np.array([index[y] for y in labels], dtype=int))

    @property
    def n_s(self):
        return len(self.labels)

    @property
    def n_t(self):
        return self.n - self.n_s

    @property
    def class_counts(self):
        return dict(zip(self.classes, np.bincount(self.codes, minlength=len(self.classes)).tolist()))


@dataclass(frozen=True)
class ScatterOperators:
    K: np.ndarray  # centered Gram
    L: np.ndarray
    P: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        n = self.K.shape[0]
        for name in ("K", "L", "P", "Q"):
            if getattr(self, name).shape != (n, n):
                raise ShapeError(f"{name} has shape {getattr(self, name).shape}, expected {(n, n)}")

    @property
    def n(self):
        return self.K.shape[0]


def scatter_of(points) -> float:
    """Mean squared distance of the rows from their centroid (population convention)."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    D = X - X.mean(axis=0)
    return float(np.sum(D * D) / len(X))


def domain_factor(layout: DomainLayout):
    """Low-rank factors ``(V, C)`` with ``L = V C V^T``.

    ``V[:, d]`` is the indicator of domain ``d`` divided by its size, so ``V^T K``
    holds the empirical mean embeddings. ``C`` is the scatter weighting of ``m``
    points around their centroid.
    """
    m, n = layout.m, layout.n
    V = np.zeros((n, m))
    start = 0
    for d, size in enumerate(layout.sizes):
        V[start : start + size, d] = 1.0 / size
        start += size
    C = (np.eye(m) * m - np.ones((m, m))) / (m * m)
    return V, C


def domain_coeff(layout: DomainLayout) -> np.ndarray:
    """Block-constant domain-scatter coefficient matrix ``L`` (n x n).

    Diagonal blocks are ``(m-1)/(m^2 n_k^2)``, off-diagonal blocks
    ``-1/(m^2 n_k n_l)``; every row sums to zero.
    """
    m = layout.m
    sizes = np.asarray(layout.sizes, dtype=float)
    coeff = -1.0 / (m * m * np.outer(sizes, sizes))
    np.fill_diagonal(coeff, (m - 1) / (m * m * sizes**2))
    blocks = np.repeat(np.arange(m), layout.sizes)
    return coeff[np.ix_(blocks, blocks)]


def kernel_domain_product(K, layout: DomainLayout) -> np.ndarray:
    """``K L K`` through the rank-``m`` factorization of ``L`` (O(n^2 m))."""
    V, C = domain_factor(layout)
    KV = np.asarray(K) @ V
    out = KV @ C @ KV.T
    return 0.5 * (out + out.T)


def domain_scatter(K, L, B) -> float:
    """``Tr(B^T K L K B)``: scatter of the per-domain mean embeddings after projection."""
    K, L, B = (np.asarray(a, dtype=float) for a in (K, L, B))
    if B.ndim == 1:
        B = B[:, None]
    n = K.shape[0]
    if K.shape != (n, n) or L.shape != (n, n) or B.shape[0] != n:
        raise ShapeError(f"incompatible shapes K{K.shape} L{L.shape} B{B.shape}")
    KB = K @ B
    return float(np.sum(KB * (L @ KB)))


def span_isometry(K, rtol: float = 1e-12) -> np.ndarray:
    """``B`` whose projection ``Phi^T B`` is an isometry on the span of the sample.

    With this ``B`` the quadratic forms ``Tr(B^T K M K B)`` reduce to the
    unprojected scatters in feature space, e.g. ``Tr(L K)`` for the domain scatter.
    """
    w, U = np.linalg.eigh(0.5 * (K + K.T))
    keep = w > rtol * max(w.max(), 0.0)
    return (U[:, keep] / np.sqrt(w[keep])) @ U[:, keep].T


def mmd_sq(X, Y, spec: KernelSpec) -> float:
    """Biased (V-statistic) squared MMD: squared distance of the empirical mean embeddings."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[1] != Y.shape[1]:
        raise ShapeError(f"feature count mismatch: {X.shape[1]} vs {Y.shape[1]}")
    kxx = gram(X, spec=spec).mean()
    kyy = gram(Y, spec=spec).mean()
    kxy = gram(X, Y, spec).mean()
    return float(kxx - 2.0 * kxy + kyy)


def _class_means(K, layout: ClassLayout, rows):
    """Class-mean kernel columns ``m_k`` (over ``rows``) and class counts."""
    n_s = layout.n_s
    counts = np.bincount(layout.codes, minlength=len(layout.classes)).astype(float)
    if np.any(counts == 0):
        raise DataError("a class has no samples")
    onehot = np.zeros((n_s, len(counts)))
    onehot[np.arange(n_s), layout.codes] = 1.0
    return K[rows, :n_s] @ onehot / counts, counts


def _check_rows(K, layout, rows):
    n = layout.n
    if K.shape != (n, n):
        raise ShapeError(f"K has shape {K.shape}, layout expects {(n, n)}")
    if rows not in ("all", "labeled"):
        raise ValueError(f"rows must be 'all' or 'labeled', got {rows!r}")
    return slice(None) if rows == "all" else slice(0, layout.n_s)


def between_class(K, layout: ClassLayout, rows: str = "all") -> np.ndarray:
    """``P``: between-class operator ``sum_k n_k (m_k - m_bar)(m_k - m_bar)^T``.

    ``m_k`` averages the kernel columns of class ``k`` and ``m_bar`` is the
    centroid of the labeled (source) sample, i.e. the count-weighted mean of the
    ``m_k``. With ``rows="all"`` the columns span every training sample, so
    ``Tr(B^T P B)`` is the count-weighted scatter of the projected class means
    around the projected source centroid. ``rows="labeled"`` restricts them to
    the labeled prefix and zero-pads the rest of the matrix.
    """
    K = np.asarray(K, dtype=float)
    sel = _check_rows(K, layout, rows)
    means, counts = _class_means(K, layout, sel)
    Mc = means - (means @ counts / counts.sum())[:, None]
    Ps = (Mc * counts) @ Mc.T
    Ps = 0.5 * (Ps + Ps.T)
    if rows == "all":
        return Ps
    P = np.zeros_like(K)
    P[sel, sel] = Ps
    return P


def within_class(K, layout: ClassLayout, rows: str = "all") -> np.ndarray:
    """``Q``: within-class operator ``sum_k K_k H_k K_k^T``.

    ``K_k`` holds the kernel columns of class ``k``; ``rows`` as in
    :func:`between_class`.
    """
    K = np.asarray(K, dtype=float)
    sel = _check_rows(K, layout, rows)
    means, _ = _class_means(K, layout, sel)
    D = K[sel, : layout.n_s] - means[:, layout.codes]
    Qs = D @ D.T
    Qs = 0.5 * (Qs + Qs.T)
    if rows == "all":
        return Qs
    Q = np.zeros_like(K)
    Q[sel, sel] = Qs
    return Q


# -- finite-sample convergence of the empirical scatter ----------------------


@dataclass(frozen=True)
class GaussianSampler:
    """Isotropic Gaussian ``N(mean, scale^2 I)``; population scatter is ``p * scale^2``."""

    dim: int = 1
    scale: float = 1.0
    mean: float = 0.0

    @property
    def population_scatter(self):
        return self.dim * self.scale**2

    def sample(self, rng, n):
        return self.mean + self.scale * rng.standard_normal((n, self.dim))


@dataclass(frozen=True)
class ProbeResult:
    sizes: tuple
    mean_errors: tuple
    slope: float
    degenerate: bool


def scatter_convergence_probe(sampler, sizes, trials: int, seed: int) -> ProbeResult:
    """Mean ``|Psi(P) - Psi(P_hat)|`` per sample size and its log-log slope in ``n``.

    Uses the identity feature map, under which the population scatter is the
    trace of the covariance. A point-mass sampler yields zero error at every
    size; the slope is then reported as NaN with ``degenerate=True``.
    """
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) < 2 or any(b <= a for a, b in zip(sizes, sizes[1:])) or sizes[0] < 1:
        raise ValueError(f"sizes must be >= 2 strictly increasing positive values, got {sizes}")
    if trials < 10:
        raise ValueError(f"need at least 10 trials, got {trials}")
    rng = np.random.default_rng(seed)
    target = sampler.population_scatter
    errors = []
    for n in sizes:
        errs = [abs(target - scatter_of(sampler.sample(rng, n))) for _ in range(trials)]
        errors.append(float(np.mean(errs)))
    errors = np.asarray(errors)
    if np.any(errors <= 0):
        return ProbeResult(sizes, tuple(errors.tolist()), float("nan"), True)
    slope = np.polyfit(np.log(sizes), np.log(errors), 1)[0]
    return ProbeResult(sizes, tuple(errors.tolist()), float(slope), False)
