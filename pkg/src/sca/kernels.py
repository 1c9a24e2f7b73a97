"""Kernels, Gram matrices, centering and the regularized generalized eigensolver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist, pdist, squareform

from .errors import DegenerateBandwidthError, ShapeError, SingularPencilError

# Condition-number ceiling for the regularized right-hand matrix.
MAX_CONDITION = 1e15


@dataclass(frozen=True)
class KernelSpec:
    """RBF kernel ``exp(-||a - b||^2 / bandwidth_sq)``.

    ``kind="linear"`` gives the plain inner product; it exists for testing
    identities that are exact under explicit feature maps.
    """

    bandwidth_sq: float = 1.0
    kind: str = "rbf"

    def __post_init__(self):
        if self.kind not in ("rbf", "linear"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not (np.isfinite(self.bandwidth_sq) and self.bandwidth_sq > 0):
            raise ValueError(f"bandwidth_sq must be positive, got {self.bandwidth_sq}")

    def to_dict(self):
        return {"bandwidth_sq": float(self.bandwidth_sq), "kind": self.kind}


LINEAR = KernelSpec(kind="linear")


@dataclass(frozen=True)
class EigPair:
    eigenvalues: np.ndarray  # (k,), non-increasing
    eigenvectors: np.ndarray  # (n, k), unit norm under the regularized B


def _as_2d(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ShapeError(f"{name} must be a 2-D matrix, got shape {X.shape}")
    return X


def symmetrize(M):
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def rbf(a, b, spec: KernelSpec) -> float:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise ShapeError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if spec.kind == "linear":
        return float(a @ b)
    d = a - b
    return float(np.exp(-(d @ d) / spec.bandwidth_sq))


def gram(X, Y=None, spec: KernelSpec = KernelSpec()) -> np.ndarray:
    """Kernel matrix between the rows of ``X`` and ``Y`` (``Y=None`` means ``Y=X``).

    Entries are computed pairwise, so row ``i`` of the result depends only on
    ``X[i]`` and ``Y``; the symmetric case is exactly symmetric with unit diagonal.
    """
    X = _as_2d(X)
    if Y is not None:
        Y = _as_2d(Y, "Y")
        if X.shape[1] != Y.shape[1]:
            raise ShapeError(f"feature count mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if spec.kind == "linear":
        if Y is None:
            return symmetrize(X @ X.T)
        return X @ Y.T
    if Y is None:
        D = squareform(pdist(X, "sqeuclidean")) if len(X) > 1 else np.zeros((1, 1))
    else:
        D = cdist(X, Y, "sqeuclidean")
    return np.exp(-D / spec.bandwidth_sq)


def median_bandwidth(X, literal: bool = False) -> KernelSpec:
    """Median heuristic over distinct pairs of rows.

    By default ``bandwidth_sq`` is the median squared distance. With
    ``literal=True`` the median squared distance is taken as the bandwidth
    itself and squared again inside the exponent's denominator.
    """
    X = _as_2d(X)
    if len(X) < 2:
        raise DegenerateBandwidthError("median heuristic needs at least two samples")
    med = float(np.median(pdist(X, "sqeuclidean")))
    if med <= 0:
        raise DegenerateBandwidthError("median pairwise distance is zero")
    return KernelSpec(bandwidth_sq=med * med if literal else med)


@dataclass(frozen=True)
class CenteringStats:
    """Statistics of an uncentered training Gram needed to center new kernel rows."""

    col_means: np.ndarray
    grand_mean: float


def centering_stats(K) -> CenteringStats:
    K = np.asarray(K, dtype=float)
    return CenteringStats(col_means=K.mean(axis=0), grand_mean=float(K.mean()))


def center_gram(K) -> np.ndarray:
    """Double-centre a square kernel matrix: ``H K H`` with ``H = I - 11^T/n``."""
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ShapeError(f"expected a square matrix, got {K.shape}")
    Kc = K - K.mean(axis=0)[None, :] - K.mean(axis=1)[:, None] + K.mean()
    return symmetrize(Kc)


def center_cross(Kt, stats: CenteringStats) -> np.ndarray:
    """Centre rows of a test-versus-train kernel with the training statistics.

    ``Kt`` has shape (m, n). Applied to the training Gram itself this reproduces
    :func:`center_gram` up to the final symmetrization.
    """
    Kt = np.asarray(Kt, dtype=float)
    if Kt.shape[1] != stats.col_means.shape[0]:
        raise ShapeError(f"kernel has {Kt.shape[1]} columns, training set has {stats.col_means.shape[0]}")
    return Kt - Kt.mean(axis=1)[:, None] - stats.col_means[None, :] + stats.grand_mean


def default_eps(B) -> float:
    """Regularizer scaled to the mean diagonal of ``B``."""
    B = np.asarray(B)
    return 1e-5 * float(np.trace(B)) / B.shape[0]


def _fix_signs(V):
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def solve_gen_eig(A, B, k: int, eps: float) -> EigPair:
    """Leading ``k`` eigenpairs of ``A v = lam (B + eps I) v``.

    Symmetric-definite reduction: Cholesky factor the regularized ``B``, solve
    the standard symmetric problem, back-transform. The full spectrum is always
    computed, so calls that differ only in ``k`` agree bit-for-bit on the
    shared columns.
    """
    A = symmetrize(A)
    B = symmetrize(B)
    n = A.shape[0]
    if A.shape != (n, n) or B.shape != (n, n):
        raise ShapeError(f"pencil shapes differ: {A.shape} vs {B.shape}")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    Breg = B + eps * np.eye(n)
    try:
        C = scipy.linalg.cholesky(Breg, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularPencilError("B + eps*I is not positive definite") from exc
    d = np.diag(C)
    if (d.max() / d.min()) ** 2 > MAX_CONDITION:
        raise SingularPencilError("B + eps*I is numerically singular")
    Y = scipy.linalg.solve_triangular(C, A, lower=True)
    M = symmetrize(scipy.linalg.solve_triangular(C, Y.T, lower=True))
    w, U = scipy.linalg.eigh(M, driver="evd")
    order = np.argsort(-w, kind="stable")[:k]
    V = scipy.linalg.solve_triangular(C.T, U[:, order], lower=False)
    return EigPair(eigenvalues=w[order], eigenvectors=_fix_signs(V))
