"""Self-checks of the scatter identities and the eigenproblem, runnable from the CLI.

Each check compares the library against a direct computation that does not
share code with it (explicit feature maps, ``numpy.cov``, plain ``eigh``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import HyperParams, Variant, build_operators, solve_operators
from .kernels import LINEAR, KernelSpec, gram
from .scatter import ClassLayout, DomainLayout, domain_coeff, domain_scatter, mmd_sq, scatter_of, span_isometry


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    trials: int

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<28} worst={self.worst:.3e}  tol={self.tolerance:.0e}  trials={self.trials}"


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def check_total_variance(rng, trials=100, tol=1e-10):
    worst = 0.0
    for _ in range(trials):
        n, p = rng.integers(2, 61), rng.integers(1, 9)
        X = rng.normal(scale=rng.uniform(0.1, 10), size=(n, p))
        oracle = float(np.trace(np.atleast_2d(np.cov(X, rowvar=False, bias=True))))
        worst = max(worst, _rel(scatter_of(X), oracle))
    return CheckResult("scatter == trace(cov)", worst <= tol, worst, tol, trials)


def check_domain_mmd(rng, trials=100, tol=1e-8):
    worst = 0.0
    for _ in range(trials):
        n1, n2, p = rng.integers(3, 25), rng.integers(3, 25), rng.integers(1, 5)
        X1 = rng.normal(size=(n1, p))
        X2 = rng.normal(loc=rng.uniform(-2, 2), size=(n2, p))
        X = np.vstack([X1, X2])
        for spec in (LINEAR, KernelSpec(bandwidth_sq=float(rng.uniform(0.5, 5.0)))):
            K = gram(X, spec=spec)
            L = domain_coeff(DomainLayout((n1, n2)))
            dom = domain_scatter(K, L, span_isometry(K))
            worst = max(worst, _rel(4.0 * dom, mmd_sq(X1, X2, spec)))
    return CheckResult("4 * domain scatter == MMD^2", worst <= tol, worst, tol, trials)


def check_pencil(rng, trials=20, tol=1e-6):
    worst = 0.0
    for _ in range(trials):
        sizes = (int(rng.integers(8, 30)), int(rng.integers(8, 30)))
        X = np.vstack([rng.normal(size=(sizes[0], 2)), rng.normal(loc=1.0, size=(sizes[1], 2))])
        labels = tuple(str(c) for c in rng.integers(0, 3, size=sizes[0]))
        if len(set(labels)) < 2:
            continue
        ops, _ = build_operators(X, DomainLayout(sizes), ClassLayout(labels, sum(sizes)), KernelSpec(bandwidth_sq=2.0))
        hyper = HyperParams(beta=float(rng.uniform(0, 1)), delta=1.0, k=5)
        Bs, lam, eps, _, A, B = solve_operators(ops, hyper)
        Be = B + eps * np.eye(len(B))
        scale = np.linalg.norm(A) + np.linalg.norm(B)
        residual = np.linalg.norm(A @ Bs - Be @ Bs * lam, axis=0).max() / scale
        ortho = np.abs(Bs.T @ Be @ Bs - np.eye(Bs.shape[1])).max()
        worst = max(worst, residual, ortho)
    return CheckResult("pencil residual/B-orthonormal", worst <= tol, worst, tol, trials)


def check_kpca_recovery(rng, trials=20, tol=1e-6):
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(10, 40))
        X = rng.normal(size=(n, 3))
        ops, _ = build_operators(X, DomainLayout((n,)), None, KernelSpec(bandwidth_sq=3.0))
        Bs, lam, _, _, _, _ = solve_operators(ops, HyperParams(k=3, variant=Variant.KPCA))
        Z = ops.K @ Bs / np.sqrt(lam)
        mu, U = np.linalg.eigh(ops.K)
        U = U[:, ::-1][:, : Z.shape[1]]
        ref = np.sqrt(n) * U  # whitened KPCA scores
        signs = np.sign(np.sum(Z * ref, axis=0))
        worst = max(worst, float(np.abs(Z - ref * signs).max()))
    return CheckResult("KPCA recovery (whitened)", worst <= tol, worst, tol, trials)


def run_checks(seed: int = 0, trials: int = 100):
    rng = np.random.default_rng(seed)
    small = max(1, trials // 5)
    return [
        check_total_variance(rng, trials),
        check_domain_mmd(rng, trials),
        check_kpca_recovery(rng, small),
        check_pencil(rng, small),
    ]

