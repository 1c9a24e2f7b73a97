"""Session-wide pencil audit and the acceptance summary.

Every pencil solved through ``sca.core`` during the session is checked for
its residual and generalized orthonormality, so the eigenproblem bound covers
the whole corpus rather than a hand-picked sample.
"""

import numpy as np
import pytest

import sca.core

PENCIL_TOL = 1e-6

AUDIT = {"models": 0, "residual": 0.0, "ortho": 0.0}
ACCEPTANCE_LINES = {}


def _audited(solve):
    def wrapper(ops, hyper, **kw):
        out = solve(ops, hyper, **kw)
        V, lam, eps, _, A, B = out
        Be = B + eps * np.eye(len(B))
        scale = np.linalg.norm(A) + np.linalg.norm(B)
        AUDIT["models"] += 1
        AUDIT["residual"] = max(AUDIT["residual"], float(np.linalg.norm(A @ V - Be @ V * lam, axis=0).max() / scale))
        AUDIT["ortho"] = max(AUDIT["ortho"], float(np.abs(V.T @ Be @ V - np.eye(V.shape[1])).max()))
        return out

    return wrapper


@pytest.fixture(autouse=True, scope="session")
def pencil_audit():
    original = sca.core.solve_operators
    sca.core.solve_operators = _audited(original)
    yield AUDIT
    sca.core.solve_operators = original


def record_acceptance(number, passed, text):
    ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {text}"


def pencil_audit_line():
    ok = AUDIT["residual"] <= PENCIL_TOL and AUDIT["ortho"] <= PENCIL_TOL
    text = (
        f"pencil bound over {AUDIT['models']} fitted models: worst residual {AUDIT['residual']:.2e}, "
        f"worst orthonormality error {AUDIT['ortho']:.2e} (tol {PENCIL_TOL:g})"
    )
    return ok, text


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES and not AUDIT["models"]:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
    ok, text = pencil_audit_line()
    terminalreporter.write_line(f"session audit: {'PASS' if ok else 'FAIL'}  {text}")
