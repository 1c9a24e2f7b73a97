import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sca.core import (
    EIGEN_FLOOR,
    HyperParams,
    ScaModel,
    Variant,
    assemble_pencil,
    build_operators,
    fit,
    labeled_prefix,
    objective_ratio,
    solve_operators,
    transform,
)
from sca.data import Dataset, gen_synthetic, shifted_grid_spec
from sca.errors import DataError, DegenerateProjectionError, ShapeError
from sca.kernels import LINEAR, KernelSpec, gram, median_bandwidth
from sca.scatter import ClassLayout, DomainLayout, mmd_sq

from oracles import align_signs, gram_loop, pca_scores, whitened_kpca


def small_problem(seed=0, n_s=12, n_t=9, p=2, classes=3):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(size=(n_s, p)), rng.normal(loc=0.8, size=(n_t, p))])
    labels = tuple(str(i % classes) for i in range(n_s)) + (None,) * n_t
    return Dataset(X, ("s",) * n_s + ("t",) * n_t, labels, {"s": "source", "t": "target"})


def pencil_check(model, data):
    """Residual and B-orthonormality of a fitted model, recomputed from scratch."""
    layout = DomainLayout.from_ids(data.domains)
    classes = None
    if model.hyper.variant.supervised:
        n_s = labeled_prefix(data.labels)
        classes = ClassLayout(data.labels[:n_s], data.n)
    ops, _ = build_operators(data.X, layout, classes, model.kernel)
    A, B = assemble_pencil(ops.K, ops.L, ops.P, ops.Q, model.hyper)
    Be = B + model.eps * np.eye(len(B))
    scale = np.linalg.norm(A) + np.linalg.norm(B)
    V, lam = model.B_star, model.lambdas
    residual = np.linalg.norm(A @ V - Be @ V * lam, axis=0).max() / scale
    ortho = np.abs(V.T @ Be @ V - np.eye(V.shape[1])).max()
    return residual, ortho


# -- hyper-parameters ---------------------------------------------------------


def test_variants_pin_tradeoffs():
    assert (HyperParams(beta=0.3, delta=2, variant="usca").beta, HyperParams(variant="usca").delta) == (0.0, 1.0)
    h = HyperParams(beta=0.3, delta=2, variant=Variant.KPCA)
    assert (h.beta, h.delta) == (0.0, 0.0)
    h = HyperParams(beta=0.3, delta=2, variant="kfd")
    assert (h.beta, h.delta) == (1.0, 0.0)
    assert Variant.SCA.supervised and Variant.KFD.supervised
    assert not Variant.USCA.supervised and not Variant.KPCA.supervised


@pytest.mark.parametrize("kwargs", [{"beta": -0.1}, {"beta": 1.5}, {"delta": -1}, {"k": 0}, {"k": 2.5}, {"eps": 0.0}])
def test_hyper_validation(kwargs):
    with pytest.raises(ValueError):
        HyperParams(**kwargs)


def test_hyper_round_trip():
    h = HyperParams(beta=0.25, delta=3.0, k=7, kernel=KernelSpec(2.0), eps=1e-4, variant="usca")
    assert HyperParams.from_dict(h.to_dict()) == h


def test_labeled_prefix():
    assert labeled_prefix(("a", "b", None)) == 2
    with pytest.raises(DataError):
        labeled_prefix(("a", None, "b"))


# -- pencil assembly ------------------------------------------------------------


def _operators(seed=1):
    data = small_problem(seed)
    layout = DomainLayout.from_ids(data.domains)
    classes = ClassLayout(data.labels[:12], data.n)
    ops, _ = build_operators(data.X, layout, classes, KernelSpec(1.7))
    return ops


def test_assemble_kpca_and_kfd_reductions():
    ops = _operators()
    n = ops.n
    A, B = assemble_pencil(ops.K, ops.L, ops.P, ops.Q, HyperParams(variant="kpca"))
    np.testing.assert_allclose(A, ops.K @ ops.K / n, atol=1e-13)
    np.testing.assert_allclose(B, ops.K, atol=1e-15)
    A, B = assemble_pencil(ops.K, ops.L, ops.P, ops.Q, HyperParams(variant="kfd"))
    np.testing.assert_allclose(A, ops.P, atol=1e-15)
    np.testing.assert_allclose(B, ops.K + ops.Q, atol=1e-13)
    A, B = assemble_pencil(ops.K, ops.L, ops.P, ops.Q, HyperParams(delta=2.0, variant="usca"))
    np.testing.assert_allclose(A, ops.K @ ops.K / n, atol=1e-13)
    np.testing.assert_allclose(B, 2.0 * ops.K @ ops.L @ ops.K + ops.K, atol=1e-12)


def test_assemble_matches_loop_products():
    ops = _operators(2)
    n = ops.n

    def matmul(X, Y):
        out = np.zeros((X.shape[0], Y.shape[1]))
        for i in range(X.shape[0]):
            for j in range(Y.shape[1]):
                out[i, j] = sum(X[i, t] * Y[t, j] for t in range(X.shape[1]))
        return out

    K, L, P, Q = ops.K, ops.L, ops.P, ops.Q
    A_ref = 0.5 / n * matmul(K, K) + 0.5 * P
    B_ref = matmul(matmul(K, L), K) + K + Q
    A, B = assemble_pencil(K, L, P, Q, HyperParams(beta=0.5, delta=1.0))
    np.testing.assert_allclose(A, A_ref, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(B, B_ref, rtol=1e-10, atol=1e-12)


def test_assemble_shape_mismatch():
    with pytest.raises(ShapeError):
        assemble_pencil(np.eye(3), np.eye(3), np.eye(2), np.eye(3), HyperParams())


# -- fit / transform --------------------------------------------------------------


@pytest.mark.parametrize("variant", list(Variant))
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_fit_satisfies_pencil(variant, seed):
    data = small_problem(seed)
    model = fit(data, HyperParams(beta=0.4, delta=1.0, k=5, variant=variant))
    residual, ortho = pencil_check(model, data)
    assert residual <= 1e-6 and ortho <= 1e-6
    assert np.all(model.lambdas > 0) and np.all(np.diff(model.lambdas) <= 0)
    peak = model.B_star[np.argmax(np.abs(model.B_star), axis=0), np.arange(model.k)]
    assert np.all(peak > 0)


@pytest.mark.parametrize("seed", range(5))
def test_kpca_variant_recovers_standalone_kpca(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(25, 3))
    data = Dataset(X, ("d",) * 25, (None,) * 25, {"d": "target"})
    spec = KernelSpec(2.0)
    model = fit(data, HyperParams(k=4, kernel=spec, variant="kpca"))
    ref, _ = whitened_kpca(gram_loop(X, X, 2.0), 4)
    Z = transform(model, X)
    np.testing.assert_allclose(align_signs(Z, ref), ref, atol=1e-6)


def test_kpca_matches_sklearn_up_to_whitening():
    from sklearn.decomposition import KernelPCA

    X = np.random.default_rng(3).normal(size=(30, 2))
    data = Dataset(X, ("d",) * 30, (None,) * 30, {"d": "target"})
    model = fit(data, HyperParams(k=3, kernel=KernelSpec(1.5), variant="kpca"))
    sk = KernelPCA(n_components=3, kernel="rbf", gamma=1 / 1.5, eigen_solver="dense").fit(X)
    scores = sk.transform(X)
    whitened = scores / np.sqrt(sk.eigenvalues_ / 30)
    Z = model.transform(X)
    np.testing.assert_allclose(align_signs(Z, whitened), whitened, atol=1e-6)


def test_sca_without_class_and_domain_terms_equals_kpca():
    data = small_problem(4)
    spec = KernelSpec(1.2)
    kp = fit(data, HyperParams(k=4, kernel=spec, variant="kpca"))
    us = fit(data, HyperParams(k=4, delta=0.0, kernel=spec, variant="usca"))
    a, b = kp.transform(data.X), us.transform(data.X)
    np.testing.assert_allclose(align_signs(b, a), a, atol=1e-6)


def test_linear_kpca_matches_classical_pca():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 2)) @ np.array([[3.0, 0.0], [1.0, 0.5]])
    data = Dataset(X, ("d",) * 40, (None,) * 40, {"d": "target"})
    model = fit(data, HyperParams(k=2, kernel=LINEAR, variant="kpca"))
    scores, var = pca_scores(X, 2)
    ref = scores / np.sqrt(var)
    np.testing.assert_allclose(align_signs(model.transform(X), ref), ref, atol=1e-6)


def test_low_rank_linear_kpca_keeps_rank_many_components():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(15, 2)) @ rng.normal(size=(2, 5))  # rank 2
    data = Dataset(X, ("d",) * 15, (None,) * 15, {"d": "target"})
    model = fit(data, HyperParams(k=15, kernel=LINEAR, variant="kpca"))
    assert model.k == 2
    assert model.warnings and "dropped 13" in model.warnings[0]


def test_all_components_below_floor_is_degenerate():
    X = np.ones((6, 2))
    X[0, 0] = 1.0 + 1e-9
    data = Dataset(X, ("d",) * 6, (None,) * 6, {"d": "target"})
    with pytest.raises((DegenerateProjectionError, Exception)):
        fit(data, HyperParams(k=2, kernel=KernelSpec(1.0), variant="kpca"))


def test_supervised_fit_needs_labels():
    data = small_problem(0)
    unlabeled = Dataset(data.X, data.domains, (None,) * data.n, {"s": "target", "t": "target"})
    with pytest.raises(DataError):
        fit(unlabeled, HyperParams(variant="sca"))
    fit(unlabeled, HyperParams(variant="usca"))


def test_k_larger_than_n():
    with pytest.raises(ValueError):
        fit(small_problem(0), HyperParams(k=100))


def test_transform_self_consistency_and_duplicates():
    data = small_problem(7)
    model = fit(data, HyperParams(k=4))
    Z = model.transform(data.X)
    # training projections computed the way the solver sees them: centered K times B*
    from sca.kernels import center_gram

    Kc = center_gram(gram(data.X, spec=model.kernel))
    np.testing.assert_allclose(Z, Kc @ model.B_star / np.sqrt(model.lambdas), atol=1e-8)
    X_new = data.X[[3, 5, 3, 0, 5]]
    Zn = model.transform(X_new)
    assert np.array_equal(Zn[0], Zn[2]) and np.array_equal(Zn[1], Zn[4])
    # a lone row goes through a different BLAS path, so only closeness is expected
    np.testing.assert_allclose(model.transform(data.X[3]), Zn[:1], rtol=1e-12)


def test_transform_feature_mismatch():
    model = fit(small_problem(0), HyperParams(k=2))
    with pytest.raises(ShapeError):
        model.transform(np.zeros((2, 3)))


def test_objective_ratio_scale_invariant():
    data = small_problem(8)
    ops = _operators(8)
    A, B = assemble_pencil(ops.K, ops.L, ops.P, ops.Q, HyperParams(beta=0.5))
    Bs, lam, *_ = solve_operators(ops, HyperParams(beta=0.5, k=3))
    r1, r3 = objective_ratio(A, B, Bs), objective_ratio(A, B, 3.0 * Bs)
    assert r3 == pytest.approx(r1, rel=1e-9)
    assert data.n == ops.n


def test_fit_is_deterministic_and_truncation_is_prefix():
    data = small_problem(9)
    a = fit(data, HyperParams(k=6))
    b = fit(data, HyperParams(k=6))
    assert np.array_equal(a.B_star, b.B_star) and np.array_equal(a.lambdas, b.lambdas)
    c = fit(data, HyperParams(k=3))
    assert np.array_equal(a.truncate(3).B_star, c.B_star)
    with pytest.raises(ValueError):
        a.truncate(10)


def test_model_save_load_round_trip(tmp_path):
    data = small_problem(10)
    model = fit(data, HyperParams(k=3, beta=0.3))
    path = tmp_path / "model.npz"
    model.save(path)
    loaded = ScaModel.load(path)
    X_new = np.random.default_rng(0).normal(size=(7, 2))
    assert np.array_equal(loaded.transform(X_new), model.transform(X_new))
    assert loaded.hyper == model.hyper and loaded.domain_sizes == model.domain_sizes


def test_model_load_rejects_other_versions(tmp_path):
    import json

    model = fit(small_problem(0), HyperParams(k=2))
    path = tmp_path / "m.npz"
    model.save(path)
    with np.load(path) as z:
        parts = {k: z[k] for k in z.files}
    meta = json.loads(str(parts["meta"]))
    meta["format_version"] = 99
    parts["meta"] = np.array(json.dumps(meta))
    np.savez(path, **parts)
    with pytest.raises(DataError):
        ScaModel.load(path)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 1.0), st.floats(0.0, 10.0))
def test_fit_pencil_property(seed, beta, delta):
    data = small_problem(seed)
    model = fit(data, HyperParams(beta=beta, delta=delta, k=4))
    residual, ortho = pencil_check(model, data)
    assert residual <= 1e-6 and ortho <= 1e-6
    assert np.all(model.lambdas > EIGEN_FLOOR * model.lambdas[0])


def _mmd_in_own_space(A, B):
    """MMD under a median-heuristic RBF chosen in the space of the features themselves (scale-free)."""
    both = np.vstack([A, B])
    return mmd_sq(A, B, median_bandwidth(both))


@pytest.mark.slow
def test_projection_reduces_domain_mismatch_on_synthetic_data():
    wins = 0
    for seed in range(50):
        data = gen_synthetic(shifted_grid_spec(seed=seed, samples_per_cluster=50))
        model = fit(data, HyperParams(beta=0.5, delta=1.0, k=2))
        src, tgt = data.rows("d0"), data.rows("d1")
        before = _mmd_in_own_space(src, tgt)
        after = _mmd_in_own_space(model.transform(src), model.transform(tgt))
        wins += after < before
    assert wins >= 45
