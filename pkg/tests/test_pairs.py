import numpy as np
import pytest
import scipy.sparse as sp

from bizoo import (
    BizooError,
    CompatibilityError,
    DualPair,
    Field,
    OperatorCatalog,
    SolverConfig,
    SparseOperator,
    best_constant,
    build_domain,
    helmholtz_decompose,
    make_pair,
    project_range,
    reduced_solve,
)
from bizoo.grid import DofSpace


def rng(seed=0):
    return np.random.default_rng(seed)


def test_make_pair_rejects_corrupted_adjoint():
    dom = build_domain("square", 4)
    cat = OperatorCatalog(dom)
    op = cat.gradient
    # corrupt the cached adjoint so the probe identity fails
    bad = SparseOperator(
        op.adjoint().matrix.copy(), op.codomain_space, op.domain_space
    )
    bad.matrix[0, 0] += 1.0
    op._adjoint = None  # fresh operator object with a lying adjoint
    broken = SparseOperator(op.matrix, op.domain_space, op.codomain_space)
    broken._adjoint = bad
    with pytest.raises(BizooError):
        make_pair(broken)
    make_pair(op)  # the honest one passes


def test_kernel_discovery_dense_matches_svd():
    dom = build_domain("square", 5)
    cat = OperatorCatalog(dom)
    pair = make_pair(cat.hessian)
    basis = pair.kernel_basis("forward")
    assert len(basis) == 3
    # discovered basis spans the affine fields
    x, y = dom.cell_centers().T
    space = dom.cell_space
    for v in (np.ones_like(x), x, y):
        residual = v.copy()
        for b in basis:
            residual -= space.inner(b, residual) * b
        assert space.norm(residual) < 1e-10 * space.norm(v)


def test_harmonic_kernel_dimension_rank_nullity():
    # kernel of adjoint(A) has dim |C0| - |C1|: A is injective
    for shape, n in (("square", 6), ("lshape", 6), ("annulus", 8)):
        dom = build_domain(shape, n)
        cat = OperatorCatalog(dom)
        pair = make_pair(cat.interior_laplacian)
        assert pair.kernel_basis("forward") == []
        harmonics = pair.kernel_basis("adjoint")
        assert len(harmonics) == dom.n_cells - dom.ring_cells(1).size


def test_kernel_hint_gate():
    dom = build_domain("square", 4)
    cat = OperatorCatalog(dom)
    with pytest.raises(BizooError):
        pair = make_pair(cat.gradient, kernel_forward=[np.arange(16.0)])
        pair.kernel_basis("forward")
    ok = make_pair(cat.gradient, kernel_forward=[np.ones(16)])
    assert len(ok.kernel_basis("forward")) == 1


def test_best_constant_against_dense_eigenvalue():
    n = 8
    dom = build_domain("square", n)
    cat = OperatorCatalog(dom)
    pair = make_pair(cat.gradient_dirichlet, kernel_forward=())
    c = best_constant(pair)
    h = 1.0 / n
    lam1 = 2 * (2 - 2 * np.cos(np.pi * h)) / h**2
    assert c == pytest.approx(1.0 / np.sqrt(lam1), rel=1e-12)


def test_best_constant_swap_symmetry():
    dom = build_domain("square", 6)
    cat = OperatorCatalog(dom)
    pair = make_pair(cat.gradient_dirichlet, kernel_forward=())
    c = best_constant(pair, check_swapped=True)
    assert c > 0
    swapped = best_constant(pair.swapped())
    assert swapped == pytest.approx(c, rel=1e-8)


def test_swapped_pair_shares_hints():
    dom = build_domain("square", 5)
    cat = OperatorCatalog(dom)
    pair = make_pair(cat.gradient, kernel_forward=[np.ones(dom.n_cells)])
    sw = pair.swapped()
    assert len(sw.kernel_basis("adjoint")) == 1


def test_project_range_reproduces_dense_svd_projector():
    dom = build_domain("square", 6)
    cat = OperatorCatalog(dom)
    pair = make_pair(cat.interior_laplacian)
    g = Field(dom.cell_space, rng(1).normal(size=dom.n_cells))
    inside, rem = project_range(pair, g, SolverConfig(rel_tolerance=1e-13))
    # dense oracle: orthogonal projector onto range(A) in the weighted
    # metric; uniform weights make it the plain SVD projector
    A = cat.interior_laplacian.to_dense()
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    Ur = U[:, s > 1e-12 * s[0]]
    expect = Ur @ (Ur.T @ g.values)
    assert np.allclose(inside.values, expect, atol=1e-9)
    assert np.allclose(inside.values + rem.values, g.values, atol=1e-14)
    assert abs(dom.cell_space.inner(inside.values, rem.values)) < 1e-12
    # idempotence and symmetry through a second application
    again, _ = project_range(pair, inside, SolverConfig(rel_tolerance=1e-13))
    assert np.allclose(again.values, inside.values, atol=1e-9)


def test_reduced_solve_least_squares_and_min_norm():
    dom = build_domain("square", 5)
    cat = OperatorCatalog(dom)
    pair = make_pair(cat.interior_laplacian)
    A = cat.interior_laplacian.to_dense()
    g = rng(2).normal(size=dom.n_cells)
    lsq = reduced_solve(pair, "least_squares", Field(dom.cell_space, g),
                        SolverConfig(rel_tolerance=1e-13))
    expect = np.linalg.lstsq(A, g, rcond=None)[0]
    assert np.allclose(lsq.field.values, expect, atol=1e-9)

    ring = dom.ring_cells(1)
    b = rng(3).normal(size=ring.size)
    mn = reduced_solve(pair, "min_norm", Field(dom.ring_space(1), b),
                       SolverConfig(rel_tolerance=1e-13))
    expect = np.linalg.pinv(A.T) @ b
    assert np.allclose(mn.field.values, expect, atol=1e-9)
    with pytest.raises(ValueError):
        reduced_solve(pair, "backward", Field(dom.ring_space(1), b))


def test_reduced_solve_compat_gate():
    dom = build_domain("square", 5)
    cat = OperatorCatalog(dom)
    pair = make_pair(cat.gradient, kernel_forward=[np.ones(dom.n_cells)])
    with pytest.raises(CompatibilityError) as err:
        reduced_solve(pair, "normal", dom.cell_space.ones())
    assert err.value.subspace == "ker(forward)"


def test_helmholtz_square_has_no_cohomology():
    dom = build_domain("square", 8)
    cat = OperatorCatalog(dom)
    grad = make_pair(cat.gradient, kernel_forward=[dom.cell_space.ones()])
    curl = make_pair(cat.curl)
    g = Field(dom.edge_space, rng(4).normal(size=dom.edge_space.dim))
    split = helmholtz_decompose(grad, curl, g)
    assert split.dims["cohomology"] == 0
    assert split.dims["edges"] == dom.edge_space.dim
    assert split.reconstruction_error() < 1e-10 * g.norm()
    es = dom.edge_space
    for a, b in (
        (split.gradient_part, split.curl_part),
        (split.gradient_part, split.cohomology_part),
        (split.curl_part, split.cohomology_part),
    ):
        assert abs(es.inner(a.values, b.values)) < 1e-10 * g.norm() ** 2
    assert es.norm(split.cohomology_part.values) < 1e-8 * g.norm()


def test_helmholtz_annulus_carries_one_loop():
    dom = build_domain("annulus", 8)
    cat = OperatorCatalog(dom)
    grad = make_pair(cat.gradient, kernel_forward=[dom.cell_space.ones()])
    curl = make_pair(cat.curl)
    g = Field(dom.edge_space, rng(5).normal(size=dom.edge_space.dim))
    split = helmholtz_decompose(grad, curl, g)
    assert split.dims["cohomology"] == 1
    assert split.reconstruction_error() < 1e-10 * g.norm()
    # euler arithmetic: dims partition the edge space
    assert (
        split.dims["gradient"] + split.dims["cohomology"] + split.dims["curl"]
        == split.dims["edges"]
    )
    # the middle component is curl-free and divergence-free
    mid = split.cohomology_part
    assert cat.curl.codomain_space.norm(cat.curl.apply_raw(mid.values)) \
        < 1e-8 * g.norm()
    div = cat.gradient.adjoint()
    assert dom.cell_space.norm(div.apply_raw(mid.values)) < 1e-8 * g.norm()


def test_helmholtz_requires_complex_property():
    dom = build_domain("square", 5)
    cat = OperatorCatalog(dom)
    grad = make_pair(cat.gradient, kernel_forward=[dom.cell_space.ones()])
    # a fake "curl" that does not annihilate gradients
    fake = make_pair(
        SparseOperator(
            sp.csr_matrix(rng(6).normal(size=(3, dom.edge_space.dim))),
            dom.edge_space,
            DofSpace("V", 3, np.full(3, dom.h**2)),
        )
    )
    g = Field(dom.edge_space, rng(7).normal(size=dom.edge_space.dim))
    with pytest.raises(BizooError):
        helmholtz_decompose(grad, fake, g)


def test_helmholtz_dims_match_rank_arithmetic():
    # dense-SVD middle dimension equals the rank-arithmetic fallback
    for shape, n in (("square", 6), ("annulus", 8)):
        dom = build_domain(shape, n)
        cat = OperatorCatalog(dom)
        grad = make_pair(cat.gradient, kernel_forward=[dom.cell_space.ones()])
        curl = make_pair(cat.curl)
        g = Field(dom.edge_space, rng(8).normal(size=dom.edge_space.dim))
        split = helmholtz_decompose(grad, curl, g)
        fallback = (
            split.dims["edges"] - split.dims["gradient"] - split.dims["curl"]
        )
        assert split.dims["cohomology"] == fallback
        assert split.dims["cohomology"] == dom.n_holes
