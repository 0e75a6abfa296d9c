import numpy as np
import pytest
import scipy.sparse as sp

from bizoo import (
    BizooError,
    CompatibilityError,
    ConvergenceFailure,
    Field,
    SolverConfig,
    SparseOperator,
    SpaceMismatchError,
    build_domain,
    cg_solve,
    default_tolerance,
    deflated_cg_solve,
    identity_operator,
    normal_cg_solve,
    orthonormalize,
    smallest_eigenpairs,
)
from bizoo.grid import DofSpace


def rng(seed=0):
    return np.random.default_rng(seed)


def uniform_space(name, dim, w=1.0):
    return DofSpace(name, dim, np.full(dim, w))


def test_adjoint_uniform_weights_is_plain_transpose():
    a = uniform_space("a", 4, 0.25)
    b = uniform_space("b", 3, 0.25)
    mat = sp.csr_matrix(rng(1).normal(size=(3, 4)))
    op = SparseOperator(mat, a, b)
    adj = op.adjoint()
    assert np.array_equal(adj.to_dense(), mat.toarray().T)


def test_adjoint_identity_nonuniform_weights():
    dom = build_domain("square", 4)
    a = dom.cell_space
    b = dom.hessian_space  # mixed component carries weight 2
    mat = sp.csr_matrix(rng(2).normal(size=(b.dim, a.dim)))
    op = SparseOperator(mat, a, b)
    adj = op.adjoint()
    g = rng(3)
    for _ in range(5):
        u = g.normal(size=a.dim)
        v = g.normal(size=b.dim)
        lhs = b.inner(mat @ u, v)
        rhs = a.inner(u, adj.apply_raw(v))
        assert lhs == pytest.approx(rhs, rel=1e-13)


def test_adjoint_is_cached_involution():
    dom = build_domain("square", 3)
    op = identity_operator(dom.cell_space)
    assert op.adjoint().adjoint() is op


def test_shape_guard():
    a = uniform_space("a", 4)
    b = uniform_space("b", 3)
    with pytest.raises(SpaceMismatchError):
        SparseOperator(sp.identity(4), a, b)
    op = SparseOperator(sp.csr_matrix(np.ones((3, 4))), a, b)
    with pytest.raises(SpaceMismatchError):
        op.apply(Field(b, np.zeros(3)))
    with pytest.raises(SpaceMismatchError):
        op @ op


def test_cg_matches_dense_solve():
    space = uniform_space("s", 5, 0.3)
    m = rng(4).normal(size=(5, 5))
    spd = m @ m.T + 5 * np.eye(5)
    op = SparseOperator(sp.csr_matrix(spd), space, space)
    b = Field(space, rng(5).normal(size=5))
    res = cg_solve(op, b, SolverConfig(rel_tolerance=1e-13))
    exact = np.linalg.solve(spd, b.values)
    assert np.allclose(res.field.values, exact, atol=1e-11)
    assert res.residual_norm <= 1e-13 * b.norm()
    assert res.residual_history[0] == pytest.approx(b.norm())


def test_cg_iteration_budget_raises():
    dom = build_domain("square", 8)
    diag = sp.diags(np.linspace(1.0, 1e6, dom.n_cells))
    op = SparseOperator(diag, dom.cell_space, dom.cell_space)
    b = Field(dom.cell_space, rng(6).normal(size=dom.n_cells))
    with pytest.raises(ConvergenceFailure) as err:
        cg_solve(op, b, SolverConfig(rel_tolerance=1e-12, max_iterations=3))
    assert len(err.value.residual_history) >= 1


def test_cg_rejects_indefinite():
    space = uniform_space("s", 3)
    op = SparseOperator(sp.diags([1.0, -1.0, 2.0]), space, space)
    b = Field(space, np.array([0.0, 1.0, 0.0]))
    with pytest.raises(BizooError):
        cg_solve(op, b)


def test_deflated_cg_matches_pseudoinverse():
    # singular operator with known kernel: graph Laplacian of a path
    dim = 6
    space = uniform_space("s", dim, 0.5)
    lap = (
        np.diag(np.r_[1.0, np.full(dim - 2, 2.0), 1.0])
        - np.diag(np.ones(dim - 1), 1)
        - np.diag(np.ones(dim - 1), -1)
    )
    op = SparseOperator(sp.csr_matrix(lap), space, space)
    ones = np.ones(dim)
    b_vals = rng(7).normal(size=dim)
    b_vals -= b_vals.mean()  # compatible data
    res = deflated_cg_solve(op, Field(space, b_vals), [ones],
                            SolverConfig(rel_tolerance=1e-13))
    expect = np.linalg.pinv(lap) @ b_vals
    assert np.allclose(res.field.values, expect, atol=1e-11)
    assert abs(res.field.values.mean()) < 1e-13


def test_deflated_cg_compatibility_gate():
    dim = 5
    space = uniform_space("s", dim)
    lap = np.diag(np.full(dim, 2.0)) - np.diag(np.ones(dim - 1), 1) \
        - np.diag(np.ones(dim - 1), -1)
    lap[0, 0] = lap[-1, -1] = 1.0
    op = SparseOperator(sp.csr_matrix(lap), space, space)
    with pytest.raises(CompatibilityError) as err:
        deflated_cg_solve(op, Field(space, np.ones(dim)), [np.ones(dim)])
    assert err.value.defect > 0
    # tiny kernel components pass the gate and report the defect
    b = rng(8).normal(size=dim)
    b -= b.mean()
    b += 1e-12
    res = deflated_cg_solve(op, Field(space, b), [np.ones(dim)])
    assert 0 < res.compatibility_defect < 1e-10


def test_tolerance_env_override(monkeypatch):
    assert default_tolerance() == 1e-10
    monkeypatch.setenv("BIZOO_TOL", "1e-6")
    assert default_tolerance() == 1e-6
    assert SolverConfig().rel_tolerance == 1e-6


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(rel_tolerance=2.0)
    with pytest.raises(ValueError):
        SolverConfig(compat_tolerance=0.0)
    assert SolverConfig(max_iterations=7).iteration_budget(100) == 7
    assert SolverConfig().iteration_budget(100) == 2000


def test_normal_cg_least_squares():
    # overdetermined tall system, compare with lstsq
    dom_s = uniform_space("x", 3, 0.2)
    cod_s = uniform_space("y", 6, 0.2)
    mat = rng(9).normal(size=(6, 3))
    op = SparseOperator(sp.csr_matrix(mat), dom_s, cod_s)
    b = Field(cod_s, rng(10).normal(size=6))
    res = normal_cg_solve(op, b, "least_squares", SolverConfig(rel_tolerance=1e-13))
    expect = np.linalg.lstsq(mat, b.values, rcond=None)[0]
    assert np.allclose(res.field.values, expect, atol=1e-10)


def test_normal_cg_min_norm():
    # underdetermined through the adjoint: x = pinv(M*) b, x in range(M)
    dom_s = uniform_space("x", 6, 0.2)
    cod_s = uniform_space("y", 3, 0.2)
    mat = rng(11).normal(size=(3, 6))
    op = SparseOperator(sp.csr_matrix(mat.T), cod_s, dom_s)
    b = Field(cod_s, rng(12).normal(size=3))
    res = normal_cg_solve(op, b, "min_norm", SolverConfig(rel_tolerance=1e-13))
    expect = np.linalg.pinv(mat) @ b.values
    assert np.allclose(res.field.values, expect, atol=1e-10)
    with pytest.raises(ValueError):
        normal_cg_solve(op, b, "both")


def test_orthonormalize_drops_dependent():
    space = uniform_space("s", 4, 0.1)
    v1 = np.array([1.0, 0, 0, 0])
    basis = orthonormalize([v1, 2 * v1, np.array([1.0, 1, 0, 0])], space)
    assert len(basis) == 2
    for i, a in enumerate(basis):
        for j, b in enumerate(basis):
            assert space.inner(a, b) == pytest.approx(float(i == j), abs=1e-13)
    assert orthonormalize([np.zeros(4)], space) == []


def analytic_dirichlet_eigenvalue(n, k=1, m=1):
    # 1D second-difference eigenvalue with zero extension: (2-2cos(k pi h))/h^2
    h = 1.0 / n
    lam = lambda k_: (2 - 2 * np.cos(k_ * np.pi * h)) / h**2
    return lam(k) + lam(m)


def test_eigenpairs_dense_against_analytic():
    from bizoo import OperatorCatalog

    n = 8
    dom = build_domain("square", n)
    op = OperatorCatalog(dom).laplacian_dirichlet
    pairs = smallest_eigenpairs(op, 3)
    assert pairs[0][0] == pytest.approx(analytic_dirichlet_eigenvalue(n, 1, 1), rel=1e-12)
    assert pairs[1][0] == pytest.approx(analytic_dirichlet_eigenvalue(n, 2, 1), rel=1e-12)
    assert pairs[2][0] == pytest.approx(analytic_dirichlet_eigenvalue(n, 1, 2), rel=1e-12)
    lam, vec = pairs[0]
    assert vec.norm() == pytest.approx(1.0)
    assert op.apply(vec).values == pytest.approx(lam * vec.values, abs=1e-9)


def test_eigenpairs_sparse_path_matches_dense():
    from bizoo import OperatorCatalog

    n = 21  # 441 cells, above the dense cutoff of 400
    dom = build_domain("square", n)
    op = OperatorCatalog(dom).laplacian_dirichlet
    pairs = smallest_eigenpairs(op, 2)
    assert pairs[0][0] == pytest.approx(analytic_dirichlet_eigenvalue(n, 1, 1), rel=1e-10)
    assert pairs[1][0] == pytest.approx(analytic_dirichlet_eigenvalue(n, 2, 1), rel=1e-10)


def test_eigenpairs_kernel_filter_and_sign():
    from bizoo import OperatorCatalog

    n = 6
    dom = build_domain("square", n)
    op = OperatorCatalog(dom).laplacian_neumann
    ones = dom.cell_space.ones()
    pairs = smallest_eigenpairs(op, 1, kernel_basis=[ones])
    lam, vec = pairs[0]
    # first nonzero Neumann eigenvalue: 1D mode (1, 0)
    h = 1.0 / n
    assert lam == pytest.approx((2 - 2 * np.cos(np.pi * h)) / h**2, rel=1e-12)
    assert abs(dom.cell_space.inner(vec.values, ones.values)) < 1e-12
    assert vec.values[int(np.argmax(np.abs(vec.values)))] > 0
    with pytest.raises(ValueError):
        smallest_eigenpairs(op, dom.n_cells, kernel_basis=[ones])


def test_operator_dump_and_triplets(tmp_path):
    dom = build_domain("square", 2)
    op = identity_operator(dom.cell_space)
    trips = list(op.triplets())
    assert trips == [(k, k, 1.0) for k in range(4)]
    path = tmp_path / "op.txt"
    op.dump(path)
    lines = path.read_text().splitlines()
    assert lines[1] == "row,col,value"
    assert len(lines) == 2 + 4
