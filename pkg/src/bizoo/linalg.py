"""Typed sparse operators and Krylov solvers over weighted DOF spaces.

All inner products, norms, adjoints, and convergence targets here are taken
with respect to the diagonal weights of the DOF spaces involved, never the
plain Euclidean ones.  Dense eigensolvers take over below 400 unknowns;
above that ARPACK shift-invert is used.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field as _dc_field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    BizooError,
    CompatibilityError,
    ConvergenceFailure,
    SpaceMismatchError,
)
from .grid import DofSpace, Field

DENSE_EIG_LIMIT = 400
_REORTH_THRESHOLD = 1e-8


def default_tolerance() -> float:
    """Relative solver tolerance; the BIZOO_TOL env var overrides 1e-10."""
    return float(os.environ.get("BIZOO_TOL", "1e-10"))


@dataclass
class SolverConfig:
    rel_tolerance: float | None = None
    max_iterations: int | None = None
    compat_tolerance: float = 1e-8

    def __post_init__(self):
        if self.rel_tolerance is None:
            self.rel_tolerance = default_tolerance()
        if not 0 < self.rel_tolerance < 1:
            raise ValueError("rel_tolerance must lie in (0, 1)")
        if not 0 < self.compat_tolerance < 1:
            raise ValueError("compat_tolerance must lie in (0, 1)")

    def iteration_budget(self, dim: int) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return 20 * max(dim, 1)


@dataclass
class KrylovResult:
    """Solution field plus the diagnostics every report needs."""

    field: Field
    iterations: int
    residual_norm: float
    compatibility_defect: float = 0.0
    residual_history: list = _dc_field(default_factory=list)


class SparseOperator:
    """Sparse matrix tagged with weighted domain and codomain spaces.

    adjoint() returns the weighted transpose M* with
    <M u, v>_cod = <u, M* v>_dom for all u, v; adjoint is an involution
    (the back link is cached so adjoint(adjoint(M)) is M itself).
    """

    def __init__(self, matrix, domain_space: DofSpace, codomain_space: DofSpace):
        m = sp.csr_matrix(matrix)
        if m.shape != (codomain_space.dim, domain_space.dim):
            raise SpaceMismatchError(
                f"matrix shape {m.shape} does not map "
                f"{domain_space.name} (dim {domain_space.dim}) to "
                f"{codomain_space.name} (dim {codomain_space.dim})"
            )
        self.matrix = m
        self.domain_space = domain_space
        self.codomain_space = codomain_space
        self._adjoint = None

    @property
    def shape(self):
        return self.matrix.shape

    def apply(self, f: Field) -> Field:
        if not f.space.compatible(self.domain_space):
            raise SpaceMismatchError(
                f"operator on {self.domain_space.name} applied to a field "
                f"on {f.space.name}"
            )
        return Field(self.codomain_space, self.matrix @ f.values)

    def apply_raw(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values

    def adjoint(self) -> "SparseOperator":
        if self._adjoint is None:
            wd = self.domain_space.weights
            wc = self.codomain_space.weights
            du = wd[0] if wd.size and np.all(wd == wd[0]) else None
            cu = wc[0] if wc.size and np.all(wc == wc[0]) else None
            if du is not None and cu is not None:
                # uniform weights: plain transpose, scaled once; exact when
                # the scalars agree
                mat = self.matrix.T if du == cu else (cu / du) * self.matrix.T
            else:
                mat = sp.diags(1.0 / wd) @ self.matrix.T @ sp.diags(wc)
            adj = SparseOperator(mat.tocsr(), self.codomain_space, self.domain_space)
            adj._adjoint = self
            self._adjoint = adj
        return self._adjoint

    def compose(self, inner: "SparseOperator") -> "SparseOperator":
        """self after inner; requires codomain(inner) == domain(self)."""
        if not inner.codomain_space.compatible(self.domain_space):
            raise SpaceMismatchError(
                f"cannot compose: inner codomain {inner.codomain_space.name} "
                f"!= outer domain {self.domain_space.name}"
            )
        return SparseOperator(
            (self.matrix @ inner.matrix).tocsr(),
            inner.domain_space,
            self.codomain_space,
        )

    def __matmul__(self, other):
        if isinstance(other, Field):
            return self.apply(other)
        if isinstance(other, SparseOperator):
            return self.compose(other)
        return NotImplemented

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        if not (
            other.domain_space.compatible(self.domain_space)
            and other.codomain_space.compatible(self.codomain_space)
        ):
            raise SpaceMismatchError("adding operators between different spaces")
        return SparseOperator(
            (self.matrix + other.matrix).tocsr(), self.domain_space, self.codomain_space
        )

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def triplets(self):
        coo = self.matrix.tocoo()
        return zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())

    def dump(self, path) -> None:
        """Coordinate-triplet text dump with a space-naming header."""
        with open(path, "w") as fh:
            fh.write(
                f"# operator: {self.codomain_space.name} x {self.domain_space.name} "
                f"({self.shape[0]} x {self.shape[1]})\n"
            )
            fh.write("row,col,value\n")
            for r, c, v in self.triplets():
                fh.write(f"{r},{c},{v:.17g}\n")


def identity_operator(space: DofSpace) -> SparseOperator:
    return SparseOperator(sp.identity(space.dim, format="csr"), space, space)


def orthonormalize(vectors, space: DofSpace, drop_tol: float = 1e-12):
    """Weighted modified Gram-Schmidt with one re-orthogonalization pass.

    Vectors whose norm collapses below drop_tol (relative) after
    re-orthogonalization are dropped as linearly dependent.
    """
    basis = []
    for vec in vectors:
        v = np.asarray(vec.values if isinstance(vec, Field) else vec, dtype=float).copy()
        original = space.norm(v)
        if original == 0.0:
            continue
        for _ in range(2):
            for b in basis:
                v -= space.inner(b, v) * b
            nrm = space.norm(v)
            if nrm > _REORTH_THRESHOLD * original:
                break
        nrm = space.norm(v)
        if nrm <= drop_tol * original:
            continue
        basis.append(v / nrm)
    return basis


def _project_out(space: DofSpace, v: np.ndarray, basis) -> np.ndarray:
    for b in basis:
        v = v - space.inner(b, v) * b
    return v


def _run_cg(op: SparseOperator, b: np.ndarray, cfg: SolverConfig, basis, name: str):
    """Weighted CG on op x = b, optionally deflated by an orthonormal basis.

    Returns (x, iterations, history, residual_norm).  The recurrence
    residual is re-checked against the true one before accepting
    convergence; on drift the recursion restarts from the current iterate.
    """
    space = op.domain_space
    w = space.weights

    def dot(u, v):
        return float(np.dot(w * u, v))

    target = cfg.rel_tolerance * math.sqrt(max(dot(b, b), 0.0))
    x = np.zeros_like(b)
    r = b.copy()
    if basis:
        r = _project_out(space, r, basis)
    rs = dot(r, r)
    history = [math.sqrt(rs)]
    p = r.copy()
    budget = cfg.iteration_budget(space.dim)
    iterations = 0
    while math.sqrt(rs) > target:
        if iterations >= budget:
            raise ConvergenceFailure(
                f"{name}: no convergence in {budget} iterations "
                f"(residual {math.sqrt(rs):.3e}, target {target:.3e})",
                residual_history=history,
            )
        q = op.apply_raw(p)
        if basis:
            q = _project_out(space, q, basis)
        pq = dot(p, q)
        if pq <= 0.0:
            raise BizooError(
                f"{name}: operator is not positive definite on the search space "
                f"(p.Ap = {pq:.3e})"
            )
        alpha = rs / pq
        x += alpha * p
        r -= alpha * q
        rs_new = dot(r, r)
        iterations += 1
        history.append(math.sqrt(rs_new))
        if math.sqrt(rs_new) <= target:
            # recurrence said done; confirm with the true residual
            true_r = b - op.apply_raw(x)
            if basis:
                true_r = _project_out(space, true_r, basis)
            true_rs = dot(true_r, true_r)
            if math.sqrt(true_rs) <= target or target == 0.0:
                r, rs = true_r, true_rs
                history[-1] = math.sqrt(true_rs)
                break
            r, rs = true_r, true_rs
            p = r.copy()
            continue
        beta = rs_new / rs
        rs = rs_new
        p = r + beta * p
    if basis:
        x = _project_out(space, x, basis)
    return x, iterations, history, math.sqrt(rs)


def cg_solve(op: SparseOperator, b: Field, cfg: SolverConfig | None = None) -> KrylovResult:
    """CG for a selfadjoint positive definite operator on its own space."""
    if not op.domain_space.compatible(op.codomain_space):
        raise SpaceMismatchError("cg_solve needs an endomorphism")
    if not b.space.compatible(op.domain_space):
        raise SpaceMismatchError("right-hand side lives in the wrong space")
    cfg = cfg or SolverConfig()
    x, it, hist, res = _run_cg(op, b.values.copy(), cfg, [], "cg")
    return KrylovResult(Field(op.domain_space, x), it, res, 0.0, hist)


def deflated_cg_solve(
    op: SparseOperator,
    b: Field,
    kernel_basis,
    cfg: SolverConfig | None = None,
) -> KrylovResult:
    """CG for a selfadjoint PSD operator with known kernel.

    The right-hand side must be orthogonal to the kernel up to
    compat_tolerance (relative); the returned solution is orthogonal to
    the kernel and the projection defect is reported.
    """
    if not op.domain_space.compatible(op.codomain_space):
        raise SpaceMismatchError("deflated_cg_solve needs an endomorphism")
    if not b.space.compatible(op.domain_space):
        raise SpaceMismatchError("right-hand side lives in the wrong space")
    cfg = cfg or SolverConfig()
    space = op.domain_space
    basis = orthonormalize(kernel_basis, space)
    bnorm = b.norm()
    projected = _project_out(space, b.values.copy(), basis)
    defect = space.norm(b.values - projected)
    if defect > cfg.compat_tolerance * bnorm:
        raise CompatibilityError(
            f"right-hand side has a kernel component of relative size "
            f"{defect / bnorm:.3e} (gate {cfg.compat_tolerance:.1e})",
            defect=defect,
            subspace="solver kernel",
        )
    x, it, hist, res = _run_cg(op, projected, cfg, basis, "deflated cg")
    return KrylovResult(Field(space, x), it, res, defect, hist)


def normal_cg_solve(
    op: SparseOperator,
    b: Field,
    side: str = "least_squares",
    cfg: SolverConfig | None = None,
) -> KrylovResult:
    """Least-squares or minimum-norm solve through the normal equations.

    side "least_squares": b in the codomain; returns argmin |op x - b|,
    requires injective op.  side "min_norm": b in the domain space;
    returns the minimum-norm solution of adjoint(op) x = b, x in
    range(op), requires surjective adjoint.
    """
    cfg = cfg or SolverConfig()
    normal = op.adjoint() @ op
    if side == "least_squares":
        if not b.space.compatible(op.codomain_space):
            raise SpaceMismatchError("least_squares data must live in the codomain")
        rhs = op.adjoint().apply(b)
        x, it, hist, _ = _run_cg(normal, rhs.values, cfg, [], "normal cg")
        sol = Field(op.domain_space, x)
        res = op.codomain_space.norm(op.apply_raw(x) - b.values)
        return KrylovResult(sol, it, res, 0.0, hist)
    if side == "min_norm":
        if not b.space.compatible(op.domain_space):
            raise SpaceMismatchError("min_norm data must live in the domain space")
        y, it, hist, _ = _run_cg(normal, b.values.copy(), cfg, [], "normal cg")
        x = op.apply_raw(y)
        sol = Field(op.codomain_space, x)
        res = op.domain_space.norm(op.adjoint().apply_raw(x) - b.values)
        return KrylovResult(sol, it, res, 0.0, hist)
    raise ValueError(f"side must be 'least_squares' or 'min_norm', got {side!r}")


# -- eigenpairs -----------------------------------------------------------------

def _sym_dense(op: SparseOperator) -> np.ndarray:
    """Plain-symmetric dense matrix similar to op via W^(1/2) conjugation."""
    w = op.domain_space.weights
    s = np.sqrt(w)
    dense = op.to_dense()
    sym = (s[:, None] * dense) / s[None, :]
    return 0.5 * (sym + sym.T)


def _sym_sparse(op: SparseOperator) -> sp.csr_matrix:
    w = op.domain_space.weights
    s = np.sqrt(w)
    return (sp.diags(s) @ op.matrix @ sp.diags(1.0 / s)).tocsr()


def smallest_eigenpairs(
    op: SparseOperator,
    count: int,
    kernel_basis=None,
    cfg: SolverConfig | None = None,
):
    """Smallest eigenpairs of a selfadjoint PSD endomorphism.

    With a kernel basis supplied, eigenpairs aligned with the kernel are
    filtered out and the count refers to the remaining spectrum.
    Eigenvectors come back weighted-orthonormal with the
    largest-magnitude entry positive; each satisfies
    |op v - lambda v| <= tol * max(lambda, eps-floor).
    """
    if not op.domain_space.compatible(op.codomain_space):
        raise SpaceMismatchError("eigensolve needs an endomorphism")
    cfg = cfg or SolverConfig()
    space = op.domain_space
    dim = space.dim
    basis = orthonormalize(kernel_basis or [], space)
    if count + len(basis) > dim:
        raise ValueError(
            f"requested {count} eigenpairs plus {len(basis)} kernel vectors "
            f"exceeds dimension {dim}"
        )
    s = np.sqrt(space.weights)
    kernel_t = [s * b for b in basis]  # plain-orthonormal in the similar problem

    if dim <= DENSE_EIG_LIMIT:
        sym = _sym_dense(op)
        vals, vecs = np.linalg.eigh(sym)
        order = np.argsort(vals)
        pairs = []
        for idx in order:
            q = vecs[:, idx]
            if kernel_t and sum(float(np.dot(k, q)) ** 2 for k in kernel_t) > 0.25:
                continue
            pairs.append((float(vals[idx]), q))
            if len(pairs) == count:
                break
    else:
        sym = _sym_sparse(op)
        k = count + len(kernel_t)
        # deterministic generic start vector; ARPACK default is random
        rng = np.random.default_rng(180)
        v0 = rng.standard_normal(dim)
        sigma = -max(1e-3 * float(sym.diagonal().mean()), 1e-12)
        vals, vecs = spla.eigsh(sym, k=k, sigma=sigma, which="LM", v0=v0)
        order = np.argsort(vals)
        pairs = []
        for idx in order:
            q = vecs[:, idx]
            q = q / np.linalg.norm(q)
            if kernel_t and sum(float(np.dot(kv, q)) ** 2 for kv in kernel_t) > 0.25:
                continue
            pairs.append((float(vals[idx]), q))
            if len(pairs) == count:
                break
    if len(pairs) < count:
        raise BizooError("eigensolver returned fewer usable pairs than requested")

    scale = float(np.abs(sym.diagonal()).max()) if dim else 1.0
    results = []
    for lam, q in pairs:
        v = q / s
        v = v / space.norm(v)
        peak = int(np.argmax(np.abs(v)))
        if v[peak] < 0:
            v = -v
        residual = space.norm(op.apply_raw(v) - lam * v)
        gate = max(cfg.rel_tolerance * abs(lam), 1e-11 * scale)
        if residual > gate:
            raise BizooError(
                f"eigenpair residual {residual:.3e} exceeds gate {gate:.3e} "
                f"for eigenvalue {lam:.6e}"
            )
        results.append((max(lam, 0.0), Field(space, v)))
    return results
