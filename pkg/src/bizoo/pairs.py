"""Adjoint pairs of sparse operators: kernels, projections, best constants.

A DualPair bundles an operator with its weighted adjoint and lazily
discovered kernel bases.  Laziness matters: several pairs in this package
have one huge kernel (for example the divergence side of the gradient
pair), and the solves routed through a pair only ever touch the small one.
"""

from __future__ import annotations

import numpy as np

from .errors import BizooError, CompatibilityError
from .grid import Field
from .linalg import (
    DENSE_EIG_LIMIT,
    KrylovResult,
    SolverConfig,
    SparseOperator,
    orthonormalize,
    smallest_eigenpairs,
    _project_out,
    _run_cg,
)

_KERNEL_BATCH = 8


class DualPair:
    """An operator, its adjoint, and the four-subspace bookkeeping."""

    def __init__(self, forward: SparseOperator, kernel_forward=None,
                 kernel_adjoint=None):
        self.forward = forward
        self.adjoint = forward.adjoint()
        self._kernel_hints = {"forward": kernel_forward, "adjoint": kernel_adjoint}
        self._kernels = {}
        self._normals = {}
        self._constant = None

    def normal(self, side: str = "forward") -> SparseOperator:
        """adjoint(A) A for the forward side, A adjoint(A) for the other."""
        if side not in self._normals:
            if side == "forward":
                self._normals[side] = self.adjoint @ self.forward
            elif side == "adjoint":
                self._normals[side] = self.forward @ self.adjoint
            else:
                raise ValueError(f"side must be 'forward' or 'adjoint', got {side!r}")
        return self._normals[side]

    def kernel_basis(self, side: str = "forward"):
        """Weighted-orthonormal kernel basis of the given side, lazy."""
        if side not in self._kernels:
            op = self.forward if side == "forward" else self.adjoint
            self._kernels[side] = _discover_kernel(
                op, self.normal(side), self._kernel_hints.get(side)
            )
        return self._kernels[side]

    def swapped(self) -> "DualPair":
        pair = DualPair(self.adjoint)
        pair._kernel_hints = {
            "forward": self._kernel_hints.get("adjoint"),
            "adjoint": self._kernel_hints.get("forward"),
        }
        return pair


def make_pair(forward: SparseOperator, kernel_forward=None,
              kernel_adjoint=None, probes: int = 3) -> DualPair:
    """Build a DualPair, spot-checking the adjoint identity on random probes."""
    pair = DualPair(forward, kernel_forward, kernel_adjoint)
    rng = np.random.default_rng(7)
    dom, cod = forward.domain_space, forward.codomain_space
    for _ in range(probes):
        u = rng.standard_normal(dom.dim)
        v = rng.standard_normal(cod.dim)
        lhs = cod.inner(forward.apply_raw(u), v)
        rhs = dom.inner(u, pair.adjoint.apply_raw(v))
        scale = max(abs(lhs), abs(rhs), 1e-30)
        if abs(lhs - rhs) > 1e-12 * scale:
            raise BizooError(
                f"adjoint identity violated: {lhs!r} vs {rhs!r}"
            )
    return pair


def _gershgorin_bound(op: SparseOperator) -> float:
    m = op.matrix
    return float(np.abs(m).sum(axis=1).max()) if m.shape[0] else 0.0


def _discover_kernel(op: SparseOperator, normal: SparseOperator, hint):
    space = op.domain_space
    if hint is not None:
        basis = orthonormalize(hint, space)
        gate = 1e-8 * max(_gershgorin_bound(op), 1e-30)
        for b in basis:
            if op.codomain_space.norm(op.apply_raw(b)) > gate:
                raise BizooError("supplied kernel hint is not annihilated")
        return basis
    if space.dim <= DENSE_EIG_LIMIT:
        dense = op.to_dense() * np.sqrt(op.codomain_space.weights)[:, None]
        dense = dense / np.sqrt(space.weights)[None, :]
        _, svals, vt = np.linalg.svd(dense, full_matrices=True)
        smax = svals[0] if svals.size else 0.0
        null = [
            vt[r] / np.sqrt(space.weights)
            for r in range(vt.shape[0])
            if r >= svals.size or svals[r] <= 1e-10 * max(smax, 1e-30)
        ]
        return orthonormalize(null, space)
    # large space, no hint: look for a small kernel among the lowest
    # eigenpairs of the normal operator
    bound = _gershgorin_bound(normal)
    batch = min(_KERNEL_BATCH, space.dim - 1)
    pairs = smallest_eigenpairs(normal, batch)
    basis = [f.values for lam, f in pairs if lam <= 1e-10 * max(bound, 1e-30)]
    if len(basis) == batch:
        raise BizooError(
            "kernel appears larger than the discovery batch; pass an "
            "explicit basis"
        )
    return orthonormalize(basis, space)


def best_constant(pair: DualPair, check_swapped: bool = False,
                  cfg: SolverConfig | None = None) -> float:
    """1 / sqrt of the smallest nonzero eigenvalue of the normal operator.

    This is the best constant c in |u| <= c |A u| for u orthogonal to the
    kernel.  With check_swapped=True the same number is recomputed from
    the swapped pair and both must agree to 1e-8 relative; that route
    materializes the adjoint-side kernel, so keep it to modest sizes.
    """
    if pair._constant is None:
        kernel = pair.kernel_basis("forward")
        lam = smallest_eigenpairs(pair.normal("forward"), 1, kernel, cfg)[0][0]
        if lam <= 0:
            raise BizooError("normal operator has no positive spectrum")
        pair._constant = 1.0 / np.sqrt(lam)
    if check_swapped:
        other = best_constant(pair.swapped(), False, cfg)
        if abs(other - pair._constant) > 1e-8 * pair._constant:
            raise BizooError(
                f"best-constant swap symmetry violated: {pair._constant!r} "
                f"vs {other!r}"
            )
    return pair._constant


def project_range(pair: DualPair, g: Field, cfg: SolverConfig | None = None):
    """Split g into its range(A) component and the orthogonal remainder."""
    cfg = cfg or SolverConfig()
    if not g.space.compatible(pair.forward.codomain_space):
        raise BizooError("projection data must live in the codomain")
    rhs = pair.adjoint.apply_raw(g.values)
    kernel = pair.kernel_basis("forward")
    x, _, _, _ = _run_cg(pair.normal("forward"), rhs, cfg, kernel, "range projection")
    inside = Field(g.space, pair.forward.apply_raw(x))
    return inside, g - inside


def reduced_solve(pair: DualPair, task: str, rhs: Field,
                  cfg: SolverConfig | None = None) -> KrylovResult:
    """Solve one of the canonical subproblems a dual pair carries.

    task "least_squares":  min |A x - rhs| with x orthogonal to ker(A);
    task "min_norm":       A* y = rhs with y in range(A), rhs checked
                           against ker(A) (the compatibility gate);
    task "normal":         (A* A) x = rhs with the same gate.

    Each result's bound |x| <= c^2 |rhs| (or |x| <= c |rhs| for the
    least-squares task measured through A) is a spectral fact of the pair;
    callers can verify it against best_constant.
    """
    cfg = cfg or SolverConfig()
    kernel = pair.kernel_basis("forward")
    space = pair.forward.domain_space
    if task == "least_squares":
        if not rhs.space.compatible(pair.forward.codomain_space):
            raise BizooError("least_squares data must live in the codomain")
        b = pair.adjoint.apply_raw(rhs.values)
        x, it, hist, _ = _run_cg(pair.normal("forward"), b, cfg, kernel, "reduced lsq")
        res = pair.forward.codomain_space.norm(
            pair.forward.apply_raw(x) - rhs.values
        )
        return KrylovResult(Field(space, x), it, res, 0.0, hist)
    if task in ("min_norm", "normal"):
        if not rhs.space.compatible(space):
            raise BizooError(f"{task} data must live in the domain space")
        bnorm = rhs.norm()
        projected = _project_out(space, rhs.values.copy(), kernel)
        defect = space.norm(rhs.values - projected)
        if bnorm > 0 and defect > cfg.compat_tolerance * bnorm:
            raise CompatibilityError(
                f"data has a kernel component of relative size "
                f"{defect / bnorm:.3e}",
                defect=defect,
                subspace="ker(forward)",
            )
        x, it, hist, res = _run_cg(
            pair.normal("forward"), projected, cfg, kernel, f"reduced {task}"
        )
        if task == "normal":
            return KrylovResult(Field(space, x), it, res, defect, hist)
        y = pair.forward.apply_raw(x)
        out = Field(pair.forward.codomain_space, y)
        res = space.norm(pair.adjoint.apply_raw(y) - rhs.values)
        return KrylovResult(out, it, res, defect, hist)
    raise ValueError(f"unknown reduced task {task!r}")


class HelmholtzSplit:
    """Three-way orthogonal split of an edge field."""

    def __init__(self, input, gradient_part, cohomology_part, curl_part, dims):
        self.input = input
        self.gradient_part = gradient_part
        self.cohomology_part = cohomology_part
        self.curl_part = curl_part
        self.dims = dims

    def reconstruction_error(self) -> float:
        total = (
            self.gradient_part.values
            + self.cohomology_part.values
            + self.curl_part.values
        )
        return self.input.space.norm(self.input.values - total)


def helmholtz_decompose(grad_pair: DualPair, curl_pair: DualPair, g: Field,
                        cfg: SolverConfig | None = None) -> HelmholtzSplit:
    """Split an edge field into gradient, cohomology, and curl-adjoint parts.

    Requires the complex property curl after gradient = 0, which is checked
    on entry.  The middle dimension is the nullspace of the stacked
    operator [curl; divergence] (dense up to 600 edges; above that it falls
    back to rank arithmetic, which is equivalent once the ranges are
    orthogonal).
    """
    cfg = cfg or SolverConfig()
    edge_space = g.space
    if not edge_space.compatible(grad_pair.forward.codomain_space):
        raise BizooError("field must live on the gradient codomain")
    if not edge_space.compatible(curl_pair.forward.domain_space):
        raise BizooError("field must live on the curl domain")
    composed = curl_pair.forward.matrix @ grad_pair.forward.matrix
    composed.eliminate_zeros()
    if composed.nnz and np.abs(composed.data).max() > 1e-12 * _gershgorin_bound(
        curl_pair.forward
    ) * _gershgorin_bound(grad_pair.forward):
        raise BizooError("curl after gradient does not vanish on this mesh")

    inside, _ = project_range(grad_pair, g, cfg)
    co_pair = curl_pair.swapped()  # forward = curl adjoint, vertices side
    rhs = Field(
        curl_pair.forward.codomain_space, curl_pair.forward.apply_raw(g.values)
    )
    # conormal solve: (curl curl*) y = curl g, then curl* y
    kernel = co_pair.kernel_basis("forward")
    y, _, _, _ = _run_cg(
        co_pair.normal("forward"), rhs.values, cfg, kernel, "curl corange"
    )
    curl_part = Field(edge_space, co_pair.forward.apply_raw(y))
    middle = Field(
        edge_space, g.values - inside.values - curl_part.values
    )

    n_edges = edge_space.dim
    rank_grad = grad_pair.forward.domain_space.dim - len(
        grad_pair.kernel_basis("forward")
    )
    rank_curl = curl_pair.forward.codomain_space.dim - len(
        curl_pair.kernel_basis("adjoint")
    )
    if n_edges <= 600:
        stacked = np.vstack(
            [curl_pair.forward.to_dense(), grad_pair.adjoint.to_dense()]
        )
        svals = np.linalg.svd(stacked, compute_uv=False)
        smax = svals[0] if svals.size else 0.0
        rank = int((svals > 1e-10 * max(smax, 1e-30)).sum())
        dim_middle = n_edges - rank
    else:
        dim_middle = n_edges - rank_grad - rank_curl
    dims = {
        "gradient": rank_grad,
        "cohomology": dim_middle,
        "curl": rank_curl,
        "edges": n_edges,
    }
    return HelmholtzSplit(g, inside, middle, curl_part, dims)
