"""The sixteen formal compositions of two Laplacian inverses.

Thirteen are well posed (eleven two-stage ones plus the doubly
constrained and unconstrained bilaplacians), five orderings are refused
with an explanation.  Exchange identities relate the classical inverses
through the interior stencil.
"""

import numpy as np

from bizoo import (
    Field,
    ForbiddenCompositionError,
    OperatorCatalog,
    build_domain,
    classify_zoo,
    exchange_identity_check,
    solve_zoo,
)

for row in classify_zoo():
    mark = "ok " if row["status"] == "well-posed" else "NO "
    alias = f" ({row['aliases'][0]})" if row["aliases"] else ""
    print(f"{mark} {row['label'] + alias:<22} {row['composition']:<28} "
          f"{row['data_space']}")

domain = build_domain("square", 16)
catalog = OperatorCatalog(domain)
space = domain.cell_space
rng = np.random.default_rng(42)

# data in the interior stencil's range is admissible for every member
f = Field(space, catalog.interior_laplacian.apply_raw(
    rng.normal(size=domain.ring_cells(1).size)))

print("\nsolving three classical members on the same data:")
for name in ("dirichlet", "neumann", "navier"):
    rep = solve_zoo(name, catalog, f)
    print(f"  {name:<10} ({rep.problem})  pde residual "
          f"{rep.pde_residual_norm:.1e}, {rep.iterations} iterations, "
          f"{rep.wall_time_ms:.0f} ms")

print("\nattempting a forbidden ordering:")
try:
    solve_zoo("d_n", catalog, f)
except ForbiddenCompositionError as exc:
    print(f"  refused: {exc}")

devs = exchange_identity_check(catalog, f)
print("\nexchange identities on range data (deviations):")
for key in ("neumann_via_dirichlet", "dirichlet_via_neumann",
            "dirichlet_via_neumann_free", "mixed_second_order"):
    print(f"  {key:<28} {devs[key]:.2e}")
