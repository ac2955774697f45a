"""A short tour of the structural checks behind the element.

Counts the local stress space in exact arithmetic, shows that the degrees of
freedom determine it on random tetrahedra, and that the global interpolants
commute with the divergence on a small cube mesh.

    python3 demos/verification_tour.py
"""
from alfeld_elast.mesh import alfeld_split, generate_cube_mesh
from alfeld_elast.verification import (
    check_bgg, check_commuting, check_dimension_formula, check_kernel_trivial,
    check_unisolvency, exact_local_dimension,
)

print("local stress spaces on the reference tetrahedron (exact rank over the rationals)")
for variant in ("full", "reduced", "reduced2"):
    dim, rank = exact_local_dimension(variant)
    print(f"  {variant:9s} dimension {dim}, DOF matrix rank {rank}")

print("\nunisolvency on 100 random tetrahedra (smallest normalized singular value)")
for variant in ("full", "reduced", "reduced2"):
    r = check_unisolvency(variant, ntrials=100, seed=0)
    print(f"  {variant:9s} {r.value:.2e}")

print("\nthe same construction in other dimensions")
for ndim in (2, 3, 4):
    k, d = check_kernel_trivial(ndim), check_dimension_formula(ndim)
    print(f"  N={ndim}: dimension {int(d.value)}, kernel nullity {k.details['nullity']}")

print("\npolynomial identities of the complex, worst coefficient gap over 200 random fields")
for ndim in (2, 3, 4):
    print(f"  N={ndim}: {check_bgg(ndim, ntrials=200).value:.1e}")

print("\ncommuting diagrams on the Alfeld split of a 2x2x2 cube")
r = check_commuting(alfeld_split(generate_cube_mesh(2)), ntrials=10, seed=0)
for k, v in r.details.items():
    if isinstance(v, float) and k != "seconds":
        print(f"  {k:9s} {v:.1e}")
