"""Weak symmetry against the strongly symmetric methods.

Imposing symmetry through a rotation multiplier with BDM1 stress rows gives
the same stress as the strongly symmetric p0 method, and its displacement
projected onto the macro-cell P1 space matches the full method.  The scale
of the skew part of the compliance does not matter, which is checked by
doubling it.  The comparison is repeated close to incompressibility.

    python3 demos/weak_symmetry_demo.py
"""
from alfeld_elast.materials import ComplianceTensor, trig_case
from alfeld_elast.mesh import alfeld_split, generate_cube_mesh
from alfeld_elast.methods import equivalence_check

for n, nu in ((1, 0.3), (2, 0.3), (2, 0.49)):
    material = ComplianceTensor.from_young(1.0, nu)
    cx = alfeld_split(generate_cube_mesh(n))
    rep = equivalence_check(cx, material, trig_case(material).f, alphas=(1.0, 2.0))
    print(f"n={n} nu={nu}: {rep['status']}, worst relative discrepancy {rep['worst']:.1e}")
    for e in rep["entries"]:
        print(f"    {e['pair']:16s} skew scale {e['alpha']:.0f}: stress {e['stress']:.1e}, "
              f"displacement {e['displacement']:.1e}")
