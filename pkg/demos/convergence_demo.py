"""Convergence of the full element on a smooth manufactured solution.

Solves on the Alfeld split of n x n x n cubes, prints the error table with
observed rates, and checks that the discrete stress is closer to the
canonical interpolant than the exact stress is.  Pass larger levels on the
command line for a longer run (level 8 needs about 3 GB).

    python3 demos/convergence_demo.py 1 2 4
"""
import sys

from alfeld_elast.materials import ComplianceTensor
from alfeld_elast.study import StudyConfig, convergence_study

levels = [int(a) for a in sys.argv[1:]] or [1, 2, 4]
material = ComplianceTensor.from_young(1.0, 0.3)
report = convergence_study(StudyConfig("jkm", levels, material, postprocess=True),
                           log=lambda m: print("  ", m))

cols = ("err_sigma_A", "err_u_L2", "err_Pu_L2", "err_ustar_L2")
print("\n   n  " + "  ".join(f"{c:>13s}" for c in cols))
for r in report.rows:
    print(f"{r['n']:4d}  " + "  ".join(f"{r[c]:13.4e}" for c in cols))
print("rates " + "  ".join(f"{c}: " + ", ".join(f"{v:.2f}" for v in report.rates(c)) for c in cols))

print("\nstress error of the solution vs the interpolant (the first never exceeds the second)")
for r in report.rows:
    print(f"  n={r['n']}: |Pi s - s_h|_A = {r['err_Pi_sigma_A']:.3e}   "
          f"|Pi s - s|_A = {r['err_sigma_Pi_A']:.3e}")
