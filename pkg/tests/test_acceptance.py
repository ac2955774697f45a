"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Rates "on levels 2,4,8" are gated on the finest pair (4 -> 8); both pair rates
are printed.  Thresholds are the ones stated for each criterion.
"""
import gc
import time

import numpy as np

from alfeld_elast import tensor_calculus as tc
from alfeld_elast.materials import ComplianceTensor, trig_case
from alfeld_elast.mesh import alfeld_split, generate_cube_mesh
from alfeld_elast.methods import equivalence_check
from alfeld_elast.study import StudyConfig, convergence_study, discrete_data_study, robustness_study
from alfeld_elast.verification import (
    check_commuting, check_dimension_formula, check_infsup, check_kernel_trivial,
    check_unisolvency, exact_local_dimension, trace_gamma_defect,
)

LEVELS = [2, 4, 8]
NU = 0.3


def _material(nu=NU):
    return ComplianceTensor.from_young(1.0, nu)


def _fmt_rates(r):
    return "/".join(f"{v:.2f}" for v in r)


def _gate(items):
    """items: (label, rates, threshold); gate on the last rate."""
    parts, ok = [], True
    for label, rates, thr in items:
        good = bool(rates[-1] >= thr)
        ok &= good
        parts.append(f"{label} {_fmt_rates(rates)} ({'>=' if good else '<'}{thr})")
    return ok, "; ".join(parts)


def test_criterion_01_unisolvency(criterion_report):
    t0 = time.perf_counter()
    parts, ok = [], True
    for variant, dim in (("full", 42), ("reduced", 24), ("reduced2", 12)):
        d_exact, rank = exact_local_dimension(variant)
        r = check_unisolvency(variant, ntrials=100, seed=0)
        good = d_exact == dim and rank == dim and r.details["failures"] == 0 and r.value > 1e-8
        ok &= good
        parts.append(f"{variant} dim {d_exact} min sv {r.value:.2e}")
    dt = time.perf_counter() - t0
    ok &= dt < 30
    criterion_report(1, ok, "; ".join(parts) + f"; {dt:.1f}s (<30s)")
    assert ok


def test_criterion_02_kernel_and_dimension(criterion_report):
    t0 = time.perf_counter()
    parts, ok = [], True
    for ndim, dim in ((2, 15), (3, 42), (4, 90)):
        k = check_kernel_trivial(ndim)
        d = check_dimension_formula(ndim)
        good = k.details["nullity"] == 0 and d.value == dim and d.passed
        ok &= good
        parts.append(f"N={ndim} nullity {k.details['nullity']} dim {int(d.value)}")
    dt = time.perf_counter() - t0
    ok &= dt < 120
    criterion_report(2, ok, "; ".join(parts) + f"; {dt:.1f}s (<120s)")
    assert ok


def test_criterion_03_bgg_identities(criterion_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = {}
    for _ in range(200):
        u = tc.PolyField.random(3, (3, 3), 3, rng)
        gap = tc.div(tc.field_xi(u)).coeff_distance(2 * tc.field_vskw(tc.curl(u)))
        worst["div_xi"] = max(worst.get("div_xi", 0.0), gap)
    trace = 0.0
    for ndim in (2, 3, 4):
        for _ in range(200):
            eta = tc.random_skew_field(ndim, 3, rng, "K")
            worst["div_d_K"] = max(worst.get("div_d_K", 0.0), tc.div(tc.dd_operator(eta)).max_abs_coeff())
            om = tc.random_skew_field(ndim, 3, rng, "VK")
            worst["div_d_VK"] = max(worst.get("div_d_VK", 0.0), tc.div(tc.dd_operator(om)).max_abs_coeff())
            gap = tc.div(tc.field_theta(om)).coeff_distance(2 * tc.field_skw(tc.dd_operator(om)))
            worst["div_theta"] = max(worst.get("div_theta", 0.0), gap)
        trace = max(trace, trace_gamma_defect(ndim, rng))
    dt = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-12 and trace <= 1e-10 and dt < 30
    text = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    criterion_report(3, ok, f"{text} (<=1e-12); trace {trace:.1e} (<=1e-10); {dt:.1f}s")
    assert ok


def test_criterion_04_commuting(criterion_report):
    t0 = time.perf_counter()
    r = check_commuting(alfeld_split(generate_cube_mesh(1)), ntrials=20, seed=0)
    dt = time.perf_counter() - t0
    ok = r.passed and r.value <= 1e-9 and dt < 60
    text = ", ".join(f"{k} {v:.1e}" for k, v in r.details.items() if isinstance(v, float) and k != "seconds")
    criterion_report(4, ok, f"max {r.value:.1e} (<=1e-9): {text}; {dt:.1f}s")
    assert ok


def test_criterion_05_jkm_convergence(criterion_report):
    t0 = time.perf_counter()
    rep = convergence_study(StudyConfig("jkm", LEVELS, _material(), postprocess=True))
    dt = time.perf_counter() - t0
    ok, text = _gate([("sigma_A", rep.rates("err_sigma_A"), 1.8),
                      ("u", rep.rates("err_u_L2"), 1.8),
                      ("Pu", rep.rates("err_Pu_L2"), 2.5),
                      ("u*", rep.rates("err_ustar_L2"), 2.6)])
    cea = all(r["cea_ok"] for r in rep.rows)
    ok = ok and cea and dt < 600
    criterion_report(5, ok, f"{text}; Cea {'holds' if cea else 'VIOLATED'} on all runs; {dt:.0f}s")
    del rep
    gc.collect()
    assert ok


def test_criterion_06_p0_convergence(criterion_report):
    mat = _material()
    rep = convergence_study(StudyConfig("p0", LEVELS, mat))
    ok, text = _gate([("sigma_A", rep.rates("err_sigma_A"), 1.8),
                      ("u", rep.rates("err_u_L2"), 0.8),
                      ("Pu", rep.rates("err_Pu_L2"), 1.8)])
    eq = max(r["equilibrium"] for r in rep.rows)
    del rep
    gc.collect()
    fw = discrete_data_study([4, 8], mat)
    fw_rate = fw["rates"][-1]
    fw_ok = fw_rate >= 2.5
    ok = ok and eq <= 1e-9 and fw_ok
    criterion_report(6, ok, f"{text}; equilibrium {eq:.1e} (<=1e-9); "
                            f"f in W_h rate {fw_rate:.2f} ({'>=' if fw_ok else '<'}2.5)")
    assert ok


def test_criterion_07_reduced_convergence(criterion_report):
    mat = _material()
    parts, ok = [], True
    for method in ("reduced", "reduced2"):
        rep = convergence_study(StudyConfig(method, LEVELS, mat))
        good, text = _gate([("sigma_A", rep.rates("err_sigma_A"), 0.8),
                            ("u", rep.rates("err_u_L2"), 0.8)])
        ok &= good
        parts.append(f"{method}: {text}")
        del rep
        gc.collect()
    criterion_report(7, ok, " | ".join(parts))
    assert ok


def test_criterion_08_incompressible_robustness(criterion_report):
    parts, ok = [], True
    for method in ("jkm", "p0", "reduced"):
        res = robustness_study(method, [2, 4], [0.3, 0.4999, 0.49999])
        ratio = res["ratio"][0.49999, 4]
        shift = max(abs(res["rates"][0.4999, k][-1] - res["rates"][0.3, k][-1])
                    for k in ("err_sigma_L2", "err_sigma_A"))
        good = ratio <= 3 and shift <= 0.3
        ok &= good
        parts.append(f"{method} ratio {ratio:.2f} (<=3) rate shift {shift:.3f} (<=0.3)")
    criterion_report(8, ok, "; ".join(parts))
    assert ok


def test_criterion_09_weak_symmetry_equivalence(criterion_report):
    parts, ok = [], True
    for n, nu in ((1, 0.3), (2, 0.3), (2, 0.49)):
        mat = _material(nu)
        rep = equivalence_check(alfeld_split(generate_cube_mesh(n)), mat, trig_case(mat).f, alphas=(1.0, 2.0))
        ok &= rep["worst"] <= 1e-7
        parts.append(f"n={n} nu={nu} worst {rep['worst']:.1e}")
    criterion_report(9, ok, "; ".join(parts) + " (<=1e-7, skew scale 1 and 2)")
    assert ok


def test_criterion_10_infsup(criterion_report):
    parts, ok = [], True
    for method in ("jkm", "reduced", "reduced2"):
        r = check_infsup(method, levels=(1, 2))
        b1, b2 = r.details["beta_n1"], r.details["beta_n2"]
        good = min(b1, b2) > 1e-3 and b2 >= 0.8 * b1
        ok &= good
        parts.append(f"{method} beta {b1:.3f} -> {b2:.3f}")
    criterion_report(10, ok, "; ".join(parts) + " (>1e-3, drop <=20%)")
    assert ok
