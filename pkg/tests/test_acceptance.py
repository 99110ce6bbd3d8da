"""End-to-end acceptance checks, one test per criterion.

Each test records its outcome in ``conftest.ACCEPTANCE`` before asserting, so
the terminal summary prints one PASS/FAIL line per criterion.
"""
import itertools
import math

import numpy as np
import pytest
from conftest import ACCEPTANCE
from oracles import l1_min_by_basic_solutions

from lprecover.certify import (constant_c1, constant_c2, constant_cp, constant_cpq,
                               log_constant_cp, log_constant_cpq, lq_alpha, sparsity_transfer,
                               threshold_f)
from lprecover.decode import decode_l0_oracle, decode_lp
from lprecover.ensembles import gen_gaussian, gen_sparse_signal, write_lprm
from lprecover.experiments import (linear_fit, run_phase_diagram, run_robustness_sweep,
                                   run_snr_grid, write_result)
from lprecover.metrics import top_support
from lprecover.pconvex import balance_signs, check_p_subadditivity, d1_gap_check
from lprecover.rip import rip_delta_exact, rip_delta_mc, rip_profile

pytestmark = pytest.mark.acceptance


def record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    assert ok, f"criterion {n}: {detail}"


def test_criterion_01_constants():
    vals = [constant_c1(1, 3, 0.2, 0.2), constant_c2(1, 3, 0.2, 0.2),
            constant_c1(0.5, 3, 0.5, 0.5), constant_c2(0.5, 3, 0.5, 0.5)]
    want = [12.04, 8.77, 5.31, 4.31]
    ok = all(abs(v - w) <= 0.01 for v, w in zip(vals, want))
    record(1, ok, "C1, C2 = " + ", ".join(f"{v:.4f}" for v in vals))


def test_criterion_02_thresholds():
    f3 = threshold_f(3, 0.5)
    f2 = [threshold_f(2, p / 10) for p in range(1, 11)]
    st = sparsity_transfer(3, 4, 2 / 3)
    ok = abs(f3 - 7 / 9) < 1e-12 and all(v == 0 for v in f2) and st == 5
    record(2, ok, f"f(3,0.5)-7/9={f3 - 7 / 9:.1e}, max f(2,p)={max(f2)}, transfer={st}")


def test_criterion_03_formula_consistency():
    worst = 0.0
    for p in np.linspace(0.05, 0.95, 20):
        a, b = constant_cpq(p, 2), constant_cp(p)
        if math.isfinite(a) and math.isfinite(b):
            worst = max(worst, abs(a - b) / abs(b))
        else:
            # C(p) overflows a double for small p; compare the logarithms instead
            la, lb = log_constant_cpq(p, 2), log_constant_cp(p)
            worst = max(worst, abs(la - lb) / abs(lb))
    worst_alpha = 0.0
    for M, N, mu in itertools.product([5, 20, 50], [60, 150, 300], [0.1, 0.3, 0.7]):
        ref = mu * math.sqrt(math.log(N / M) / M)
        worst_alpha = max(worst_alpha, abs(lq_alpha(M, N, mu, 1.0) - ref) / ref)
    ok = worst <= 1e-10 and worst_alpha <= 1e-12
    record(3, ok, f"max rel C_pq vs C_p {worst:.1e}, max rel lq_alpha {worst_alpha:.1e}")


def test_criterion_04_oracle_equivalence():
    successes = mismatches = 0
    for seed in range(50):
        A = gen_gaussian(10, 20, seed)
        x = gen_sparse_signal(20, 2, 1000 + seed)
        b = A.entries @ x
        y = decode_lp(A, b, p=0.5).solution
        if np.linalg.norm(y - x) <= 1e-3 * np.linalg.norm(x):
            successes += 1
            z = decode_l0_oracle(A, b, 2, 1e-8)
            if set(top_support(y, 2)) != set(np.flatnonzero(z)):
                mismatches += 1
    ok = successes >= 45 and mismatches == 0
    record(4, ok, f"{successes}/50 recovered, {mismatches} support mismatches")


def test_criterion_05_convex_cross_check():
    worst = 0.0
    for seed in range(20):
        A = gen_gaussian(5, 10, seed).entries
        b = A @ gen_sparse_signal(10, 3, 500 + seed)
        ref, _ = l1_min_by_basic_solutions(A, b)
        got = decode_lp(A, b, p=1.0).objective_p
        worst = max(worst, abs(got - ref) / ref)
    record(5, worst <= 1e-4, f"max relative objective gap {worst:.1e}")


@pytest.mark.slow
def test_criterion_06_robustness_linearity():
    lam = [round(0.1 * i, 1) for i in range(11)]
    t = run_robustness_sweep(50, 100, 10, "compressible", lam, [0.5, 1.0], 10, seed=0)
    fits = [linear_fit(t.lambda_axis, t.mean_error[:, j]) for j in range(len(t.p_axis))]
    ok = all(r2 >= 0.9 and slope >= 0 for slope, _, r2 in fits)
    detail = "; ".join(f"p={p}: slope {s:.3f}, R2 {r2:.4f}" for p, (s, _, r2) in zip(t.p_axis, fits))
    record(6, ok, detail)


@pytest.mark.slow
def test_criterion_07_phase_ordering():
    grid = run_phase_diagram(50, 150, [16, 18, 20], [0.5, 1.0], 30, seed=0)
    gaps = grid.cells[:, 0] - grid.cells[:, 1]
    ok = bool(np.max(gaps) >= 0.1)
    detail = ", ".join(f"S={S}: {a:.2f} vs {b:.2f}" for S, (a, b) in zip(grid.S_axis, grid.cells))
    record(7, ok, "rate p=0.5 vs p=1, " + detail)


@pytest.mark.slow
def test_criterion_08_snr_trend():
    p_axis = [round(0.1 * i, 1) for i in range(3, 11)]
    g = run_snr_grid(50, 100, [0.4, 0.9], p_axis, 10, seed=0)
    best_p = p_axis[int(np.argmax(g.mean_snr_db[0]))]
    hi = [j for j, p in enumerate(p_axis) if p >= 0.5]
    spread = float(np.ptp(g.mean_snr_db[1, hi]))
    ok = best_p <= 0.8 and spread <= 3.0
    record(8, ok, f"q=0.4 argmax p={best_p}, q=0.9 spread over p>=0.5 {spread:.2f} dB")


@pytest.mark.slow
def test_criterion_09_pconvex_properties():
    rng = np.random.default_rng(9)
    balanced = True
    for _ in range(10_000):
        m, n = rng.integers(1, 65), rng.integers(1, 33)
        X = rng.standard_normal((m, n)) * rng.exponential(1.0, (m, 1))
        sa = balance_signs(X)
        balanced &= sa.achieved_norm**2 <= np.sum(X**2) * (1 + 1e-12)
    ortho = True
    for m in (1, 3, 8, 16):
        Q, _ = np.linalg.qr(rng.standard_normal((16, m)))
        ortho &= abs(balance_signs(Q.T).achieved_norm - math.sqrt(m)) <= 1e-12 * math.sqrt(m)
    subadd = True
    for _ in range(100_000):
        n = rng.integers(1, 9)
        x, y = rng.standard_normal((2, n)) * rng.exponential(1.0, (2, 1))
        subadd &= check_p_subadditivity(x, y, rng.uniform(0.01, 1.0))
    A = gen_gaussian(8, 24, 0)
    d1 = {p: d1_gap_check(A, p, 200, seed=1) for p in (0.3, 0.5, 0.9)}
    no_violation = not any(r["violated"] for r in d1.values())
    ok = balanced and ortho and subadd and no_violation
    record(9, ok, f"balance {balanced}, orthonormal {ortho}, subadditivity {subadd}, "
                  f"d1 violations {[p for p, r in d1.items() if r['violated']]}")


def test_criterion_10_rip():
    rng = np.random.default_rng(10)
    Q, _ = np.linalg.qr(rng.standard_normal((8, 6)))
    zero = max(rip_delta_exact(Q, S) for S in range(1, 7))
    A = np.array([[1.0, 0.0, 1 / math.sqrt(2)], [0.0, 1.0, 1 / math.sqrt(2)]])
    hand = abs(rip_delta_exact(A, 2) - 1 / math.sqrt(2))
    mc_ok = True
    for i in range(30):
        M, N = rng.integers(2, 6), rng.integers(4, 9)
        B = gen_gaussian(M, N, 100 + i)
        S = int(rng.integers(1, min(M, N) + 1))
        mc_ok &= (rip_delta_mc(B, S, 50, i).delta_lower
                  <= rip_delta_exact(B, S) + 1e-12)
    prof = [e.delta_lower for e in rip_profile(gen_gaussian(10, 30, 3), 10, 100, 0)]
    monotone = all(a <= b for a, b in zip(prof, prof[1:]))
    ok = zero <= 1e-12 and hand <= 1e-10 and mc_ok and monotone
    record(10, ok, f"orthonormal delta {zero:.1e}, 2x3 error {hand:.1e}, "
                   f"MC <= exact {mc_ok}, profile monotone {monotone}")


def _snapshot(out, threads):
    write_lprm(out / "A.lprm", gen_gaussian(12, 30, 5))
    np.save(out / "x.npy", gen_sparse_signal(30, 3, 6))
    A = gen_gaussian(12, 30, 5)
    rep = decode_lp(A, A.entries @ gen_sparse_signal(30, 3, 6), p=0.5)
    (out / "decode.json").write_text(rep.to_json())
    (out / "rip.json").write_text(rip_delta_mc(A, 3, 100, 7).to_json())
    write_result(run_phase_diagram(12, 30, [1, 3], [0.5, 1.0], 3, seed=2, threads=threads), out)
    write_result(run_robustness_sweep(12, 30, 2, "noise", [0.0, 0.5], [0.5], 2, seed=2,
                                      threads=threads), out)
    write_result(run_snr_grid(12, 30, [0.5], [0.5, 1.0], 2, seed=2, threads=threads), out)
    return {f.name: f.read_bytes() for f in sorted(out.iterdir())}


def test_criterion_11_determinism(tmp_path):
    runs = []
    for i, threads in enumerate((1, 1, 3)):
        d = tmp_path / str(i)
        d.mkdir()
        runs.append(_snapshot(d, threads))
    same = runs[0] == runs[1] == runs[2]
    record(11, same and len(runs[0]) >= 9,
           f"{len(runs[0])} files byte-identical across 2 serial runs and 1 threaded run: {same}")
