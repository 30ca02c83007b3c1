"""Acceptance criteria, one summary line each (shown at the end of the pytest run)."""
import time

import numpy as np
import pytest

from halfline import benchmarks as bm
from halfline import fixed_energy, forward, gelfand_levitan, krein, marchenko, quarkonium
from halfline.core import winding_index
from halfline.quadrature import cumtrapz
from halfline.riemann import jost_from_S
from halfline.types import JostData, KreinKernel, PotentialGrid, QuarkoniumData

KS = np.arange(0.0, 200.0 + 1e-9, 0.025)


def _grid(X, dx):
    return np.linspace(0.0, X, int(round(X / dx)) + 1)


@pytest.fixture(scope="module")
def sech2_forward():
    q = PotentialGrid(_grid(20.0, 0.01), bm.sech2(_grid(20.0, 0.01)))
    return q, forward.scattering_data(q, KS)


def test_criterion_1_resonance_round_trip(acceptance):
    case = bm.resonance_case(1.0)
    t = time.perf_counter()
    res = marchenko.invert(case.scattering_data(KS), X=5.0, dx=0.01, full=True)
    elapsed = time.perf_counter() - t
    m = res.zs <= 10.0  # F enters on [0, 2X]
    F_err = np.max(np.abs(res.F[m] / (2 * np.exp(-res.zs[m])) - 1))
    A = res.kernel
    X, Y = np.meshgrid(A.xs, A.ys if A.ys is not None else A.xs, indexing="ij")
    ok = np.isfinite(A.values)
    A_err = np.max(np.abs(A.values[ok] - bm.resonance_A(X[ok], Y[ok])))
    exact = bm.sech2(res.potential.xs)
    q_err = np.max(np.abs(res.potential.qs - exact) / np.abs(exact))
    passed = F_err < 1e-4 and A_err < 1e-5 and q_err < 1e-3 and elapsed < 10
    acceptance(1, passed, f"F rel {F_err:.2e} (<1e-4), A abs {A_err:.2e} (<1e-5), "
               f"q pointwise rel {q_err:.2e} (<1e-3), runtime {elapsed:.1f} s (<10 s)")
    assert passed


def test_criterion_2_bargmann_factorization(acceptance):
    case = bm.bargmann_case(1.0, 1.0)
    sd = case.scattering_data(KS)
    jd = jost_from_S(sd)
    m = (KS >= 0.2) & (KS <= 10.0)
    f_err = np.max(np.abs(jd.f[m] / ((KS[m] - 1j) / (KS[m] + 1j * np.sqrt(2))) - 1))
    w = winding_index(KS, sd.S)
    passed = f_err < 1e-3 and w == -2
    acceptance(2, passed, f"f rel {f_err:.2e} on [0.2, 10] (<1e-3), winding {w} (expect -2)")
    assert passed


def test_criterion_3_gl_closed_form(acceptance):
    k1, r1 = 1.0, 0.5
    case = bm.bargmann_case(k1, r1)
    xs = _grid(3.0, 0.01)
    L = gelfand_levitan.build_L(case.spectral_function(KS), xs)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    tri = Y <= X
    L_err = np.max(np.abs(L.matrix - bm.gl_kernel_closed(X, Y, k1, r1))[tri])
    q_gl = gelfand_levitan.q_from_K(gelfand_levitan.solve_gl(L))
    q_m = marchenko.invert(case.scattering_data(KS), X=3.0, dx=0.01)
    scale = np.max(np.abs(q_m.qs))
    dq = np.max(np.abs(q_gl.qs - q_m.qs)) / scale
    passed = L_err < 1e-4 and dq < 2e-3
    acceptance(3, passed, f"L abs {L_err:.2e} (<1e-4), |q_GL - q_M|/max|q| {dq:.2e} (<2e-3)")
    assert passed


def _dense_sum_estimate(Hk, n):
    """Time of n per-x dense solves (sizes 2, 4, ..., 2n) from a cubic fit of sampled sizes."""
    sizes = np.array([500, 1000, 1500, 2000, 3000, 2 * n])
    times = []
    for m in sizes:
        t = time.perf_counter()
        krein.solve_krein_dense(Hk, int(m))
        times.append(time.perf_counter() - t)
    coef = np.polyfit(sizes, times, 3)
    total = float(np.sum(np.maximum(np.polyval(coef, 2 * np.arange(1, n + 1)), 0.0)))
    return total, times[-1]


def test_criterion_4_krein_vs_marchenko(acceptance):
    case = bm.krein_case(1.0, 2.0)
    xs, ts = krein.krein_grid(5.0, 0.01)
    jd = JostData(KS, case.f(KS))
    Hk = krein.H_from_jost(jd, ts)
    H_err = np.max(np.abs(Hk.H / (1.5 * np.exp(-ts)) - 1))
    fam = krein.solve_krein_family(Hk, xs)
    dense_err = 0.0
    for i in np.linspace(1, xs.size - 1, 12).astype(int):
        d = krein.solve_krein_dense(Hk, 2 * i)
        dense_err = max(dense_err, abs(fam.corner[i] - d[-1]), abs(fam.origin[i] - d[0]))
    q_k = krein.invert(case.scattering_data(KS), X=5.0, dx=0.01).potential
    q_m = marchenko.invert(case.scattering_data(KS), X=5.0, dx=0.01)
    dq = np.max(np.abs(q_k.qs - q_m.qs)) / np.max(np.abs(q_m.qs))
    relation = krein.gl_relation_check(Hk, jd)

    n = 2000
    xs_big, ts_big = krein.krein_grid(n * 0.01, 0.01)
    Hbig = KreinKernel(ts_big, 1.5 * np.exp(-ts_big))
    t = time.perf_counter()
    krein.solve_krein_family(Hbig, xs_big)
    fast = time.perf_counter() - t
    dense_total, dense_last = _dense_sum_estimate(Hbig, n)
    speedup = dense_total / fast
    passed = (dq < 2e-3 and dense_err < 1e-8 and speedup >= 10 and relation < 1e-8
              and H_err < 1e-5)
    acceptance(4, passed, f"|q_K - q_M|/max|q| {dq:.2e} (<2e-3), Levinson vs dense {dense_err:.2e} "
               f"(<1e-8), speedup at n={n} ~{speedup:.0f}x (>=10; one largest dense solve alone "
               f"{dense_last / fast:.1f}x), M = H residual {relation:.2e} (<1e-8), H rel {H_err:.1e}")
    assert passed


def test_criterion_5_forward_inverse_closure(acceptance, sech2_forward):
    _, sd = sech2_forward
    q1 = marchenko.invert(sd, X=10.0, dx=0.01)
    xo = _grid(20.0, 0.01)
    qo = np.where(xo <= q1.xs[-1], np.interp(xo, q1.xs, q1.qs), 0.0)
    sd2 = forward.scattering_data(PotentialGrid(xo, qo), KS)
    dS = np.max(np.abs(sd2.S - sd.S))
    passed = dS < 5e-3 and sd2.J == 0
    acceptance(5, passed, f"max|S_out - S_in| {dS:.2e} (<5e-3), bound states {sd2.J} (expect 0)")
    assert passed


def test_criterion_6_radius(acceptance):
    parts, ok = [], True
    t = time.perf_counter()
    for a in (1.0, 2.0):
        xs = _grid(a, a / 1000)
        q = PotentialGrid(xs, np.ones_like(xs), a, "compact")
        est = fixed_energy.radius_estimate(fixed_energy.partial_wave_forward(q, L=40))
        rel = abs(est.a_hat - a) / a
        ok &= rel < 0.1
        parts.append(f"a={a:g}: a_hat {est.a_hat:.4f} (rel {rel:.3f})")
    elapsed = time.perf_counter() - t
    passed = ok and elapsed < 30
    acceptance(6, passed, ", ".join(parts) + f", runtime {elapsed:.1f} s (<30 s)")
    assert passed


def test_criterion_7_quarkonium(acceptance):
    ref = quarkonium.airy_reference(3)
    single = QuarkoniumData([1.5, ref[0].E, ref[1].E], [1.2, ref[0].s, ref[1].s])
    res = quarkonium.recover_potential(single, n_reference=2)
    p_err = np.max(np.abs(res.p - quarkonium.single_level_p(1.5, 1.2, res.potential.xs)))
    pert = QuarkoniumData([2.0, ref[1].E, ref[2].E], [1.3, ref[1].s, ref[2].s])
    res2 = quarkonium.recover_potential(pert, n_reference=3)
    ev = quarkonium.shooting_eigenvalues(res2.potential, pert.J)
    e_err = np.max(np.abs(ev - np.asarray(pert.energies)))
    passed = p_err < 1e-6 and e_err < 1e-3
    acceptance(7, passed, f"single-level p abs {p_err:.2e} (<1e-6), shooting eigenvalues {e_err:.2e} (<1e-3)")
    assert passed


def test_criterion_8_property_suites(acceptance, sech2_forward):
    checks = {}
    q, sd = sech2_forward
    checks["unitarity"] = (np.max(np.abs(np.abs(sd.S) - 1)), 1e-8)

    ks = np.linspace(0.0, 60.0, 1201)
    wr = 0.0
    box = PotentialGrid(_grid(1.0, 1e-3), np.full(1001, -30.0), 1.0, "compact")
    for qq in (q, box):
        f, fp = forward.jost_at_zero(qq, ks)
        W = fp * np.conj(f) - np.conj(fp) * f
        wr = max(wr, np.max(np.abs(W - 2j * ks) / (1 + ks)))
    checks["wronskian"] = (wr, 1e-6)

    fine = _grid(4.0, 1e-4)
    K = gelfand_levitan.goursat_kernel(PotentialGrid(_grid(4.0, 0.01), bm.sech2(_grid(4.0, 0.01))))
    half = 0.5 * cumtrapz(bm.sech2(fine), fine)[::100]
    checks["gl_diagonal"] = (np.max(np.abs(K.diagonal - half)), 1e-8)

    xs, ts = krein.krein_grid(5.0, 0.01)
    Hk = krein.H_from_jost(JostData(KS, bm.krein_case(1.0, 2.0).f(KS)), ts)
    checks["krein_symmetry"] = (krein.solve_krein_family(Hk, xs).symmetry, 1e-8)

    ys = np.linspace(0, 25, 2501)
    mres = 0.0
    for case in (bm.resonance_case(1.0), bm.bargmann_case(1.0, 1.0), bm.krein_case(1.0, 2.0)):
        r = marchenko.invert(case.scattering_data(KS), X=0.5, dx=0.01, full=True)
        A0 = marchenko.solve_marchenko(r.zs, r.F, np.array([0.0]), ys=ys).values[0]
        mres = max(mres, marchenko.marchenko_type_residual(ys, A0, case.F, Y=8.0)["max"])
    checks["marchenko_type"] = (mres, 1e-4)

    exact = KS[:400] / (KS[:400] + 1j)
    errs = [np.max(np.abs(forward.jost_at_zero(q, KS[:400], dx, richardson=False)[0] - exact))
            for dx in (0.02, 0.01)]
    rates = {"forward_halving_ratio": (errs[0] / errs[1], 3.0)}
    rel = []
    for dk in (0.05, 0.025):
        kk = np.arange(0.0, 200.0 + 1e-9, dk)
        jd = JostData(kk, bm.krein_case(1.0, 2.0).f(kk))
        rel.append(krein.gl_relation_check(krein.H_from_jost(jd, ts), jd))
    rates["krein_dk_halving_ratio"] = (rel[0] / rel[1], 1.0)

    passed = (all(v < tol for v, tol in checks.values())
              and all(v > lo for v, lo in rates.values()))
    detail = ", ".join([f"{k} {v:.2e} (<{tol:g})" for k, (v, tol) in checks.items()]
                       + [f"{k} {v:.2f} (>{lo:g})" for k, (v, lo) in rates.items()])
    acceptance(8, passed, detail)
    assert passed
