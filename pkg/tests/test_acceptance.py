"""The twelve acceptance criteria, one check each.

Run under pytest for the summary block at the end of the session, or
directly (``python3 tests/test_acceptance.py``) for one line per criterion.
Criterion 12 is a probe: it is reported, never asserted.
"""
import math
import os
import sys
import time
import warnings

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conftest import ACCEPTANCE_RESULTS, figure_params  # noqa: E402

from hpzpair.coefficients import (  # noqa: E402
    PhysicalParams,
    coefficients,
    exact_CD,
    exact_CD_classical,
    exact_CD_zero_T,
    weak_CD,
)
from hpzpair.covariance import sigma_to_q  # noqa: E402
from hpzpair.errors import GridTooCoarse  # noqa: E402
from hpzpair.gaussian import (  # noqa: E402
    SymplecticSpectrum,
    entropy_total,
    epr_initial,
    info_table,
    schatten_norm,
)
from hpzpair.oracle import entropy_series, integrate_trajectory, master_equation_residual, schatten_series  # noqa: E402
from hpzpair.propagator import MarkovPropagator  # noqa: E402
from hpzpair.scenario import (  # noqa: E402
    Scenario,
    detect_transitions,
    evaluate_grid,
    event_spacings,
    separability_onset,
)
from hpzpair.special import solve_cubic  # noqa: E402

VERDICT_TOL = 1e-9


def _scenario(fig, **kw):
    params, p, r_s = figure_params(fig, **{k: v for k, v in kw.items() if k in ("kappa", "temperature")})
    rest = {k: v for k, v in kw.items() if k not in ("kappa", "temperature")}
    return Scenario(params=params, p=p, r_s=r_s, name=fig, **rest)


def _prop(fig, **over):
    params, p, r_s = figure_params(fig, **over)
    return MarkovPropagator(coefficients(params)), epr_initial(p, r_s)


# ---------------------------------------------------------------------------


def criterion_1():
    solve_cubic(1.0, 40.0, 1 / 128)
    best = min(_timed(lambda: solve_cubic(1.0, 40.0, 1 / 128)) for _ in range(20))
    z1, z2, z3 = solve_cubic(1.0, 40.0, 1 / 128)
    ok = (
        round(z1.real, 4) == -39.9844
        and abs(z1.imag) == 0.0
        and round(z2.real, 6) == -0.007814
        and round(z2.imag, 4) == 0.6124
        and z3 == z2.conjugate()
        and best < 1e-3
    )
    return ok, f"z1={z1.real:.4f}, z2,3={z2.real:.6f}{z2.imag:+.4f}i, {best * 1e3:.3f} ms"


def _timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def criterion_2():
    prop, s0 = _prop("fig1")
    late = info_table([3000.0], prop.evolve_many(s0, [3000.0]))["nu1"][0]
    ts = np.linspace(0.0, 20.0, 2001)
    nu1 = info_table(ts, prop.evolve_many(s0, ts))["nu1"]
    dips = np.count_nonzero(nu1 < 1.0 - VERDICT_TOL)
    ok = abs(late - 1.03092) <= 1e-3 and dips > 0
    return ok, f"nu1(3000)={late:.6f}, min nu1 on [0,20]={nu1.min():.4f}"


def criterion_3():
    sc = _scenario("fig3", t_end=200.0)
    res = evaluate_grid(sc)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridTooCoarse)
        t_s = separability_onset(res, detect_transitions(res))
    after = res.table["t"] > (t_s if t_s is not None else np.inf)
    en = res.table["E_N"][after]
    nu = res.table["nu1_pt"][after]
    ok = t_s is not None and abs(t_s - 82.0) <= 3.0 and en.size > 0 and en.max() <= VERDICT_TOL and nu.min() >= 1.0 - VERDICT_TOL
    return ok, f"t_s={t_s:.4f}, max E_N after={en.max():.2e}, min nu1_pt after={nu.min():.15f}"


def criterion_4():
    parts, ok = [], True
    for kappa in (5.0, 15.0):
        c = coefficients(figure_params("fig4", kappa=kappa)[0])
        t0 = 50.0 / c.lam
        sc = _scenario("fig4", kappa=kappa, t_start=t0, t_end=t0 + 20.0, n_points=4001)
        res = evaluate_grid(sc)
        spacing = event_spacings(detect_transitions(res), "entangle")
        period = math.pi / c.omega_d
        err = np.max(np.abs(spacing / period - 1.0)) if spacing.size else np.inf
        ok &= spacing.size >= 3 and err <= 0.01
        parts.append(f"kappa={kappa:g}: {spacing.size} gaps, max rel dev {err:.1e} from pi/omega_d={period:.5f}")
    return ok, "; ".join(parts)


def criterion_5():
    sc = _scenario("fig5", t_end=3200.0, n_points=20001)
    res = evaluate_grid(sc)
    wd = res.coeffs.omega_d
    nu = res.table["nu1_pt"]
    ok = abs(wd - 0.002) <= np.spacing(0.002) and nu.max() < 1.0 - VERDICT_TOL
    return ok, f"omega_d={wd!r}, max nu1_pt on [0,3200]={nu.max():.4f}"


def criterion_6():
    worst, slowest = 0.0, 0.0
    prop, s0 = _prop("fig1")
    integrate_trajectory(prop.drift, prop.R, s0, 0.01)  # compile
    for fig in ("fig1", "fig2", "fig3", "fig4", "fig5"):
        prop, s0 = _prop(fig)
        t0 = time.perf_counter()
        ts, rk = integrate_trajectory(prop.drift, prop.R, s0, 50.0, n_out=51)
        slowest = max(slowest, time.perf_counter() - t0)
        worst = max(worst, float(np.max(np.abs(rk - prop.evolve_many(s0, ts)))))
    return worst < 1e-8 and slowest < 10.0, f"max |sigma_rk4 - sigma| = {worst:.2e}, slowest set {slowest:.2f} s"


def criterion_7():
    rng = np.random.default_rng(7)
    worst = 0.0
    for fig in ("fig1", "fig2", "fig3", "fig4", "fig5"):
        prop, s0 = _prop(fig)
        q0 = sigma_to_q(s0.sigma)
        for _ in range(100):
            t = rng.uniform(0.0, 50.0)
            w = rng.normal(size=4)
            r = master_equation_residual(prop.coeffs, prop.quadratic_form(q0, t), prop.quadratic_form_rate(q0, t), w)
            worst = max(worst, abs(r))
    return worst < 1e-8, f"max residual over 5 x 100 points = {worst:.2e}"


def criterion_8():
    ok = True
    g0 = PhysicalParams(omega_c=40.0).gamma_crit / 10
    ratios = []
    for T in (0.1, 1.0, 10.0):
        prev = None
        for k in range(6):
            p = PhysicalParams(omega_c=40.0, gamma=g0 / 2**k, temperature=T)
            C, D = exact_CD(p.roots(), p)
            Cw, Dw = weak_CD(p)
            err = np.array([abs(C - Cw) / abs(Cw), abs(D - Dw) / abs(Dw)])
            if prev is not None:
                ratios.append(prev / err)
            prev = err
    ratios = np.array(ratios)
    ok &= bool(np.all((ratios > 1.8) & (ratios < 2.2)))

    hot = PhysicalParams(omega_c=40.0, gamma=1 / 128, temperature=1e4)
    C, D = exact_CD(hot.roots(), hot)
    Cc, Dc = exact_CD_classical(hot.roots(), hot)
    hot_err = max(abs(C / Cc - 1), abs(D / Dc - 1))
    ok &= hot_err < 1e-3

    cold = PhysicalParams(omega_c=40.0, gamma=1 / 128, temperature=1e-10)
    C, D = exact_CD(cold.roots(), cold, branch="finite")
    Cz, Dz = exact_CD_zero_T(cold.roots(), cold)
    cold_err = max(abs(C / Cz - 1), abs(D / Dz - 1))
    ok &= cold_err < 1e-6
    return ok, (
        f"halving ratios in [{ratios.min():.3f}, {ratios.max():.3f}], "
        f"T=1e4 vs classical {hot_err:.1e}, T=1e-10 vs zero-T {cold_err:.1e}"
    )


def criterion_9():
    rng = np.random.default_rng(9)
    ts = np.sort(rng.uniform(0.0, 100.0, 50))
    spectra = []
    for kappa in (0.0, 5.0, 15.0):
        prop, s0 = _prop("fig4", kappa=kappa)
        tab = info_table(ts, prop.evolve_many(s0, ts))
        spectra.append(np.stack([tab["nu1"], tab["nu2"]]))
    dev = max(np.max(np.abs(s - spectra[0]) / np.maximum(1.0, np.abs(spectra[0]))) for s in spectra[1:])
    return dev <= 1e-10, f"max deviation across kappa = {dev:.1e}"


def criterion_10():
    rng = np.random.default_rng(10)
    ent = rng.uniform(1.01, 5.0, (100, 2))
    pt = rng.uniform(0.25, 5.0, (100, 2))
    e_err = max(abs(entropy_total(SymplecticSpectrum(*v)) - entropy_series(*v, n_terms=500)) for v in ent)
    s_err = max(abs(schatten_norm(SymplecticSpectrum(*v)) - schatten_series(*v, n_terms=500)) for v in pt)
    return max(e_err, s_err) < 1e-8, f"entropy {e_err:.1e}, Schatten {s_err:.1e}"


def criterion_11():
    worst = 0.0
    for fig in ("fig1", "fig2", "fig3", "fig4", "fig5"):
        prop, _ = _prop(fig)
        c = prop.coeffs
        r2 = prop.r2(math.inf)
        a = c.D_pp / (4 * c.lam)
        b = (c.D_pp + 8 * c.D_px * c.lam * c.m) / (16 * c.lam * c.m**2 * c.omega_c_sq)
        worst = max(worst, abs(r2[0, 0] - a), abs(r2[1, 1] - b))
    return worst < 1e-10, f"max deviation = {worst:.1e}"


def criterion_12():
    res = evaluate_grid(_scenario("fig2", t_end=100.0))
    s = res.table["S_total"]
    step = float(np.min(np.diff(s)))
    return step >= -1e-9, f"smallest step change of S_total on the 2001-point grid = {step:+.2e} (report only)"


CRITERIA = {
    1: ("cubic roots", criterion_1),
    2: ("fig1 limit of nu1 and positivity violation", criterion_2),
    3: ("fig3 separability onset", criterion_3),
    4: ("fig4 asymptotic period", criterion_4),
    5: ("fig5 omega_d and persistent entanglement", criterion_5),
    6: ("closed form vs RK4 oracle", criterion_6),
    7: ("master-equation residual", criterion_7),
    8: ("coefficient limits", criterion_8),
    9: ("kappa invariance of nu1, nu2", criterion_9),
    10: ("entropy and Schatten series oracles", criterion_10),
    11: ("asymptotic diffusion entries", criterion_11),
    12: ("entropy monotonicity probe", criterion_12),
}
REPORT_ONLY = {12}


def _run(num):
    title, fn = CRITERIA[num]
    ok, detail = fn()
    status = "PASS" if ok else ("NOTE" if num in REPORT_ONLY else "FAIL")
    ACCEPTANCE_RESULTS[num] = (status, title, detail)
    return ok, detail


@pytest.mark.parametrize("num", sorted(CRITERIA))
def test_criterion(num):
    ok, detail = _run(num)
    if num not in REPORT_ONLY:
        assert ok, detail


def main():
    failed = 0
    for num in sorted(CRITERIA):
        _run(num)
        status, title, detail = ACCEPTANCE_RESULTS[num]
        print(f"[{status}] {num:2d}. {title}: {detail}")
        failed += status == "FAIL"
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
