"""Acceptance criteria 1-12.

Each test records a PASS/FAIL line (printed in the terminal summary by
conftest.py) and then asserts.  Run as a script to print the lines directly:

    python3 tests/test_acceptance.py
"""

import math
import time

import numpy as np
import pytest

from ballpot import fraclap as F
from ballpot import kernels as K
from ballpot import operators as O
from ballpot import solver as S
from ballpot.model import FracParams

RESULTS: dict[int, tuple[bool, str]] = {}


def record(n, ok, detail, started, budget):
    elapsed = time.perf_counter() - started
    RESULTS[n] = (bool(ok), f"{detail}; {elapsed:.1f} s (budget {budget} s)")
    return bool(ok)


def line(n):
    ok, detail = RESULTS[n]
    return f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail}"


# ----------------------------------------------------------------------------

def test_01_green_origin_radial_formula():
    t0 = time.perf_counter()
    worst = 0.0
    worst_corrected = 0.0
    for n, a in ((3, 0.5), (3, 1.0), (4, 1.5)):
        p = FracParams(n, a)
        origin = np.zeros(n)
        for rho in np.linspace(0.005, 0.995, 100):
            y = np.zeros(n)
            y[0] = rho
            g = K.green_ball(p, origin, y)
            worst = max(worst, abs(K.green_origin_abel_form(p, rho) / g - 1))
            worst_corrected = max(worst_corrected, abs(K.green_origin_radial(p, rho) / g - 1))
    ok = worst <= 1e-8
    record(1, ok, f"max rel. deviation of 2k int_rho^1 s^(1-N)(1-s^2)^(a/2-1) ds from G(0,y) = {worst:.3g} "
                  f"(tol 1e-8); with the factor rho^(a-N) s^(N-1-a) restored: {worst_corrected:.2g}", t0, 5)
    assert worst_corrected <= 1e-8
    assert ok, RESULTS[1][1]


def test_02_poisson_normalization():
    t0 = time.perf_counter()
    worst = 0.0
    one = O.ExteriorData.constant(1.0)
    for a in (0.5, 1.0, 1.5):
        p = FracParams(3, a)
        for t in (0.3, 0.6, 0.9):
            for frac in (0.0, 0.25, 0.5, 0.75, 0.95):
                h = O.harmonic_apply(p, t, one, frac * t, angular="quadrature")
                worst = max(worst, abs(h - 1))
    ok = worst <= 1e-6
    record(2, ok, f"max |H(1) - 1| = {worst:.3g} over 3 alpha x 3 t x 5 radii (tol 1e-6)", t0, 10)
    assert ok


def test_03_dual_path_harmonic_measure():
    t0 = time.perf_counter()
    worst = 0.0
    for a in (0.5, 1.0, 1.5):
        p = FracParams(3, a)
        for beta in (-0.2, 0.0, 0.4):
            c = F.lemma_constant_exact(p, beta)
            for t in (0.2, 0.5, 0.8):
                direct = O.harmonic_origin(p, t, O.power_exterior(beta))
                closed = F.harmonic_origin_closed(p, beta, t, c)
                worst = max(worst, abs(direct / closed - 1))
    ok = worst <= 1e-6
    record(3, ok, f"max rel. gap quadrature vs hypergeometric closed form = {worst:.3g} (tol 1e-6)", t0, 30)
    assert ok


PAIRS_4 = ((0.5, 0.2), (1.0, 0.6), (1.5, 0.0))


def test_04_lemma_two_sided_bound():
    t0 = time.perf_counter()
    radii = np.concatenate([np.linspace(0.0, 0.9, 10), [0.95, 0.99, 0.995, 0.999]])
    spread_ok = sign_ok = True
    spreads = []
    match = 0.0
    for a, beta in PAIRS_4:
        p = FracParams(3, a)
        prof = F.PowerProfile(beta)
        vals = np.array([F.fraclap_radial_quad(p, prof, r) for r in radii])
        ratio = vals * (1 - radii**2) ** (a + beta) / (a + 2 * beta - 2)
        spreads.append(ratio.max() / ratio.min())
        spread_ok &= bool(np.all(ratio > 0) and spreads[-1] <= 10)
        sign_ok &= bool(np.all(np.sign(vals) == np.sign(a + 2 * beta - 2)))
        for r, v in zip(radii[:10], vals[:10]):
            match = max(match, abs(F.fraclap_power_closed(p, prof, r) / v - 1))
    # at beta = 1 - a/2 the value is an exact cancellation between the interior integral and
    # c u(r) T(r); at r = 0.999 that scale is ~1e5, so the absolute bound is applied up to r = 0.99
    # and the outermost radius is judged against the cancelling scale
    zero = zero_rel = 0.0
    for a in (0.5, 1.0, 1.5):
        p = FracParams(3, a)
        prof = F.PowerProfile(1 - a / 2)
        for r in radii:
            v = abs(F.fraclap_radial_quad(p, prof, r))
            if r <= 0.99:
                zero = max(zero, v)
            else:
                scale = p.constants.c_int * prof(r, 1 - r) * F._tail_kernel(p, r)
                zero_rel = max(zero_rel, v / scale)
    zero_ok = zero <= 1e-8 and zero_rel <= 1e-12
    match_ok = match <= 1e-5
    ok = spread_ok and sign_ok and zero_ok and match_ok
    record(4, ok, f"band spread max {max(spreads):.3g} (<= 10: {spread_ok}); sign law {sign_ok}; "
                  f"|value| at beta = 1 - a/2 <= {zero:.2g} for r <= 0.99, <= {zero_rel:.2g} x cancelling scale "
                  f"beyond ({zero_ok}); phi-form vs PV quadrature "
                  f"max rel. gap {match:.3g} (tol 1e-5: {match_ok})", t0, 60)
    assert spread_ok and sign_ok and zero_ok
    assert match_ok, RESULTS[4][1]


def test_05_potential_exponent_law():
    t0 = time.perf_counter()
    p = FracParams(3, 1.0)
    op = O.GreenOperator(p, O.RadialGrid.geometric(320, 1e-10))
    parts = []
    ok = True
    for lam in (0.6, 0.8, 1.2):
        rep = O.delta_power_diagnostic(p, lam, op)
        slope_ok = abs(rep.fit.exponent - (p.alpha - lam)) <= 0.05
        trace_ok = rep.weighted_trace <= 1e-2
        ok &= rep.finite and slope_ok and trace_ok
        parts.append(f"lambda {lam}: slope {rep.fit.exponent:.4f} vs {p.alpha - lam:.1f}, "
                     f"trace {rep.weighted_trace:.2g}")
    record(5, ok, "; ".join(parts), t0, 30)
    assert ok


def test_06_divergence_threshold():
    t0 = time.perf_counter()
    parts = []
    ok = True
    for a in (0.5, 1.0, 1.5):
        p = FracParams(3, a)
        below = O.delta_power_diagnostic(p, 1 + a / 2 - 0.1, with_profile=False)
        above = O.delta_power_diagnostic(p, 1 + a / 2 + 0.1, with_profile=False)
        ok &= below.finite and not above.finite
        parts.append(f"a={a}: {below.label}/{above.label}")
    record(6, ok, ", ".join(parts), t0, 20)
    assert ok


def test_07_moderate_problem():
    t0 = time.perf_counter()
    p = FracParams(3, 1.0)
    op = O.green_operator(p)
    g = 1.0
    # Newton from M g; damped Picard from 0 as an independent second path
    a = S.solve_moderate(p, 2.0, g, op, tol=1e-10, u0="rhs")
    b = S.solve_moderate(p, 2.0, g, op, tol=1e-10, u0="zero", method="picard", max_iter=5000)
    u = a.profile.values
    mg = a.profile.meta["rhs"]
    q = 2.0 * (0.5 * p.alpha - 1.0)
    resid = np.max(np.abs(u + op.apply(u**2.0, q) - mg)) / np.max(np.abs(mg))
    trace = a.meta["trace"][-20:]
    trace_err = float(np.max(np.abs(trace / g - 1)))
    agree = float(np.max(np.abs(a.profile.values - b.profile.values) / np.abs(b.profile.values)))
    expo = a.boundary_exponent.exponent
    ok = (a.converged and b.converged and resid <= 1e-6 and trace_err <= 0.02 and agree <= 1e-6
          and abs(expo - (p.alpha / 2 - 1)) <= 0.05)
    record(7, ok, f"residual {resid:.2g} rel.; trace within {trace_err:.3g} of g; Newton from Mg and "
                  f"Picard from 0 ({b.iterations} its) agree to "
                  f"{agree:.2g}; exponent {expo:.4f} vs -0.5", t0, 120)
    assert ok


def test_08_moderate_nonexistence_signal():
    t0 = time.perf_counter()
    p = FracParams(3, 1.0)
    div = S.nonexistence_probe(p, "moderate", 3.0)
    conv = S.nonexistence_probe(p, "moderate", 2.9)
    growth = div.values[-1] / div.values[0]
    monotone = bool(np.all(np.diff(div.values) > 0))
    growth_ok = growth >= 1e3
    ok = monotone and growth_ok and div.divergent and not conv.divergent
    record(8, ok, f"gamma=3: monotone {monotone}, {div.meta['increment_ratio']:.5f} increment ratio "
                  f"({'divergent' if div.divergent else 'convergent'}), growth x{growth:.3g} by t = 1 - 1e-5 "
                  f"(needs >= 1e3); gamma=2.9: increment ratio {conv.meta['increment_ratio']:.3f} "
                  f"({'divergent' if conv.divergent else 'convergent'})", t0, 60)
    assert monotone and div.divergent and not conv.divergent
    assert growth_ok, RESULTS[8][1]


def test_09_blowup_problem():
    t0 = time.perf_counter()
    parts = []
    ok = True
    for a, gamma in ((1.0, 2.5), (1.5, 4.0)):
        p = FracParams(3, a)
        rep = S.solve_blowup(p, gamma)
        target = a / (1 - gamma)
        expo = rep.boundary_exponent.exponent
        good = rep.converged and rep.sandwich_ok and abs(expo - target) <= 0.05
        ok &= good
        parts.append(f"(a, gamma)=({a}, {gamma}): converged {rep.converged}, sandwich {rep.sandwich_ok}, "
                     f"exponent {expo:.4f} vs a/(1-gamma) = {target:.4f}")
    record(9, ok, "; ".join(parts), t0, 300)
    assert ok


def test_10_blowup_nonexistence():
    t0 = time.perf_counter()
    p = FracParams(3, 1.0)
    rep = S.nonexistence_probe(p, "blowup", 1.2)
    refused = False
    try:
        S.solve_blowup(p, 1.2)
    except S.RegimeError:
        refused = True
    ok = (not rep.divergent) and refused
    record(10, ok, f"G(delta^-1.2) {'finite' if not rep.divergent else 'divergent'} "
                   f"(limit {rep.meta['limit']:.6g}); solve_blowup refused: {refused}", t0, 10)
    assert ok


# (alpha, gamma) -> (moderate, blowup); cells: I gamma < 1+a/2, II 1+a/2 <= gamma <= 1+a,
# III 1+a < gamma < crit, IV gamma = crit, V gamma > crit
REGIME_TABLE = [
    (1.0, 1.2, "exists", "none"),      # I
    (0.5, 0.5, "exists", "none"),      # I, sublinear
    (1.0, 1.5, "exists", "open"),      # II, lower tie
    (1.5, 2.5, "exists", "open"),      # II, upper tie
    (0.5, 1.3, "exists", "open"),      # II interior
    (1.0, 2.5, "exists", "exists"),    # III
    (1.5, 4.0, "exists", "exists"),    # III
    (0.5, 1.6, "exists", "exists"),    # III, crit = 5/3
    (1.0, 3.0, "none", "open"),        # IV
    (1.5, 7.0, "none", "open"),        # IV
    (1.0, 4.0, "none", "open"),        # V
    (0.5, 2.0, "none", "open"),        # V
]


def test_11_regime_table():
    t0 = time.perf_counter()
    bad = []
    for a, g, mod, blow in REGIME_TABLE:
        r = S.classify(a, g)
        if (r.moderate.value, r.blowup.value) != (mod, blow):
            bad.append((a, g))
    ok = not bad
    record(11, ok, f"{len(REGIME_TABLE) - len(bad)}/{len(REGIME_TABLE)} cases match" + (f", mismatches {bad}" if bad else ""), t0, 1)
    assert ok


def _exterior(beta, scale, outer):
    return O.ExteriorData(lambda rho, delta: scale * (delta * (2.0 - delta)) ** (-beta), min(0.0, -beta), outer)


def test_12_comparison_principle():
    t0 = time.perf_counter()
    p = FracParams(3, 1.0)
    op = O.green_operator(p)
    rng = np.random.default_rng(2024)
    worst = -math.inf
    for _ in range(20):
        t = rng.uniform(0.3, 0.95)
        gamma = rng.uniform(1.2, 3.0)
        b1, b2 = np.sort(rng.uniform(-0.4, 0.9, 2))
        s1 = rng.uniform(0.1, 2.0)
        s2 = s1 * rng.uniform(1.0, 1.5)
        c1 = rng.uniform(0.0, 1.0)
        c2 = c1 + rng.uniform(0.0, 1.0)
        f1, f2 = _exterior(b1, s1, c1), _exterior(b2, s2, c2)
        rr = np.linspace(t, 1, 50, endpoint=False)
        assert np.all(f1.inner(rr, 1 - rr) <= f2.inner(rr, 1 - rr)) and c1 <= c2
        u1 = S.solve_dirichlet(p, t, f1, gamma, op, tol=1e-11)
        u2 = S.solve_dirichlet(p, t, f2, gamma, op, tol=1e-11)
        assert u1.converged and u2.converged
        worst = max(worst, float(np.max(u1.profile.values - u2.profile.values)))
    ok = worst <= 1e-8
    record(12, ok, f"20 random ordered pairs: max(u1 - u2) = {worst:.3g} (slack 1e-8)", t0, 120)
    assert ok


if __name__ == "__main__":
    import sys

    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for fn in tests:
        try:
            fn()
        except AssertionError:
            pass
        n = int(fn.__name__.split("_")[1])
        print(line(n), flush=True)
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
