import math

import mpmath as mp
import numpy as np
import pytest

from ballpot import fraclap as F
from ballpot.model import FracParams, ParameterError
from ballpot.quad import SingularIntegrand, integrate
from ballpot.specfun import hyp2f1

mp.mp.dps = 25
P1 = FracParams(3, 1.0)
CASES = [(0.5, -0.2), (0.5, 0.6), (1.0, 0.2), (1.0, 0.6), (1.5, 0.0), (1.5, 0.8)]


@pytest.mark.parametrize("a,beta", CASES)
def test_quadrature_matches_exact_family(a, beta):
    p = FracParams(3, a)
    prof = F.PowerProfile(beta)
    for r in (0.0, 0.3, 0.7, 0.95, 0.999):
        assert F.fraclap_radial_quad(p, prof, r) == pytest.approx(F.fraclap_power_exact(p, prof, r), rel=1e-9)


def test_quadrature_dim5():
    p, prof = FracParams(5, 0.8), F.PowerProfile(0.3)
    for r in (0.0, 0.5, 0.9):
        assert F.fraclap_radial_quad(p, prof, r) == pytest.approx(F.fraclap_power_exact(p, prof, r), rel=1e-9)


def test_exact_family_against_mpmath():
    n, a, beta, r = 3, 1.0, 0.6, 0.5
    want = (-(2**a) * mp.gamma((n + a) / 2) * mp.gamma(1 - beta) / (mp.gamma(n / 2) * mp.gamma(1 - beta - a / 2))
            * (1 - r * r) ** (-(a + beta)) * mp.hyp2f1(-a / 2, n / 2 - beta - a / 2, n / 2, r * r))
    assert F.fraclap_power_exact(P1, F.PowerProfile(beta), r) == pytest.approx(float(want), rel=1e-12)


def test_angular_average_mpmath():
    a, r, rho = 1.0, 0.4, 0.7
    want = 2 * mp.pi * mp.quad(lambda th: mp.sin(th) * (r * r + rho * rho - 2 * r * rho * mp.cos(th)) ** (-2),
                               [0, mp.pi])
    assert F.angular_average(P1, r, rho) == pytest.approx(float(want), rel=1e-12)
    assert F.angular_average(P1, rho, r) == F.angular_average(P1, r, rho)
    assert F.angular_average(P1, r, r) == math.inf


def test_constant_function_annihilated():
    # on all of R^N: quad(c 1_B) accounts for the exterior through -c T(r); adding it back gives 0
    c = 2.5
    u = lambda rho, delta: np.full_like(np.asarray(rho, dtype=float), c)
    for r in (0.0, 0.4, 0.9):
        val = F.fraclap_radial_quad(P1, u, r) + P1.constants.c_int * c * F._tail_kernel(P1, r)
        assert abs(val) < 1e-12


def test_tail_kernel_values():
    assert F._tail_kernel(P1, 0.0) == pytest.approx(4 * math.pi, rel=1e-15)
    r = 0.5
    want = mp.quad(lambda rho: rho**2 * 2 * mp.pi * mp.quad(
        lambda th: mp.sin(th) * (r * r + rho * rho - 2 * r * rho * mp.cos(th)) ** (-2), [0, mp.pi]), [1, 2, mp.inf])
    assert F._tail_kernel(P1, r) == pytest.approx(float(want), rel=1e-9)


@pytest.mark.parametrize("a,beta", CASES)
def test_sign_law(a, beta):
    p = FracParams(3, a)
    s = math.copysign(1.0, a + 2 * beta - 2)
    for r in (0.0, 0.5, 0.99):
        assert math.copysign(1.0, F.fraclap_radial_quad(p, F.PowerProfile(beta), r)) == s


@pytest.mark.parametrize("a", [0.5, 1.0, 1.5])
def test_zero_at_critical_beta(a):
    p = FracParams(3, a)
    prof = F.PowerProfile(1 - a / 2)
    for r in (0.0, 0.5, 0.9):
        assert abs(F.fraclap_radial_quad(p, prof, r)) <= 1e-8
        assert F.fraclap_power_closed(p, prof, r) == 0.0


def test_phi_at_origin():
    for beta in (-0.3, 0.2, 0.7):
        assert F.phi(P1, beta, 0.0) == 3.0


def test_fitted_constant_matches_beta_function():
    for a, beta in CASES:
        p = FracParams(3, a)
        if a + 2 * beta - 2 == 0:
            continue
        fc = F.fit_lemma_constants(p, beta)
        assert fc.c_ab == pytest.approx(F.lemma_constant_exact(p, beta), rel=1e-8)
        assert fc.c_ab > 0 and fc.c_a > 0
        assert fc.c_a == pytest.approx(2 * p.constants.kappa_green * p.constants.omega_sphere)


def test_ratio_changes_sign():
    assert F.fit_lemma_constants(P1, 0.4).ratio < 0 < F.fit_lemma_constants(P1, 0.6).ratio


def test_fit_rejects():
    with pytest.raises(ParameterError):
        F.fit_lemma_constants(P1, 0.5)
    with pytest.raises(ParameterError):
        F.fit_lemma_constants(P1, 1.0)
    with pytest.raises(ParameterError):
        F.fraclap_radial_quad(P1, F.PowerProfile(0.2), 1.0)
    with pytest.raises(ParameterError):
        F.fraclap_radial_quad(P1, F.PowerProfile(1.2), 0.5)


def test_psi_beta_integral_form():
    beta, a = 0.6, 1.0
    assert F.psi_profile(P1, beta, 0.0) == 0.0
    for t in (0.3, 0.8):
        f = SingularIntegrand(lambda s, lo, hi: lo ** (a / 2 - 1) * hi ** (-a / 2) * (1 - s * t * t) ** (-beta - a / 2),
                              0.0, 1.0, a / 2 - 1, -a / 2, offsets=True)
        want = math.sin(a * math.pi / 2) / math.pi * t * integrate(f, 1e-12)
        scale = (a + 2 * beta - 2) * F.fit_lemma_constants(P1, beta).c_ab
        assert F.psi_profile(P1, beta, t) / scale == pytest.approx(want, rel=1e-9)


@pytest.mark.parametrize("beta", [0.2, 0.6])
def test_psi_reconstructed_from_closed_form(beta):
    # psi(s) = C(alpha) s^{1-N} int_0^s lambda^{N-1} v(lambda) dlambda with v the closed form
    fc = F.fit_lemma_constants(P1, beta)
    prof = F.PowerProfile(beta)
    for s in (0.3, 0.7):
        v = lambda lam: np.array([F.fraclap_power_closed(P1, prof, x) for x in lam]) * lam**2
        integral = integrate(SingularIntegrand(v, 0.0, s, 2.0, 0.0), 1e-12)
        assert fc.c_a * s**-2 * integral == pytest.approx(F.psi_profile(P1, beta, s), rel=1e-6)


def test_closed_form_shape_differs_from_exact():
    # the closed form reproduces the sign but not the r-dependence of the true value
    prof = F.PowerProfile(0.6)
    ratios = [F.fraclap_power_closed(P1, prof, r) / F.fraclap_power_exact(P1, prof, r) for r in (0.0, 0.5, 0.9)]
    assert all(q > 0 for q in ratios)
    assert ratios[0] > ratios[1] > ratios[2] > 1.0


def test_difference_accuracy_near_boundary():
    prof = F.PowerProfile(0.7)
    r = 1 - 1e-9
    rho = np.array([1 - 2e-9, 1 - 5e-10])
    d = prof.difference(r, rho, rho - r, 1 - rho)
    want = [float((1 - mp.mpf(x) ** 2) ** -0.7 - (1 - mp.mpf(r) ** 2) ** -0.7) for x in rho]
    assert np.allclose(d, want, rtol=1e-6)
