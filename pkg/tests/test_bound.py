import dataclasses
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from twistbound import (BoundConfig, Ellipse, InvalidC, Ribbon,
                        SigmaOutOfRange, Spectrum, TwistProfile, alpha_sq,
                        angular_energy_ratio, assemble_h_beta0,
                        build_cross_section, compute_bound, gamma_beta0,
                        ground_state, lt_constant, ribbon_lower_bound,
                        trace_neg_power)
from twistbound.bound import _curvature_flips


def test_gamma_branches():
    assert gamma_beta0(1.0, 2.0) == 1.0 / 192.0
    assert gamma_beta0(0.1, 1.0) == 1.0 / 3.0
    # crossover where both branches agree
    assert gamma_beta0(1.0, 1.0) == 1.0 / 48.0
    with pytest.raises(ValueError):
        gamma_beta0(-1.0, 1.0)
    with pytest.raises(ValueError):
        gamma_beta0(1.0, 0.0)


def test_alpha_sq_window():
    g = 0.03
    assert alpha_sq(g, g / 6.0) == pytest.approx(g / 2.0)
    with pytest.raises(InvalidC):
        alpha_sq(g, g / 3.0)
    with pytest.raises(InvalidC):
        alpha_sq(g, 0.0)
    with pytest.raises(InvalidC):
        alpha_sq(g, -0.01)


def test_lt_constant_exact_rationals():
    # half-odd-integer sigma must come out bit-exact, not 1 ulp off
    assert lt_constant(1.5) == 3.0 / 16.0
    assert lt_constant(0.5) == 0.5          # doubled below sigma = 3/2
    assert lt_constant(2.5) == 5.0 / 32.0


def test_lt_constant_gamma_quotient():
    # sigma = 1: 2 * Gamma(2) / (sqrt(4 pi) Gamma(5/2)) = 4 / (3 pi)
    assert lt_constant(1.0) == pytest.approx(4.0 / (3.0 * math.pi), rel=1e-14)
    with pytest.raises(SigmaOutOfRange):
        lt_constant(0.4)


def test_lt_constant_doubling_is_continuous_in_the_gap():
    # the factor 2 applies on [1/2, 3/2); check it actually doubles
    base = math.gamma(2.0) / (math.sqrt(4.0 * math.pi) * math.gamma(2.5))
    assert lt_constant(1.0) == pytest.approx(2.0 * base, rel=1e-14)


def _spec(vals):
    v = np.asarray(vals, dtype=float)
    return Spectrum(eigenvalues=v, eigenvectors=np.eye(v.size),
                    residuals=np.zeros(v.size), iterations=0, converged=True)


def test_trace_neg_power():
    s = _spec([-1.0, -4.0])
    assert trace_neg_power(s, 2.0) == 17.0
    assert trace_neg_power(s, 2.5) == pytest.approx(33.0)
    assert trace_neg_power(_spec([0.5, 2.0]), 2.0) == 0.0
    with pytest.raises(ValueError):
        trace_neg_power(s, 0.0)


def test_curvature_flips():
    x = np.linspace(-1.0, 1.0, 17)
    assert _curvature_flips(x ** 2) == 0          # uniformly convex
    assert _curvature_flips(np.zeros(9)) == 0     # flat, no signal
    saw = np.array([0.0, 1.0, 0.0, 1.0, 0.0])
    assert _curvature_flips(saw) == 2
    # d2 of sin(3x) tracks -sin(3x), one sign change inside [-1, 1]
    assert _curvature_flips(np.sin(3.0 * x)) == 1
    # sin(5x) flips at 0 and +-pi/5: three changes
    assert _curvature_flips(np.sin(5.0 * x)) == 3


def _prof(a, beta0=1.0, s0=1.0):
    return TwistProfile(beta0=beta0, a=a, s0=s0)


def test_ribbon_lower_bound_formula():
    p = _prof(0.01, beta0=0.1)
    a2 = 0.02
    r1 = ribbon_lower_bound(1, 1.5, p, a2)
    r2 = ribbon_lower_bound(2, 1.5, p, a2)
    assert r1 > 0.0
    # geometry factor steps by 4^(sigma+1/2) = 16 per k at sigma = 3/2
    assert r2 / r1 == pytest.approx(16.0, rel=1e-12)
    # quadrupling alpha^2 halves the 1/alpha prefactor
    assert ribbon_lower_bound(1, 1.5, p, 4.0 * a2) == pytest.approx(
        0.5 * r1, rel=1e-12)
    assert ribbon_lower_bound(1, 1.5, _prof(0.0, beta0=0.1), a2) == 0.0
    with pytest.raises(ValueError):
        ribbon_lower_bound(0, 1.5, p, a2)


def test_bound_config_validation():
    with pytest.raises(SigmaOutOfRange):
        BoundConfig(sigma=0.3)
    with pytest.raises(ValueError):
        BoundConfig(n_q=8)
    with pytest.raises(ValueError):
        BoundConfig(n_q=1)
    with pytest.raises(ValueError):
        BoundConfig(resolutions=())


@pytest.fixture(scope="module")
def ellipse8():
    return build_cross_section(Ellipse(eps=0.3), 0.125)


_COARSE = BoundConfig(n_q=9, resolutions=(0.125,), block=16)


def test_zero_amplitude_bound_is_exactly_zero(ellipse8):
    cfg = dataclasses.replace(_COARSE, resolutions=(0.25, 0.125))
    rep = compute_bound(ellipse8, _prof(0.0), cfg)
    assert rep.bound == 0.0
    assert all(r[2] == 0.0 for r in rep.per_s)
    assert all(r[1] == 0 for r in rep.per_s)
    # both resolutions land under the absolute floor: gate passes
    assert rep.convergence_gate["passed"]
    assert rep.convergence_gate["below_floor"]
    assert not rep.non_rigorous


def test_support_endpoints_contribute_nothing(ellipse8):
    rep = compute_bound(ellipse8, _prof(0.05), _COARSE)
    assert rep.per_s[0][2] == 0.0
    assert rep.per_s[-1][2] == 0.0
    assert rep.per_s[0][0] == -1.0
    assert rep.per_s[-1][0] == 1.0


def test_bound_assembles_from_reported_factors(ellipse8):
    rep = compute_bound(ellipse8, _prof(0.05), _COARSE)
    assert rep.bound == rep.alpha_sq ** rep.sigma * rep.lt_constant * rep.integral
    assert rep.bound > 0.0
    assert rep.non_rigorous          # amplitude far outside the window
    assert len(rep.per_s) == _COARSE.n_q
    assert "Ellipse" in rep.shape
    assert rep.profile["a"] == 0.05


def test_bound_monotone_in_amplitude(ellipse8):
    bounds = [compute_bound(ellipse8, _prof(a), _COARSE).bound
              for a in (0.01, 0.03, 0.05)]
    assert bounds[0] < bounds[1] < bounds[2]


def test_quadrature_refinement_settles(ellipse8):
    p = _prof(0.05)
    b9 = compute_bound(ellipse8, p, _COARSE).bound
    b17 = compute_bound(ellipse8, p,
                        dataclasses.replace(_COARSE, n_q=17)).bound
    b33 = compute_bound(ellipse8, p,
                        dataclasses.replace(_COARSE, n_q=33)).bound
    assert abs(b17 - b9) / b17 < 0.05
    assert abs(b33 - b17) / b33 < 0.01


def test_worker_pool_bitwise_stable(ellipse8):
    p = _prof(0.05)
    r1 = compute_bound(ellipse8, p, _COARSE)
    r2 = compute_bound(ellipse8, p,
                       dataclasses.replace(_COARSE, workers=4))
    assert r1.to_dict() == r2.to_dict()


def test_single_resolution_gate_declines(ellipse8):
    rep = compute_bound(ellipse8, _prof(0.05), _COARSE)
    assert rep.convergence_gate["passed"] is False
    assert "note" in rep.convergence_gate


def test_ribbon_report_carries_lower_bound():
    cs = build_cross_section(Ribbon(k=1, eps_r=0.4), 0.125)
    cfg = dataclasses.replace(_COARSE, n_q=5)
    rep = compute_bound(cs, _prof(0.01, beta0=0.1), cfg)
    assert rep.ribbon_lower_bound is not None
    assert rep.ribbon_lower_bound > 0.0
    assert "ribbon_lower_bound" in rep.to_dict()


def test_disc_report_has_no_ribbon_field(ellipse8):
    rep = compute_bound(ellipse8, _prof(0.05), _COARSE)
    assert rep.ribbon_lower_bound is None
    assert "ribbon_lower_bound" not in rep.to_dict()


def test_angular_ratio_exceeds_zigzag_floor():
    # the discrete angular Rayleigh quotient of the ground state must
    # clear the k-dependent geometric floor with room to spare
    for k, floor in ((1, 1.6211), (2, 6.4846)):
        cs = build_cross_section(Ribbon(k=k, eps_r=0.1), 1.0 / 16)
        _, f = ground_state(assemble_h_beta0(cs, 0.1), block=16)
        assert angular_energy_ratio(cs, f) > floor
