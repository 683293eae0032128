import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.special import jn_zeros

from twistbound import (Disc, Ellipse, MemoryBudgetExceeded, PolygonWithHoles,
                        TruncationTooSmall, TwistProfile, assemble_3d,
                        assemble_H_of_s, assemble_angular, assemble_h_beta0,
                        assemble_laplacian, build_cross_section,
                        effective_potential, estimate_3d_bytes, ground_state)

J01_SQ = float(jn_zeros(0, 1)[0] ** 2)     # 5.783185962946785


def _single_node():
    box = PolygonWithHoles(outer=((-0.4, -0.4), (0.4, -0.4),
                                  (0.4, 0.4), (-0.4, 0.4)))
    return build_cross_section(box, 0.5)


def _strip3():
    box = PolygonWithHoles(outer=((-0.8, -0.2), (0.8, -0.2),
                                  (0.8, 0.2), (-0.8, 0.2)))
    return build_cross_section(box, 0.5)


def test_laplacian_single_node():
    cs = _single_node()
    assert cs.nodes == ((0, 0),)
    lap = assemble_laplacian(cs)
    assert_array_equal(lap.mat.toarray(), [[16.0]])


def test_laplacian_three_node_strip():
    cs = _strip3()
    lap = assemble_laplacian(cs).mat.toarray()
    expected = np.array([[16.0, -4.0, 0.0],
                         [-4.0, 16.0, -4.0],
                         [0.0, -4.0, 16.0]])
    assert_array_equal(lap, expected)


def test_laplacian_row_sum_with_boundary_deficit(disc16):
    # interior rows sum to 0; rows touching the boundary keep the
    # dropped-column weight as a positive deficit
    lap = assemble_laplacian(disc16)
    sums = np.asarray(lap.mat.sum(axis=1)).ravel()
    assert np.all(sums >= -1e-9)
    assert np.any(sums > 1.0)
    assert lap.sym_defect == 0.0


def test_angular_exactly_antisymmetric(disc16):
    a = assemble_angular(disc16).mat
    d = a + a.T
    assert d.nnz == 0 or np.max(np.abs(d.data)) == 0.0


def test_angular_vanishes_on_single_row_strip():
    # one row of nodes on the t3 axis: no rotational neighbours survive
    a = assemble_angular(_strip3()).mat
    assert a.nnz == 0 or np.max(np.abs(a.data)) == 0.0


def _full_stencil(cs):
    keep = np.zeros(cs.n, dtype=bool)
    for r, (i, j) in enumerate(cs.nodes):
        keep[r] = all((i + di, j + dj) in cs.index
                      for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)))
    return keep


def test_angular_exact_on_low_degree_fields(disc16):
    # central differences are exact on linear and quadratic monomials
    a = assemble_angular(disc16).mat
    core = _full_stencil(disc16)
    t2, t3 = disc16.t2, disc16.t3
    assert_allclose((a @ t3)[core], t2[core], atol=1e-13)
    assert_allclose((a @ t2)[core], -t3[core], atol=1e-13)
    assert_allclose((a @ (t2 ** 2 + t3 ** 2))[core], 0.0, atol=1e-12)


def test_h_beta0_bitwise_symmetric(disc16, disc16_h):
    assert disc16_h.sym_defect == 0.0
    d = disc16_h.mat - disc16_h.mat.T
    assert d.nnz == 0 or np.max(np.abs(d.data)) == 0.0


def test_h_beta0_zero_twist_is_laplacian(disc16):
    lap = assemble_laplacian(disc16)
    h0 = assemble_h_beta0(disc16, 0.0)
    d = h0.mat - lap.mat
    assert d.nnz == 0 or np.max(np.abs(d.data)) == 0.0


def test_h_beta0_dominates_laplacian(disc16, disc16_h):
    # quadratic form gains beta0^2 ||A x||^2 >= 0
    lap = assemble_laplacian(disc16)
    rng = np.random.default_rng(7)
    for _ in range(100):
        x = rng.standard_normal(disc16.n)
        qh = x @ (disc16_h.mat @ x)
        ql = x @ (lap.mat @ x)
        assert qh >= ql - 1e-9 * disc16_h.scale()


def test_ground_energy_grows_with_twist(disc16):
    es = []
    for b in (0.0, 0.5, 1.0):
        e, _ = ground_state(assemble_h_beta0(disc16, b), block=16)
        es.append(e)
    assert es[0] <= es[1] <= es[2]
    # the disc ground state is nearly rotation invariant, so the twist
    # term moves the bottom only a little
    assert es[2] - es[0] < 0.05


def test_disc_energy_first_order_in_h():
    # staircase masks give O(h) eigenvalue error; successive error
    # ratios sit near 2, well short of the second-order value 4
    errs = []
    for h in (1.0 / 8, 1.0 / 16, 1.0 / 32):
        cs = build_cross_section(Disc(), h)
        e, _ = ground_state(assemble_h_beta0(cs, 1.0), block=16)
        errs.append(J01_SQ - e)
    assert all(e > 0 for e in errs)      # masks shrink the domain
    for coarse, fine in zip(errs, errs[1:]):
        assert 1.6 < coarse / fine < 2.2


def test_ellipse_energy_increases_with_eps():
    es = []
    for eps in (0.0, 0.15, 0.3):
        cs = build_cross_section(Ellipse(eps=eps), 1.0 / 16)
        e, _ = ground_state(assemble_h_beta0(cs, 1.0), block=16)
        es.append(e)
    assert es[0] < es[1] < es[2]


@pytest.fixture(scope="module")
def disc16_ground(disc16, disc16_h):
    e, f = ground_state(disc16_h, block=16)
    return e, f


def _profile():
    return TwistProfile(beta0=1.0, a=0.1, s0=1.0)


def test_potential_exact_zero_off_support(disc16, disc16_ground):
    e, f = disc16_ground
    v, stats = effective_potential(disc16, f, e, _profile(), 0.01, s=1.5)
    assert_array_equal(v, np.zeros(disc16.n))
    assert stats.cap == 0.0
    assert stats.n_clamped == 0
    assert stats.n_sample == 0


def test_potential_clamp_respected(disc16, disc16_ground):
    e, f = disc16_ground
    v, stats = effective_potential(disc16, f, e, _profile(), 0.01, s=0.5)
    assert np.max(np.abs(v)) <= stats.cap * (1.0 + 1e-12)
    assert 0 <= stats.n_clamped <= disc16.n
    assert stats.n_floored == 0          # disc ground state is positive
    assert stats.n_sample > 0.5 * disc16.n
    assert stats.q99 > 0.0


def test_potential_cap_formula(disc16, disc16_ground):
    from twistbound.profiles import mu, mu_dot
    e, f = disc16_ground
    p = _profile()
    s, a2 = 0.5, 0.01
    _, stats = effective_potential(disc16, f, e, p, a2, s=s)
    mu_s = mu(p, s)
    expect = (abs(mu_dot(p, s)) + mu_s * (2.0 * p.beta0 - mu_s)) * stats.q99 / a2
    assert stats.cap == pytest.approx(expect, rel=1e-12)


def test_potential_rejects_bad_alpha(disc16, disc16_ground):
    e, f = disc16_ground
    with pytest.raises(ValueError):
        effective_potential(disc16, f, e, _profile(), 0.0, s=0.0)


def test_H_of_s_shifts_by_E(disc16, disc16_h, disc16_ground):
    e, f = disc16_ground
    p = _profile()
    op, _ = assemble_H_of_s(disc16, f, e, p, 0.01, s=1.5, h_op=disc16_h)
    d = op.mat - (disc16_h.mat - e * np.eye(disc16.n))
    assert np.max(np.abs(d)) < 1e-12 * disc16_h.scale()
    # off the slowdown support the shifted operator is PSD up to tolerance
    lam = np.linalg.eigvalsh(op.mat.toarray())
    assert lam[0] > -1e-8 * disc16_h.scale()


def test_H_of_s_precomputed_matches_fresh(disc16, disc16_h, disc16_ground):
    e, f = disc16_ground
    p = _profile()
    ang = assemble_angular(disc16)
    op1, s1 = assemble_H_of_s(disc16, f, e, p, 0.01, s=0.3,
                              h_op=disc16_h, angular=ang)
    op2, s2 = assemble_H_of_s(disc16, f, e, p, 0.01, s=0.3)
    d = op1.mat - op2.mat
    assert d.nnz == 0 or np.max(np.abs(d.data)) == 0.0
    assert s1 == s2


def test_3d_requires_room_beyond_support():
    cs = _strip3()
    with pytest.raises(TruncationTooSmall):
        assemble_3d(cs, _profile(), 1.0, 24)
    with pytest.raises(ValueError):
        assemble_3d(cs, _profile(), 3.0, 8)


def test_3d_memory_budget():
    cs = _strip3()
    assert estimate_3d_bytes(cs, 48) > estimate_3d_bytes(cs, 24)
    with pytest.raises(MemoryBudgetExceeded):
        assemble_3d(cs, _profile(), 3.0, 24, mem_budget_bytes=128)


def test_3d_separable_at_negligible_twist():
    # beta0 ~ 1e-30 decouples the axis: eigenvalues are tensor sums of
    # cross-section and 1D Dirichlet axis eigenvalues
    cs = _strip3()
    p = TwistProfile(beta0=1e-30, a=0.0, s0=1.0)
    n_s = 16
    h3 = assemble_3d(cs, p, 3.0, n_s)
    lam3 = np.linalg.eigvalsh(h3.mat.toarray())
    lam_omega = np.linalg.eigvalsh(assemble_h_beta0(cs, 0.0).mat.toarray())
    ds = 6.0 / (n_s + 1)
    ax = (2.0 - 2.0 * np.cos(np.arange(1, n_s + 1) * np.pi / (n_s + 1))) / ds ** 2
    tensor = np.sort(np.add.outer(lam_omega, ax).ravel())
    assert_allclose(lam3, tensor, atol=1e-8 * h3.scale())


def test_3d_constant_twist_stays_above_threshold():
    cs = build_cross_section(Ellipse(eps=0.3), 0.25)
    p = TwistProfile(beta0=1.0, a=0.0, s0=1.0)
    e, _ = ground_state(assemble_h_beta0(cs, 1.0))
    h3 = assemble_3d(cs, p, 3.0, 24)
    lam3 = np.linalg.eigvalsh(h3.mat.toarray())
    assert lam3[0] >= e - 1e-10 * h3.scale()


def test_3d_slowdown_lowers_bottom():
    cs = build_cross_section(Ellipse(eps=0.3), 0.25)
    l0 = np.linalg.eigvalsh(
        assemble_3d(cs, TwistProfile(beta0=1.0, a=0.0, s0=1.0),
                    3.0, 24).mat.toarray())[0]
    l5 = np.linalg.eigvalsh(
        assemble_3d(cs, TwistProfile(beta0=1.0, a=0.5, s0=1.0),
                    3.0, 24).mat.toarray())[0]
    assert l0 - l5 > 1e-3


def test_3d_bitwise_symmetric():
    cs = _strip3()
    h3 = assemble_3d(cs, _profile(), 3.0, 16)
    assert h3.sym_defect == 0.0


def test_scale_is_max_row_sum(disc16_h):
    dense = np.abs(disc16_h.mat.toarray()).sum(axis=1)
    assert disc16_h.scale() == pytest.approx(np.max(dense))


def test_coo_text_round_trip():
    cs = _strip3()
    lap = assemble_laplacian(cs)
    text = lap.to_coo_text()
    rows = [ln.split() for ln in text.strip().splitlines()]
    rebuilt = np.zeros((3, 3))
    for r, c, v in rows:
        rebuilt[int(r), int(c)] += float(v)
    assert_array_equal(rebuilt, lap.mat.toarray())
