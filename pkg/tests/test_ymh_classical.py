import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import cKDTree

from chaoscope import dynsys
from chaoscope import ymh_classical as yc
from chaoscope.errors import DegenerateVacuum, InvalidSeed

P = yc.YmhParams(1.0, 1.0)
CHAOTIC_SEED = 16  # index into the default 8x8 grid at E=10, g=1, v=1


def test_params():
    assert yc.YmhParams(1.3, 0.7).omega_sq == pytest.approx(2 * 1.3**2 * 0.7**2, rel=1e-15)
    with pytest.raises(ValueError):
        yc.YmhParams(1.0, -1.0)


def test_energy_values():
    assert yc.energy(P, [1, 1, 0, 0]) == 2.5
    assert yc.energy(P, [0, 0, 0, 0]) == 0.0
    assert yc.energy(yc.YmhParams(1.0, 0.0), [1.5, 2.0, 0, 0]) == pytest.approx(0.5 * 1.5**2 * 4.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.2, 2), st.floats(0, 2))
def test_force_is_minus_gradient(q1, q2, g, v):
    p = yc.YmhParams(g, v)
    eps = 1e-6
    grad = [
        (yc.potential(p, q1 + eps, q2) - yc.potential(p, q1 - eps, q2)) / (2 * eps),
        (yc.potential(p, q1, q2 + eps) - yc.potential(p, q1, q2 - eps)) / (2 * eps),
    ]
    np.testing.assert_allclose(yc.force(p, np.array([q1, q2])), -np.array(grad), rtol=1e-6, atol=1e-6)
    flow = yc.make_flow(p)
    z = np.array([q1, q2, 0.3, -0.2])
    np.testing.assert_allclose(flow.jacobian(z, 0.0), dynsys.finite_difference_jacobian(flow.rhs, z), rtol=1e-5, atol=1e-6)


def test_curvature_numerator():
    assert yc.gaussian_curvature_sign(P, 0.0, 0.0) == 4.0
    assert abs(yc.gaussian_curvature_sign(P, math.sqrt(2), math.sqrt(2))) < 1e-12
    assert yc.gaussian_curvature_sign(P, 2.0, 2.0) == pytest.approx(-28.0)


@pytest.mark.parametrize("g,v,expected", [(1, 1, 6.0), (2, 1, 24.0), (1, 2, 96.0)])
def test_critical_energy(g, v, expected):
    rep = yc.critical_energy(yc.YmhParams(g, v))
    assert rep.E_c == expected
    assert abs(rep.E_c_numeric - expected) / expected < 1e-9
    s = math.sqrt(2) * v
    assert abs(yc.potential(yc.YmhParams(g, v), s, s) - expected) < 1e-12 * expected
    np.testing.assert_allclose(rep.minimizer, (s, s), rtol=1e-5)


def test_critical_vacuum_and_degenerate_case():
    assert yc.critical_vacuum(10.0, 1.0) == pytest.approx((10 / 6) ** 0.25, rel=1e-15)
    assert abs(yc.critical_vacuum(10.0, 1.0) - 1.1362) < 1e-4
    with pytest.raises(DegenerateVacuum):
        yc.critical_energy(yc.YmhParams(1.0, 0.0))


def test_critical_energy_monotone():
    vs = np.linspace(0.2, 2, 10)
    gs = np.linspace(0.2, 2, 10)
    for g in gs:
        e = [yc.critical_energy(yc.YmhParams(g, v)).E_c_numeric for v in vs]
        assert np.all(np.diff(e) > 0)
    for v in vs:
        e = [yc.critical_energy(yc.YmhParams(g, v)).E_c_numeric for g in gs]
        assert np.all(np.diff(e) > 0)


def test_seed_validation():
    with pytest.raises(InvalidSeed) as info:
        yc.section_seed(P, 10.0, 50.0, 0.0, index=7)
    assert info.value.index == 7
    with pytest.raises(InvalidSeed):
        yc.poincare_section(P, 10.0, [(0.1, 0.0), (100.0, 0.0)], 10.0)
    s = yc.section_seed(P, 10.0, 0.5, 1.0)
    assert s[0] == 0 and s[2] > 0
    assert yc.energy(P, s) == pytest.approx(10.0, rel=1e-15)


def test_seed_grid_inside_ellipse():
    seeds = yc.seed_grid(P, 10.0)
    assert len(seeds) == 64
    for q2, p2 in seeds:
        assert 0.5 * p2 * p2 + yc.potential(P, 0.0, q2) < 10.0


def test_integration_conserves_energy_and_reverses():
    s0 = yc.section_seed(P, 10.0, *yc.seed_grid(P, 10.0)[CHAOTIC_SEED])
    traj = yc.integrate(P, s0, 1000.0, 1e-3, record_every=1000)
    e = np.array([yc.energy(P, z) for z in traj.states])
    assert np.max(np.abs(e - 10.0)) / 10.0 < 1e-8
    short = yc.integrate(P, s0, 10.0, 1e-3).final_state
    back = short * np.array([1, 1, -1, -1])
    ret = yc.integrate(P, back, 10.0, 1e-3).final_state * np.array([1, 1, -1, -1])
    assert np.max(np.abs(ret - s0)) < 1e-6


def test_kernel_matches_generic_integrator():
    s0 = yc.section_seed(P, 10.0, 0.3, 0.5)
    fast = yc.integrate(P, s0, 2.0, 1e-2).final_state
    slow = dynsys.integrate(yc.make_flow(P), s0, 2.0, "symplectic_leapfrog", 1e-2).final_state
    np.testing.assert_allclose(fast, slow, rtol=1e-12, atol=1e-12)


def test_section_invariants_and_symmetry():
    seeds = [(0.4, 0.6), (-0.4, -0.6)]
    sec = yc.poincare_section(P, 10.0, seeds, 200.0)
    assert len(sec.points) > 20
    assert sec.crossing_rule == "q1=0, p1>0"
    assert np.all(np.abs(sec.states[:, 0]) < 1e-10)
    assert np.all(sec.states[:, 2] > 0)
    p1 = sec.reconstructed_p1()
    recon = [yc.energy(P, [0.0, q2, a, p2]) for (q2, p2), a in zip(sec.points, p1)]
    assert np.max(np.abs(np.array(recon) - 10.0)) < 1e-8
    a = sec.points[sec.seed_index == 0]
    b = sec.points[sec.seed_index == 1]
    n = min(len(a), len(b))
    np.testing.assert_allclose(a[:n], -b[:n], atol=1e-9)
    # seed-major, time-minor ordering
    assert np.all(np.diff(sec.seed_index) >= 0)
    for i in (0, 1):
        np.testing.assert_array_equal(sec.crossing_index[sec.seed_index == i], np.arange(np.sum(sec.seed_index == i)))


def test_regular_section_traces_a_curve():
    p = yc.YmhParams(1.0, 1.2)
    sec = yc.poincare_section(p, 10.0, yc.seed_grid(p, 10.0)[:1], 1000.0)
    d, _ = cKDTree(sec.points).query(sec.points, k=2)
    assert d[:, 1].max() < 0.05


def test_chaotic_section_fills_an_area():
    seed = yc.seed_grid(P, 10.0)[CHAOTIC_SEED]
    sec = yc.poincare_section(P, 10.0, [seed], 1000.0)
    d, _ = cKDTree(sec.points).query(sec.points, k=2)
    assert d[:, 1].max() > 0.2


def test_lyapunov_spectrum_pairs():
    seed = yc.seed_grid(P, 10.0)[CHAOTIC_SEED]
    res = yc.lyapunov_spectrum(P, yc.section_seed(P, 10.0, *seed), 1000.0)
    ex = res.exponents
    assert ex[0] > yc.CHAOS_THRESHOLD
    assert abs(ex.sum()) < 5e-3
    assert abs(ex[0] + ex[3]) < 1e-2 and abs(ex[1] + ex[2]) < 1e-2


def test_compiled_lyapunov_agrees_with_generic():
    s0 = yc.section_seed(P, 10.0, *yc.seed_grid(P, 10.0)[CHAOTIC_SEED])
    fast = yc.lyapunov_spectrum(P, s0, 100.0, 1.0, 1e-2)
    slow = dynsys.lyapunov_spectrum(yc.make_flow(P), s0, 100.0, 1.0, step=1e-2)
    np.testing.assert_allclose(fast.exponents, slow.exponents, atol=1e-8)


def test_chaotic_fraction_extremes():
    p = yc.YmhParams(1.0, 3.0)
    assert yc.chaotic_fraction(p, 10.0, yc.seed_grid(p, 10.0, 4, 4)) == 0.0
    assert yc.chaotic_fraction(P, 100.0, yc.seed_grid(P, 100.0, 4, 4)) > 0.5


def test_survey_parallel_matches_serial():
    seeds = yc.seed_grid(P, 10.0, 2, 2)
    a = yc.seed_survey(P, 10.0, seeds, horizon=100.0)
    b = yc.seed_survey(P, 10.0, seeds, horizon=100.0, jobs=2)
    np.testing.assert_array_equal(a.max_exponents, b.max_exponents)
