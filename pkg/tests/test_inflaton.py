import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaoscope import dynsys
from chaoscope import inflaton as inf
from chaoscope.dynsys import FixedPointClass
from chaoscope.errors import IntegrationDiverged, NondifferentiablePoint

ABS = inf.InflatonParams(lam=3.0, v=1.0, gamma=0.5, hubble_variant="abs_plus")
PLAIN = inf.InflatonParams(lam=3.0, v=1.0, gamma=0.5, hubble_variant="plain_plus")


def test_hubble_variants():
    assert inf.hubble(ABS, 0.0) == 0.5
    assert inf.hubble(PLAIN, 0.0) == -0.5
    for variant in inf.HubbleVariant:
        p = inf.InflatonParams(3.0, 1.0, 0.5, variant)
        assert inf.hubble(p, 1.0) == 0.0
        assert inf.hubble(p, -1.0) == 0.0
    minus = inf.InflatonParams(3.0, 1.0, 0.5, "abs_minus")
    assert inf.hubble(minus, 0.0) == -0.5
    assert minus.anti_damped and not ABS.anti_damped


def test_hubble_vectorised():
    phi = np.array([0.0, 0.5, 2.0])
    np.testing.assert_allclose(inf.hubble(ABS, phi), [0.5, 0.375, 1.5])
    np.testing.assert_allclose(inf.hubble(PLAIN, phi), [-0.5, -0.375, 1.5])


def test_flow_values():
    flow = inf.make_flow(ABS)
    np.testing.assert_array_equal(flow.rhs(np.array([0.0, 0.0]), 0.0), [0.0, 0.0])
    np.testing.assert_allclose(flow.rhs(np.array([0.5, 0.0]), 0.0), [0.0, 9.0 / 8.0], rtol=1e-15)
    assert flow.divergence([0.0, 0.0]) == pytest.approx(-1.5, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.floats(-2.5, 2.5), st.floats(-2, 2), st.sampled_from(list(inf.HubbleVariant)))
def test_jacobian_matches_finite_differences(phi, chi, variant):
    p = inf.InflatonParams(3.0, 1.0, 0.5, variant)
    if abs(abs(phi) - 1.0) < 1e-3:
        phi += 0.01  # stay off the |.| kink
    flow = inf.make_flow(p)
    z = np.array([phi, chi])
    fd = dynsys.finite_difference_jacobian(flow.rhs, z)
    np.testing.assert_allclose(flow.jacobian(z, 0.0), fd, rtol=1e-5, atol=1e-6)
    assert flow.divergence(z) == pytest.approx(-3.0 * inf.hubble(p, phi), abs=1e-12)


def test_stability_eigenvalues_at_origin():
    s1, s2 = inf.stability_eigenvalues(ABS, 0.0, 0.0)
    assert s1 == pytest.approx(-0.75 + 0.5 * math.sqrt(14.25), abs=1e-14)
    assert s2 == pytest.approx(-0.75 - 0.5 * math.sqrt(14.25), abs=1e-14)
    assert s1.real > 0 > s2.real
    jac = inf.make_flow(ABS).jacobian(np.zeros(2), 0.0)
    np.testing.assert_allclose(sorted(np.linalg.eigvals(jac).real), sorted([s1.real, s2.real]), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_closed_form_eigenvalues_match_jacobian(phi, chi):
    if abs(abs(phi) - 1.0) < 1e-6:
        return
    closed = np.array(inf.stability_eigenvalues(ABS, phi, chi))
    numeric = np.linalg.eigvals(inf.make_flow(ABS).jacobian(np.array([phi, chi]), 0.0))
    key = lambda z: (round(z.real, 9), round(z.imag, 9))  # noqa: E731
    np.testing.assert_allclose(sorted(closed, key=key), sorted(numeric, key=key), atol=1e-9)


def test_eigenvalues_at_vacuum():
    s1, s2 = inf.stability_eigenvalues(PLAIN, 1.0, 0.0)
    assert s1.real == 0 and s2.real == 0
    assert abs(s1.imag) == pytest.approx(math.sqrt(6.0), rel=1e-15)
    with pytest.raises(NondifferentiablePoint):
        inf.stability_eigenvalues(ABS, 1.0, 0.0)
    with pytest.raises(NondifferentiablePoint):
        inf.stability_eigenvalues(ABS, -1.0, 0.3)


def test_instability_predicate_band():
    lo, hi = inf.instability_band(ABS)
    assert hi == pytest.approx(1.0 / math.sqrt(3.0), rel=1e-15) and lo == -hi
    for phi in np.linspace(-1.5, 1.5, 301):
        if abs(abs(phi) - hi) < 1e-9:
            continue
        assert inf.is_locally_unstable(ABS, phi, 0.0) == (lo < phi < hi)


def test_bendixson():
    assert inf.bendixson_excludes_cycles(ABS, (-0.9, 0.9))
    assert inf.bendixson_excludes_cycles(ABS, (1.1, 2.0))
    assert not inf.bendixson_excludes_cycles(ABS, (-2.0, 2.0))
    assert inf.bendixson_excludes_cycles(PLAIN, (-1.0, 1.0))
    assert not inf.bendixson_excludes_cycles(PLAIN, (-2.0, 2.0))


def test_fixed_points_bifurcation():
    for p in (inf.InflatonParams(3.0, 0.0, 0.5), inf.InflatonParams(3.0, 0.0, 0.5, "plain_plus")):
        fps = inf.fixed_points(p)
        assert len(fps) == 1
        assert np.max(np.abs(fps[0].location)) < 1e-10
        assert inf.is_stable_fixed_point(p, fps[0])
    fps = inf.fixed_points(ABS)
    locs = np.array([f.location for f in fps])
    np.testing.assert_allclose(locs, [[-1, 0], [0, 0], [1, 0]], atol=1e-10)
    assert fps[1].classification is FixedPointClass.saddle
    assert np.prod(fps[1].eigenvalues).real < 0 and np.all(fps[1].eigenvalues.imag == 0)
    assert inf.is_stable_fixed_point(ABS, fps[0]) and inf.is_stable_fixed_point(ABS, fps[2])
    assert not inf.is_stable_fixed_point(ABS, fps[1])


def test_classify_from_guesses():
    flow = inf.make_flow(ABS)
    rep = dynsys.classify_fixed_point(flow, (0.1, 0.0))
    assert np.allclose(rep.location, 0.0, atol=1e-12) and rep.classification is FixedPointClass.saddle
    rep = dynsys.classify_fixed_point(flow, (0.9, 0.0))
    assert np.allclose(rep.location, (1.0, 0.0), atol=1e-12)
    assert inf.is_stable_fixed_point(ABS, rep)


def test_potential_shape():
    assert inf.potential(ABS, 1.0) == 0 and inf.potential(ABS, -1.0) == 0
    assert inf.potential(ABS, 0.0) == pytest.approx(3.0 / 4.0)
    grid = np.linspace(-2, 2, 4001)
    assert abs(abs(grid[np.argmin(inf.potential(ABS, grid))]) - 1.0) < 1e-3


def test_lienard_form():
    lf = inf.lienard_form(ABS)
    xs = np.linspace(-3, 3, 61)
    assert max(abs(lf.F(x) + lf.F(-x)) for x in xs) < 1e-12
    assert max(abs(lf.G_force(x) + lf.G_force(-x)) for x in xs) < 1e-12
    assert lf.F(0.0) == 0 and abs(lf.F(math.sqrt(3.0))) < 1e-12
    assert all(lf.F(x) < 0 for x in np.linspace(0.01, math.sqrt(3) - 0.01, 50))
    assert lf.alpha == 1.0


def test_gamma_G_coupling():
    p = inf.InflatonParams.from_G(400.0, 1.0, 0.75)
    assert p.gamma == pytest.approx(math.sqrt(2 * math.pi * 0.75 * 400 / 3), rel=1e-15)
    assert inf.coupled_G(p.gamma, 400.0) == pytest.approx(0.75, rel=1e-14)
    with pytest.raises(ValueError):
        inf.InflatonParams(400.0, 1.0, 1.0, "plain_plus", G=0.75)
    with pytest.raises(ValueError):
        inf.InflatonParams(-1.0, 1.0, 1.0)


def test_limit_cycle_plain_variant():
    rep = inf.detect_limit_cycle(PLAIN, (-0.5, 0.0), 50.0, 50.0)
    assert rep.found
    assert rep.period_spread < 1e-4
    assert rep.amplitude > 1.0


def test_no_limit_cycle_abs_variant():
    rep = inf.detect_limit_cycle(ABS, (-0.5, 0.0), 50.0, 50.0)
    assert not rep.found
    traj = dynsys.integrate(inf.make_flow(ABS), (-0.5, 0.0), 100.0, "rk4", 1e-2)
    _, dist = inf.nearest_attractor(ABS, traj.final_state)
    assert dist < 0.05


def test_basin_sensitivity_near_saddle():
    flow = inf.make_flow(ABS)
    eps = 1e-3
    split = False
    for delta in (0.0, 0.25, 0.5):
        ends = [
            np.sign(dynsys.integrate(flow, (s * eps, delta), 60.0, "rk4", 1e-2, record_every=10**6).final_state[0])
            for s in (1, -1)
        ]
        split |= ends[0] != ends[1]
    assert split


def test_anti_damped_variant_diverges():
    p = inf.InflatonParams(3.0, 1.0, 0.5, "abs_minus")
    with pytest.raises(IntegrationDiverged):
        dynsys.integrate(inf.make_flow(p), (0.0, 0.5), 200.0, "rk4", 1e-2)


@pytest.mark.slow
@pytest.mark.parametrize("params", [ABS, PLAIN], ids=["abs_plus", "plain_plus"])
def test_no_positive_lyapunov_exponent_in_the_plane(params):
    flow = inf.make_flow(params)
    worst = -math.inf
    for phi in np.linspace(-1.5, 1.5, 10):
        for chi in np.linspace(-1.0, 1.0, 10):
            res = dynsys.lyapunov_spectrum(flow, (phi, chi), horizon=400.0, renorm_interval=1.0, step=0.05, transient=50.0)
            worst = max(worst, res.max_exponent)
    assert worst <= 1e-2
