import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from oracles import conditional_coverage_mc, laplace_quad, serving_density_quad
from uavcov.antenna import coverage_radius
from uavcov.analytic import (
    InterferenceTransform,
    association_probability,
    conditional_coverage,
    coverage_probability,
    exclusion_radii,
    optimum_height,
    serving_distance_density,
)
from uavcov.losenv import p_los_piecewise
from uavcov.params import with_overrides


@pytest.fixture(scope="module")
def geometry(baseline):
    u = coverage_radius(baseline.uav.omega, baseline.uav.height)
    pl = p_los_piecewise(baseline.uav.height, 0.0, baseline.env, u)
    return u, pl


def test_exclusion_radii_formulas():
    # serving blocked link at 60 m, heights 120 m: any unblocked interferer
    # closer than the power-equality radius would have taken over
    b1 = 60.0**2 + 120.0**2
    excl = exclusion_radii(60.0, False, 2.1, 4.0, 120.0, 1000.0)
    assert excl.nlos == 60.0
    assert excl.los == pytest.approx(
        min(1000.0, math.sqrt(b1 ** (4.0 / 2.1) - 120.0**2)), rel=1e-12)
    # wide exclusions clip at the coverage window
    excl = exclusion_radii(60.0, False, 2.1, 4.0, 120.0, 300.0)
    assert excl.los == 300.0


def test_exclusion_radius_can_vanish():
    # close-in unblocked serving: blocked rivals are excluded nowhere
    excl = exclusion_radii(5.0, True, 2.1, 4.0, 120.0, 1000.0)
    assert excl.los == 5.0
    b1 = 5.0**2 + 120.0**2
    assert b1 ** (2.1 / 4.0) < 120.0**2
    assert excl.nlos == 0.0


# Frozen values; independently reproduced by the quadrature oracle in
# test_serving_density_matches_oracle.
DENSITY_FROZEN = [
    (50.0, True, 0.006453812728576525),
    (113.0, True, 0.006473155038657836),
    (113.0, False, 2.4598256380138826e-07),
    (250.0, False, 1.1208544490850936e-05),
]


@pytest.mark.parametrize("r1,los,expected", DENSITY_FROZEN)
def test_serving_density_frozen(baseline, geometry, r1, los, expected):
    u, pl = geometry
    ch = baseline.channel
    got = serving_distance_density(r1, los, pl, baseline.uav.density,
                                   baseline.uav.height, ch.alpha_l,
                                   ch.alpha_n, u)
    assert got == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("r1,los", [(20.0, True), (113.0, True),
                                    (113.0, False), (250.0, True),
                                    (250.0, False), (440.0, False)])
def test_serving_density_matches_oracle(baseline, geometry, r1, los):
    u, pl = geometry
    ch = baseline.channel
    got = serving_distance_density(r1, los, pl, baseline.uav.density,
                                   baseline.uav.height, ch.alpha_l,
                                   ch.alpha_n, u)
    want = serving_density_quad(r1, los, baseline, lambda r: pl.value(r))
    assert got == pytest.approx(want, rel=1e-7, abs=1e-18)


def test_serving_density_vanishes_outside_window(baseline, geometry):
    u, pl = geometry
    ch = baseline.channel
    for r1 in (-1.0, u + 1.0):
        for los in (True, False):
            assert serving_distance_density(
                r1, los, pl, baseline.uav.density, baseline.uav.height,
                ch.alpha_l, ch.alpha_n, u) == 0.0


@pytest.mark.parametrize("overrides", [
    {},
    {"gamma_m": 60.0, "lambda_per_km2": 10.0},
    {"gamma_m": 280.0, "lambda_per_km2": 50.0, "alpha_l": 2.4},
    {"omega_deg": 70.0, "gamma_m": 150.0},
])
def test_density_normalizes_to_association_probability(baseline, overrides):
    p = with_overrides(baseline, overrides)
    u = coverage_radius(p.uav.omega, p.uav.height)
    pl = p_los_piecewise(p.uav.height, 0.0, p.env, u)
    ch = p.channel

    def total(r1):
        return sum(
            serving_distance_density(r1, los, pl, p.uav.density,
                                     p.uav.height, ch.alpha_l, ch.alpha_n, u)
            for los in (True, False))

    mass = integrate.quad(total, 0.0, u,
                          points=list(pl.interior_edges(0.0, u)),
                          limit=300, epsabs=1e-10)[0]
    assert mass == pytest.approx(
        association_probability(p.uav.density, u), rel=1e-6)


def test_transform_matches_quadrature(baseline, geometry):
    u, pl = geometry
    ch = baseline.channel
    pfn = lambda r: float(pl.value(r))
    for r1, serving_los in ((30.0, True), (113.0, True), (113.0, False)):
        m_t = ch.m_l if serving_los else ch.m_n
        a_t = ch.alpha_l if serving_los else ch.alpha_n
        s = m_t * baseline.thresholds.theta * (r1**2 + baseline.uav.height**2) ** (a_t / 2.0)
        excl = exclusion_radii(r1, serving_los, ch.alpha_l, ch.alpha_n,
                               baseline.uav.height, u)
        for field_los, lower in ((True, excl.los), (False, excl.nlos)):
            m = ch.m_l if field_los else ch.m_n
            alpha = ch.alpha_l if field_los else ch.alpha_n
            tr = InterferenceTransform(pl, baseline.uav.density, m, alpha,
                                       baseline.uav.height, field_los, lower, u)
            want = laplace_quad(s, 0, baseline, pfn, field_los, lower, u)
            assert tr.value(s) == pytest.approx(want, rel=1e-8)


def test_transform_derivatives_match_high_precision(baseline, geometry):
    # mpmath quad + mpmath diff as the independent route; tighter than any
    # float finite difference could verify
    u, pl = geometry
    ch = baseline.channel
    r1 = 30.0
    s = ch.m_l * baseline.thresholds.theta * (r1**2 + baseline.uav.height**2) ** (ch.alpha_l / 2.0)
    excl = exclusion_radii(r1, True, ch.alpha_l, ch.alpha_n,
                           baseline.uav.height, u)
    gamma = baseline.uav.height
    for field_los, lower, m, alpha in ((True, excl.los, ch.m_l, ch.alpha_l),
                                       (False, excl.nlos, ch.m_n, ch.alpha_n)):
        weight = (lambda r: float(pl.value(r))) if field_los else \
            (lambda r: 1.0 - float(pl.value(r)))
        tr = InterferenceTransform(pl, baseline.uav.density, m, alpha, gamma,
                                   field_los, lower, u)
        got = tr.derivs(s, 2)
        edges = [lower] + [float(e) for e in pl.interior_edges(lower, u)] + [u]

        def transform_mp(sv):
            def integrand(r):
                x = (r * r + gamma * gamma) ** (-mpmath.mpf(alpha) / 2)
                return (1 - (1 + sv * x / m) ** (-m)) * weight(float(r)) * r
            val = mpmath.quad(integrand, [mpmath.mpf(e) for e in edges])
            return mpmath.e ** (-2 * mpmath.pi * baseline.uav.density * val)

        with mpmath.workdps(40):
            sv = mpmath.mpf(s)
            want0 = float(transform_mp(sv))
            want1 = float(mpmath.diff(transform_mp, sv, 1, h=sv * mpmath.mpf(10) ** -12))
            want2 = float(mpmath.diff(transform_mp, sv, 2, h=sv * mpmath.mpf(10) ** -10))
        assert got[0] == pytest.approx(want0, rel=1e-10)
        assert got[1] == pytest.approx(want1, rel=1e-8)
        assert got[2] == pytest.approx(want2, rel=1e-7)


def test_transform_first_derivative_matches_finite_difference(baseline, geometry):
    u, pl = geometry
    ch = baseline.channel
    pfn = lambda r: float(pl.value(r))
    r1 = 113.0
    s = ch.m_l * baseline.thresholds.theta * (r1**2 + baseline.uav.height**2) ** (ch.alpha_l / 2.0)
    excl = exclusion_radii(r1, True, ch.alpha_l, ch.alpha_n,
                           baseline.uav.height, u)
    tr = InterferenceTransform(pl, baseline.uav.density, ch.m_l, ch.alpha_l,
                               baseline.uav.height, True, excl.los, u)
    fd = laplace_quad(s, 1, baseline, pfn, True, excl.los, u)
    assert tr.derivs(s, 1)[1] == pytest.approx(fd, rel=1e-4)


def test_transform_is_completely_monotone(baseline, geometry):
    # a Laplace transform of a nonnegative variable: L >= 0, L' <= 0, L'' >= 0
    u, pl = geometry
    ch = baseline.channel
    tr = InterferenceTransform(pl, baseline.uav.density, ch.m_l, ch.alpha_l,
                               baseline.uav.height, True, 50.0, u)
    for s in (1e2, 1e4, 1e6):
        d = tr.derivs(s, 2)
        assert d[0] > 0.0
        assert d[1] < 0.0
        assert d[2] > 0.0
        assert d[0] <= 1.0


def test_transform_without_interferers_is_unity(baseline, geometry):
    u, pl = geometry
    ch = baseline.channel
    tr = InterferenceTransform(pl, baseline.uav.density, ch.m_l, ch.alpha_l,
                               baseline.uav.height, True, u, u)
    d = tr.derivs(1e4, 3)
    assert d[0] == 1.0
    assert all(v == 0.0 for v in d[1:])
    assert tr.value(0.0) == 1.0


def test_transform_at_zero_is_unity(baseline, geometry):
    u, pl = geometry
    ch = baseline.channel
    tr = InterferenceTransform(pl, baseline.uav.density, ch.m_l, ch.alpha_l,
                               baseline.uav.height, True, 50.0, u)
    assert tr.value(0.0) == 1.0


@pytest.mark.parametrize("r1,serving_los", [(60.0, True), (60.0, False),
                                            (150.0, True)])
def test_conditional_coverage_matches_simulation(baseline, geometry, r1,
                                                 serving_los):
    u, pl = geometry
    got = conditional_coverage(r1, serving_los, baseline, pl, u)
    mc, se = conditional_coverage_mc(r1, serving_los, baseline,
                                     lambda r: pl.value(r),
                                     trials=100000, seed=1811)
    assert got == pytest.approx(mc, abs=max(4.0 * se, 1e-4))


def test_conditional_coverage_bounds(baseline, geometry):
    u, pl = geometry
    for r1 in (5.0, 100.0, 400.0):
        for los in (True, False):
            v = conditional_coverage(r1, los, baseline, pl, u)
            assert 0.0 <= v <= 1.0


def test_coverage_probability_frozen(baseline):
    res = coverage_probability(baseline)
    assert res.p_coverage == pytest.approx(0.19822138481333415, rel=1e-6)
    assert res.p_association == pytest.approx(0.9999998558522095, rel=1e-9)
    assert res.p_los_serving == pytest.approx(0.9987460113127283, rel=1e-6)


def test_association_probability_closed_form(baseline):
    res = coverage_probability(baseline)
    u = coverage_radius(baseline.uav.omega, baseline.uav.height)
    assert res.p_association == pytest.approx(
        -math.expm1(-math.pi * baseline.uav.density * u * u), rel=1e-12)


def test_coverage_decreases_with_threshold(baseline):
    values = []
    for theta_db in (-5.0, 0.0, 5.0):
        p = with_overrides(baseline, {"theta_db": theta_db})
        values.append(coverage_probability(p).p_coverage)
    assert values[0] > values[1] > values[2]


def test_optimum_height_prefers_lower_on_ties(baseline):
    heights = np.array([80.0, 90.0, 100.0])
    opt = optimum_height(baseline, heights)
    direct = [coverage_probability(
        with_overrides(baseline, {"gamma_m": h})).p_coverage for h in heights]
    assert list(opt.grid_values) == pytest.approx(direct, rel=1e-9)
    assert opt.height == heights[int(np.argmax(direct))]


def test_optimum_height_refinement_does_not_regress(baseline):
    heights = np.array([40.0, 60.0, 80.0])
    coarse = optimum_height(baseline, heights)
    refined = optimum_height(baseline, heights, refine=True)
    assert refined.p_coverage >= coarse.p_coverage
