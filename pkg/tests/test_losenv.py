import math

import numpy as np
import pytest
from scipy import integrate

from oracles import p_los_mp
from uavcov.losenv import (
    PiecewiseLos,
    building_height_pdf,
    p_los,
    p_los_piecewise,
)
from uavcov.params import EnvironmentParams

ENV = EnvironmentParams(beta=300e-6, delta=0.5, kappa=20.0)


# Frozen against an arbitrary-precision recomputation of the blockage
# product (tests/oracles.py::p_los_mp).
FROZEN = [
    # (gamma_tx, gamma_rx, r, expected)
    (100.0, 0.0, 200.0, 0.54168745709077695),
    (100.0, 0.0, 50.0, 1.0),
    (30.0, 150.0, 224.0, 0.98889098840096774),
    (120.0, 0.0, 448.0, 0.13064278032008849),
]


@pytest.mark.parametrize("gamma_tx,gamma_rx,r,expected", FROZEN)
def test_frozen_values(gamma_tx, gamma_rx, r, expected):
    assert p_los(gamma_tx, gamma_rx, r, ENV) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("gamma_tx,gamma_rx,r,expected", FROZEN)
def test_frozen_values_match_oracle(gamma_tx, gamma_rx, r, expected):
    oracle = p_los_mp(gamma_tx, gamma_rx, r, ENV.beta, ENV.delta, ENV.kappa)
    assert oracle == pytest.approx(expected, rel=1e-12)


def test_no_buildings_crossed_means_clear():
    # r sqrt(beta delta) < 1 crosses no buildings
    limit = 1.0 / math.sqrt(ENV.beta * ENV.delta)
    assert p_los(50.0, 0.0, 0.9 * limit, ENV) == 1.0
    assert p_los(50.0, 0.0, 0.0, ENV) == 1.0


def test_ground_level_link_always_blocked():
    # both ends at height zero: every crossed building blocks
    assert p_los(0.0, 0.0, 500.0, ENV) == 0.0


def test_equal_heights_give_power_form():
    gamma = 80.0
    r = 400.0
    d = int(math.floor(r * math.sqrt(ENV.beta * ENV.delta)))
    assert d > 1
    per = -math.expm1(-gamma**2 / (2.0 * ENV.kappa**2))
    assert p_los(gamma, gamma, r, ENV) == pytest.approx(per**d, rel=1e-12)


def test_monotone_decreasing_in_distance():
    radii = np.linspace(1.0, 2000.0, 200)
    vals = [p_los(100.0, 0.0, r, ENV) for r in radii]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_constant_within_a_plateau():
    step = 1.0 / math.sqrt(ENV.beta * ENV.delta)
    r_lo = 3.0 * step + 1e-6
    r_hi = 4.0 * step - 1e-6
    assert p_los(120.0, 0.0, r_lo, ENV) == p_los(120.0, 0.0, r_hi, ENV)
    assert p_los(120.0, 0.0, r_lo, ENV) != p_los(120.0, 0.0, 4.0 * step, ENV)


def test_negative_distance_rejected():
    with pytest.raises(ValueError):
        p_los(100.0, 0.0, -1.0, ENV)


def test_long_link_uses_stable_accumulation():
    # d well past the log-space switchover; compare to the precise oracle
    r = 8000.0
    d = int(math.floor(r * math.sqrt(ENV.beta * ENV.delta)))
    assert d > 50
    expected = p_los_mp(300.0, 0.0, r, ENV.beta, ENV.delta, ENV.kappa)
    assert p_los(300.0, 0.0, r, ENV) == pytest.approx(expected, rel=1e-10)


def test_piecewise_equals_pointwise_exactly():
    rng = np.random.default_rng(42)
    for gamma_tx, gamma_rx in ((120.0, 0.0), (30.0, 150.0), (77.3, 12.9)):
        pl = p_los_piecewise(gamma_tx, gamma_rx, ENV, 1500.0)
        radii = rng.random(1000) * 1500.0
        table = pl.value(radii)
        for r, got in zip(radii, table):
            assert got == p_los(gamma_tx, gamma_rx, float(r), ENV)


def test_weighted_integral_matches_quadrature():
    pl = p_los_piecewise(120.0, 0.0, ENV, 1000.0)
    for r in (37.0, 250.0, 999.0):
        direct = integrate.quad(lambda t: float(pl.value(t)) * t, 0.0, r,
                                points=list(pl.interior_edges(0.0, r)),
                                limit=200)[0]
        assert pl.weighted_integral(r) == pytest.approx(direct, rel=1e-10)


def test_complement_integral_is_the_remainder():
    pl = p_los_piecewise(120.0, 0.0, ENV, 1000.0)
    for r in (37.0, 250.0, 999.0):
        total = r * r / 2.0
        got = pl.weighted_integral(r) + pl.complement_integral(r)
        assert got == pytest.approx(total, rel=1e-13)


def test_interior_edges_are_strict():
    pl = p_los_piecewise(120.0, 0.0, ENV, 1000.0)
    step = 1.0 / math.sqrt(ENV.beta * ENV.delta)
    edges = pl.interior_edges(step, 3.0 * step)
    assert all(step < e < 3.0 * step for e in edges)


def test_height_pdf_normalizes_and_peaks_at_scale():
    total = integrate.quad(lambda h: building_height_pdf(h, 20.0), 0.0, np.inf)[0]
    assert total == pytest.approx(1.0, rel=1e-9)
    hs = np.linspace(1.0, 100.0, 2000)
    peak = hs[np.argmax([building_height_pdf(h, 20.0) for h in hs])]
    assert peak == pytest.approx(20.0, abs=0.1)
