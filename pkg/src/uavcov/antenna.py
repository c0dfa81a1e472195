"""Antenna patterns and the geometry they imprint on the ground.

UAVs carry two cones: a downward user-link cone of beamwidth omega and a
backhaul cone of beamwidth omega_b aimed at the serving BS.  BSs radiate a
3GPP-style vertical pattern with downtilt.  The backhaul cone of a UAV
illuminates a ring sector on the ground; BSs inside it are the UAV's
potential interferers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .params import BsParams

# sidelobe floor of the combined BS pattern, linear (-25 dB)
BS_GAIN_FLOOR = 10.0 ** (-2.5)

# vertical attenuation saturates at 20 dB
_MAX_VERTICAL_ATT_DB = 20.0

_RAD_TO_DEG = 180.0 / math.pi


def cone_gain(beamwidth: float) -> float:
    """Gain inside an ideal cone of the given beamwidth: 16*pi / beamwidth^2."""
    if not 0 < beamwidth < math.pi:
        raise ValueError("beamwidth must lie in (0, pi)")
    return 16.0 * math.pi / beamwidth**2


def coverage_radius(omega: float, gamma: float) -> float:
    """Ground radius of the user-link cone of a UAV at height gamma."""
    return math.tan(omega / 2.0) * gamma


def in_user_lobe(r: float, gamma: float, omega: float) -> bool:
    """Whether a ground user at distance r sits inside the cone (edge counts).

    Equivalent to the elevation test atan2(gamma, r) >= pi/2 - omega/2, but
    evaluated as r <= coverage_radius so the boundary is decided exactly.
    """
    return r <= coverage_radius(omega, gamma)


def bs_vertical_gain(phi: float, downtilt: float) -> float:
    """Vertical BS pattern at elevation phi (rad), linear.

    Quadratic attenuation in degrees around the downtilted boresight,
    saturating at 20 dB: 10^(-min(12 * ((phi + downtilt) in deg / 10)^2, 20) / 10).
    """
    offset_deg = (phi + downtilt) * _RAD_TO_DEG
    att_db = min(12.0 * (offset_deg / 10.0) ** 2, _MAX_VERTICAL_ATT_DB)
    return 10.0 ** (-att_db / 10.0)


def bs_gain(phi: float, bs: BsParams) -> float:
    """Combined BS gain toward elevation phi, floored at the sidelobe level."""
    return max(bs.eta_h * bs_vertical_gain(phi, bs.downtilt), BS_GAIN_FLOOR)


@dataclass(frozen=True)
class RingSector:
    """Ground footprint of a backhaul cone: ring sector around the UAV."""

    center: tuple[float, float]  # UAV ground position
    heading: float  # azimuth toward the serving BS, rad
    arc: float  # angular width, rad (= omega_b)
    minor: float  # inner radius, m
    major: float  # outer radius, m (may be inf)


def backhaul_footprint(uav_height: float, bs_height: float, phi: float,
                       omega_b: float, center: tuple[float, float],
                       heading: float) -> RingSector:
    """Footprint of the backhaul cone of a UAV aimed at elevation phi.

    phi is the elevation toward the serving BS; the UAV must fly above the
    BS antennas.  The inner edge exists while the cone's near side still
    points below the horizontal; the outer edge becomes infinite when the
    cone's far side points at or above the horizontal (phi <= omega_b / 2),
    and for omega_b >= pi/2 it is infinite at every elevation.
    """
    dz = uav_height - bs_height
    if dz <= 0:
        raise ValueError("UAV must fly above the BS antenna height")
    half = omega_b / 2.0
    if omega_b >= math.pi / 2.0:
        major = math.inf
    elif phi <= half:
        major = math.inf
    elif phi < math.pi / 2.0 - half:
        major = dz / math.tan(phi - half)
    else:
        major = dz / math.tan(math.pi / 2.0 - omega_b)
    if phi < math.pi / 2.0 - half:
        minor = dz / math.tan(phi + half)
    else:
        minor = 0.0
    return RingSector(center=center, heading=heading, arc=omega_b,
                      minor=minor, major=major)


def sector_contains(sector: RingSector, point: tuple[float, float]) -> bool:
    """Ring-sector membership with inclusive boundaries."""
    dx = point[0] - sector.center[0]
    dy = point[1] - sector.center[1]
    rho = math.hypot(dx, dy)
    if not sector.minor <= rho <= sector.major:
        return False
    if rho == 0.0:
        return True  # directly under the UAV, azimuth undefined
    diff = math.atan2(dy, dx) - sector.heading
    diff = math.remainder(diff, 2.0 * math.pi)
    return abs(diff) <= sector.arc / 2.0
