"""Urban line-of-sight model.

A link of ground length r between terminals at heights gamma_tx and gamma_rx
crosses d = floor(r * sqrt(beta * delta)) buildings in expectation; the link
is line-of-sight when every crossed building stays below the ray.  Building
heights are Rayleigh(kappa), and the ray height is sampled at the midpoint of
each of the d equal sub-segments, which makes the LOS probability a step
function of r with plateaus between consecutive multiples of
1 / sqrt(beta * delta).
"""
from __future__ import annotations

import math

import numpy as np

from .params import EnvironmentParams

# beyond this many buildings the factor product is accumulated in log space
_LOG_SPACE_COUNT = 50


def building_height_pdf(h: float, kappa: float) -> float:
    """Rayleigh density of building heights; zero for negative h."""
    if h < 0:
        return 0.0
    return (h / kappa**2) * math.exp(-(h * h) / (2.0 * kappa * kappa))


def _crossing_count(r: float, env: EnvironmentParams) -> int:
    return int(math.floor(r * math.sqrt(env.beta * env.delta)))


def _plateau_value(gamma_tx: float, gamma_rx: float, d: int, kappa: float) -> float:
    """LOS probability on the plateau where d buildings are crossed."""
    if d <= 0:
        return 1.0  # empty product: nothing to block the ray
    hi = max(gamma_tx, gamma_rx)
    dh = abs(gamma_tx - gamma_rx)
    two_k2 = 2.0 * kappa * kappa
    if d <= _LOG_SPACE_COUNT:
        prod = 1.0
        for n in range(d):
            ray = hi - (n + 0.5) * dh / d
            factor = -math.expm1(-(ray * ray) / two_k2)
            if factor <= 0.0:
                return 0.0
            prod *= factor
        return prod
    log_sum = 0.0
    for n in range(d):
        ray = hi - (n + 0.5) * dh / d
        factor = -math.expm1(-(ray * ray) / two_k2)
        if factor <= 0.0:
            return 0.0
        log_sum += math.log(factor)
    return math.exp(log_sum)


def p_los(gamma_tx: float, gamma_rx: float, r: float, env: EnvironmentParams) -> float:
    """Probability that the (gamma_tx, gamma_rx, r) link is unblocked."""
    if r < 0:
        raise ValueError("link ground distance must be >= 0")
    return _plateau_value(gamma_tx, gamma_rx, _crossing_count(r, env), env.kappa)


class PiecewiseLos:
    """Step-function view of p_los for one height pair.

    Exposes the plateau edges (for quadrature seeding), the plateau values
    (for Monte Carlo table lookups) and exact integrals of p_los(r) * r,
    which the serving-distance densities need in closed form.
    """

    def __init__(self, gamma_tx: float, gamma_rx: float, env: EnvironmentParams,
                 r_max: float):
        if r_max <= 0:
            raise ValueError("r_max must be > 0")
        self.gamma_tx = gamma_tx
        self.gamma_rx = gamma_rx
        self.env = env
        self.r_max = r_max
        self._scale = math.sqrt(env.beta * env.delta)
        last = int(math.floor(r_max * self._scale))
        step = 1.0 / self._scale
        # edges[j] = j * step; plateau j spans [edges[j], edges[j + 1])
        self.edges = np.arange(last + 2) * step
        self.values = np.array(
            [_plateau_value(gamma_tx, gamma_rx, j, env.kappa) for j in range(last + 1)]
        )
        # prefix[j] = integral of p_los(t) * t dt over [0, edges[j]]
        widths2 = np.diff(self.edges**2) / 2.0
        self._prefix = np.concatenate(([0.0], np.cumsum(self.values * widths2)))

    def index(self, r):
        """Plateau index, same arithmetic path as p_los."""
        return np.floor(np.asarray(r) * self._scale).astype(int)

    def value(self, r):
        """p_los at radius r (r <= r_max), scalar or array."""
        return self.values[self.index(r)]

    def weighted_integral(self, r: float) -> float:
        """Exact integral of p_los(t) * t dt over [0, r]."""
        j = int(math.floor(r * self._scale))
        j = min(j, len(self.values) - 1)
        return self._prefix[j] + self.values[j] * (r * r - self.edges[j] ** 2) / 2.0

    def complement_integral(self, r: float) -> float:
        """Exact integral of (1 - p_los(t)) * t dt over [0, r]."""
        return r * r / 2.0 - self.weighted_integral(r)

    def interior_edges(self, lo: float, hi: float) -> np.ndarray:
        """Plateau edges strictly inside (lo, hi)."""
        edges = self.edges
        return edges[(edges > lo) & (edges < hi)]


def p_los_piecewise(gamma_tx: float, gamma_rx: float, env: EnvironmentParams,
                    r_max: float) -> PiecewiseLos:
    """Plateau decomposition of p_los over [0, r_max]."""
    return PiecewiseLos(gamma_tx, gamma_rx, env, r_max)
