"""Analytical coverage engine.

Works on the 1-D view of the UAV field seen by a ground user: UAVs whose
cone covers the user live at ground distances in [0, u], split by blockage
into a line-of-sight and a blocked sub-field, each an inhomogeneous Poisson
process whose intensity carries the piecewise-constant LOS probability.
Association picks the strongest mean received power, which pins the nearest
possible interferer of each type; conditional coverage then follows from
the Laplace transforms of the two interference sums, differentiated up to
the Nakagami shape of the serving link, and the end probability integrates
the conditional coverage against the serving-distance densities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, optimize

from .antenna import cone_gain, coverage_radius
from .losenv import PiecewiseLos, p_los_piecewise
from .params import SystemParams
from .specfun import faa_di_bruno_tuples, hyp2f1, multinomial_tuples, rising_factorial

# conditional coverage may overshoot [0, 1] by at most this before it is
# treated as a numerical defect rather than roundoff
OVERSHOOT_TOL = 1e-9

DEFAULT_QUAD_TOL = 1e-4


class AnalyticError(Exception):
    """A closed-form evaluation produced an out-of-range result."""


class QuadratureError(Exception):
    """Adaptive integration could not meet its tolerance."""

    def __init__(self, message: str, worst_interval=None, error=None):
        detail = message
        if worst_interval is not None:
            detail += f"; worst subinterval {worst_interval} with error {error:g}"
        super().__init__(detail)
        self.worst_interval = worst_interval
        self.error = error


@dataclass(frozen=True)
class NearestExclusion:
    """Closest ground distance an interferer of each type can have."""

    los: float
    nlos: float


@dataclass(frozen=True)
class CoverageResult:
    p_coverage: float
    p_association: float
    p_los_serving: float
    quad_error: float


@dataclass(frozen=True)
class OptimumHeight:
    height: float
    p_coverage: float
    grid_heights: tuple[float, ...]
    grid_values: tuple[float, ...]


def exclusion_radii(r1: float, serving_los: bool, alpha_l: float, alpha_n: float,
                    gamma: float, window_radius: float) -> NearestExclusion:
    """Interferer exclusion radii implied by strongest-mean-power association.

    A serving link of one type at ground distance r1 rules out any
    interferer of the other type whose mean power would beat it; equating
    the two path losses gives the other type's minimum ground distance.
    Same-type interferers simply cannot be nearer than the serving UAV.
    """
    b1 = r1 * r1 + gamma * gamma
    if serving_los:
        c_n = math.sqrt(max(0.0, b1 ** (alpha_l / alpha_n) - gamma * gamma))
        return NearestExclusion(los=r1, nlos=c_n)
    c_l = math.sqrt(max(0.0, b1 ** (alpha_n / alpha_l) - gamma * gamma))
    return NearestExclusion(los=min(window_radius, c_l), nlos=r1)


def serving_distance_density(r1: float, serving_los: bool, pl: PiecewiseLos,
                             density: float, gamma: float, alpha_l: float,
                             alpha_n: float, window_radius: float) -> float:
    """Joint density of serving ground distance and serving link type.

    Nearest-of-type density times the void probability of the other type
    inside its exclusion radius; the inner intensity integrals are exact
    per LOS plateau.
    """
    if not 0.0 <= r1 <= window_radius:
        return 0.0
    excl = exclusion_radii(r1, serving_los, alpha_l, alpha_n, gamma, window_radius)
    rate = 2.0 * math.pi * density
    if serving_los:
        p = float(pl.value(r1))
        exponent = pl.weighted_integral(r1) + pl.complement_integral(excl.nlos)
        return p * rate * r1 * math.exp(-rate * exponent)
    q = 1.0 - float(pl.value(r1))
    exponent = pl.complement_integral(r1) + pl.weighted_integral(excl.los)
    return q * rate * r1 * math.exp(-rate * exponent)


def association_probability(density: float, window_radius: float) -> float:
    """Probability at least one UAV covers the user."""
    return -math.expm1(-math.pi * density * window_radius**2)


class InterferenceTransform:
    """Laplace transform of one thinned interference sub-field.

    Parameterized directly by the serving-power scale s (the antenna and
    transmit-power factors cancel between signal and interference), so the
    transform of the field with fading shape m and path-loss exponent alpha,
    restricted to ground distances [lower, upper], is exp(y(s)) with

        y(s) = -pi * density * sum_plateaus weight *
               sum_{k=1..m} C(m, k) (-1)^(k+1) [f(k, b_hi, s) - f(k, b_lo, s)]

        f(k, b, s) = b * 2F1(k, 2/alpha; 1 + 2/alpha; -m * b^(alpha/2) / s)

    where b runs over squared slant distances at the plateau edges and the
    weight is the plateau's LOS probability (or its complement for the
    blocked field).  Derivatives in s follow the same plateau sum through
    the chain rule on z(s) = -m b^(alpha/2) / s.
    """

    def __init__(self, pl: PiecewiseLos, density: float, m: int, alpha: float,
                 gamma: float, los_field: bool, lower: float, upper: float):
        self.density = density
        self.m = m
        self.alpha = alpha
        self.empty = lower >= upper
        if self.empty:
            return
        inner = pl.interior_edges(lower, upper)
        edges = np.concatenate(([lower], inner, [upper]))
        mids = 0.5 * (edges[:-1] + edges[1:])
        weights = pl.value(mids)
        if not los_field:
            weights = 1.0 - weights
        # telescoped edge coefficients: sum_j w_j (f(e_{j+1}) - f(e_j))
        #                             = sum_t coef_t f(e_t)
        coef = np.empty(len(edges))
        coef[0] = -weights[0]
        coef[-1] = weights[-1]
        coef[1:-1] = weights[:-1] - weights[1:]
        keep = coef != 0.0
        self._coef = coef[keep]
        self._b = edges[keep] ** 2 + gamma * gamma
        self._a_scale = m * self._b ** (alpha / 2.0)

    def log_derivs(self, s: float, n_max: int) -> np.ndarray:
        """[y(s), y'(s), ..., y^(n_max)(s)]."""
        if s <= 0:
            raise ValueError("transform argument must be > 0")
        if self.empty or self._b.size == 0:
            return np.zeros(n_max + 1)
        beta_p = 2.0 / self.alpha
        z = -self._a_scale / s
        # z-derivatives: z^(i)(s) = -A * (-1)^i * i! / s^(i+1)
        z_derivs = [
            -self._a_scale * (-1.0) ** i * math.factorial(i) / s ** (i + 1)
            for i in range(1, n_max + 1)
        ]
        out = np.zeros(n_max + 1)
        for k in range(1, self.m + 1):
            binom = math.comb(self.m, k) * (-1.0) ** (k + 1)
            # 2F1 derivative stack in z at this k
            f_z = []
            for q in range(n_max + 1):
                factor = (rising_factorial(float(k), q) * rising_factorial(beta_p, q)
                          / rising_factorial(1.0 + beta_p, q))
                f_z.append(factor * hyp2f1(k + q, beta_p + q, 1.0 + beta_p + q, z))
            # s-derivatives of f = b * F(z(s)) through the partition sum
            for i in range(n_max + 1):
                if i == 0:
                    d_i = self._b * f_z[0]
                else:
                    d_i = np.zeros_like(self._b)
                    for js, coeff in faa_di_bruno_tuples(i):
                        q = sum(js)
                        prod = np.ones_like(self._b)
                        for part, mult in enumerate(js, start=1):
                            if mult:
                                prod = prod * z_derivs[part - 1] ** mult
                        d_i = d_i + coeff * f_z[q] * prod
                    d_i = self._b * d_i
                out[i] += binom * float(np.dot(self._coef, d_i))
        return -math.pi * self.density * out

    def derivs(self, s: float, n_max: int) -> np.ndarray:
        """[L(s), L'(s), ..., L^(n_max)(s)] with L = exp(y)."""
        y = self.log_derivs(s, n_max)
        base = math.exp(y[0])
        out = np.empty(n_max + 1)
        out[0] = base
        for n in range(1, n_max + 1):
            acc = 0.0
            for js, coeff in faa_di_bruno_tuples(n):
                prod = 1.0
                for part, mult in enumerate(js, start=1):
                    if mult:
                        prod *= y[part] ** mult
                acc += coeff * prod
            out[n] = base * acc
        return out

    def value(self, s: float) -> float:
        if s == 0:
            return 1.0
        return float(self.derivs(s, 0)[0])


def _transforms(r1: float, serving_los: bool, params: SystemParams,
                pl: PiecewiseLos, window_radius: float):
    ch = params.channel
    gamma = params.uav.height
    excl = exclusion_radii(r1, serving_los, ch.alpha_l, ch.alpha_n, gamma,
                           window_radius)
    t_los = InterferenceTransform(pl, params.uav.density, ch.m_l, ch.alpha_l,
                                  gamma, True, excl.los, window_radius)
    t_nlos = InterferenceTransform(pl, params.uav.density, ch.m_n, ch.alpha_n,
                                   gamma, False, excl.nlos, window_radius)
    return t_los, t_nlos


def conditional_coverage(r1: float, serving_los: bool, params: SystemParams,
                         pl: PiecewiseLos | None = None,
                         window_radius: float | None = None) -> float:
    """P(user SINR >= theta | serving link type and ground distance r1)."""
    ch = params.channel
    gamma = params.uav.height
    if window_radius is None:
        window_radius = coverage_radius(params.uav.omega, gamma)
    if pl is None:
        pl = p_los_piecewise(gamma, 0.0, params.env, window_radius)
    m_t = ch.m_l if serving_los else ch.m_n
    alpha_t = ch.alpha_l if serving_los else ch.alpha_n
    s = m_t * params.thresholds.theta * (r1 * r1 + gamma * gamma) ** (alpha_t / 2.0)
    n_max = m_t - 1
    t_los, t_nlos = _transforms(r1, serving_los, params, pl, window_radius)
    l_los = t_los.derivs(s, n_max)
    l_nlos = t_nlos.derivs(s, n_max)
    noise_scale = ch.sigma2 / (params.uav.power * cone_gain(params.uav.omega))
    noise_factor = math.exp(-s * noise_scale)
    total = 0.0
    for n in range(m_t):
        inner = 0.0
        for (i_l, i_n, i_s), coeff in multinomial_tuples(n):
            inner += coeff * (-noise_scale) ** i_s * l_los[i_l] * l_nlos[i_n]
        total += (s**n / math.factorial(n)) * (-1.0) ** n * noise_factor * inner
    if total < -OVERSHOOT_TOL or total > 1.0 + OVERSHOOT_TOL:
        raise AnalyticError(
            f"conditional coverage {total!r} outside [0, 1] at r1={r1}, "
            f"serving_los={serving_los}")
    return min(max(total, 0.0), 1.0)


def _crossing_points(pl: PiecewiseLos, params: SystemParams,
                     window_radius: float) -> list[float]:
    """Serving distances where an exclusion radius crosses a LOS plateau edge.

    The conditional coverage and the densities have kinks there; seeding the
    quadrature with them keeps the adaptive subdivision honest.
    """
    ch = params.channel
    g2 = params.uav.height ** 2
    pts = set(float(e) for e in pl.interior_edges(0.0, window_radius))
    ratio_up = ch.alpha_n / ch.alpha_l
    ratio_dn = ch.alpha_l / ch.alpha_n
    for e in pl.edges:
        if e >= window_radius:
            break
        b = e * e + g2
        for ratio in (ratio_up, ratio_dn):
            r2 = b**ratio - g2
            if r2 > 0:
                r = math.sqrt(r2)
                if 0.0 < r < window_radius:
                    pts.add(r)
    # where the LOS exclusion radius saturates at the window edge
    r2 = (window_radius**2 + g2) ** ratio_dn - g2
    if r2 > 0:
        r = math.sqrt(r2)
        if 0.0 < r < window_radius:
            pts.add(r)
    return sorted(pts)


def _quad(fn, lo: float, hi: float, points, epsabs: float):
    limit = max(100, 10 * (len(points) + 1))
    result = integrate.quad(fn, lo, hi, points=points or None, epsabs=epsabs,
                            epsrel=1e-8, limit=limit, full_output=1)
    value, abserr, info = result[0], result[1], result[2]
    if len(result) > 3 or abserr > max(epsabs * 10.0, 1e-12):
        last = info.get("last", 0)
        if last:
            idx = int(np.argmax(info["elist"][:last]))
            worst = (float(info["alist"][idx]), float(info["blist"][idx]))
            err = float(info["elist"][idx])
        else:
            worst, err = (lo, hi), abserr
        message = result[3] if len(result) > 3 else "tolerance not reached"
        raise QuadratureError(str(message), worst_interval=worst, error=err)
    return value, abserr


def coverage_probability(params: SystemParams,
                         quad_tol: float = DEFAULT_QUAD_TOL) -> CoverageResult:
    """End-user coverage probability plus association and serving-type split."""
    gamma = params.uav.height
    u = coverage_radius(params.uav.omega, gamma)
    pl = p_los_piecewise(gamma, 0.0, params.env, u)
    ch = params.channel
    dens = params.uav.density

    def integrand(r1: float) -> float:
        total = 0.0
        for serving_los in (True, False):
            f = serving_distance_density(r1, serving_los, pl, dens, gamma,
                                         ch.alpha_l, ch.alpha_n, u)
            if f > 0.0:
                total += f * conditional_coverage(r1, serving_los, params, pl, u)
        return total

    points = _crossing_points(pl, params, u)
    value, abserr = _quad(integrand, 0.0, u, points, quad_tol / 2.0)

    p_assoc = association_probability(dens, u)

    def los_density(r1: float) -> float:
        return serving_distance_density(r1, True, pl, dens, gamma,
                                        ch.alpha_l, ch.alpha_n, u)

    los_mass, _ = _quad(los_density, 0.0, u, points, 1e-9)
    p_los_serving = los_mass / p_assoc if p_assoc > 0 else 0.0
    return CoverageResult(
        p_coverage=min(max(value, 0.0), 1.0),
        p_association=p_assoc,
        p_los_serving=min(max(p_los_serving, 0.0), 1.0),
        quad_error=abserr,
    )


def p_los_serving(params: SystemParams) -> float:
    """Probability the serving link is line-of-sight, given association."""
    return coverage_probability(params).p_los_serving


def optimum_height(params: SystemParams, heights, refine: bool = False,
                   quad_tol: float = DEFAULT_QUAD_TOL) -> OptimumHeight:
    """Coverage-maximizing UAV height over a grid, ties to the lower height.

    With refine=True a bounded scalar search polishes the winner inside its
    neighboring grid cells.
    """
    grid = sorted(float(h) for h in heights)
    if not grid:
        raise ValueError("height grid must not be empty")
    values = []
    for h in grid:
        p = replace(params, uav=replace(params.uav, height=h))
        values.append(coverage_probability(p, quad_tol).p_coverage)
    best = int(np.argmax(values))  # first index wins ties: lower height
    height, p_best = grid[best], values[best]
    if refine and len(grid) > 1:
        lo = grid[max(best - 1, 0)]
        hi = grid[min(best + 1, len(grid) - 1)]
        if hi > lo:
            def negative(h: float) -> float:
                p = replace(params, uav=replace(params.uav, height=float(h)))
                return -coverage_probability(p, quad_tol).p_coverage

            res = optimize.minimize_scalar(negative, bounds=(lo, hi),
                                           method="bounded",
                                           options={"xatol": 0.5})
            if -res.fun >= p_best:
                height, p_best = float(res.x), float(-res.fun)
    return OptimumHeight(height=height, p_coverage=p_best,
                         grid_heights=tuple(grid), grid_values=tuple(values))
