"""Monte Carlo engine.

Simulates the same system model as the analytical engine, plus the pieces
the closed forms condition away: the BS wireless backhaul of each UAV and
the per-UAV height search that keeps climbing until the backhaul SINR
threshold is met or the height cap is reached.

Determinism contract: every trial draws from its own generator seeded by
SeedSequence((master_seed, point_key, trial_index)), and each trial's draw
order is fixed, so results are byte-identical for a given seed regardless
of how trials are chunked across workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .antenna import BS_GAIN_FLOOR, cone_gain, coverage_radius
from .losenv import PiecewiseLos, p_los_piecewise
from .params import BsParams, SystemParams

# the BS sampling disk is sized so the chance of missing every BS is below
# this; the footprint's infinite outer radius is truncated at the same disk
VOID_EPS = 1e-6

ASSOCIATION_MODES = ("averaged", "instantaneous")


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float
    n: int


@dataclass(frozen=True)
class UserTrial:
    associated: bool
    serving_los: bool
    sinr: float
    covered: bool


@dataclass(frozen=True)
class BackhaulTrial:
    ok: bool
    sinr: float


@dataclass(frozen=True)
class ScenarioTrial:
    associated: bool
    covered: bool
    heights: np.ndarray  # final height of every UAV in the trial
    outage: np.ndarray  # UAVs that failed backhaul even at the cap


def trial_rng(seed: int, point_key: int, trial: int) -> np.random.Generator:
    """Counter-derived per-trial generator; independent of execution order."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((seed, point_key, trial))))


def sample_ppp(rng: np.random.Generator, density: float, radius: float,
               center=(0.0, 0.0)) -> np.ndarray:
    """Poisson point process realization in a disk; (n, 2) positions."""
    n = rng.poisson(density * math.pi * radius * radius)
    r = radius * np.sqrt(rng.random(n))
    ang = 2.0 * math.pi * rng.random(n)
    return np.column_stack((center[0] + r * np.cos(ang),
                            center[1] + r * np.sin(ang)))


def sample_fading(rng: np.random.Generator, m: int, size: int) -> np.ndarray:
    """Unit-mean Nakagami-m power fading: Gamma(shape m, scale 1/m)."""
    return rng.gamma(m, 1.0 / m, size)


def _split_fading(rng: np.random.Generator, los: np.ndarray, m_l: int,
                  m_n: int) -> np.ndarray:
    """Per-link fading with the shape picked by the link's LOS state.

    Draw order is fixed: LOS links first, then blocked links.
    """
    h = np.empty(los.shape)
    n_los = int(np.count_nonzero(los))
    h[los] = sample_fading(rng, m_l, n_los)
    h[~los] = sample_fading(rng, m_n, los.size - n_los)
    return h


def bs_sampling_radius(bs_density: float) -> float:
    return math.sqrt(-math.log(VOID_EPS) / (math.pi * bs_density))


def _bs_gain_vec(phi: np.ndarray, bs: BsParams) -> np.ndarray:
    offset_deg = (phi + bs.downtilt) * (180.0 / math.pi)
    att_db = np.minimum(12.0 * (offset_deg / 10.0) ** 2, 20.0)
    return np.maximum(bs.eta_h * 10.0 ** (-att_db / 10.0), BS_GAIN_FLOOR)


def _wrap_angle(a: np.ndarray) -> np.ndarray:
    return np.remainder(a + math.pi, 2.0 * math.pi) - math.pi


def user_link_trial(rng: np.random.Generator, params: SystemParams,
                    pl: PiecewiseLos | None = None,
                    mode: str = "averaged") -> UserTrial:
    """One downlink trial for the reference user under a homogeneous field.

    mode "averaged" associates on mean received power (fading averaged
    out); "instantaneous" associates on the faded power.  Fresh fading
    applies to the SINR in both modes.
    """
    if mode not in ASSOCIATION_MODES:
        raise ValueError(f"association mode must be one of {ASSOCIATION_MODES}")
    gamma = params.uav.height
    u = coverage_radius(params.uav.omega, gamma)
    if pl is None:
        pl = p_los_piecewise(gamma, 0.0, params.env, u)
    pts = sample_ppp(rng, params.uav.density, u)
    if len(pts) == 0:
        return UserTrial(False, False, math.nan, False)
    r = np.hypot(pts[:, 0], pts[:, 1])
    los = rng.random(len(r)) < pl.value(r)
    h = _split_fading(rng, los, params.channel.m_l, params.channel.m_n)
    alpha = np.where(los, params.channel.alpha_l, params.channel.alpha_n)
    mean_power = (params.uav.power * cone_gain(params.uav.omega)
                  * (r * r + gamma * gamma) ** (-alpha / 2.0))
    power = mean_power * h
    idx = int(np.argmax(mean_power if mode == "averaged" else power))
    signal = power[idx]
    interference = float(power.sum() - signal)
    sinr = signal / (interference + params.channel.sigma2)
    return UserTrial(True, bool(los[idx]), float(sinr),
                     bool(sinr >= params.thresholds.theta))


def _coverage_chunk(args):
    params, seed, point_key, start, stop, mode = args
    gamma = params.uav.height
    u = coverage_radius(params.uav.omega, gamma)
    pl = p_los_piecewise(gamma, 0.0, params.env, u)
    n_assoc = n_cov = n_serving_los = 0
    for t in range(start, stop):
        trial = user_link_trial(trial_rng(seed, point_key, t), params, pl, mode)
        if trial.associated:
            n_assoc += 1
            if trial.serving_los:
                n_serving_los += 1
        if trial.covered:
            n_cov += 1
    return n_assoc, n_cov, n_serving_los


def _binomial_estimate(successes: int, n: int) -> Estimate:
    if n == 0:
        return Estimate(math.nan, math.nan, 0)
    p = successes / n
    return Estimate(p, math.sqrt(p * (1.0 - p) / n), n)


def _chunk_ranges(n: int, jobs: int):
    chunk = max(1, -(-n // max(1, jobs * 4)))
    return [(start, min(start + chunk, n)) for start in range(0, n, chunk)]


def _run_chunks(worker, argses, jobs: int):
    if jobs <= 1 or len(argses) <= 1:
        return [worker(a) for a in argses]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, argses))


def coverage_estimate(params: SystemParams, trials: int, seed: int,
                      point_key: int = 0, mode: str = "averaged",
                      jobs: int = 1) -> dict[str, Estimate]:
    """Monte Carlo estimates of coverage, association and serving-LOS split."""
    argses = [(params, seed, point_key, start, stop, mode)
              for start, stop in _chunk_ranges(trials, jobs)]
    parts = _run_chunks(_coverage_chunk, argses, jobs)
    n_assoc = sum(p[0] for p in parts)
    n_cov = sum(p[1] for p in parts)
    n_serving_los = sum(p[2] for p in parts)
    return {
        "p_coverage": _binomial_estimate(n_cov, trials),
        "p_association": _binomial_estimate(n_assoc, trials),
        "p_los_serving": _binomial_estimate(n_serving_los, n_assoc),
    }


def backhaul_trial(rng: np.random.Generator, params: SystemParams,
                   uav_height: float,
                   pl_b: PiecewiseLos | None = None) -> BackhaulTrial:
    """One backhaul trial for a UAV at the given height.

    The UAV aims its backhaul cone at the nearest BS; BSs inside the cone's
    ground footprint interfere.  The footprint's infinite outer radius is
    truncated at the sampling disk.
    """
    bs = params.bs
    if uav_height <= bs.height:
        raise ValueError("UAV must fly above the BS antenna height")
    radius = bs_sampling_radius(bs.density)
    if pl_b is None:
        pl_b = p_los_piecewise(bs.height, uav_height, params.env, radius)
    pts = sample_ppp(rng, bs.density, radius)
    if len(pts) == 0:
        return BackhaulTrial(False, math.nan)
    r = np.hypot(pts[:, 0], pts[:, 1])
    serving = int(np.argmin(r))
    dz = uav_height - bs.height
    phi = np.arctan2(dz, r)
    half = params.uav.omega_b / 2.0
    phi_s = float(phi[serving])
    if params.uav.omega_b >= math.pi / 2.0 or phi_s <= half:
        major = math.inf
    elif phi_s < math.pi / 2.0 - half:
        major = dz / math.tan(phi_s - half)
    else:
        major = dz / math.tan(math.pi / 2.0 - params.uav.omega_b)
    minor = dz / math.tan(phi_s + half) if phi_s < math.pi / 2.0 - half else 0.0
    ang = np.arctan2(pts[:, 1], pts[:, 0])
    in_arc = np.abs(_wrap_angle(ang - ang[serving])) <= half
    member = in_arc & (r >= minor) & (r <= min(major, radius))
    member[serving] = True
    los = rng.random(len(r)) < pl_b.value(r)
    h = _split_fading(rng, los, params.channel.m_l, params.channel.m_n)
    alpha = np.where(los, params.channel.alpha_l, params.channel.alpha_n)
    power = (bs.power * cone_gain(params.uav.omega_b) * _bs_gain_vec(phi, bs)
             * h * (r * r + dz * dz) ** (-alpha / 2.0))
    signal = float(power[serving])
    interference = float(power[member].sum()) - signal
    sinr = signal / (interference + params.channel.sigma2)
    return BackhaulTrial(bool(sinr >= params.thresholds.theta_b), float(sinr))


def _backhaul_chunk(args):
    params, uav_height, seed, point_key, start, stop = args
    radius = bs_sampling_radius(params.bs.density)
    pl_b = p_los_piecewise(params.bs.height, uav_height, params.env, radius)
    ok = 0
    for t in range(start, stop):
        trial = backhaul_trial(trial_rng(seed, point_key, t), params,
                               uav_height, pl_b)
        if trial.ok:
            ok += 1
    return ok


def backhaul_estimate(params: SystemParams, uav_height: float, trials: int,
                      seed: int, point_key: int = 0, jobs: int = 1) -> Estimate:
    """Monte Carlo backhaul success probability at one UAV height."""
    argses = [(params, uav_height, seed, point_key, start, stop)
              for start, stop in _chunk_ranges(trials, jobs)]
    parts = _run_chunks(_backhaul_chunk, argses, jobs)
    return _binomial_estimate(sum(parts), trials)


class _ScenarioTables:
    """Per-height-level LOS lookup tables shared by all trials."""

    def __init__(self, params: SystemParams, gamma_init: float,
                 gamma_max: float, step: float):
        env = params.env
        self.scale = math.sqrt(env.beta * env.delta)
        levels = [gamma_init]
        while levels[-1] < gamma_max:
            levels.append(min(levels[-1] + step, gamma_max))
        self.levels = np.array(levels)
        r_field = coverage_radius(params.uav.omega, gamma_max)
        self.r_field = r_field
        self.r_bs = bs_sampling_radius(params.bs.density)
        user_tabs = []
        bs_tabs = []
        for level in levels:
            user_tabs.append(
                p_los_piecewise(level, 0.0, env, r_field + 1.0).values)
            bs_tabs.append(
                p_los_piecewise(params.bs.height, level, env,
                                self.r_bs + 1.0).values)
        width_u = max(len(t) for t in user_tabs)
        width_b = max(len(t) for t in bs_tabs)
        self.user = np.zeros((len(levels), width_u))
        self.bs = np.zeros((len(levels), width_b))
        for i, t in enumerate(user_tabs):
            self.user[i, : len(t)] = t
        for i, t in enumerate(bs_tabs):
            self.bs[i, : len(t)] = t


def height_optimization_trial(rng: np.random.Generator, params: SystemParams,
                              tables: _ScenarioTables,
                              mode: str = "averaged") -> ScenarioTrial:
    """One joint trial: per-UAV backhaul height climb, then the user link.

    All UAVs start at the first table level; each failing UAV climbs one
    step at a time with fresh fading and freshly drawn blockage at the new
    height, its BS field held fixed.  UAVs still failing at the cap are in
    outage and neither serve nor interfere on the user link.
    """
    ch = params.channel
    uavs = sample_ppp(rng, params.uav.density, tables.r_field)
    n_uav = len(uavs)
    if n_uav == 0:
        return ScenarioTrial(False, False, np.empty(0), np.empty(0, dtype=bool))
    bss = sample_ppp(rng, params.bs.density, tables.r_field + tables.r_bs)
    levels = tables.levels
    if len(bss) == 0:
        heights = np.full(n_uav, levels[-1])
        return ScenarioTrial(False, False, heights, np.ones(n_uav, dtype=bool))

    dx = uavs[:, 0, None] - bss[None, :, 0]
    dy = uavs[:, 1, None] - bss[None, :, 1]
    dist = np.hypot(dx, dy)
    az = np.arctan2(-dy, -dx)  # azimuth from each UAV toward each BS
    d_idx = np.floor(dist * tables.scale).astype(int)
    serving = np.argmin(dist, axis=1)
    rows = np.arange(n_uav)
    r_serv = dist[rows, serving]
    az_serv = az[rows, serving]
    in_reach = dist <= tables.r_bs

    half = params.uav.omega_b / 2.0
    gain_b = cone_gain(params.uav.omega_b)
    level_idx = np.zeros(n_uav, dtype=int)
    passed = np.zeros(n_uav, dtype=bool)
    outage = np.zeros(n_uav, dtype=bool)
    active = np.ones(n_uav, dtype=bool)
    while np.any(active):
        ids = np.flatnonzero(active)
        lvl = int(level_idx[ids[0]])  # all active UAVs share one level
        height = float(levels[lvl])
        dz = height - params.bs.height
        phi_s = np.arctan2(dz, r_serv[ids])
        if params.uav.omega_b >= math.pi / 2.0:
            major = np.full(len(ids), np.inf)
        else:
            steep = np.where(phi_s > half, phi_s - half, math.pi / 4.0)
            major = np.where(
                phi_s <= half, np.inf,
                np.where(phi_s < math.pi / 2.0 - half, dz / np.tan(steep),
                         dz / math.tan(math.pi / 2.0 - params.uav.omega_b)))
        minor = np.where(phi_s < math.pi / 2.0 - half,
                         dz / np.tan(phi_s + half), 0.0)
        arc_ok = np.abs(_wrap_angle(az[ids] - az_serv[ids, None])) <= half
        member = (arc_ok & (dist[ids] >= minor[:, None])
                  & (dist[ids] <= major[:, None]) & in_reach[ids])
        member[np.arange(len(ids)), serving[ids]] = True
        flat = np.flatnonzero(member)
        level_row = tables.bs[lvl]
        p_flat = level_row[np.minimum(d_idx[ids].ravel()[flat],
                                      len(level_row) - 1)]
        los_flat = rng.random(len(flat)) < p_flat
        h_flat = _split_fading(rng, los_flat, ch.m_l, ch.m_n)
        alpha_flat = np.where(los_flat, ch.alpha_l, ch.alpha_n)
        phi_flat = np.arctan2(dz, dist[ids].ravel()[flat])
        d2 = dist[ids].ravel()[flat] ** 2 + dz * dz
        pw_flat = (params.bs.power * gain_b * _bs_gain_vec(phi_flat, params.bs)
                   * h_flat * d2 ** (-alpha_flat / 2.0))
        power = np.zeros(member.shape)
        power.ravel()[flat] = pw_flat
        signal = power[np.arange(len(ids)), serving[ids]]
        total = power.sum(axis=1)
        sinr = signal / (total - signal + ch.sigma2)
        ok = sinr >= params.thresholds.theta_b
        passed[ids[ok]] = True
        active[ids[ok]] = False
        failed = ids[~ok]
        at_cap = level_idx[failed] >= len(levels) - 1
        outage[failed[at_cap]] = True
        active[failed[at_cap]] = False
        level_idx[failed[~at_cap]] += 1

    heights = levels[level_idx]
    r_user = np.hypot(uavs[:, 0], uavs[:, 1])
    eligible = passed & (r_user <= np.tan(params.uav.omega / 2.0) * heights)
    if not np.any(eligible):
        return ScenarioTrial(False, False, heights, outage)
    el = np.flatnonzero(eligible)
    d_user = np.floor(r_user[el] * tables.scale).astype(int)
    p_user = tables.user[level_idx[el], np.minimum(d_user, tables.user.shape[1] - 1)]
    los = rng.random(len(el)) < p_user
    h_fade = _split_fading(rng, los, ch.m_l, ch.m_n)
    alpha = np.where(los, ch.alpha_l, ch.alpha_n)
    mean_power = (params.uav.power * cone_gain(params.uav.omega)
                  * (r_user[el] ** 2 + heights[el] ** 2) ** (-alpha / 2.0))
    power = mean_power * h_fade
    pick = int(np.argmax(mean_power if mode == "averaged" else power))
    signal = power[pick]
    sinr = signal / (power.sum() - signal + ch.sigma2)
    covered = bool(sinr >= params.thresholds.theta)
    return ScenarioTrial(True, covered, heights, outage)


def _scenario_chunk(args):
    params, gamma_init, gamma_max, step, seed, point_key, start, stop, mode = args
    tables = _ScenarioTables(params, gamma_init, gamma_max, step)
    n_assoc = n_cov = 0
    height_sum = 0.0
    uav_count = 0
    outage_count = 0
    trial_means = []
    for t in range(start, stop):
        trial = height_optimization_trial(trial_rng(seed, point_key, t),
                                          params, tables, mode)
        if trial.associated:
            n_assoc += 1
        if trial.covered:
            n_cov += 1
        if trial.heights.size:
            height_sum += float(trial.heights.sum())
            uav_count += trial.heights.size
            outage_count += int(trial.outage.sum())
            trial_means.append(float(trial.heights.mean()))
    return n_assoc, n_cov, height_sum, uav_count, outage_count, trial_means


def scenario_estimate(params: SystemParams, gamma_init: float, trials: int,
                      seed: int, point_key: int = 0, gamma_max: float = 300.0,
                      step: float = 5.0, mode: str = "averaged",
                      jobs: int = 1) -> dict[str, Estimate]:
    """Joint coverage and height statistics of the self-optimizing network."""
    argses = [(params, gamma_init, gamma_max, step, seed, point_key, start,
               stop, mode) for start, stop in _chunk_ranges(trials, jobs)]
    parts = _run_chunks(_scenario_chunk, argses, jobs)
    n_assoc = sum(p[0] for p in parts)
    n_cov = sum(p[1] for p in parts)
    height_sum = sum(p[2] for p in parts)
    uav_count = sum(p[3] for p in parts)
    outage_count = sum(p[4] for p in parts)
    trial_means = [m for p in parts for m in p[5]]
    if uav_count:
        mean_height = height_sum / uav_count
        se_height = (float(np.std(trial_means, ddof=1)) / math.sqrt(len(trial_means))
                     if len(trial_means) > 1 else math.nan)
        height_est = Estimate(mean_height, se_height, uav_count)
        outage_est = _binomial_estimate(outage_count, uav_count)
    else:
        height_est = Estimate(math.nan, math.nan, 0)
        outage_est = Estimate(math.nan, math.nan, 0)
    return {
        "p_joint": _binomial_estimate(n_cov, trials),
        "p_association": _binomial_estimate(n_assoc, trials),
        "mean_height_m": height_est,
        "p_backhaul_outage": outage_est,
    }
