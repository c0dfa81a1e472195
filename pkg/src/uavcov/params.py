"""Parameter model and config ingestion.

All internal quantities are SI: metres, square metres, watts, radians and
linear power ratios.  Unit conversion happens exactly once, at the config
boundary: config keys carry explicit unit suffixes (``omega_deg``,
``lambda_per_km2``, ``theta_db``) and are converted on parse; serialization
converts back.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

DEG = math.pi / 180.0

ENV_PREFIX = "UAVCOV_"


@dataclass(frozen=True)
class EnvironmentParams:
    """Urban environment: built-up statistics driving blockage."""

    beta: float  # building density, buildings per m^2
    delta: float  # fraction of land occupied by buildings, 0..1
    kappa: float  # Rayleigh scale of the building height distribution, m


@dataclass(frozen=True)
class UavParams:
    density: float  # UAV density, per m^2
    height: float  # operating height for the homogeneous analysis, m
    omega: float  # user-link cone beamwidth, rad
    omega_b: float  # backhaul cone beamwidth, rad
    power: float  # user-link transmit power, W


@dataclass(frozen=True)
class BsParams:
    density: float  # BS density, per m^2
    height: float  # BS antenna height, m
    power: float  # BS transmit power, W
    eta_h: float  # horizontal antenna gain, linear
    downtilt: float  # vertical downtilt of the BS antenna, rad


@dataclass(frozen=True)
class ChannelParams:
    alpha_l: float  # path-loss exponent on line-of-sight links
    alpha_n: float  # path-loss exponent on blocked links
    m_l: int  # Nakagami shape on line-of-sight links
    m_n: int  # Nakagami shape on blocked links
    sigma2: float  # noise power, W


@dataclass(frozen=True)
class Thresholds:
    theta: float  # user-link SINR threshold, linear
    theta_b: float  # backhaul SINR threshold, linear


@dataclass(frozen=True)
class SystemParams:
    env: EnvironmentParams
    uav: UavParams
    bs: BsParams
    channel: ChannelParams
    thresholds: Thresholds


class ConfigError(Exception):
    """Raised when a config cannot be parsed or fails validation.

    ``violations`` is a list of (key, value, message) tuples naming every
    offending field, not just the first one.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = ["invalid configuration:"]
        for key, value, message in self.violations:
            lines.append(f"  {key} = {value!r}: {message}")
        super().__init__("\n".join(lines))


def _per_km2_in(v: float) -> float:
    return v * 1e-6


def _per_km2_out(v: float) -> float:
    return v * 1e6


def _deg_in(v: float) -> float:
    return v * DEG


def _deg_out(v: float) -> float:
    return v / DEG


def _db_in(v: float) -> float:
    return 10.0 ** (v / 10.0)


def _db_out(v: float) -> float:
    return 10.0 * math.log10(v)


def _ident(v: float) -> float:
    return v


# key -> (section, attribute, to-SI converter, from-SI converter)
CONFIG_KEYS = {
    "beta_per_km2": ("env", "beta", _per_km2_in, _per_km2_out),
    "delta": ("env", "delta", _ident, _ident),
    "kappa_m": ("env", "kappa", _ident, _ident),
    "lambda_per_km2": ("uav", "density", _per_km2_in, _per_km2_out),
    "gamma_m": ("uav", "height", _ident, _ident),
    "omega_deg": ("uav", "omega", _deg_in, _deg_out),
    "omega_b_deg": ("uav", "omega_b", _deg_in, _deg_out),
    "p_w": ("uav", "power", _ident, _ident),
    "lambda_b_per_km2": ("bs", "density", _per_km2_in, _per_km2_out),
    "gamma_b_m": ("bs", "height", _ident, _ident),
    "p_b_w": ("bs", "power", _ident, _ident),
    "eta_bh": ("bs", "eta_h", _ident, _ident),
    "phi_d_deg": ("bs", "downtilt", _deg_in, _deg_out),
    "alpha_l": ("channel", "alpha_l", _ident, _ident),
    "alpha_n": ("channel", "alpha_n", _ident, _ident),
    "m_l": ("channel", "m_l", _ident, _ident),
    "m_n": ("channel", "m_n", _ident, _ident),
    "sigma2_w": ("channel", "sigma2", _ident, _ident),
    "theta_db": ("thresholds", "theta", _db_in, _db_out),
    "theta_b_db": ("thresholds", "theta_b", _db_in, _db_out),
}

_INT_KEYS = {"m_l", "m_n"}

_SECTION_TYPES = {
    "env": EnvironmentParams,
    "uav": UavParams,
    "bs": BsParams,
    "channel": ChannelParams,
    "thresholds": Thresholds,
}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a raw string mapping.

    Blank lines and ``#`` comments are ignored.  Unknown and duplicate keys
    are errors.
    """
    raw: dict[str, str] = {}
    violations = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            violations.append((f"line {lineno}", line.strip(), "expected 'key = value'"))
            continue
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in CONFIG_KEYS:
            violations.append((key, value, "unknown config key"))
        elif key in raw:
            violations.append((key, value, "duplicate key"))
        else:
            raw[key] = value
    if violations:
        raise ConfigError(violations)
    return raw


def apply_env_overrides(raw: dict[str, str], environ) -> dict[str, str]:
    """Overlay UAVCOV_<KEY> environment variables onto a raw mapping."""
    merged = dict(raw)
    violations = []
    for name, value in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower()
        if key not in CONFIG_KEYS:
            violations.append((name, value, "unknown config key in environment override"))
        else:
            merged[key] = value
    if violations:
        raise ConfigError(violations)
    return merged


def validate(raw) -> SystemParams:
    """Build a validated SystemParams from a raw key/value mapping.

    Values may be strings (config text, env overrides) or numbers (axis
    overrides).  Raises ConfigError listing every violation.
    """
    violations = []
    values: dict[tuple[str, str], float] = {}
    for key, (section, attr, to_si, _) in CONFIG_KEYS.items():
        if key not in raw:
            violations.append((key, None, "missing required key"))
            continue
        raw_value = raw[key]
        try:
            value = float(raw_value)
        except (TypeError, ValueError):
            violations.append((key, raw_value, "not a number"))
            continue
        if not math.isfinite(value):
            violations.append((key, raw_value, "not finite"))
            continue
        if key in _INT_KEYS:
            if value != int(value):
                violations.append((key, raw_value, "must be a positive integer"))
                continue
            values[(section, attr)] = int(value)
        else:
            values[(section, attr)] = to_si(value)
    for key in raw:
        if key not in CONFIG_KEYS:
            violations.append((key, raw[key], "unknown config key"))
    violations.extend(_check_values(values))
    if violations:
        raise ConfigError(violations)

    sections = {
        name: cls(**{f: values[(name, f)] for f in cls.__dataclass_fields__})
        for name, cls in _SECTION_TYPES.items()
    }
    return SystemParams(**sections)


def load_config(path, environ=None) -> SystemParams:
    """Read, parse and validate a config file, with environment overrides.

    Pass ``environ=os.environ`` (the CLI default) to honor UAVCOV_<KEY>
    variables; None skips the overlay.
    """
    with open(path, encoding="utf-8") as fh:
        raw = parse_config_text(fh.read())
    if environ is not None:
        raw = apply_env_overrides(raw, environ)
    return validate(raw)


# key, predicate on the SI value, reported-value converter, message
_RANGE_RULES = [
    ("beta_per_km2", lambda x: x > 0, _ident, "building density must be > 0"),
    ("delta", lambda x: 0 < x < 1, _ident, "built-up fraction must lie in (0, 1)"),
    ("kappa_m", lambda x: x > 0, _ident, "height scale must be > 0"),
    ("lambda_per_km2", lambda x: x > 0, _ident, "UAV density must be > 0"),
    ("gamma_m", lambda x: x > 0, _ident, "UAV height must be > 0"),
    ("omega_deg", lambda x: 0 < x < math.pi, _deg_out,
     "beamwidth must lie in (0, 180) degrees"),
    ("omega_b_deg", lambda x: 0 < x < math.pi, _deg_out,
     "beamwidth must lie in (0, 180) degrees"),
    ("p_w", lambda x: x > 0, _ident, "transmit power must be > 0"),
    ("lambda_b_per_km2", lambda x: x > 0, _ident, "BS density must be > 0"),
    ("gamma_b_m", lambda x: x > 0, _ident, "BS height must be > 0"),
    ("p_b_w", lambda x: x > 0, _ident, "transmit power must be > 0"),
    ("eta_bh", lambda x: 0 < x <= 1, _ident, "horizontal gain must lie in (0, 1]"),
    ("phi_d_deg", lambda x: x >= 0, _deg_out, "downtilt must be >= 0"),
    ("alpha_l", lambda x: x >= 2, _ident, "LOS path-loss exponent must be >= 2"),
    ("m_l", lambda x: isinstance(x, int) and x >= 1, _ident,
     "must be a positive integer"),
    ("m_n", lambda x: isinstance(x, int) and x >= 1, _ident,
     "must be a positive integer"),
    ("sigma2_w", lambda x: x >= 0, _ident, "noise power must be >= 0"),
    ("theta_db", lambda x: x > 0, _ident, "SINR threshold must be a positive ratio"),
    ("theta_b_db", lambda x: x > 0, _ident, "SINR threshold must be a positive ratio"),
]


def _check_values(values: dict) -> list:
    """Range checks over whichever (section, attr) values parsed."""
    v = []
    for key, pred, display, message in _RANGE_RULES:
        section, attr = CONFIG_KEYS[key][0], CONFIG_KEYS[key][1]
        if (section, attr) in values and not pred(values[(section, attr)]):
            v.append((key, display(values[(section, attr)]), message))
    a_l = values.get(("channel", "alpha_l"))
    a_n = values.get(("channel", "alpha_n"))
    if a_l is not None and a_n is not None and not a_l < a_n:
        v.append(("alpha_n", a_n, "alpha_l < alpha_n required"))
    return v


def check_params(params: SystemParams) -> list:
    """Range checks on an already-built SystemParams, in SI units."""
    values = {
        (section, attr): getattr(getattr(params, section), attr)
        for section, attr, _, _ in CONFIG_KEYS.values()
    }
    return _check_values(values)


def _format_value(v: float) -> str:
    if v == 0:
        v = 0.0  # normalize -0.0
    return "%.12g" % v


def serialize_config(params: SystemParams) -> str:
    """Canonical config text; serialize -> parse -> serialize is stable."""
    lines = []
    for key, (section, attr, _, from_si) in CONFIG_KEYS.items():
        value = getattr(getattr(params, section), attr)
        if key in _INT_KEYS:
            lines.append(f"{key} = {int(value)}")
        else:
            lines.append(f"{key} = {_format_value(from_si(value))}")
    return "\n".join(lines) + "\n"


def config_digest(params: SystemParams) -> str:
    """SHA-256 of the canonical serialization, for provenance headers."""
    return hashlib.sha256(serialize_config(params).encode()).hexdigest()


def with_overrides(params: SystemParams, overrides: dict[str, float]) -> SystemParams:
    """Re-validate params with config-key overrides applied (sweep axes)."""
    raw = {}
    for key, (section, attr, _, from_si) in CONFIG_KEYS.items():
        value = getattr(getattr(params, section), attr)
        raw[key] = int(value) if key in _INT_KEYS else from_si(value)
    raw.update(overrides)
    return validate(raw)
