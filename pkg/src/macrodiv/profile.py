"""Average link power profiles, per-user views, reference matrices and the
edge-excited cell drop generator.

Powers are linear (not dB).  A profile is ``n_r x n``: rows are receive
antennas, columns are users.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import log_ndtr

from .errors import DimensionError, SingularProfileError

PROFILE_FORMAT = "macrodiv-profile-v1"
SCENARIO_FORMAT = "macrodiv-scenario-v1"

# Minimum user-to-BS distance, as a fraction of the cell radius.
MIN_DISTANCE_FRACTION = 0.01

_BUILTIN = {
    "P_M": [
        [0.3500, 0.0117, 0.1225],
        [0.6292, 0.9282, 0.0741],
        [0.0208, 0.0601, 0.8035],
    ],
    "P_P": [[0.3333] * 3] * 3,
    "P_D4": [
        [0.2061, 1.3941, 1.1034, 4.6938],
        [0.2061, 1.3941, 1.1034, 4.6938],
        [2.2923, 16.8146, 0.0857, 0.6790],
        [2.2923, 16.8146, 0.0857, 0.6790],
        [0.8361, 3.4834, 2.8181, 0.6700],
        [0.8361, 3.4834, 2.8181, 0.6700],
    ],
}

BUILTIN_NAMES = tuple(_BUILTIN)


@dataclass(frozen=True)
class PowerProfile:
    """Matrix of average link powers ``P[i, k] = E{|H_ik|^2}``."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2:
            raise DimensionError(f"power matrix must be 2-D, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("link powers must be finite and nonnegative")
        if p.shape[1] and np.any(p.max(axis=0, initial=0.0) <= 0):
            raise ValueError("every user needs at least one positive link power")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def n_r(self):
        return self.p.shape[0]

    @property
    def n(self):
        return self.p.shape[1]

    def __eq__(self, other):
        return isinstance(other, PowerProfile) and np.array_equal(self.p, other.p)

    def __hash__(self):
        return hash((self.p.shape, self.p.tobytes()))

    def to_dict(self):
        return {"format": PROFILE_FORMAT, "n_r": self.n_r, "n": self.n, "p": self.p.tolist()}

    @classmethod
    def from_dict(cls, obj):
        if obj.get("format") != PROFILE_FORMAT:
            raise ValueError(f"not a {PROFILE_FORMAT} object: format={obj.get('format')!r}")
        p = np.asarray(obj["p"], dtype=float).reshape(int(obj["n_r"]), int(obj["n"]))
        return cls(p)


@dataclass(frozen=True)
class UserView:
    """The desired user's power vector ``p1`` and the interferer matrix ``q2``."""

    user: int
    p1: np.ndarray
    q2: np.ndarray

    @property
    def n_r(self):
        return self.p1.shape[0]

    @property
    def n(self):
        return self.q2.shape[1] + 1

    def require_invertible(self):
        """Raise unless ``P1 = diag(p1)`` is invertible."""
        if np.any(self.p1 <= 0):
            raise SingularProfileError(
                f"user {self.user} has zero link power on antennas "
                f"{np.flatnonzero(self.p1 <= 0).tolist()}; P1 is singular"
            )
        return self


def user_view(profile, user):
    """Split ``profile`` into the desired column ``user`` and the others, in order."""
    if not 0 <= user < profile.n:
        raise IndexError(f"user {user} out of range for {profile.n} users")
    p1 = profile.p[:, user].copy()
    q2 = np.delete(profile.p, user, axis=1)
    return UserView(user=user, p1=p1, q2=q2)


def normalize_columns(profile):
    """Scale every column to unit sum."""
    sums = profile.p.sum(axis=0)
    if np.any(sums <= 0):
        raise ValueError("cannot normalize a zero column")
    return PowerProfile(profile.p / sums)


def builtin_profile(name):
    """Reference matrices ``P_M``, ``P_P`` (3x3) and ``P_D4`` (6x4)."""
    try:
        return PowerProfile(np.array(_BUILTIN[name]))
    except KeyError:
        raise KeyError(f"unknown builtin profile {name!r}; choose from {BUILTIN_NAMES}") from None


def load_profile(path):
    with open(path) as fh:
        return PowerProfile.from_dict(json.load(fh))


def save_profile(profile, path):
    with open(path, "w") as fh:
        fh.write(dump_profile(profile))


def dump_profile(profile):
    return json.dumps(profile.to_dict(), indent=2) + "\n"


# -- drops -----------------------------------------------------------------


def triangle_vertices(radius=1.0):
    """Equilateral triangle with circumradius ``radius`` centred at the origin."""
    angles = np.deg2rad([90.0, 210.0, 330.0])
    return [(radius * math.cos(a), radius * math.sin(a)) for a in angles]


@dataclass(frozen=True)
class Calibration:
    threshold_db: float = 3.0
    quantile: float = 0.95


@dataclass(frozen=True)
class Scenario:
    """Edge-excited cell drop settings.

    ``bs_positions`` and ``user_region`` default to the vertices of an
    equilateral triangle of circumradius ``cell_radius``.
    """

    users: int = 3
    antennas_per_bs: int = 1
    shadowing_std_db: float = 8.0
    pathloss_exponent: float = 3.5
    calibration: Calibration = field(default_factory=Calibration)
    cell_radius: float = 1.0
    bs_positions: tuple = None
    user_region: tuple = None

    def __post_init__(self):
        if self.bs_positions is None:
            object.__setattr__(self, "bs_positions", tuple(triangle_vertices(self.cell_radius)))
        else:
            object.__setattr__(self, "bs_positions", tuple(tuple(map(float, b)) for b in self.bs_positions))
        if self.user_region is None:
            object.__setattr__(self, "user_region", tuple(triangle_vertices(self.cell_radius)))
        else:
            object.__setattr__(self, "user_region", tuple(tuple(map(float, v)) for v in self.user_region))
        if isinstance(self.calibration, dict):
            object.__setattr__(self, "calibration", Calibration(**self.calibration))
        if self.users < 1 or self.antennas_per_bs < 1:
            raise ValueError("users and antennas_per_bs must be positive")
        if self.shadowing_std_db < 0:
            raise ValueError("shadowing_std_db must be nonnegative")
        if self.pathloss_exponent <= 2:
            raise ValueError("pathloss_exponent must exceed 2")
        if not 0 < self.calibration.quantile < 1:
            raise ValueError("calibration quantile must lie in (0, 1)")
        if self.cell_radius <= 0 or len(self.user_region) < 3 or not self.bs_positions:
            raise ValueError("invalid geometry")

    @property
    def n_r(self):
        return len(self.bs_positions) * self.antennas_per_bs

    def to_dict(self):
        return {
            "format": SCENARIO_FORMAT,
            "bs_positions": [list(b) for b in self.bs_positions],
            "antennas_per_bs": self.antennas_per_bs,
            "user_region": [list(v) for v in self.user_region],
            "users": self.users,
            "shadowing_std_db": self.shadowing_std_db,
            "pathloss_exponent": self.pathloss_exponent,
            "calibration": {
                "threshold_db": self.calibration.threshold_db,
                "quantile": self.calibration.quantile,
            },
            "cell_radius": self.cell_radius,
        }

    @classmethod
    def from_dict(cls, obj):
        if obj.get("format") != SCENARIO_FORMAT:
            raise ValueError(f"not a {SCENARIO_FORMAT} object: format={obj.get('format')!r}")
        kwargs = {k: v for k, v in obj.items() if k != "format"}
        if "calibration" in kwargs:
            kwargs["calibration"] = Calibration(**kwargs["calibration"])
        return cls(**kwargs)


def load_scenario(path):
    with open(path) as fh:
        return Scenario.from_dict(json.load(fh))


def _bs_distances(scenario, position):
    bs = np.asarray(scenario.bs_positions, dtype=float)
    d = np.hypot(*(bs - np.asarray(position, dtype=float)).T)
    return np.maximum(d, MIN_DISTANCE_FRACTION * scenario.cell_radius)


def calibrate_transmit_power(scenario, user_position, noise_variance=1.0):
    """Smallest transmit scale ``T`` meeting the best-BS SNR target.

    Finds ``T`` such that the probability, over independent lognormal
    shadowing on each BS link, that the strongest received SNR exceeds
    ``threshold_db`` equals ``quantile``.  The exceedance probability is
    ``1 - prod_b Phi((thr_b - T_dB) / sigma)`` in closed form.
    """
    if noise_variance <= 0:
        raise ValueError("noise_variance must be positive")
    cal = scenario.calibration
    d = _bs_distances(scenario, user_position)
    # SNR_b[dB] = T_dB - loss_b + S_b - noise_dB > thr  <=>  S_b > thr + noise_dB + loss_b - T_dB
    loss_db = 10.0 * scenario.pathloss_exponent * np.log10(d)
    base = cal.threshold_db + 10.0 * math.log10(noise_variance) + loss_db
    sigma = scenario.shadowing_std_db
    if sigma == 0:
        return 10.0 ** (base.min() / 10.0)
    target = math.log1p(-cal.quantile)

    def excess(t_db):
        return float(np.sum(log_ndtr((base - t_db) / sigma))) - target

    lo = base.min() - 40.0 * sigma
    hi = base.max() + 40.0 * sigma
    t_db = brentq(excess, lo, hi, xtol=1e-12, rtol=1e-14)
    return 10.0 ** (t_db / 10.0)


def _point_in_polygon(points, polygon):
    x, y = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    verts = np.asarray(polygon, dtype=float)
    for (x0, y0), (x1, y1) in zip(verts, np.roll(verts, -1, axis=0)):
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < x_cross)
    return inside


def _uniform_in_polygon(rng, polygon, count):
    verts = np.asarray(polygon, dtype=float)
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    out = np.empty((0, 2))
    while len(out) < count:
        cand = lo + (hi - lo) * rng.random((4 * count, 2))
        out = np.vstack([out, cand[_point_in_polygon(cand, verts)]])
    return out[:count]


@dataclass(frozen=True)
class Drop:
    profile: PowerProfile
    positions: np.ndarray
    shadowing_db: np.ndarray
    transmit_db: np.ndarray


def drop_with_details(scenario, seed, noise_variance=1.0):
    """One random drop, keeping user positions, shadowing and transmit scales."""
    rng = np.random.default_rng(seed)
    positions = _uniform_in_polygon(rng, scenario.user_region, scenario.users)
    n_bs = len(scenario.bs_positions)
    shadow = scenario.shadowing_std_db * rng.standard_normal((n_bs, scenario.users))
    p = np.empty((scenario.n_r, scenario.users))
    transmit_db = np.empty(scenario.users)
    for k, pos in enumerate(positions):
        t = calibrate_transmit_power(scenario, pos, noise_variance)
        transmit_db[k] = 10.0 * math.log10(t)
        gain = t * _bs_distances(scenario, pos) ** (-scenario.pathloss_exponent) * 10.0 ** (shadow[:, k] / 10.0)
        p[:, k] = np.repeat(gain, scenario.antennas_per_bs)
    return Drop(PowerProfile(p), positions, shadow, transmit_db)


def generate_drop(scenario, seed, noise_variance=1.0):
    """Random power profile for ``scenario``; deterministic given ``seed``.

    Co-located antennas of one BS share path loss and shadowing, so each BS
    contributes ``antennas_per_bs`` identical rows.
    """
    return drop_with_details(scenario, seed, noise_variance).profile
