"""Domain types, configuration, and population construction.

Everything downstream (simulator, clustering, fusion, reputation, theory)
shares the types defined here. A sensor network is N paired sensors plus an
optional set of J trusted anchor sensors; a fraction alpha0 of the N sensors
is Byzantine and flips reports according to AttackParams.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum
from pathlib import Path

import numpy as np


class Hypothesis(IntEnum):
    H0 = 0
    H1 = 1


class Role(IntEnum):
    HONEST = 0
    BYZANTINE = 1


class ConfigError(ValueError):
    """Raised when a ScenarioConfig violates an invariant; names the field."""


@dataclass(frozen=True)
class SensorModel:
    """Identical local-detector quality for every sensor: p_f < p_d."""

    p_d: float = 0.9
    p_f: float = 0.1


@dataclass(frozen=True)
class AttackParams:
    """Byzantine behavior: fraction alpha0, flip rates p1 (own decision,
    applied independently to the direct report and the exchanged copy) and
    p2 (relayed partner copy), plus an optional per-step uniform drift of
    half-width ``jitter`` on p1.

    With ``per_sensor_jitter`` each Byzantine draws its own per-step p1;
    by default one shared draw per step applies to all of them.
    """

    alpha0: float = 0.35
    p1: float = 0.5
    p2: float = 0.5
    jitter: float = 0.0
    per_sensor_jitter: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    """All network, sensor, attack, and algorithm parameters in one record."""

    n_sensors: int = 100
    n_anchors: int = 0
    sensor: SensorModel = field(default_factory=SensorModel)
    attack: AttackParams = field(default_factory=AttackParams)
    prior_h1: float = 0.5
    window: int = 20
    k_clusters: int = 5
    r_init: float = 0.5
    lambda_valid: float = 0.5
    tau: float = 0.5
    gamma1: float = 1.5
    gamma2: float = 0.5
    lambda_fc: float = 1.0
    n_steps: int = 2000
    seed: int = 0


def _check_prob(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and np.isfinite(value) and 0.0 <= value <= 1.0):
        raise ConfigError(f"{name} out of [0,1]")


def validate_config(cfg: ScenarioConfig) -> ScenarioConfig:
    """Return cfg unchanged iff every invariant holds, else raise ConfigError."""
    if cfg.n_sensors <= 0:
        raise ConfigError("n_sensors must be positive")
    if cfg.n_sensors % 2 != 0:
        raise ConfigError("n_sensors must be even")
    if cfg.n_anchors < 0:
        raise ConfigError("n_anchors must be >= 0")
    _check_prob("p_d", cfg.sensor.p_d)
    _check_prob("p_f", cfg.sensor.p_f)
    if not cfg.sensor.p_f < cfg.sensor.p_d:
        raise ConfigError("p_f must be < p_d (informative sensor)")
    _check_prob("alpha0", cfg.attack.alpha0)
    _check_prob("p1", cfg.attack.p1)
    _check_prob("p2", cfg.attack.p2)
    if not (np.isfinite(cfg.attack.jitter) and 0.0 <= cfg.attack.jitter <= 0.5):
        raise ConfigError("jitter out of [0, 0.5]")
    _check_prob("prior_h1", cfg.prior_h1)
    if cfg.window < 1:
        raise ConfigError("window must be >= 1")
    if cfg.k_clusters < 1:
        raise ConfigError("k_clusters must be >= 1")
    for name in ("r_init", "lambda_valid", "tau", "gamma1", "gamma2", "lambda_fc"):
        if not np.isfinite(getattr(cfg, name)):
            raise ConfigError(f"{name} must be finite")
    if not cfg.gamma1 > cfg.gamma2:
        raise ConfigError("gamma1 must exceed gamma2")
    if cfg.n_steps < 1:
        raise ConfigError("n_steps must be >= 1")
    if not (0 <= cfg.seed < 2**64):
        raise ConfigError("seed out of uint64 range")
    return cfg


@dataclass
class SensorState:
    """Point-in-time snapshot of one sensor.

    Histories are oldest-first tuples of at most ``window`` bits; the live
    state is array-backed inside Population and owned by one simulation.
    """

    id: int
    role: Role
    partner: int | None
    decision_history: tuple[int, ...]
    mms_history: tuple[int, ...]
    reputation: float


class Population:
    """Array-backed state for N paired sensors plus J anchors.

    Ring buffers hold the ``window`` most recent direct reports and
    match/mismatch results per sensor. Column order in the raw buffers is
    rotation of arrival order; all consumers (Hamming distances, all-match
    tests) are order-invariant, and snapshots restore logical order.
    """

    def __init__(self, roles: np.ndarray, partner: np.ndarray, window: int,
                 r_init: float, n_anchors: int):
        n = roles.shape[0]
        self.n = n
        self.n_anchors = n_anchors
        self.window = window
        self.roles = roles.astype(bool)          # True = Byzantine
        self.partner = partner.astype(np.int64)
        self.reputation = np.full(n, r_init, dtype=np.float64)
        self.decisions = np.zeros((n, window), dtype=np.uint8)
        self.mms = np.zeros((n, window), dtype=np.uint8)
        self.mms_match_count = np.zeros(n, dtype=np.int64)
        self.hist_len = 0
        self._pos = 0

    # -- history maintenance -------------------------------------------------

    def push_round(self, u: np.ndarray, mms: np.ndarray) -> None:
        """Append this round's reports and match results, evicting beyond T."""
        if self.hist_len == self.window:
            self.mms_match_count -= self.mms[:, self._pos]
        self.decisions[:, self._pos] = u
        self.mms[:, self._pos] = mms
        self.mms_match_count += mms
        self._pos = (self._pos + 1) % self.window
        self.hist_len = min(self.hist_len + 1, self.window)

    def decision_window(self) -> np.ndarray:
        """(N, t') view of the filled decision columns, t' = min(t, T)."""
        return self.decisions[:, : self.hist_len]

    def mms_window(self) -> np.ndarray:
        return self.mms[:, : self.hist_len]

    def _ordered(self, buf: np.ndarray, i: int) -> tuple[int, ...]:
        if self.hist_len < self.window:
            return tuple(int(b) for b in buf[i, : self.hist_len])
        return tuple(int(b) for b in np.roll(buf[i], -self._pos))

    # -- snapshot views ------------------------------------------------------

    def sensor(self, i: int) -> SensorState:
        return SensorState(
            id=i,
            role=Role.BYZANTINE if self.roles[i] else Role.HONEST,
            partner=int(self.partner[i]),
            decision_history=self._ordered(self.decisions, i),
            mms_history=self._ordered(self.mms, i),
            reputation=float(self.reputation[i]),
        )

    @property
    def sensors(self) -> list[SensorState]:
        return [self.sensor(i) for i in range(self.n)]

    @property
    def anchors(self) -> list[SensorState]:
        """Anchors are trusted reference sensors outside the N population:
        always honest, unpaired, and excluded from grouping and clustering."""
        return [
            SensorState(id=self.n + j, role=Role.HONEST, partner=None,
                        decision_history=(), mms_history=(), reputation=float("nan"))
            for j in range(self.n_anchors)
        ]

    @property
    def n_byzantine(self) -> int:
        return int(self.roles.sum())


def build_population(cfg: ScenarioConfig, rng: np.random.Generator) -> Population:
    """Draw a fresh population: exactly round(alpha0*N) Byzantine sensors at
    uniformly random positions, paired into N/2 groups by a random permutation.

    Draw order (fixed for reproducibility): role positions first, then the
    pairing permutation.
    """
    validate_config(cfg)
    n = cfg.n_sensors
    n_byz = int(round(cfg.attack.alpha0 * n))
    roles = np.zeros(n, dtype=bool)
    roles[rng.permutation(n)[:n_byz]] = True
    order = rng.permutation(n)
    partner = np.empty(n, dtype=np.int64)
    partner[order[0::2]] = order[1::2]
    partner[order[1::2]] = order[0::2]
    return Population(roles, partner, cfg.window, cfg.r_init, cfg.n_anchors)


# -- flat key-value config files ----------------------------------------------

_BOOL_STRINGS = {"true": True, "1": True, "yes": True,
                 "false": False, "0": False, "no": False}


def _parse_bool(s: str) -> bool:
    try:
        return _BOOL_STRINGS[s.strip().lower()]
    except KeyError:
        raise ConfigError(f"expected a boolean, got {s!r}") from None


#: flat config keys -> type caster; keys match ScenarioConfig field names,
#: with the nested SensorModel / AttackParams records flattened.
CONFIG_FIELDS: dict[str, type | object] = {
    "n_sensors": int,
    "n_anchors": int,
    "p_d": float,
    "p_f": float,
    "alpha0": float,
    "p1": float,
    "p2": float,
    "jitter": float,
    "per_sensor_jitter": _parse_bool,
    "prior_h1": float,
    "window": int,
    "k_clusters": int,
    "r_init": float,
    "lambda_valid": float,
    "tau": float,
    "gamma1": float,
    "gamma2": float,
    "lambda_fc": float,
    "n_steps": int,
    "seed": int,
}

_SENSOR_KEYS = ("p_d", "p_f")
_ATTACK_KEYS = ("alpha0", "p1", "p2", "jitter", "per_sensor_jitter")


def load_config_file(path: str | Path) -> dict[str, str]:
    """Parse a flat ``key = value`` text file ('#' starts a comment)."""
    raw: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_FIELDS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        raw[key] = value
    return raw


def config_from_mapping(values: dict[str, object],
                        base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Build a validated ScenarioConfig from flat key/value overrides.

    String values are coerced per CONFIG_FIELDS; anything else is used as-is.
    """
    cfg = base if base is not None else ScenarioConfig()
    sensor_kw: dict[str, object] = {}
    attack_kw: dict[str, object] = {}
    top_kw: dict[str, object] = {}
    for key, value in values.items():
        if key not in CONFIG_FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        caster = CONFIG_FIELDS[key]
        if isinstance(value, str):
            try:
                value = caster(value)
            except ConfigError:
                raise
            except ValueError:
                raise ConfigError(f"{key}: cannot parse {value!r}") from None
        if key in _SENSOR_KEYS:
            sensor_kw[key] = value
        elif key in _ATTACK_KEYS:
            attack_kw[key] = value
        else:
            top_kw[key] = value
    if sensor_kw:
        top_kw["sensor"] = replace(cfg.sensor, **sensor_kw)
    if attack_kw:
        top_kw["attack"] = replace(cfg.attack, **attack_kw)
    return validate_config(replace(cfg, **top_kw))
