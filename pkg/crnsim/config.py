"""Simulation configuration.

Plain-text `key = value` files, one key per line, `#` comments. Missing keys
take the defaults below; every value is validated before a run starts.
"""
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from typing_extensions import TypedDict


MODES = ("cusf", "without_subsets", "leachc_like", "sendora_like")
SLEEP_POLICIES = ("max_energy_subset", "all_sleep_ns", "none")
PD_NODE_MODES = ("pd_min", "fixed_half")
SLEEP_HISTORY = ("hold", "skip")

# Tolerance for the stationary idle probability check
P0_TOLERANCE = 1e-9


class SimConfig(TypedDict):
    num_crs: int
    num_nodes: int
    area_width: float
    area_height: float
    p0: float
    p_ib: float
    p_bi: float
    e_elec: float
    e_amp: float
    packet_bits: int
    r_s: float
    r_cr: float
    qd_min: float
    qf_max: float
    tau_max: float
    d_cr: float
    snr_db_min: float
    snr_db_max: float
    f_s: float
    p_sense: float
    e0: float
    rounds: int
    slot_time: float
    t_set: float
    bit_rate: float
    report_bits: int
    window: int
    pd_min: float
    pf_max: float
    pd_node_mode: str
    p_move: float
    p_ack_loss: float
    sleep_history: str
    mode: str
    sleep: str
    seed: int
    sink_x: float
    sink_y: float
    base_x: float
    base_y: float
    t_agg: float
    t_sink: float


DEFAULT_CONFIG: SimConfig = {
    # Network
    'num_crs': 4,
    'num_nodes': 100,
    'area_width': 100.0,
    'area_height': 100.0,
    # PU traffic
    'p0': 0.5,
    'p_ib': 0.3,
    'p_bi': 0.3,
    # Radio
    'e_elec': 50e-9,
    'e_amp': 10e-12,
    'packet_bits': 4000,
    'r_s': 10.0,
    'r_cr': 20.0,
    # Sensing targets
    'qd_min': 0.8,
    'qf_max': 0.1,
    'tau_max': 0.002,
    'd_cr': 20.0,
    'snr_db_min': -25.0,
    'snr_db_max': -5.0,
    'f_s': 300e3,
    'p_sense': 0.1,
    'e0': 5.0,
    'rounds': 5000,
    # Slot timing
    'slot_time': 0.1,
    't_set': 0.01,
    'bit_rate': 250e3,
    'report_bits': 4000,
    # Sleep scheduling
    'window': 50,
    'pd_min': 0.3,
    'pf_max': 0.02,
    'pd_node_mode': "pd_min",
    'p_move': 1.0,
    'p_ack_loss': 0.0,
    'sleep_history': "hold",
    # Policy
    'mode': "cusf",
    'sleep': "max_energy_subset",
    'seed': 42,
    # Baseline geometry and delays
    'sink_x': 50.0,
    'sink_y': 50.0,
    'base_x': 50.0,
    'base_y': 50.0,
    't_agg': 0.001,
    't_sink': 0.001,
}

CONFIG_KEYS: Tuple[str, ...] = tuple(DEFAULT_CONFIG.keys())

# Parameters a sweep may vary
SWEEPABLE = ("r_s", "d_cr", "p0", "mode", "sleep")


class ConfigError(ValueError):
    """Configuration problem, tagged with the offending line or key."""

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        self.line = line
        self.key = key
        prefix = f"line {line}: " if line is not None else ""
        prefix += f"{key}: " if key is not None else ""
        super().__init__(f"{prefix}{message}")


# --- Parsing ---

def coerce_value(key: str, raw: Union[str, int, float], line: Optional[int] = None):
    """Convert `raw` to the type of the key's default."""
    if key not in DEFAULT_CONFIG:
        raise ConfigError(f"unknown key '{key}'", line=line)
    default = DEFAULT_CONFIG[key]
    try:
        if isinstance(default, int):
            if isinstance(raw, str):
                try:
                    return int(raw)
                except ValueError:
                    raw = float(raw)
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError(raw)
            return int(raw)
        if isinstance(default, float):
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError(raw)
            return value
        return str(raw).strip()
    except (TypeError, ValueError):
        raise ConfigError(f"cannot read {raw!r} as {type(default).__name__}", line=line, key=key)


def parse_config_text(text: str) -> Dict[str, object]:
    """Parse `key = value` lines into a dict of coerced values (no defaults, no validation)."""
    values: Dict[str, object] = {}
    for number, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw_line.strip()!r}", line=number)
        key, raw = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", line=number)
        if key in values:
            raise ConfigError(f"duplicate key '{key}'", line=number)
        if raw == "":
            raise ConfigError(f"missing value for '{key}'", line=number)
        values[key] = coerce_value(key, raw, line=number)
    return values


def _rescale_for_p0(config: dict, p0: float) -> None:
    """Keep p_ib + p_bi and move the stationary idle probability to p0."""
    total = config['p_ib'] + config['p_bi']
    config['p_bi'] = p0 * total
    config['p_ib'] = (1.0 - p0) * total


def _resolve(base: SimConfig, values: Dict[str, object]) -> SimConfig:
    config = dict(base)
    config.update(values)
    if 'p0' in values and 'p_ib' not in values and 'p_bi' not in values:
        _rescale_for_p0(config, config['p0'])
    if 'mode' in values and 'sleep' not in values and config['mode'] != "cusf":
        config['sleep'] = "none"
    validate_config(config)
    return config


def load_config(source: Union[str, Path] = "") -> SimConfig:
    """Load a config from a file path or from inline text; empty input gives the defaults."""
    if isinstance(source, Path):
        try:
            text = source.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config file {source}: {e}")
    else:
        text = source
    config = _resolve(DEFAULT_CONFIG, parse_config_text(text))
    logging.debug(f"Loaded configuration: mode={config['mode']}, sleep={config['sleep']}, seed={config['seed']}")
    return config


def with_overrides(config: SimConfig, **values) -> SimConfig:
    """Copy of `config` with some keys replaced (CLI flags, sweep values)."""
    coerced = {key: coerce_value(key, value) for key, value in values.items()}
    return _resolve(config, coerced)


# --- Serialization ---

def format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(config: SimConfig) -> str:
    lines = ["# crnsim configuration"]
    lines += [f"{key} = {format_value(config[key])}" for key in CONFIG_KEYS]
    return "\n".join(lines) + "\n"


def save_config(config: SimConfig, path: Path) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(dump_config(config))
    logging.debug(f"Saved resolved configuration to {path}")


# --- Validation ---

def _require(ok: bool, key: str, message: str) -> None:
    if not ok:
        raise ConfigError(message, key=key)


def validate_config(config: SimConfig) -> None:
    """Raise ConfigError naming the first key that breaks an invariant."""
    for key in config:
        _require(key in DEFAULT_CONFIG, key, "unknown key")

    _require(config['r_s'] < config['r_cr'], 'r_s', f"r_s < r_cr required (r_s={config['r_s']}, r_cr={config['r_cr']})")

    for key in ('p0', 'p_ib', 'p_bi', 'qd_min', 'qf_max', 'pd_min', 'pf_max'):
        _require(0.0 < config[key] < 1.0, key, f"must be in (0,1), got {config[key]}")
    _require(0.0 <= config['p_move'] <= 1.0, 'p_move', f"must be in [0,1], got {config['p_move']}")
    _require(0.0 <= config['p_ack_loss'] < 1.0, 'p_ack_loss', f"must be in [0,1), got {config['p_ack_loss']}")

    positive: List[str] = [
        'area_width', 'area_height', 'e_elec', 'e_amp', 'packet_bits', 'r_s', 'r_cr', 'tau_max',
        'f_s', 'p_sense', 'e0', 'slot_time', 'bit_rate', 'report_bits', 't_agg', 't_sink',
    ]
    for key in positive:
        _require(config[key] > 0, key, f"must be positive, got {config[key]}")
    for key in ('d_cr', 't_set'):
        _require(config[key] >= 0, key, f"must be non-negative, got {config[key]}")

    _require(config['tau_max'] < config['slot_time'], 'tau_max', "tau_max < slot_time required")
    _require(config['t_set'] + config['tau_max'] < config['slot_time'], 't_set',
             "t_set + tau_max < slot_time required")
    _require(config['snr_db_min'] <= config['snr_db_max'], 'snr_db_min', "snr_db_min <= snr_db_max required")

    _require(config['num_crs'] >= 1, 'num_crs', f"must be >= 1, got {config['num_crs']}")
    _require(config['num_nodes'] >= 0, 'num_nodes', f"must be >= 0, got {config['num_nodes']}")
    _require(config['rounds'] >= 0, 'rounds', f"must be >= 0, got {config['rounds']}")
    _require(config['window'] >= 2, 'window', f"must be >= 2, got {config['window']}")
    _require(config['seed'] >= 0, 'seed', f"must be >= 0, got {config['seed']}")

    stationary = config['p_bi'] / (config['p_ib'] + config['p_bi'])
    _require(abs(stationary - config['p0']) <= P0_TOLERANCE, 'p0',
             f"p_bi/(p_ib+p_bi) = {stationary} does not match p0 = {config['p0']}")

    _require(config['mode'] in MODES, 'mode', f"must be one of {', '.join(MODES)}")
    _require(config['sleep'] in SLEEP_POLICIES, 'sleep', f"must be one of {', '.join(SLEEP_POLICIES)}")
    _require(config['pd_node_mode'] in PD_NODE_MODES, 'pd_node_mode', f"must be one of {', '.join(PD_NODE_MODES)}")
    _require(config['sleep_history'] in SLEEP_HISTORY, 'sleep_history',
             f"must be one of {', '.join(SLEEP_HISTORY)}")
    _require(config['mode'] == "cusf" or config['sleep'] == "none", 'sleep',
             f"mode {config['mode']} senses with every node and requires sleep = none")

    for key, limit in (('sink_x', 'area_width'), ('base_x', 'area_width'),
                       ('sink_y', 'area_height'), ('base_y', 'area_height')):
        _require(0.0 <= config[key] <= config[limit], key, f"must lie inside the area (0..{config[limit]})")
