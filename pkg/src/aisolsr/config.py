"""Scenario configuration: flat key-value schema, defaults, validation.

Defaults mirror the 100-node reference scenario (1000x1000 m, 200 s, 10 J
primary energy, 0.5 normalized energy floor). Every key can come from a
config file line `key = value`, a service override, or a CLI `--set`;
validation failures always name the offending field.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from importlib import resources
from typing import Mapping

PROTOCOL_OLSR = "olsr"
PROTOCOL_AIS = "ais-olsr"
PROTOCOLS = (PROTOCOL_OLSR, PROTOCOL_AIS)


class ConfigError(ValueError):
    """A scenario field is missing, malformed, or inconsistent."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class ScenarioConfig:
    # scenario
    node_count: int = 100
    area_width: float = 1000.0
    area_height: float = 1000.0
    sim_time: float = 200.0
    seed: int = 1
    protocol: str = PROTOCOL_OLSR
    # energy
    initial_energy: float = 10.0
    initial_energies: tuple[float, ...] = ()  # per-node override, empty = scalar
    energy_floor: float = 0.5
    ctrl_tx_cost: float = 0.005
    ctrl_rx_cost: float = 0.0025
    data_tx_cost: float = 0.02
    data_rx_cost: float = 0.01
    # radio & timers
    radio_range: float = 250.0
    hello_interval: float = 2.0
    tc_interval: float = 5.0
    neighbor_hold_time: float = 6.0
    topology_hold_time: float = 15.0
    timer_jitter: float = 0.1
    hop_latency: float = 0.002
    latency_jitter: float = 0.0005
    routing_refresh: float = 1.0
    # mobility
    speed_min: float = 1.0
    speed_max: float = 10.0
    pause_time: float = 10.0
    mobility_step: float = 0.5
    positions: tuple[tuple[float, float], ...] = ()  # explicit placement, empty = random
    # traffic
    flow_count: int = 10
    flows: tuple[tuple[int, int], ...] = ()  # explicit src>dst pairs, empty = random
    packet_size: int = 512
    packet_rate: float = 4.0
    traffic_start: float = 5.0
    data_ttl: int = 64
    queue_capacity: int = 50
    # immune route selection
    detection_capacity: int = 8
    clonalg_top_n: int = 3
    dominance_margin: float = 0.05
    max_candidate_routes: int = 16
    extra_hop_slack: int = 3
    memory_capacity: int = 64
    meta_replacement: int = 1
    # bookkeeping
    checkpoint_interval: float = 1.0

    @property
    def max_initial_energy(self) -> float:
        if self.initial_energies:
            return max(self.initial_energies)
        return self.initial_energy

    def node_initial_energy(self, node: int) -> float:
        if self.initial_energies:
            return self.initial_energies[node]
        return self.initial_energy


FIELD_NAMES = tuple(f.name for f in dataclasses.fields(ScenarioConfig))
_FLOW_COUNT_DERIVED = "flow_count"  # derived from flows when flows are explicit


def _parse_positions(value, field: str) -> tuple[tuple[float, float], ...]:
    if isinstance(value, (list, tuple)):
        try:
            return tuple((float(x), float(y)) for x, y in value)
        except (TypeError, ValueError):
            raise ConfigError(field, f"expected [x, y] pairs, got {value!r}")
    text = str(value).strip()
    if not text:
        return ()
    out = []
    for part in text.split(","):
        bits = part.strip().split(":")
        if len(bits) != 2:
            raise ConfigError(field, f"expected x:y pairs, got {part.strip()!r}")
        try:
            out.append((float(bits[0]), float(bits[1])))
        except ValueError:
            raise ConfigError(field, f"non-numeric coordinate in {part.strip()!r}")
    return tuple(out)


def _parse_flows(value, field: str) -> tuple[tuple[int, int], ...]:
    if isinstance(value, (list, tuple)):
        try:
            return tuple((int(a), int(b)) for a, b in value)
        except (TypeError, ValueError):
            raise ConfigError(field, f"expected [src, dst] pairs, got {value!r}")
    text = str(value).strip()
    if not text:
        return ()
    out = []
    for part in text.split(","):
        bits = part.strip().split(">")
        if len(bits) != 2:
            raise ConfigError(field, f"expected src>dst pairs, got {part.strip()!r}")
        try:
            out.append((int(bits[0]), int(bits[1])))
        except ValueError:
            raise ConfigError(field, f"non-integer node id in {part.strip()!r}")
    return tuple(out)


def _parse_float_list(value, field: str) -> tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        items = value
    else:
        text = str(value).strip()
        if not text:
            return ()
        items = text.split(",")
    try:
        return tuple(float(v) for v in items)
    except (TypeError, ValueError):
        raise ConfigError(field, f"expected a comma-separated number list, got {value!r}")


def _coerce(field: str, value, kind: type):
    if kind is int:
        if isinstance(value, bool):
            raise ConfigError(field, "expected an integer")
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
        try:
            return int(str(value).strip())
        except ValueError:
            raise ConfigError(field, f"expected an integer, got {value!r}")
    if kind is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        try:
            return float(str(value).strip())
        except ValueError:
            raise ConfigError(field, f"expected a number, got {value!r}")
    if kind is str:
        return str(value).strip()
    raise AssertionError(f"unhandled kind {kind}")


def build_config(values: Mapping[str, object]) -> ScenarioConfig:
    """Coerce and validate a raw key-value mapping into a ScenarioConfig."""
    kwargs = {}
    defaults = ScenarioConfig()
    for key, raw in values.items():
        if key not in FIELD_NAMES:
            raise ConfigError(key, "unknown configuration key")
        if key == "positions":
            kwargs[key] = _parse_positions(raw, key)
        elif key == "flows":
            kwargs[key] = _parse_flows(raw, key)
        elif key == "initial_energies":
            kwargs[key] = _parse_float_list(raw, key)
        else:
            kwargs[key] = _coerce(key, raw, type(getattr(defaults, key)))
    cfg = dataclasses.replace(defaults, **kwargs)
    if cfg.flows:
        cfg = dataclasses.replace(cfg, flow_count=len(cfg.flows))
    _validate(cfg)
    return cfg


def _require(cond: bool, field: str, message: str) -> None:
    if not cond:
        raise ConfigError(field, message)


def _validate(cfg: ScenarioConfig) -> None:
    _require(cfg.node_count >= 1, "node_count", "must be >= 1")
    _require(cfg.area_width > 0, "area_width", "must be positive")
    _require(cfg.area_height > 0, "area_height", "must be positive")
    _require(cfg.sim_time > 0, "sim_time", "must be positive")
    _require(cfg.protocol in PROTOCOLS, "protocol", f"must be one of {PROTOCOLS}")
    _require(cfg.initial_energy > 0, "initial_energy", "must be positive")
    _require(0.0 <= cfg.energy_floor <= 1.0, "energy_floor", "must be in [0,1]")
    for name in ("ctrl_tx_cost", "ctrl_rx_cost", "data_tx_cost", "data_rx_cost"):
        _require(getattr(cfg, name) >= 0, name, "must be >= 0")
    _require(cfg.radio_range > 0, "radio_range", "must be positive")
    for name in ("hello_interval", "tc_interval", "neighbor_hold_time",
                 "topology_hold_time", "mobility_step", "checkpoint_interval",
                 "routing_refresh", "hop_latency", "packet_rate"):
        _require(getattr(cfg, name) > 0, name, "must be positive")
    _require(0.0 <= cfg.timer_jitter < 1.0, "timer_jitter", "must be in [0,1)")
    _require(cfg.latency_jitter >= 0, "latency_jitter", "must be >= 0")
    _require(cfg.speed_min >= 0, "speed_min", "must be >= 0")
    _require(cfg.speed_max >= cfg.speed_min, "speed_max", "must be >= speed_min")
    _require(cfg.pause_time >= 0, "pause_time", "must be >= 0")
    _require(cfg.flow_count >= 0, "flow_count", "must be >= 0")
    _require(cfg.packet_size >= 1, "packet_size", "must be >= 1")
    _require(cfg.traffic_start >= 0, "traffic_start", "must be >= 0")
    _require(cfg.data_ttl >= 1, "data_ttl", "must be >= 1")
    _require(cfg.queue_capacity >= 1, "queue_capacity", "must be >= 1")
    _require(cfg.detection_capacity >= 1, "detection_capacity", "must be >= 1")
    _require(cfg.clonalg_top_n >= 1, "clonalg_top_n", "must be >= 1")
    _require(cfg.dominance_margin >= 0, "dominance_margin", "must be >= 0")
    _require(cfg.max_candidate_routes >= 1, "max_candidate_routes", "must be >= 1")
    _require(cfg.extra_hop_slack >= 0, "extra_hop_slack", "must be >= 0")
    _require(cfg.memory_capacity >= 1, "memory_capacity", "must be >= 1")
    _require(cfg.meta_replacement >= 1, "meta_replacement", "must be >= 1")
    if cfg.positions:
        _require(
            len(cfg.positions) == cfg.node_count,
            "positions",
            f"{len(cfg.positions)} positions for {cfg.node_count} nodes",
        )
        for i, (x, y) in enumerate(cfg.positions):
            _require(
                0 <= x <= cfg.area_width and 0 <= y <= cfg.area_height,
                "positions",
                f"node {i} at ({x}, {y}) outside the area",
            )
    if cfg.initial_energies:
        _require(
            len(cfg.initial_energies) == cfg.node_count,
            "initial_energies",
            f"{len(cfg.initial_energies)} values for {cfg.node_count} nodes",
        )
        for i, e in enumerate(cfg.initial_energies):
            _require(e > 0, "initial_energies", f"node {i} energy must be positive")
    if cfg.flows:
        for src, dst in cfg.flows:
            _require(
                0 <= src < cfg.node_count and 0 <= dst < cfg.node_count,
                "flows",
                f"flow {src}>{dst} references a missing node",
            )
            _require(src != dst, "flows", f"flow {src}>{dst} has equal endpoints")
    else:
        if cfg.flow_count > 0:
            _require(cfg.node_count >= 2, "flow_count", "needs at least 2 nodes")


def parse_config_text(text: str) -> dict[str, str]:
    """Parse `key = value` lines; `#` starts a comment, blank lines ignored."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def load_config(
    text: str | None = None, overrides: Mapping[str, object] | None = None
) -> ScenarioConfig:
    values: dict[str, object] = {}
    if text is not None:
        values.update(parse_config_text(text))
    if overrides:
        values.update(overrides)
    return build_config(values)


def config_to_dict(cfg: ScenarioConfig) -> dict[str, object]:
    """JSON-friendly echo of the effective config (round-trips exactly)."""
    doc: dict[str, object] = {}
    for name in FIELD_NAMES:
        value = getattr(cfg, name)
        if name in ("positions", "flows"):
            doc[name] = [list(p) for p in value]
        elif name == "initial_energies":
            doc[name] = list(value)
        else:
            doc[name] = value
    return doc


def config_to_text(cfg: ScenarioConfig) -> str:
    """Canonical flat-file form of the effective config."""
    lines = []
    for name in FIELD_NAMES:
        value = getattr(cfg, name)
        if name == "positions":
            rendered = ", ".join(f"{repr(x)}:{repr(y)}" for x, y in value)
        elif name == "flows":
            rendered = ", ".join(f"{a}>{b}" for a, b in value)
        elif name == "initial_energies":
            rendered = ", ".join(repr(v) for v in value)
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{name} = {rendered}")
    return "\n".join(lines) + "\n"


def bundled_config_text(name: str) -> str:
    """Read a config shipped with the package (e.g. `table2`)."""
    try:
        return (
            resources.files("aisolsr").joinpath("data", f"{name}.cfg").read_text()
        )
    except FileNotFoundError:
        raise ConfigError("config", f"no bundled config named {name!r}")


SWEEPABLE = tuple(
    name for name in FIELD_NAMES
    if name not in ("seed", "protocol", "positions", "flows", "initial_energies")
)


def apply_sweep_value(cfg: ScenarioConfig, parameter: str, value) -> ScenarioConfig:
    if parameter not in SWEEPABLE:
        raise ConfigError(parameter, "not a sweepable configuration key")
    coerced = _coerce(parameter, value, type(getattr(ScenarioConfig(), parameter)))
    out = dataclasses.replace(cfg, **{parameter: coerced})
    _validate(out)
    return out
