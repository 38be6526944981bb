"""Scenario definitions: what to simulate, for which seeds, with which knobs.

Scenarios are JSON documents.  A minimal one::

    {"name": "fig2", "topology": {"family": "fig2"}, "seeds": [1]}
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Optional, Union

from .engine import Direction, ProbeMode
from .label import Label, LabelError
from .routing import RouteMetric
from .topology import (
    Family,
    InvalidSpec,
    Topology,
    TopologyError,
    TopoSpec,
    fig2_topology,
    generate,
)


class ConfigError(ValueError):
    pass


class HelloMode(str, enum.Enum):
    ONE_SHOT = "one-shot"
    PERIODIC = "periodic"


class FailureMode(str, enum.Enum):
    IMMEDIATE = "immediate"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class LinkDown:
    a: int
    b: int

    kind = "link-down"


@dataclass(frozen=True)
class LinkUp:
    a: int
    b: int
    base_delay: Optional[int] = None
    jitter: Optional[int] = None

    kind = "link-up"


@dataclass(frozen=True)
class NodeJoin:
    id: int
    links: tuple[int, ...]
    gateway: bool = False

    kind = "node-join"


@dataclass(frozen=True)
class NodeLeave:
    id: int

    kind = "node-leave"


@dataclass(frozen=True)
class FrameInject:
    """Data frame from ``origin``.

    Upstream frames pick a route with the scenario metric unless
    ``dest_label`` pins one; downstream frames always need it.
    """

    origin: int
    direction: Direction = Direction.UPSTREAM
    dest_label: Optional[Label] = None
    payload_len: int = 0

    kind = "frame-inject"


ScriptedAction = Union[LinkDown, LinkUp, NodeJoin, NodeLeave, FrameInject]


@dataclass(frozen=True)
class ScriptedEvent:
    time: int
    action: ScriptedAction


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    topology: Union[TopoSpec, Topology, str, None] = "fig2"
    hello_mode: HelloMode = HelloMode.ONE_SHOT
    hello_interval: int = 100
    probe_mode: ProbeMode = ProbeMode.BROADCAST
    max_labels: Optional[int] = None
    metric: RouteMetric = RouteMetric.FEWEST_HOPS
    failure_mode: FailureMode = FailureMode.IMMEDIATE
    events: tuple[ScriptedEvent, ...] = ()
    seeds: tuple[int, ...] = (0,)
    horizon: int = 60_000
    processing_delay: int = 0
    extended_labels: bool = True
    shared_root: Optional[int] = None
    advertise_on_discovery: bool = False
    max_events: int = 5_000_000

    def __post_init__(self):
        if self.horizon <= 0:
            raise ConfigError("horizon must be > 0")
        if self.processing_delay < 0:
            raise ConfigError("processing_delay must be >= 0")
        if self.hello_interval <= 0:
            raise ConfigError("hello_interval must be > 0")
        if self.max_labels is not None and self.max_labels < 1:
            raise ConfigError("max_labels must be >= 1")
        for ev in self.events:
            if not 0 <= ev.time < self.horizon:
                raise ConfigError(f"event {ev.action.kind} at t={ev.time} outside [0, horizon)")
        if (
            HelloMode(self.hello_mode) is HelloMode.ONE_SHOT
            and FailureMode(self.failure_mode) is FailureMode.TIMEOUT
        ):
            raise ConfigError("timeout failure detection needs periodic hellos")

    @property
    def periodic(self) -> bool:
        return HelloMode(self.hello_mode) is HelloMode.PERIODIC

    def build_topology(self, seed: int) -> Topology:
        """Resolve the topology for one run; unseeded random specs use the run seed."""
        topo = self.topology
        if topo is None:
            raise ConfigError("missing field 'topology'")
        if isinstance(topo, Topology):
            return topo
        if isinstance(topo, str):
            if topo != "fig2":
                raise ConfigError(f"unknown named topology {topo!r}")
            return fig2_topology()
        if topo.seed < 0:
            topo = replace(topo, seed=seed)
        try:
            return generate(topo)
        except InvalidSpec as exc:
            raise ConfigError(f"topology: {exc}") from None

    def with_seeds(self, seeds) -> "ScenarioConfig":
        return replace(self, seeds=tuple(seeds))


def _require(data: dict, key: str, where: str = "") -> Any:
    if key not in data:
        raise ConfigError(f"missing field '{where}{key}'")
    return data[key]


def _int(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"field '{name}' must be an integer, got {value!r}")
    return value


def _enum(cls, value: Any, name: str):
    try:
        return cls(value)
    except ValueError:
        allowed = ", ".join(m.value for m in cls)
        raise ConfigError(f"field '{name}' must be one of {allowed}, got {value!r}") from None


def parse_topology(data: Any, base_dir: Path):
    if isinstance(data, str):
        data = {"family": data}
    if not isinstance(data, dict):
        raise ConfigError("field 'topology' must be an object or name")
    if "file" in data:
        path = Path(data["file"])
        if not path.is_absolute():
            path = base_dir / path
        try:
            return Topology.load(path)
        except OSError as exc:
            raise ConfigError(f"topology file {path}: {exc.strerror}") from None
        except (TopologyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"topology file {path}: {exc}") from None
    family = _require(data, "family", "topology.")
    if family == "fig2":
        return "fig2"
    family = _enum(Family, family, "topology.family")
    gateways = data.get("gateways", 1)
    if isinstance(gateways, list):
        gateways = tuple(_int(g, "topology.gateways") for g in gateways)
    else:
        gateways = _int(gateways, "topology.gateways")
    spec = TopoSpec(
        family=family,
        n=_int(_require(data, "n", "topology."), "topology.n"),
        gateways=gateways,
        seed=_int(data["seed"], "topology.seed") if "seed" in data else -1,
        base_delay=_int(data.get("base_delay", 10), "topology.base_delay"),
        jitter=_int(data.get("jitter", 0), "topology.jitter"),
        arity=_int(data.get("arity", 2), "topology.arity"),
        width=data.get("width"),
        height=data.get("height"),
        p=data.get("p"),
        radius=data.get("radius"),
    )
    try:
        spec.validate()
    except InvalidSpec as exc:
        raise ConfigError(f"topology: {exc}") from None
    return spec


def parse_event(data: dict, index: int) -> ScriptedEvent:
    where = f"events[{index}]."
    if not isinstance(data, dict):
        raise ConfigError(f"{where[:-1]} must be an object")
    time = _int(_require(data, "time", where), where + "time")
    kind = _require(data, "kind", where)
    if kind == "link-down":
        action = LinkDown(_int(_require(data, "a", where), where + "a"), _int(_require(data, "b", where), where + "b"))
    elif kind == "link-up":
        action = LinkUp(
            _int(_require(data, "a", where), where + "a"),
            _int(_require(data, "b", where), where + "b"),
            data.get("base_delay"),
            data.get("jitter"),
        )
    elif kind == "node-join":
        action = NodeJoin(
            _int(_require(data, "id", where), where + "id"),
            tuple(_int(x, where + "links") for x in _require(data, "links", where)),
            bool(data.get("gateway", False)),
        )
    elif kind == "node-leave":
        action = NodeLeave(_int(_require(data, "id", where), where + "id"))
    elif kind == "frame-inject":
        dest = data.get("dest_label")
        try:
            dest = Label.parse(dest) if dest is not None else None
        except LabelError as exc:
            raise ConfigError(f"{where}dest_label: {exc}") from None
        direction = _enum(Direction, data.get("direction", "upstream"), where + "direction")
        if direction is Direction.DOWNSTREAM and dest is None:
            raise ConfigError(f"{where}dest_label is required for downstream frames")
        action = FrameInject(
            _int(_require(data, "origin", where), where + "origin"),
            direction,
            dest,
            _int(data.get("payload_len", 0), where + "payload_len"),
        )
    else:
        raise ConfigError(f"{where}kind: unknown event kind {kind!r}")
    return ScriptedEvent(time, action)


def parse_seeds(value: Any) -> tuple[int, ...]:
    if isinstance(value, int) and not isinstance(value, bool):
        return (value,)
    if isinstance(value, list):
        return tuple(_int(v, "seeds") for v in value)
    if isinstance(value, dict):
        start = _int(value.get("start", 0), "seeds.start")
        stop = _int(_require(value, "stop", "seeds."), "seeds.stop")
        return tuple(range(start, stop))
    raise ConfigError("field 'seeds' must be an integer, a list or {start, stop}")


_KNOWN = {
    "name", "topology", "hello_mode", "hello_interval", "probe_mode", "max_labels",
    "metric", "failure_mode", "events", "seeds", "horizon", "processing_delay",
    "extended_labels", "shared_root", "advertise_on_discovery", "max_events",
}


def scenario_from_dict(data: Any, base_dir: Union[str, Path] = ".") -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("scenario document must be a JSON object")
    unknown = sorted(set(data) - _KNOWN)
    if unknown:
        raise ConfigError(f"unknown field '{unknown[0]}'")
    topology = parse_topology(_require(data, "topology"), Path(base_dir))
    max_labels = data.get("max_labels")
    shared_root = data.get("shared_root")
    try:
        return ScenarioConfig(
            name=str(data.get("name", "scenario")),
            topology=topology,
            hello_mode=_enum(HelloMode, data.get("hello_mode", "one-shot"), "hello_mode"),
            hello_interval=_int(data.get("hello_interval", 100), "hello_interval"),
            probe_mode=_enum(ProbeMode, data.get("probe_mode", "broadcast"), "probe_mode"),
            max_labels=None if max_labels is None else _int(max_labels, "max_labels"),
            metric=_enum(RouteMetric, data.get("metric", "fewest-hops"), "metric"),
            failure_mode=_enum(FailureMode, data.get("failure_mode", "immediate"), "failure_mode"),
            events=tuple(parse_event(e, i) for i, e in enumerate(data.get("events", []))),
            seeds=parse_seeds(data.get("seeds", [0])),
            horizon=_int(data.get("horizon", 60_000), "horizon"),
            processing_delay=_int(data.get("processing_delay", 0), "processing_delay"),
            extended_labels=bool(data.get("extended_labels", True)),
            shared_root=None if shared_root is None else _int(shared_root, "shared_root"),
            advertise_on_discovery=bool(data.get("advertise_on_discovery", False)),
            max_events=_int(data.get("max_events", 5_000_000), "max_events"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return scenario_from_dict(data, path.parent)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
