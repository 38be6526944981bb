"""Per-node labelling state machine.

Every handler takes the node state and one input, mutates the state and
returns a :class:`StepOutput` describing what the node transmits.  Nothing
here knows about time beyond the ``now`` argument, so the simulation kernel
is the only place where ordering is decided.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union

from .label import Label, check_node_id, fits_mac, is_prefix

EXPIRY_FACTOR = 3


class ProbeMode(str, enum.Enum):
    BROADCAST = "broadcast"
    UNICAST = "unicast"


class Direction(str, enum.Enum):
    UPSTREAM = "upstream"
    DOWNSTREAM = "downstream"


class DiscardReason(str, enum.Enum):
    PREFIX_RULE = "prefix-rule"
    DUPLICATE_HOP = "duplicate-hop"
    LABEL_CAP = "label-cap"
    LABEL_OVERFLOW = "label-overflow"


@dataclass(frozen=True)
class Hello:
    sender: int

    kind = "hello"

    def describe(self) -> str:
        return f"sender={self.sender}"


@dataclass(frozen=True)
class Probe:
    """Label advertisement.

    ``label`` is always the sender's own label; the receiver appends its own
    ID.  ``to`` is set for unicast probes and names the single receiver.
    """

    sender: int
    label: Label
    to: Optional[int] = None

    kind = "probe"

    def describe(self) -> str:
        text = f"sender={self.sender} label={self.label}"
        if self.to is not None:
            text += f" to={self.to}"
        return text


@dataclass(frozen=True)
class DataFrame:
    route: Label
    direction: Direction
    payload_len: int = 0
    visited: tuple[int, ...] = ()
    frame_id: int = 0

    kind = "data"

    def describe(self) -> str:
        visited = ".".join(map(str, self.visited)) or "-"
        return (
            f"frame={self.frame_id} route={self.route} dir={self.direction.value} "
            f"len={self.payload_len} visited={visited}"
        )


Message = Union[Hello, Probe, DataFrame]


@dataclass(frozen=True)
class Emission:
    message: Message
    to: Optional[int] = None  # None: broadcast on every live link

    @property
    def broadcast(self) -> bool:
        return self.to is None


@dataclass
class NeighborEntry:
    id: int
    last_hello: int
    root: Optional[int] = None  # root ID advertised by a gateway neighbor


@dataclass
class StepOutput:
    emissions: list[Emission] = field(default_factory=list)
    accepted: Optional[Label] = None
    discard_reason: Optional[DiscardReason] = None
    lost: list[int] = field(default_factory=list)
    pruned: list[Label] = field(default_factory=list)

    def merge(self, other: "StepOutput") -> None:
        self.emissions.extend(other.emissions)
        self.lost.extend(other.lost)
        self.pruned.extend(other.pruned)


@dataclass
class NodeState:
    id: int
    is_gateway: bool = False
    root_label_id: Optional[int] = None
    hello_interval: Optional[int] = None  # None: one Hello at start only
    max_labels: Optional[int] = None
    probe_mode: ProbeMode = ProbeMode.BROADCAST
    extended_labels: bool = True
    advertise_on_discovery: bool = False
    neighbors: dict[int, NeighborEntry] = field(default_factory=dict)
    labels: dict[Label, None] = field(default_factory=dict)  # ordered set

    def __post_init__(self):
        check_node_id(self.id)
        if self.root_label_id is None:
            self.root_label_id = self.id
        check_node_id(self.root_label_id)
        if self.max_labels is not None and self.max_labels < 1:
            raise ValueError("max_labels must be positive")
        if self.hello_interval is not None and self.hello_interval <= 0:
            raise ValueError("hello_interval must be positive")
        self.probe_mode = ProbeMode(self.probe_mode)

    @property
    def label_list(self) -> list[Label]:
        return list(self.labels)

    @property
    def root_label(self) -> Optional[Label]:
        return Label.of(self.root_label_id) if self.is_gateway else None


def table_size(state: NodeState) -> int:
    return len(state.neighbors) + len(state.labels)


def _advertise(state: NodeState, label: Label) -> list[Emission]:
    if state.probe_mode is ProbeMode.BROADCAST:
        return [Emission(Probe(state.id, label))]
    return [Emission(Probe(state.id, label, to=n), to=n) for n in sorted(state.neighbors)]


def _discovered(state: NodeState, neighbor: int) -> list[Emission]:
    # unicast mode must tell late-discovered neighbors about labels already held
    if state.probe_mode is ProbeMode.UNICAST or state.advertise_on_discovery:
        return [
            Emission(Probe(state.id, label, to=neighbor), to=neighbor)
            for label in state.labels
        ]
    return []


def on_start(state: NodeState, now: int) -> StepOutput:
    out = StepOutput(emissions=[Emission(Hello(state.id))])
    if state.is_gateway:
        root = state.root_label
        state.labels[root] = None
        out.accepted = root
        out.emissions.extend(_advertise(state, root))
    return out


def on_hello(state: NodeState, msg: Hello, now: int) -> StepOutput:
    if msg.sender == state.id:
        raise ValueError("node received its own Hello")
    entry = state.neighbors.get(msg.sender)
    if entry is not None:
        entry.last_hello = now
        return StepOutput()
    state.neighbors[msg.sender] = NeighborEntry(msg.sender, now)
    return StepOutput(emissions=_discovered(state, msg.sender))


def on_probe(state: NodeState, msg: Probe, now: int) -> StepOutput:
    out = StepOutput()
    if msg.sender not in state.neighbors:
        out.merge(on_hello(state, Hello(msg.sender), now))
    if len(msg.label) == 1:
        state.neighbors[msg.sender].root = msg.label.root

    candidate = msg.label.hops + (state.id,)
    if any(is_prefix(own, candidate) for own in state.labels):
        out.discard_reason = DiscardReason.PREFIX_RULE
    elif state.id in msg.label:
        out.discard_reason = DiscardReason.DUPLICATE_HOP
    elif not state.extended_labels and not fits_mac(candidate):
        out.discard_reason = DiscardReason.LABEL_OVERFLOW
    elif state.max_labels is not None and len(state.labels) >= state.max_labels:
        out.discard_reason = DiscardReason.LABEL_CAP
    else:
        label = Label(candidate)
        state.labels[label] = None
        out.accepted = label
        out.emissions.extend(_advertise(state, label))
    return out


def on_tick(state: NodeState, now: int) -> StepOutput:
    out = StepOutput()
    if state.hello_interval is None:
        return out
    out.emissions.append(Emission(Hello(state.id)))
    limit = EXPIRY_FACTOR * state.hello_interval
    for nid in sorted(state.neighbors):
        if now - state.neighbors[nid].last_hello > limit:
            out.merge(on_neighbor_lost(state, nid))
    return out


def upstream_of(state: NodeState, label: Label) -> Optional[int]:
    """Hop just before this node on one of its own labels, as written."""
    if len(label) < 2:
        return None
    return label.hops[-2]


def serves_root(entry: NeighborEntry, root: int) -> bool:
    return entry.id == root or entry.root == root


def on_neighbor_lost(state: NodeState, lost: int) -> StepOutput:
    out = StepOutput()
    if state.neighbors.pop(lost, None) is None:
        return out
    out.lost.append(lost)
    for label in list(state.labels):
        prev = upstream_of(state, label)
        if prev is None:
            continue
        if len(label) == 2:
            # first hop is a root ID; with shared roots any gateway advertising it will do
            dead = not any(serves_root(e, prev) for e in state.neighbors.values())
        else:
            dead = prev == lost
        if dead:
            del state.labels[label]
            out.pruned.append(label)
    return out
