"""Deterministic discrete-event kernel driving the per-node state machines.

Time is integer milliseconds.  Events run in ``(time, seq)`` order where
``seq`` is the insertion counter, so a run is a pure function of topology,
scenario and seed.
"""
from __future__ import annotations

import csv
import heapq
import io
import json
import random
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from . import engine
from .config import (
    FailureMode,
    FrameInject,
    LinkDown,
    LinkUp,
    NodeJoin,
    NodeLeave,
    ScenarioConfig,
)
from .engine import DataFrame, Direction, Hello, NodeState, Probe, StepOutput
from .label import Label
from .routing import (
    DeliveredAtGateway,
    DeliveredAtNode,
    Drop,
    DropReason,
    NoRoute,
    Send,
    forward,
    link_key,
    select_route,
)
from .topology import LinkParams, Topology


class SimulationError(Exception):
    pass


class HorizonExceeded(SimulationError):
    pass


class UnknownLink(SimulationError):
    pass


CSV_HEADER = [
    "scenario", "seed", "n_nodes", "convergence_ms", "total_tx", "max_table",
    "mean_table", "frames_delivered", "frames_dropped", "recovery_ms",
]


# event kinds
START, DELIVER, TICK, SCRIPTED = "start", "deliver", "tick", "scripted"


@dataclass(order=True)
class _Event:
    time: int
    seq: int
    kind: str = field(compare=False)
    node: int = field(compare=False, default=0)
    payload: Any = field(compare=False, default=None)
    sender: int = field(compare=False, default=0)
    epoch: int = field(compare=False, default=0)
    periodic: bool = field(compare=False, default=False)
    sent_at: int = field(compare=False, default=0)


@dataclass
class MetricsReport:
    convergence_time: int = 0
    quiescence_time: int = 0
    tx_count: dict[int, int] = field(default_factory=dict)
    data_tx: dict[int, int] = field(default_factory=dict)
    labels_per_node: dict[int, int] = field(default_factory=dict)
    table_size_per_node: dict[int, int] = field(default_factory=dict)
    frames_delivered: int = 0
    frames_dropped: int = 0
    recovery_time: Optional[int] = None
    recovery_times: list[int] = field(default_factory=list)
    control_tx_after_failure: int = 0
    loop_violations: int = 0
    events_processed: int = 0

    @property
    def total_tx(self) -> int:
        return sum(self.tx_count.values())

    def to_dict(self) -> dict:
        return {
            "convergence_time": self.convergence_time,
            "quiescence_time": self.quiescence_time,
            "tx_count": {str(k): v for k, v in sorted(self.tx_count.items())},
            "data_tx": {str(k): v for k, v in sorted(self.data_tx.items())},
            "labels_per_node": {str(k): v for k, v in sorted(self.labels_per_node.items())},
            "table_size_per_node": {str(k): v for k, v in sorted(self.table_size_per_node.items())},
            "frames_delivered": self.frames_delivered,
            "frames_dropped": self.frames_dropped,
            "recovery_time": self.recovery_time,
            "recovery_times": list(self.recovery_times),
            "control_tx_after_failure": self.control_tx_after_failure,
            "loop_violations": self.loop_violations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_row(self, scenario: str, seed: int) -> list:
        tables = list(self.table_size_per_node.values())
        return [
            scenario,
            seed,
            len(self.table_size_per_node),
            self.convergence_time,
            self.total_tx,
            max(tables, default=0),
            f"{sum(tables) / len(tables):.3f}" if tables else "0.000",
            self.frames_delivered,
            self.frames_dropped,
            "" if self.recovery_time is None else self.recovery_time,
        ]


def metrics_csv(rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(rows)
    return buf.getvalue()


@dataclass
class FrameRecord:
    frame_id: int
    origin: int
    direction: Direction
    injected_at: int
    route: Optional[Label] = None
    outcome: Optional[str] = None
    at_node: Optional[int] = None
    finished_at: Optional[int] = None
    path: tuple[int, ...] = ()

    @property
    def delivered(self) -> bool:
        return self.outcome in ("delivered-gateway", "delivered-node")


@dataclass
class SimResult:
    metrics: MetricsReport
    trace: list[str]
    nodes: dict[int, NodeState]
    frames: list[FrameRecord]
    topology: Topology

    @property
    def labels(self) -> dict[int, list[Label]]:
        return {n: list(s.labels) for n, s in sorted(self.nodes.items())}

    def trace_text(self) -> str:
        return "".join(line + "\n" for line in self.trace)


class Simulation:
    def __init__(self, topology: Topology, scenario: ScenarioConfig, seed: int = 0, trace: bool = True):
        self.topology = topology
        self.scenario = scenario
        self.seed = seed
        self.rng = random.Random(seed)
        self.tracing = trace
        self.trace: list[str] = []
        self.metrics = MetricsReport()
        self.now = 0
        self._queue: list[_Event] = []
        self._seq = 0
        self._current_seq = 0
        self.adj: dict[int, dict[int, LinkParams]] = {n: {} for n in topology.nodes}
        for (a, b), params in topology.links.items():
            self.adj[a][b] = params
            self.adj[b][a] = params
        self._known_links: dict[tuple[int, int], LinkParams] = dict(topology.links)
        self._epoch: dict[tuple[int, int], int] = {}
        self.nodes: dict[int, NodeState] = {}
        self.alive: set[int] = set()
        self.frames: list[FrameRecord] = []
        self._failure_at: Optional[int] = None  # first failure, for control-tx accounting
        self._pending_failure: Optional[int] = None  # failure still awaiting a delivery
        self._ran = False
        for nid, gw in sorted(topology.nodes.items()):
            self._add_node(nid, gw)
            self._push(0, START, nid)
        for ev in scenario.events:
            self._push(ev.time, SCRIPTED, payload=ev.action)

    # -- bookkeeping -------------------------------------------------------

    def _add_node(self, nid: int, gateway: bool) -> NodeState:
        sc = self.scenario
        state = NodeState(
            id=nid,
            is_gateway=gateway,
            root_label_id=sc.shared_root if (gateway and sc.shared_root is not None) else None,
            hello_interval=sc.hello_interval if sc.periodic else None,
            max_labels=sc.max_labels,
            probe_mode=sc.probe_mode,
            extended_labels=sc.extended_labels,
            advertise_on_discovery=sc.advertise_on_discovery,
        )
        self.nodes[nid] = state
        self.alive.add(nid)
        self.adj.setdefault(nid, {})
        self.metrics.tx_count.setdefault(nid, 0)
        self.metrics.data_tx.setdefault(nid, 0)
        return state

    def _push(self, time: int, kind: str, node: int = 0, payload=None, **kw) -> _Event:
        if time < self.now:
            raise SimulationError("event scheduled in the past")
        ev = _Event(time, self._seq, kind, node, payload, **kw)
        self._seq += 1
        heapq.heappush(self._queue, ev)
        return ev

    def _log(self, node: int, kind: str, detail: str = "") -> None:
        if self.tracing:
            self.trace.append(
                f"t={self.now} seq={self._current_seq} node={node} ev={kind} detail={detail}"
            )

    def _hop_delay(self, params: LinkParams) -> int:
        jitter = self.rng.randint(0, params.jitter) if params.jitter > 0 else 0
        return self.scenario.processing_delay + params.base_delay + jitter

    def link_delays(self) -> dict[tuple[int, int], int]:
        return {link_key(a, b): p.base_delay for a in self.adj for b, p in self.adj[a].items()}

    # -- transmission ------------------------------------------------------

    def broadcast_deliver(self, sender: int, msg, periodic: bool = False) -> list[_Event]:
        """Schedule one delivery per live link of ``sender``; counts as one transmission."""
        self.metrics.tx_count[sender] += 1
        if self._failure_at is not None:
            self.metrics.control_tx_after_failure += 1
        self._log(sender, "tx", f"{msg.kind} {msg.describe()} mode=broadcast")
        return [self._schedule(sender, nb, msg, periodic) for nb in sorted(self.adj[sender])]

    def unicast_deliver(self, sender: int, to: int, msg) -> Optional[_Event]:
        if isinstance(msg, DataFrame):
            self.metrics.data_tx[sender] += 1
        else:
            self.metrics.tx_count[sender] += 1
            if self._failure_at is not None:
                self.metrics.control_tx_after_failure += 1
        self._log(sender, "tx", f"{msg.kind} {msg.describe()} mode=unicast next={to}")
        if to not in self.adj[sender]:
            self._log(sender, "lost", f"{msg.kind} no link to {to}")
            return None
        return self._schedule(sender, to, msg, False)

    def _schedule(self, sender: int, to: int, msg, periodic: bool) -> _Event:
        delay = self._hop_delay(self.adj[sender][to])
        key = link_key(sender, to)
        return self._push(
            self.now + delay, DELIVER, to, msg,
            sender=sender, epoch=self._epoch.get(key, 0), periodic=periodic, sent_at=self.now,
        )

    def _emit(self, node: int, out: StepOutput, periodic: bool = False) -> None:
        for em in out.emissions:
            if em.broadcast:
                self.broadcast_deliver(node, em.message, periodic)
            else:
                self.unicast_deliver(node, em.to, em.message)

    def _record(self, node: int, out: StepOutput) -> None:
        if out.accepted is not None:
            if len(set(out.accepted.hops)) != len(out.accepted.hops):
                self.metrics.loop_violations += 1
            self.metrics.convergence_time = max(self.metrics.convergence_time, self.now)
            self._log(node, "accept", f"label={out.accepted}")
        if out.discard_reason is not None:
            self._log(node, "discard", f"reason={out.discard_reason.value}")
        for lost in out.lost:
            self._log(node, "neighbor-lost", f"neighbor={lost}")
        for label in out.pruned:
            self._log(node, "prune", f"label={label}")

    # -- scripted injections -----------------------------------------------

    def inject_link_down(self, a: int, b: int, at: int) -> None:
        self._push(at, SCRIPTED, payload=LinkDown(a, b))

    def inject_link_up(self, a: int, b: int, at: int) -> None:
        self._push(at, SCRIPTED, payload=LinkUp(a, b))

    def inject_frame(self, origin: int, at: int, direction=Direction.UPSTREAM, dest_label=None) -> None:
        self._push(at, SCRIPTED, payload=FrameInject(origin, Direction(direction), dest_label))

    def _link_down(self, a: int, b: int) -> None:
        if b not in self.adj.get(a, {}):
            raise UnknownLink(f"no live link {a}-{b}")
        del self.adj[a][b]
        del self.adj[b][a]
        key = link_key(a, b)
        self._epoch[key] = self._epoch.get(key, 0) + 1
        self._log(a, "link-down", f"link={key[0]}-{key[1]}")
        self._mark_failure()
        if FailureMode(self.scenario.failure_mode) is FailureMode.IMMEDIATE:
            for x, y in ((a, b), (b, a)):
                if x in self.alive:
                    self._apply(x, engine.on_neighbor_lost(self.nodes[x], y))

    def _link_up(self, a: int, b: int, params: Optional[LinkParams]) -> None:
        if a not in self.alive or b not in self.alive or a == b:
            raise UnknownLink(f"cannot raise link {a}-{b}")
        if b in self.adj[a]:
            raise UnknownLink(f"link {a}-{b} already up")
        key = link_key(a, b)
        params = params or self._known_links.get(key) or LinkParams()
        self._known_links[key] = params
        self.adj[a][b] = params
        self.adj[b][a] = params
        self._log(a, "link-up", f"link={key[0]}-{key[1]}")
        if FailureMode(self.scenario.failure_mode) is FailureMode.IMMEDIATE:
            # the link layer reports carrier on both ends
            for x, y in ((a, b), (b, a)):
                self._apply(x, engine.on_hello(self.nodes[x], Hello(y), self.now))

    def _mark_failure(self) -> None:
        if self._failure_at is None:
            self._failure_at = self.now
        if self._pending_failure is None:
            self._pending_failure = self.now

    def _scripted(self, action) -> None:
        if isinstance(action, LinkDown):
            self._link_down(action.a, action.b)
        elif isinstance(action, LinkUp):
            params = None
            if action.base_delay is not None or action.jitter is not None:
                params = LinkParams(action.base_delay or 0, action.jitter or 0)
            self._link_up(action.a, action.b, params)
        elif isinstance(action, NodeJoin):
            self._join(action)
        elif isinstance(action, NodeLeave):
            self._leave(action.id)
        elif isinstance(action, FrameInject):
            self._inject(action)
        else:
            raise SimulationError(f"unknown scripted action {action!r}")

    def _join(self, action: NodeJoin) -> None:
        if action.id in self.alive:
            raise SimulationError(f"node {action.id} already present")
        self._add_node(action.id, action.gateway)
        self._log(action.id, "join", "links=" + ",".join(map(str, action.links)))
        for other in action.links:
            if other not in self.alive:
                raise UnknownLink(f"join links {action.id} to absent node {other}")
            key = link_key(action.id, other)
            params = self._known_links.get(key) or LinkParams()
            self._known_links[key] = params
            self.adj[action.id][other] = params
            self.adj[other][action.id] = params
        self._start(action.id)

    def _leave(self, nid: int) -> None:
        if nid not in self.alive:
            raise SimulationError(f"node {nid} not present")
        self._log(nid, "leave")
        for other in sorted(self.adj[nid]):
            self._link_down(nid, other)
        self.alive.discard(nid)
        self._mark_failure()

    # -- frames --------------------------------------------------------------

    def _inject(self, action: FrameInject) -> None:
        fid = len(self.frames) + 1
        record = FrameRecord(fid, action.origin, Direction(action.direction), self.now)
        self.frames.append(record)
        self._log(action.origin, "inject", f"frame={fid} dir={record.direction.value}")
        if action.origin not in self.alive:
            self._finish(record, action.origin, "drop", DropReason.NO_ROUTE.value)
            return
        state = self.nodes[action.origin]
        if record.direction is Direction.UPSTREAM and action.dest_label is None:
            try:
                route = select_route(self._upstream_candidates(state), self.scenario.metric, self.link_delays())
            except NoRoute:
                self._finish(record, action.origin, "drop", DropReason.NO_ROUTE.value)
                return
        else:
            route = action.dest_label
        record.route = route
        frame = DataFrame(route, record.direction, action.payload_len, (), fid)
        self._handle_frame(action.origin, frame)

    @staticmethod
    def _upstream_candidates(state: NodeState) -> list[Label]:
        if state.is_gateway:
            return [state.root_label]
        return list(state.labels)

    def _handle_frame(self, node: int, frame: DataFrame) -> None:
        record = self.frames[frame.frame_id - 1]
        action = forward(self.nodes[node], frame, self.scenario.metric, self.link_delays())
        if isinstance(action, Send):
            if action.route != frame.route:
                self._log(node, "failover", f"frame={frame.frame_id} route={action.route}")
                record.route = action.route
            nxt = replace(frame, route=action.route, visited=frame.visited + (node,))
            self.unicast_deliver(node, action.next, nxt)
        elif isinstance(action, (DeliveredAtGateway, DeliveredAtNode)):
            visited = frame.visited + (node,)
            if len(set(visited)) != len(visited):
                self.metrics.loop_violations += 1
            record.path = visited
            kind = "delivered-gateway" if isinstance(action, DeliveredAtGateway) else "delivered-node"
            self._finish(record, node, kind)
        elif isinstance(action, Drop):
            record.path = frame.visited + (node,)
            self._finish(record, node, "drop", action.reason.value)

    def _finish(self, record: FrameRecord, node: int, outcome: str, reason: str = "") -> None:
        record.outcome = outcome if not reason else f"drop:{reason}"
        record.at_node = node
        record.finished_at = self.now
        if record.delivered:
            self.metrics.frames_delivered += 1
            if self._pending_failure is not None:
                rec = self.now - self._pending_failure
                self.metrics.recovery_times.append(rec)
                if self.metrics.recovery_time is None:
                    self.metrics.recovery_time = rec
                self._pending_failure = None
        else:
            self.metrics.frames_dropped += 1
        self._log(node, outcome if not reason else "drop", f"frame={record.frame_id} {reason}".strip())

    # -- main loop -----------------------------------------------------------

    def _start(self, nid: int) -> None:
        self._log(nid, "start", "gateway" if self.nodes[nid].is_gateway else "")
        self._apply(nid, engine.on_start(self.nodes[nid], self.now))
        if self.scenario.periodic:
            interval = self.scenario.hello_interval
            first = (self.now // interval + 1) * interval
            if first <= self.scenario.horizon:
                self._push(first, TICK, nid)

    def _apply(self, nid: int, out: StepOutput, periodic: bool = False) -> None:
        self._record(nid, out)
        self._emit(nid, out, periodic)

    def _deliver(self, ev: _Event) -> None:
        msg, to, sender = ev.payload, ev.node, ev.sender
        key = link_key(sender, to)
        if to not in self.alive or sender not in self.adj.get(to, {}) or self._epoch.get(key, 0) != ev.epoch:
            self._log(to, "lost", f"{msg.kind} from={sender} link down")
            if isinstance(msg, DataFrame):
                record = self.frames[msg.frame_id - 1]
                record.path = msg.visited
                self._finish(record, to, "drop", "link-down")
            return
        self._log(to, "rx", f"{msg.kind} from={sender} {msg.describe()}")
        state = self.nodes[to]
        if isinstance(msg, Hello):
            self._apply(to, engine.on_hello(state, msg, self.now))
        elif isinstance(msg, Probe):
            self._apply(to, engine.on_probe(state, msg, self.now))
        else:
            self._handle_frame(to, msg)

    def _tick(self, nid: int) -> None:
        if nid not in self.alive:
            return
        self._log(nid, "tick")
        self._apply(nid, engine.on_tick(self.nodes[nid], self.now), periodic=True)
        nxt = self.now + self.scenario.hello_interval
        if nxt <= self.scenario.horizon:
            self._push(nxt, TICK, nid)

    def quiescent(self) -> bool:
        return detect_quiescence(self._queue)

    def run(self) -> SimResult:
        if self._ran:
            raise SimulationError("a Simulation instance runs once")
        self._ran = True
        horizon = self.scenario.horizon
        while self._queue:
            ev = heapq.heappop(self._queue)
            if ev.time > horizon:
                if ev.kind == TICK or (ev.kind == DELIVER and ev.periodic):
                    continue
                raise HorizonExceeded(
                    f"{ev.kind} event pending at t={ev.time} beyond horizon {horizon}"
                )
            self.metrics.events_processed += 1
            if self.metrics.events_processed > self.scenario.max_events:
                raise HorizonExceeded(f"more than {self.scenario.max_events} events")
            self.now = ev.time
            self._current_seq = ev.seq
            if ev.kind == START:
                self._start(ev.node)
            elif ev.kind == DELIVER:
                self._deliver(ev)
            elif ev.kind == TICK:
                self._tick(ev.node)
            else:
                self._scripted(ev.payload)
            if not (ev.kind == TICK or (ev.kind == DELIVER and ev.periodic)):
                self.metrics.quiescence_time = self.now
        return self._result()

    def _result(self) -> SimResult:
        m = self.metrics
        for nid in sorted(self.alive):
            state = self.nodes[nid]
            m.labels_per_node[nid] = len(state.labels)
            m.table_size_per_node[nid] = engine.table_size(state)
        return SimResult(m, self.trace, {n: self.nodes[n] for n in sorted(self.alive)}, self.frames, self.topology)


def detect_quiescence(queue) -> bool:
    """True when nothing pending can change any label or frame state.

    Periodic ticks and the Hellos they emit are steady-state chatter and do
    not count.
    """
    for ev in queue:
        if ev.kind == TICK:
            continue
        if ev.kind == DELIVER and ev.periodic:
            continue
        return False
    return True


def run(topology: Topology, scenario: ScenarioConfig, seed: int = 0, trace: bool = True) -> SimResult:
    return Simulation(topology, scenario, seed, trace=trace).run()
