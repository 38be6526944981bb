"""Route selection over a node's labels and strict source-routed forwarding."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

from .engine import DataFrame, Direction, NodeState, serves_root
from .label import Label, hop_count, links


class RoutingError(Exception):
    pass


class NoRoute(RoutingError):
    pass


class NotOnRoute(RoutingError):
    pass


class AtDestination(RoutingError):
    pass


class RouteMetric(str, enum.Enum):
    FEWEST_HOPS = "fewest-hops"
    LOWEST_LATENCY = "lowest-latency"


class DropReason(str, enum.Enum):
    NO_ROUTE = "no-route"
    NEXT_HOP_DOWN = "next-hop-down"
    REVISIT_DETECTED = "revisit-detected"


@dataclass(frozen=True)
class Send:
    next: int
    route: Label  # may differ from the incoming route after failover


@dataclass(frozen=True)
class DeliveredAtGateway:
    pass


@dataclass(frozen=True)
class DeliveredAtNode:
    pass


@dataclass(frozen=True)
class Drop:
    reason: DropReason


ForwardAction = Union[Send, DeliveredAtGateway, DeliveredAtNode, Drop]


def link_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def path_latency(label: Label, link_delays: Mapping[tuple[int, int], float]) -> float:
    total = 0
    for a, b in links(label):
        try:
            total += link_delays[link_key(a, b)]
        except KeyError:
            raise RoutingError(f"no delay known for link {a}-{b}") from None
    return total


def select_route(
    labels: Iterable[Label],
    metric: RouteMetric = RouteMetric.FEWEST_HOPS,
    link_delays: Optional[Mapping[tuple[int, int], float]] = None,
) -> Label:
    """Pick the metric-minimal label; ties go to the lexicographically smallest."""
    labels = list(labels)
    if not labels:
        raise NoRoute("no labels to choose from")
    metric = RouteMetric(metric)
    if metric is RouteMetric.FEWEST_HOPS:
        return min(labels, key=lambda l: (hop_count(l), l.hops))
    if link_delays is None:
        raise RoutingError("lowest-latency selection needs link delays")
    return min(labels, key=lambda l: (path_latency(l, link_delays), l.hops))


def _position(route: Label, node_id: int) -> int:
    try:
        return route.hops.index(node_id)
    except ValueError:
        raise NotOnRoute(f"{node_id} not on {route}") from None


def next_hop_upstream(route: Label, node_id: int) -> Optional[int]:
    """Hop before ``node_id`` on the route, or None when it is the head."""
    idx = _position(route, node_id)
    return route.hops[idx - 1] if idx > 0 else None


def next_hop_downstream(route: Label, node_id: int) -> int:
    idx = _position(route, node_id)
    if idx == len(route) - 1:
        raise AtDestination(f"{node_id} is the tail of {route}")
    return route.hops[idx + 1]


def _state_position(state: NodeState, route: Label) -> int:
    if state.is_gateway and route.root == state.root_label_id:
        return 0
    return _position(route, state.id)


def resolve_neighbor(state: NodeState, hop: int, is_root: bool) -> Optional[int]:
    """Map a route hop to a live neighbor of ``state``.

    Root hops may be served by any gateway advertising that root, which
    matters only when several gateways share a root ID.
    """
    if hop in state.neighbors:
        return hop
    if is_root:
        owners = sorted(n for n, e in state.neighbors.items() if serves_root(e, hop))
        if owners:
            return owners[0]
    return None


def _upstream_next(state: NodeState, route: Label) -> Optional[int]:
    idx = _state_position(state, route)
    return resolve_neighbor(state, route.hops[idx - 1], idx - 1 == 0)


def forward(
    state: NodeState,
    frame: DataFrame,
    metric: RouteMetric = RouteMetric.FEWEST_HOPS,
    link_delays: Optional[Mapping[tuple[int, int], float]] = None,
) -> ForwardAction:
    if state.id in frame.visited:
        return Drop(DropReason.REVISIT_DETECTED)
    try:
        idx = _state_position(state, frame.route)
    except NotOnRoute:
        return Drop(DropReason.NO_ROUTE)

    if frame.direction is Direction.UPSTREAM:
        if idx == 0:
            return DeliveredAtGateway()
        nxt = _upstream_next(state, frame.route)
        if nxt is not None:
            return Send(nxt, frame.route)
        originating = not frame.visited and frame.route.owner == state.id
        if not originating:
            return Drop(DropReason.NEXT_HOP_DOWN)
        # failover: only labels whose first upstream hop is still a neighbor
        alive = [l for l in state.labels if len(l) > 1 and _upstream_next(state, l) is not None]
        if not alive:
            return Drop(DropReason.NO_ROUTE)
        route = select_route(alive, metric, link_delays)
        return Send(_upstream_next(state, route), route)

    if idx == len(frame.route) - 1:
        return DeliveredAtNode()
    nxt = frame.route.hops[idx + 1]
    if nxt not in state.neighbors:
        return Drop(DropReason.NEXT_HOP_DOWN)
    return Send(nxt, frame.route)
