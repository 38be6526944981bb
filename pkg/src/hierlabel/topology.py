"""Network graphs under test and seeded generators for them."""
from __future__ import annotations

import enum
import json
import math
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .label import LabelError, check_node_id
from .routing import link_key


class TopologyError(ValueError):
    pass


class InvalidSpec(TopologyError):
    pass


@dataclass(frozen=True)
class LinkParams:
    base_delay: int = 10
    jitter: int = 0


@dataclass
class Topology:
    nodes: dict[int, bool]  # id -> gateway flag
    links: dict[tuple[int, int], LinkParams] = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = {int(k): bool(v) for k, v in self.nodes.items()}
        for nid in self.nodes:
            try:
                check_node_id(nid)
            except LabelError as exc:
                raise TopologyError(str(exc)) from None
        fixed = {}
        for (a, b), params in self.links.items():
            if a == b:
                raise TopologyError(f"self-link on node {a}")
            if a not in self.nodes or b not in self.nodes:
                raise TopologyError(f"link {a}-{b} references an unknown node")
            if params.base_delay < 0 or params.jitter < 0:
                raise TopologyError(f"negative delay on link {a}-{b}")
            fixed[link_key(a, b)] = params
        self.links = fixed
        if not any(self.nodes.values()):
            raise TopologyError("topology needs at least one gateway")

    @property
    def gateways(self) -> list[int]:
        return sorted(n for n, gw in self.nodes.items() if gw)

    def neighbors(self, node: int) -> list[int]:
        out = []
        for a, b in self.links:
            if a == node:
                out.append(b)
            elif b == node:
                out.append(a)
        return sorted(out)

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {n: [] for n in self.nodes}
        for a, b in self.links:
            adj[a].append(b)
            adj[b].append(a)
        for n in adj:
            adj[n].sort()
        return adj

    def degree(self, node: int) -> int:
        return len(self.neighbors(node))

    def delay_map(self) -> dict[tuple[int, int], int]:
        return {k: p.base_delay for k, p in self.links.items()}

    def is_connected(self) -> bool:
        return len(components(self.adjacency())) <= 1

    def diameter(self) -> int:
        adj = self.adjacency()
        return max((max(bfs_distances(adj, n).values()) for n in adj), default=0)

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": n, "gateway": gw} for n, gw in sorted(self.nodes.items())],
            "links": [
                {"a": a, "b": b, "base_delay": p.base_delay, "jitter": p.jitter}
                for (a, b), p in sorted(self.links.items())
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Topology":
        try:
            nodes = {int(n["id"]): bool(n.get("gateway", False)) for n in data["nodes"]}
            links = {
                (int(l["a"]), int(l["b"])): LinkParams(
                    int(l.get("base_delay", 10)), int(l.get("jitter", 0))
                )
                for l in data.get("links", [])
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise TopologyError(f"malformed topology document: {exc}") from None
        return cls(nodes, links)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Topology":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def bfs_distances(adj: dict[int, list[int]], start: int) -> dict[int, int]:
    dist = {start: 0}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def components(adj: dict[int, list[int]]) -> list[list[int]]:
    seen: set[int] = set()
    comps = []
    for n in sorted(adj):
        if n in seen:
            continue
        comp = sorted(bfs_distances(adj, n))
        seen.update(comp)
        comps.append(comp)
    return comps


class Family(str, enum.Enum):
    LINE = "line"
    RING = "ring"
    STAR = "star"
    TREE = "tree"
    GRID = "grid"
    ERDOS_RENYI = "erdos-renyi"
    GEOMETRIC = "geometric"


@dataclass(frozen=True)
class TopoSpec:
    family: Family
    n: int
    gateways: Union[int, Sequence[int]] = 1
    seed: int = 0
    base_delay: int = 10
    jitter: int = 0
    arity: int = 2
    width: Optional[int] = None
    height: Optional[int] = None
    p: Optional[float] = None
    radius: Optional[float] = None

    def validate(self) -> None:
        try:
            family = Family(self.family)
        except ValueError:
            raise InvalidSpec(f"unknown family {self.family!r}") from None
        if self.n < 1:
            raise InvalidSpec(f"n must be >= 1, got {self.n}")
        if isinstance(self.gateways, int):
            if not 1 <= self.gateways <= self.n:
                raise InvalidSpec(f"gateway count {self.gateways} outside [1, {self.n}]")
        else:
            ids = list(self.gateways)
            if not ids or len(set(ids)) != len(ids) or not all(1 <= g <= self.n for g in ids):
                raise InvalidSpec(f"bad gateway ids {ids}")
        if self.base_delay < 0 or self.jitter < 0:
            raise InvalidSpec("delays must be non-negative")
        if family is Family.RING and self.n < 3:
            raise InvalidSpec("ring needs at least 3 nodes")
        if family is Family.TREE and self.arity < 1:
            raise InvalidSpec("tree arity must be >= 1")
        if family is Family.GRID:
            if not self.width or not self.height or self.width * self.height != self.n:
                raise InvalidSpec("grid needs width * height == n")
        if family is Family.ERDOS_RENYI and (self.p is None or not 0 < self.p <= 1):
            raise InvalidSpec("erdos-renyi needs 0 < p <= 1")
        if family is Family.GEOMETRIC and (self.radius is None or self.radius <= 0):
            raise InvalidSpec("geometric needs radius > 0")


def _edges(spec: TopoSpec, rng: random.Random) -> set[tuple[int, int]]:
    n = spec.n
    family = Family(spec.family)
    if family is Family.LINE:
        return {(i, i + 1) for i in range(1, n)}
    if family is Family.RING:
        return {link_key(i, i % n + 1) for i in range(1, n + 1)}
    if family is Family.STAR:
        return {(1, i) for i in range(2, n + 1)}
    if family is Family.TREE:
        return {((i - 2) // spec.arity + 1, i) for i in range(2, n + 1)}
    if family is Family.GRID:
        w = spec.width
        edges = set()
        for i in range(1, n + 1):
            if (i - 1) % w != w - 1:
                edges.add((i, i + 1))
            if i + w <= n:
                edges.add((i, i + w))
        return edges
    if family is Family.ERDOS_RENYI:
        return {(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1) if rng.random() < spec.p}
    points = {i: (rng.random(), rng.random()) for i in range(1, n + 1)}
    return {
        (a, b)
        for a in range(1, n + 1)
        for b in range(a + 1, n + 1)
        if math.dist(points[a], points[b]) <= spec.radius
    }


def _bridge(n: int, edges: set[tuple[int, int]], rng: random.Random) -> None:
    """Join components with the fewest possible extra links, picked by ``rng``."""
    adj: dict[int, list[int]] = {i: [] for i in range(1, n + 1)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    comps = components(adj)
    while len(comps) > 1:
        i, j = sorted(rng.sample(range(len(comps)), 2))
        a, b = rng.choice(comps[i]), rng.choice(comps[j])
        edges.add(link_key(a, b))
        merged = sorted(comps[i] + comps[j])
        comps = [c for k, c in enumerate(comps) if k not in (i, j)] + [merged]


def _pick_gateways(spec: TopoSpec, rng: random.Random) -> list[int]:
    if not isinstance(spec.gateways, int):
        return sorted(spec.gateways)
    if spec.gateways == 1:
        return [1]
    return [1] + sorted(rng.sample(range(2, spec.n + 1), spec.gateways - 1))


def generate(spec: TopoSpec) -> Topology:
    spec.validate()
    rng = random.Random(spec.seed)
    edges = _edges(spec, rng)
    _bridge(spec.n, edges, rng)
    gateways = set(_pick_gateways(spec, rng))
    params = LinkParams(spec.base_delay, spec.jitter)
    return Topology(
        {i: i in gateways for i in range(1, spec.n + 1)},
        {e: params for e in sorted(edges)},
    )


def fig2_topology(base_delay: int = 10, jitter: int = 0) -> Topology:
    """Four-node worked example: gateway 1 - 2, and 2 fanning out to the 3-4 pair."""
    params = LinkParams(base_delay, jitter)
    return Topology(
        {1: True, 2: False, 3: False, 4: False},
        {(1, 2): params, (2, 3): params, (2, 4): params, (3, 4): params},
    )


def from_edges(
    edges: Iterable[tuple[int, int]],
    gateways: Iterable[int] = (1,),
    base_delay: int = 10,
    jitter: int = 0,
    nodes: Iterable[int] = (),
) -> Topology:
    edges = list(edges)
    ids = set(nodes) | {x for e in edges for x in e} | set(gateways)
    gw = set(gateways)
    params = LinkParams(base_delay, jitter)
    return Topology({i: i in gw for i in sorted(ids)}, {e: params for e in edges})
