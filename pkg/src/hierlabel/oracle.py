"""Brute-force ground truth for converged label sets.

Exponential in the number of cycles; keep graphs small.
"""
from __future__ import annotations

from typing import Optional

from .label import Label
from .routing import link_key
from .topology import Topology

MAX_ORACLE_NODES = 12


class OracleTooLarge(ValueError):
    pass


LabelTable = dict[int, list[Label]]


def _check_size(topology: Topology, limit: Optional[int]) -> None:
    if limit is not None and len(topology.nodes) > limit:
        raise OracleTooLarge(
            f"{len(topology.nodes)} nodes exceeds the oracle bound of {limit}"
        )


def simple_paths_from(adj: dict[int, list[int]], source: int, blocked=frozenset()):
    """Yield every simple path starting at ``source`` (including ``[source]``).

    Nodes in ``blocked`` may end a path but never appear in its interior.
    """
    path = [source]
    on_path = {source}

    def walk():
        yield tuple(path)
        if len(path) > 1 and path[-1] in blocked:
            return
        for nxt in adj[path[-1]]:
            if nxt in on_path:
                continue
            path.append(nxt)
            on_path.add(nxt)
            yield from walk()
            path.pop()
            on_path.discard(nxt)

    yield from walk()


def converged_labels(
    topology: Topology,
    shared_root: Optional[int] = None,
    max_hops: Optional[int] = None,
    limit: Optional[int] = MAX_ORACLE_NODES,
) -> LabelTable:
    """Label set every node holds once probing has died out (no label cap).

    With distinct roots this is every simple path from any gateway.  With a
    shared root the gateways reject everything but their root, so paths may
    not pass through a gateway, and a path must not reuse the root ID.
    """
    _check_size(topology, limit)
    adj = topology.adjacency()
    table: dict[int, set[tuple[int, ...]]] = {n: set() for n in topology.nodes}
    gateways = topology.gateways
    blocked = frozenset(gateways) if shared_root is not None else frozenset()
    for gw in gateways:
        for path in simple_paths_from(adj, gw, blocked):
            if shared_root is None:
                hops = path
            else:
                if len(path) > 1 and path[-1] in blocked:
                    continue
                hops = (shared_root,) + path[1:]
                if len(set(hops)) != len(hops):
                    continue
            if max_hops is not None and len(hops) > max_hops:
                continue
            table[path[-1]].add(hops)
    return {n: [Label(h) for h in sorted(hops)] for n, hops in sorted(table.items())}


def route_exists_after_failure(
    topology: Topology, failed_link: tuple[int, int], node: int
) -> bool:
    failed = link_key(*failed_link)
    for label in converged_labels(topology).get(node, []):
        if all(link_key(a, b) != failed for a, b in zip(label.hops, label.hops[1:])):
            return True
    return False


def total_labels(table: LabelTable) -> int:
    return sum(len(v) for v in table.values())
