import json

import networkx as nx
import pytest

from hierlabel.topology import (
    Family,
    InvalidSpec,
    LinkParams,
    Topology,
    TopologyError,
    TopoSpec,
    bfs_distances,
    fig2_topology,
    generate,
)


def edges(topo):
    return set(topo.links)


def test_line_and_ring():
    assert edges(generate(TopoSpec(Family.LINE, 3))) == {(1, 2), (2, 3)}
    assert edges(generate(TopoSpec(Family.RING, 4))) == {(1, 2), (2, 3), (3, 4), (1, 4)}


def test_star_tree_grid():
    assert edges(generate(TopoSpec(Family.STAR, 4))) == {(1, 2), (1, 3), (1, 4)}
    assert edges(generate(TopoSpec(Family.TREE, 7))) == {(1, 2), (1, 3), (2, 4), (2, 5), (3, 6), (3, 7)}
    grid = generate(TopoSpec(Family.GRID, 6, width=3, height=2))
    assert edges(grid) == {(1, 2), (2, 3), (4, 5), (5, 6), (1, 4), (2, 5), (3, 6)}


def test_erdos_renyi_connected():
    topo = generate(TopoSpec(Family.ERDOS_RENYI, 20, p=0.15, seed=7))
    assert set(bfs_distances(topo.adjacency(), 1)) == set(range(1, 21))
    assert sorted(topo.nodes) == list(range(1, 21))
    assert topo.gateways == [1]


@pytest.mark.parametrize("seed", range(25))
@pytest.mark.parametrize(
    "spec",
    [
        dict(family=Family.ERDOS_RENYI, n=30, p=0.02),
        dict(family=Family.ERDOS_RENYI, n=12, p=0.5),
        dict(family=Family.GEOMETRIC, n=40, radius=0.1),
        dict(family=Family.GEOMETRIC, n=15, radius=0.5),
    ],
)
def test_random_families_always_connected(spec, seed):
    topo = generate(TopoSpec(seed=seed, **spec))
    g = nx.Graph(list(topo.links))
    g.add_nodes_from(topo.nodes)
    assert nx.is_connected(g)
    assert len(topo.nodes) == spec["n"]


def test_bridging_adds_minimum_edges():
    # p tiny: almost no native edges, so the repair supplies exactly n - components
    spec = TopoSpec(Family.ERDOS_RENYI, 30, p=1e-9, seed=4)
    assert len(generate(spec).links) == 29


def test_generation_is_pure():
    spec = TopoSpec(Family.GEOMETRIC, 50, radius=0.15, seed=11, gateways=3)
    a, b = generate(spec), generate(spec)
    assert a == b
    assert len(a.gateways) == 3 and 1 in a.gateways
    assert generate(TopoSpec(Family.GEOMETRIC, 50, radius=0.15, seed=12)) != a


def test_explicit_gateways():
    topo = generate(TopoSpec(Family.LINE, 5, gateways=(2, 5)))
    assert topo.gateways == [2, 5]


@pytest.mark.parametrize(
    "spec",
    [
        TopoSpec(Family.LINE, 0),
        TopoSpec(Family.LINE, 3, gateways=4),
        TopoSpec(Family.RING, 2),
        TopoSpec(Family.ERDOS_RENYI, 5, p=0),
        TopoSpec(Family.ERDOS_RENYI, 5, p=1.5),
        TopoSpec(Family.GEOMETRIC, 5, radius=0),
        TopoSpec(Family.GRID, 5, width=2, height=2),
        TopoSpec(Family.LINE, 3, gateways=(1, 1)),
        TopoSpec("hexagon", 3),
    ],
)
def test_invalid_specs(spec):
    with pytest.raises(InvalidSpec):
        generate(spec)


def test_fig2_topology():
    topo = fig2_topology()
    assert topo.gateways == [1]
    assert edges(topo) == {(1, 2), (2, 3), (2, 4), (3, 4)}
    assert {n: topo.degree(n) for n in topo.nodes} == {1: 1, 2: 3, 3: 2, 4: 2}


def test_topology_invariants():
    with pytest.raises(TopologyError):
        Topology({1: True}, {(1, 1): LinkParams()})
    with pytest.raises(TopologyError):
        Topology({1: False, 2: False}, {(1, 2): LinkParams()})
    with pytest.raises(TopologyError):
        Topology({1: True, 2: False}, {(1, 2): LinkParams(-1, 0)})
    with pytest.raises(TopologyError):
        Topology({1: True}, {(1, 3): LinkParams()})


def test_json_roundtrip(tmp_path):
    topo = generate(TopoSpec(Family.GEOMETRIC, 12, radius=0.4, seed=3, jitter=2, gateways=2))
    path = tmp_path / "t.json"
    path.write_text(topo.dumps())
    assert Topology.load(path) == topo
    doc = json.loads(path.read_text())
    assert set(doc) == {"nodes", "links"}


def test_diameter():
    assert generate(TopoSpec(Family.LINE, 6)).diameter() == 5
    assert generate(TopoSpec(Family.RING, 8)).diameter() == 4
