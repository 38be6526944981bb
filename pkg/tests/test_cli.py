import csv
import json
import subprocess
import sys

import pytest

from hierlabel.cli import main
from hierlabel.config import ConfigError, HelloMode, LinkDown, load_scenario, scenario_from_dict
from hierlabel.sim import CSV_HEADER
from hierlabel.topology import Family, TopoSpec


def write(path, doc):
    path.write_text(json.dumps(doc, indent=2))
    return path


@pytest.fixture
def fig2_cfg(tmp_path):
    return write(tmp_path / "fig2.json", {"name": "fig2", "topology": {"family": "fig2"}, "seeds": [1]})


def test_parse_full_document(tmp_path):
    sc = scenario_from_dict({
        "name": "x",
        "topology": {"family": "geometric", "n": 30, "radius": 0.3, "jitter": 2},
        "hello_mode": "periodic",
        "hello_interval": 50,
        "failure_mode": "timeout",
        "max_labels": 3,
        "events": [{"time": 100, "kind": "link-down", "a": 1, "b": 2}],
        "seeds": {"start": 3, "stop": 6},
    })
    assert sc.hello_mode is HelloMode.PERIODIC
    assert sc.seeds == (3, 4, 5)
    assert sc.events[0].action == LinkDown(1, 2)
    assert sc.topology.family is Family.GEOMETRIC
    # unseeded random topologies follow the run seed
    assert sc.build_topology(3) != sc.build_topology(4)
    assert sc.build_topology(3) == sc.build_topology(3)


@pytest.mark.parametrize(
    "doc, message",
    [
        ({"seeds": [1]}, "'topology'"),
        ({"topology": {"family": "line"}}, "'topology.n'"),
        ({"topology": "fig2", "hello_mode": "sometimes"}, "'hello_mode'"),
        ({"topology": "fig2", "events": [{"time": 1, "kind": "link-down", "a": 1}]}, "'events[0].b'"),
        ({"topology": "fig2", "events": [{"time": 1, "kind": "warp"}]}, "warp"),
        ({"topology": "fig2", "horizon": 100, "events": [{"time": 200, "kind": "node-leave", "id": 2}]}, "horizon"),
        ({"topology": "fig2", "failure_mode": "timeout"}, "periodic"),
        ({"topology": "fig2", "colour": "red"}, "'colour'"),
        ({"topology": {"family": "ring", "n": 2}}, "ring"),
        ({"topology": "fig2", "events": [{"time": 1, "kind": "frame-inject", "origin": 1, "direction": "downstream"}]}, "dest_label"),
    ],
)
def test_config_errors_name_the_problem(doc, message):
    with pytest.raises(ConfigError, match=message.replace("[", r"\[").replace("]", r"\]")):
        scenario_from_dict(doc)


def test_json_syntax_error_has_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "topology": "fig2",\n  "seeds": [1,]\n}\n')
    with pytest.raises(ConfigError, match=r"bad.json:3:"):
        load_scenario(path)


def test_topology_file(tmp_path):
    (tmp_path / "t.json").write_text(json.dumps({
        "nodes": [{"id": 1, "gateway": True}, {"id": 2}, {"id": 3}],
        "links": [{"a": 1, "b": 2}, {"a": 2, "b": 3, "base_delay": 4}],
    }))
    cfg = write(tmp_path / "s.json", {"topology": {"file": "t.json"}})
    topo = load_scenario(cfg).build_topology(0)
    assert topo.links[(2, 3)].base_delay == 4


def test_run_fig2(tmp_path, fig2_cfg, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(fig2_cfg), "--out", str(out), "--trace", str(out / "t.log")]) == 0
    printed = capsys.readouterr().out
    assert "node 3: {1.2.3, 1.2.4.3}" in printed
    rows = list(csv.reader((out / "metrics.csv").open()))
    assert rows[0] == CSV_HEADER
    assert rows[1][:4] == ["fig2", "1", "4", "30"]
    assert (out / "t.log").read_text().startswith("# scenario=fig2 seed=1\nt=0 seq=0 node=1 ev=start")
    summary = json.loads((out / "summary.json").read_text())
    assert summary["fig2"]["runs"] == 1


def test_batch_of_fifty_seeds(tmp_path):
    cfg = write(tmp_path / "tree.json", {
        "name": "tree200",
        "topology": {"family": "tree", "n": 200, "arity": 3, "base_delay": 10, "jitter": 5},
        "seeds": {"start": 0, "stop": 50},
    })
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--quiet", "--jobs", "2"]) == 0
    rows = list(csv.DictReader((out / "metrics.csv").open()))
    assert [int(r["seed"]) for r in rows] == list(range(50))
    depth = 5  # 200 nodes in a ternary tree: levels 0..5
    for r in rows:
        assert int(r["total_tx"]) == 400
        assert 0 < int(r["convergence_ms"]) <= depth * 15


def test_rerun_is_byte_identical(tmp_path, fig2_cfg):
    ring = write(tmp_path / "ring.json", {
        "topology": {"family": "ring", "n": 6, "jitter": 3},
        "events": [{"time": 300, "kind": "link-down", "a": 1, "b": 2},
                   {"time": 300, "kind": "frame-inject", "origin": 2}],
        "seeds": [1, 2],
    })
    outs = []
    for i in range(2):
        out = tmp_path / f"o{i}"
        main(["run", "--config", str(fig2_cfg), "--config", str(ring), "--out", str(out),
              "--format", "json", "--trace", str(out / "trace.log"), "--quiet"])
        outs.append(out)
    for name in ("metrics.json", "summary.json", "trace.log"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_seed_override_reproduces_row(tmp_path):
    cfg = write(tmp_path / "geo.json", {
        "topology": {"family": "geometric", "n": 25, "radius": 0.35, "jitter": 5},
        "max_labels": 3,
        "seeds": [0, 1, 2, 3],
    })
    main(["run", "--config", str(cfg), "--out", str(tmp_path / "all"), "--quiet"])
    main(["run", "--config", str(cfg), "--out", str(tmp_path / "one"), "--seed", "2", "--quiet"])
    all_rows = (tmp_path / "all" / "metrics.csv").read_text().splitlines()
    one_rows = (tmp_path / "one" / "metrics.csv").read_text().splitlines()
    assert one_rows == [all_rows[0], all_rows[3]]


def test_exit_codes(tmp_path):
    missing = write(tmp_path / "m.json", {"seeds": [1]})
    assert main(["run", "--config", str(missing), "--out", str(tmp_path / "o")]) == 1
    slow = write(tmp_path / "slow.json", {
        "topology": {"family": "line", "n": 30, "base_delay": 100}, "horizon": 200,
    })
    assert main(["run", "--config", str(slow), "--out", str(tmp_path / "o"), "--quiet"]) == 2


def test_topo_command(capsys):
    assert main(["topo", "--family", "ring", "--n", "5"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["nodes"]) == 5 and len(doc["links"]) == 5
    assert main(["topo", "--family", "ring", "--n", "2"]) == 1


def test_module_entry_point(tmp_path, fig2_cfg):
    proc = subprocess.run(
        [sys.executable, "-m", "hierlabel", "run", "--config", str(fig2_cfg), "--out", str(tmp_path / "o")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "node 4: {1.2.4, 1.2.3.4}" in proc.stdout
