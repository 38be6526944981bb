"""Hierarchical label assignment for in-band control of constrained networks."""
from .label import (
    DuplicateHop,
    Label,
    LabelOverflow,
    MalformedField,
    append_hop,
    decode_mac,
    encode_mac,
    format_mac,
    hop_count,
    is_prefix,
)
from .topology import Topology, TopoSpec, fig2_topology, generate
from .config import ScenarioConfig, load_scenario
from .sim import HorizonExceeded, MetricsReport, SimResult, Simulation, run
from .oracle import converged_labels, route_exists_after_failure

__version__ = "0.1.0"
