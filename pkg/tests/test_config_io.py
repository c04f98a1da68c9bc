import io

import pytest

from ripplecache.catalog import SegmentId as S
from ripplecache.config import RunConfig, apply_param, parse_config, shipped_config
from ripplecache.errors import ConfigError, TopologyError
from ripplecache.io import format_topology, parse_topology, read_placement, write_placement
from ripplecache.topology import desk_topology, generate_ba_topology


def test_defaults_and_overrides():
    cfg = parse_config("""
[run]
policy = classic
seeds = 1-3, 7
[cache]
omega = 0.1   # comment
[adaptation]
window = 3
""")
    assert cfg.policy == "classic" and cfg.seeds == (1, 2, 3, 7)
    assert cfg.omega == 0.1 and cfg.adaptation.window == 3
    assert cfg.files == RunConfig().files


@pytest.mark.parametrize("text", [
    "[run]\nbogus = 1\n",
    "[cache]\nomega = 2\n",
    "[run]\npolicy = lru-everywhere\n",
    "[catalog]\nfiles = many\n",
    "not an ini",
])
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_shipped_profiles():
    small = shipped_config("bip_tractable")
    big = shipped_config("large_scale")
    assert small.n_nodes == 16 and small.omega == 0.2 and len(small.seeds) >= 10
    assert big.topology == "ba" and big.n_nodes == 42


def test_apply_param():
    assert apply_param(RunConfig(), "omega", "0.05").omega == 0.05
    with pytest.raises(ConfigError):
        apply_param(RunConfig(), "seeds", "1")
    with pytest.raises(ConfigError):
        apply_param(RunConfig(), "omega", "abc")


@pytest.mark.parametrize("topo", [desk_topology(1e6, 8),
                                  generate_ba_topology(4, 1, 3, n_nodes=12, n_consumers=6)])
def test_topology_text_roundtrip(topo):
    back = parse_topology(format_topology(topo))
    assert back.nodes == topo.nodes
    assert back.links == topo.links
    assert back.consumers == topo.consumers


def test_topology_parse_errors():
    with pytest.raises(TopologyError):
        parse_topology("node 1 edge\nlink 1\n")


def test_placement_csv_roundtrip():
    x = {4: frozenset({S(1, 2, 3)}), 2: frozenset({S(2, 1, 1), S(1, 1, 4)})}
    buf = io.StringIO()
    assert write_placement(x, buf) == 3
    assert buf.getvalue().splitlines()[0] == "router_id,f,k,b"
    assert read_placement(io.StringIO(buf.getvalue())) == x
    with pytest.raises(ConfigError):
        read_placement(io.StringIO("a,b\n"))
