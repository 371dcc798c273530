import pytest

from rdspsim.geo import GeoPosition, offset
from rdspsim.model import Role
from rdspsim.scenario import (NodeSpec, ScenarioConfig, ScenarioError, builtin_campus,
                              builtin_fig7, dump_scenario, load_scenario, parse_scenario,
                              path_distance)

O = GeoPosition(33.76, 72.36)


def node_block(node_id, role, east, north=0.0, label=""):
    p = offset(O, east, north)
    text = f"[node]\nid = {node_id}\nrole = {role}\nlat = {p.latitude_deg!r}\nlon = {p.longitude_deg!r}\n"
    return text + (f"label = {label}\n" if label else "")


def small(extra_nodes="", path="2"):
    return ("[scenario]\nname = small\nduration_s = 60\nrequest_window_s = 50\nrequest_count = 5\n"
            "[radio]\nbitrate_bps = 500000\n"
            + node_block(0, "server", 0) + node_block(1, "client", 180) + node_block(2, "relay", 90)
            + extra_nodes + f"[path]\nname = only\nrelays = {path}\n")


def test_parse_small_file():
    cfg = parse_scenario(small()).validate()
    assert cfg.name == "small" and cfg.radio.bitrate_bps == 500000
    assert [n.role for n in cfg.nodes] == [Role.SERVER, Role.CLIENT, Role.RELAY]
    assert cfg.path("only") == (2,)
    assert path_distance(cfg, "only") == pytest.approx(180.0, abs=1e-3)


def test_two_servers_rejected():
    with pytest.raises(ScenarioError, match="exactly one server"):
        parse_scenario(small(node_block(3, "server", 500))).validate()


def test_disconnected_client_rejected():
    text = ("[scenario]\n" + node_block(0, "server", 0) + node_block(1, "client", 400)
            + node_block(2, "relay", 90))
    with pytest.raises(ScenarioError, match="disconnected client"):
        parse_scenario(text).validate()


def test_duplicate_node_id_points_at_line():
    text = small(node_block(2, "relay", 45))
    with pytest.raises(ScenarioError, match="duplicate node id 2") as err:
        parse_scenario(text)
    headers = [i + 1 for i, line in enumerate(text.splitlines()) if line == "[node]"]
    assert err.value.line == headers[3]


@pytest.mark.parametrize("text, pattern", [
    ("[bogus]\n", "unknown section"),
    ("name = x\n", "outside of any section"),
    ("[scenario]\nduration_s = soon\n", "bad value"),
    ("[scenario]\nspeed = 3\n", "unknown scenario key"),
    ("[radio]\nrange_m = -3\n", "radio"),
    ("[node]\nid = 0\nrole = server\n", "missing"),
    ("[node]\nid = 0\nrole = boss\nlat = 0\nlon = 0\n", "unknown role"),
    ("[node]\nid = 0\nrole = server\nlat = 95\nlon = 0\n", "latitude"),
    ("[scenario\n", "malformed section"),
])
def test_parse_errors(text, pattern):
    with pytest.raises(ScenarioError, match=pattern):
        parse_scenario(text)


def test_error_carries_line_number():
    with pytest.raises(ScenarioError) as err:
        parse_scenario("# header\n[scenario]\nduration_s = soon\n")
    assert err.value.line == 3 and str(err.value).startswith("line 3:")


def test_broken_path_rejected():
    with pytest.raises(ScenarioError, match="broken"):
        parse_scenario(small(node_block(3, "relay", 0, 80), path="3")).validate()


def test_path_to_unknown_relay_rejected():
    with pytest.raises(ScenarioError, match="non-relay"):
        parse_scenario(small(path="2 9")).validate()


def test_invalid_timing():
    with pytest.raises(ScenarioError, match="exceeds"):
        parse_scenario(small().replace("request_window_s = 50", "request_window_s = 70")).validate()


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="file not found"):
        load_scenario(tmp_path / "missing.toy")


def test_campus_round_trips_through_text(tmp_path):
    cfg = builtin_campus()
    path = tmp_path / "campus.txt"
    path.write_text(dump_scenario(cfg))
    again = load_scenario(path)
    assert again.nodes == cfg.nodes and again.named_paths == cfg.named_paths
    assert again.radio == cfg.radio and again.duration_s == cfg.duration_s
    assert dump_scenario(again) == dump_scenario(cfg)


def test_campus_layout():
    cfg = builtin_campus()
    assert len(cfg.nodes) == 25 and len(cfg.relays) == 23
    assert {n: len(cfg.path(n)) for n, _ in cfg.named_paths} == \
        {"path-1": 7, "path-2": 6, "path-3": 5, "path-4": 8}
    hops = cfg.hops("path-3")
    assert len(hops) - 1 == 6


def test_activation_keeps_only_one_path():
    cfg = builtin_campus().activate_path("path-4")
    assert len(cfg.relays) == 8 and cfg.named_paths[0][0] == "path-4"
    assert [n.role for n in cfg.nodes[:2]] == [Role.SERVER, Role.CLIENT]
    with pytest.raises(ScenarioError, match="unknown path"):
        cfg.path("path-9")


def test_fig7_layout():
    cfg = builtin_fig7()
    assert [cfg.label(r) for r in cfg.path("short")] == ["a1", "a2", "a3"]
    assert [cfg.label(r) for r in cfg.path("long")] == [f"a{i}" for i in range(11, 3, -1)]
    nbrs = cfg.neighbors()
    client = cfg.clients[0].node
    assert sorted(cfg.label(n) for n in nbrs[client]) == ["a1", "a11"]


def test_server_only_config_passes_relaxed_validation():
    cfg = ScenarioConfig(nodes=(NodeSpec(0, Role.SERVER, O),))
    assert cfg.validate(strict=False) is cfg
    with pytest.raises(ScenarioError, match="no client"):
        cfg.validate()
