"""Scenario configuration: node layout, radio and experiment parameters.

Scenarios round-trip through a small sectioned key/value text format::

    # comment
    [scenario]
    name = campus
    duration_s = 550

    [radio]
    range_m = 90

    [node]
    id = 0
    role = server
    lat = 33.76
    lon = 72.36
    label = S

    [path]
    name = path-3
    relays = 7 6 5 4 3

``[node]`` and ``[path]`` may repeat; every other section appears at most
once. Path relays are listed from the client side toward the server.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .deployment import DEFAULT_SPACING_M, deploy_chain
from .geo import GeoPosition, haversine_distance, offset
from .model import NodeId, Role, SizeModel, DEFAULT_SIZES
from .radio import RadioModel

CAMPUS_ORIGIN = GeoPosition(33.76, 72.36)


class ScenarioError(ValueError):
    """Invalid or unparseable scenario; ``line`` points into the source file."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class NodeSpec:
    node: NodeId
    role: Role
    position: GeoPosition
    label: str = ""

    @property
    def name(self) -> str:
        return self.label or str(self.node)


@dataclass(frozen=True)
class ScenarioConfig:
    nodes: tuple[NodeSpec, ...]
    radio: RadioModel = RadioModel()
    name: str = "scenario"
    hello_interval_s: float = 2.0
    advert_interval_s: float = 1.0
    duration_s: float = 550.0
    request_count: int = 100
    request_window_s: float = 500.0
    repeats: int = 5
    # fraction of the period by which each periodic emission is delayed at random
    timer_jitter: float = 0.1
    named_paths: tuple[tuple[str, tuple[NodeId, ...]], ...] = ()
    sizes: SizeModel = DEFAULT_SIZES
    # source line of each node / path section, for diagnostics
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "named_paths",
                           tuple((n, tuple(r)) for n, r in self.named_paths))

    # lookups -----------------------------------------------------------

    def node(self, node_id: NodeId) -> NodeSpec:
        for spec in self.nodes:
            if spec.node == node_id:
                return spec
        raise KeyError(node_id)

    def by_role(self, role: Role) -> list[NodeSpec]:
        return [n for n in self.nodes if n.role is role]

    @property
    def server(self) -> NodeSpec:
        return self.by_role(Role.SERVER)[0]

    @property
    def clients(self) -> list[NodeSpec]:
        return self.by_role(Role.CLIENT)

    @property
    def relays(self) -> list[NodeSpec]:
        return self.by_role(Role.RELAY)

    def path(self, name: str) -> tuple[NodeId, ...]:
        for path_name, relays in self.named_paths:
            if path_name == name:
                return relays
        raise ScenarioError(f"unknown path {name!r}")

    def label(self, node_id: NodeId) -> str:
        try:
            return self.node(node_id).name
        except KeyError:
            return str(node_id)

    def distance(self, a: NodeId, b: NodeId) -> float:
        return haversine_distance(self.node(a).position, self.node(b).position)

    def adjacent(self, a: NodeId, b: NodeId) -> bool:
        return a != b and self.radio.in_range(self.distance(a, b))

    def neighbors(self) -> dict[NodeId, list[NodeId]]:
        ids = [n.node for n in self.nodes]
        return {a: [b for b in ids if self.adjacent(a, b)] for a in ids}

    # derived scenarios -------------------------------------------------

    def hops(self, path_name: str) -> list[NodeId]:
        """Client, relays, server along a named path."""
        return [self.clients[0].node, *self.path(path_name), self.server.node]

    def activate_path(self, path_name: str) -> "ScenarioConfig":
        """Copy keeping only the endpoints and one path's relays.

        Node order is server, clients, then relays from the client side, so
        per-node random streams line up across path activations.
        """
        relays = self.path(path_name)
        keep = [self.server, *self.clients, *(self.node(r) for r in relays)]
        return replace(self, nodes=tuple(keep), named_paths=((path_name, relays),),
                       name=f"{self.name}/{path_name}", lines={})

    def with_radio(self, **changes) -> "ScenarioConfig":
        return replace(self, radio=replace(self.radio, **changes))

    # validation --------------------------------------------------------

    def validate(self, strict: bool = True) -> "ScenarioConfig":
        """Check the invariants; ``strict`` adds client and path checks.

        The engine runs relaxed validation so that degenerate layouts
        (server alone) still execute.
        """
        def where(key):
            return self.lines.get(key)

        seen: dict[NodeId, NodeSpec] = {}
        for spec in self.nodes:
            if spec.node < 0:
                raise ScenarioError(f"negative node id {spec.node}", where(("node", spec.node)))
            if spec.node in seen:
                raise ScenarioError(f"duplicate node id {spec.node}", where(("node", spec.node)))
            seen[spec.node] = spec
        servers = self.by_role(Role.SERVER)
        if len(servers) != 1:
            raise ScenarioError(f"expected exactly one server, found {len(servers)}",
                                where(("node", servers[1].node)) if len(servers) > 1 else None)
        positions: dict[GeoPosition, NodeId] = {}
        for spec in self.nodes:
            if spec.position in positions:
                raise ScenarioError(
                    f"nodes {positions[spec.position]} and {spec.node} share a position",
                    where(("node", spec.node)))
            positions[spec.position] = spec.node
        for label, value in (("duration_s", self.duration_s),
                             ("hello_interval_s", self.hello_interval_s),
                             ("advert_interval_s", self.advert_interval_s)):
            if value <= 0:
                raise ScenarioError(f"{label} must be positive", where(("scenario", label)))
        if not 0.0 <= self.timer_jitter < 1.0:
            raise ScenarioError("timer_jitter must be in [0, 1)", where(("scenario", "timer_jitter")))
        if self.request_count < 0 or self.repeats < 1:
            raise ScenarioError("request_count must be >= 0 and repeats >= 1")
        if self.request_window_s > self.duration_s:
            raise ScenarioError("request window exceeds the run duration",
                                where(("scenario", "request_window_s")))
        if not strict:
            return self

        if not self.clients:
            raise ScenarioError("scenario has no client")
        relay_ids = {r.node for r in self.relays}
        for client in self.clients:
            if not any(self.adjacent(client.node, other) for other in relay_ids | {self.server.node}):
                raise ScenarioError(f"disconnected client {client.node}: no relay in range",
                                    where(("node", client.node)))
        for name, relays in self.named_paths:
            line = where(("path", name))
            if not relays:
                raise ScenarioError(f"path {name!r} has no relays", line)
            unknown = [r for r in relays if r not in relay_ids]
            if unknown:
                raise ScenarioError(f"path {name!r} references non-relay nodes {unknown}", line)
            chain = [self.clients[0].node, *relays, self.server.node]
            for a, b in zip(chain, chain[1:]):
                if not self.adjacent(a, b):
                    raise ScenarioError(
                        f"path {name!r} broken between {self.label(a)} and {self.label(b)} "
                        f"({self.distance(a, b):.1f} m)", line)
        return self


def path_distance(config: ScenarioConfig, path_name: str) -> float:
    """Metres covered by the hops client -> relays -> server of a named path."""
    chain = config.hops(path_name)
    return sum(config.distance(a, b) for a, b in zip(chain, chain[1:]))


# ---------------------------------------------------------------------------
# text format

_SCENARIO_KEYS = {
    "name": str, "hello_interval_s": float, "advert_interval_s": float,
    "duration_s": float, "request_count": int, "request_window_s": float, "repeats": int,
    "timer_jitter": float,
}


def _parse_value(raw: str, kind, line: int, key: str):
    try:
        if kind is bool:
            if raw.lower() in ("true", "yes", "1"):
                return True
            if raw.lower() in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError:
        raise ScenarioError(f"bad value for {key}: {raw!r}", line) from None


def parse_scenario(text: str) -> ScenarioConfig:
    sections: list[tuple[str, int, dict[str, tuple[str, int]]]] = []
    current: Optional[dict] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError(f"malformed section header {line!r}", lineno)
            name = line[1:-1].strip().lower()
            if name not in ("scenario", "radio", "sizes", "node", "path"):
                raise ScenarioError(f"unknown section [{name}]", lineno)
            if name in ("scenario", "radio", "sizes") and any(s[0] == name for s in sections):
                raise ScenarioError(f"section [{name}] repeated", lineno)
            current = {}
            sections.append((name, lineno, current))
            continue
        if "=" not in line:
            raise ScenarioError(f"expected key = value, got {line!r}", lineno)
        if current is None:
            raise ScenarioError("key outside of any section", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in current:
            raise ScenarioError(f"duplicate key {key!r}", lineno)
        current[key] = (value, lineno)

    kwargs: dict = {}
    radio: dict = {}
    sizes: dict = {}
    nodes: list[NodeSpec] = []
    paths: list[tuple[str, tuple[NodeId, ...]]] = []
    lines: dict = {}
    radio_types = {f.name: f.type for f in fields(RadioModel)}
    for name, at, body in sections:
        if name == "scenario":
            for key, (value, ln) in body.items():
                if key not in _SCENARIO_KEYS:
                    raise ScenarioError(f"unknown scenario key {key!r}", ln)
                kwargs[key] = _parse_value(value, _SCENARIO_KEYS[key], ln, key)
                lines[("scenario", key)] = ln
        elif name == "radio":
            for key, (value, ln) in body.items():
                if key not in radio_types:
                    raise ScenarioError(f"unknown radio key {key!r}", ln)
                radio[key] = _parse_value(value, bool if key == "loss_on_collision" else float, ln, key)
        elif name == "sizes":
            for key, (value, ln) in body.items():
                if key not in {f.name for f in fields(SizeModel)}:
                    raise ScenarioError(f"unknown sizes key {key!r}", ln)
                sizes[key] = _parse_value(value, int, ln, key)
        elif name == "node":
            missing = {"id", "role", "lat", "lon"} - body.keys()
            if missing:
                raise ScenarioError(f"node section missing {sorted(missing)}", at)
            extra = body.keys() - {"id", "role", "lat", "lon", "label"}
            if extra:
                raise ScenarioError(f"unknown node keys {sorted(extra)}", at)
            node_id = _parse_value(body["id"][0], int, body["id"][1], "id")
            role_raw, role_ln = body["role"]
            try:
                role = Role(role_raw.lower())
            except ValueError:
                raise ScenarioError(f"unknown role {role_raw!r}", role_ln) from None
            lat = _parse_value(body["lat"][0], float, body["lat"][1], "lat")
            lon = _parse_value(body["lon"][0], float, body["lon"][1], "lon")
            try:
                pos = GeoPosition(lat, lon)
            except ValueError as exc:
                raise ScenarioError(str(exc), body["lat"][1]) from None
            if ("node", node_id) in lines:
                raise ScenarioError(f"duplicate node id {node_id}", at)
            lines[("node", node_id)] = at
            nodes.append(NodeSpec(node_id, role, pos, body.get("label", ("", 0))[0]))
        else:
            if "name" not in body or "relays" not in body:
                raise ScenarioError("path section needs name and relays", at)
            path_name = body["name"][0]
            relays_raw, ln = body["relays"]
            try:
                relays = tuple(int(tok) for tok in relays_raw.replace(",", " ").split())
            except ValueError:
                raise ScenarioError(f"bad relay list {relays_raw!r}", ln) from None
            if ("path", path_name) in lines:
                raise ScenarioError(f"duplicate path {path_name!r}", at)
            lines[("path", path_name)] = at
            paths.append((path_name, relays))
    try:
        radio_model = RadioModel(**radio)
    except ValueError as exc:
        raise ScenarioError(f"radio: {exc}") from None
    return ScenarioConfig(nodes=tuple(nodes), radio=radio_model, named_paths=tuple(paths),
                          sizes=SizeModel(**sizes), lines=lines, **kwargs)


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    return parse_scenario(path.read_text(encoding="utf-8")).validate()


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def dump_scenario(config: ScenarioConfig) -> str:
    out = ["# rdspsim scenario", "[scenario]"]
    for key in _SCENARIO_KEYS:
        out.append(f"{key} = {_fmt(getattr(config, key))}")
    out += ["", "[radio]"]
    out += [f"{f.name} = {_fmt(getattr(config.radio, f.name))}" for f in fields(RadioModel)]
    out += ["", "[sizes]"]
    out += [f"{f.name} = {getattr(config.sizes, f.name)}" for f in fields(SizeModel)]
    for spec in config.nodes:
        out += ["", "[node]", f"id = {spec.node}", f"role = {spec.role.value}",
                f"lat = {spec.position.latitude_deg!r}", f"lon = {spec.position.longitude_deg!r}"]
        if spec.label:
            out.append(f"label = {spec.label}")
    for name, relays in config.named_paths:
        out += ["", "[path]", f"name = {name}", "relays = " + " ".join(map(str, relays))]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# built-in layouts


def _triangle_apex(a: tuple[float, float], b: tuple[float, float],
                   da: float, db: float, side: float) -> tuple[float, float]:
    """Point at distance ``da`` from a and ``db`` from b, left of a->b if side > 0."""
    ax, ay = a
    bx, by = b
    base = math.hypot(bx - ax, by - ay)
    along = (da * da - db * db + base * base) / (2 * base)
    across = math.sqrt(max(0.0, da * da - along * along))
    ux, uy = (bx - ax) / base, (by - ay) / base
    return ax + along * ux - side * across * uy, ay + along * uy + side * across * ux


def chain_from_waypoints(origin: GeoPosition, waypoints: Sequence[GeoPosition],
                         endpoint: GeoPosition, spacing_m: float = DEFAULT_SPACING_M
                         ) -> list[GeoPosition]:
    """Relays dropped walking from ``origin`` to ``endpoint``, excluding any
    drop that would land on the endpoint itself."""
    drops = deploy_chain(origin, [*waypoints, endpoint], spacing_m)
    return [p for p in drops if haversine_distance(p, endpoint) > 1.0]


def _assemble(name: str, server: GeoPosition, client: GeoPosition,
              routes: Iterable[tuple[str, list[GeoPosition]]],
              labels: Optional[dict[str, list[str]]] = None, **kwargs) -> ScenarioConfig:
    """Number relays in deployment order, sharing any relay two routes drop
    at the same position."""
    nodes = [NodeSpec(0, Role.SERVER, server, "S"), NodeSpec(1, Role.CLIENT, client, "C")]
    by_pos: dict[GeoPosition, NodeId] = {}
    paths = []
    for route_name, drops in routes:
        ids = []
        names = (labels or {}).get(route_name, [])
        for i, pos in enumerate(drops):
            if pos not in by_pos:
                by_pos[pos] = len(nodes)
                label = names[i] if i < len(names) else f"R{len(nodes)}"
                nodes.append(NodeSpec(len(nodes), Role.RELAY, pos, label))
            ids.append(by_pos[pos])
        paths.append((route_name, tuple(reversed(ids))))
    return ScenarioConfig(nodes=tuple(nodes), named_paths=tuple(paths), name=name, **kwargs)


def campus_geometry() -> dict[str, tuple[float, float]]:
    """Survey points S, C, X, Y, Z on a local east/north plane in metres.

    Legs follow the surveyed edge lengths; the straight C-S leg is as long as
    five relays can bridge with 90 m radios.
    """
    s = (0.0, 0.0)
    c = (540.0, 0.0)
    x = _triangle_apex(s, c, 441.0, 352.0, side=-1)
    z = _triangle_apex(s, c, 270.0, 358.0, side=+1)
    y = _triangle_apex(z, c, 90.0, 356.0, side=+1)
    return {"S": s, "C": c, "X": x, "Y": y, "Z": z}


def builtin_campus(origin: GeoPosition = CAMPUS_ORIGIN, **kwargs) -> ScenarioConfig:
    geo = {k: offset(origin, e, n) for k, (e, n) in campus_geometry().items()}
    s, c = geo["S"], geo["C"]
    routes = [
        ("path-1", chain_from_waypoints(s, [geo["Z"], geo["Y"]], c)),
        ("path-2", chain_from_waypoints(s, [geo["Z"]], c)),
        ("path-3", chain_from_waypoints(s, [], c)),
        ("path-4", chain_from_waypoints(s, [geo["X"]], c)),
    ]
    return _assemble("campus", s, c, routes, **kwargs).validate()


def builtin_fig7(origin: GeoPosition = CAMPUS_ORIGIN, **kwargs) -> ScenarioConfig:
    """Two branches between S and C: three relays straight, eight on a detour."""
    s = offset(origin, 0.0, 0.0)
    c = offset(origin, 360.0, 0.0)
    short = chain_from_waypoints(s, [], c)
    detour = chain_from_waypoints(s, [offset(origin, 0.0, -200.0), offset(origin, 360.0, -200.0)], c)
    labels = {"short": ["a3", "a2", "a1"], "long": [f"a{i}" for i in range(4, 12)]}
    kwargs.setdefault("request_count", 1)
    return _assemble("fig7", s, c, [("short", short), ("long", detour)], labels, **kwargs).validate()
