"""Deterministic discrete-event simulation of a relay network.

One virtual clock, one event heap ordered by (time, insertion counter), one
seeded random stream per node. The radio is a disk model with carrier
sensing: a node that hears a transmission in progress backs off for a
uniform random time and senses again. Any two transmissions that overlap
at a receiver destroy each other there, and a node cannot receive while it
transmits.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Union

from . import dsdv, rdsp
from .model import Kind, NodeId, Role, WireMessage
from .rdsp import DeliverLocally, Drop, RaiseAlarm, RoundTrip, SendTo
from .scenario import ScenarioConfig

PROTOCOLS = ("rdsp", "uf")


class ConfigurationError(ValueError):
    pass


class TruncatedTraceError(ValueError):
    pass


# ---------------------------------------------------------------------------
# trace


@dataclass(frozen=True)
class TraceRecord:
    time: float
    node: NodeId
    action: str
    detail: str = ""

    def line(self) -> str:
        return f"{self.time:.6f}\t{self.node}\t{self.action}\t{self.detail}"

    def fields(self) -> dict[str, str]:
        return dict(tok.split("=", 1) for tok in self.detail.split() if "=" in tok)


class EventTrace:
    """Append-only log of everything the radio and the nodes did."""

    def __init__(self, records: Iterable[TraceRecord] = ()):
        self.records: list[TraceRecord] = list(records)

    def append(self, time: float, node: NodeId, action: str, detail: str = "") -> None:
        self.records.append(TraceRecord(time, node, action, detail))

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def select(self, action: str, node: Optional[NodeId] = None) -> list[TraceRecord]:
        return [r for r in self.records
                if r.action == action and (node is None or r.node == node)]

    @property
    def complete(self) -> bool:
        return bool(self.records) and self.records[-1].action == "end"

    def to_text(self) -> str:
        return "".join(r.line() + "\n" for r in self.records)

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_text())

    @classmethod
    def parse(cls, text: str) -> "EventTrace":
        records = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise TruncatedTraceError(f"trace line {lineno} malformed")
            records.append(TraceRecord(float(parts[0]), int(parts[1]), parts[2], parts[3]))
        return cls(records)

    @classmethod
    def read(cls, path) -> "EventTrace":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())


def _token(text: str) -> str:
    return text.replace(" ", "_")


def _describe(msg: WireMessage) -> str:
    if msg.kind in (Kind.REQUEST, Kind.ACK):
        return f"kind={msg.kind.value} id={msg.payload.message_id}"
    return f"kind={msg.kind.value}"


# ---------------------------------------------------------------------------
# protocol agents


@dataclass(frozen=True)
class Broadcast:
    message: WireMessage


Action = Union[Broadcast, SendTo, DeliverLocally, Drop, RaiseAlarm, RoundTrip]


class RdspAgent:
    def __init__(self, spec, config: ScenarioConfig):
        self.role = spec.role
        self.position = spec.position
        self.state = rdsp.RdspNodeState(spec.node, spec.role, spec.position,
                                        hello_interval_s=config.hello_interval_s,
                                        sizes=config.sizes)
        self.period = config.hello_interval_s

    @property
    def dynamic_id(self):
        return self.state.dynamic_id

    def on_timer(self, now: float) -> list[Action]:
        rdsp.evict_stale(self.state, now)
        return [Broadcast(rdsp.emit_hello(self.state))]

    def on_button(self, now: float) -> list[Action]:
        return [rdsp.client_on_button(self.state, self.position, now)]

    def on_receive(self, msg: WireMessage, now: float) -> list[Action]:
        st = self.state
        if msg.kind is Kind.HELLO:
            rdsp.on_hello(st, msg, now)
            return []
        if msg.kind is Kind.REQUEST:
            if self.role is Role.RELAY:
                return [rdsp.relay_on_request(st, msg)]
            if self.role is Role.SERVER:
                alarm, ack = rdsp.server_on_request(st, msg, now)
                return [a for a in (alarm, ack) if a is not None]
        elif msg.kind is Kind.ACK:
            if self.role is Role.RELAY:
                return [rdsp.relay_on_ack(st, msg)]
            if self.role is Role.CLIENT:
                return [rdsp.client_on_ack(st, msg, now)]
        return [Drop(f"unexpected {msg.kind.value}", msg)]


class UfAgent:
    def __init__(self, spec, config: ScenarioConfig):
        self.role = spec.role
        self.position = spec.position
        self.state = dsdv.UfNodeState(spec.node, spec.role, spec.position,
                                      server=config.server.node, sizes=config.sizes)
        self.period = config.advert_interval_s

    dynamic_id = None

    def on_timer(self, now: float) -> list[Action]:
        dsdv.expire(self.state.table, now, self.period)
        return [Broadcast(dsdv.dsdv_advertise(self.state.table, now, self.state.sizes))]

    def on_button(self, now: float) -> list[Action]:
        return [dsdv.uf_client_on_button(self.state, self.position, now)]

    def on_receive(self, msg: WireMessage, now: float) -> list[Action]:
        st = self.state
        if msg.kind is Kind.ADVERT:
            dsdv.dsdv_update(st.table, msg, now)
            return []
        if msg.kind is Kind.REQUEST and self.role is Role.SERVER:
            alarm, reply = dsdv.uf_server_on_request(st, msg, now)
            return [a for a in (alarm, reply) if a is not None]
        if msg.kind is Kind.ACK and msg.payload.origin == st.node:
            return [dsdv.uf_client_on_ack(st, msg, now)]
        if msg.kind in (Kind.REQUEST, Kind.ACK):
            return [dsdv.uf_forward(st, msg)]
        return [Drop(f"unexpected {msg.kind.value}", msg)]


AGENTS = {"rdsp": RdspAgent, "uf": UfAgent}


# ---------------------------------------------------------------------------
# radio


class _Tx:
    __slots__ = ("serial", "sender", "msg", "target", "start", "end", "receivers", "corrupted")

    def __init__(self, serial, sender, msg, target, start, end, receivers):
        self.serial = serial
        self.sender = sender
        self.msg = msg
        self.target = target
        self.start = start
        self.end = end
        self.receivers = receivers
        self.corrupted: set[NodeId] = set()


class _Radio:
    """Per-node transmit queues, carrier sense and overlap bookkeeping."""

    def __init__(self, sim: "Simulator"):
        self.sim = sim
        self.model = sim.config.radio
        self.nbrs = {n: frozenset(v) for n, v in sim.config.neighbors().items()}
        self.queue: dict[NodeId, deque] = {n: deque() for n in self.nbrs}
        self.transmitting: dict[NodeId, Optional[_Tx]] = {n: None for n in self.nbrs}
        self.waiting: dict[NodeId, bool] = {n: False for n in self.nbrs}
        self.ongoing: list[_Tx] = []
        self.serial = 0

    def send(self, node: NodeId, msg: WireMessage, target: Optional[NodeId]) -> None:
        self.queue[node].append((msg, target))
        if self.transmitting[node] is None and not self.waiting[node]:
            self._attempt(node)

    def _sensed(self, node: NodeId) -> list[_Tx]:
        near = self.nbrs[node]
        return [tx for tx in self.ongoing if tx.sender in near]

    def _attempt(self, node: NodeId) -> None:
        sim = self.sim
        self.waiting[node] = False
        if not sim.active[node]:
            self.queue[node].clear()
            return
        if not self.queue[node]:
            return
        busy = self._sensed(node)
        if busy:
            cap = self.model.csma_max_backoff_s
            if cap > 0:
                delay = cap * (1.0 - sim.rng[node].random())
                at = sim.now + delay
            else:
                at = max(tx.end for tx in busy)
            self.waiting[node] = True
            sim.schedule(at, self._attempt, node)
            return
        msg, target = self.queue[node].popleft()
        self._start(node, msg, target)

    def _start(self, node: NodeId, msg: WireMessage, target: Optional[NodeId]) -> None:
        sim = self.sim
        self.serial += 1
        now = sim.now
        receivers = [r for r in sorted(self.nbrs[node]) if sim.active[r]]
        tx = _Tx(self.serial, node, msg, target, now, now + self.model.airtime(msg.size_bytes),
                 receivers)
        my_reach = self.nbrs[node]
        for other in self.ongoing:
            reach = self.nbrs[other.sender]
            for r in tx.receivers:
                if r == other.sender or r in reach:
                    tx.corrupted.add(r)
            for r in other.receivers:
                if r == node or r in my_reach:
                    other.corrupted.add(r)
        self.ongoing.append(tx)
        self.transmitting[node] = tx
        to = "*" if target is None else str(target)
        sim.trace.append(now, node, "send",
                         f"tx={tx.serial} {_describe(msg)} to={to} bytes={msg.size_bytes}")
        sim.schedule(tx.end, self._finish, tx)

    def _finish(self, tx: _Tx) -> None:
        sim = self.sim
        self.ongoing.remove(tx)
        self.transmitting[tx.sender] = None
        what = _describe(tx.msg)
        addressees = tx.receivers if tx.target is None else [tx.target]
        proc = self.model.per_hop_proc_s
        for r in addressees:
            if r not in tx.receivers:
                sim.trace.append(sim.now, r, "lost",
                                 f"tx={tx.serial} {what} from={tx.sender} reason=out-of-range")
            elif r in tx.corrupted and self.model.loss_on_collision:
                sim.trace.append(sim.now, r, "collision", f"tx={tx.serial} {what} from={tx.sender}")
            else:
                sim.schedule(sim.now + proc, sim.deliver, r, tx.msg, tx.serial)
        if self.queue[tx.sender]:
            self._attempt(tx.sender)


# ---------------------------------------------------------------------------
# simulator


def node_rng(seed: int, index: int) -> random.Random:
    return random.Random(f"rdspsim:{seed}:{index}")


class Simulator:
    def __init__(self, config: ScenarioConfig, protocol: str, seed: int,
                 disable: Optional[dict[NodeId, float]] = None):
        if protocol not in AGENTS:
            raise ConfigurationError(f"unknown protocol {protocol!r}")
        try:
            config.validate(strict=False)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
        self.config = config
        self.protocol = protocol
        self.seed = seed
        self.now = 0.0
        self.trace = EventTrace()
        self._heap: list = []
        self._counter = 0
        ids = [n.node for n in config.nodes]
        self.rng = {n.node: node_rng(seed, i) for i, n in enumerate(config.nodes)}
        self.active = {n: True for n in ids}
        self.agents = {n.node: AGENTS[protocol](n, config) for n in config.nodes}
        self.radio = _Radio(self)
        for node, when in (disable or {}).items():
            if node not in self.active:
                raise ConfigurationError(f"cannot disable unknown node {node}")
            self.schedule(when, self._disable, node)
        for spec in config.nodes:
            rng = self.rng[spec.node]
            if spec.role is Role.CLIENT:
                for t in self._press_times(rng):
                    self.schedule(t, self._button, spec.node)
            agent = self.agents[spec.node]
            self.schedule(rng.random() * agent.period, self._timer, spec.node)

    def _press_times(self, rng: random.Random) -> list[float]:
        # one press per equal slot of the request window, uniformly placed in it
        n = self.config.request_count
        slot = self.config.request_window_s / n if n else 0.0
        return [(i + rng.random()) * slot for i in range(n)]

    def schedule(self, time: float, fn: Callable, *args) -> None:
        self._counter += 1
        heapq.heappush(self._heap, (time, self._counter, fn, args))

    def run(self) -> EventTrace:
        end = self.config.duration_s
        heap = self._heap
        while heap and heap[0][0] <= end:
            time, _, fn, args = heapq.heappop(heap)
            self.now = time
            fn(*args)
        self.now = end
        self.trace.append(end, self.config.server.node, "end", f"protocol={self.protocol} seed={self.seed}")
        return self.trace

    # event handlers ------------------------------------------------------

    def _timer(self, node: NodeId) -> None:
        if not self.active[node]:
            return
        agent = self.agents[node]
        self.schedule(self.now + agent.period, self._timer, node)
        # emission is jittered within the period so equal-period neighbours cannot lock in step
        jitter = self.config.timer_jitter * agent.period
        if jitter > 0:
            self.schedule(self.now + jitter * self.rng[node].random(), self._emit, node)
        else:
            self._emit(node)

    def _emit(self, node: NodeId) -> None:
        if self.active[node]:
            self._apply(node, self.agents[node].on_timer(self.now))

    def _button(self, node: NodeId) -> None:
        if not self.active[node]:
            return
        agent = self.agents[node]
        seq = agent.state.next_sequence
        self.trace.append(self.now, node, "press", f"id={node}:{seq}")
        self._apply(node, agent.on_button(self.now))

    def _disable(self, node: NodeId) -> None:
        self.active[node] = False
        self.trace.append(self.now, node, "disable")

    def deliver(self, node: NodeId, msg: WireMessage, serial: int) -> None:
        if not self.active[node]:
            self.trace.append(self.now, node, "lost",
                              f"tx={serial} {_describe(msg)} from={msg.sender} reason=disabled")
            return
        self.trace.append(self.now, node, "recv", f"tx={serial} {_describe(msg)} from={msg.sender}")
        agent = self.agents[node]
        before = agent.dynamic_id
        actions = agent.on_receive(msg, self.now)
        if agent.dynamic_id != before:
            self.trace.append(self.now, node, "assign", f"dynamic_id={agent.dynamic_id}")
        self._apply(node, actions)

    def _apply(self, node: NodeId, actions: Iterable[Action]) -> None:
        for act in actions:
            if isinstance(act, Broadcast):
                self.radio.send(node, act.message, None)
            elif isinstance(act, SendTo):
                self.radio.send(node, act.message, act.target)
            elif isinstance(act, Drop):
                what = _describe(act.message) if act.message is not None else ""
                self.trace.append(self.now, node, "drop", f"{what} reason={_token(act.reason)}")
            elif isinstance(act, RaiseAlarm):
                self.trace.append(self.now, node, "alarm",
                                  f"id={act.message_id} dist={act.distance_m:.3f}")
            elif isinstance(act, RoundTrip):
                self.trace.append(self.now, node, "rtt", f"id={act.message_id} rtt={act.rtt_s:.6f}")
            elif isinstance(act, DeliverLocally):
                self.trace.append(self.now, node, "local", _describe(act.message))
            else:
                raise TypeError(f"unknown action {act!r}")


def run(config: ScenarioConfig, protocol: str, seed: int,
        disable: Optional[dict[NodeId, float]] = None) -> EventTrace:
    """Simulate ``config`` under ``protocol`` ("rdsp" or "uf") for its full duration."""
    return Simulator(config, protocol, seed, disable).run()


def radio_broadcast(sim: Simulator, sender: NodeId, msg: WireMessage,
                    target: Optional[NodeId] = None) -> None:
    """Queue ``msg`` for carrier-sensed transmission from ``sender``."""
    if not sim.active[sender]:
        raise ConfigurationError(f"node {sender} is disabled")
    sim.radio.send(sender, msg, target)
