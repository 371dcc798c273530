"""DSDV routing for the utility-function (UF) baseline.

Full-table dumps on a fixed period, per-destination even sequence numbers,
expiry after a few silent periods. No triggered or incremental updates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .geo import GeoPosition, haversine_distance
from .model import (
    Ack, AdvertEntry, DsdvAdvertisement, Kind, MessageId, NodeId, Request,
    Role, SizeModel, DEFAULT_SIZES, WireMessage,
)
from .rdsp import (
    DeliverLocally, Drop, ForwardAction, ProtocolError, RaiseAlarm, RoundTrip, SendTo,
)

EXPIRY_PERIODS = 3


class NoRouteError(ProtocolError):
    pass


@dataclass(frozen=True)
class DsdvRouteEntry:
    destination: NodeId
    next_hop: NodeId
    hop_count: int
    sequence: int
    last_update: float


@dataclass
class DsdvTable:
    owner: NodeId
    entries: dict[NodeId, DsdvRouteEntry] = field(default_factory=dict)

    def __post_init__(self):
        if self.owner not in self.entries:
            self.entries[self.owner] = DsdvRouteEntry(self.owner, self.owner, 0, 0, 0.0)

    @property
    def self_entry(self) -> DsdvRouteEntry:
        return self.entries[self.owner]


def dsdv_advertise(table: DsdvTable, now: float, sizes: SizeModel = DEFAULT_SIZES) -> WireMessage:
    own = table.self_entry
    table.entries[table.owner] = DsdvRouteEntry(own.destination, own.next_hop, 0,
                                                own.sequence + 2, now)
    entries = tuple(AdvertEntry(e.destination, e.next_hop, e.hop_count, e.sequence)
                    for _, e in sorted(table.entries.items()))
    return WireMessage.of(table.owner, DsdvAdvertisement(entries), sizes)


def dsdv_update(table: DsdvTable, adv: WireMessage, now: float) -> DsdvTable:
    sender = adv.sender
    for e in adv.payload.entries:
        if e.destination == table.owner:
            continue
        hops = e.hop_count + 1
        cur = table.entries.get(e.destination)
        if (cur is None or e.sequence > cur.sequence
                or (e.sequence == cur.sequence and hops < cur.hop_count)):
            table.entries[e.destination] = DsdvRouteEntry(e.destination, sender, hops,
                                                          e.sequence, now)
    own = next((e for e in adv.payload.entries if e.destination == sender), None)
    if own is not None:
        cur = table.entries.get(sender)
        if cur is None or own.sequence >= cur.sequence:
            table.entries[sender] = DsdvRouteEntry(sender, sender, 1, own.sequence, now)
    return table


def expire(table: DsdvTable, now: float, period_s: float) -> list[NodeId]:
    limit = EXPIRY_PERIODS * period_s
    gone = [d for d, e in table.entries.items()
            if d != table.owner and now - e.last_update > limit]
    for d in gone:
        del table.entries[d]
    return gone


def dsdv_next_hop(table: DsdvTable, dest: NodeId) -> NodeId:
    try:
        return table.entries[dest].next_hop
    except KeyError:
        raise NoRouteError(f"no route to destination {dest}") from None


@dataclass
class UfNodeState:
    node: NodeId
    role: Role
    position: GeoPosition
    server: NodeId
    sizes: SizeModel = DEFAULT_SIZES
    table: DsdvTable = None
    seen: set[tuple[Kind, MessageId]] = field(default_factory=set)
    pending: dict[MessageId, float] = field(default_factory=dict)
    next_sequence: int = 0

    def __post_init__(self):
        if self.table is None:
            self.table = DsdvTable(self.node)


def uf_forward(state: UfNodeState, msg: WireMessage) -> ForwardAction:
    """Route a request toward the server or an ack toward its client."""
    if msg.kind is Kind.REQUEST:
        dest = state.server
    elif msg.kind is Kind.ACK:
        dest = msg.payload.origin
    else:
        raise ProtocolError(f"cannot forward {msg.kind.value}")
    key = (msg.kind, msg.payload.message_id)
    if key in state.seen:
        return Drop("duplicate", msg)
    if dest == state.node:
        state.seen.add(key)
        return DeliverLocally(msg)
    try:
        hop = dsdv_next_hop(state.table, dest)
    except NoRouteError:
        return Drop("no route", msg)
    state.seen.add(key)
    return SendTo(hop, msg.relayed_by(state.node))


def uf_client_on_button(state: UfNodeState, position: GeoPosition, now: float) -> ForwardAction:
    mid = MessageId(state.node, state.next_sequence)
    state.next_sequence += 1
    msg = WireMessage.of(state.node, Request(mid, position), state.sizes)
    action = uf_forward(state, msg)
    if isinstance(action, SendTo):
        state.pending[mid] = now
    elif isinstance(action, Drop) and action.reason == "no route":
        return Drop("client isolated", msg)
    return action


def uf_client_on_ack(state: UfNodeState, msg: WireMessage, now: float):
    sent = state.pending.pop(msg.payload.message_id, None)
    if sent is None:
        return Drop("unsolicited ack", msg)
    return RoundTrip(msg.payload.message_id, now - sent)


def uf_server_on_request(state: UfNodeState, msg: WireMessage, now: float
                         ) -> tuple[Optional[RaiseAlarm], ForwardAction]:
    """Alarm on the first copy of a request; acknowledge every copy along
    the table route back to the originating client."""
    req: Request = msg.payload
    ack = WireMessage.of(state.node, Ack(req.message_id), state.sizes)
    try:
        reply = SendTo(dsdv_next_hop(state.table, req.origin), ack)
    except NoRouteError:
        reply = Drop("no route", ack)
    key = (Kind.REQUEST, req.message_id)
    if key in state.seen:
        return None, reply
    state.seen.add(key)
    return RaiseAlarm(req.message_id, haversine_distance(state.position, req.position)), reply
