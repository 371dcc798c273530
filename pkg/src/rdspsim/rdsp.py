"""RDSP node logic: dynamic ID assignment, min/max neighbour selection and
the client, relay and server event handlers.

Every handler is a plain function over an :class:`RdspNodeState`; the
simulator owns timing and radio, the functions only decide what to send.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .geo import GeoPosition, haversine_distance
from .model import (
    SERVER_ID, UNASSIGNED, Ack, DynamicId, Hello, Kind, MessageId, NodeId,
    Request, Role, SizeModel, DEFAULT_SIZES, WireMessage,
)

STALE_HELLO_INTERVALS = 3


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class SendTo:
    target: NodeId
    message: WireMessage


@dataclass(frozen=True)
class DeliverLocally:
    message: WireMessage


@dataclass(frozen=True)
class Drop:
    reason: str
    message: Optional[WireMessage] = None


@dataclass(frozen=True)
class RaiseAlarm:
    message_id: MessageId
    distance_m: float


@dataclass(frozen=True)
class RoundTrip:
    message_id: MessageId
    rtt_s: float


ForwardAction = Union[SendTo, DeliverLocally, Drop, RaiseAlarm]


@dataclass
class RdspNodeState:
    node: NodeId
    role: Role
    position: GeoPosition
    dynamic_id: DynamicId = UNASSIGNED
    hello_interval_s: float = 2.0
    sizes: SizeModel = DEFAULT_SIZES
    # neighbour -> (dynamic id, last heard)
    neighbor_view: dict[NodeId, tuple[DynamicId, float]] = field(default_factory=dict)
    min_sel: Optional[tuple[NodeId, DynamicId]] = None
    max_sel: Optional[tuple[NodeId, DynamicId]] = None
    pending: dict[MessageId, float] = field(default_factory=dict)
    seen: set[tuple[Kind, MessageId]] = field(default_factory=set)
    next_sequence: int = 0

    def __post_init__(self):
        if self.role is Role.SERVER:
            self.dynamic_id = SERVER_ID
        elif self.role is Role.CLIENT:
            self.dynamic_id = UNASSIGNED

    @property
    def staleness_s(self) -> float:
        return STALE_HELLO_INTERVALS * self.hello_interval_s


def dia_assign(available_ids: Iterable[DynamicId]) -> Optional[DynamicId]:
    """Derive a relay ID from the IDs heard in hellos.

    Returns one more than the smallest assigned (non-negative) ID, or None
    while no assigned neighbour has been heard yet.
    """
    ids = sorted(available_ids)
    if not ids:
        raise ProtocolError("no neighbors heard")
    chosen = ids[0]
    if chosen == UNASSIGNED:
        # more than one -1 can precede the first assigned ID
        assigned = [i for i in ids if i != UNASSIGNED]
        if not assigned:
            return None
        chosen = assigned[0]
    return chosen + 1


def mmn_select(entries: Iterable[tuple[NodeId, DynamicId]]
               ) -> tuple[tuple[NodeId, DynamicId], tuple[NodeId, DynamicId]]:
    """Pick the neighbours with the smallest and the largest assigned ID.

    Unassigned neighbours (clients included) are ignored. Equal IDs resolve to
    the smaller node ID on both ends.
    """
    qualifying = [(node, did) for node, did in entries if did >= 0]
    if not qualifying:
        raise ProtocolError("isolated node")
    lo = min(qualifying, key=lambda e: (e[1], e[0]))
    hi = min(qualifying, key=lambda e: (-e[1], e[0]))
    return lo, hi


def emit_hello(state: RdspNodeState) -> WireMessage:
    return WireMessage.of(state.node, Hello(state.dynamic_id), state.sizes)


def evict_stale(state: RdspNodeState, now: float) -> bool:
    stale = [n for n, (_, heard) in state.neighbor_view.items()
             if now - heard > state.staleness_s]
    for n in stale:
        del state.neighbor_view[n]
    if stale:
        _reselect(state)
    return bool(stale)


def _reselect(state: RdspNodeState) -> None:
    try:
        state.min_sel, state.max_sel = mmn_select(
            (n, did) for n, (did, _) in state.neighbor_view.items())
    except ProtocolError:
        state.min_sel = state.max_sel = None


def on_hello(state: RdspNodeState, msg: WireMessage, now: float) -> RdspNodeState:
    state.neighbor_view[msg.sender] = (msg.payload.dynamic_id, now)
    evict_stale(state, now)
    if state.role is Role.RELAY and state.dynamic_id == UNASSIGNED:
        assigned = dia_assign(did for did, _ in state.neighbor_view.values())
        if assigned is not None:
            state.dynamic_id = assigned
    _reselect(state)
    return state


def relay_on_request(state: RdspNodeState, msg: WireMessage) -> ForwardAction:
    key = (Kind.REQUEST, msg.payload.message_id)
    if key in state.seen:
        return Drop("duplicate", msg)
    if state.min_sel is None:
        return Drop("no route toward server", msg)
    state.seen.add(key)
    return SendTo(state.min_sel[0], msg.relayed_by(state.node))


def relay_on_ack(state: RdspNodeState, msg: WireMessage) -> ForwardAction:
    key = (Kind.ACK, msg.payload.message_id)
    if key in state.seen:
        return Drop("duplicate", msg)
    client = msg.payload.origin
    if client in state.neighbor_view:
        target = client
    elif state.max_sel is not None:
        target = state.max_sel[0]
    else:
        return Drop("no route toward client", msg)
    state.seen.add(key)
    return SendTo(target, msg.relayed_by(state.node))


def client_on_button(state: RdspNodeState, position: GeoPosition, now: float) -> ForwardAction:
    if state.role is not Role.CLIENT:
        raise ProtocolError("button press on a non-client node")
    mid = MessageId(state.node, state.next_sequence)
    state.next_sequence += 1
    msg = WireMessage.of(state.node, Request(mid, position), state.sizes)
    if state.min_sel is None:
        return Drop("client isolated", msg)
    state.pending[mid] = now
    return SendTo(state.min_sel[0], msg)


def client_on_ack(state: RdspNodeState, msg: WireMessage, now: float) -> Union[RoundTrip, Drop]:
    mid = msg.payload.message_id
    sent = state.pending.pop(mid, None)
    if sent is None:
        return Drop("unsolicited ack", msg)
    return RoundTrip(mid, now - sent)


def server_on_request(state: RdspNodeState, msg: WireMessage, now: float
                      ) -> tuple[Optional[RaiseAlarm], SendTo]:
    """Acknowledge every copy; alarm only on the first."""
    req: Request = msg.payload
    ack = SendTo(msg.sender, WireMessage.of(state.node, Ack(req.message_id), state.sizes))
    key = (Kind.REQUEST, req.message_id)
    if key in state.seen:
        return None, ack
    state.seen.add(key)
    return RaiseAlarm(req.message_id, haversine_distance(state.position, req.position)), ack
