"""Identifiers and wire messages shared by both protocols."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .geo import GeoPosition

NodeId = int
DynamicId = int

UNASSIGNED: DynamicId = -1
SERVER_ID: DynamicId = 0


class Role(str, enum.Enum):
    CLIENT = "client"
    RELAY = "relay"
    SERVER = "server"


class Kind(str, enum.Enum):
    HELLO = "hello"
    REQUEST = "request"
    ACK = "ack"
    ADVERT = "advert"

    @property
    def is_control(self) -> bool:
        return self in (Kind.HELLO, Kind.ADVERT)


@dataclass(frozen=True, order=True)
class MessageId:
    origin: NodeId
    sequence: int

    def __str__(self):
        return f"{self.origin}:{self.sequence}"

    @classmethod
    def parse(cls, text: str) -> "MessageId":
        origin, seq = text.split(":")
        return cls(int(origin), int(seq))


@dataclass(frozen=True)
class Hello:
    dynamic_id: DynamicId


@dataclass(frozen=True)
class Request:
    message_id: MessageId
    position: GeoPosition

    @property
    def origin(self) -> NodeId:
        return self.message_id.origin


@dataclass(frozen=True)
class Ack:
    message_id: MessageId

    @property
    def origin(self) -> NodeId:
        """The client that issued the acknowledged request."""
        return self.message_id.origin


@dataclass(frozen=True)
class AdvertEntry:
    destination: NodeId
    next_hop: NodeId
    hop_count: int
    sequence: int


@dataclass(frozen=True)
class DsdvAdvertisement:
    entries: tuple[AdvertEntry, ...]


@dataclass(frozen=True)
class SizeModel:
    """Byte sizes of each message kind; adverts grow linearly with entries."""

    hello: int = 8
    request: int = 32
    ack: int = 16
    advert_header: int = 8
    advert_entry: int = 16

    def advert(self, n_entries: int) -> int:
        return self.advert_header + self.advert_entry * n_entries


DEFAULT_SIZES = SizeModel()

_KIND_OF = {Hello: Kind.HELLO, Request: Kind.REQUEST, Ack: Kind.ACK, DsdvAdvertisement: Kind.ADVERT}


@dataclass(frozen=True)
class WireMessage:
    kind: Kind
    sender: NodeId
    payload: Hello | Request | Ack | DsdvAdvertisement
    size_bytes: int = field(compare=False)

    def __post_init__(self):
        if _KIND_OF[type(self.payload)] is not self.kind:
            raise ValueError(f"{self.kind} message with {type(self.payload).__name__} payload")
        if self.size_bytes <= 0:
            raise ValueError("size_bytes must be positive")

    @classmethod
    def of(cls, sender: NodeId, payload, sizes: SizeModel = DEFAULT_SIZES) -> "WireMessage":
        kind = _KIND_OF[type(payload)]
        if kind is Kind.HELLO:
            size = sizes.hello
        elif kind is Kind.REQUEST:
            size = sizes.request
        elif kind is Kind.ACK:
            size = sizes.ack
        else:
            size = sizes.advert(len(payload.entries))
        return cls(kind, sender, payload, size)

    def relayed_by(self, sender: NodeId) -> "WireMessage":
        """Same payload re-sent by another hop."""
        return WireMessage(self.kind, sender, self.payload, self.size_bytes)
