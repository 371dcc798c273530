import pytest
from hypothesis import given, strategies as st

from rdspsim.geo import GeoPosition
from rdspsim.model import (Ack, AdvertEntry, DsdvAdvertisement, Hello, Kind, MessageId, Request,
                           SizeModel, WireMessage)


def test_message_id_text_round_trip():
    mid = MessageId(1, 42)
    assert str(mid) == "1:42"
    assert MessageId.parse("1:42") == mid


@given(st.integers(1, 50))
def test_hello_smaller_than_any_advert(n):
    sizes = SizeModel()
    entries = tuple(AdvertEntry(i, i, 1, 2) for i in range(n))
    hello = WireMessage.of(3, Hello(2), sizes)
    advert = WireMessage.of(3, DsdvAdvertisement(entries), sizes)
    assert hello.size_bytes < advert.size_bytes == 8 + 16 * n


def test_default_sizes():
    pos = GeoPosition(0, 0)
    assert WireMessage.of(1, Request(MessageId(1, 0), pos)).size_bytes == 32
    assert WireMessage.of(0, Ack(MessageId(1, 0))).size_bytes == 16
    assert WireMessage.of(0, Hello(0)).size_bytes == 8


def test_kind_must_match_payload():
    with pytest.raises(ValueError):
        WireMessage(Kind.ACK, 0, Hello(0), 8)


def test_relayed_copy_keeps_payload():
    msg = WireMessage.of(1, Request(MessageId(1, 0), GeoPosition(1, 2)))
    hop = msg.relayed_by(5)
    assert hop.sender == 5 and hop.payload == msg.payload and hop.size_bytes == msg.size_bytes
    assert hop.payload.origin == 1
