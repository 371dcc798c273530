import pytest

from rdspsim.campaign import hop_route
from rdspsim.dsdv import (DsdvRouteEntry, DsdvTable, NoRouteError, UfNodeState, dsdv_advertise,
                          dsdv_next_hop, dsdv_update, expire, uf_client_on_button, uf_forward,
                          uf_server_on_request)
from rdspsim.engine import run
from rdspsim.geo import GeoPosition
from rdspsim.model import (Ack, AdvertEntry, DsdvAdvertisement, Kind, MessageId, Request, Role,
                           WireMessage)
from rdspsim.rdsp import DeliverLocally, SendTo
from rdspsim.scenario import builtin_fig7

HERE = GeoPosition(33.76, 72.36)


def advert(sender, *entries):
    return WireMessage.of(sender, DsdvAdvertisement(tuple(AdvertEntry(*e) for e in entries)))


def test_self_only_advert():
    table = DsdvTable(4)
    msg = dsdv_advertise(table, 1.0)
    assert msg.size_bytes == 8 + 16
    assert msg.payload.entries == (AdvertEntry(4, 4, 0, 2),)
    assert dsdv_advertise(table, 2.0).payload.entries[0].sequence == 4


def test_five_entry_advert_size():
    table = DsdvTable(4, {d: DsdvRouteEntry(d, 3, 2, 2, 0.0) for d in (0, 1, 2, 3)})
    msg = dsdv_advertise(table, 1.0)
    assert len(msg.payload.entries) == 5 and msg.size_bytes == 8 + 80


def test_adopts_direct_neighbor():
    table = dsdv_update(DsdvTable(1), advert(7, (7, 7, 0, 2)), 3.0)
    assert table.entries[7] == DsdvRouteEntry(7, 7, 1, 2, 3.0)


def test_equal_sequence_shorter_route_wins():
    table = DsdvTable(1, {0: DsdvRouteEntry(0, 9, 3, 4, 0.0)})
    dsdv_update(table, advert(5, (0, 2, 1, 4)), 1.0)
    assert table.entries[0].next_hop == 5 and table.entries[0].hop_count == 2


def test_older_sequence_ignored():
    table = DsdvTable(1, {0: DsdvRouteEntry(0, 9, 3, 4, 0.0)})
    dsdv_update(table, advert(5, (0, 0, 0, 2)), 1.0)
    assert table.entries[0].next_hop == 9


def test_own_entry_never_overwritten():
    table = DsdvTable(1)
    dsdv_update(table, advert(5, (1, 5, 1, 100)), 1.0)
    assert table.self_entry.hop_count == 0 and table.self_entry.next_hop == 1


def test_expiry_after_three_periods():
    table = DsdvTable(1, {0: DsdvRouteEntry(0, 5, 2, 4, 10.0)})
    assert expire(table, 13.0, 1.0) == []
    assert expire(table, 13.01, 1.0) == [0]
    assert 1 in table.entries


def test_next_hop_lookup():
    table = DsdvTable(4, {0: DsdvRouteEntry(0, 2, 3, 8, 0.0)})
    assert dsdv_next_hop(table, 0) == 2
    assert dsdv_next_hop(table, 4) == 4
    with pytest.raises(NoRouteError, match="no route to destination"):
        dsdv_next_hop(table, 9)


def test_unconverged_forwarding_drops():
    st = UfNodeState(3, Role.RELAY, HERE, server=0)
    msg = WireMessage.of(1, Request(MessageId(1, 0), HERE))
    assert uf_forward(st, msg).reason == "no route"
    client = UfNodeState(1, Role.CLIENT, HERE, server=0)
    assert uf_client_on_button(client, HERE, 0.5).reason == "client isolated"


def test_ack_at_server_follows_table_and_local_delivery():
    server = UfNodeState(0, Role.SERVER, HERE, server=0)
    server.table.entries[1] = DsdvRouteEntry(1, 2, 4, 6, 0.0)
    alarm, reply = uf_server_on_request(server, WireMessage.of(2, Request(MessageId(1, 0), HERE)), 1.0)
    assert alarm is not None and isinstance(reply, SendTo) and reply.target == 2
    again, _ = uf_server_on_request(server, WireMessage.of(2, Request(MessageId(1, 0), HERE)), 1.1)
    assert again is None
    client = UfNodeState(1, Role.CLIENT, HERE, server=0)
    assert isinstance(uf_forward(client, WireMessage.of(4, Ack(MessageId(1, 0)))), DeliverLocally)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_converged_fig7_takes_short_branch(seed):
    config = builtin_fig7()
    trace = run(config, "uf", seed)
    mid = MessageId.parse(trace.select("press")[0].fields()["id"])
    labels = [config.label(n) for n in hop_route(trace, Kind.REQUEST, mid)]
    assert labels == ["C", "a1", "a2", "a3", "S"]
