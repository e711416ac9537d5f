import threading

import pytest

from secinf.transport import (MAX_FRAME, MsgType, Phase, ProtocolError,
                              TcpChannel, TransportError, inproc_pair)


def test_round_trip_preserves_payload():
    a, b = inproc_pair()
    payload = bytes(range(256)) * 3
    a.send(MsgType.CLIENT_CT, Phase.LIN, payload)
    frame = b.recv()
    assert frame.payload == payload
    assert frame.msg_type == MsgType.CLIENT_CT
    assert frame.phase == Phase.LIN


def test_phase_buckets_sum_to_total():
    a, b = inproc_pair()
    sizes = [(Phase.GC, 10), (Phase.OT, 20), (Phase.GC, 5), (Phase.AUTH1, 7)]
    for phase, size in sizes:
        a.send(MsgType.GC_TABLE, phase, b"x" * size)
        b.recv()
    rep = a.counter.report()
    assert rep["total_sent"] == sum(s + 6 for _, s in sizes)
    assert rep["sent_by_phase"]["gc"] == 10 + 5 + 12
    assert a.counter.total_sent == b.counter.total_received


def test_recv_expect_raises_on_wrong_type():
    a, b = inproc_pair()
    a.send(MsgType.HELLO, Phase.SETUP, b"\x01")
    with pytest.raises(ProtocolError):
        b.recv_expect(MsgType.GC_TABLE)


def test_oversized_frame_rejected():
    a, _ = inproc_pair()
    with pytest.raises(TransportError):
        a.send(MsgType.GC_TABLE, Phase.GC, b"\x00" * (MAX_FRAME + 1))


def test_hello_version_handshake():
    a, b = inproc_pair()
    t = threading.Thread(target=b.hello, args=(False,))
    t.start()
    a.hello(True)
    t.join()


def test_tcp_channel_matches_inproc():
    got = {}

    def server():
        ch = TcpChannel.listen_one("127.0.0.1", 0, ready=lambda p: got.update(port=p))
        frame = ch.recv()
        ch.send(MsgType.OT_PAYLOAD, Phase.OT, frame.payload[::-1])
        ch.close()

    t = threading.Thread(target=server)
    t.start()
    while "port" not in got:
        pass
    ch = TcpChannel.connect("127.0.0.1", got["port"])
    ch.send(MsgType.OT_CHOICES, Phase.OT, b"hello-tcp")
    reply = ch.recv_expect(MsgType.OT_PAYLOAD)
    assert reply.payload == b"pct-olleh"
    ch.close()
    t.join()
