"""Reliable ordered duplex channel with typed length-prefixed framing.

Frame layout: 4-byte LE payload length, 1-byte message type, 1-byte phase
tag, payload.  Both endpoints keep per-phase byte buckets so protocol
traffic can be attributed to GC / OT / authentication / linear phases;
the in-process and TCP transports are interchangeable and produce the
same transcripts under the same seeds.
"""

from __future__ import annotations

import hashlib
import queue
import socket
import struct
from dataclasses import dataclass

MAX_FRAME = 64 * 1024 * 1024
HEADER = struct.Struct("<IBB")

PROTOCOL_VERSION = 1


class MsgType:
    HELLO = 0x01
    ZK_STUB = 0x02
    CLIENT_CT = 0x03
    MASKED_RESULT_CTS = 0x04
    SETUP_KEY = 0x05
    GC_TABLE = 0x10
    GARBLED_INPUTS = 0x11
    OT_CHOICES = 0x12
    OT_PAYLOAD = 0x13
    LABEL_CTS = 0x14
    OPEN_GAMMA_LAMBDA = 0x15
    CHECK_VECTORS = 0x20
    CHECK_SHARE = 0x21
    CHECK_VERDICT = 0x22
    OUTPUT_SHARE = 0x23
    TRIPLE_CT = 0x30

    _NAMES = None

    @classmethod
    def name(cls, value: int) -> str:
        if cls._NAMES is None:
            cls._NAMES = {v: k for k, v in vars(cls).items()
                          if isinstance(v, int)}
        return cls._NAMES.get(value, f"0x{value:02x}")


class Phase:
    SETUP = 0
    TRIPLE = 1
    LIN = 2
    GC = 3
    OT = 4
    AUTH1 = 5
    AUTH2 = 6
    CHECK = 7
    OUTPUT = 8

    NAMES = {0: "setup", 1: "triple", 2: "lin", 3: "gc", 4: "ot",
             5: "auth1", 6: "auth2", 7: "check", 8: "output"}


class TransportError(Exception):
    pass


class ProtocolError(Exception):
    pass


@dataclass
class Frame:
    msg_type: int
    phase: int
    payload: bytes


class ByteCounter:
    def __init__(self):
        self.sent_by_phase: dict[int, int] = {}
        self.received_by_phase: dict[int, int] = {}
        # payload-only sizes keyed by message type, for traffic-shape audits
        self.payload_by_type: dict[int, int] = {}

    def note_sent(self, phase: int, size: int):
        self.sent_by_phase[phase] = self.sent_by_phase.get(phase, 0) + size

    def note_received(self, phase: int, size: int):
        self.received_by_phase[phase] = self.received_by_phase.get(phase, 0) + size

    def note_payload(self, msg_type: int, size: int):
        self.payload_by_type[msg_type] = self.payload_by_type.get(msg_type, 0) + size

    @property
    def total_sent(self) -> int:
        return sum(self.sent_by_phase.values())

    @property
    def total_received(self) -> int:
        return sum(self.received_by_phase.values())

    def report(self) -> dict:
        return {
            "sent_by_phase": {Phase.NAMES[k]: v
                              for k, v in sorted(self.sent_by_phase.items())},
            "received_by_phase": {Phase.NAMES[k]: v
                                  for k, v in sorted(self.received_by_phase.items())},
            "total_sent": self.total_sent,
            "total_received": self.total_received,
        }


class Channel:
    """One endpoint of a duplex link.  Subclasses move raw frames."""

    def __init__(self, ledger=None):
        self.counter = ByteCounter()
        self.ledger = ledger  # optional OpLedger mirror of byte totals
        self._sent_digest = hashlib.sha256()
        self._recv_digest = hashlib.sha256()

    def transcript_digests(self) -> dict:
        """Running hashes of all framed bytes, for determinism audits."""
        return {"sent": self._sent_digest.hexdigest(),
                "received": self._recv_digest.hexdigest()}

    # subclass interface
    def _send_raw(self, raw: bytes):
        raise NotImplementedError

    def _recv_raw(self) -> bytes:
        raise NotImplementedError

    def send(self, msg_type: int, phase: int, payload: bytes):
        if len(payload) > MAX_FRAME:
            raise TransportError(f"frame of {len(payload)} bytes exceeds limit")
        raw = HEADER.pack(len(payload), msg_type, phase) + payload
        self._send_raw(raw)
        self.counter.note_sent(phase, len(raw))
        self.counter.note_payload(msg_type, len(payload))
        self._sent_digest.update(raw)
        if self.ledger is not None:
            self.ledger.bytes_sent += len(raw)

    def recv(self) -> Frame:
        raw = self._recv_raw()
        if len(raw) < HEADER.size:
            raise TransportError("truncated frame header")
        length, msg_type, phase = HEADER.unpack_from(raw)
        payload = raw[HEADER.size:]
        if length != len(payload):
            raise TransportError("frame length mismatch")
        self.counter.note_received(phase, len(raw))
        self._recv_digest.update(raw)
        if self.ledger is not None:
            self.ledger.bytes_received += len(raw)
        return Frame(msg_type=msg_type, phase=phase, payload=payload)

    def recv_expect(self, msg_type: int) -> Frame:
        frame = self.recv()
        if frame.msg_type != msg_type:
            raise ProtocolError(
                f"expected {MsgType.name(msg_type)}, got {MsgType.name(frame.msg_type)}")
        return frame

    def hello(self, initiate: bool):
        if initiate:
            self.send(MsgType.HELLO, Phase.SETUP, bytes([PROTOCOL_VERSION]))
            frame = self.recv_expect(MsgType.HELLO)
        else:
            frame = self.recv_expect(MsgType.HELLO)
            self.send(MsgType.HELLO, Phase.SETUP, bytes([PROTOCOL_VERSION]))
        if frame.payload != bytes([PROTOCOL_VERSION]):
            raise ProtocolError("protocol version mismatch")

    def close(self):
        pass


class InProcChannel(Channel):
    def __init__(self, inbox: queue.Queue, outbox: queue.Queue, ledger=None):
        super().__init__(ledger)
        self._inbox = inbox
        self._outbox = outbox

    def _send_raw(self, raw: bytes):
        self._outbox.put(raw)

    def _recv_raw(self) -> bytes:
        raw = self._inbox.get()
        if raw is None:
            raise TransportError("channel closed")
        return raw

    def close(self):
        self._outbox.put(None)


def inproc_pair(ledger_a=None, ledger_b=None) -> tuple[InProcChannel, InProcChannel]:
    q_ab: queue.Queue = queue.Queue()
    q_ba: queue.Queue = queue.Queue()
    return (InProcChannel(q_ba, q_ab, ledger_a),
            InProcChannel(q_ab, q_ba, ledger_b))


class TcpChannel(Channel):
    def __init__(self, sock: socket.socket, ledger=None):
        super().__init__(ledger)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._sock = sock

    @classmethod
    def connect(cls, host: str, port: int, ledger=None, timeout=30.0) -> "TcpChannel":
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise TransportError(f"connect to {host}:{port} failed: {exc}") from exc
        sock.settimeout(None)
        return cls(sock, ledger)

    @classmethod
    def listen_one(cls, host: str, port: int, ledger=None, timeout=30.0,
                   ready=None) -> "TcpChannel":
        srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        srv.bind((host, port))
        srv.listen(1)
        srv.settimeout(timeout)
        if ready is not None:
            ready(srv.getsockname()[1])
        try:
            conn, _ = srv.accept()
        except OSError as exc:
            raise TransportError(f"accept on {host}:{port} failed: {exc}") from exc
        finally:
            srv.close()
        conn.settimeout(None)
        return cls(conn, ledger)

    def _send_raw(self, raw: bytes):
        try:
            self._sock.sendall(raw)
        except OSError as exc:
            raise TransportError(str(exc)) from exc

    def _recv_exact(self, k: int) -> bytes:
        buf = bytearray()
        while len(buf) < k:
            chunk = self._sock.recv(k - len(buf))
            if not chunk:
                raise TransportError("peer closed connection")
            buf += chunk
        return bytes(buf)

    def _recv_raw(self) -> bytes:
        head = self._recv_exact(HEADER.size)
        length, _, _ = HEADER.unpack(head)
        if length > MAX_FRAME:
            raise TransportError("oversized frame")
        return head + self._recv_exact(length)

    def close(self):
        try:
            self._sock.close()
        except OSError:
            pass
