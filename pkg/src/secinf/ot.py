"""1-out-of-2 oblivious transfer, kappa instances of n-bit messages.

Two interchangeable implementations:

* ``DealerOt`` - INSECURE test dealer.  A trusted in-process setup hands
  both endpoints correlated pads (Beaver's OT precomputation): the sender
  holds random (r0, r1), the receiver holds a random bit c and r_c.  The
  online phase derandomizes with one bit per instance, so the unchosen
  message never leaves the sender in any recoverable form and receiver
  transcripts are independent of it.  Deterministic under a seed; for
  protocol tests only.

* ``BaseOt`` - Diffie-Hellman base OT (Chou-Orlandi shape) over the
  RFC 3526 2048-bit MODP group, semi-honest sender / malicious receiver.
  Receiver misbehavior beyond OT is caught by the protocol-level
  consistency check, not here.

The reference communication volume kappa*lambda + 2n bits from the
OT-extension literature is reported alongside measured traffic, not
enforced.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .drbg import Drbg
from .transport import Channel, MsgType, Phase, ProtocolError

# RFC 3526 group 14: 2048-bit MODP prime, generator 2
MODP_P = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF",
    16,
)
MODP_G = 2
MODP_BYTES = 256


def _kdf(group_elem: int, index: int, nbytes: int) -> bytes:
    seed = group_elem.to_bytes(MODP_BYTES, "big") + index.to_bytes(4, "big")
    out = b""
    ctr = 0
    while len(out) < nbytes:
        out += hashlib.sha256(seed + ctr.to_bytes(4, "big")).digest()
        ctr += 1
    return out[:nbytes]


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def reference_comm_bits(kappa: int, n_bits: int, lam: int) -> int:
    """kappa*lambda + 2n bits, the extension-based figure kept for reporting."""
    return kappa * lam + 2 * n_bits


@dataclass
class DealerState:
    pads: list          # sender: [(r0, r1)]; receiver: [(c, r_c)]
    msg_bytes: int


class DealerOt:
    """Correlated-pad OT from an in-process trusted dealer.  Test use only."""

    name = "dealer"

    @staticmethod
    def setup(seed, count: int, msg_bytes: int) -> tuple[DealerState, DealerState]:
        rng = Drbg(seed, b"ot-dealer")
        send_pads, recv_pads = [], []
        for _ in range(count):
            r0 = rng.bytes(msg_bytes)
            r1 = rng.bytes(msg_bytes)
            c = rng.bit()
            send_pads.append((r0, r1))
            recv_pads.append((c, (r0, r1)[c]))
        return (DealerState(send_pads, msg_bytes),
                DealerState(recv_pads, msg_bytes))

    @staticmethod
    def send(state: DealerState, pairs, channel: Channel, phase: int = Phase.OT):
        if len(pairs) > len(state.pads):
            raise ProtocolError("dealer pads exhausted")
        flips = channel.recv_expect(MsgType.OT_CHOICES).payload
        if len(flips) != len(pairs):
            raise ProtocolError("OT choice count mismatch")
        out = bytearray()
        for i, (m0, m1) in enumerate(pairs):
            r0, r1 = state.pads[i]
            if len(m0) != state.msg_bytes or len(m1) != state.msg_bytes:
                raise ProtocolError("OT message width mismatch")
            # flip says the receiver's pad bit differs from its choice bit
            if flips[i]:
                r0, r1 = r1, r0
            out += _xor(m0, r0) + _xor(m1, r1)
        state.pads = state.pads[len(pairs):]
        channel.send(MsgType.OT_PAYLOAD, phase, bytes(out))

    @staticmethod
    def recv(state: DealerState, choices, channel: Channel,
             phase: int = Phase.OT) -> list[bytes]:
        if len(choices) > len(state.pads):
            raise ProtocolError("dealer pads exhausted")
        flips = bytes((state.pads[i][0] ^ (b & 1)) for i, b in enumerate(choices))
        channel.send(MsgType.OT_CHOICES, phase, flips)
        payload = channel.recv_expect(MsgType.OT_PAYLOAD).payload
        k = state.msg_bytes
        if len(payload) != 2 * k * len(choices):
            raise ProtocolError("OT payload size mismatch")
        out = []
        for i, b in enumerate(choices):
            pad = state.pads[i][1]
            off = 2 * k * i + (b & 1) * k
            out.append(_xor(payload[off : off + k], pad))
        state.pads = state.pads[len(choices):]
        return out


class OtSenderSession:
    """Mode-dispatching sender endpoint bound to one channel."""

    def __init__(self, channel: Channel, mode: str = "dealer",
                 dealer_state: DealerState | None = None,
                 rng: Drbg | None = None):
        if mode not in ("dealer", "base"):
            raise ValueError(f"unknown OT mode {mode!r}")
        if mode == "dealer" and dealer_state is None:
            raise ValueError("dealer mode needs a dealer state")
        self.channel = channel
        self.mode = mode
        self.state = dealer_state
        self.rng = rng

    def send(self, pairs, phase: int = Phase.OT):
        if self.mode == "dealer":
            DealerOt.send(self.state, pairs, self.channel, phase)
        else:
            BaseOt.send(self.rng, pairs, self.channel, phase)


class OtReceiverSession:
    def __init__(self, channel: Channel, mode: str = "dealer",
                 dealer_state: DealerState | None = None,
                 rng: Drbg | None = None):
        if mode not in ("dealer", "base"):
            raise ValueError(f"unknown OT mode {mode!r}")
        if mode == "dealer" and dealer_state is None:
            raise ValueError("dealer mode needs a dealer state")
        self.channel = channel
        self.mode = mode
        self.state = dealer_state
        self.rng = rng

    def recv(self, choices, msg_bytes: int, phase: int = Phase.OT) -> list[bytes]:
        if self.mode == "dealer":
            return DealerOt.recv(self.state, choices, self.channel, phase)
        return BaseOt.recv(self.rng, choices, msg_bytes, self.channel, phase)


class BaseOt:
    """Group-based base OT; one exponentiation per side per instance."""

    name = "base"

    @staticmethod
    def send(rng: Drbg, pairs, channel: Channel, phase: int = Phase.OT):
        a = 2 + rng.randbelow(MODP_P - 3)
        A = pow(MODP_G, a, MODP_P)
        channel.send(MsgType.OT_PAYLOAD, phase, A.to_bytes(MODP_BYTES, "big"))
        blob = channel.recv_expect(MsgType.OT_CHOICES).payload
        if len(blob) != MODP_BYTES * len(pairs):
            raise ProtocolError("base OT receiver payload size mismatch")
        A_inv = pow(A, MODP_P - 2, MODP_P)
        out = bytearray()
        for i, (m0, m1) in enumerate(pairs):
            B = int.from_bytes(blob[i * MODP_BYTES : (i + 1) * MODP_BYTES], "big")
            if not 1 < B < MODP_P:
                raise ProtocolError("base OT group element out of range")
            k0 = pow(B, a, MODP_P)
            k1 = pow(B * A_inv % MODP_P, a, MODP_P)
            out += _xor(m0, _kdf(k0, i, len(m0)))
            out += _xor(m1, _kdf(k1, i, len(m1)))
        channel.send(MsgType.OT_PAYLOAD, phase, bytes(out))

    @staticmethod
    def recv(rng: Drbg, choices, msg_bytes: int, channel: Channel,
             phase: int = Phase.OT) -> list[bytes]:
        A = int.from_bytes(channel.recv_expect(MsgType.OT_PAYLOAD).payload, "big")
        if not 1 < A < MODP_P:
            raise ProtocolError("base OT group element out of range")
        xs = []
        blob = bytearray()
        for b in choices:
            x = 2 + rng.randbelow(MODP_P - 3)
            xs.append(x)
            B = pow(MODP_G, x, MODP_P)
            if b & 1:
                B = B * A % MODP_P
            blob += B.to_bytes(MODP_BYTES, "big")
        channel.send(MsgType.OT_CHOICES, phase, bytes(blob))
        payload = channel.recv_expect(MsgType.OT_PAYLOAD).payload
        if len(payload) != 2 * msg_bytes * len(choices):
            raise ProtocolError("base OT payload size mismatch")
        out = []
        for i, (b, x) in enumerate(zip(choices, xs)):
            k = pow(A, x, MODP_P)
            off = 2 * msg_bytes * i + (b & 1) * msg_bytes
            out.append(_xor(payload[off : off + msg_bytes], _kdf(k, i, msg_bytes)))
        return out
