"""Authenticated shares under a server-held MAC key and Beaver triples.

A value x lives as additive shares with companion MAC shares so that
across both parties the values sum to x and the MACs to alpha*x.  Triples
(A, B, C=AB) are produced offline by a homomorphic protocol in which the
client contributes encrypted shares, the server folds in alpha and the
ciphertext-ciphertext product A*B, and the client decrypts its half.
A multiplication of shared values then costs two openings and a linear
combination; the MAC shares of the same triple authenticate the product
for free.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .drbg import Drbg
from .field import FieldParams
from .slothe import SlotBackend
from .transport import Channel, MsgType, Phase, ProtocolError

ZK_STUB_TAG = b"zkpok-stub-v1"


@dataclass(frozen=True)
class AuthShare:
    value: int
    mac: int

    def add(self, other: "AuthShare", params: FieldParams) -> "AuthShare":
        return AuthShare(params.add(self.value, other.value),
                         params.add(self.mac, other.mac))

    def scale(self, k: int, params: FieldParams) -> "AuthShare":
        return AuthShare(params.mul(k, self.value), params.mul(k, self.mac))

    def add_public(self, c: int, party: int, alpha: int | None,
                   params: FieldParams) -> "AuthShare":
        """Public constants fold into party 0, who holds alpha."""
        if party != 0:
            return self
        if alpha is None:
            raise ValueError("party 0 needs alpha to authenticate a constant")
        return AuthShare(params.add(self.value, c),
                         params.add(self.mac, params.mul(alpha, c)))


@dataclass(frozen=True)
class TripleShare:
    a: AuthShare
    b: AuthShare
    c: AuthShare


class TriplePool:
    """Per-session pool; every triple is handed out exactly once."""

    def __init__(self, triples: list[TripleShare], party: int):
        self._triples = triples
        self._cursor = 0
        self.party = party

    def __len__(self):
        return len(self._triples) - self._cursor

    @property
    def consumed(self) -> int:
        return self._cursor

    def take(self, k: int) -> list[TripleShare]:
        if self._cursor + k > len(self._triples):
            raise ProtocolError(
                f"triple pool exhausted: need {k}, have {len(self)}")
        out = self._triples[self._cursor : self._cursor + k]
        self._cursor += k
        return out

    # -- persistence (offline/online separation) -----------------------------

    MAGIC = b"TPL1"

    def dump(self, path: str, params: FieldParams):
        with open(path, "wb") as fh:
            fh.write(self.MAGIC)
            fh.write(struct.pack("<BIQ", self.party, len(self), params.p))
            for t in self._triples[self._cursor:]:
                for v in (t.a.value, t.a.mac, t.b.value, t.b.mac,
                          t.c.value, t.c.mac):
                    fh.write(v.to_bytes(8, "little"))

    @classmethod
    def load(cls, path: str, params: FieldParams) -> "TriplePool":
        with open(path, "rb") as fh:
            if fh.read(4) != cls.MAGIC:
                raise ValueError("not a triple pool file")
            party, count, p = struct.unpack("<BIQ", fh.read(13))
            if p != params.p:
                raise ValueError("triple pool for a different modulus")
            triples = []
            for _ in range(count):
                vals = [int.from_bytes(fh.read(8), "little") for _ in range(6)]
                triples.append(TripleShare(AuthShare(vals[0], vals[1]),
                                           AuthShare(vals[2], vals[3]),
                                           AuthShare(vals[4], vals[5])))
        return cls(triples, party)


# -- triple generation (server holds alpha, client holds the HE secret key) ---


def gen_triples_server(count: int, alpha: int, channel: Channel,
                       backend: SlotBackend, pk, rng: Drbg) -> TriplePool:
    params = backend.params
    n = backend.n
    triples: list[TripleShare] = []
    remaining = count
    while remaining > 0:
        batch = min(remaining, n)
        stub = channel.recv_expect(MsgType.ZK_STUB)
        if stub.payload != ZK_STUB_TAG:
            raise ProtocolError("missing plaintext-knowledge stub")
        c1 = backend.deserialize_ct(
            channel.recv_expect(MsgType.TRIPLE_CT).payload, pk)
        c2 = backend.deserialize_ct(
            channel.recv_expect(MsgType.TRIPLE_CT).payload, pk)
        a0 = rng.field_vector(params.p, n)
        b0 = rng.field_vector(params.p, n)
        a_mac0 = rng.field_vector(params.p, n)
        b_mac0 = rng.field_vector(params.p, n)
        c_mac0 = rng.field_vector(params.p, n)
        c0 = rng.field_vector(params.p, n)
        alpha_vec = backend.encode([alpha] * n)
        a_full = backend.ct_add(c1, backend.encode(a0))
        b_full = backend.ct_add(c2, backend.encode(b0))
        c3 = backend.ct_sub(backend.sc_mult(alpha_vec, a_full),
                            backend.encode(a_mac0))
        c4 = backend.ct_sub(backend.sc_mult(alpha_vec, b_full),
                            backend.encode(b_mac0))
        ab = backend.ct_mult(a_full, b_full)
        c5 = backend.ct_sub(backend.sc_mult(alpha_vec, ab),
                            backend.encode(c_mac0))
        c6 = backend.ct_sub(ab, backend.encode(c0))
        for ct in (c3, c4, c5, c6):
            channel.send(MsgType.TRIPLE_CT, Phase.TRIPLE,
                         backend.serialize_ct(backend.rerandomize(ct)))
        for i in range(batch):
            triples.append(TripleShare(
                AuthShare(a0[i], a_mac0[i]),
                AuthShare(b0[i], b_mac0[i]),
                AuthShare(c0[i], c_mac0[i])))
        remaining -= batch
    return TriplePool(triples, party=0)


def gen_triples_client(count: int, channel: Channel, backend: SlotBackend,
                       keys, rng: Drbg) -> TriplePool:
    params = backend.params
    n = backend.n
    triples: list[TripleShare] = []
    remaining = count
    while remaining > 0:
        batch = min(remaining, n)
        a1 = rng.field_vector(params.p, n)
        b1 = rng.field_vector(params.p, n)
        channel.send(MsgType.ZK_STUB, Phase.TRIPLE, ZK_STUB_TAG)
        for vec in (a1, b1):
            ct = backend.encrypt(keys, backend.encode(vec))
            channel.send(MsgType.TRIPLE_CT, Phase.TRIPLE,
                         backend.serialize_ct(ct))
        got = [backend.decrypt(keys, backend.deserialize_ct(
            channel.recv_expect(MsgType.TRIPLE_CT).payload, keys))
            for _ in range(4)]
        a_mac1, b_mac1, c_mac1, c1_vals = got
        for i in range(batch):
            triples.append(TripleShare(
                AuthShare(a1[i], a_mac1[i]),
                AuthShare(b1[i], b_mac1[i]),
                AuthShare(c1_vals[i], c_mac1[i])))
        remaining -= batch
    return TriplePool(triples, party=1)


def make_trusted_triples(count: int, alpha: int, params: FieldParams,
                         rng: Drbg) -> tuple[TriplePool, TriplePool]:
    """Dealer-style triples for unit tests; no channel involved."""
    t0, t1 = [], []
    p = params.p
    for _ in range(count):
        a = rng.field_element(p)
        b = rng.field_element(p)
        c = a * b % p
        shares = []
        for v in (a, b, c):
            v0 = rng.field_element(p)
            m0 = rng.field_element(p)
            shares.append(((v0, m0), ((v - v0) % p, (alpha * v - m0) % p)))
        t0.append(TripleShare(*(AuthShare(*s[0]) for s in shares)))
        t1.append(TripleShare(*(AuthShare(*s[1]) for s in shares)))
    return TriplePool(t0, 0), TriplePool(t1, 1)


# -- Beaver combination ----------------------------------------------------------


def beaver_combine(triple: TripleShare, gamma: int, lam: int, party: int,
                   params: FieldParams, alpha: int | None = None) -> AuthShare:
    """Product share from opened gamma = x - A and lam = y - B.

    Returns the authenticated share of x*y: the value uses the triple's
    value shares, the MAC the triple's MAC shares; constant terms land on
    party 0, who holds alpha.
    """
    p = params.p
    value = (triple.c.value + gamma * triple.b.value + lam * triple.a.value) % p
    mac = (triple.c.mac + gamma * triple.b.mac + lam * triple.a.mac) % p
    if party == 0:
        if alpha is None:
            raise ValueError("party 0 needs alpha for the constant term")
        const = gamma * lam % p
        value = (value + const) % p
        mac = (mac + alpha * const) % p
    return AuthShare(value, mac)


def open_and_check(share0: AuthShare, share1: AuthShare, alpha: int,
                   params: FieldParams) -> int:
    """Trusted-test reconstruction; raises if the MAC relation fails."""
    x = params.add(share0.value, share1.value)
    m = params.add(share0.mac, share1.mac)
    if m != params.mul(alpha, x):
        raise AssertionError(f"MAC check failed: {m} != {alpha}*{x}")
    return x


def mac_forgery_harness(params: FieldParams, trials: int, rng: Drbg) -> dict:
    """Tampering simulation: success iff alpha*(x+beta) == alpha*x + beta'.

    beta and beta' are nonzero (a zero tamper is no tamper) and alpha is a
    nonzero key, so the per-trial success probability is exactly 1/(p-1),
    consistent with the 2^-floor(log p) detection bound.
    """
    p = params.p
    successes = 0
    for _ in range(trials):
        alpha = rng.field_nonzero(p)
        beta = rng.field_nonzero(p)
        beta_mac = rng.field_nonzero(p)
        if beta_mac == alpha * beta % p:
            successes += 1
    return {
        "trials": trials,
        "successes": successes,
        "rate": successes / trials if trials else 0.0,
        "expected_rate": 1.0 / (p - 1),
    }
