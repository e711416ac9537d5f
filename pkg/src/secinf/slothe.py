"""Slot-semantics homomorphic backend.

An exact F_p SIMD vector machine: a "ciphertext" is a logical wrapper
around n slot values, every homomorphic call is costed on an OpLedger,
and decryption requires the secret handle.  All protocol-level claims
checked in this artifact are algebraic (slot values and operation
counts), so the backend carries no noise model.  The interface is small
on purpose: a lattice implementation replaces this class and the wire
codec, nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .drbg import Drbg
from .field import FieldParams


@dataclass
class OpLedger:
    """Exact counters for homomorphic work and framed traffic."""

    rotations: int = 0
    sc_mults: int = 0
    ct_adds: int = 0
    ct_mults: int = 0
    bytes_sent: int = 0
    bytes_received: int = 0

    def snapshot(self) -> dict:
        return {
            "rotations": self.rotations,
            "sc_mults": self.sc_mults,
            "ct_adds": self.ct_adds,
            "ct_mults": self.ct_mults,
            "bytes_sent": self.bytes_sent,
            "bytes_received": self.bytes_received,
        }

    def reset(self):
        self.rotations = 0
        self.sc_mults = 0
        self.ct_adds = 0
        self.ct_mults = 0
        self.bytes_sent = 0
        self.bytes_received = 0

    def delta_since(self, before: dict) -> dict:
        now = self.snapshot()
        return {k: now[k] - before[k] for k in now}


@dataclass(frozen=True)
class HeKeys:
    """Opaque key handles; the exact backend only checks identity."""

    public: bytes
    secret: bytes | None = None

    def public_only(self) -> "HeKeys":
        return HeKeys(public=self.public)


@dataclass(frozen=True)
class PackedVector:
    """n slot values plus the logical encryption flag.  Immutable."""

    slots: tuple
    is_ciphertext: bool
    key_id: bytes | None = None

    def __len__(self):
        return len(self.slots)


CT_WIRE_TAG = 0x01


class SlotBackend:
    """keygen / enc / dec / rot / sc_mult / ct_add / ct_mult / rerandomize.

    One backend instance per protocol endpoint; the ledger is single-writer.
    """

    def __init__(self, params: FieldParams, n: int, ledger: OpLedger | None = None):
        if n < 1 or n & (n - 1):
            raise ValueError("slot count must be a power of two")
        self.params = params
        self.n = n
        self.ledger = ledger if ledger is not None else OpLedger()

    # -- keys -----------------------------------------------------------------

    def keygen(self, rng: Drbg) -> HeKeys:
        tag = rng.bytes(16)
        return HeKeys(public=b"pk|" + tag, secret=b"sk|" + tag)

    # -- encoding / encryption -------------------------------------------------

    def encode(self, values) -> PackedVector:
        vals = list(values)
        if len(vals) > self.n:
            raise ValueError(f"{len(vals)} values exceed {self.n} slots")
        vals += [0] * (self.n - len(vals))
        return PackedVector(slots=tuple(v % self.params.p for v in vals),
                            is_ciphertext=False)

    def encrypt(self, pk: HeKeys, plain: PackedVector) -> PackedVector:
        if plain.is_ciphertext:
            raise ValueError("already a ciphertext")
        if len(plain) != self.n:
            raise ValueError("wrong slot count")
        return PackedVector(slots=plain.slots, is_ciphertext=True,
                            key_id=pk.public)

    def decrypt(self, keys: HeKeys, ct: PackedVector) -> list[int]:
        if not ct.is_ciphertext:
            raise ValueError("not a ciphertext")
        if keys.secret is None:
            raise ValueError("decrypt requires the secret handle")
        if ct.key_id != keys.public:
            raise ValueError("ciphertext under a different key")
        return list(ct.slots)

    def rerandomize(self, ct: PackedVector) -> PackedVector:
        """Function-privacy stand-in; a real backend refreshes randomness here."""
        self._need_ct(ct)
        return ct

    # -- homomorphic ops ---------------------------------------------------------

    def rot(self, ct: PackedVector, j: int) -> PackedVector:
        """Cyclic left rotation by j slots; negative j rotates right."""
        self._need_ct(ct)
        if not -self.n < j < self.n:
            raise ValueError("rotation offset out of range")
        if j == 0:
            return ct
        self.ledger.rotations += 1
        n = self.n
        s = ct.slots
        k = j % n
        return PackedVector(slots=s[k:] + s[:k], is_ciphertext=True,
                            key_id=ct.key_id)

    def sc_mult(self, plain: PackedVector, ct: PackedVector) -> PackedVector:
        if plain.is_ciphertext:
            raise ValueError("sc_mult plaintext operand is a ciphertext; use ct_mult")
        self._need_ct(ct)
        self._need_len(plain)
        self.ledger.sc_mults += 1
        p = self.params.p
        slots = tuple(a * b % p for a, b in zip(plain.slots, ct.slots))
        return PackedVector(slots=slots, is_ciphertext=True, key_id=ct.key_id)

    def ct_add(self, a: PackedVector, b: PackedVector) -> PackedVector:
        if not (a.is_ciphertext or b.is_ciphertext):
            raise ValueError("ct_add needs at least one ciphertext")
        self._need_len(a)
        self._need_len(b)
        if a.is_ciphertext and b.is_ciphertext:
            # plaintext offsets fold into a ciphertext for free; only
            # ciphertext-ciphertext addition is costed
            self.ledger.ct_adds += 1
        p = self.params.p
        slots = tuple((x + y) % p for x, y in zip(a.slots, b.slots))
        return PackedVector(slots=slots, is_ciphertext=True,
                            key_id=a.key_id if a.is_ciphertext else b.key_id)

    def ct_sub(self, a: PackedVector, b: PackedVector) -> PackedVector:
        if not (a.is_ciphertext or b.is_ciphertext):
            raise ValueError("ct_sub needs at least one ciphertext")
        self._need_len(a)
        self._need_len(b)
        if a.is_ciphertext and b.is_ciphertext:
            self.ledger.ct_adds += 1
        p = self.params.p
        slots = tuple((x - y) % p for x, y in zip(a.slots, b.slots))
        return PackedVector(slots=slots, is_ciphertext=True,
                            key_id=a.key_id if a.is_ciphertext else b.key_id)

    def ct_mult(self, a: PackedVector, b: PackedVector) -> PackedVector:
        if not (a.is_ciphertext and b.is_ciphertext):
            raise ValueError("ct_mult needs two ciphertexts")
        self._need_len(a)
        self._need_len(b)
        self.ledger.ct_mults += 1
        p = self.params.p
        slots = tuple(x * y % p for x, y in zip(a.slots, b.slots))
        return PackedVector(slots=slots, is_ciphertext=True, key_id=a.key_id)

    # -- wire codec ------------------------------------------------------------

    def serialize_ct(self, ct: PackedVector) -> bytes:
        self._need_ct(ct)
        out = bytearray([CT_WIRE_TAG])
        out += len(ct.slots).to_bytes(4, "little")
        for v in ct.slots:
            out += v.to_bytes(8, "little")
        return bytes(out)

    def deserialize_ct(self, raw: bytes, pk: HeKeys) -> PackedVector:
        if not raw or raw[0] != CT_WIRE_TAG:
            raise ValueError("bad ciphertext tag")
        count = int.from_bytes(raw[1:5], "little")
        if count != self.n or len(raw) != 5 + 8 * count:
            raise ValueError("bad ciphertext payload size")
        slots = tuple(
            int.from_bytes(raw[5 + 8 * i : 13 + 8 * i], "little")
            for i in range(count)
        )
        if any(v >= self.params.p for v in slots):
            raise ValueError("slot value out of range")
        return PackedVector(slots=slots, is_ciphertext=True, key_id=pk.public)

    # -- helpers -----------------------------------------------------------------

    def _need_ct(self, v: PackedVector):
        if not v.is_ciphertext:
            raise ValueError("operation requires a ciphertext")

    def _need_len(self, v: PackedVector):
        if len(v) != self.n:
            raise ValueError("slot count mismatch")
