"""Deterministic byte generator for all protocol randomness.

SHA-256 in counter mode over a seed.  Deterministic and platform-stable,
which is what the transcript-reproducibility contract needs.  It is not a
vetted DRBG; a deployment would swap in the OS CSPRNG behind the same
interface.
"""

from __future__ import annotations

import hashlib


class Drbg:
    def __init__(self, seed: bytes | int | str, domain: bytes = b""):
        if isinstance(seed, int):
            seed = seed.to_bytes(16, "little", signed=False)
        elif isinstance(seed, str):
            seed = seed.encode()
        self._key = hashlib.sha256(seed + b"|" + domain).digest()
        self._counter = 0
        self._buf = b""

    def fork(self, domain: str) -> "Drbg":
        """Independent stream for a sub-protocol; keeps call sites order-free."""
        return Drbg(self._key, domain.encode())

    def bytes(self, k: int) -> bytes:
        while len(self._buf) < k:
            block = hashlib.sha256(
                self._key + self._counter.to_bytes(8, "little")
            ).digest()
            self._counter += 1
            self._buf += block
        out, self._buf = self._buf[:k], self._buf[k:]
        return out

    def randbits(self, k: int) -> int:
        nbytes = (k + 7) // 8
        v = int.from_bytes(self.bytes(nbytes), "little")
        return v >> (nbytes * 8 - k)

    def randbelow(self, n: int) -> int:
        """Uniform in [0, n) via rejection sampling."""
        k = (n - 1).bit_length() or 1
        while True:
            v = self.randbits(k)
            if v < n:
                return v

    def field_element(self, p: int) -> int:
        return self.randbelow(p)

    def field_nonzero(self, p: int) -> int:
        return 1 + self.randbelow(p - 1)

    def field_vector(self, p: int, k: int) -> list[int]:
        return [self.randbelow(p) for _ in range(k)]

    def bit(self) -> int:
        return self.randbits(1)
