"""Prime-field arithmetic with the signed-representative convention.

Every value in the protocol stack is a canonical integer in [0, p).
Elements in [0, ceil(p/2)) stand for themselves; elements in
[ceil(p/2), p) stand for value - p.  Bit indices follow the
little-endian convention x = sum(bits[i] * 2**i).
"""

from __future__ import annotations

from dataclasses import dataclass, field

# 44-bit prime, congruent to 1 mod 2*4096 so an NTT-based backend could
# adopt it unchanged.  2**44 - 16383.
DEFAULT_MODULUS = 17592186028033
DEFAULT_LAMBDA = 128

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class FieldParams:
    """Field modulus p, bit width kappa = ceil(log2 p), label width lambda."""

    p: int = DEFAULT_MODULUS
    lam: int = DEFAULT_LAMBDA
    kappa: int = field(init=False)
    half: int = field(init=False)  # ceil(p/2); threshold of the sign split

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"modulus {self.p} is not prime")
        kappa = (self.p - 1).bit_length()
        if self.lam < 2 * kappa:
            raise ValueError(f"lambda {self.lam} < 2*kappa {2 * kappa}")
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "half", (self.p + 1) // 2)

    # -- basic ops (operands must already be canonical) --------------------

    def add(self, a: int, b: int) -> int:
        s = a + b
        return s - self.p if s >= self.p else s

    def sub(self, a: int, b: int) -> int:
        s = a - b
        return s + self.p if s < 0 else s

    def mul(self, a: int, b: int) -> int:
        return a * b % self.p

    def neg(self, a: int) -> int:
        return self.p - a if a else 0

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero in F_p")
        return pow(a, self.p - 2, self.p)

    def reduce(self, a: int) -> int:
        return a % self.p

    # -- signed representatives --------------------------------------------

    def to_signed(self, a: int) -> int:
        return a if a < self.half else a - self.p

    def from_signed(self, s: int) -> int:
        return s % self.p

    def sign_of(self, a: int) -> int:
        """1 iff the signed representative of a is >= 0 (zero counts as positive)."""
        return 1 if a < self.half else 0

    def relu(self, a: int) -> int:
        return a if a < self.half else 0

    # -- bit decomposition ---------------------------------------------------

    def bit_decompose(self, a: int) -> list[int]:
        """kappa bits, index 0 = least significant."""
        return [(a >> i) & 1 for i in range(self.kappa)]

    def bit_recompose(self, bits) -> int:
        v = 0
        for i, b in enumerate(bits):
            v |= (b & 1) << i
        return v % self.p

    # -- vector helpers -------------------------------------------------------

    def vec_add(self, xs, ys) -> list[int]:
        return [self.add(x, y) for x, y in zip(xs, ys, strict=True)]

    def vec_sub(self, xs, ys) -> list[int]:
        return [self.sub(x, y) for x, y in zip(xs, ys, strict=True)]

    def vec_scale(self, c: int, xs) -> list[int]:
        return [c * x % self.p for x in xs]

    def dot(self, xs, ys) -> int:
        return sum(x * y for x, y in zip(xs, ys, strict=True)) % self.p

    def matvec(self, rows, xs) -> list[int]:
        """Direct N*t oracle; rows of N as canonical int lists."""
        return [self.dot(r, xs) for r in rows]

    # -- serialization ---------------------------------------------------------

    def encode(self, a: int) -> bytes:
        return a.to_bytes(8, "little")

    def decode(self, raw: bytes) -> int:
        v = int.from_bytes(raw, "little")
        if v >= self.p:
            raise ValueError("encoded element out of range")
        return v

    def encode_vec(self, xs) -> bytes:
        return b"".join(x.to_bytes(8, "little") for x in xs)

    def decode_vec(self, raw: bytes) -> list[int]:
        if len(raw) % 8:
            raise ValueError("field vector payload not a multiple of 8 bytes")
        out = []
        for i in range(0, len(raw), 8):
            v = int.from_bytes(raw[i : i + 8], "little")
            if v >= self.p:
                raise ValueError("encoded element out of range")
            out.append(v)
        return out


TOY_PARAMS = FieldParams(p=17)
