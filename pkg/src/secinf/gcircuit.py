"""Garbling scheme: point-and-permute, free-XOR, half-gates.

Labels are lambda-bit integers.  The color bit is the *first* bit of the
label string (the top bit), the remaining lambda-1 bits are the body; the
global offset delta always has color 1 so the two labels of a wire carry
opposite colors.  Each AND gate costs two table rows of lambda bits; XOR
and NOT are free; constant wires are free and their evaluator-side labels
ride along with the garbled inputs.

The circuit of interest reconstructs u = share0 + share1 mod p from two
kappa-bit shares and emits the bits of u together with a kappa-bit
encoding of sign(u) (one live wire, kappa-1 constant zeros).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .drbg import Drbg
from .field import FieldParams

XOR, AND, NOT, CONST = "XOR", "AND", "NOT", "CONST"


@dataclass
class BoolCircuit:
    n_inputs: int
    gates: list = field(default_factory=list)   # (kind, a, b) wire ids; CONST: (CONST, bit, None)
    outputs: list = field(default_factory=list)

    @property
    def n_wires(self) -> int:
        return self.n_inputs + len(self.gates)

    @property
    def and_count(self) -> int:
        return sum(1 for g in self.gates if g[0] == AND)

    def eval_plain(self, bits) -> list[int]:
        """Clear evaluation; the correctness oracle for garbling."""
        vals = list(bits)
        if len(vals) != self.n_inputs:
            raise ValueError("input width mismatch")
        for kind, a, b in self.gates:
            if kind == XOR:
                vals.append(vals[a] ^ vals[b])
            elif kind == AND:
                vals.append(vals[a] & vals[b])
            elif kind == NOT:
                vals.append(1 - vals[a])
            else:
                vals.append(a)
        return [vals[w] for w in self.outputs]


class CircuitBuilder:
    def __init__(self, n_inputs: int):
        self.c = BoolCircuit(n_inputs=n_inputs)

    def _push(self, kind, a, b=None) -> int:
        self.c.gates.append((kind, a, b))
        return self.c.n_wires - 1

    def xor(self, a: int, b: int) -> int:
        return self._push(XOR, a, b)

    def and_(self, a: int, b: int) -> int:
        return self._push(AND, a, b)

    def not_(self, a: int) -> int:
        return self._push(NOT, a)

    def const(self, bit: int) -> int:
        return self._push(CONST, bit & 1)

    def or_(self, a: int, b: int) -> int:
        return self.xor(self.xor(a, b), self.and_(a, b))

    def mux(self, sel: int, when1: int, when0: int) -> int:
        return self.xor(when0, self.and_(sel, self.xor(when0, when1)))

    def add(self, xs: list[int], ys: list[int]) -> list[int]:
        """Ripple adder, little-endian, returns len+1 bits; 1 AND per bit."""
        if len(xs) != len(ys):
            raise ValueError("width mismatch")
        out = []
        carry = None
        for i, (a, b) in enumerate(zip(xs, ys)):
            if carry is None:
                out.append(self.xor(a, b))
                carry = self.and_(a, b)
            else:
                axc = self.xor(a, carry)
                bxc = self.xor(b, carry)
                out.append(self.xor(axc, b))
                carry = self.xor(carry, self.and_(axc, bxc))
        out.append(carry)
        return out

    def add_const(self, xs: list[int], c: int
                  ) -> tuple[list[int], int]:
        """xs + c over len(xs) bits; returns (sum bits, carry-out wire)."""
        out = []
        carry = None  # None means known-zero
        for i, x in enumerate(xs):
            bit = (c >> i) & 1
            if bit:
                if carry is None:
                    out.append(self.not_(x))
                    carry = x
                else:
                    out.append(self.not_(self.xor(x, carry)))
                    carry = self.or_(x, carry)
            else:
                if carry is None:
                    out.append(x)
                else:
                    out.append(self.xor(x, carry))
                    carry = self.and_(x, carry)
        if carry is None:
            carry = self.const(0)
        return out, carry

    def ge_const(self, xs: list[int], c: int) -> int:
        """Wire that is 1 iff the little-endian value of xs >= c.

        Carry chain of xs + (2^len - c); sum bits are never materialized.
        """
        add = (1 << len(xs)) - c
        carry = None
        for i, x in enumerate(xs):
            bit = (add >> i) & 1
            if bit:
                carry = x if carry is None else self.or_(x, carry)
            else:
                carry = None if carry is None else self.and_(x, carry)
        return self.const(0) if carry is None else carry


def build_sign_circuit(params: FieldParams) -> BoolCircuit:
    """Inputs: share0 bits then share1 bits (kappa each, little-endian).
    Outputs: u = share0+share1 mod p (kappa bits), then the kappa-bit sign
    encoding: wire kappa holds sign(u), the rest are constant 0.
    """
    k = params.kappa
    b = CircuitBuilder(2 * k)
    a_bits = list(range(k))
    b_bits = list(range(k, 2 * k))
    s = b.add(a_bits, b_bits)                      # kappa+1 bits, s < 2p
    t, ge = b.add_const(s, (1 << (k + 1)) - params.p)  # carry-out: s >= p
    u = [b.mux(ge, t[i], s[i]) for i in range(k)]
    sign = b.not_(b.ge_const(u, params.half))      # 1 iff u < ceil(p/2)
    b.c.outputs = u + [sign] + [b.const(0) for _ in range(k - 1)]
    return b.c


# -- garbling -------------------------------------------------------------------


def _hash_label(label: int, tweak: int, lam_bytes: int) -> int:
    h = hashlib.sha256(label.to_bytes(lam_bytes, "little")
                       + tweak.to_bytes(8, "little")).digest()
    return int.from_bytes(h[:lam_bytes], "little")


@dataclass
class GarbledCircuit:
    lam: int
    tables: list            # (row_g, row_e) per AND gate in topological order
    const_labels: dict      # wire id -> evaluator-side label
    n_inputs: int
    n_outputs: int

    @property
    def and_count(self) -> int:
        return len(self.tables)

    def serialize_tables(self) -> bytes:
        """Exactly 2 * e * lam bits."""
        nb = self.lam // 8
        out = bytearray()
        for tg, te in self.tables:
            out += tg.to_bytes(nb, "little") + te.to_bytes(nb, "little")
        return bytes(out)

    @staticmethod
    def deserialize_tables(raw: bytes, lam: int) -> list:
        nb = lam // 8
        if len(raw) % (2 * nb):
            raise ValueError("malformed garbled table payload")
        rows = []
        for i in range(0, len(raw), 2 * nb):
            tg = int.from_bytes(raw[i : i + nb], "little")
            te = int.from_bytes(raw[i + nb : i + 2 * nb], "little")
            rows.append((tg, te))
        return rows


def garble(circuit: BoolCircuit, rng: Drbg, lam: int = 128):
    """Returns (GarbledCircuit, input label pairs, output label pairs)."""
    nb = lam // 8
    color_bit = 1 << (lam - 1)
    delta = rng.randbits(lam) | color_bit
    labels0: list[int] = []    # the 0-label of every wire
    for _ in range(circuit.n_inputs):
        labels0.append(rng.randbits(lam))
    tables = []
    const_labels = {}
    tweak = 0
    for kind, a, bb in circuit.gates:
        wire = len(labels0)
        if kind == XOR:
            labels0.append(labels0[a] ^ labels0[bb])
        elif kind == NOT:
            labels0.append(labels0[a] ^ delta)
        elif kind == CONST:
            w0 = rng.randbits(lam)
            labels0.append(w0)
            const_labels[wire] = w0 ^ (delta if a else 0)
        else:
            a0 = labels0[a]
            b0 = labels0[bb]
            pa = a0 >> (lam - 1)
            pb = b0 >> (lam - 1)
            ha0 = _hash_label(a0, tweak, nb)
            ha1 = _hash_label(a0 ^ delta, tweak, nb)
            tg = ha0 ^ ha1 ^ (delta if pb else 0)
            wg0 = ha0 ^ (tg if pa else 0)
            hb0 = _hash_label(b0, tweak + 1, nb)
            hb1 = _hash_label(b0 ^ delta, tweak + 1, nb)
            te = hb0 ^ hb1 ^ a0
            we0 = hb0 ^ ((te ^ a0) if pb else 0)
            labels0.append(wg0 ^ we0)
            tables.append((tg, te))
            tweak += 2
    gc = GarbledCircuit(lam=lam, tables=tables, const_labels=const_labels,
                        n_inputs=circuit.n_inputs,
                        n_outputs=len(circuit.outputs))
    in_pairs = [(labels0[w], labels0[w] ^ delta)
                for w in range(circuit.n_inputs)]
    out_pairs = [(labels0[w], labels0[w] ^ delta) for w in circuit.outputs]
    return gc, in_pairs, out_pairs


def gc_eval(circuit: BoolCircuit, gc: GarbledCircuit,
            input_labels: list[int]) -> list[int]:
    """Evaluate on one label per input wire; returns output wire labels."""
    if len(input_labels) != circuit.n_inputs:
        raise ValueError("one label per input wire required")
    lam = gc.lam
    nb = lam // 8
    labels = list(input_labels)
    and_idx = 0
    tweak = 0
    for kind, a, bb in circuit.gates:
        wire = len(labels)
        if kind == XOR:
            labels.append(labels[a] ^ labels[bb])
        elif kind == NOT:
            labels.append(labels[a])
        elif kind == CONST:
            try:
                labels.append(gc.const_labels[wire])
            except KeyError:
                raise ValueError("malformed garbled circuit: missing const label")
        else:
            if and_idx >= len(gc.tables):
                raise ValueError("malformed garbled circuit: missing table row")
            tg, te = gc.tables[and_idx]
            la, lb = labels[a], labels[bb]
            sa = la >> (lam - 1)
            sb = lb >> (lam - 1)
            wg = _hash_label(la, tweak, nb) ^ (tg if sa else 0)
            we = _hash_label(lb, tweak + 1, nb) ^ ((te ^ la) if sb else 0)
            labels.append(wg ^ we)
            and_idx += 1
            tweak += 2
    return [labels[w] for w in circuit.outputs]


def color_of(label: int, lam: int = 128) -> int:
    """The first bit xi of the label string."""
    return label >> (lam - 1)


def body_of(label: int, lam: int = 128) -> int:
    """The lambda-1 bit body zeta."""
    return label & ((1 << (lam - 1)) - 1)


def trun(bits: int, h: int) -> int:
    """Last h bits of a bit string held as an integer."""
    return bits & ((1 << h) - 1)
