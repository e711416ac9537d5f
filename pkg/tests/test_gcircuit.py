import itertools

import pytest

from secinf.drbg import Drbg
from secinf.field import FieldParams, TOY_PARAMS
from secinf.gcircuit import (AND, BoolCircuit, CircuitBuilder, GarbledCircuit,
                             build_sign_circuit, color_of, garble, gc_eval,
                             trun)

F44 = FieldParams()


def garbled_input(pairs, bits):
    return [pairs[i][b] for i, b in enumerate(bits)]


def test_single_and_gate_exhaustive():
    b = CircuitBuilder(2)
    b.c.outputs = [b.and_(0, 1)]
    gc, in_pairs, out_pairs = garble(b.c, Drbg(1))
    assert gc.and_count == 1
    for x, y in itertools.product((0, 1), repeat=2):
        labs = gc_eval(b.c, gc, garbled_input(in_pairs, [x, y]))
        assert labs[0] == out_pairs[0][x & y]


def test_xor_only_circuit_has_empty_table():
    b = CircuitBuilder(2)
    b.c.outputs = [b.xor(0, 1)]
    gc, in_pairs, out_pairs = garble(b.c, Drbg(2))
    assert gc.and_count == 0 and gc.serialize_tables() == b""
    for x, y in itertools.product((0, 1), repeat=2):
        labs = gc_eval(b.c, gc, garbled_input(in_pairs, [x, y]))
        assert labs[0] == out_pairs[0][x ^ y]


def test_small_gadgets_exhaustive():
    b = CircuitBuilder(3)
    b.c.outputs = [b.or_(0, 1), b.mux(0, 1, 2), b.not_(2), b.const(1)]
    gc, in_pairs, out_pairs = garble(b.c, Drbg(3))
    for bits in itertools.product((0, 1), repeat=3):
        x, y, z = bits
        want = [x | y, y if x else z, 1 - z, 1]
        labs = gc_eval(b.c, gc, garbled_input(in_pairs, list(bits)))
        assert labs == [out_pairs[i][w] for i, w in enumerate(want)]
        assert b.c.eval_plain(bits) == want


def test_free_xor_offset_consistent():
    b = CircuitBuilder(2)
    b.c.outputs = [b.xor(0, 1), b.and_(0, 1)]
    _, in_pairs, out_pairs = garble(b.c, Drbg(4))
    deltas = {p[0] ^ p[1] for p in in_pairs} | {p[0] ^ p[1] for p in out_pairs}
    assert len(deltas) == 1
    delta = deltas.pop()
    assert color_of(delta) == 1  # opposite colors on every wire


def test_adder_and_ge_gadgets():
    k = 5
    b = CircuitBuilder(2 * k)
    s = b.add(list(range(k)), list(range(k, 2 * k)))
    t, carry = b.add_const(s, 7)
    ge = b.ge_const(list(range(k)), 13)
    b.c.outputs = s + t + [carry, ge]
    for x, y in [(0, 0), (3, 5), (31, 31), (17, 14), (9, 22)]:
        bits = [(x >> i) & 1 for i in range(k)] + [(y >> i) & 1 for i in range(k)]
        out = b.c.eval_plain(bits)
        s_val = sum(out[i] << i for i in range(k + 1))
        t_val = sum(out[k + 1 + i] << i for i in range(k + 1))
        assert s_val == x + y
        assert t_val == (x + y + 7) % (1 << (k + 1))
        assert out[-2] == int(x + y + 7 >= 1 << (k + 1))
        assert out[-1] == int(x >= 13)


def sign_outputs(params, circuit, s0, s1):
    bits = params.bit_decompose(s0) + params.bit_decompose(s1)
    out = circuit.eval_plain(bits)
    k = params.kappa
    u = sum(out[i] << i for i in range(k))
    sign_bits = out[k:]
    return u, sign_bits


def test_sign_circuit_exhaustive_toy():
    params = TOY_PARAMS
    circ = build_sign_circuit(params)
    for s0 in range(params.p):
        for s1 in range(params.p):
            u, sign_bits = sign_outputs(params, circ, s0, s1)
            want_u = (s0 + s1) % params.p
            assert u == want_u
            assert sign_bits[0] == params.sign_of(want_u)
            assert all(b == 0 for b in sign_bits[1:])


def test_sign_circuit_examples():
    params = TOY_PARAMS
    circ = build_sign_circuit(params)
    u, sb = sign_outputs(params, circ, 7, params.p - 2)
    assert (u, sb[0]) == (5, 1)
    u, sb = sign_outputs(params, circ, 0, 0)
    assert (u, sb[0]) == (0, 1)


def test_sign_circuit_random_kappa44():
    params = F44
    circ = build_sign_circuit(params)
    rng = Drbg(b"sign44")
    for _ in range(300):
        s0 = rng.field_element(params.p)
        s1 = rng.field_element(params.p)
        u, sign_bits = sign_outputs(params, circ, s0, s1)
        want = (s0 + s1) % params.p
        assert (u, sign_bits[0]) == (want, params.sign_of(want))


def test_sign_circuit_and_count_bound():
    circ = build_sign_circuit(F44)
    assert circ.and_count <= 200
    gc, _, _ = garble(circ, Drbg(5))
    assert len(gc.serialize_tables()) * 8 == 2 * circ.and_count * 128


def test_garbled_sign_circuit_matches_plain():
    params = TOY_PARAMS
    circ = build_sign_circuit(params)
    rng = Drbg(b"garble-toy")
    for trial in range(40):
        gc, in_pairs, out_pairs = garble(circ, rng)
        s0 = rng.field_element(params.p)
        s1 = rng.field_element(params.p)
        bits = params.bit_decompose(s0) + params.bit_decompose(s1)
        labs = gc_eval(circ, gc, garbled_input(in_pairs, bits))
        want = circ.eval_plain(bits)
        assert labs == [out_pairs[i][w] for i, w in enumerate(want)]


def test_gc_eval_deterministic():
    circ = build_sign_circuit(TOY_PARAMS)
    gc, in_pairs, _ = garble(circ, Drbg(6))
    bits = [0, 1] * TOY_PARAMS.kappa
    labs1 = gc_eval(circ, gc, garbled_input(in_pairs, bits))
    labs2 = gc_eval(circ, gc, garbled_input(in_pairs, bits))
    assert labs1 == labs2


def test_table_tampering_breaks_correctness():
    circ = build_sign_circuit(TOY_PARAMS)
    gc, in_pairs, out_pairs = garble(circ, Drbg(7))
    gc.tables[3] = (gc.tables[3][0] ^ 1, gc.tables[3][1])
    broken = 0
    for s0 in range(0, 17, 5):
        for s1 in range(0, 17, 3):
            bits = TOY_PARAMS.bit_decompose(s0) + TOY_PARAMS.bit_decompose(s1)
            labs = gc_eval(circ, gc, garbled_input(in_pairs, bits))
            want = circ.eval_plain(bits)
            if labs != [out_pairs[i][w] for i, w in enumerate(want)]:
                broken += 1
    assert broken > 0


def test_table_serialization_round_trip():
    circ = build_sign_circuit(TOY_PARAMS)
    gc, _, _ = garble(circ, Drbg(8))
    raw = gc.serialize_tables()
    assert GarbledCircuit.deserialize_tables(raw, 128) == gc.tables
    with pytest.raises(ValueError):
        GarbledCircuit.deserialize_tables(raw[:-1], 128)


def test_trun_last_bits():
    assert trun(0b110101, 3) == 0b101
    assert trun((1 << 127) - 1, 44) == (1 << 44) - 1
