import pytest

from secinf.drbg import Drbg
from secinf.field import FieldParams, TOY_PARAMS
from secinf.slothe import OpLedger, SlotBackend


def make_backend(n=8, params=TOY_PARAMS):
    return SlotBackend(params, n, OpLedger())


def test_encrypt_decrypt_round_trip():
    be = make_backend()
    rng = Drbg(7)
    keys = be.keygen(rng)
    for _ in range(100):
        vals = rng.field_vector(be.params.p, be.n)
        ct = be.encrypt(keys, be.encode(vals))
        assert be.decrypt(keys, ct) == vals
    assert be.ledger.snapshot()["rotations"] == 0
    assert be.ledger.sc_mults == be.ledger.ct_adds == be.ledger.ct_mults == 0


def test_decrypt_needs_secret_and_matching_key():
    be = make_backend()
    keys = be.keygen(Drbg(1))
    other = be.keygen(Drbg(2))
    ct = be.encrypt(keys, be.encode([1] * 8))
    with pytest.raises(ValueError):
        be.decrypt(keys.public_only(), ct)
    with pytest.raises(ValueError):
        be.decrypt(other, ct)


def test_rot_semantics():
    be = make_backend(4)
    keys = be.keygen(Drbg(0))
    ct = be.encrypt(keys, be.encode([1, 2, 3, 4]))
    assert be.decrypt(keys, be.rot(ct, 1)) == [2, 3, 4, 1]
    assert be.ledger.rotations == 1
    assert be.rot(ct, 0) is ct
    assert be.ledger.rotations == 1  # zero rotation is free
    assert be.decrypt(keys, be.rot(ct, -1)) == [4, 1, 2, 3]
    with pytest.raises(ValueError):
        be.rot(ct, 4)


def test_rot_composition():
    be = make_backend(8)
    keys = be.keygen(Drbg(3))
    rng = Drbg(4)
    for _ in range(50):
        v = rng.field_vector(be.params.p, 8)
        a = rng.randbelow(8)
        b = rng.randbelow(8)
        ct = be.encrypt(keys, be.encode(v))
        lhs = be.decrypt(keys, be.rot(be.rot(ct, a), b))
        rhs = [v[(i + a + b) % 8] for i in range(8)]
        assert lhs == rhs


def test_sc_mult():
    be = make_backend(8)
    keys = be.keygen(Drbg(5))
    ct = be.encrypt(keys, be.encode([2, 3, 0, 0, 0, 0, 0, 0]))
    out = be.sc_mult(be.encode([5, 7, 0, 0, 0, 0, 0, 0]), ct)
    assert be.decrypt(keys, out)[:2] == [10, 21 % 17]
    assert be.ledger.sc_mults == 1
    ones = be.sc_mult(be.encode([1] * 8), ct)
    assert be.decrypt(keys, ones) == be.decrypt(keys, ct)
    with pytest.raises(ValueError):
        be.sc_mult(ct, ct)


def test_ct_add_costing():
    be = make_backend()
    keys = be.keygen(Drbg(6))
    a = be.encrypt(keys, be.encode([1] * 8))
    b = be.encrypt(keys, be.encode([2] * 8))
    plain = be.encode([3] * 8)
    be.ct_add(a, b)
    assert be.ledger.ct_adds == 1
    be.ct_add(a, plain)  # ciphertext+plaintext is free by convention
    assert be.ledger.ct_adds == 1
    assert be.decrypt(keys, be.ct_add(a, plain)) == [4] * 8


def test_ct_mult():
    be = make_backend()
    keys = be.keygen(Drbg(8))
    rng = Drbg(9)
    va = rng.field_vector(17, 8)
    vb = rng.field_vector(17, 8)
    a = be.encrypt(keys, be.encode(va))
    b = be.encrypt(keys, be.encode(vb))
    out = be.ct_mult(a, b)
    assert be.decrypt(keys, out) == [x * y % 17 for x, y in zip(va, vb)]
    assert be.ledger.ct_mults == 1
    ones = be.encrypt(keys, be.encode([1] * 8))
    assert be.decrypt(keys, be.ct_mult(a, ones)) == va
    with pytest.raises(ValueError):
        be.ct_mult(a, be.encode([1] * 8))


def test_program_exactness_vs_raw_slots():
    """Any rot/scmult/add/ctmult program decrypts to the same program on lists."""
    be = make_backend(8)
    keys = be.keygen(Drbg(10))
    rng = Drbg(11)
    p = be.params.p
    for _ in range(25):
        v = rng.field_vector(p, 8)
        w = rng.field_vector(p, 8)
        m = rng.field_vector(p, 8)
        j = rng.randbelow(8)
        ct = be.ct_add(be.sc_mult(be.encode(m), be.rot(be.encrypt(keys, be.encode(v)), j)),
                       be.encrypt(keys, be.encode(w)))
        expect = [(m[i] * v[(i + j) % 8] + w[i]) % p for i in range(8)]
        assert be.decrypt(keys, ct) == expect


def test_wire_codec_round_trip():
    be = make_backend()
    keys = be.keygen(Drbg(12))
    ct = be.encrypt(keys, be.encode(list(range(8))))
    raw = be.serialize_ct(ct)
    assert raw[0] == 0x01
    back = be.deserialize_ct(raw, keys)
    assert back.slots == ct.slots
    with pytest.raises(ValueError):
        be.deserialize_ct(b"\x02" + raw[1:], keys)


def test_rerandomize_is_semantic_noop():
    be = make_backend()
    keys = be.keygen(Drbg(13))
    ct = be.encrypt(keys, be.encode([5] * 8))
    before = be.ledger.snapshot()
    assert be.rerandomize(ct).slots == ct.slots
    assert be.ledger.snapshot() == before
