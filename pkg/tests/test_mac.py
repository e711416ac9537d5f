import math
import threading

import pytest

from secinf.drbg import Drbg
from secinf.field import FieldParams, TOY_PARAMS
from secinf.mac import (AuthShare, TriplePool, beaver_combine,
                        gen_triples_client, gen_triples_server,
                        mac_forgery_harness, make_trusted_triples,
                        open_and_check)
from secinf.slothe import OpLedger, SlotBackend
from secinf.transport import ProtocolError, inproc_pair

F44 = FieldParams()


def gen_over_channel(count, alpha, params, n, seed=1):
    led0, led1 = OpLedger(), OpLedger()
    be0 = SlotBackend(params, n, led0)
    be1 = SlotBackend(params, n, led1)
    keys = be1.keygen(Drbg(seed, b"keys"))
    ch0, ch1 = inproc_pair(led0, led1)
    out = {}

    def server():
        out[0] = gen_triples_server(count, alpha, ch0, be0,
                                    keys.public_only(), Drbg(seed, b"srv"))

    def client():
        out[1] = gen_triples_client(count, ch1, be1, keys, Drbg(seed, b"cli"))

    ts = threading.Thread(target=server)
    tc = threading.Thread(target=client)
    ts.start(); tc.start(); ts.join(); tc.join()
    return out[0], out[1], led0


def test_generated_triples_open_correctly():
    params = TOY_PARAMS
    alpha = 5
    pool0, pool1, ledger = gen_over_channel(40, alpha, params, n=16)
    t0s, t1s = pool0.take(40), pool1.take(40)
    for t0, t1 in zip(t0s, t1s):
        a = open_and_check(t0.a, t1.a, alpha, params)
        b = open_and_check(t0.b, t1.b, alpha, params)
        c = open_and_check(t0.c, t1.c, alpha, params)
        assert c == a * b % params.p
    # one ct-ct product per packed batch
    assert ledger.ct_mults == math.ceil(40 / 16)


def test_zero_alpha_macs_sum_to_zero():
    pool0, pool1, _ = gen_over_channel(8, 0, TOY_PARAMS, n=8, seed=3)
    for t0, t1 in zip(pool0.take(8), pool1.take(8)):
        assert (t0.a.mac + t1.a.mac) % 17 == 0
        assert (t0.c.mac + t1.c.mac) % 17 == 0


def test_missing_zk_stub_rejected():
    params = TOY_PARAMS
    be0 = SlotBackend(params, 8, OpLedger())
    be1 = SlotBackend(params, 8, OpLedger())
    keys = be1.keygen(Drbg(4))
    ch0, ch1 = inproc_pair()
    from secinf.transport import MsgType, Phase
    ct = be1.encrypt(keys, be1.encode([0] * 8))
    # client sends ciphertexts without the stub tag
    ch1.send(MsgType.ZK_STUB, Phase.TRIPLE, b"not-the-stub")
    ch1.send(MsgType.TRIPLE_CT, Phase.TRIPLE, be1.serialize_ct(ct))
    ch1.send(MsgType.TRIPLE_CT, Phase.TRIPLE, be1.serialize_ct(ct))
    with pytest.raises(ProtocolError):
        gen_triples_server(8, 1, ch0, be0, keys.public_only(), Drbg(5))


def test_pool_never_double_spends():
    pool0, _, _ = gen_over_channel(10, 2, TOY_PARAMS, n=8, seed=6)
    pool0.take(6)
    pool0.take(4)
    with pytest.raises(ProtocolError):
        pool0.take(1)


def test_pool_persistence_round_trip(tmp_path):
    alpha = 7
    pool0, pool1, _ = gen_over_channel(12, alpha, TOY_PARAMS, n=8, seed=8)
    path = tmp_path / "pool.bin"
    pool0.dump(str(path), TOY_PARAMS)
    loaded = TriplePool.load(str(path), TOY_PARAMS)
    assert len(loaded) == 12 and loaded.party == 0
    for t0, t1 in zip(loaded.take(12), pool1.take(12)):
        open_and_check(t0.a, t1.a, alpha, TOY_PARAMS)
    with pytest.raises(ValueError):
        TriplePool.load(str(path), F44)


def test_beaver_combine_hand_example():
    """x=5, y=1 with triple (2,5,10) at p=17: shares sum to 5."""
    params = TOY_PARAMS
    alpha = 3
    rng = Drbg(b"hand")
    pool0, pool1 = make_trusted_triples(1, alpha, params, rng)
    t0, t1 = pool0.take(1)[0], pool1.take(1)[0]
    # reconstruct the dealer's triple to fix gamma/lambda
    A = (t0.a.value + t1.a.value) % 17
    B = (t0.b.value + t1.b.value) % 17
    x, y = 5, 1
    gamma = (x - A) % 17
    lam = (y - B) % 17
    z0 = beaver_combine(t0, gamma, lam, 0, params, alpha)
    z1 = beaver_combine(t1, gamma, lam, 1, params)
    assert open_and_check(z0, z1, alpha, params) == x * y % 17
    # the spec's worked instance
    ten_plus = (10 + 3 * 5 + (-4) * 2 + 3 * (-4)) % 17
    assert ten_plus == 5


def test_beaver_combine_random_and_zero():
    params = TOY_PARAMS
    rng = Drbg(b"beaver")
    for trial in range(1000):
        alpha = rng.field_element(17)
        pool0, pool1 = make_trusted_triples(1, alpha, params, rng)
        t0, t1 = pool0.take(1)[0], pool1.take(1)[0]
        x = rng.field_element(17)
        y = 0 if trial % 10 == 0 else rng.field_element(17)
        A = (t0.a.value + t1.a.value) % 17
        B = (t0.b.value + t1.b.value) % 17
        gamma, lam = (x - A) % 17, (y - B) % 17
        z0 = beaver_combine(t0, gamma, lam, 0, params, alpha)
        z1 = beaver_combine(t1, gamma, lam, 1, params)
        z = open_and_check(z0, z1, alpha, params)
        assert z == x * y % 17
        if y == 0:
            assert z == 0


def test_auth_share_linearity():
    params = TOY_PARAMS
    rng = Drbg(b"linr")
    alpha = rng.field_element(17)
    for _ in range(200):
        x, y, k, const = (rng.field_element(17) for _ in range(4))
        xs = _share(x, alpha, params, rng)
        ys = _share(y, alpha, params, rng)
        summed = tuple(a.add(b, params) for a, b in zip(xs, ys))
        assert open_and_check(*summed, alpha, params) == (x + y) % 17
        scaled = tuple(a.scale(k, params) for a in xs)
        assert open_and_check(*scaled, alpha, params) == k * x % 17
        shifted = (xs[0].add_public(const, 0, alpha, params),
                   xs[1].add_public(const, 1, None, params))
        assert open_and_check(*shifted, alpha, params) == (x + const) % 17


def _share(x, alpha, params, rng):
    v0 = rng.field_element(params.p)
    m0 = rng.field_element(params.p)
    return (AuthShare(v0, m0),
            AuthShare((x - v0) % params.p, (alpha * x - m0) % params.p))


def test_forgery_rate_toy_field():
    res = mac_forgery_harness(TOY_PARAMS, 100_000, Drbg(b"forge"))
    expect = 1 / 16
    sigma = math.sqrt(expect * (1 - expect) / res["trials"])
    assert abs(res["rate"] - expect) <= 3 * sigma


def test_forgery_rate_kappa44():
    res = mac_forgery_harness(F44, 10_000, Drbg(b"forge44"))
    assert res["successes"] == 0


def test_no_tamper_never_flagged():
    params = TOY_PARAMS
    rng = Drbg(b"clean")
    for _ in range(500):
        alpha = rng.field_element(17)
        x = rng.field_element(17)
        s0, s1 = _share(x, alpha, params, rng)
        assert open_and_check(s0, s1, alpha, params) == x
