"""End-to-end inference protocol with the randomized consistency check.

Layer schedule: the first linear layer runs init_lin, every nonlinear
layer the four-phase protocol, every later linear layer lin.  After the
last layer the server draws fresh random vectors s_j / s'_j, both parties
fold their (r_j - k_j) and z_{j+1} shares against them, and the server
releases its output share only if the combined scalar q is zero.  Honest
runs always pass; any client deviation leaves a nonzero term that
survives the random combination except with probability ~1/p.

The client-side DeviationPlan reproduces the malicious-client taxonomy:
tampering a nonlinear input share, either Lin input share, or the check
share itself.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from .drbg import Drbg
from .field import FieldParams
from .linproto import (ConvLayer, FcLayer, init_lin_client, init_lin_server,
                       lin_client, lin_server)
from .mac import gen_triples_client, gen_triples_server
from .nonlin import NonlinSession, nonlin_client, nonlin_server
from .ot import DealerOt, OtReceiverSession, OtSenderSession
from .slothe import HeKeys, OpLedger, SlotBackend
from .transport import Channel, MsgType, Phase, ProtocolError, inproc_pair

DEVIATION_SITES = ("nonlin", "lin_t", "lin_d", "q")


@dataclass
class DeviationPlan:
    """Client-side fault injection; all-zero delta means honest."""

    site: str
    layer: int = 1      # 1-based nonlinear layer index
    index: int = 0      # element within the layer vector
    delta: int = 1

    def __post_init__(self):
        if self.site not in DEVIATION_SITES:
            raise ValueError(f"unknown deviation site {self.site!r}")

    @classmethod
    def parse(cls, text: str) -> "DeviationPlan":
        """CLI syntax site:layer:delta[:index], e.g. nonlin:0:+1."""
        parts = text.split(":")
        if len(parts) < 3:
            raise ValueError("deviation spec must be site:layer:delta[:index]")
        site, layer, delta = parts[0], int(parts[1]), int(parts[2])
        index = int(parts[3]) if len(parts) > 3 else 0
        return cls(site=site, layer=max(layer, 1), index=index, delta=delta)


@dataclass
class InferConfig:
    n: int = 4096
    seed: int | bytes | str = 0
    ot_mode: str = "dealer"
    # "simc2" or the baseline "hybrid" (gazelle blocking for conv layers)
    matvec_method: str = "simc2"
    collect_trace: bool = False

    def server_rng(self) -> Drbg:
        return Drbg(self.seed, b"server")

    def client_rng(self) -> Drbg:
        return Drbg(self.seed, b"client")

    def ot_seed(self) -> bytes:
        # dealer OT is a trusted-setup test artifice, so a session-shared
        # seed is part of the (insecure, explicitly labeled) test config
        return Drbg(self.seed, b"ot-setup").bytes(16)


def _build_layer(spec, n, params, with_weights: bool, method: str = "simc2"):
    if spec.kind == "fc":
        if with_weights:
            return FcLayer(spec.rows, n, params, method=method)
        return FcLayer(None, n, params, dims=(spec.n_o, spec.n_i), method=method)
    geo = spec.geometry(n)
    conv_method = "simc2" if method == "simc2" else "gazelle"
    return ConvLayer(spec.kernels if with_weights else None, geo, params,
                     method=conv_method)


def _nonlin_widths(model) -> list[int]:
    return [ly.out_width for ly in model.layers[:-1]]


def consistency_q(r_shares, k_shares, z_shares, s_vecs, sp_vecs,
                  params: FieldParams) -> int:
    """One party's share of q = sum_j (r_j - k_j) . s_j + z_{j+1} . s'_j."""
    p = params.p
    q = 0
    for r, k, z, s, sp in zip(r_shares, k_shares, z_shares, s_vecs, sp_vecs,
                              strict=True):
        q += sum((rv - kv) * sv for rv, kv, sv in zip(r, k, s, strict=True))
        q += sum(zv * sv for zv, sv in zip(z, sp, strict=True))
    return q % p


def run_server(model, channel: Channel, config: InferConfig,
               ledger: OpLedger | None = None) -> dict:
    model.validate_chain()
    model.validate_ranges()
    params = model.params
    p = params.p
    rng = config.server_rng()
    ledger = ledger if ledger is not None else OpLedger()
    backend = SlotBackend(params, config.n, ledger)
    channel.ledger = ledger

    channel.hello(initiate=False)
    pk = HeKeys(public=channel.recv_expect(MsgType.SETUP_KEY).payload)
    alpha = rng.fork("alpha").field_element(p)

    widths = _nonlin_widths(model)
    pool = None
    if widths:
        pool = gen_triples_server(sum(widths), alpha, channel, backend, pk,
                                  rng.fork("triples"))
    ot_sender = None
    if widths:
        if config.ot_mode == "dealer":
            send_st, _ = DealerOt.setup(config.ot_seed(),
                                        sum(widths) * params.kappa,
                                        params.lam // 8)
            ot_sender = OtSenderSession(channel, "dealer", send_st)
        else:
            ot_sender = OtSenderSession(channel, "base", rng=rng.fork("baseot"))

    layers = [_build_layer(ly, config.n, params, with_weights=True,
                           method=config.matvec_method)
              for ly in model.layers]
    session = NonlinSession(params)
    mask_rng = rng.fork("masks")

    stage_marks = {"setup": ledger.snapshot()}
    out1 = init_lin_server(layers[0], alpha, channel, backend, pk, mask_rng)
    stage_marks["after_layer_1"] = ledger.snapshot()
    u_cur = out1.u_share
    r_list = [out1.r_share]
    k_list, z_list = [], []
    for j in range(1, len(layers)):
        nl = nonlin_server(session, u_cur, alpha, channel, pool, ot_sender,
                           rng.fork(f"nonlin{j}"))
        k_list.append(nl.k_share)
        lin_out = lin_server(layers[j], nl.t_share, nl.d_share, alpha, channel,
                             backend, pk, mask_rng)
        stage_marks[f"after_layer_{j + 1}"] = ledger.snapshot()
        u_cur = lin_out.u_share
        r_list.append(lin_out.r_share)
        z_list.append(lin_out.z_share)

    # consistency check: r_j vs k_j for j in [m-1], plus every z
    check_rng = rng.fork("check")
    s_vecs = [check_rng.field_vector(p, len(k)) for k in k_list]
    sp_vecs = [check_rng.field_vector(p, len(z)) for z in z_list]
    blob = bytearray()
    for vec in s_vecs + sp_vecs:
        blob += params.encode_vec(vec)
    channel.send(MsgType.CHECK_VECTORS, Phase.CHECK, bytes(blob))
    q0 = consistency_q(r_list[: len(k_list)], k_list, z_list, s_vecs, sp_vecs,
                       params)
    q1 = params.decode(channel.recv_expect(MsgType.CHECK_SHARE).payload)
    passed = (q0 + q1) % p == 0
    channel.send(MsgType.CHECK_VERDICT, Phase.CHECK,
                 b"\x01" if passed else b"\x00")
    if passed:
        channel.send(MsgType.OUTPUT_SHARE, Phase.OUTPUT,
                     params.encode_vec(u_cur))
    linear_ops = {
        k: stage_marks[f"after_layer_{len(layers)}"][k] - stage_marks["setup"][k]
        for k in ("rotations", "sc_mults", "ct_adds", "ct_mults")
    }
    per_layer = []
    prev = stage_marks["setup"]
    for j in range(1, len(layers) + 1):
        cur = stage_marks[f"after_layer_{j}"]
        per_layer.append({k: cur[k] - prev[k]
                          for k in ("rotations", "sc_mults", "ct_adds")})
        prev = cur
    result = {
        "abort": not passed,
        "q_share": q0,
        "ledger": ledger.snapshot(),
        "linear_ops": linear_ops,
        "linear_ops_per_layer": per_layer,
        "bytes": channel.counter.report(),
        "transcript": channel.transcript_digests(),
    }
    if config.collect_trace:
        result["trace"] = {"alpha": alpha, "r": r_list, "k": k_list,
                           "z": z_list, "u_out": u_cur}
    return result


def run_client(model, t0: list[int], channel: Channel, config: InferConfig,
               deviation: DeviationPlan | None = None,
               ledger: OpLedger | None = None) -> dict:
    model.validate_chain()
    params = model.params
    p = params.p
    rng = config.client_rng()
    ledger = ledger if ledger is not None else OpLedger()
    backend = SlotBackend(params, config.n, ledger)
    channel.ledger = ledger

    channel.hello(initiate=True)
    keys = backend.keygen(rng.fork("hekeys"))
    channel.send(MsgType.SETUP_KEY, Phase.SETUP, keys.public)

    widths = _nonlin_widths(model)
    pool = None
    if widths:
        pool = gen_triples_client(sum(widths), channel, backend, keys,
                                  rng.fork("triples"))
    ot_receiver = None
    if widths:
        if config.ot_mode == "dealer":
            _, recv_st = DealerOt.setup(config.ot_seed(),
                                        sum(widths) * params.kappa,
                                        params.lam // 8)
            ot_receiver = OtReceiverSession(channel, "dealer", recv_st)
        else:
            ot_receiver = OtReceiverSession(channel, "base",
                                            rng=rng.fork("baseot"))

    layers = [_build_layer(ly, config.n, params, with_weights=False)
              for ly in model.layers]
    session = NonlinSession(params)

    def inject(vec, site, layer_idx):
        if (deviation is not None and deviation.site == site
                and deviation.layer == layer_idx and deviation.delta % p):
            vec = list(vec)
            vec[deviation.index % len(vec)] = \
                (vec[deviation.index % len(vec)] + deviation.delta) % p
        return vec

    t0_canon = [v % p for v in t0]
    out1 = init_lin_client(layers[0], t0_canon, channel, backend, keys)
    u_cur = out1.u_share
    r_list = [out1.r_share]
    k_list, z_list = [], []
    for j in range(1, len(layers)):
        u_fed = inject(u_cur, "nonlin", j)
        nl = nonlin_client(session, u_fed, channel, pool, ot_receiver)
        k_list.append(nl.k_share)
        t_fed = inject(nl.t_share, "lin_t", j)
        d_fed = inject(nl.d_share, "lin_d", j)
        lin_out = lin_client(layers[j], t_fed, d_fed, channel, backend, keys)
        u_cur = lin_out.u_share
        r_list.append(lin_out.r_share)
        z_list.append(lin_out.z_share)

    blob = channel.recv_expect(MsgType.CHECK_VECTORS).payload
    vecs = params.decode_vec(blob)
    s_vecs, sp_vecs = [], []
    pos = 0
    for k in k_list:
        s_vecs.append(vecs[pos : pos + len(k)])
        pos += len(k)
    for z in z_list:
        sp_vecs.append(vecs[pos : pos + len(z)])
        pos += len(z)
    if pos != len(vecs):
        raise ProtocolError("check vector payload size mismatch")
    q1 = consistency_q(r_list[: len(k_list)], k_list, z_list, s_vecs, sp_vecs,
                       params)
    if deviation is not None and deviation.site == "q":
        q1 = (q1 + deviation.delta) % p
    channel.send(MsgType.CHECK_SHARE, Phase.CHECK, params.encode(q1))
    verdict = channel.recv_expect(MsgType.CHECK_VERDICT).payload
    result = {
        "abort": verdict != b"\x01",
        "ledger": ledger.snapshot(),
        "bytes": channel.counter.report(),
        "transcript": channel.transcript_digests(),
    }
    if verdict == b"\x01":
        share0 = params.decode_vec(
            channel.recv_expect(MsgType.OUTPUT_SHARE).payload)
        logits = [params.to_signed((a + b) % p)
                  for a, b in zip(share0, u_cur, strict=True)]
        result["logits"] = logits
    else:
        result["logits"] = None
    return result


def run_inference(model, t0: list[int], config: InferConfig,
                  deviation: DeviationPlan | None = None) -> dict:
    """Run both endpoints over an in-process channel pair."""
    led0, led1 = OpLedger(), OpLedger()
    ch0, ch1 = inproc_pair(led0, led1)
    out: dict = {}
    err: dict = {}

    def srv():
        try:
            out["server"] = run_server(model, ch0, config, led0)
        except Exception as exc:            # propagate to the main thread
            err["server"] = exc
            ch0.close()

    def cli():
        try:
            out["client"] = run_client(model, t0, ch1, config, deviation, led1)
        except Exception as exc:
            err["client"] = exc
            ch1.close()

    ts = threading.Thread(target=srv)
    tc = threading.Thread(target=cli)
    ts.start(); tc.start(); ts.join(); tc.join()
    if err:
        who, exc = next(iter(err.items()))
        raise RuntimeError(f"{who} endpoint failed: {exc!r}") from exc
    return out
