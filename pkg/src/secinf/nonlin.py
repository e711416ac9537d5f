"""Four-phase nonlinear layer protocol for f = ReLU.

Given additive shares of a vector u, the parties end up with authenticated
shares of alpha*u, ReLU(u) and alpha*ReLU(u):

1. Garbled circuit phase: the server garbles the sign circuit per element,
   ships tables and its own garbled inputs; the client fetches labels for
   its share bits over kappa OTs per element and evaluates.
2. Authentication phase 1: for every output bit the server one-time-pads
   field secrets with truncated label bodies, indexed by the label color
   bit; the client can open exactly the pad matching the bit it evaluated.
3. Local recombination: both sides fold c_i / d_i / e_i (or the negated
   pads) against powers of two, yielding shares g1 = alpha*u,
   g2 = sign(u), g3 = alpha*sign(u).
4. Authentication phase 2: one Beaver triple per element turns the shares
   of u and sign(u) into authenticated shares of u*sign(u); the triple's
   MAC shares authenticate the product in the same combination.

All messages are batched per phase across the layer; labels are fresh per
element while the circuit topology is shared.
"""

from __future__ import annotations

from dataclasses import dataclass

from .drbg import Drbg
from .field import FieldParams
from .gcircuit import (BoolCircuit, GarbledCircuit, body_of, build_sign_circuit,
                       color_of, garble, gc_eval, trun)
from .mac import TriplePool, beaver_combine
from .ot import OtReceiverSession, OtSenderSession
from .transport import Channel, MsgType, Phase, ProtocolError


@dataclass
class NonlinOutput:
    k_share: list[int]   # share of alpha*u
    t_share: list[int]   # share of f(u)
    d_share: list[int]   # share of alpha*f(u)
    trace: dict | None = None


def relu_comm_report(width: int, e: int, kappa: int, lam: int) -> dict:
    """Formula bits per ReLU plus the baseline it displaces."""
    bits = 2 * e * lam + 4 * kappa * lam + 6 * kappa * kappa + 2 * kappa
    baseline_c = 249
    baseline_bits = 2 * baseline_c * lam + 4 * kappa * lam + 6 * kappa * kappa
    return {
        "width": width,
        "and_gates": e,
        "bits_per_relu": bits,
        "kib_per_relu": bits / 8 / 1024,
        "baseline_and_gates": baseline_c,
        "baseline_bits_per_relu": baseline_bits,
        "baseline_kib_per_relu": baseline_bits / 8 / 1024,
        "total_bits": bits * width,
    }


def _lab_bytes(label: int, lam: int) -> bytes:
    return label.to_bytes(lam // 8, "little")


def _lab_int(raw: bytes) -> int:
    return int.from_bytes(raw, "little")


class NonlinSession:
    """Per-session constants shared by every layer invocation."""

    def __init__(self, params: FieldParams, circuit: BoolCircuit | None = None):
        self.params = params
        self.circuit = circuit if circuit is not None else build_sign_circuit(params)
        self.e = self.circuit.and_count
        self.kb = (params.kappa + 7) // 8
        self.kb2 = (2 * params.kappa + 7) // 8


def nonlin_server(session: NonlinSession, u_share0: list[int], alpha: int,
                  channel: Channel, pool: TriplePool, ot: OtSenderSession,
                  rng: Drbg, collect_trace: bool = False) -> NonlinOutput:
    params = session.params
    p, k, lam = params.p, params.kappa, params.lam
    width = len(u_share0)
    circuit = session.circuit

    # --- garbled circuit phase ---
    garbled = [garble(circuit, rng, lam) for _ in range(width)]
    tables = bytearray()
    inputs_blob = bytearray()
    ot_pairs = []
    for e_idx, (gc, in_pairs, _) in enumerate(garbled):
        tables += gc.serialize_tables()
        bits = params.bit_decompose(u_share0[e_idx])
        for i in range(k):
            inputs_blob += _lab_bytes(in_pairs[i][bits[i]], lam)
        for wire in sorted(gc.const_labels):
            inputs_blob += _lab_bytes(gc.const_labels[wire], lam)
        for i in range(k, 2 * k):
            ot_pairs.append((_lab_bytes(in_pairs[i][0], lam),
                             _lab_bytes(in_pairs[i][1], lam)))
    channel.send(MsgType.GC_TABLE, Phase.GC, bytes(tables))
    channel.send(MsgType.GARBLED_INPUTS, Phase.GC, bytes(inputs_blob))
    ot.send(ot_pairs, phase=Phase.OT)

    # --- authentication phase 1 ---
    taus, rhos, sigmas = [], [], []
    blob = bytearray()
    for e_idx, (_, _, out_pairs) in enumerate(garbled):
        tau0 = [rng.field_element(p) for _ in range(k)]
        rho0 = [rng.field_element(p) for _ in range(k)]
        sigma0 = [rng.field_element(p) for _ in range(k)]
        taus.append(tau0)
        rhos.append(rho0)
        sigmas.append(sigma0)
        for i in range(k):
            # value-bit wire i: pads tau_{i,0}/tau_{i,1}=alpha+tau_{i,0}
            pair = [0, 0]
            lab0, lab1 = out_pairs[i]
            for j, lab in ((0, lab0), (1, lab1)):
                t_val = tau0[i] if j == 0 else (alpha + tau0[i]) % p
                pair[color_of(lab, lam)] = t_val ^ trun(body_of(lab, lam), k)
            blob += pair[0].to_bytes(session.kb, "little")
            blob += pair[1].to_bytes(session.kb, "little")
            # sign-bit wire kappa+i: pads (rho || sigma)
            pair = [0, 0]
            lab0, lab1 = out_pairs[k + i]
            for j, lab in ((0, lab0), (1, lab1)):
                r_val = rho0[i] if j == 0 else (1 + rho0[i]) % p
                s_val = sigma0[i] if j == 0 else (alpha + sigma0[i]) % p
                packed = (r_val << k) | s_val
                pair[color_of(lab, lam)] = packed ^ trun(body_of(lab, lam), 2 * k)
            blob += pair[0].to_bytes(session.kb2, "little")
            blob += pair[1].to_bytes(session.kb2, "little")
    channel.send(MsgType.LABEL_CTS, Phase.AUTH1, bytes(blob))

    # --- local computation ---
    g1, g2, g3 = [], [], []
    for e_idx in range(width):
        acc1 = acc2 = acc3 = 0
        for i in range(k):
            w = 1 << i
            acc1 += taus[e_idx][i] * w
            acc2 += rhos[e_idx][i] * w
            acc3 += sigmas[e_idx][i] * w
        g1.append(-acc1 % p)
        g2.append(-acc2 % p)
        g3.append(-acc3 % p)

    # --- authentication phase 2 ---
    triples = pool.take(width)
    gammas0 = [(u_share0[e] - triples[e].a.value) % p for e in range(width)]
    lams0 = [(g2[e] - triples[e].b.value) % p for e in range(width)]
    their = channel.recv_expect(MsgType.OPEN_GAMMA_LAMBDA).payload
    theirs = params.decode_vec(their)
    if len(theirs) != 2 * width:
        raise ProtocolError("opened share count mismatch")
    channel.send(MsgType.OPEN_GAMMA_LAMBDA, Phase.AUTH2,
                 params.encode_vec(gammas0 + lams0))
    gammas = [(gammas0[e] + theirs[e]) % p for e in range(width)]
    lams = [(lams0[e] + theirs[width + e]) % p for e in range(width)]
    t_out, d_out = [], []
    for e_idx in range(width):
        prod = beaver_combine(triples[e_idx], gammas[e_idx], lams[e_idx],
                              party=0, params=params, alpha=alpha)
        t_out.append(prod.value)
        d_out.append(prod.mac)
    trace = None
    if collect_trace:
        trace = {"g1": g1, "g2": g2, "g3": g3,
                 "tau0": taus, "rho0": rhos, "sigma0": sigmas,
                 "gamma": gammas, "lam": lams}
    return NonlinOutput(k_share=g1, t_share=t_out, d_share=d_out, trace=trace)


def nonlin_client(session: NonlinSession, u_share1: list[int],
                  channel: Channel, pool: TriplePool, ot: OtReceiverSession,
                  collect_trace: bool = False) -> NonlinOutput:
    params = session.params
    p, k, lam = params.p, params.kappa, params.lam
    lam_b = lam // 8
    width = len(u_share1)
    circuit = session.circuit
    e_cnt = session.e
    n_consts = sum(1 for g in circuit.gates if g[0] == "CONST")

    # --- garbled circuit phase ---
    tables_blob = channel.recv_expect(MsgType.GC_TABLE).payload
    per_elem = 2 * e_cnt * lam_b
    if len(tables_blob) != per_elem * width:
        raise ProtocolError("garbled table payload size mismatch")
    inputs_blob = channel.recv_expect(MsgType.GARBLED_INPUTS).payload
    stride = (k + n_consts) * lam_b
    if len(inputs_blob) != stride * width:
        raise ProtocolError("garbled input payload size mismatch")
    choices = []
    for e_idx in range(width):
        choices.extend(params.bit_decompose(u_share1[e_idx]))
    got = ot.recv(choices, lam_b, phase=Phase.OT)

    out_labels = []
    const_wires = sorted(w for w, g in
                         ((circuit.n_inputs + gi, g) for gi, g in enumerate(circuit.gates))
                         if g[0] == "CONST")
    for e_idx in range(width):
        rows = GarbledCircuit.deserialize_tables(
            tables_blob[e_idx * per_elem : (e_idx + 1) * per_elem], lam)
        base = e_idx * stride
        srv_labels = [_lab_int(inputs_blob[base + i * lam_b : base + (i + 1) * lam_b])
                      for i in range(k)]
        const_labels = {
            wire: _lab_int(inputs_blob[base + (k + ci) * lam_b
                                       : base + (k + ci + 1) * lam_b])
            for ci, wire in enumerate(const_wires)
        }
        cli_labels = [_lab_int(got[e_idx * k + i]) for i in range(k)]
        gc = GarbledCircuit(lam=lam, tables=rows, const_labels=const_labels,
                            n_inputs=2 * k, n_outputs=2 * k)
        out_labels.append(gc_eval(circuit, gc, srv_labels + cli_labels))

    # --- authentication phase 1 ---
    blob = channel.recv_expect(MsgType.LABEL_CTS).payload
    per_i = 2 * session.kb + 2 * session.kb2
    if len(blob) != width * k * per_i:
        raise ProtocolError("label ciphertext payload size mismatch")
    cs, ds, es = [], [], []
    pos = 0
    for e_idx in range(width):
        c_vec, d_vec, e_vec = [], [], []
        for i in range(k):
            ct0 = int.from_bytes(blob[pos : pos + session.kb], "little")
            ct1 = int.from_bytes(blob[pos + session.kb : pos + 2 * session.kb],
                                 "little")
            pos += 2 * session.kb
            hat0 = int.from_bytes(blob[pos : pos + session.kb2], "little")
            hat1 = int.from_bytes(blob[pos + session.kb2 : pos + 2 * session.kb2],
                                  "little")
            pos += 2 * session.kb2
            lab_u = out_labels[e_idx][i]
            xi = color_of(lab_u, lam)
            c_i = (ct1 if xi else ct0) ^ trun(body_of(lab_u, lam), k)
            if c_i >= p:
                raise ProtocolError("label ciphertext decrypted out of range")
            c_vec.append(c_i)
            lab_s = out_labels[e_idx][k + i]
            xi = color_of(lab_s, lam)
            de = (hat1 if xi else hat0) ^ trun(body_of(lab_s, lam), 2 * k)
            d_i, e_i = de >> k, de & ((1 << k) - 1)
            if d_i >= p or e_i >= p:
                raise ProtocolError("label ciphertext decrypted out of range")
            d_vec.append(d_i)
            e_vec.append(e_i)
        cs.append(c_vec)
        ds.append(d_vec)
        es.append(e_vec)

    # --- local computation ---
    g1 = [sum(c << i for i, c in enumerate(cv)) % p for cv in cs]
    g2 = [sum(d << i for i, d in enumerate(dv)) % p for dv in ds]
    g3 = [sum(e << i for i, e in enumerate(ev)) % p for ev in es]

    # --- authentication phase 2 ---
    triples = pool.take(width)
    gammas1 = [(u_share1[e] - triples[e].a.value) % p for e in range(width)]
    lams1 = [(g2[e] - triples[e].b.value) % p for e in range(width)]
    channel.send(MsgType.OPEN_GAMMA_LAMBDA, Phase.AUTH2,
                 params.encode_vec(gammas1 + lams1))
    their = params.decode_vec(
        channel.recv_expect(MsgType.OPEN_GAMMA_LAMBDA).payload)
    if len(their) != 2 * width:
        raise ProtocolError("opened share count mismatch")
    gammas = [(gammas1[e] + their[e]) % p for e in range(width)]
    lams = [(lams1[e] + their[width + e]) % p for e in range(width)]
    t_out, d_out = [], []
    for e_idx in range(width):
        prod = beaver_combine(triples[e_idx], gammas[e_idx], lams[e_idx],
                              party=1, params=params)
        t_out.append(prod.value)
        d_out.append(prod.mac)
    trace = None
    if collect_trace:
        trace = {"g1": g1, "g2": g2, "g3": g3, "c": cs, "d": ds, "e": es,
                 "gamma": gammas, "lam": lams}
    return NonlinOutput(k_share=g1, t_share=t_out, d_share=d_out, trace=trace)
