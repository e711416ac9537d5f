"""Authenticated linear-layer protocols.

``init_lin`` handles the first layer: the client ships its encrypted,
replication-packed input; the server evaluates the weight plan and its
MAC-scaled twin over one shared set of input rotations, masks every
result ciphertext (the mask doubles as the server's additive share), and
the client decrypts and collapses to its own share.

``lin`` handles subsequent layers: the client encrypts its shares of the
activation t and its authentication d, the server folds in its own
plaintext shares for free, evaluates the weight plan on both, and
additionally returns e5, an encryption of alpha^3*t - alpha^2*d minus a
fresh mask, whose reconstruction is zero exactly when d = alpha*t.

Fully-connected layers use matvec plans, convolution layers conv plans;
the share/mask/collapse contract is identical.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import convpack, linpack
from .drbg import Drbg
from .field import FieldParams
from .mac import ZK_STUB_TAG
from .slothe import SlotBackend
from .transport import Channel, MsgType, Phase, ProtocolError


@dataclass
class LinOutput:
    u_share: list[int]            # share of N*t
    r_share: list[int] | None     # share of alpha*N*t (init) or N*d (lin)
    z_share: list[int] | None     # share of alpha^3*t - alpha^2*d (lin only)


class FcLayer:
    """Weight matrix with packing plans for the value and MAC paths.

    rows=None builds a geometry-only layer (packing, rotations, collapse)
    for the party that does not hold the weights.  method selects the
    packing strategy; the protocol contract is identical.
    """

    kind = "fc"

    def __init__(self, rows, n: int, params: FieldParams, l: int | None = None,
                 dims: tuple[int, int] | None = None, method: str = "simc2"):
        self.rows = rows
        self.n = n
        self.params = params
        self.method = method
        use_l = l if method == "simc2" else None
        if rows is None:
            n_o, n_i = dims
            self.plan = linpack.plan_matvec_geometry(method, n_i, n_o, n,
                                                     params, l=use_l)
        else:
            self.plan = linpack.plan_matvec(method, rows, n, params, l=use_l)
        self._l = use_l

    @property
    def in_width(self) -> int:
        return self.plan.n_i

    @property
    def out_width(self) -> int:
        return self.plan.n_o

    @property
    def input_ct_count(self) -> int:
        return 1

    @property
    def output_ct_count(self) -> int:
        return self.plan.cost.output_ciphertexts

    def scaled_plan(self, alpha: int):
        p = self.params.p
        scaled = [[v * alpha % p for v in row] for row in self.rows]
        return linpack.plan_matvec(self.method, scaled, self.n, self.params,
                                   l=self._l)

    def pack_input(self, t, backend: SlotBackend):
        return [linpack.pack_input(self.plan, t, backend)]

    def apply(self, plan, input_cts, backend: SlotBackend, rotations=None):
        if rotations is None:
            rotations = self.input_rotations(input_cts, backend)
        return linpack.apply_matvec(plan, input_cts[0], backend,
                                    rotations=rotations[0])

    def input_rotations(self, input_cts, backend: SlotBackend):
        return [linpack.input_rotations(self.plan, input_cts[0], backend)]

    def collapse(self, plain_vectors) -> list[int]:
        return linpack.collapse_share(plain_vectors, self.plan)


class ConvLayer:
    """kernels=None builds the geometry-only (client-side) layer."""

    kind = "conv"

    def __init__(self, kernels, geometry: convpack.ConvGeometry,
                 params: FieldParams, method: str = "simc2"):
        self.kernels = kernels
        self.geometry = geometry
        self.params = params
        self.method = method
        if kernels is None:
            geometry.validate()
            self.plan = None
            self._cost = convpack.predict_conv_cost(method, geometry)
        else:
            self.plan = convpack.plan_conv(method, kernels, geometry, params)
            self._cost = self.plan.cost

    @property
    def in_width(self) -> int:
        g = self.geometry
        return g.c_i * g.hw

    @property
    def out_width(self) -> int:
        g = self.geometry
        return g.c_o * g.hw

    @property
    def input_ct_count(self) -> int:
        g = self.geometry
        return g.c_i // g.c_n

    @property
    def output_ct_count(self) -> int:
        return self._cost.output_ciphertexts

    def scaled_plan(self, alpha: int):
        p = self.params.p
        g = self.geometry
        scaled = [[[[v * alpha % p for v in kr] for kr in ch] for ch in ker]
                  for ker in self.kernels]
        return convpack.plan_conv(self.method, scaled, g, self.params)

    def _to_channels(self, flat):
        g = self.geometry
        return [[[flat[c * g.hw + r * g.u_w + x] for x in range(g.u_w)]
                 for r in range(g.u_h)] for c in range(g.c_i)]

    def pack_input(self, t, backend: SlotBackend):
        return [pv for pv in convpack.pack_channels(self.geometry,
                                                    self._to_channels(t), backend)]

    def apply(self, plan, input_cts, backend: SlotBackend, rotations=None):
        return convpack.apply_conv(plan, input_cts, backend)

    def input_rotations(self, input_cts, backend: SlotBackend):
        return None  # conv rotations are fused into apply

    def collapse(self, plain_vectors) -> list[int]:
        g = self.geometry
        chans = convpack.unpack_channels(g, plain_vectors)[: g.c_o]
        flat = []
        for img in chans:
            for row in img:
                flat.extend(v % self.params.p for v in row)
        return flat


def _send_cts(channel: Channel, cts, backend: SlotBackend, msg_type, phase):
    for ct in cts:
        channel.send(msg_type, phase, backend.serialize_ct(ct))


def _recv_cts(channel: Channel, count: int, backend: SlotBackend, pk,
              msg_type) -> list:
    return [backend.deserialize_ct(channel.recv_expect(msg_type).payload, pk)
            for _ in range(count)]


# -- InitLin ---------------------------------------------------------------------


def init_lin_client(layer, t, channel: Channel, backend: SlotBackend,
                    keys) -> LinOutput:
    if len(t) != layer.in_width:
        raise ProtocolError("input width mismatch")
    channel.send(MsgType.ZK_STUB, Phase.LIN, ZK_STUB_TAG)
    cts = [backend.encrypt(keys, pv) for pv in layer.pack_input(t, backend)]
    _send_cts(channel, cts, backend, MsgType.CLIENT_CT, Phase.LIN)
    n_out = layer.output_ct_count
    got_u = _recv_cts(channel, n_out, backend, keys, MsgType.MASKED_RESULT_CTS)
    got_r = _recv_cts(channel, n_out, backend, keys, MsgType.MASKED_RESULT_CTS)
    u1 = layer.collapse([backend.decrypt(keys, c) for c in got_u])
    r1 = layer.collapse([backend.decrypt(keys, c) for c in got_r])
    return LinOutput(u_share=u1, r_share=r1, z_share=None)


def init_lin_server(layer, alpha: int, channel: Channel, backend: SlotBackend,
                    pk, rng: Drbg) -> LinOutput:
    stub = channel.recv_expect(MsgType.ZK_STUB)
    if stub.payload != ZK_STUB_TAG:
        raise ProtocolError("missing plaintext-knowledge stub")
    cts = _recv_cts(channel, layer.input_ct_count, backend, pk, MsgType.CLIENT_CT)
    rotations = layer.input_rotations(cts, backend)
    outs_u = layer.apply(layer.plan, cts, backend, rotations)
    outs_r = layer.apply(layer.scaled_plan(alpha), cts, backend, rotations)
    masked_u, masks_u = linpack.mask_and_share(outs_u, rng, backend)
    masked_r, masks_r = linpack.mask_and_share(outs_r, rng, backend)
    _send_cts(channel, masked_u, backend, MsgType.MASKED_RESULT_CTS, Phase.LIN)
    _send_cts(channel, masked_r, backend, MsgType.MASKED_RESULT_CTS, Phase.LIN)
    return LinOutput(u_share=layer.collapse(masks_u),
                     r_share=layer.collapse(masks_r), z_share=None)


# -- Lin -------------------------------------------------------------------------


def lin_client(layer, t_share1, d_share1, channel: Channel,
               backend: SlotBackend, keys) -> LinOutput:
    if len(t_share1) != layer.in_width or len(d_share1) != layer.in_width:
        raise ProtocolError("share width mismatch")
    channel.send(MsgType.ZK_STUB, Phase.LIN, ZK_STUB_TAG)
    for vec in (t_share1, d_share1):
        cts = [backend.encrypt(keys, pv) for pv in layer.pack_input(vec, backend)]
        _send_cts(channel, cts, backend, MsgType.CLIENT_CT, Phase.LIN)
    n_out = layer.output_ct_count
    got_u = _recv_cts(channel, n_out, backend, keys, MsgType.MASKED_RESULT_CTS)
    got_r = _recv_cts(channel, n_out, backend, keys, MsgType.MASKED_RESULT_CTS)
    got_z = _recv_cts(channel, layer.input_ct_count, backend, keys,
                      MsgType.MASKED_RESULT_CTS)
    u1 = layer.collapse([backend.decrypt(keys, c) for c in got_u])
    r1 = layer.collapse([backend.decrypt(keys, c) for c in got_r])
    z_slots = [backend.decrypt(keys, c) for c in got_z]
    z1 = _extract_input_vector(layer, z_slots)
    return LinOutput(u_share=u1, r_share=r1, z_share=z1)


def lin_server(layer, t_share0, d_share0, alpha: int, channel: Channel,
               backend: SlotBackend, pk, rng: Drbg) -> LinOutput:
    stub = channel.recv_expect(MsgType.ZK_STUB)
    if stub.payload != ZK_STUB_TAG:
        raise ProtocolError("missing plaintext-knowledge stub")
    n_in = layer.input_ct_count
    cts_t1 = _recv_cts(channel, n_in, backend, pk, MsgType.CLIENT_CT)
    cts_d1 = _recv_cts(channel, n_in, backend, pk, MsgType.CLIENT_CT)
    # fold in the server's plaintext shares; ct+plain addition is free
    packed_t0 = layer.pack_input(t_share0, backend)
    packed_d0 = layer.pack_input(d_share0, backend)
    cts_t = [backend.ct_add(c, pv) for c, pv in zip(cts_t1, packed_t0)]
    cts_d = [backend.ct_add(c, pv) for c, pv in zip(cts_d1, packed_d0)]
    outs_u = layer.apply(layer.plan, cts_t, backend,
                         layer.input_rotations(cts_t, backend))
    outs_r = layer.apply(layer.plan, cts_d, backend,
                         layer.input_rotations(cts_d, backend))
    p = backend.params.p
    a3 = pow(alpha, 3, p)
    a2neg = (-pow(alpha, 2, p)) % p
    a3_vec = backend.encode([a3] * backend.n)
    a2_vec = backend.encode([a2neg] * backend.n)
    outs_z = [backend.ct_add(backend.sc_mult(a3_vec, ct_t),
                             backend.sc_mult(a2_vec, ct_d))
              for ct_t, ct_d in zip(cts_t, cts_d)]
    masked_u, masks_u = linpack.mask_and_share(outs_u, rng, backend)
    masked_r, masks_r = linpack.mask_and_share(outs_r, rng, backend)
    masked_z, masks_z = linpack.mask_and_share(outs_z, rng, backend)
    _send_cts(channel, masked_u, backend, MsgType.MASKED_RESULT_CTS, Phase.LIN)
    _send_cts(channel, masked_r, backend, MsgType.MASKED_RESULT_CTS, Phase.LIN)
    _send_cts(channel, masked_z, backend, MsgType.MASKED_RESULT_CTS, Phase.LIN)
    return LinOutput(u_share=layer.collapse(masks_u),
                     r_share=layer.collapse(masks_r),
                     z_share=_extract_input_vector(layer, masks_z))


def _extract_input_vector(layer, slot_vectors) -> list[int]:
    """Pull an input-width vector out of per-input-ct slot vectors.

    For fc the first replicated copy carries the payload; for conv every
    slot is payload.
    """
    p = layer.params.p
    if layer.kind == "fc":
        return [v % p for v in slot_vectors[0][: layer.in_width]]
    flat = []
    for vec in slot_vectors:
        flat.extend(v % p for v in vec)
    return flat[: layer.in_width]
