"""Convolution packings over the slot backend.

Channels are packed c_n = n/(u_w*u_h) per ciphertext, channel-major and
row-major inside a channel.  Spatial shifts become cyclic slot rotations
whose out-of-image positions are zeroed in the plaintext coefficient
vectors, so same-padding convolution is exact.

Two block schedules:

* ``gazelle`` - kernel block matrix split into (c_o*c_i/c_n^2) blocks of
  c_n x c_n filters, diagonal order inside each block, and c_n-1 channel
  alignment rotations per block before any cross-block addition.
* ``simc2``   - first-Add-second-Rotation: partial products that share a
  diagonal order are added across all input blocks first, leaving c_n-1
  alignment rotations per output block only.

Both return c_o/c_n ciphertexts with output channels in packing order.
Stride-1, odd kernels, same padding; that is the regime the cost model
covers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .field import FieldParams
from .slothe import PackedVector, SlotBackend

CONV_METHODS = ("gazelle", "simc2")


@dataclass(frozen=True)
class ConvGeometry:
    u_w: int
    u_h: int
    c_i: int
    k_w: int
    k_h: int
    c_o: int
    n: int

    @property
    def hw(self) -> int:
        return self.u_w * self.u_h

    @property
    def c_n(self) -> int:
        return self.n // self.hw

    def validate(self):
        if self.n % self.hw:
            raise ValueError("u_w*u_h must divide the slot count")
        c_n = self.c_n
        if c_n < 1 or self.c_i % c_n or self.c_o % c_n:
            raise ValueError(f"c_n={c_n} must divide c_i={self.c_i} and c_o={self.c_o}")
        if self.k_w % 2 == 0 or self.k_h % 2 == 0:
            raise ValueError("kernels must be odd for same-padding")
        if self.k_w > 2 * self.u_w or self.k_h > 2 * self.u_h:
            raise ValueError("kernel larger than twice the image")


@dataclass(frozen=True)
class ConvCost:
    rotations: int
    sc_mults: int
    adds: int
    output_ciphertexts: int

    def as_dict(self) -> dict:
        return {
            "rotations": self.rotations,
            "sc_mults": self.sc_mults,
            "adds": self.adds,
            "output_ciphertexts": self.output_ciphertexts,
        }


@dataclass(frozen=True)
class ConvPlan:
    method: str
    geometry: ConvGeometry
    p: int
    # coeff_vectors[(B, Bp, d, oi)] -> plaintext PackedVector
    coeff_vectors: dict
    offsets: tuple      # (dr, dc, slot_offset) per kernel position
    cost: ConvCost


def conv_offsets(geo: ConvGeometry) -> list[tuple[int, int, int]]:
    out = []
    for dr in range(-(geo.k_h // 2), geo.k_h // 2 + 1):
        for dc in range(-(geo.k_w // 2), geo.k_w // 2 + 1):
            out.append((dr, dc, dr * geo.u_w + dc))
    return out


def predict_conv_cost(method: str, geo: ConvGeometry) -> ConvCost:
    geo.validate()
    if method not in CONV_METHODS:
        raise ValueError(f"unknown conv method {method!r}")
    c_n, c_i, c_o = geo.c_n, geo.c_i, geo.c_o
    kk = geo.k_w * geo.k_h
    siso = c_i * (kk - 1) // c_n
    if method == "gazelle":
        block = (c_o * c_i // (c_n * c_n)) * (c_n - 1)
    else:
        block = (c_o // c_n) * (c_n - 1)
    sc = kk * c_i * c_o // c_n
    adds = (c_o // c_n) * (c_i * kk - 1)
    return ConvCost(block + siso, sc, adds, c_o // c_n)


def plan_conv(method: str, kernels, geo: ConvGeometry,
              params: FieldParams) -> ConvPlan:
    """Encode kernels into per-(block, diagonal, offset) coefficient vectors.

    kernels[o][i][kr][kc] with kr, kc in kernel raster order; entry
    (kr, kc) multiplies the input pixel at spatial offset
    (kr - k_h//2, kc - k_w//2) from the output position.
    """
    geo.validate()
    if method not in CONV_METHODS:
        raise ValueError(f"unknown conv method {method!r}")
    p = params.p
    c_n, hw = geo.c_n, geo.hw
    n_out_blocks = geo.c_o // c_n
    n_in_blocks = geo.c_i // c_n
    offs = conv_offsets(geo)
    coeff: dict = {}
    for B in range(n_out_blocks):
        for Bp in range(n_in_blocks):
            for d in range(c_n):
                for oi, (dr, dc, _) in enumerate(offs):
                    vec = [0] * geo.n
                    for m in range(c_n):
                        o_ch = B * c_n + (m + d) % c_n
                        i_ch = Bp * c_n + m
                        k = kernels[o_ch][i_ch][dr + geo.k_h // 2][dc + geo.k_w // 2] % p
                        if k == 0:
                            continue
                        base = m * hw
                        for r in range(geo.u_h):
                            rr = r + dr
                            if rr < 0 or rr >= geo.u_h:
                                continue
                            row = base + r * geo.u_w
                            for c in range(geo.u_w):
                                if 0 <= c + dc < geo.u_w:
                                    vec[row + c] = k
                    coeff[(B, Bp, d, oi)] = PackedVector(tuple(vec),
                                                         is_ciphertext=False)
    return ConvPlan(method=method, geometry=geo, p=p, coeff_vectors=coeff,
                    offsets=tuple(offs), cost=predict_conv_cost(method, geo))


def pack_channels(geo: ConvGeometry, channels, backend: SlotBackend
                  ) -> list[PackedVector]:
    """channels[i][r][c] -> c_i/c_n plaintext vectors in channel order."""
    out = []
    for b in range(geo.c_i // geo.c_n):
        vec = []
        for m in range(geo.c_n):
            img = channels[b * geo.c_n + m]
            for r in range(geo.u_h):
                vec.extend(img[r])
        out.append(backend.encode(vec))
    return out


def unpack_channels(geo: ConvGeometry, vectors) -> list[list[list[int]]]:
    """Inverse of pack_channels on decrypted slot vectors (c_o side)."""
    chans = []
    for vec in vectors:
        for m in range(geo.c_n):
            base = m * geo.hw
            chans.append([
                list(vec[base + r * geo.u_w : base + (r + 1) * geo.u_w])
                for r in range(geo.u_h)
            ])
    return chans


def apply_conv(plan: ConvPlan, input_cts, backend: SlotBackend
               ) -> list[PackedVector]:
    """Run the homomorphic convolution; returns c_o/c_n ciphertexts.

    The SISO rotations of each input ciphertext are computed once and
    shared across every kernel block, which is what both cost formulas
    assume.
    """
    geo = plan.geometry
    c_n = geo.c_n
    n_out_blocks = geo.c_o // c_n
    n_in_blocks = geo.c_i // c_n
    if len(input_cts) != n_in_blocks:
        raise ValueError("input ciphertext count mismatch")
    rotated: list[dict[int, PackedVector]] = []
    for ct in input_cts:
        rots = {0: ct}
        for _, _, off in plan.offsets:
            if off != 0 and off not in rots:
                rots[off] = backend.rot(ct, off)
        rotated.append(rots)

    def partial(B: int, Bp: int, d: int) -> PackedVector:
        acc = None
        for oi, (_, _, off) in enumerate(plan.offsets):
            enc = plan.coeff_vectors[(B, Bp, d, oi)]
            prod = backend.sc_mult(enc, rotated[Bp][off])
            acc = prod if acc is None else backend.ct_add(acc, prod)
        return acc

    outs = []
    for B in range(n_out_blocks):
        total = None
        if plan.method == "gazelle":
            # align each block partial before any cross-block addition
            for Bp in range(n_in_blocks):
                for d in range(c_n):
                    part = partial(B, Bp, d)
                    if d:
                        part = backend.rot(part, -d * geo.hw)
                    total = part if total is None else backend.ct_add(total, part)
        else:
            # first-Add-second-Rotation: merge same-diagonal partials, then align
            for d in range(c_n):
                merged = None
                for Bp in range(n_in_blocks):
                    part = partial(B, Bp, d)
                    merged = part if merged is None else backend.ct_add(merged, part)
                if d:
                    merged = backend.rot(merged, -d * geo.hw)
                total = merged if total is None else backend.ct_add(total, merged)
        outs.append(total)
    return outs


def conv_oracle(geo: ConvGeometry, kernels, channels, params: FieldParams
                ) -> list[list[list[int]]]:
    """Dense same-padding stride-1 convolution in plain field arithmetic."""
    p = params.p
    out = []
    for o in range(geo.c_o):
        img = [[0] * geo.u_w for _ in range(geo.u_h)]
        for r in range(geo.u_h):
            for c in range(geo.u_w):
                acc = 0
                for i in range(geo.c_i):
                    for dr in range(-(geo.k_h // 2), geo.k_h // 2 + 1):
                        rr = r + dr
                        if rr < 0 or rr >= geo.u_h:
                            continue
                        for dc in range(-(geo.k_w // 2), geo.k_w // 2 + 1):
                            cc = c + dc
                            if cc < 0 or cc >= geo.u_w:
                                continue
                            acc += channels[i][rr][cc] * \
                                kernels[o][i][dr + geo.k_h // 2][dc + geo.k_w // 2]
                img[r][c] = acc % p
        out.append(img)
    return out
