"""Model description, JSON codec, range validation and the plaintext oracle.

Weights and inputs are pre-quantized integers on the signed representative
range of the field.  At load time worst-case interval arithmetic walks the
layer chain and rejects any model whose intermediate values could leave
(-p/2, p/2); there is no cross-layer rescaling, so test models are scaled
to stay inside the field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .convpack import ConvGeometry
from .drbg import Drbg
from .field import FieldParams


@dataclass
class FcSpec:
    rows: list | None          # n_o x n_i signed ints; None in arch-only files
    n_o: int
    n_i: int

    kind = "fc"

    @property
    def in_width(self) -> int:
        return self.n_i

    @property
    def out_width(self) -> int:
        return self.n_o


@dataclass
class ConvSpec:
    kernels: list | None       # c_o x c_i x k_h x k_w signed ints
    u_w: int
    u_h: int
    c_i: int
    k_w: int
    k_h: int
    c_o: int

    kind = "conv"

    @property
    def in_width(self) -> int:
        return self.c_i * self.u_w * self.u_h

    @property
    def out_width(self) -> int:
        return self.c_o * self.u_w * self.u_h

    def geometry(self, n: int) -> ConvGeometry:
        return ConvGeometry(self.u_w, self.u_h, self.c_i, self.k_w, self.k_h,
                            self.c_o, n)


@dataclass
class ModelSpec:
    params: FieldParams
    layers: list = field(default_factory=list)
    input_bound: int = 255     # max |input| used by range validation
    activation: str = "relu"

    @property
    def has_weights(self) -> bool:
        return all((ly.rows if ly.kind == "fc" else ly.kernels) is not None
                   for ly in self.layers)

    def widths(self) -> list[int]:
        """Input width followed by each layer's output width."""
        return [self.layers[0].in_width] + [ly.out_width for ly in self.layers]

    def validate_chain(self):
        if not self.layers:
            raise ValueError("model has no layers")
        if self.activation != "relu":
            raise ValueError(f"unsupported activation {self.activation!r}")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_width != b.in_width:
                raise ValueError(
                    f"layer widths do not chain: {a.out_width} -> {b.in_width}")

    def validate_ranges(self):
        """Worst-case interval arithmetic over the signed representatives."""
        if not self.has_weights:
            raise ValueError("range validation needs weights")
        half = self.params.half
        lo = [-self.input_bound] * self.layers[0].in_width
        hi = [self.input_bound] * self.layers[0].in_width
        for idx, ly in enumerate(self.layers):
            lo, hi = _layer_interval(ly, lo, hi)
            worst = max(max(map(abs, lo)), max(map(abs, hi)))
            if worst >= half:
                raise ValueError(
                    f"layer {idx + 1} may overflow the field: bound {worst} "
                    f">= p/2 ({half})")
            if idx < len(self.layers) - 1:
                lo = [max(v, 0) for v in lo]   # ReLU between linear layers

    # -- plaintext oracle -----------------------------------------------------

    def forward(self, t0: list[int]) -> list[int]:
        """Exact quantized forward pass on signed integers."""
        if not self.has_weights:
            raise ValueError("forward pass needs weights")
        vec = list(t0)
        for idx, ly in enumerate(self.layers):
            vec = _layer_forward(ly, vec)
            if idx < len(self.layers) - 1:
                vec = [max(v, 0) for v in vec]
        return vec


def _layer_forward(ly, vec: list[int]) -> list[int]:
    if ly.kind == "fc":
        return [sum(w * x for w, x in zip(row, vec)) for row in ly.rows]
    hw = ly.u_w * ly.u_h
    out = []
    for o in range(ly.c_o):
        for r in range(ly.u_h):
            for c in range(ly.u_w):
                acc = 0
                for i in range(ly.c_i):
                    base = i * hw
                    for dr in range(-(ly.k_h // 2), ly.k_h // 2 + 1):
                        rr = r + dr
                        if not 0 <= rr < ly.u_h:
                            continue
                        for dc in range(-(ly.k_w // 2), ly.k_w // 2 + 1):
                            cc = c + dc
                            if not 0 <= cc < ly.u_w:
                                continue
                            acc += (vec[base + rr * ly.u_w + cc]
                                    * ly.kernels[o][i][dr + ly.k_h // 2][dc + ly.k_w // 2])
                out.append(acc)
    return out


def _layer_interval(ly, lo, hi):
    if ly.kind == "fc":
        out_lo, out_hi = [], []
        for row in ly.rows:
            a = sum(w * (l if w > 0 else h) for w, l, h in zip(row, lo, hi))
            b = sum(w * (h if w > 0 else l) for w, l, h in zip(row, lo, hi))
            out_lo.append(a)
            out_hi.append(b)
        return out_lo, out_hi
    # conv: bound via per-channel extremes; exact enough for validation
    hw = ly.u_w * ly.u_h
    ch_lo = [min(lo[i * hw : (i + 1) * hw]) for i in range(ly.c_i)]
    ch_hi = [max(hi[i * hw : (i + 1) * hw]) for i in range(ly.c_i)]
    out_lo, out_hi = [], []
    for o in range(ly.c_o):
        a = b = 0
        for i in range(ly.c_i):
            for kr in ly.kernels[o][i]:
                for w in kr:
                    a += w * (ch_lo[i] if w > 0 else ch_hi[i])
                    b += w * (ch_hi[i] if w > 0 else ch_lo[i])
        out_lo.extend([a] * hw)
        out_hi.extend([b] * hw)
    return out_lo, out_hi


# -- JSON codec ---------------------------------------------------------------------


def model_to_json(model: ModelSpec) -> dict:
    layers = []
    for ly in model.layers:
        if ly.kind == "fc":
            layers.append({"type": "fc", "dims": [ly.n_o, ly.n_i],
                           "weights": ly.rows})
        else:
            layers.append({"type": "conv",
                           "dims": [ly.u_w, ly.u_h, ly.c_i, ly.k_w, ly.k_h, ly.c_o],
                           "kernels": ly.kernels})
    return {"modulus": model.params.p, "lambda": model.params.lam,
            "input_bound": model.input_bound, "activation": model.activation,
            "layers": layers}


def model_from_json(doc: dict) -> ModelSpec:
    params = FieldParams(p=doc["modulus"], lam=doc.get("lambda", 128))
    layers = []
    for entry in doc["layers"]:
        if entry["type"] == "fc":
            n_o, n_i = entry["dims"]
            rows = entry.get("weights")
            if rows is not None and (len(rows) != n_o or
                                     any(len(r) != n_i for r in rows)):
                raise ValueError("fc weight shape does not match dims")
            layers.append(FcSpec(rows=rows, n_o=n_o, n_i=n_i))
        elif entry["type"] == "conv":
            u_w, u_h, c_i, k_w, k_h, c_o = entry["dims"]
            layers.append(ConvSpec(kernels=entry.get("kernels"), u_w=u_w,
                                   u_h=u_h, c_i=c_i, k_w=k_w, k_h=k_h, c_o=c_o))
        else:
            raise ValueError(f"unknown layer type {entry['type']!r}")
    model = ModelSpec(params=params, layers=layers,
                      input_bound=doc.get("input_bound", 255),
                      activation=doc.get("activation", "relu"))
    model.validate_chain()
    return model


def save_model(model: ModelSpec, path: str):
    with open(path, "w") as fh:
        json.dump(model_to_json(model), fh)


def load_model(path: str) -> ModelSpec:
    with open(path) as fh:
        return model_from_json(json.load(fh))


def save_input(vec: list[int], path: str):
    with open(path, "w") as fh:
        json.dump(list(vec), fh)


def load_input(path: str) -> list[int]:
    with open(path) as fh:
        vec = json.load(fh)
    if not isinstance(vec, list) or not all(isinstance(v, int) for v in vec):
        raise ValueError("input file must be a JSON integer array")
    return vec


# -- test model generators ---------------------------------------------------------


def make_mlp(params: FieldParams, dims, seed, weight_bound: int = 3,
             input_bound: int = 255) -> ModelSpec:
    """Random quantized MLP; weights small enough to pass range validation."""
    rng = Drbg(seed, b"model")
    layers = []
    for n_i, n_o in zip(dims, dims[1:]):
        rows = [[rng.randbelow(2 * weight_bound + 1) - weight_bound
                 for _ in range(n_i)] for _ in range(n_o)]
        layers.append(FcSpec(rows=rows, n_o=n_o, n_i=n_i))
    model = ModelSpec(params=params, layers=layers, input_bound=input_bound)
    model.validate_chain()
    model.validate_ranges()
    return model


def make_input(model: ModelSpec, seed, nonneg: bool = True) -> list[int]:
    rng = Drbg(seed, b"input")
    width = model.layers[0].in_width
    b = model.input_bound
    if nonneg:
        return [rng.randbelow(b + 1) for _ in range(width)]
    return [rng.randbelow(2 * b + 1) - b for _ in range(width)]
