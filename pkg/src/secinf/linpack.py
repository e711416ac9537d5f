"""Matrix-vector packing strategies for the homomorphic linear layer.

Three methods over the slot backend:

* ``naive``     - one plaintext row per vector, log2(n_i) rotate-and-add
                  folds per row, result in slot 0 of each output ciphertext.
* ``hybrid``    - generalized-diagonal encoding of the row-interleaved
                  squashed matrix; the input ciphertext carries n/n_i
                  replicated copies of t, log2(n/n_o) folds finish the sums.
* ``simc2``     - block-combined diagonal encoding: rows are grouped in
                  blocks of l, each row split into l segments, and only the
                  l-1 input rotations remain on ciphertext; the final
                  rotate-and-sum moves into the plaintext shares
                  (mask_and_share + collapse_share).

Dimensions are zero-padded to powers of two; padding slots carry zeros and
drop out at collapse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .drbg import Drbg
from .field import FieldParams
from .slothe import PackedVector, SlotBackend

METHODS = ("naive", "hybrid", "simc2")


def _pow2_ceil(x: int) -> int:
    return 1 << max(0, (x - 1).bit_length())


@dataclass(frozen=True)
class MatVecCost:
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
class MatVecPlan:
    method: str
    n_i: int          # original input dim
    n_o: int          # original output dim
    n_i_pad: int      # padded input dim actually laid out
    n_o_pad: int
    n: int
    p: int            # field modulus the encodings live in
    l: int            # row-group size (simc2); 1 elsewhere
    copies: int       # input replication factor n / n_i_pad
    encoded_rows: tuple          # tuple of PackedVector plaintexts
    rotation_offsets: tuple      # slot offsets the input ciphertext needs
    cost: MatVecCost

    @property
    def seg(self) -> int:
        return self.n_i_pad // self.l


def predict_matvec_cost(method: str, n_i: int, n_o: int, n: int,
                        l: int | None = None) -> MatVecCost:
    """Closed-form operation counts.

    For the default single-output-ciphertext l these reduce to
    naive (n_o*log2(n_i), n_o, n_o*log2(n_i)),
    hybrid (log2(n/n_o)+w-1, w, same) and simc2 (l-1, w, w-1)
    with w = n_i*n_o/n; for exploratory l the simc2 add count is
    (l-1) per output ciphertext, which coincides with w-1 only in
    the single-output configuration.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    n_i_pad = _pow2_ceil(n_i)
    n_o_pad = _pow2_ceil(n_o)
    if n_i_pad > n:
        raise ValueError("input dim exceeds slot count")
    if method == "naive":
        folds = int(math.log2(n_i_pad))
        return MatVecCost(n_o * folds, n_o, n_o * folds, n_o)
    if method == "hybrid":
        if n_o_pad > n:
            raise ValueError("output dim exceeds slot count")
        n_i_eff = max(n_i_pad, n // n_o_pad)
        w = n_i_eff * n_o_pad // n
        folds = int(math.log2(n // n_o_pad))
        return MatVecCost(folds + w - 1, w, folds + w - 1, 1)
    l = _default_l(n_i_pad, n_o_pad, n) if l is None else l
    _check_l(l, n_i_pad, n_o_pad)
    groups = n_o_pad // l
    groups_per_ct = max(1, n // n_i_pad)
    cts_per_k = -(-groups // groups_per_ct)  # ceil
    return MatVecCost(l - 1, l * cts_per_k, (l - 1) * cts_per_k, cts_per_k)


def _default_l(n_i_pad: int, n_o_pad: int, n: int) -> int:
    return max(1, n_i_pad * n_o_pad // n)


def _check_l(l: int, n_i_pad: int, n_o_pad: int):
    if l < 1 or n_o_pad % l or n_i_pad % l:
        raise ValueError(f"l={l} must divide padded dims {n_o_pad}x{n_i_pad}")


def plan_matvec_geometry(method: str, n_i: int, n_o: int, n: int,
                         params: FieldParams, l: int | None = None
                         ) -> MatVecPlan:
    """Plan skeleton without weight encodings.

    Carries everything the key-holding party needs: input packing shape,
    rotation offsets, output count and the collapse layout.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    n_i_pad = _pow2_ceil(n_i)
    n_o_pad = _pow2_ceil(n_o)
    if method == "hybrid":
        n_i_pad = max(n_i_pad, n // n_o_pad)
    if n_i_pad > n:
        raise ValueError("dims exceed slot count")
    if method == "simc2":
        l = _default_l(n_i_pad, n_o_pad, n) if l is None else l
        _check_l(l, n_i_pad, n_o_pad)
        seg = n_i_pad // l
        offsets = tuple(k * seg for k in range(1, l))
    else:
        l = 1
        offsets = ()
    cost = predict_matvec_cost(method, n_i, n_o, n, l=l if method == "simc2" else None)
    return MatVecPlan(method=method, n_i=n_i, n_o=n_o, n_i_pad=n_i_pad,
                      n_o_pad=n_o_pad, n=n, p=params.p, l=l,
                      copies=n // n_i_pad, encoded_rows=(),
                      rotation_offsets=offsets, cost=cost)


def plan_matvec(method: str, rows, n: int, params: FieldParams,
                l: int | None = None) -> MatVecPlan:
    """Precompute the plaintext encodings of the weight matrix."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    n_o = len(rows)
    n_i = len(rows[0]) if n_o else 0
    if any(len(r) != n_i for r in rows):
        raise ValueError("ragged matrix")
    n_i_pad = _pow2_ceil(n_i)
    n_o_pad = _pow2_ceil(n_o)
    if n_i_pad > n or (method != "naive" and n_o_pad > n):
        raise ValueError("dims exceed slot count")
    p = params.p

    def elem(r: int, c: int) -> int:
        if r < n_o and c < n_i:
            return rows[r][c] % p
        return 0

    if method == "hybrid":
        n_i_pad = max(n_i_pad, n // n_o_pad)

    copies = n // n_i_pad
    encoded: list[PackedVector] = []
    offsets: list[int] = []

    if method == "naive":
        for r in range(n_o):
            vec = [elem(r, c) for c in range(n_i_pad)] + [0] * (n - n_i_pad)
            encoded.append(PackedVector(tuple(vec), is_ciphertext=False))
        folds = int(math.log2(n_i_pad))
        offsets = [n_i_pad >> (s + 1) for s in range(folds)]
        cost = MatVecCost(n_o * folds, n_o, n_o * folds, n_o)
        l = 1
    elif method == "hybrid":
        w = n_i_pad * n_o_pad // n
        # vector k, slot c*n_i_pad + j holds row c*w + (j mod w),
        # column (j + k) mod n_i_pad of the padded matrix
        for k in range(w):
            vec = [0] * n
            for c in range(copies):
                base = c * n_i_pad
                for j in range(n_i_pad):
                    vec[base + j] = elem(c * w + (j % w), (j + k) % n_i_pad)
            encoded.append(PackedVector(tuple(vec), is_ciphertext=False))
        folds = int(math.log2(n // n_o_pad))
        offsets = list(range(1, w)) + [w << s for s in range(folds)]
        cost = MatVecCost(folds + w - 1, w, folds + w - 1, 1)
        l = 1
    else:
        l = _default_l(n_i_pad, n_o_pad, n) if l is None else l
        _check_l(l, n_i_pad, n_o_pad)
        seg = n_i_pad // l
        groups = n_o_pad // l
        groups_per_ct = max(1, n // n_i_pad)
        cts_per_k = -(-groups // groups_per_ct)
        # E_k for ciphertext v: group g, row r in group puts segment
        # ((r+k) mod l) of row g*l+r at slot offset r*seg
        for k in range(l):
            for v in range(cts_per_k):
                vec = [0] * n
                for g_local in range(min(groups_per_ct, groups - v * groups_per_ct)):
                    g = v * groups_per_ct + g_local
                    for r in range(l):
                        row = g * l + r
                        col0 = ((r + k) % l) * seg
                        base = g_local * n_i_pad + r * seg
                        for j in range(seg):
                            vec[base + j] = elem(row, col0 + j)
                encoded.append(PackedVector(tuple(vec), is_ciphertext=False))
        offsets = [k * seg for k in range(1, l)]
        cost = MatVecCost(l - 1, l * cts_per_k, (l - 1) * cts_per_k, cts_per_k)

    return MatVecPlan(method=method, n_i=n_i, n_o=n_o, n_i_pad=n_i_pad,
                      n_o_pad=n_o_pad, n=n, p=p, l=l, copies=copies,
                      encoded_rows=tuple(encoded), rotation_offsets=tuple(offsets),
                      cost=cost)


def pack_input(plan: MatVecPlan, t, backend: SlotBackend) -> PackedVector:
    """Replicate t (zero-padded to the plan's padded width) across all copies."""
    if len(t) != plan.n_i:
        raise ValueError("input length mismatch")
    padded = list(t) + [0] * (plan.n_i_pad - plan.n_i)
    return backend.encode(padded * plan.copies)


def input_rotations(plan: MatVecPlan, ct_in: PackedVector,
                    backend: SlotBackend) -> dict[int, PackedVector]:
    """All rotated copies of the input the plan needs, keyed by offset.

    Computed once so several plans over the same input (e.g. the weight
    matrix and its MAC-scaled twin) share the rotation cost.
    """
    rots = {0: ct_in}
    if plan.method == "simc2":
        for off in plan.rotation_offsets:
            rots[off] = backend.rot(ct_in, off)
    elif plan.method == "hybrid":
        w = len(plan.encoded_rows)
        for k in range(1, w):
            rots[k] = backend.rot(ct_in, k)
    return rots


def apply_matvec(plan: MatVecPlan, ct_in: PackedVector, backend: SlotBackend,
                 rotations: dict[int, PackedVector] | None = None
                 ) -> list[PackedVector]:
    """Run the homomorphic program of the plan; returns output ciphertexts."""
    if len(ct_in) != plan.n:
        raise ValueError("plan/input slot count mismatch")
    if plan.method == "naive":
        outs = []
        for enc in plan.encoded_rows:
            acc = backend.sc_mult(enc, ct_in)
            for off in plan.rotation_offsets:
                acc = backend.ct_add(acc, backend.rot(acc, off))
            outs.append(acc)
        return outs
    if plan.method == "hybrid":
        w = len(plan.encoded_rows)
        rots = rotations if rotations is not None else input_rotations(plan, ct_in, backend)
        acc = backend.sc_mult(plan.encoded_rows[0], rots[0])
        for k in range(1, w):
            acc = backend.ct_add(acc, backend.sc_mult(plan.encoded_rows[k], rots[k]))
        folds = int(math.log2(plan.n // plan.n_o_pad))
        for s in range(folds):
            acc = backend.ct_add(acc, backend.rot(acc, w << s))
        return [acc]
    rots = rotations if rotations is not None else input_rotations(plan, ct_in, backend)
    cts_per_k = plan.cost.output_ciphertexts
    outs: list[PackedVector] = []
    for v in range(cts_per_k):
        acc = None
        for k in range(plan.l):
            enc = plan.encoded_rows[k * cts_per_k + v]
            prod = backend.sc_mult(enc, rots[k * plan.seg])
            acc = prod if acc is None else backend.ct_add(acc, prod)
        outs.append(acc)
    return outs


def mask_and_share(cts, rng: Drbg, backend: SlotBackend
                   ) -> tuple[list[PackedVector], list[list[int]]]:
    """Subtract a fresh uniform mask from each ciphertext.

    The masked ciphertexts go to the party holding the secret key; the
    masks stay local and become the other additive share.
    """
    p = backend.params.p
    masked, masks = [], []
    for ct in cts:
        mask = rng.field_vector(p, backend.n)
        m = backend.ct_sub(ct, backend.encode(mask))
        masked.append(backend.rerandomize(m))
        masks.append(mask)
    return masked, masks


def collapse_share(plain_vectors, plan: MatVecPlan) -> list[int]:
    """Plaintext rotate-and-add equivalent: per-block summation.

    For simc2 each contiguous block of n_i_pad/l slots sums to one output
    element in row order.  For the other methods this extracts the result
    slots.  Zero ledger cost; padding rows are dropped.
    """
    if plan.method == "naive":
        return [vec[0] % plan.p for vec in plain_vectors][: plan.n_o]
    if plan.method == "hybrid":
        vec = plain_vectors[0]
        w = max(1, plan.n_i_pad * plan.n_o_pad // plan.n)
        return [vec[(r // w) * plan.n_i_pad + (r % w)] % plan.p
                for r in range(plan.n_o)]
    seg = plan.seg
    groups = plan.n_o_pad // plan.l
    groups_per_ct = max(1, plan.n // plan.n_i_pad)
    out: list[int] = []
    for v, vec in enumerate(plain_vectors):
        for g_local in range(min(groups_per_ct, groups - v * groups_per_ct)):
            for r in range(plan.l):
                base = g_local * plan.n_i_pad + r * seg
                out.append(sum(vec[base : base + seg]) % plan.p)
    return out[: plan.n_o]
