"""Quantum operations in Kraus, Choi and Stinespring form.

Conventions
-----------
* A Kraus operator of a channel ``d_in -> d_out`` is a ``d_out x d_in`` array.
* Choi matrices use output (x) input ordering with the unnormalised maximally
  entangled vector ``|Omega> = sum_i |i>|i>``, so trace preservation reads
  ``tr_out J = I``.
* Stinespring isometries map ``d_in`` into output (x) environment.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._config import TOL
from .exceptions import DimensionError, ValidationError
from .qmath import (
    DensityMatrix,
    as_density,
    check_dims,
    partial_trace,
    permute_factors,
    tensor,
)

__all__ = [
    "KrausChannel",
    "ChoiMatrix",
    "StinespringIsometry",
    "ValidationReport",
    "validate",
    "check_channel",
    "apply",
    "compose",
    "tensor_channels",
    "mix",
    "kraus_to_choi",
    "choi_to_kraus",
    "stinespring_to_kraus",
    "kraus_to_stinespring",
    "reduced_channel",
    "marginal_channel",
    "choi_distance",
    "identity_channel",
    "depolarizing_channel",
    "dephasing_channel",
    "unitary_channel",
    "constant_channel",
    "swap_channel",
    "discard_channel",
]


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """A completely positive map given by its Kraus operators.

    ``dims_in`` and ``dims_out`` record tensor-factor structure for block
    operations; they default to a single factor. Trace preservation is not
    enforced on construction, use :func:`validate` or :func:`check_channel`.
    """

    kraus: tuple
    dims_in: tuple[int, ...] = field(default=None)
    dims_out: tuple[int, ...] = field(default=None)

    def __post_init__(self):
        ops = np.asarray(self.kraus, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[0] == 0:
            raise DimensionError("Kraus set must be a nonempty stack of matrices")
        if not np.all(np.isfinite(ops)):
            raise ValidationError("Kraus operators have non-finite entries")
        ops = ops.copy()
        ops.setflags(write=False)
        object.__setattr__(self, "kraus", ops)
        object.__setattr__(self, "dims_in", check_dims(self.dims_in, ops.shape[2]))
        object.__setattr__(self, "dims_out", check_dims(self.dims_out, ops.shape[1]))

    @property
    def dim_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus.shape[1]

    @property
    def rank(self) -> int:
        return self.kraus.shape[0]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        """Apply to a raw operator without validation (batched over leading axes)."""
        return np.einsum("kai,...ij,kbj->...ab", self.kraus, rho, self.kraus.conj())

    def with_dims(self, dims_in=None, dims_out=None) -> "KrausChannel":
        return KrausChannel(self.kraus, dims_in or self.dims_in, dims_out or self.dims_out)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    dim_in: int
    dim_out: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = self.dim_in * self.dim_out
        if m.shape != (n, n):
            raise DimensionError(f"Choi matrix must be {n}x{n}, got {m.shape}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def deviations(self) -> tuple[float, float]:
        """(most negative eigenvalue magnitude, max |tr_out J - I|)."""
        herm = 0.5 * (self.matrix + self.matrix.conj().T)
        neg = max(0.0, -float(np.linalg.eigvalsh(herm)[0]))
        red = partial_trace(self.matrix, (self.dim_out, self.dim_in), (2,))
        tp = float(np.max(np.abs(red - np.eye(self.dim_in))))
        return neg, tp


@dataclass(frozen=True, eq=False)
class StinespringIsometry:
    """Isometry ``V: d_in -> d_out (x) d_env`` stored as a 2-D array."""

    v: np.ndarray
    dim_out: int
    dim_env: int

    def __post_init__(self):
        v = np.asarray(self.v, dtype=complex)
        if v.ndim != 2 or v.shape[0] != self.dim_out * self.dim_env:
            raise DimensionError(
                f"isometry must have {self.dim_out * self.dim_env} rows, got shape {v.shape}"
            )
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def dim_in(self) -> int:
        return self.v.shape[1]


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    deviation: float

    def __bool__(self) -> bool:
        return self.passed


def validate(ch: KrausChannel, tol: float = TOL.tp) -> ValidationReport:
    """Check trace preservation: max-entry deviation of sum A^dagger A from I."""
    s = np.einsum("kai,kaj->ij", ch.kraus.conj(), ch.kraus)
    dev = float(np.max(np.abs(s - np.eye(ch.dim_in))))
    return ValidationReport(dev <= tol, dev)


def check_channel(ch: KrausChannel, tol: float = TOL.tp) -> KrausChannel:
    rep = validate(ch, tol)
    if not rep.passed:
        raise ValidationError(f"channel is not trace preserving (deviation {rep.deviation:.3g})")
    return ch


def apply(ch: KrausChannel, rho) -> DensityMatrix:
    """Output state ``sum_k A_k rho A_k^dagger`` as a validated density matrix."""
    rho = as_density(rho)
    if rho.dim != ch.dim_in:
        raise DimensionError(f"state has dimension {rho.dim}, channel expects {ch.dim_in}")
    out = ch(rho.matrix)
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(out, ch.dims_out)


def _max_rank(dim_in: int, dim_out: int) -> int:
    return dim_in * dim_out


def _canonical(ops: np.ndarray, dims_in, dims_out) -> KrausChannel:
    ch = KrausChannel(ops, dims_in, dims_out)
    if ch.rank > _max_rank(ch.dim_in, ch.dim_out):
        return choi_to_kraus(kraus_to_choi(ch), tol=np.inf).with_dims(dims_in, dims_out)
    return ch


def compose(second: KrausChannel, first: KrausChannel) -> KrausChannel:
    """The channel ``second o first`` (apply ``first``, then ``second``)."""
    if first.dim_out != second.dim_in:
        raise DimensionError(
            f"cannot compose: first outputs dimension {first.dim_out}, "
            f"second expects {second.dim_in}"
        )
    ops = np.einsum("jam,kmi->jkai", second.kraus, first.kraus)
    ops = ops.reshape(-1, second.dim_out, first.dim_in)
    return _canonical(ops, first.dims_in, second.dims_out)


def tensor_channels(*channels: KrausChannel) -> KrausChannel:
    """Tensor product channel with Kraus set ``{A_j (x) B_k (x) ...}``."""
    if not channels:
        raise ValueError("need at least one channel")
    ops = channels[0].kraus
    dims_in, dims_out = channels[0].dims_in, channels[0].dims_out
    for ch in channels[1:]:
        ops = np.einsum("jab,kcd->jkacbd", ops, ch.kraus)
        r, a, b, c, d = ops.shape[0] * ops.shape[1], *ops.shape[2:]
        ops = ops.reshape(r, a * b, c * d)
        dims_in = dims_in + ch.dims_in
        dims_out = dims_out + ch.dims_out
    return KrausChannel(ops, dims_in, dims_out)


def mix(channels: Sequence[KrausChannel], weights: Sequence[float]) -> KrausChannel:
    """Convex combination ``sum_i w_i E_i`` with Kraus set ``{sqrt(w_i) A^(i)_k}``."""
    w = np.asarray(weights, dtype=float)
    if len(channels) == 0 or w.shape != (len(channels),):
        raise ValueError("need one weight per channel")
    if np.any(w < 0) or abs(w.sum() - 1.0) > TOL.weights:
        raise ValueError(f"weights must be a probability vector, got {w.tolist()}")
    first = channels[0]
    for ch in channels[1:]:
        if (ch.dim_in, ch.dim_out) != (first.dim_in, first.dim_out):
            raise DimensionError("mixed channels must share input and output dimensions")
    ops = [np.sqrt(wi) * ch.kraus for wi, ch in zip(w, channels) if wi > 0]
    return _canonical(np.concatenate(ops), first.dims_in, first.dims_out)


def kraus_to_choi(ch: KrausChannel) -> ChoiMatrix:
    # (A (x) I)|Omega> is A flattened row-major in out (x) in ordering
    vecs = ch.kraus.reshape(ch.rank, -1)
    j = vecs.T @ vecs.conj()
    return ChoiMatrix(ch.dim_in, ch.dim_out, j)


def choi_to_kraus(j: ChoiMatrix, tol: float = TOL.choi_psd) -> KrausChannel:
    """Kraus operators from scaled eigenvectors of the Choi matrix.

    Eigenvalues at or below ``TOL.choi_drop`` are discarded. Raises
    :class:`ValidationError` if ``J`` is not positive or not trace preserving
    within ``tol``.
    """
    neg, tp = j.deviations()
    if neg > tol or tp > tol:
        raise ValidationError(
            f"Choi matrix is not a valid channel (negativity {neg:.3g}, trace deviation {tp:.3g})"
        )
    herm = 0.5 * (j.matrix + j.matrix.conj().T)
    w, v = np.linalg.eigh(herm)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    keep = w > TOL.choi_drop
    if not np.any(keep):
        keep[0] = True
    ops = (v[:, keep] * np.sqrt(np.clip(w[keep], 0, None))).T
    return KrausChannel(ops.reshape(-1, j.dim_out, j.dim_in))


def kraus_to_stinespring(ch: KrausChannel) -> StinespringIsometry:
    v = ch.kraus.transpose(1, 0, 2).reshape(ch.dim_out * ch.rank, ch.dim_in)
    return StinespringIsometry(v, ch.dim_out, ch.rank)


def stinespring_to_kraus(iso: StinespringIsometry, tol: float = TOL.isometry) -> KrausChannel:
    """Kraus operators ``A_k = (I_out (x) <k|_env) V``."""
    v = iso.v
    dev = float(np.max(np.abs(v.conj().T @ v - np.eye(iso.dim_in))))
    if dev > tol:
        raise ValidationError(f"V is not an isometry (deviation {dev:.3g})")
    ops = v.reshape(iso.dim_out, iso.dim_env, iso.dim_in).transpose(1, 0, 2)
    return KrausChannel(ops)


def marginal_channel(block_op: KrausChannel, states: Sequence, keep: Sequence[int]) -> KrausChannel:
    """Channel induced on the slots ``keep`` (1-based) of a block operation.

    ``states[j]`` fills input slot ``j + 1`` whenever that slot is not kept;
    entries for kept slots are ignored and may be ``None``. The output is
    traced down to the kept slots. The Choi matrix ``sum_ab T(|a><b|) (x) |a><b|``
    is built by propagating each basis operator of the kept input space.
    """
    n = len(states)
    keep = sorted(set(int(k) for k in keep))
    if not keep or keep[0] < 1 or keep[-1] > n:
        raise DimensionError(f"slot indices {keep} out of range 1..{n}")
    others = [j for j in range(1, n + 1) if j not in keep]
    mats = {j: as_density(states[j - 1]).matrix for j in others}
    if keep == list(range(1, n + 1)):
        return block_op
    # kept slot dims come from the block structure when no state is given
    dims_in = list(block_op.dims_in) if len(block_op.dims_in) == n else None
    if dims_in is None:
        known = [mats[j].shape[0] for j in others]
        free = block_op.dim_in // int(np.prod(known))
        if len(keep) != 1 or free * int(np.prod(known)) != block_op.dim_in:
            raise DimensionError(
                f"cannot split input dimension {block_op.dim_in} into {n} slots"
            )
        dims_in = [mats[j].shape[0] if j in mats else free for j in range(1, n + 1)]
    for j in others:
        if mats[j].shape[0] != dims_in[j - 1]:
            raise DimensionError(
                f"slot {j} state has dimension {mats[j].shape[0]}, block expects {dims_in[j - 1]}"
            )
    if len(block_op.dims_out) == n:
        dims_out = list(block_op.dims_out)
    elif block_op.dim_out == block_op.dim_in:
        dims_out = dims_in
    else:
        raise DimensionError(f"cannot split output dimension {block_op.dim_out} into {n} slots")

    d_keep = int(np.prod([dims_in[k - 1] for k in keep]))
    d_out = int(np.prod([dims_out[k - 1] for k in keep]))
    rest = tensor(*[mats[j] for j in others]) if others else np.ones((1, 1))
    # factors are laid out as (kept..., others...) and then permuted to slot order
    layout = keep + others
    order = [layout.index(j) + 1 for j in range(1, n + 1)]
    layout_dims = [dims_in[j - 1] for j in layout]
    choi = np.zeros((d_out, d_keep, d_out, d_keep), dtype=complex)
    for a in range(d_keep):
        for b in range(d_keep):
            e_ab = np.zeros((d_keep, d_keep), dtype=complex)
            e_ab[a, b] = 1.0
            op = permute_factors(tensor(e_ab, rest), layout_dims, order)
            out = block_op(op)
            choi[:, a, :, b] = partial_trace(out, dims_out, keep)
    choi = choi.reshape(d_out * d_keep, d_out * d_keep)
    ch = choi_to_kraus(ChoiMatrix(d_keep, d_out, choi), tol=1e-8)
    return ch.with_dims(
        tuple(dims_in[k - 1] for k in keep), tuple(dims_out[k - 1] for k in keep)
    )


def reduced_channel(block_op: KrausChannel, rho, i: int, n: int) -> KrausChannel:
    """Marginal operation on slot ``i`` (1-based) of an ``n``-slot block operation.

    Every other input slot carries ``rho`` and the output is traced down to
    slot ``i``. ``rho`` may also be a sequence of ``n`` per-slot states.
    """
    if not 1 <= i <= n:
        raise DimensionError(f"slot index {i} out of range 1..{n}")
    if isinstance(rho, (list, tuple)):
        if len(rho) != n:
            raise DimensionError(f"need {n} slot states, got {len(rho)}")
        states = list(rho)
    else:
        rho = as_density(rho)
        if block_op.dim_in != rho.dim ** n:
            raise DimensionError(
                f"block operation acts on dimension {block_op.dim_in}, "
                f"expected {rho.dim}^{n} = {rho.dim ** n}"
            )
        states = [rho] * n
        if len(block_op.dims_in) != n:
            block_op = block_op.with_dims(dims_in=(rho.dim,) * n)
    return marginal_channel(block_op, states, (i,))


def choi_distance(e1: KrausChannel, e2: KrausChannel) -> float:
    """Max-entry distance between Choi matrices."""
    if (e1.dim_in, e1.dim_out) != (e2.dim_in, e2.dim_out):
        raise DimensionError("channels have different dimensions")
    return float(np.max(np.abs(kraus_to_choi(e1).matrix - kraus_to_choi(e2).matrix)))


def choi_of_tensor(j1: ChoiMatrix, j2: ChoiMatrix) -> ChoiMatrix:
    """Choi matrix of ``E1 (x) E2`` from the factor Choi matrices.

    ``J1 (x) J2`` is ordered out1, in1, out2, in2; the tensor channel wants
    out1, out2, in1, in2.
    """
    m = permute_factors(
        tensor(j1.matrix, j2.matrix),
        (j1.dim_out, j1.dim_in, j2.dim_out, j2.dim_in),
        (1, 3, 2, 4),
    )
    return ChoiMatrix(j1.dim_in * j2.dim_in, j1.dim_out * j2.dim_out, m)


# --- standard channels -----------------------------------------------------


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel(np.eye(d)[None])


def unitary_channel(u) -> KrausChannel:
    return KrausChannel(np.asarray(u, dtype=complex)[None])


def depolarizing_channel(d: int, p: float = 1.0) -> KrausChannel:
    """``rho -> (1-p) rho + p tr(rho) I/d``; ``p = 1`` is fully depolarizing."""
    ops = np.zeros((d * d, d, d), dtype=complex)
    for a in range(d):
        for b in range(d):
            ops[a * d + b, a, b] = 1.0 / np.sqrt(d)
    full = KrausChannel(ops)
    if p >= 1.0:
        return full
    return mix([identity_channel(d), full], [1.0 - p, p])


def dephasing_channel(p: float) -> KrausChannel:
    """Qubit dephasing with Kraus set ``{sqrt(1-p) I, sqrt(p) Z}``."""
    z = np.diag([1.0, -1.0])
    return KrausChannel(np.stack([np.sqrt(1 - p) * np.eye(2), np.sqrt(p) * z]))


def constant_channel(omega, d_in: int) -> KrausChannel:
    """Replacement channel ``sigma -> tr(sigma) omega``."""
    omega = as_density(omega)
    w, v = np.linalg.eigh(omega.matrix)
    ops = []
    for k in range(omega.dim):
        if w[k] <= TOL.choi_drop:
            continue
        for j in range(d_in):
            a = np.zeros((omega.dim, d_in), dtype=complex)
            a[:, j] = np.sqrt(w[k]) * v[:, k]
            ops.append(a)
    return KrausChannel(np.stack(ops), None, omega.dims)


def discard_channel(d_in: int) -> KrausChannel:
    """Trace map into a one-dimensional space."""
    return KrausChannel(np.eye(d_in)[:, None, :])


def swap_channel(d: int) -> KrausChannel:
    """Conjugation by SWAP on two ``d``-dimensional factors."""
    s = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            s[b * d + a, a * d + b] = 1.0
    return KrausChannel(s[None], (d, d), (d, d))
