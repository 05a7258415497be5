"""Dense linear algebra on composite finite-dimensional Hilbert spaces.

Operators are plain complex ``numpy`` arrays. Tensor factors are described by
a tuple of dimensions and are numbered from 1, so ``keep=(1,)`` on a
two-qubit operator keeps the first qubit.

Entropies are in bits.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from ._config import TOL
from .exceptions import DimensionError, ValidationError

__all__ = [
    "DensityMatrix",
    "PureState",
    "tensor",
    "partial_trace",
    "permute_factors",
    "eig_hermitian",
    "von_neumann_entropy",
    "entropy_of_spectrum",
    "purify",
    "as_density",
    "check_square",
    "check_dims",
    "maximally_mixed",
    "ket",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def check_square(m, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a finite square complex array or raise."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries")
    return m


def check_dims(dims: Iterable[int] | None, size: int) -> tuple[int, ...]:
    """Normalise a factor-dimension list and check it against ``size``."""
    if dims is None:
        return (size,)
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise DimensionError(f"factor dimensions must be positive, got {dims}")
    if int(np.prod(dims)) != size:
        raise DimensionError(
            f"factor dimensions {dims} multiply to {int(np.prod(dims))}, "
            f"operator dimension is {size}"
        )
    return dims


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density operator with its tensor-factor structure.

    Construction checks Hermiticity, positivity and unit trace against the
    tolerances in :mod:`qratedist._config`; the stored array is read-only.
    """

    matrix: np.ndarray
    dims: tuple[int, ...] = field(default=None)

    def __post_init__(self):
        m = check_square(self.matrix, "density matrix")
        dims = check_dims(self.dims, m.shape[0])
        herm_dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        if herm_dev > TOL.herm:
            raise ValidationError(f"density matrix not Hermitian (deviation {herm_dev:.3g})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TOL.trace:
            raise ValidationError(f"density matrix trace is {tr!r}, expected 1")
        lam_min = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
        if lam_min < -TOL.psd:
            raise ValidationError(f"density matrix has negative eigenvalue {lam_min:.3g}")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def reduce(self, keep: Iterable[int]) -> "DensityMatrix":
        """Marginal state on the (1-based) factors in ``keep``."""
        keep = sorted(set(keep))
        red = partial_trace(self.matrix, self.dims, keep)
        return DensityMatrix(_hermitize(red), tuple(self.dims[k - 1] for k in keep))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalised state vector with tensor-factor dimensions."""

    amplitudes: np.ndarray
    dims: tuple[int, ...] = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        dims = check_dims(self.dims, v.size)
        nrm = np.vdot(v, v).real
        if abs(nrm - 1.0) > TOL.norm:
            raise ValidationError(f"state vector has squared norm {nrm!r}")
        object.__setattr__(self, "amplitudes", _frozen(v))
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density(self) -> DensityMatrix:
        return DensityMatrix(_hermitize(self.projector()), self.dims)


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def as_density(rho, dims: Sequence[int] | None = None) -> DensityMatrix:
    """Coerce an array, :class:`PureState` or :class:`DensityMatrix`.

    Explicit ``dims`` override the factor structure of an existing object.
    """
    if isinstance(rho, DensityMatrix):
        if dims is None or tuple(dims) == rho.dims:
            return rho
        return DensityMatrix(rho.matrix, tuple(dims))
    if isinstance(rho, PureState):
        return DensityMatrix(rho.projector(), tuple(dims) if dims else rho.dims)
    return DensityMatrix(np.asarray(rho, dtype=complex), None if dims is None else tuple(dims))


def maximally_mixed(d: int, dims: Sequence[int] | None = None) -> DensityMatrix:
    return DensityMatrix(np.eye(d) / d, dims)


def ket(index: int | Sequence[int], dims: int | Sequence[int]) -> np.ndarray:
    """Computational basis vector; ``ket((0, 1), (2, 2))`` is |01>."""
    if np.isscalar(dims):
        dims, index = (int(dims),), (int(index),)
    flat = np.ravel_multi_index(tuple(index), tuple(dims))
    v = np.zeros(int(np.prod(dims)), dtype=complex)
    v[flat] = 1.0
    return v


def tensor(*ops) -> np.ndarray:
    """Kronecker product of one or more matrices (or vectors)."""
    if not ops:
        raise ValueError("tensor needs at least one operand")
    return reduce(np.kron, (np.asarray(o, dtype=complex) for o in ops))


def _validate_keep(keep: Iterable[int], n: int) -> list[int]:
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise DimensionError("keep must name at least one factor")
    bad = [k for k in keep if not 1 <= k <= n]
    if bad:
        raise DimensionError(f"factor indices {bad} out of range 1..{n}")
    return keep


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor not listed in ``keep`` (1-based indices).

    Kept factors appear in ascending order in the result.
    """
    if isinstance(m, DensityMatrix):
        m = m.matrix
    m = check_square(m)
    dims = check_dims(dims, m.shape[0])
    n = len(dims)
    keep = _validate_keep(keep, n)
    if len(keep) == n:
        return m.copy()
    t = m.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters):
        raise DimensionError("too many tensor factors")
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for j in range(n):
        if j + 1 not in keep:
            col[j] = row[j]
    out = "".join(row[k - 1] for k in keep) + "".join(col[k - 1] for k in keep)
    red = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    dk = int(np.prod([dims[k - 1] for k in keep]))
    return red.reshape(dk, dk)


def permute_factors(m, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of a square operator.

    ``order`` lists the 1-based source factor for each output position, so
    ``order=(2, 1)`` swaps two factors.
    """
    m = check_square(m)
    dims = check_dims(dims, m.shape[0])
    n = len(dims)
    perm = [o - 1 for o in order]
    if sorted(perm) != list(range(n)):
        raise DimensionError(f"{tuple(order)} is not a permutation of 1..{n}")
    t = m.reshape(dims + dims).transpose(perm + [p + n for p in perm])
    return t.reshape(m.shape)


def eig_hermitian(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    Returns ``(w, V)`` with ``m = V @ diag(w) @ V^dagger``.
    """
    m = check_square(m)
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > TOL.herm:
        raise ValidationError(f"matrix is not Hermitian (deviation {dev:.3g})")
    w, v = np.linalg.eigh(_hermitize(m))
    return w[::-1].copy(), v[:, ::-1].copy()


def entropy_of_spectrum(eigs, clip: float = TOL.eig_clip) -> np.ndarray:
    """Shannon entropy in bits of eigenvalue spectra along the last axis.

    Values below ``clip`` are treated as exact zeros, with 0 log 0 = 0.
    """
    p = np.asarray(eigs, dtype=float)
    p = np.where(p < clip, 0.0, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, -p * np.log2(np.where(p > 0.0, p, 1.0)), 0.0)
    return terms.sum(axis=-1)


def von_neumann_entropy(rho) -> float:
    """Von Neumann entropy S(rho) = -tr(rho log2 rho) in bits."""
    rho = as_density(rho)
    s = float(entropy_of_spectrum(np.linalg.eigvalsh(rho.matrix)))
    return min(max(s, 0.0), float(np.log2(rho.dim)))


def purify(rho) -> PureState:
    """Canonical purification on R (x) Q with dim R = dim Q.

    Built from the spectral decomposition as sum_k sqrt(l_k) |k>_R |v_k>_Q.
    R is the first factor of the result, followed by the factors of ``rho``.
    """
    rho = as_density(rho)
    w, v = eig_hermitian(rho.matrix)
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    d = rho.dim
    # psi[r, q] = sqrt(w_r) v[q, r]
    psi = (v * np.sqrt(w)[None, :]).T.reshape(-1)
    psi = psi / np.linalg.norm(psi)
    return PureState(psi, (d,) + rho.dims)
