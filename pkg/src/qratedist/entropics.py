"""Fidelity and information functionals of a source state and a channel.

Entanglement fidelity and entropy exchange are each computed two ways, from
the purification and from the Kraus operators, and the results must agree.
Pass ``check=False`` to skip the second evaluation in hot loops.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._config import TOL
from .channels import KrausChannel, apply, compose, reduced_channel
from .exceptions import DimensionError, ValidationError
from .qmath import (
    DensityMatrix,
    PureState,
    as_density,
    entropy_of_spectrum,
    purify,
    von_neumann_entropy,
)

__all__ = [
    "Ensemble",
    "entanglement_fidelity",
    "entropy_exchange",
    "coherent_information",
    "avg_pure_state_fidelity",
    "entanglement_distortion",
    "block_distortion_e",
    "block_distortion_avg",
    "slot_distortions",
    "block_fidelity_form",
]


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Pure-state ensemble ``{(p_k, |phi_k>)}``."""

    probabilities: tuple[float, ...]
    states: tuple[PureState, ...]

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        states = tuple(s if isinstance(s, PureState) else PureState(s) for s in self.states)
        if len(p) != len(states) or len(p) == 0:
            raise ValueError("ensemble needs one probability per state")
        if np.any(p < 0) or abs(p.sum() - 1.0) > TOL.weights:
            raise ValueError("ensemble probabilities must form a probability vector")
        if len({s.dim for s in states}) != 1:
            raise DimensionError("ensemble states must share a dimension")
        object.__setattr__(self, "probabilities", tuple(float(x) for x in p))
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def average_state(self) -> DensityMatrix:
        m = sum(p * s.projector() for p, s in zip(self.probabilities, self.states))
        return DensityMatrix(0.5 * (m + m.conj().T))


def _check_square_channel(rho: DensityMatrix, ch: KrausChannel):
    if ch.dim_in != rho.dim or ch.dim_out != rho.dim:
        raise DimensionError(
            f"channel maps {ch.dim_in} -> {ch.dim_out}, source has dimension {rho.dim}"
        )


def _clip_range(x: float, lo: float, hi: float, what: str) -> float:
    if x < lo - TOL.range_slack or x > hi + TOL.range_slack:
        raise ValidationError(f"{what} = {x!r} outside [{lo}, {hi}]")
    return min(max(x, lo), hi)


def _joint_output(rho: DensityMatrix, ch: KrausChannel) -> np.ndarray:
    """``(id_R (x) ch)(|psi><psi|)`` for the canonical purification."""
    psi = purify(rho).amplitudes.reshape(rho.dim, rho.dim)
    # psi_k[r, a] = sum_q A_k[a, q] psi[r, q]
    branches = np.einsum("kaq,rq->kra", ch.kraus, psi).reshape(ch.rank, -1)
    return branches.T @ branches.conj()


def _fidelity_kraus(rho: np.ndarray, ch: KrausChannel) -> float:
    traces = np.einsum("ij,kji->k", rho, ch.kraus)
    return float(np.sum(np.abs(traces) ** 2))


def _w_matrix(rho: np.ndarray, ch: KrausChannel) -> np.ndarray:
    # W_kl = tr(A_k rho A_l^dagger)
    return np.einsum("kai,ij,laj->kl", ch.kraus, rho, ch.kraus.conj())


def entanglement_fidelity(rho, ch: KrausChannel, check: bool = True) -> float:
    """Entanglement fidelity ``F_e(rho, ch)``.

    Kraus form ``sum_k |tr(rho A_k)|^2``; with ``check`` the purification
    overlap ``<psi|(id (x) ch)(psi)|psi>`` is evaluated too and must agree
    within ``1e-9``.
    """
    rho = as_density(rho)
    _check_square_channel(rho, ch)
    f = _fidelity_kraus(rho.matrix, ch)
    if check:
        psi = purify(rho).amplitudes
        f_pur = float(np.real(np.vdot(psi, _joint_output(rho, ch) @ psi)))
        if abs(f - f_pur) > TOL.crosscheck_fidelity:
            raise ValidationError(
                f"entanglement fidelity forms disagree: Kraus {f!r}, purification {f_pur!r}"
            )
    return _clip_range(f, 0.0, 1.0, "entanglement fidelity")


def entropy_exchange(rho, ch: KrausChannel, check: bool = True) -> float:
    """Entropy exchange ``S_e = S(W)`` with ``W_kl = tr(A_k rho A_l^dagger)``.

    With ``check`` the entropy of the joint reference-system output is also
    computed and must agree within ``1e-8``.
    """
    rho = as_density(rho)
    if ch.dim_in != rho.dim:
        raise DimensionError(f"channel expects dimension {ch.dim_in}, source has {rho.dim}")
    w = _w_matrix(rho.matrix, ch)
    s = float(entropy_of_spectrum(np.linalg.eigvalsh(0.5 * (w + w.conj().T))))
    if check:
        joint = _joint_output(rho, ch)
        s_pur = float(entropy_of_spectrum(np.linalg.eigvalsh(0.5 * (joint + joint.conj().T))))
        if abs(s - s_pur) > TOL.crosscheck_entropy:
            raise ValidationError(
                f"entropy exchange forms disagree: W-matrix {s!r}, purification {s_pur!r}"
            )
    if s < -TOL.range_slack:
        raise ValidationError(f"negative entropy exchange {s!r}")
    return max(s, 0.0)


def coherent_information(rho, ch: KrausChannel, check: bool = True) -> float:
    """``I_c(rho, ch) = S(ch(rho)) - S_e(rho, ch)`` in bits."""
    rho = as_density(rho)
    out = apply(ch, rho)
    return von_neumann_entropy(out) - entropy_exchange(rho, ch, check=check)


def avg_pure_state_fidelity(ens: Ensemble, ch: KrausChannel) -> float:
    """``sum_k p_k <phi_k| ch(|phi_k><phi_k|) |phi_k>``."""
    if ch.dim_in != ens.dim or ch.dim_out != ens.dim:
        raise DimensionError(
            f"channel maps {ch.dim_in} -> {ch.dim_out}, ensemble has dimension {ens.dim}"
        )
    total = 0.0
    for p, s in zip(ens.probabilities, ens.states):
        phi = s.amplitudes
        amps = np.einsum("kai,i->ka", ch.kraus, phi) @ phi.conj()
        total += p * float(np.sum(np.abs(amps) ** 2))
    return _clip_range(total, 0.0, 1.0, "average pure-state fidelity")


def entanglement_distortion(rho, ch: KrausChannel, check: bool = True) -> float:
    """``1 - F_e(rho, ch)``; affine in the channel under :func:`~qratedist.channels.mix`."""
    return 1.0 - entanglement_fidelity(rho, ch, check=check)


def _block_op(encoder: KrausChannel, decoder: KrausChannel, d: int, n: int) -> KrausChannel:
    if encoder.dim_in != d ** n:
        raise DimensionError(f"encoder input {encoder.dim_in} is not {d}^{n}")
    if decoder.dim_out != d ** n:
        raise DimensionError(f"decoder output {decoder.dim_out} is not {d}^{n}")
    if encoder.dim_out != decoder.dim_in:
        raise DimensionError(
            f"encoder outputs {encoder.dim_out} dimensions, decoder expects {decoder.dim_in}"
        )
    return compose(decoder, encoder).with_dims((d,) * n, (d,) * n)


def slot_distortions(encoder: KrausChannel, decoder: KrausChannel, rho, n: int) -> list[float]:
    """``1 - F_e(rho, T_i)`` for every slot ``i = 1..n`` of the induced block map."""
    rho = as_density(rho)
    block = _block_op(encoder, decoder, rho.dim, n)
    return [
        entanglement_distortion(rho, reduced_channel(block, rho, i, n)) for i in range(1, n + 1)
    ]


def block_distortion_e(encoder: KrausChannel, decoder: KrausChannel, rho, n: int) -> float:
    """Average entanglement distortion of an ``n``-block code on an i.i.d. source."""
    return _clip_range(
        float(np.mean(slot_distortions(encoder, decoder, rho, n))), 0.0, 1.0, "D_e"
    )


def block_distortion_avg(encoder: KrausChannel, decoder: KrausChannel, ens: Ensemble, n: int) -> float:
    """Average pure-state distortion of a block code.

    Untouched slots carry the ensemble's average state.
    """
    rho = ens.average_state()
    block = _block_op(encoder, decoder, rho.dim, n)
    dist = [
        1.0 - avg_pure_state_fidelity(ens, reduced_channel(block, rho, i, n))
        for i in range(1, n + 1)
    ]
    return _clip_range(float(np.mean(dist)), 0.0, 1.0, "average pure-state distortion")


def block_fidelity_form(rho, n: int, slots: Sequence[int] | None = None) -> np.ndarray:
    """Hermitian ``X`` with ``sum_i F_e(rho, T_i) = sum_m vec(C_m)^dagger X vec(C_m)``.

    ``C_m`` are Kraus operators of the block map on ``n`` copies of ``rho``,
    flattened row-major (output index first). The identity used per slot is
    ``F_e = tr[(psi (x) I)(I_R (x) C) Psi (I_R (x) C)^dagger]`` where ``psi``
    purifies ``rho`` on reference and slot ``i`` and ``Psi`` puts ``rho`` on
    every other slot.

    This is independent of :func:`reduced_channel` and lets the code search
    evaluate ``D_e`` and its gradient without any eigendecomposition.
    """
    rho = as_density(rho)
    d = rho.dim
    big = d ** n
    psi = purify(rho).amplitudes.reshape(d, d)  # [r, q]
    proj = np.einsum("rq,st->rqst", psi, psi.conj())  # |psi><psi| as [r,q,r',q']
    x = np.zeros((big, big, big, big), dtype=complex)  # [a, i, b, j]
    slots = range(1, n + 1) if slots is None else slots
    eye = np.eye(d)
    for i in slots:
        # P on R (x) out: psi on (R, slot i), identity elsewhere
        # Q on R (x) in: psi on (R, slot i), rho elsewhere
        p_full = _embed(proj, eye, d, n, i)
        q_full = _embed(proj, rho.matrix, d, n, i)
        # X[a,i,b,j] = sum_{r,s} P[(r,a),(s,b)] Q[(s,j),(r,i)]
        x += np.einsum("rasb,sjri->aibj", p_full, q_full)
    return x.reshape(big * big, big * big)


def _embed(proj: np.ndarray, other: np.ndarray, d: int, n: int, slot: int) -> np.ndarray:
    """Operator on R (x) Q_1..Q_n: ``proj`` on (R, Q_slot), ``other`` on the rest.

    Returned as a 4-index tensor ``[r, a, r', a']`` with ``a`` the joint
    multi-index of the ``n`` slots.
    """
    t = proj
    cur = ["r", f"q{slot}", "R", f"Q{slot}"]
    for k in range(1, n + 1):
        if k != slot:
            t = np.multiply.outer(t, other)
            cur += [f"q{k}", f"Q{k}"]
    target = ["r"] + [f"q{k}" for k in range(1, n + 1)] + ["R"] + [f"Q{k}" for k in range(1, n + 1)]
    t = t.transpose([cur.index(a) for a in target])
    return t.reshape(d, d ** n, d, d ** n)
