"""Descent on products of complex Stiefel manifolds (isometries V, V^dagger V = I).

Gradients are complex matrices ``G`` with ``df = Re tr(G^dagger dV)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


def random_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed isometry from the QR factorisation of a Ginibre matrix."""
    g = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(g)
    # fix column phases so the distribution is Haar
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph[None, :]


def project_tangent(v: np.ndarray, z: np.ndarray) -> np.ndarray:
    vz = v.conj().T @ z
    return z - v @ (0.5 * (vz + vz.conj().T))


def polar_retract(x: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(x, full_matrices=False)
    return u @ vh


def pack(v: np.ndarray) -> np.ndarray:
    return np.concatenate([v.real.ravel(), v.imag.ravel()])


def unpack(x: np.ndarray, shape) -> np.ndarray:
    m = x.shape[-1] // 2
    return (x[..., :m] + 1j * x[..., m:]).reshape(x.shape[:-1] + tuple(shape))


def fd_value_and_grad(f_batch, x: np.ndarray, shape, h: float) -> tuple[float, np.ndarray]:
    """Value and central-difference gradient of ``f(polar(X))`` in packed real form.

    Every evaluation point, perturbed ones included, is retracted onto the
    isometries before ``f_batch`` sees it.
    """
    m = x.size
    eye = np.eye(m) * h
    batch = np.concatenate([x[None] + eye, x[None] - eye, x[None]])
    vals = f_batch(polar_retract(unpack(batch, shape)))
    return float(vals[-1]), (vals[:m] - vals[m:2 * m]) / (2 * h)


def fd_gradient(f_batch: Callable[[np.ndarray], np.ndarray], v: np.ndarray, h: float) -> np.ndarray:
    """Central finite-difference gradient of a real function of one complex matrix.

    ``f_batch`` maps a stack ``(B, *v.shape)`` to ``B`` values, so all
    ``4 * v.size`` perturbations are evaluated in one call.
    """
    m = v.size
    eye = np.eye(m).reshape(m, *v.shape)
    steps = np.concatenate([eye, 1j * eye]) * h
    batch = np.concatenate([v[None] + steps, v[None] - steps])
    vals = f_batch(batch)
    half = vals.size // 2
    diff = (vals[:half] - vals[half:]) / (2 * h)
    re, im = diff[:m], diff[m:]
    return (re + 1j * im).reshape(v.shape)


@dataclass
class DescentResult:
    points: list
    value: float
    iterations: int
    grad_norm: float


def riemannian_descent(
    value_and_grad: Callable[[list], tuple[float, list]],
    value: Callable[[list], float],
    points: Sequence[np.ndarray],
    max_iterations: int,
    step_size: float,
    gradient_tolerance: float,
    max_step: float = 10.0,
) -> DescentResult:
    """Armijo-backtracking gradient descent with polar retraction.

    ``value_and_grad`` returns the objective and Euclidean gradients for each
    isometry in ``points``.
    """
    pts = [np.array(p, dtype=complex) for p in points]
    f0, grads = value_and_grad(pts)
    t = step_size
    it = 0
    gnorm = np.inf
    for it in range(1, max_iterations + 1):
        rg = [project_tangent(p, g) for p, g in zip(pts, grads)]
        gn2 = float(sum(np.vdot(g, g).real for g in rg))
        gnorm = np.sqrt(gn2)
        if gnorm < gradient_tolerance:
            break
        while True:
            trial = [polar_retract(p - t * g) for p, g in zip(pts, rg)]
            f1 = value(trial)
            if f1 <= f0 - 1e-4 * t * gn2:
                break
            t *= 0.5
            if t < 1e-14:
                return DescentResult(pts, f0, it, gnorm)
        pts = trial
        t = min(2.0 * t, max_step)
        f0, grads = value_and_grad(pts)
    return DescentResult(pts, f0, it, gnorm)
