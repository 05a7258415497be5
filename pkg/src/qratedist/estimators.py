"""scikit-learn style front ends.

``X`` is a source density matrix (array or :class:`~qratedist.qmath.DensityMatrix`)
rather than a design matrix; the estimators plug into ``get_params`` /
``set_params`` / ``clone`` so parameter sweeps work with the usual tools.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .channels import KrausChannel, apply
from .qmath import DensityMatrix, as_density
from .rdopt import (
    OptimizerConfig,
    check_monotone_convex,
    default_grid,
    evaluate_code,
    rd_curve,
    search_codes,
)


def check_density_matrix(X, dims=None) -> DensityMatrix:
    """Validate ``X`` as a density matrix, the analogue of ``check_array``."""
    return as_density(X, dims)


def check_distortions(D) -> np.ndarray:
    D = np.atleast_1d(np.asarray(D, dtype=float))
    if D.ndim != 1:
        D = D.ravel()
    if np.any(~np.isfinite(D)) or np.any(D < 0) or np.any(D > 1):
        raise ValueError("distortions must lie in [0, 1]")
    return D


class InformationRateDistortion(BaseEstimator):
    """Estimate the entanglement information rate-distortion function of a source.

    Parameters
    ----------
    grid : array-like or None
        Distortion values; default is ``n_points`` evenly spaced values in
        ``[0, 1 - 1/d^2]``.
    n_points : int
        Grid size when ``grid`` is None.
    restarts, max_iterations, penalty_weight, penalty_stages, gradient_tolerance, env_dim, fd_step
        Passed to :class:`~qratedist.rdopt.OptimizerConfig`.
    random_state : int
        Master seed.

    Attributes
    ----------
    curve_ : RDCurve
    grid_ : ndarray
    rates_ : ndarray
        Raw best-found coherent information at each grid value.
    envelope_ : ndarray
        Lower convex envelope of ``rates_``.
    """

    def __init__(
        self,
        grid=None,
        n_points: int = 9,
        restarts: int = 6,
        max_iterations: int = 300,
        penalty_weight: float = 1e3,
        penalty_stages: int = 3,
        gradient_tolerance: float = 1e-8,
        env_dim=None,
        fd_step: float = 1e-5,
        random_state: int = 0,
    ):
        self.grid = grid
        self.n_points = n_points
        self.restarts = restarts
        self.max_iterations = max_iterations
        self.penalty_weight = penalty_weight
        self.penalty_stages = penalty_stages
        self.gradient_tolerance = gradient_tolerance
        self.env_dim = env_dim
        self.fd_step = fd_step
        self.random_state = random_state

    def _config(self) -> OptimizerConfig:
        return OptimizerConfig(
            restarts=self.restarts,
            max_iterations=self.max_iterations,
            penalty_weight=self.penalty_weight,
            penalty_stages=self.penalty_stages,
            gradient_tolerance=self.gradient_tolerance,
            env_dim=self.env_dim,
            fd_step=self.fd_step,
            seed=self.random_state,
        )

    def fit(self, X, y=None):
        rho = check_density_matrix(X)
        grid = default_grid(rho.dim, self.n_points) if self.grid is None else check_distortions(self.grid)
        self.curve_ = rd_curve(rho, grid, self._config())
        self.grid_ = np.asarray(self.curve_.grid)
        self.rates_ = self.curve_.raw
        self.envelope_ = np.asarray(self.curve_.envelope)
        return self

    def predict(self, D) -> np.ndarray:
        """Upper bounds on ``R^I`` at the distortions ``D`` (bits)."""
        check_is_fitted(self, "curve_")
        return np.array([self.curve_.upper_bound(x) for x in check_distortions(D)])

    def check_shape(self, tol: float = 5e-3):
        check_is_fitted(self, "curve_")
        return check_monotone_convex(self.curve_, tol)


class RateDistortionCode(BaseEstimator):
    """Search for an ``(n, K)`` code with small block entanglement distortion.

    ``fit`` runs the search on a single-copy source state; ``transform``
    pushes ``n``-copy block states through decoder after encoder, and
    ``score`` returns the negative block distortion on a source.
    """

    def __init__(
        self,
        n: int = 1,
        channel_dim: int = 1,
        restarts: int = 6,
        max_iterations: int = 300,
        step_size: float = 0.1,
        gradient_tolerance: float = 1e-8,
        env_dim=None,
        random_state: int = 0,
    ):
        self.n = n
        self.channel_dim = channel_dim
        self.restarts = restarts
        self.max_iterations = max_iterations
        self.step_size = step_size
        self.gradient_tolerance = gradient_tolerance
        self.env_dim = env_dim
        self.random_state = random_state

    def fit(self, X, y=None):
        rho = check_density_matrix(X)
        cfg = OptimizerConfig(
            restarts=self.restarts,
            max_iterations=self.max_iterations,
            step_size=self.step_size,
            gradient_tolerance=self.gradient_tolerance,
            env_dim=self.env_dim,
            seed=self.random_state,
        )
        res = search_codes(rho, self.n, self.channel_dim, cfg)
        self.code_ = res.code
        self.evaluation_ = res.evaluation
        self.restart_distortions_ = np.asarray(res.restart_distortions)
        return self

    @property
    def block_operation_(self) -> KrausChannel:
        check_is_fitted(self, "code_")
        return self.code_.block_operation()

    def transform(self, X) -> DensityMatrix:
        check_is_fitted(self, "code_")
        return apply(self.code_.block_operation(), check_density_matrix(X))

    def score(self, X, y=None) -> float:
        check_is_fitted(self, "code_")
        return -evaluate_code(self.code_, check_density_matrix(X)).distortion
