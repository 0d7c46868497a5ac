"""Scikit-learn style estimators wrapping the functional embedding pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .fitting import FitOptions, fit_pipeline
from .model import as_series, evaluate_trajectories
from .spectral import diagnostics
from .tuning import TuningGrid, coordinate_descent_select, grid_select

__all__ = ["FASE", "NGCVSearch"]


class FASE(BaseEstimator):
    """Functional adjacency spectral embedding of a network snapshot series.

    Fits smooth latent processes for every node by gradient descent on the
    least-squares reconstruction error, after expanding each process in a
    clamped B-spline basis with knots at quantiles of the snapshot indices.

    Parameters
    ----------
    d : int, default 2
        Latent space dimension.
    q : int, default 10
        Basis dimension; at least ``order + 1``.
    order : int, default 3
        Spline order (cubic by default).
    n_blocks : int or "auto", default "auto"
        Number of contiguous blocks used by the local-average spectral
        initializer; "auto" uses a data-driven choice.
    align : bool, default True
        Chain-align the initializer's block embeddings.
    penalty : float, default 0.0
        Curvature penalty weight; positive values fit the penalized
        objective (requires ``order >= 2``).
    sequential : bool, default False
        Estimate one latent dimension at a time instead of concurrently.
    max_iter : int, default 1000
        Iteration cap for gradient descent.
    tol : float, default 1e-5
        Relative objective decrease below which the fit stops.
    max_step : float or None, default None
        Step size cap; ``None`` uses ``1 / (n m)``.
    backtrack : float, default 0.5
        Step shrink factor during the line search.
    fit_diagonal : bool, default True
        Whether diagonal entries (self-loops) enter the loss.

    Attributes
    ----------
    basis_ : SplineBasis
    coords_ : ndarray of shape (n, q, d)
    fit_ : FaseFit
        Full fit record (objective trace, step sizes, convergence flag).
    n_blocks_ : int
        Number of initializer blocks actually used.
    indices_ : ndarray of shape (m,)
    diagnostics_ : SpectralDiagnostics
    """

    def __init__(
        self,
        d: int = 2,
        q: int = 10,
        order: int = 3,
        n_blocks: int | str = "auto",
        align: bool = True,
        penalty: float = 0.0,
        sequential: bool = False,
        max_iter: int = 1000,
        tol: float = 1e-5,
        max_step: float | None = None,
        backtrack: float = 0.5,
        fit_diagonal: bool = True,
    ):
        self.d = d
        self.q = q
        self.order = order
        self.n_blocks = n_blocks
        self.align = align
        self.penalty = penalty
        self.sequential = sequential
        self.max_iter = max_iter
        self.tol = tol
        self.max_step = max_step
        self.backtrack = backtrack
        self.fit_diagonal = fit_diagonal

    def _options(self) -> FitOptions:
        return FitOptions(
            max_iterations=self.max_iter,
            rel_tol=self.tol,
            max_step=self.max_step,
            backtrack_factor=self.backtrack,
            lam=self.penalty,
        )

    def fit(self, X, indices=None):
        """Fit the embedding.

        Parameters
        ----------
        X : SnapshotSeries or array_like of shape (m, n, n)
            Symmetric snapshot matrices.
        indices : array_like of shape (m,), optional
            Strictly increasing snapshot indices; required when ``X`` is a
            raw array.
        """
        series = as_series(X, indices)
        if not self.fit_diagonal:
            series = series.without_diagonal()
        fit, n_blocks = fit_pipeline(
            series,
            q=self.q,
            d=self.d,
            order=self.order,
            opts=self._options(),
            n_blocks=self.n_blocks,
            align=self.align,
            sequential=self.sequential,
        )
        self.series_ = series
        self.basis_ = fit.basis
        self.coords_ = fit.coords
        self.fit_ = fit
        self.n_blocks_ = n_blocks
        self.indices_ = series.indices
        self.diagnostics_ = diagnostics(series, self.d)
        return self

    def _require_fitted(self):
        if not hasattr(self, "coords_"):
            raise NotFittedError("this FASE instance is not fitted yet")

    def predict(self, x):
        """Latent positions at new index values.

        Scalars give an ``(n, d)`` matrix; one-dimensional inputs give a
        ``(len(x), n, d)`` stack. Indices outside the fitted domain are
        refused (no extrapolation).
        """
        self._require_fitted()
        if np.ndim(x) == 0:
            return evaluate_trajectories(self.coords_, self.basis_, [float(x)])[:, 0, :]
        stack = evaluate_trajectories(self.coords_, self.basis_, np.asarray(x, float))
        return stack.transpose(1, 0, 2)

    def predict_adjacency(self, x):
        """Expected adjacency at new index values (shapes as in ``predict``)."""
        Z = self.predict(x)
        if Z.ndim == 2:
            return Z @ Z.T
        return Z @ Z.transpose(0, 2, 1)

    def trajectories(self):
        """Fitted latent positions at the training indices: ``(n, m, d)``."""
        self._require_fitted()
        return evaluate_trajectories(self.coords_, self.basis_, self.indices_)


class NGCVSearch(BaseEstimator):
    """Select the basis and latent dimensions, then fit the chosen model.

    Scans a ``(q, d)`` grid with the network generalized cross validation
    criterion, either exhaustively or by alternating one-dimensional
    minimizations, and refits a :class:`FASE` estimator at the winning cell.

    Parameters
    ----------
    q_values, d_values : iterable of int
        Candidate values.
    method : {"grid", "cd"}, default "grid"
        Exhaustive scan or coordinate descent.
    Remaining parameters mirror :class:`FASE`.

    Attributes
    ----------
    best_q_, best_d_ : int
    result_ : TuningResult
    estimator_ : FASE
        The refit estimator at the chosen cell.
    """

    def __init__(
        self,
        q_values=(6, 8, 10, 12, 14, 16),
        d_values=(1, 2, 3, 4, 5, 6),
        method: str = "grid",
        order: int = 3,
        n_blocks: int | str = "auto",
        align: bool = True,
        max_iter: int = 1000,
        tol: float = 1e-5,
        fit_diagonal: bool = True,
    ):
        self.q_values = q_values
        self.d_values = d_values
        self.method = method
        self.order = order
        self.n_blocks = n_blocks
        self.align = align
        self.max_iter = max_iter
        self.tol = tol
        self.fit_diagonal = fit_diagonal

    def fit(self, X, indices=None):
        if self.method not in ("grid", "cd"):
            raise ValueError("method must be 'grid' or 'cd'")
        series = as_series(X, indices)
        if not self.fit_diagonal:
            series = series.without_diagonal()
        grid = TuningGrid(tuple(self.q_values), tuple(self.d_values))
        opts = FitOptions(max_iterations=self.max_iter, rel_tol=self.tol)
        select = grid_select if self.method == "grid" else coordinate_descent_select
        result = select(
            series,
            grid,
            order=self.order,
            opts=opts,
            n_blocks=self.n_blocks,
            align=self.align,
        )
        self.result_ = result
        self.best_q_ = result.q
        self.best_d_ = result.d
        self.estimator_ = FASE(
            d=result.d,
            q=result.q,
            order=self.order,
            n_blocks=self.n_blocks,
            align=self.align,
            max_iter=self.max_iter,
            tol=self.tol,
        ).fit(series)
        return self

    def predict(self, x):
        if not hasattr(self, "estimator_"):
            raise NotFittedError("this NGCVSearch instance is not fitted yet")
        return self.estimator_.predict(x)
