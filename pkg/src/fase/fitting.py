"""Gradient-descent drivers with backtracking line search.

All drivers descend the least-squares reconstruction objective (optionally
plus a curvature penalty) over the ``(n, q, d)`` coordinate tensor. The step
size starts at a cap (default ``1 / (n m)``), is halved until the objective
strictly decreases, and the accepted step carries over to the next
iteration. Iteration stops when the relative objective decrease falls below
a tolerance, when the step size stalls at a hard floor, or at the iteration
cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import SplineBasis, make_basis
from .model import (
    SnapshotSeries,
    _check_coords,
    _gradient_core,
    _objective_core,
    evaluate_processes,
    expected_adjacency,
)
from .spectral import default_L, initialize

__all__ = [
    "DivergenceError",
    "FitOptions",
    "FaseFit",
    "fit_fase",
    "fit_fase_sequential",
    "fit_fase_penalized",
    "fit_pipeline",
    "predict",
    "predict_adjacency",
]

# step floor relative to the cap; a search that shrinks this far found no
# decrease at floating-point resolution and stops rather than looping
_STALL_FACTOR = 1e-3 * 0.5**40


class DivergenceError(RuntimeError):
    """The objective became non-finite during a fit."""


@dataclass(frozen=True)
class FitOptions:
    """Options shared by every gradient-descent driver.

    ``max_step`` defaults to ``1 / (n m)`` when left unset. ``lam`` is only
    consumed by the penalized driver.
    """

    max_iterations: int = 1000
    rel_tol: float = 1e-5
    max_step: float | None = None
    backtrack_factor: float = 0.5
    lam: float = 0.0
    allow_growth: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.max_step is not None and self.max_step <= 0:
            raise ValueError("max_step must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")


@dataclass
class FaseFit:
    """Result of a gradient-descent fit.

    ``objective_trace`` holds the objective at the initial point followed by
    every accepted iterate, and is strictly decreasing; ``step_sizes`` holds
    the accepted step per iteration.
    """

    coords: np.ndarray
    basis: SplineBasis
    objective_trace: np.ndarray
    step_sizes: np.ndarray
    converged: bool
    iterations: int
    max_step: float = field(default=float("nan"))

    @property
    def final_step_size(self) -> float:
        if len(self.step_sizes):
            return float(self.step_sizes[-1])
        return self.max_step

    @property
    def final_objective(self) -> float:
        return float(self.objective_trace[-1])


def _penalty_terms(coords, lam, penalty):
    value = lam * float(np.einsum("nqd,qp,npd->", coords, penalty, coords))
    return value


def _descend(series, basis, init, opts, *, lam=0.0, penalty=None, slice_r=None):
    """Backtracking gradient descent, optionally restricted to one slice.

    Returns the final tensor plus trace bookkeeping. ``slice_r`` limits
    both the gradient and the update to a single latent dimension while the
    objective is still evaluated on the full tensor.
    """
    design = basis.design_matrix(series.indices)
    n, m = series.n_nodes, series.n_snapshots
    max_step = opts.max_step if opts.max_step is not None else 1.0 / (n * m)
    floor = _STALL_FACTOR * max_step
    tiny = np.finfo(float).tiny

    def evaluate(W):
        # overflow in a trial step is handled by the line search, not warned
        with np.errstate(over="ignore", invalid="ignore"):
            value, Z, R = _objective_core(W, series, design)
            if lam:
                value += _penalty_terms(W, lam, penalty)
        return value, Z, R

    W = np.array(init, dtype=float, copy=True)
    obj, Z, R = evaluate(W)
    if not np.isfinite(obj):
        raise DivergenceError("objective is not finite at the starting point")

    trace = [obj]
    steps = []
    eta = max_step
    converged = False

    for _ in range(opts.max_iterations):
        G = _gradient_core(W, series, design, Z=Z, R=R)
        if lam:
            G = G + 2.0 * lam * np.einsum("nqd,qp->npd", W, penalty)
        if slice_r is not None:
            update = np.zeros_like(G)
            update[:, :, slice_r] = G[:, :, slice_r]
            G = update
        if not np.isfinite(G).all():
            raise DivergenceError("gradient is not finite; the fit diverged")

        if opts.allow_growth:
            eta = min(eta / opts.backtrack_factor, max_step)

        stalled = False
        while True:
            W_try = W - eta * G
            obj_try, Z_try, R_try = evaluate(W_try)
            if np.isfinite(obj_try) and obj_try < obj:
                break
            eta *= opts.backtrack_factor
            if eta < floor:
                stalled = True
                break
        if stalled:
            # no achievable decrease at floating-point resolution
            converged = True
            break

        rel_decrease = (obj - obj_try) / max(obj, tiny)
        W, obj, Z, R = W_try, obj_try, Z_try, R_try
        trace.append(obj)
        steps.append(eta)
        if rel_decrease < opts.rel_tol:
            converged = True
            break

    return W, trace, steps, converged, max_step


def fit_fase(
    series: SnapshotSeries,
    basis: SplineBasis,
    d: int,
    init: np.ndarray,
    opts: FitOptions | None = None,
) -> FaseFit:
    """Concurrent gradient descent: all latent dimensions updated together
    from one gradient evaluation per iteration.

    Parameters
    ----------
    series : SnapshotSeries
    basis : SplineBasis
    d : int
        Latent dimension; must match ``init.shape[2]``.
    init : ndarray of shape (n, q, d)
        Starting coordinates (see :func:`fase.spectral.initialize`).
    opts : FitOptions, optional
    """
    opts = opts or FitOptions()
    if opts.lam != 0.0:
        raise ValueError("use fit_fase_penalized for a penalized fit")
    init = _check_init(series, basis, d, init)
    W, trace, steps, converged, max_step = _descend(series, basis, init, opts)
    return FaseFit(
        coords=W,
        basis=basis,
        objective_trace=np.asarray(trace),
        step_sizes=np.asarray(steps),
        converged=converged,
        iterations=len(steps),
        max_step=max_step,
    )


def fit_fase_penalized(
    series: SnapshotSeries,
    basis: SplineBasis,
    d: int,
    init: np.ndarray,
    opts: FitOptions,
) -> FaseFit:
    """Gradient descent on the curvature-penalized objective.

    Identical mechanics to :func:`fit_fase`; the trace records penalized
    objective values. Requires a basis of order at least 2.
    """
    init = _check_init(series, basis, d, init)
    penalty = basis.penalty_matrix()
    W, trace, steps, converged, max_step = _descend(
        series, basis, init, opts, lam=opts.lam, penalty=penalty
    )
    return FaseFit(
        coords=W,
        basis=basis,
        objective_trace=np.asarray(trace),
        step_sizes=np.asarray(steps),
        converged=converged,
        iterations=len(steps),
        max_step=max_step,
    )


def fit_fase_sequential(
    series: SnapshotSeries,
    basis: SplineBasis,
    d: int,
    init: np.ndarray,
    opts: FitOptions | None = None,
) -> FaseFit:
    """Estimate one latent dimension at a time.

    Dimension ``r`` is descended with dimensions below ``r`` frozen at their
    fitted values and dimensions above ``r`` held at zero; each inner run
    uses the standard backtracking and stopping rules. The reported trace is
    that of the final inner run; ``iterations`` counts accepted steps across
    all runs and ``converged`` requires every run to have converged.
    """
    opts = opts or FitOptions()
    if opts.lam != 0.0:
        raise ValueError("sequential fitting does not support a penalty")
    init = _check_init(series, basis, d, init)

    W = np.zeros_like(init)
    total_steps = 0
    all_converged = True
    trace: list[float] = []
    steps: np.ndarray = np.asarray([])
    max_step = float("nan")
    for r in range(d):
        W[:, :, r] = init[:, :, r]
        W, trace, run_steps, run_converged, max_step = _descend(
            series, basis, W, opts, slice_r=r
        )
        total_steps += len(run_steps)
        all_converged &= run_converged
        steps = np.asarray(run_steps)
    return FaseFit(
        coords=W,
        basis=basis,
        objective_trace=np.asarray(trace),
        step_sizes=steps,
        converged=all_converged,
        iterations=total_steps,
        max_step=max_step,
    )


def _check_init(series, basis, d, init):
    init = _check_coords(init, basis, n_nodes=series.n_nodes)
    if init.shape[2] != d:
        raise ValueError(
            f"init has {init.shape[2]} latent dimensions, expected d={d}"
        )
    return init


def predict(fit: FaseFit, x: float) -> np.ndarray:
    """Latent positions ``(n, d)`` at index ``x``; refuses extrapolation."""
    return evaluate_processes(fit.coords, fit.basis, x)


def predict_adjacency(fit: FaseFit, x: float) -> np.ndarray:
    """Expected adjacency matrix ``(n, n)`` at index ``x``."""
    return expected_adjacency(predict(fit, x))


def fit_pipeline(
    series: SnapshotSeries,
    q: int,
    d: int,
    order: int = 3,
    opts: FitOptions | None = None,
    n_blocks: int | str = "auto",
    align: bool = True,
    sequential: bool = False,
) -> tuple[FaseFit, int]:
    """The standard estimation recipe: basis, spectral init, descent.

    Builds a ``q``-dimensional basis with quantile knots, initializes with
    the local-average embedding using ``n_blocks`` blocks (``"auto"``
    applies the data-driven choice), and runs the requested descent
    variant. Returns the fit together with the number of blocks used.
    """
    opts = opts or FitOptions()
    basis = make_basis(q, series.indices, order)
    L = default_L(series, d) if n_blocks == "auto" else int(n_blocks)
    init = initialize(series, basis, d, L, align=align)
    if sequential:
        if opts.lam != 0.0:
            raise ValueError("sequential fitting does not support a penalty")
        fit = fit_fase_sequential(series, basis, d, init, opts)
    elif opts.lam > 0.0:
        fit = fit_fase_penalized(series, basis, d, init, opts)
    else:
        fit = fit_fase(series, basis, d, init, opts)
    return fit, L
