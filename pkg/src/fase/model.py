"""Snapshot series container and the least-squares objective with its gradient.

Array conventions used throughout the package:

* coordinate tensors are ``(n, q, d)`` float arrays -- mode 1 nodes, mode 2
  basis coordinates, mode 3 latent dimensions;
* trajectory stacks are ``(n, m, d)`` float arrays of per-snapshot latent
  positions;
* snapshot stacks are ``(m, n, n)`` float arrays of symmetric matrices.
"""

from __future__ import annotations

import warnings

import numpy as np

from .basis import SplineBasis

__all__ = [
    "SnapshotSeries",
    "as_series",
    "evaluate_processes",
    "evaluate_trajectories",
    "expected_adjacency",
    "objective",
    "gradient",
    "penalized_objective",
    "penalized_gradient",
]

SYMMETRY_TOL = 1e-10


class SnapshotSeries:
    """A collection of symmetric network snapshots with real-valued indices.

    Parameters
    ----------
    indices : array_like of shape (m,)
        Strictly increasing snapshot indices.
    snapshots : array_like of shape (m, n, n) or sequence of (n, n) arrays
        Square matrices, one per index. Inputs are symmetrized as
        ``(A + A.T) / 2``; deviations larger than ``1e-10`` trigger a
        warning rather than an error.
    masks : optional array_like of shape (m, n, n), boolean
        Entry observation indicators (``True`` = observed). Each mask must
        be symmetric and mark at least one observed entry per snapshot.
    """

    def __init__(self, indices, snapshots, masks=None):
        indices = np.asarray(indices, dtype=float).ravel()
        if indices.size == 0:
            raise ValueError("series must contain at least one snapshot")
        if not np.isfinite(indices).all():
            raise ValueError("snapshot indices must be finite")
        if indices.size > 1 and not (np.diff(indices) > 0).all():
            raise ValueError("snapshot indices must be strictly increasing")

        snaps = np.asarray(snapshots, dtype=float)
        if snaps.ndim != 3 or snaps.shape[0] != indices.size:
            raise ValueError(
                "snapshots must form an (m, n, n) stack matching the indices"
            )
        if snaps.shape[1] != snaps.shape[2]:
            raise ValueError("snapshots must be square matrices")
        if not np.isfinite(snaps).all():
            raise ValueError("snapshot entries must be finite")
        deviation = np.abs(snaps - snaps.transpose(0, 2, 1)).max() if snaps.size else 0.0
        if deviation > SYMMETRY_TOL:
            warnings.warn(
                f"snapshots deviate from symmetry by up to {deviation:.3e}; "
                "symmetrizing as (A + A.T) / 2",
                stacklevel=2,
            )
        snaps = 0.5 * (snaps + snaps.transpose(0, 2, 1))

        if masks is not None:
            masks = np.asarray(masks, dtype=bool)
            if masks.shape != snaps.shape:
                raise ValueError("masks must match the snapshot stack shape")
            if not (masks == masks.transpose(0, 2, 1)).all():
                raise ValueError("masks must be symmetric")
            if not masks.any(axis=(1, 2)).all():
                raise ValueError("each snapshot must have at least one observed entry")

        self.indices = indices
        self.snapshots = snaps
        self.masks = masks

    @property
    def n_nodes(self) -> int:
        return self.snapshots.shape[1]

    @property
    def n_snapshots(self) -> int:
        return self.snapshots.shape[0]

    def without_diagonal(self) -> "SnapshotSeries":
        """Copy of the series whose masks exclude the diagonal entries."""
        n = self.n_nodes
        off = ~np.eye(n, dtype=bool)
        masks = np.broadcast_to(off, self.snapshots.shape).copy()
        if self.masks is not None:
            masks &= self.masks
        return SnapshotSeries(self.indices, self.snapshots, masks)

    def subset(self, keep) -> "SnapshotSeries":
        """Series restricted to the snapshot positions in ``keep``."""
        keep = np.asarray(keep)
        masks = self.masks[keep] if self.masks is not None else None
        return SnapshotSeries(self.indices[keep], self.snapshots[keep], masks)


def as_series(X, indices=None) -> SnapshotSeries:
    """Coerce input to a :class:`SnapshotSeries`.

    Accepts an existing series (returned unchanged), or an ``(m, n, n)``
    stack / sequence of square matrices together with ``indices``.
    """
    if isinstance(X, SnapshotSeries):
        if indices is not None:
            raise ValueError("indices must not be given when X is already a series")
        return X
    if indices is None:
        raise ValueError("indices are required when passing raw snapshot matrices")
    return SnapshotSeries(indices, X)


def _check_coords(coords, basis: SplineBasis, n_nodes: int | None = None) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 3:
        raise ValueError("coordinate tensor must have shape (n, q, d)")
    if coords.shape[1] != basis.q:
        raise ValueError(
            f"coordinate tensor has {coords.shape[1]} basis coordinates but the "
            f"basis dimension is {basis.q}"
        )
    if n_nodes is not None and coords.shape[0] != n_nodes:
        raise ValueError("coordinate tensor does not match the number of nodes")
    if coords.shape[2] < 1:
        raise ValueError("coordinate tensor must have at least one latent dimension")
    if not np.isfinite(coords).all():
        raise ValueError("coordinate tensor entries must be finite")
    return coords


def evaluate_processes(coords, basis: SplineBasis, x: float) -> np.ndarray:
    """Latent positions ``(n, d)`` at a single index: rows ``w_i' B(x)``."""
    coords = _check_coords(coords, basis)
    return np.einsum("nqd,q->nd", coords, basis.evaluate(x))


def evaluate_trajectories(coords, basis: SplineBasis, xs) -> np.ndarray:
    """Trajectory stack ``(n, len(xs), d)`` of latent positions at ``xs``."""
    coords = _check_coords(coords, basis)
    design = basis.design_matrix(xs)
    return np.einsum("nqd,mq->nmd", coords, design)


def expected_adjacency(Z) -> np.ndarray:
    """Expected adjacency ``Z Z.T`` for latent positions ``Z`` of shape (n, d)."""
    Z = np.asarray(Z, dtype=float)
    return Z @ Z.T


def _fitted_positions(coords, design) -> np.ndarray:
    # (m, n, d) latent positions at every design row
    return np.einsum("nqd,mq->mnd", coords, design)


def _residuals(coords, series: SnapshotSeries, design):
    """Per-snapshot latent positions and masked residual stack."""
    Z = _fitted_positions(coords, design)
    R = Z @ Z.transpose(0, 2, 1)
    np.subtract(series.snapshots, R, out=R)
    if series.masks is not None:
        np.multiply(R, series.masks, out=R)
    return Z, R


def _objective_core(coords, series, design):
    Z, R = _residuals(coords, series, design)
    flat = R.reshape(-1)
    return float(flat @ flat), Z, R


def _gradient_core(coords, series, design, Z=None, R=None):
    if Z is None or R is None:
        Z, R = _residuals(coords, series, design)
    return -4.0 * np.einsum("mnd,mq->nqd", R @ Z, design)


def _check_dims(coords, series, basis):
    coords = _check_coords(coords, basis, n_nodes=series.n_nodes)
    return coords


def objective(coords, series: SnapshotSeries, basis: SplineBasis) -> float:
    """Total squared reconstruction error of the series under ``coords``.

    Sums ``||A_k - Z(x_k) Z(x_k)'||_F^2`` over snapshots, where
    ``Z(x_k)`` collects the fitted latent positions. When the series
    carries masks, unobserved entries are excluded from the sum.
    """
    coords = _check_dims(coords, series, basis)
    design = basis.design_matrix(series.indices)
    return _objective_core(coords, series, design)[0]


def gradient(coords, series: SnapshotSeries, basis: SplineBasis) -> np.ndarray:
    """Exact gradient of :func:`objective` with respect to the coordinates.

    Per latent dimension ``r`` the slice equals
    ``-4 * sum_k residual_k @ Z_r(x_k) B(x_k)'`` with residual entries at
    unobserved triples zeroed. The leading factor of 4 is kept so step-size
    selection sees the true descent scale.
    """
    coords = _check_dims(coords, series, basis)
    design = basis.design_matrix(series.indices)
    return _gradient_core(coords, series, design)


def _check_penalty(lam: float, penalty, q: int):
    if lam < 0:
        raise ValueError("penalty weight must be nonnegative")
    penalty = np.asarray(penalty, dtype=float)
    if penalty.shape != (q, q):
        raise ValueError(f"penalty matrix must have shape ({q}, {q})")
    return penalty


def penalized_objective(coords, series, basis, lam: float, penalty) -> float:
    """:func:`objective` plus ``lam`` times the total coordinate roughness.

    The roughness term sums the quadratic form ``w' penalty w`` over every
    node and latent dimension.
    """
    coords = _check_dims(coords, series, basis)
    penalty = _check_penalty(lam, penalty, basis.q)
    value = objective(coords, series, basis)
    return value + lam * float(np.einsum("nqd,qp,npd->", coords, penalty, coords))


def penalized_gradient(coords, series, basis, lam: float, penalty) -> np.ndarray:
    """Gradient of :func:`penalized_objective`; adds ``2 lam W_r penalty``."""
    coords = _check_dims(coords, series, basis)
    penalty = _check_penalty(lam, penalty, basis.q)
    grad = gradient(coords, series, basis)
    return grad + 2.0 * lam * np.einsum("nqd,qp->npd", coords, penalty)
