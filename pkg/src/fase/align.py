"""Orthogonal Procrustes alignment and rotation-aware recovery metrics.

Trajectory stacks are ``(n, m, d)`` arrays of per-snapshot latent positions.
All metrics quotient out the rotational nonidentifiability of inner-product
models, either per snapshot (``err_z``), through a single global rotation
after chaining (``err_z_star``), or by comparing expected adjacency matrices
directly (``err_theta_mid``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "AlignmentReport",
    "procrustes",
    "sequential_procrustes",
    "err_z",
    "err_z_star",
    "err_theta_mid",
]


@dataclass
class AlignmentReport:
    """Per-snapshot optimal rotations and the total alignment error."""

    rotations: list[np.ndarray]
    total_error: float


def procrustes(X, Y) -> np.ndarray:
    """Orthogonal matrix ``Q`` minimizing ``||X Q - Y||_F``.

    Computed as ``U V'`` from the singular value decomposition
    ``X' Y = U S V'``. For rank-deficient cross products any valid
    minimizer is returned, deterministically for a given input. In one
    dimension this reduces to the sign of ``X' Y`` (sign of zero taken
    as positive).
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape:
        raise ValueError("procrustes inputs must have identical shapes")
    cross = X.T @ Y
    U, _, Vt = np.linalg.svd(cross)
    # fix signs so each left singular vector has a positive dominant entry;
    # mirrored flips of U columns and Vt rows leave the product unchanged
    flip = np.sign(U[np.argmax(np.abs(U), axis=0), np.arange(U.shape[1])])
    flip[flip == 0] = 1.0
    U = U * flip
    Vt = Vt * flip[:, None]
    return U @ Vt


def sequential_procrustes(stack, return_rotations: bool = False):
    """Chain-align the slices of a trajectory stack.

    The first slice is kept fixed; every later slice is rotated to best
    match its already-aligned predecessor. Induced expected adjacency
    matrices are unchanged. With ``return_rotations=True`` the applied
    rotations are returned as well.
    """
    stack = np.asarray(stack, dtype=float)
    if stack.ndim != 3:
        raise ValueError("trajectory stack must have shape (n, m, d)")
    m, d = stack.shape[1], stack.shape[2]
    aligned = stack.copy()
    rotations = [np.eye(d)]
    for k in range(1, m):
        Q = procrustes(aligned[:, k, :], aligned[:, k - 1, :])
        aligned[:, k, :] = aligned[:, k, :] @ Q
        rotations.append(Q)
    if return_rotations:
        return aligned, rotations
    return aligned


def _pad_to_common_d(est, truth):
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if est.ndim != 3 or truth.ndim != 3:
        raise ValueError("trajectory stacks must have shape (n, m, d)")
    if est.shape[:2] != truth.shape[:2]:
        raise ValueError("stacks must agree in the number of nodes and snapshots")
    d = max(est.shape[2], truth.shape[2])

    def pad(stack):
        if stack.shape[2] == d:
            return stack
        extra = np.zeros(stack.shape[:2] + (d - stack.shape[2],))
        return np.concatenate([stack, extra], axis=2)

    return pad(est), pad(truth), d


def err_z(est, truth, return_report: bool = False):
    """Root mean squared recovery error up to per-snapshot rotations.

    Equals ``sqrt((1/(n d m)) * sum_k min_Q ||est_k - truth_k Q||_F^2)``.
    Stacks with differing latent dimension are zero-padded to match before
    comparison.
    """
    est, truth, d = _pad_to_common_d(est, truth)
    n, m = est.shape[0], est.shape[1]
    total = 0.0
    rotations = []
    for k in range(m):
        Q = procrustes(truth[:, k, :], est[:, k, :])
        diff = est[:, k, :] - truth[:, k, :] @ Q
        total += float(np.sum(diff * diff))
        rotations.append(Q)
    value = float(np.sqrt(total / (n * d * m)))
    if return_report:
        return value, AlignmentReport(rotations=rotations, total_error=value)
    return value


def err_z_star(est, truth) -> float:
    """Recovery error up to one global rotation after chain alignment.

    Both stacks are first chain-aligned with :func:`sequential_procrustes`,
    then a single rotation is fit between them. Always at least
    :func:`err_z` on the same inputs.
    """
    est, truth, d = _pad_to_common_d(est, truth)
    n, m = est.shape[0], est.shape[1]
    est_a = sequential_procrustes(est)
    truth_a = sequential_procrustes(truth)
    est_flat = est_a.transpose(1, 0, 2).reshape(m * n, d)
    truth_flat = truth_a.transpose(1, 0, 2).reshape(m * n, d)
    Q0 = procrustes(truth_flat, est_flat)
    diff = est_flat - truth_flat @ Q0
    return float(np.sqrt(np.sum(diff * diff) / (n * d * m)))


def err_theta_mid(est_positions, theta) -> float:
    """Rotation-free error ``||Z Z' - theta||_F / n`` at a single index."""
    Z = np.asarray(est_positions, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if Z.ndim != 2:
        raise ValueError("latent positions must be an (n, d) matrix")
    n = Z.shape[0]
    if theta.shape != (n, n):
        raise ValueError("expected adjacency must be (n, n) matching the positions")
    return float(np.linalg.norm(Z @ Z.T - theta, "fro") / n)
