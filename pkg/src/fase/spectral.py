"""Spectral embedding and the local-average initializer for gradient descent.

The initializer partitions the snapshot positions into contiguous blocks,
embeds each block-mean adjacency matrix spectrally, optionally chain-aligns
the block embeddings with Procrustes rotations, and projects the resulting
piecewise-constant trajectories onto the spline basis by least squares.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .align import procrustes
from .basis import SplineBasis
from .model import SnapshotSeries

__all__ = [
    "SpectralDiagnostics",
    "ase",
    "partition_indices",
    "initialize",
    "default_L",
    "diagnostics",
]

_EIG_FLOOR = 1e-12


def ase(M, d: int) -> np.ndarray:
    """Adjacency spectral embedding: top-``d`` scaled eigenvectors.

    Columns are eigenvectors scaled by ``sqrt(|eigenvalue|)``, ordered by
    decreasing eigenvalue magnitude (ties keep the symmetric-eigensolver
    order). Each column's sign is fixed so its largest-magnitude entry is
    positive, making the embedding deterministic up to eigenvalue ties.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("ase requires a square symmetric matrix")
    d = int(d)
    if not 1 <= d <= M.shape[0]:
        raise ValueError("embedding dimension must satisfy 1 <= d <= n")
    eigvals, eigvecs = np.linalg.eigh(M)
    order = np.argsort(-np.abs(eigvals), kind="stable")[:d]
    vals = eigvals[order]
    vecs = eigvecs[:, order]
    dominant = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[dominant, np.arange(d)])
    signs[signs == 0] = 1.0
    return vecs * signs * np.sqrt(np.abs(vals))


def _top_eigenvalues(M, d):
    eigvals = np.linalg.eigvalsh(np.asarray(M, dtype=float))
    order = np.argsort(-np.abs(eigvals), kind="stable")[:d]
    return eigvals[order]


def partition_indices(m: int, L: int) -> list[np.ndarray]:
    """Split positions ``0..m-1`` into ``L`` contiguous, near-equal blocks.

    Block sizes differ by at most one, with the larger blocks first.
    """
    m, L = int(m), int(L)
    if m < 1 or not 1 <= L <= m:
        raise ValueError("number of blocks must satisfy 1 <= L <= m")
    base, rem = divmod(m, L)
    blocks = []
    start = 0
    for block in range(L):
        size = base + (1 if block < rem else 0)
        blocks.append(np.arange(start, start + size))
        start += size
    return blocks


def _masked_mean(snapshots, masks, block, global_mean):
    """Entrywise observed mean of a snapshot block with global fallback."""
    if masks is None:
        return snapshots[block].mean(axis=0)
    observed = masks[block]
    counts = observed.sum(axis=0)
    total = (snapshots[block] * observed).sum(axis=0)
    out = np.where(counts > 0, total / np.maximum(counts, 1), global_mean)
    return out


def _global_mean(series: SnapshotSeries) -> np.ndarray:
    if series.masks is None:
        return series.snapshots.mean(axis=0)
    counts = series.masks.sum(axis=0)
    total = (series.snapshots * series.masks).sum(axis=0)
    return np.where(counts > 0, total / np.maximum(counts, 1), 0.0)


def initialize(
    series: SnapshotSeries,
    basis: SplineBasis,
    d: int,
    L: int,
    align: bool = True,
) -> np.ndarray:
    """Local-average spectral initializer for the coordinate tensor.

    Parameters
    ----------
    series : SnapshotSeries
    basis : SplineBasis
    d : int
        Latent dimension.
    L : int
        Number of contiguous blocks; ``1 <= L <= m``.
    align : bool, default True
        Chain-align consecutive block embeddings with Procrustes rotations
        before projecting, to target a smooth representative of the
        rotational equivalence class.

    Returns
    -------
    ndarray of shape (n, q, d)
        Least-squares basis coordinates of the piecewise-constant stack of
        block embeddings.
    """
    m = series.n_snapshots
    blocks = partition_indices(m, L)
    gmean = _global_mean(series)

    embeds = []
    for block in blocks:
        block_mean = _masked_mean(series.snapshots, series.masks, block, gmean)
        emb = ase(block_mean, d)
        if align and embeds:
            emb = emb @ procrustes(emb, embeds[-1])
        embeds.append(emb)

    stack = np.empty((series.n_nodes, m, d))
    for emb, block in zip(embeds, blocks):
        stack[:, block, :] = emb[:, None, :]
    return project_stack(stack, basis, series.indices)


def project_stack(stack, basis: SplineBasis, xs) -> np.ndarray:
    """Least-squares basis coordinates of a trajectory stack.

    Solves the normal equations of the basis design at ``xs`` for every
    node and latent dimension. Raises on a rank-deficient design.
    """
    stack = np.asarray(stack, dtype=float)
    n, m, d = stack.shape
    design = basis.design_matrix(xs)
    gram = design.T @ design
    try:
        factor = cho_factor(gram)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "rank-deficient design: the basis cannot be identified from "
            "these snapshot indices (reduce q or add snapshots)"
        ) from exc
    rhs = design.T @ stack.transpose(1, 0, 2).reshape(m, n * d)
    coeffs = cho_solve(factor, rhs)
    return coeffs.reshape(basis.q, n, d).transpose(1, 0, 2)


@dataclass
class SpectralDiagnostics:
    """Plug-in spectral summaries of a snapshot series.

    ``gamma_sq`` estimates the weakest retained signal eigenvalue,
    ``kappa`` its conditioning ratio, and ``sigma_hat`` the edge noise
    scale. ``negative_top_eigenvalue`` flags an indefinite mean matrix
    whose top-``d`` eigenvalues (by magnitude) include a negative one.
    """

    gamma_sq: float
    kappa: float
    sigma_hat: float
    negative_top_eigenvalue: bool = False


def diagnostics(series: SnapshotSeries, d: int) -> SpectralDiagnostics:
    """Estimate signal strength and noise scale from the data alone.

    The noise variance is half the entrywise variance of successive
    snapshot differences (differencing removes smooth mean structure);
    the signal strength is the ``d``-th largest eigenvalue of the global
    mean adjacency matrix, floored at a small positive value.
    """
    d = int(d)
    if d < 1:
        raise ValueError("latent dimension must be positive")
    gmean = _global_mean(series)
    top = _top_eigenvalues(gmean, d)
    lam_max = float(np.abs(top).max())
    lam_d = float(np.abs(top).min())
    gamma_sq = max(lam_d, _EIG_FLOOR)
    kappa = max(lam_max / gamma_sq, 1.0)

    if series.n_snapshots < 2:
        sigma_hat = 0.0
    else:
        diffs = np.diff(series.snapshots, axis=0)
        if series.masks is not None:
            both = series.masks[1:] & series.masks[:-1]
            values = diffs[both]
        else:
            values = diffs.ravel()
        sigma_hat = float(np.sqrt(max(np.var(values) / 2.0, 0.0))) if values.size else 0.0

    return SpectralDiagnostics(
        gamma_sq=gamma_sq,
        kappa=kappa,
        sigma_hat=sigma_hat,
        negative_top_eigenvalue=bool((top < 0).any()),
    )


def default_L(series: SnapshotSeries, d: int) -> int:
    """Data-driven number of initializer blocks.

    Balances the bias of averaging over a block against the variance of a
    block-mean embedding: ``L = round((gamma * sqrt(m) / sigma)^(2/3))``
    with plug-in estimates from :func:`diagnostics`, clamped to ``[1, m]``.
    A noiseless series therefore uses ``L = m`` and an overwhelmingly noisy
    one collapses to a single block.
    """
    m = series.n_snapshots
    if m < 2:
        warnings.warn(
            "cannot estimate the noise scale from a single snapshot; using L=1",
            stacklevel=2,
        )
        return 1
    diag = diagnostics(series, d)
    sigma = max(diag.sigma_hat, _EIG_FLOOR)
    gamma = np.sqrt(diag.gamma_sq)
    raw = (gamma * np.sqrt(m) / sigma) ** (2.0 / 3.0)
    return int(np.clip(np.rint(raw), 1, m))
