"""Comparison embeddings: per-snapshot spectral embedding and omnibus embedding."""

from __future__ import annotations

import numpy as np

from .model import SnapshotSeries
from .spectral import ase

__all__ = ["ase_per_snapshot", "omni_embed", "OMNI_DEFAULT_MAX_SIZE"]

OMNI_DEFAULT_MAX_SIZE = 5000


def _imputed_snapshots(series: SnapshotSeries) -> np.ndarray:
    """Fill masked entries with the per-edge observed mean.

    Spectral baselines need complete matrices; edges never observed in any
    snapshot fall back to the overall mean of observed entries. This
    imputation exists only for the baselines.
    """
    if series.masks is None:
        return series.snapshots
    counts = series.masks.sum(axis=0)
    totals = (series.snapshots * series.masks).sum(axis=0)
    overall = series.snapshots[series.masks].mean() if series.masks.any() else 0.0
    edge_mean = np.where(counts > 0, totals / np.maximum(counts, 1), overall)
    filled = np.where(series.masks, series.snapshots, edge_mean)
    return 0.5 * (filled + filled.transpose(0, 2, 1))


def ase_per_snapshot(series: SnapshotSeries, d: int) -> np.ndarray:
    """Embed every snapshot independently; returns an ``(n, m, d)`` stack."""
    snaps = _imputed_snapshots(series)
    stack = np.empty((series.n_nodes, series.n_snapshots, int(d)))
    for k in range(series.n_snapshots):
        stack[:, k, :] = ase(snaps[k], d)
    return stack


def omni_embed(
    series: SnapshotSeries, d: int, max_size: int = OMNI_DEFAULT_MAX_SIZE
) -> np.ndarray:
    """Joint embedding through the omnibus matrix.

    The omnibus matrix has ``(i, j)`` block ``(A_i + A_j) / 2`` (so block
    ``(i, i)`` is ``A_i`` itself); its ``d``-dimensional spectral embedding
    is split into ``m`` consecutive row blocks of ``n`` rows each.

    The construction requires a dense ``(mn, mn)`` eigendecomposition, so
    the size ``m * n`` is guarded by ``max_size``; raise the limit
    explicitly to embed larger series.
    """
    snaps = _imputed_snapshots(series)
    m, n = series.n_snapshots, series.n_nodes
    if m * n > max_size:
        raise RuntimeError(
            f"omnibus embedding needs a dense ({m * n}, {m * n}) eigendecomposition, "
            f"above the guard max_size={max_size}; pass a larger max_size to force it"
        )
    omnibus = 0.5 * (snaps[:, None, :, :] + snaps[None, :, :, :])
    omnibus = omnibus.transpose(0, 2, 1, 3).reshape(m * n, m * n)
    embedding = ase(omnibus, d)
    return embedding.reshape(m, n, int(d)).transpose(1, 0, 2)
