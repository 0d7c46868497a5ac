import numpy as np
import pytest

from fase import SnapshotSeries, evaluate_trajectories, make_basis


def random_series(rng, n, m, d, q=None, sigma=0.0, masks=False):
    """Small random series generated from a spline latent model."""
    q = q or 5
    indices = np.sort(rng.uniform(0.0, 1.0, size=m))
    indices[0], indices[-1] = 0.0, 1.0
    basis = make_basis(q, indices, order=3)
    coords = rng.normal(size=(n, basis.q, d))
    truth = evaluate_trajectories(coords, basis, indices)
    Z = truth.transpose(1, 0, 2)
    snaps = Z @ Z.transpose(0, 2, 1)
    if sigma > 0:
        rows, cols = np.triu_indices(n)
        noise = rng.normal(0.0, sigma, size=(m, rows.size))
        E = np.zeros((m, n, n))
        E[:, rows, cols] = noise
        E[:, cols, rows] = noise
        snaps = snaps + E
    mask_stack = None
    if masks:
        mask_stack = np.ones((m, n, n), dtype=bool)
        for k in range(m):
            drop = rng.random((n, n)) < 0.2
            drop = drop | drop.T
            mask_stack[k] = ~drop
            mask_stack[k, 0, 0] = True  # keep every snapshot observable
    series = SnapshotSeries(indices, snaps, mask_stack)
    return series, basis, coords, truth


def random_orthogonal(rng, d):
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    return Q


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
