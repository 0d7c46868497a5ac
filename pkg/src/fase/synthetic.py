"""Seeded generators for synthetic functional network data.

Randomness comes from the counter-based 64-bit Philox generator, with one
independent substream per (scenario, purpose) pair derived through seed
sequences. Reruns with the same inputs are bit-identical within this
package.

Three scenarios are provided:

* ``i``   -- Gaussian-noise networks whose latent processes live exactly in
  a ten-dimensional cubic spline space with equally spaced knots on [0, 1];
* ``ii``  -- Gaussian-noise networks with sinusoidal latent processes of
  varying amplitude (not representable in any finite spline space);
* ``iii`` -- binary networks whose spline-space latent positions lie on a
  rescaled probability simplex, so inner products are valid edge
  probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import SplineBasis
from .model import SnapshotSeries, evaluate_trajectories

__all__ = [
    "InfeasibleDensityError",
    "ScenarioSpec",
    "gen_scenario_i",
    "gen_scenario_ii",
    "gen_scenario_iii",
    "generator_basis",
    "make_interpolation_task",
]

_GENERATOR_DIM = 10
_SCENARIO_IDS = {"i": 1, "ii": 2, "iii": 3}
_STREAMS = {"coords": 0, "noise": 1, "shift": 2, "ramp": 3, "offset": 4, "edges": 5}
_HOLDOUT_STREAM = (0, 99)


class InfeasibleDensityError(ValueError):
    """The requested density cannot be realized with valid probabilities."""


def _rng(seed: int, scenario_id: int, stream: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(scenario_id, stream))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class ScenarioSpec:
    """Parameters of a synthetic scenario.

    ``sigma`` is the Gaussian edge noise scale (scenarios i and ii),
    ``density`` the target edge density (scenario iii), and ``cycles`` the
    number of full sinusoid cycles across the index space (scenario ii).
    """

    scenario: str
    n: int
    m: int
    d: int
    sigma: float = 0.0
    density: float | None = None
    cycles: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in _SCENARIO_IDS:
            raise ValueError("scenario must be one of 'i', 'ii', 'iii'")
        if min(self.n, self.d) < 1 or self.m < 2:
            raise ValueError("need n >= 1, m >= 2, d >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.cycles <= 0:
            raise ValueError("cycles must be positive")
        if self.scenario == "iii":
            if self.density is None or not 0.0 < self.density <= 1.0:
                raise ValueError("scenario iii requires a density in (0, 1]")
            if self.density * self.d > 1.0 + 1e-12:
                raise InfeasibleDensityError(
                    f"density {self.density} with d={self.d} would need a "
                    "coordinate scale above 1; valid probabilities require "
                    "density * d <= 1"
                )

    @property
    def scenario_id(self) -> int:
        return _SCENARIO_IDS[self.scenario]


def generator_basis() -> SplineBasis:
    """The cubic ten-dimensional equally-spaced-knot basis used by the
    spline-process scenarios; pair it with the coordinates they return."""
    interior = tuple(np.linspace(0.0, 1.0, _GENERATOR_DIM - 2)[1:-1])
    return SplineBasis(order=3, boundary=(0.0, 1.0), interior_knots=interior)


def _symmetric_noise(rng: np.random.Generator, m: int, n: int, sigma: float) -> np.ndarray:
    """Symmetric Gaussian noise: upper triangle incl. diagonal, mirrored."""
    rows, cols = np.triu_indices(n)
    noise = np.zeros((m, n, n))
    if sigma > 0:
        draws = rng.normal(0.0, sigma, size=(m, rows.size))
        noise[:, rows, cols] = draws
        noise[:, cols, rows] = draws
    return noise


def _stack_thetas(truth: np.ndarray) -> np.ndarray:
    Z = truth.transpose(1, 0, 2)  # (m, n, d)
    return Z @ Z.transpose(0, 2, 1)


def gen_scenario_i(spec: ScenarioSpec):
    """Gaussian networks with spline latent processes.

    Coordinates are standard normal in a ten-dimensional cubic spline basis
    with equally spaced knots on [0, 1]; snapshot indices are equally
    spaced over [0, 1]. Returns ``(series, truth_stack, truth_coords)``.
    """
    if spec.scenario != "i":
        raise ValueError("spec.scenario must be 'i'")
    basis = generator_basis()
    indices = np.linspace(0.0, 1.0, spec.m)
    coords = _rng(spec.seed, spec.scenario_id, _STREAMS["coords"]).standard_normal(
        (spec.n, _GENERATOR_DIM, spec.d)
    )
    truth = evaluate_trajectories(coords, basis, indices)
    noise = _symmetric_noise(
        _rng(spec.seed, spec.scenario_id, _STREAMS["noise"]), spec.m, spec.n, spec.sigma
    )
    series = SnapshotSeries(indices, _stack_thetas(truth) + noise)
    return series, truth, coords


def gen_scenario_ii(spec: ScenarioSpec):
    """Gaussian networks with sinusoidal latent processes.

    Each component process is ``3 sin(C pi (2x - U)) / (1 + 5 (x + B (1 - 2x)))
    + G`` with a uniform phase ``U``, a fair-coin direction ``B`` that makes
    the amplitude either decay or grow across the index space, and a
    Gaussian level ``G`` of standard deviation one half. ``C`` counts the
    full cycles completed on [0, 1]. Returns ``(series, truth_stack)``.
    """
    if spec.scenario != "ii":
        raise ValueError("spec.scenario must be 'ii'")
    indices = np.linspace(0.0, 1.0, spec.m)
    sid = spec.scenario_id
    shift = _rng(spec.seed, sid, _STREAMS["shift"]).uniform(size=(spec.n, spec.d))
    ramp = _rng(spec.seed, sid, _STREAMS["ramp"]).integers(0, 2, size=(spec.n, spec.d))
    offset = _rng(spec.seed, sid, _STREAMS["offset"]).normal(0.0, 0.5, size=(spec.n, spec.d))

    x = indices[None, :, None]
    u = shift[:, None, :]
    b = ramp[:, None, :]
    g = offset[:, None, :]
    truth = 3.0 * np.sin(spec.cycles * np.pi * (2.0 * x - u))
    truth /= 1.0 + 5.0 * (x + b * (1.0 - 2.0 * x))
    truth += g

    noise = _symmetric_noise(
        _rng(spec.seed, sid, _STREAMS["noise"]), spec.m, spec.n, spec.sigma
    )
    series = SnapshotSeries(indices, _stack_thetas(truth) + noise)
    return series, truth


def gen_scenario_iii(spec: ScenarioSpec):
    """Binary networks with simplex-valued spline latent processes.

    Coordinate fibers across latent dimensions are independent symmetric
    Dirichlet draws with concentration 0.1, rescaled by
    ``sqrt(density * d)`` so a random pair of nodes has expected edge
    probability ``density``. Edges are Bernoulli in the latent inner
    products, drawn on the upper triangle (diagonal included) and mirrored.
    Returns ``(series, truth_stack)``.
    """
    if spec.scenario != "iii":
        raise ValueError("spec.scenario must be 'iii'")
    scale = float(np.sqrt(spec.density * spec.d))
    if scale > 1.0 + 1e-12:
        raise InfeasibleDensityError(
            f"coordinate scale {scale:.3f} above 1; density * d must be at most 1"
        )
    basis = generator_basis()
    indices = np.linspace(0.0, 1.0, spec.m)
    sid = spec.scenario_id
    coords = _rng(spec.seed, sid, _STREAMS["coords"]).dirichlet(
        alpha=np.full(spec.d, 0.1), size=(spec.n, _GENERATOR_DIM)
    )
    coords = coords * scale
    truth = evaluate_trajectories(coords, basis, indices)
    probs = _stack_thetas(truth)
    if probs.min() < -1e-12 or probs.max() > 1.0 + 1e-9:
        raise RuntimeError(
            "generated inner products left [0, 1]; this should be impossible "
            "at a feasible density"
        )
    probs = np.clip(probs, 0.0, 1.0)  # shave float round-off only

    rows, cols = np.triu_indices(spec.n)
    edge_rng = _rng(spec.seed, sid, _STREAMS["edges"])
    draws = edge_rng.binomial(1, probs[:, rows, cols]).astype(float)
    snaps = np.zeros_like(probs)
    snaps[:, rows, cols] = draws
    snaps[:, cols, rows] = draws
    series = SnapshotSeries(indices, snaps)
    return series, truth


def make_interpolation_task(
    series: SnapshotSeries, truth: np.ndarray, M: int, seed: int
):
    """Hold out a centered window of snapshots for interpolation scoring.

    A center position with index value in [0.25, 0.5] (avoiding boundary
    effects) is drawn uniformly, and the ``2 M + 1`` snapshots centered
    there are removed from the series. Returns the reduced series, the
    held-out index, and the true expected adjacency matrix at that index.
    """
    M = int(M)
    if M < 0:
        raise ValueError("M must be nonnegative")
    m = series.n_snapshots
    if 2 * M + 1 >= m:
        raise ValueError(
            f"removal window 2M+1={2 * M + 1} must be smaller than m={m}"
        )
    positions = np.arange(m)
    in_range = (series.indices >= 0.25) & (series.indices <= 0.5)
    fits = (positions - M >= 0) & (positions + M <= m - 1)
    candidates = positions[in_range & fits]
    if candidates.size == 0:
        raise ValueError(
            "removal window too large: no admissible center index in [0.25, 0.5]"
        )
    rng = _rng(seed, *_HOLDOUT_STREAM)
    center = int(rng.choice(candidates))
    x_star = float(series.indices[center])
    keep = np.ones(m, dtype=bool)
    keep[center - M : center + M + 1] = False
    Z_star = np.asarray(truth, dtype=float)[:, center, :]
    return series.subset(keep), x_star, Z_star @ Z_star.T
