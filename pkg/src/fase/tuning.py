"""Model selection over basis dimension ``q`` and latent dimension ``d``.

The selection criterion is a network generalized cross validation score:
the log mean squared residual plus a complexity penalty in the parameter
count per regression problem. Selection either scans a full grid or runs
alternating one-dimensional minimizations over ``q`` and ``d``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .fitting import FaseFit, FitOptions, fit_pipeline
from .model import SnapshotSeries

__all__ = ["TuningGrid", "TuningResult", "ngcv", "grid_select", "coordinate_descent_select"]

_OBJECTIVE_FLOOR = 1e-300


@dataclass(frozen=True)
class TuningGrid:
    """Sorted candidate values for the basis and latent dimensions."""

    q_values: tuple[int, ...]
    d_values: tuple[int, ...]

    def __post_init__(self):
        q_values = tuple(sorted({int(q) for q in self.q_values}))
        d_values = tuple(sorted({int(d) for d in self.d_values}))
        if not q_values or not d_values:
            raise ValueError("tuning grid must be nonempty")
        if q_values[0] < 1 or d_values[0] < 1:
            raise ValueError("grid values must be positive")
        object.__setattr__(self, "q_values", q_values)
        object.__setattr__(self, "d_values", d_values)

    @property
    def cells(self) -> list[tuple[int, int]]:
        return [(q, d) for d in self.d_values for q in self.q_values]


@dataclass
class TuningResult:
    """Outcome of a tuning run.

    ``criterion`` maps visited ``(q, d)`` cells to their scores (``nan``
    marks a failed fit); unvisited cells are absent. ``path`` records the
    incumbent after each coordinate-descent sweep (empty for grid search).
    """

    q: int
    d: int
    criterion: dict[tuple[int, int], float]
    n_visited: int
    path: list[tuple[int, int]] = field(default_factory=list)
    n_sweeps: int = 0
    n_searches: int = 0
    fits: dict[tuple[int, int], FaseFit] | None = None

    @property
    def chosen_criterion(self) -> float:
        return self.criterion[(self.q, self.d)]


def ngcv(objective_value: float, n: int, m: int, q: int, d: int) -> float:
    """Network generalized cross validation score.

    ``log(objective / (m n^2)) - 2 log(1 - 2 q d / (n m))``; the mean of the
    per-node simplified GCV scores equals the exponential of this value.
    Objective values below ``1e-300`` are floored so that perfect fits stay
    finite.
    """
    n, m, q, d = int(n), int(m), int(q), int(d)
    if min(n, m, q, d) < 1:
        raise ValueError("dimensions must be positive")
    if objective_value < 0:
        raise ValueError("objective value must be nonnegative")
    ratio = 2.0 * q * d / (n * m)
    if ratio >= 1.0:
        raise ValueError(
            f"model complexity 2qd={2 * q * d} must be below nm={n * m}"
        )
    value = max(float(objective_value), _OBJECTIVE_FLOOR)
    return math.log(value / (m * n * n)) - 2.0 * math.log1p(-ratio)


def _validate_grid(grid: TuningGrid, series: SnapshotSeries, order: int) -> None:
    n, m = series.n_nodes, series.n_snapshots
    if grid.q_values[0] < order + 1:
        raise ValueError(
            f"all grid q values must be at least order+1={order + 1}"
        )
    worst = 2 * grid.q_values[-1] * grid.d_values[-1]
    if worst >= n * m:
        raise ValueError(
            f"grid too complex for the data: 2qd={worst} must stay below nm={n * m}"
        )


class _CellEvaluator:
    """Fit-and-score a grid cell once; results are memoized."""

    def __init__(self, series, order, opts, n_blocks, align, sequential, keep_fits, cache):
        self.series = series
        self.order = order
        self.opts = opts
        self.n_blocks = n_blocks
        self.align = align
        self.sequential = sequential
        self.fits: dict[tuple[int, int], FaseFit] | None = {} if keep_fits else None
        self.cache = cache if cache is not None else {}
        self.visited: set[tuple[int, int]] = set()

    def __call__(self, q: int, d: int) -> float:
        cell = (q, d)
        self.visited.add(cell)
        if cell in self.cache:
            value, fit = self.cache[cell]
        else:
            try:
                fit, _ = fit_pipeline(
                    self.series,
                    q=q,
                    d=d,
                    order=self.order,
                    opts=self.opts,
                    n_blocks=self.n_blocks,
                    align=self.align,
                    sequential=self.sequential,
                )
                value = ngcv(
                    fit.final_objective,
                    self.series.n_nodes,
                    self.series.n_snapshots,
                    q,
                    d,
                )
            except Exception as exc:  # record and keep scanning
                warnings.warn(f"fit failed for cell (q={q}, d={d}): {exc}", stacklevel=2)
                value, fit = float("nan"), None
            self.cache[cell] = (value, fit)
        if self.fits is not None and fit is not None:
            self.fits[cell] = fit
        return value

    def table(self) -> dict[tuple[int, int], float]:
        return {cell: self.cache[cell][0] for cell in sorted(self.visited, key=lambda c: (c[1], c[0]))}


def _argmin_cell(table: dict[tuple[int, int], float]) -> tuple[int, int]:
    best = None
    best_key = None
    for (q, d), value in table.items():
        if math.isnan(value):
            continue
        key = (value, d, q)
        if best_key is None or key < best_key:
            best_key = key
            best = (q, d)
    if best is None:
        raise RuntimeError("every candidate cell failed to fit")
    return best


def grid_select(
    series: SnapshotSeries,
    grid: TuningGrid,
    order: int = 3,
    opts: FitOptions | None = None,
    n_blocks: int | str = "auto",
    align: bool = True,
    sequential: bool = False,
    keep_fits: bool = False,
    cache: dict | None = None,
) -> TuningResult:
    """Exhaustive scan of the grid; the minimal-score cell wins.

    Every cell is fit with a fresh spectral initialization at its own
    ``(q, d)``. Ties break toward smaller ``d``, then smaller ``q``. Cells
    whose fit fails are recorded with a ``nan`` score, excluded from the
    minimum, and reported through a warning.
    """
    opts = opts or FitOptions()
    _validate_grid(grid, series, order)
    ev = _CellEvaluator(series, order, opts, n_blocks, align, sequential, keep_fits, cache)
    for q, d in grid.cells:
        ev(q, d)
    table = ev.table()
    q_best, d_best = _argmin_cell(table)
    return TuningResult(
        q=q_best,
        d=d_best,
        criterion=table,
        n_visited=len(ev.visited),
        fits=ev.fits,
    )


def coordinate_descent_select(
    series: SnapshotSeries,
    grid: TuningGrid,
    order: int = 3,
    opts: FitOptions | None = None,
    n_blocks: int | str = "auto",
    align: bool = True,
    sequential: bool = False,
    keep_fits: bool = False,
    cache: dict | None = None,
) -> TuningResult:
    """Alternating one-dimensional minimization over the grid.

    Starts from the smallest candidate ``d``, minimizes the criterion over
    ``q`` with ``d`` fixed, then over ``d`` with ``q`` fixed, and repeats
    until a full sweep leaves the incumbent unchanged. Cell evaluations are
    cached so no ``(q, d)`` pair is ever fit twice.
    """
    opts = opts or FitOptions()
    _validate_grid(grid, series, order)
    ev = _CellEvaluator(series, order, opts, n_blocks, align, sequential, keep_fits, cache)

    d_cur = grid.d_values[0]
    q_cur = None
    path: list[tuple[int, int]] = []
    n_sweeps = 0
    n_searches = 0
    while True:
        row = {(q, d_cur): ev(q, d_cur) for q in grid.q_values}
        n_searches += 1
        q_best, _ = _argmin_cell(row)
        col = {(q_best, d): ev(q_best, d) for d in grid.d_values}
        n_searches += 1
        _, d_best = _argmin_cell(col)
        n_sweeps += 1
        if (q_best, d_best) == (q_cur, d_cur):
            break
        q_cur, d_cur = q_best, d_best
        path.append((q_cur, d_cur))

    return TuningResult(
        q=q_cur,
        d=d_cur,
        criterion=ev.table(),
        n_visited=len(ev.visited),
        path=path,
        n_sweeps=n_sweeps,
        n_searches=n_searches,
        fits=ev.fits,
    )
