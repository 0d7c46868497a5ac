"""Clamped B-spline bases on a compact interval.

Provides construction of a basis with knots at equally spaced quantiles of
observed snapshot indices, pointwise evaluation, dense design matrices, and
the curvature penalty matrix of integrated second-derivative products.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import BSpline

__all__ = ["SplineBasis", "make_basis"]


@dataclass(frozen=True)
class SplineBasis:
    """A clamped B-spline basis of dimension ``q`` on ``[a, b]``.

    Boundary knots are repeated ``order + 1`` times (a clamped basis), so
    basis functions interpolate at the endpoints. The dimension is
    ``q = len(interior_knots) + order + 1``. At any point of the domain the
    basis values are nonnegative, sum to one, and at most ``order + 1`` of
    them are nonzero.

    Parameters
    ----------
    order : int
        Polynomial order of the spline pieces; cubic splines use 3,
        piecewise-constant splines use 0.
    boundary : (float, float)
        Domain endpoints ``(a, b)`` with ``a < b``.
    interior_knots : tuple of float
        Nondecreasing knots strictly inside ``(a, b)``. May be empty.
    """

    order: int
    boundary: tuple[float, float]
    interior_knots: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.order < 0:
            raise ValueError("spline order must be nonnegative")
        a, b = (float(self.boundary[0]), float(self.boundary[1]))
        if not np.isfinite([a, b]).all() or not a < b:
            raise ValueError("boundary must be a finite pair (a, b) with a < b")
        interior = tuple(float(t) for t in self.interior_knots)
        if any(not np.isfinite(t) for t in interior):
            raise ValueError("interior knots must be finite")
        if any(t2 < t1 for t1, t2 in zip(interior, interior[1:])):
            raise ValueError("interior knots must be nondecreasing")
        if any(not (a < t < b) for t in interior):
            raise ValueError("interior knots must lie strictly inside (a, b)")
        object.__setattr__(self, "boundary", (a, b))
        object.__setattr__(self, "interior_knots", interior)

    @property
    def q(self) -> int:
        """Basis dimension."""
        return len(self.interior_knots) + self.order + 1

    @cached_property
    def knots(self) -> np.ndarray:
        """Full knot vector with ``order + 1`` repeated boundary knots."""
        a, b = self.boundary
        return np.concatenate(
            [
                np.full(self.order + 1, a),
                np.asarray(self.interior_knots, dtype=float),
                np.full(self.order + 1, b),
            ]
        )

    def _check_domain(self, xs: np.ndarray) -> None:
        a, b = self.boundary
        if xs.size and (not np.isfinite(xs).all() or xs.min() < a or xs.max() > b):
            raise ValueError(
                f"evaluation points must lie in the basis domain [{a}, {b}]"
            )

    def evaluate(self, x: float) -> np.ndarray:
        """Evaluate all ``q`` basis functions at a single point.

        Returns a length-``q`` vector of nonnegative values summing to one.
        Raises ``ValueError`` for points outside ``[a, b]``; the basis does
        not extrapolate.
        """
        return self.design_matrix(np.array([float(x)]))[0]

    def design_matrix(self, xs: np.ndarray) -> np.ndarray:
        """Dense design matrix with row ``k`` equal to ``evaluate(xs[k])``.

        Parameters
        ----------
        xs : array_like of shape (m,)
            Evaluation points, all within ``[a, b]``. May be empty.

        Returns
        -------
        ndarray of shape (m, q)
        """
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        if xs.ndim != 1:
            raise ValueError("evaluation points must be one-dimensional")
        if xs.size == 0:
            return np.zeros((0, self.q))
        self._check_domain(xs)
        return BSpline.design_matrix(xs, self.knots, self.order).toarray()

    def second_derivative_matrix(self, xs: np.ndarray) -> np.ndarray:
        """Second derivatives of every basis function at the given points."""
        if self.order < 2:
            raise ValueError("second derivatives require order >= 2")
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        self._check_domain(xs)
        spline = BSpline(self.knots, np.eye(self.q), self.order, extrapolate=False)
        return spline.derivative(2)(xs)

    def penalty_matrix(self) -> np.ndarray:
        """Curvature penalty: entry (i, j) integrates ``B_i'' B_j''`` over [a, b].

        Computed by Gauss-Legendre quadrature on each knot interval, which is
        exact because the integrand is a polynomial of degree at most
        ``2 * (order - 2)`` between knots. The result is symmetric positive
        semidefinite and annihilates coordinates of affine functions.
        """
        if self.order < 2:
            raise ValueError("penalty matrix requires order >= 2")
        breaks = np.unique(self.knots)
        n_nodes = self.order - 1
        nodes, weights = leggauss(n_nodes)
        omega = np.zeros((self.q, self.q))
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            half = 0.5 * (hi - lo)
            mid = 0.5 * (hi + lo)
            pts = mid + half * nodes
            d2 = self.second_derivative_matrix(pts)
            omega += half * (d2.T * weights) @ d2
        return 0.5 * (omega + omega.T)


def make_basis(q: int, indices: np.ndarray, order: int = 3) -> SplineBasis:
    """Build a clamped B-spline basis adapted to observed snapshot indices.

    The domain is ``[min(indices), max(indices)]`` and the ``q - order - 1``
    interior knots sit at equally spaced quantiles of ``indices`` (levels
    ``j / (K + 1)``, linear interpolation between order statistics).

    Parameters
    ----------
    q : int
        Requested basis dimension, at least ``order + 1``.
    indices : array_like
        Nonempty collection of real snapshot indices with at least two
        distinct values.
    order : int, default 3
        Spline order.

    Returns
    -------
    SplineBasis

    Notes
    -----
    Duplicate quantiles arising from heavily tied indices are collapsed,
    which reduces the effective dimension below ``q``; a warning is emitted
    in that case since the returned basis is smaller than requested.
    """
    q = int(q)
    order = int(order)
    if order < 0:
        raise ValueError("spline order must be nonnegative")
    if q < order + 1:
        raise ValueError(f"basis dimension q={q} must be at least order+1={order + 1}")
    indices = np.asarray(indices, dtype=float).ravel()
    if indices.size == 0:
        raise ValueError("indices must be nonempty")
    if not np.isfinite(indices).all():
        raise ValueError("indices must be finite")
    a, b = float(indices.min()), float(indices.max())
    if not a < b:
        raise ValueError("degenerate domain: indices must contain two distinct values")

    n_interior = q - order - 1
    if n_interior > 0:
        levels = np.arange(1, n_interior + 1) / (n_interior + 1)
        knots = np.quantile(indices, levels)
        kept = np.unique(knots)
        kept = kept[(kept > a) & (kept < b)]
        if len(kept) < n_interior:
            warnings.warn(
                f"collapsed {n_interior - len(kept)} duplicate or boundary "
                f"quantile knots; basis dimension reduced from {q} to "
                f"{len(kept) + order + 1}",
                stacklevel=2,
            )
        interior = tuple(kept)
    else:
        interior = ()
    return SplineBasis(order=order, boundary=(a, b), interior_knots=interior)
