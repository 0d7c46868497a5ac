import numpy as np
import pytest
from numpy.testing import assert_allclose

from fase import SplineBasis, make_basis


def manual_quantile(values, level):
    # linear interpolation between order statistics (type-7)
    values = np.sort(values)
    h = (len(values) - 1) * level
    lo = int(np.floor(h))
    if lo == len(values) - 1:
        return values[-1]
    return values[lo] + (h - lo) * (values[lo + 1] - values[lo])


class TestMakeBasis:
    def test_no_interior_knots(self):
        basis = make_basis(4, np.linspace(0, 1, 25), order=3)
        assert basis.q == 4
        assert basis.interior_knots == ()
        assert basis.boundary == (0.0, 1.0)

    def test_quantile_knots_match_order_statistics(self):
        indices = np.arange(1, 81) / 80.0
        basis = make_basis(10, indices, order=3)
        expected = [manual_quantile(indices, j / 7.0) for j in range(1, 7)]
        assert_allclose(basis.interior_knots, expected, rtol=0, atol=1e-15)

    def test_dimension_too_small(self):
        with pytest.raises(ValueError, match="at least order"):
            make_basis(3, np.linspace(0, 1, 10), order=3)

    def test_degenerate_domain(self):
        with pytest.raises(ValueError, match="degenerate"):
            make_basis(4, np.ones(10), order=3)

    def test_tied_indices_collapse_duplicates(self):
        indices = np.r_[np.zeros(40), np.ones(40)]
        with pytest.warns(UserWarning, match="collapsed"):
            basis = make_basis(10, indices, order=3)
        assert basis.q < 10

    def test_invalid_interior_knot_placement(self):
        with pytest.raises(ValueError, match="strictly inside"):
            SplineBasis(order=3, boundary=(0.0, 1.0), interior_knots=(1.5,))


class TestEvaluate:
    def test_order_zero_indicator(self):
        q = 5
        interior = tuple(np.linspace(0, 1, q + 1)[1:-1])
        basis = SplineBasis(order=0, boundary=(0.0, 1.0), interior_knots=interior)
        vals = basis.evaluate(0.1)
        expected = np.zeros(q)
        expected[0] = 1.0  # 0.1 lies in the first of five equal cells
        assert_allclose(vals, expected)

    def test_partition_of_unity(self, rng):
        basis = make_basis(9, np.linspace(0, 1, 30), order=3)
        xs = rng.uniform(0, 1, size=1000)
        sums = basis.design_matrix(xs).sum(axis=1)
        assert np.abs(sums - 1.0).max() < 1e-12

    def test_local_support(self, rng):
        basis = make_basis(12, np.linspace(0, 1, 50), order=3)
        xs = rng.uniform(0, 1, size=500)
        nonzero = (basis.design_matrix(xs) != 0).sum(axis=1)
        assert nonzero.max() <= basis.order + 1

    def test_endpoint_interpolation(self):
        basis = make_basis(4, np.linspace(0, 1, 10), order=3)
        assert_allclose(basis.evaluate(0.0), [1, 0, 0, 0], atol=1e-15)
        assert_allclose(basis.evaluate(1.0), [0, 0, 0, 1], atol=1e-15)

    def test_out_of_domain(self):
        basis = make_basis(4, np.linspace(0, 1, 10), order=3)
        with pytest.raises(ValueError, match="domain"):
            basis.evaluate(1.2)
        with pytest.raises(ValueError, match="domain"):
            basis.evaluate(-0.001)

    def test_nonnegative(self, rng):
        basis = make_basis(8, np.linspace(0, 1, 30), order=3)
        xs = rng.uniform(0, 1, size=200)
        assert basis.design_matrix(xs).min() >= 0.0


class TestDesignMatrix:
    def test_single_row_matches_evaluate(self):
        basis = make_basis(7, np.linspace(0, 1, 20), order=3)
        x = 0.4321
        assert_allclose(basis.design_matrix([x])[0], basis.evaluate(x))

    def test_gram_well_conditioned_on_uniform_grid(self):
        indices = np.linspace(0, 1, 60)
        basis = make_basis(10, indices, order=3)
        design = basis.design_matrix(indices)
        gram = design.T @ design
        assert np.isfinite(np.linalg.cond(gram))
        assert (np.abs(design) > 0).any(axis=0).all()

    def test_empty_input(self):
        basis = make_basis(6, np.linspace(0, 1, 12), order=3)
        out = basis.design_matrix(np.array([]))
        assert out.shape == (0, 6)


class TestPenaltyMatrix:
    def test_constants_in_null_space(self):
        basis = make_basis(9, np.linspace(0, 1, 40), order=3)
        omega = basis.penalty_matrix()
        assert np.abs(omega @ np.ones(basis.q)).max() < 1e-10

    def test_affine_in_null_space(self):
        # least-squares projection of f(x)=x onto the basis as an oracle
        basis = make_basis(8, np.linspace(0, 1, 40), order=3)
        grid = np.linspace(0, 1, 2000)
        design = basis.design_matrix(grid)
        w, *_ = np.linalg.lstsq(design, grid, rcond=None)
        omega = basis.penalty_matrix()
        assert w @ omega @ w < 1e-8

    def test_positive_semidefinite(self, rng):
        basis = make_basis(10, np.linspace(0, 1, 40), order=3)
        omega = basis.penalty_matrix()
        assert_allclose(omega, omega.T, atol=1e-14)
        for _ in range(50):
            w = rng.normal(size=basis.q)
            assert w @ omega @ w >= -1e-10

    def test_matches_trapezoid_oracle(self):
        basis = make_basis(9, np.linspace(0, 1, 40), order=3)
        omega = basis.penalty_matrix()
        grid = np.linspace(0, 1, 200_001)
        d2 = basis.second_derivative_matrix(grid)
        oracle = np.empty_like(omega)
        for i in range(basis.q):
            for j in range(basis.q):
                oracle[i, j] = np.trapezoid(d2[:, i] * d2[:, j], grid)
        scale = np.abs(oracle).max()
        assert np.abs(omega - oracle).max() / scale < 1e-6

    def test_low_order_rejected(self):
        basis = SplineBasis(order=1, boundary=(0.0, 1.0), interior_knots=(0.5,))
        with pytest.raises(ValueError, match="order"):
            basis.penalty_matrix()

    def test_order_two_supported(self):
        basis = SplineBasis(order=2, boundary=(0.0, 1.0), interior_knots=(0.3, 0.7))
        omega = basis.penalty_matrix()
        assert np.abs(omega @ np.ones(basis.q)).max() < 1e-10
