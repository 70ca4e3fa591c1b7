"""Tests for the kernel ridge solver, prediction, LOO and grid search."""

from __future__ import annotations

import numpy as np
import pytest

from distreg.distributions import Gaussian1D
from distreg.kernels import ThetaParams, WassersteinSpec, cross_gram, gram_matrix
from distreg.ridge import (
    GridSpec,
    fit,
    grid_search,
    loo_predict,
    paper_grid,
    predict,
    predict_many,
    rmse,
    solve_regularized,
)


def _random_gauss1d(rng, n):
    return [
        Gaussian1D(float(m), float(s))
        for m, s in zip(rng.uniform(-2, 2, n), rng.uniform(0.05, 1.5, n))
    ]


def _gauss_jordan_inverse(A):
    """Row-reduction matrix inverse, independent of any numpy solver."""
    n = A.shape[0]
    work = np.hstack([A.astype(float).copy(), np.eye(n)])
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(work[col:, col])))
        work[[col, pivot]] = work[[pivot, col]]
        work[col] = work[col] / work[col, col]
        for row in range(n):
            if row != col:
                work[row] = work[row] - work[row, col] * work[col]
    return work[:, n:]


class TestFit:
    def test_single_point_closed_form(self):
        g = Gaussian1D(0.5, 0.2)
        model = fit(WassersteinSpec(), [g], [2.0], 1.0)
        np.testing.assert_allclose(model.alpha, [1.0], atol=1e-12)

    def test_zero_labels_zero_coefficients(self):
        rng = np.random.default_rng(0)
        xs = _random_gauss1d(rng, 6)
        model = fit(WassersteinSpec(), xs, np.zeros(6), 0.3)
        np.testing.assert_allclose(model.alpha, np.zeros(6), atol=1e-14)

    def test_matches_explicit_inverse_oracle(self):
        rng = np.random.default_rng(1)
        xs = _random_gauss1d(rng, 5)
        y = rng.uniform(-1, 1, 5)
        lam = 0.7
        spec = WassersteinSpec(ThetaParams(l=2.0))
        model = fit(spec, xs, y, lam)
        C = gram_matrix(spec, xs)
        oracle = _gauss_jordan_inverse(C + lam * np.eye(5)) @ y
        np.testing.assert_allclose(model.alpha, oracle, atol=1e-9)

    def test_length_mismatch_rejected(self):
        rng = np.random.default_rng(2)
        with pytest.raises(ValueError, match="labels"):
            fit(WassersteinSpec(), _random_gauss1d(rng, 3), [1.0, 2.0], 1.0)

    def test_nonpositive_lambda_rejected(self):
        rng = np.random.default_rng(3)
        with pytest.raises(ValueError, match="lam"):
            fit(WassersteinSpec(), _random_gauss1d(rng, 2), [1.0, 2.0], 0.0)


class TestSolver:
    def test_residual_contract_randomized(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            n = int(rng.integers(5, 201))
            xs = _random_gauss1d(rng, n)
            C = gram_matrix(WassersteinSpec(ThetaParams(l=float(rng.uniform(0.5, 10)))), xs)
            y = rng.uniform(-3, 3, n)
            lam = float(rng.uniform(0.005, 30))
            x = solve_regularized(C, y, lam)
            residual = np.max(np.abs((C + lam * np.eye(n)) @ x - y))
            assert residual <= 1e-10 * (1 + np.max(np.abs(y)))

    def test_interpolation_limit(self):
        # distinct inputs and a short length scale keep the Gram well
        # conditioned, so a vanishing ridge reproduces the labels
        rng = np.random.default_rng(5)
        ms = np.linspace(-2, 2, 10)
        xs = [Gaussian1D(float(m), 0.3) for m in ms]
        y = rng.uniform(-1, 1, 10)
        spec = WassersteinSpec(ThetaParams(l=0.5))
        model = fit(spec, xs, y, 1e-10)
        np.testing.assert_allclose(predict_many(model, xs), y, atol=1e-4)

    def test_shrinkage_monotone_in_lambda(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            xs = _random_gauss1d(rng, 15)
            y = rng.uniform(-2, 2, 15)
            lams = np.sort(rng.uniform(0.01, 20, 4))
            spec = WassersteinSpec(ThetaParams(l=1.0))
            norms = [np.linalg.norm(fit(spec, xs, y, lam).alpha) for lam in lams]
            for small, large in zip(norms[:-1], norms[1:]):
                assert small >= large


class TestPredict:
    def test_self_prediction_of_unit_model(self):
        g = Gaussian1D(0.1, 0.4)
        model = fit(WassersteinSpec(), [g], [2.0], 1.0)
        # alpha = 1 and k(g, g) = 1
        assert predict(model, g) == pytest.approx(1.0, abs=1e-12)

    def test_zero_coefficients_predict_zero(self):
        rng = np.random.default_rng(7)
        xs = _random_gauss1d(rng, 4)
        model = fit(WassersteinSpec(), xs, np.zeros(4), 2.0)
        assert predict(model, Gaussian1D(0, 1)) == pytest.approx(0.0, abs=1e-13)

    def test_matches_hand_rolled_dot_product(self):
        rng = np.random.default_rng(8)
        xs = _random_gauss1d(rng, 3)
        y = rng.uniform(-1, 1, 3)
        spec = WassersteinSpec(ThetaParams(l=1.2))
        model = fit(spec, xs, y, 0.5)
        x = Gaussian1D(0.3, 0.6)
        row = cross_gram(spec, [x], xs)[0]
        by_hand = sum(float(a) * float(k) for a, k in zip(model.alpha, row))
        assert predict(model, x) == pytest.approx(by_hand, rel=1e-15)

    def test_predict_many_matches_predict(self):
        rng = np.random.default_rng(9)
        xs = _random_gauss1d(rng, 5)
        test = _random_gauss1d(rng, 4)
        model = fit(WassersteinSpec(), xs, rng.uniform(-1, 1, 5), 1.0)
        batch = predict_many(model, test)
        singles = [predict(model, x) for x in test]
        np.testing.assert_allclose(batch, singles, rtol=1e-15)


class TestRmse:
    def test_identical(self):
        assert rmse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_constant_offset(self):
        assert rmse([1.0, 2.0], [1.5, 2.5]) == pytest.approx(0.5)

    def test_hand_value(self):
        assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(np.sqrt(12.5))
        assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(3.535534, abs=1e-6)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            rmse([1.0], [1.0, 2.0])


class TestLoo:
    def test_two_identical_points_closed_form(self):
        g = Gaussian1D(0.5, 0.2)
        a, lam, gamma = 3.0, 0.7, 1.0
        preds = loo_predict(WassersteinSpec(), [g, g], [a, a], lam)
        expected = a * gamma**2 / (gamma**2 + lam)
        np.testing.assert_allclose(preds, [expected, expected], rtol=1e-12)

    def test_zero_labels(self):
        rng = np.random.default_rng(10)
        xs = _random_gauss1d(rng, 4)
        np.testing.assert_allclose(
            loo_predict(WassersteinSpec(), xs, np.zeros(4), 1.0), np.zeros(4), atol=1e-14
        )

    def test_equals_refit_oracle_exactly(self):
        rng = np.random.default_rng(11)
        xs = _random_gauss1d(rng, 5)
        y = rng.uniform(-1, 1, 5)
        lam = 0.4
        spec = WassersteinSpec(ThetaParams(l=0.8))
        preds = loo_predict(spec, xs, y, lam)
        for i in range(5):
            rest = xs[:i] + xs[i + 1 :]
            y_rest = np.concatenate([y[:i], y[i + 1 :]])
            oracle = predict(fit(spec, rest, y_rest, lam), xs[i])
            assert preds[i] == oracle

    def test_needs_two_points(self):
        with pytest.raises(ValueError, match="two"):
            loo_predict(WassersteinSpec(), [Gaussian1D(0, 1)], [1.0], 1.0)


class TestGridSearch:
    def _problem(self, seed=12, n_train=25, n_valid=20):
        rng = np.random.default_rng(seed)
        train = _random_gauss1d(rng, n_train)
        valid = _random_gauss1d(rng, n_valid)
        f = lambda g: g.m / (0.05 + g.sigma)
        return train, np.array([f(g) for g in train]), valid, np.array([f(g) for g in valid])

    def test_single_cell(self):
        train, y_train, valid, y_valid = self._problem()
        grid = GridSpec(lambdas=(0.5,), ls=(2.0,), gammas=(1.0,))
        result = grid_search(grid, "wasserstein", train, y_train, valid, y_valid)
        assert result.lam == 0.5
        assert result.spec.params.l == 2.0
        assert len(result.cells) == 1

    def test_best_cell_minimizes_over_rescan(self):
        train, y_train, valid, y_valid = self._problem()
        grid = GridSpec(lambdas=(0.01, 0.5, 5.0), ls=(0.5, 2.0, 10.0))
        result = grid_search(grid, "wasserstein", train, y_train, valid, y_valid)
        assert all(result.rmse <= cell.rmse for cell in result.cells)

    def test_matches_exhaustive_loop_oracle(self):
        train, y_train, valid, y_valid = self._problem(seed=13)
        grid = GridSpec(lambdas=(0.05, 0.8, 6.0), ls=(0.2, 1.5, 9.0))
        result = grid_search(grid, "wasserstein", train, y_train, valid, y_valid)
        best = None
        for lam in grid.lambdas:
            for l in grid.ls:
                for gamma in grid.gammas:
                    spec = WassersteinSpec(ThetaParams(gamma=gamma, l=l))
                    model = fit(spec, train, y_train, lam)
                    score = rmse(predict_many(model, valid), y_valid)
                    if best is None or score < best[0]:
                        best = (score, lam, spec)
        assert result.rmse == best[0]
        assert result.lam == best[1]
        assert result.spec == best[2]

    def test_cells_cover_whole_grid_in_canonical_order(self):
        train, y_train, valid, y_valid = self._problem(seed=14, n_train=10, n_valid=8)
        grid = GridSpec(lambdas=(0.1, 1.0), ls=(0.5, 2.0), gammas=(1.0, 2.0))
        result = grid_search(grid, "wasserstein", train, y_train, valid, y_valid)
        assert len(result.cells) == 8
        seen = [(c.lam, c.spec.params.l, c.spec.params.gamma) for c in result.cells]
        expected = [
            (lam, l, g) for lam in grid.lambdas for l in grid.ls for g in grid.gammas
        ]
        assert seen == expected

    def test_threads_do_not_change_results(self):
        train, y_train, valid, y_valid = self._problem(seed=15)
        grid = GridSpec(lambdas=(0.05, 0.8), ls=(0.2, 1.5, 9.0))
        one = grid_search(grid, "wasserstein", train, y_train, valid, y_valid, threads=1)
        many = grid_search(grid, "wasserstein", train, y_train, valid, y_valid, threads=8)
        assert one.spec == many.spec and one.lam == many.lam
        assert [c.rmse for c in one.cells] == [c.rmse for c in many.cells]

    def test_histogram_and_legendre_families(self):
        train, y_train, valid, y_valid = self._problem(seed=16, n_train=15, n_valid=10)
        grid = GridSpec(lambdas=(0.1, 1.0), ls=(1.0,), zetas=(0.1, 1.0), orders=(3,))
        hist = grid_search(grid, "histogram", train, y_train, valid, y_valid)
        assert len(hist.cells) == 4
        leg = grid_search(grid, "legendre", train, y_train, valid, y_valid)
        assert len(leg.cells) == 2
        assert leg.spec.params.order == 3

    def test_unknown_family_rejected(self):
        train, y_train, valid, y_valid = self._problem(seed=17, n_train=4, n_valid=4)
        grid = GridSpec(lambdas=(1.0,), ls=(1.0,))
        with pytest.raises(ValueError, match="family"):
            grid_search(grid, "rbf", train, y_train, valid, y_valid)


class TestGridSpec:
    def test_paper_grid_shape(self):
        grid = paper_grid()
        assert len(grid.lambdas) == 30
        assert len(grid.ls) == 25
        assert grid.lambdas[0] == pytest.approx(0.005)
        assert grid.lambdas[-1] == pytest.approx(30.0)
        assert grid.ls[0] == pytest.approx(0.005)
        assert grid.ls[-1] == pytest.approx(20.0)
        assert grid.gammas == (1.0,)
        # geometric spacing: constant successive ratios
        ratios = np.diff(np.log(np.array(grid.lambdas)))
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-9)

    def test_validation(self):
        with pytest.raises(ValueError, match="nonempty"):
            GridSpec(lambdas=(), ls=(1.0,))
        with pytest.raises(ValueError, match="positive"):
            GridSpec(lambdas=(-1.0,), ls=(1.0,))
        with pytest.raises(ValueError, match="zetas"):
            GridSpec(lambdas=(1.0,), ls=(1.0,), zetas=(2.0,))
