import numpy as np
import pytest

from availcases.eigen import symmetric_eigen
from availcases.errors import ConvergenceError, DataError, NegativeEigenvalueError
from availcases.frame import NumericFrame
from availcases.pca import fit_pca_ac, fit_pca_cc, pca_from_matrix
from availcases.regression import Method


def random_symmetric(rng, n):
    a = rng.normal(size=(n, n))
    return a + a.T


class TestSymmetricEigen:
    def test_identity(self):
        vals, vecs = symmetric_eigen(np.eye(3))
        np.testing.assert_array_equal(vals, [1, 1, 1])
        np.testing.assert_array_equal(vecs, np.eye(3))

    def test_diagonal(self):
        vals, vecs = symmetric_eigen(np.diag([1.0, 4.0]))
        np.testing.assert_array_equal(vals, [4, 1])
        np.testing.assert_array_equal(np.abs(vecs), [[0, 1], [1, 0]])

    @pytest.mark.parametrize("n", [2, 5, 12])
    def test_reconstruction(self, n):
        m = random_symmetric(np.random.default_rng(n), n)
        vals, vecs = symmetric_eigen(m)
        assert np.max(np.abs(vecs @ np.diag(vals) @ vecs.T - m)) < 1e-8 * np.max(np.abs(m))
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(n), atol=1e-10)
        assert np.all(np.diff(vals) <= 0)
        np.testing.assert_allclose(vals, np.linalg.eigvalsh(m)[::-1], atol=1e-10)

    def test_trace_preserved(self):
        m = random_symmetric(np.random.default_rng(3), 8)
        assert symmetric_eigen(m)[0].sum() == pytest.approx(np.trace(m), rel=1e-8)

    def test_sign_convention(self):
        vecs = symmetric_eigen(random_symmetric(np.random.default_rng(4), 6))[1]
        for col in vecs.T:
            assert col[np.argmax(np.abs(col))] >= 0

    def test_not_symmetric(self):
        with pytest.raises(DataError, match="not symmetric"):
            symmetric_eigen([[1.0, 2.0], [0.0, 1.0]])

    def test_sweep_cap(self):
        with pytest.raises(ConvergenceError, match="did not converge"):
            symmetric_eigen(random_symmetric(np.random.default_rng(5), 4), max_sweeps=1)


def random_frame(rng, n=120, p=4, rate=0.0):
    x = rng.normal(size=(n, p)) @ rng.normal(size=(p, p)) + 10
    return NumericFrame(x, rng.random((n, p)) >= rate)


class TestPca:
    def test_intact_ac_equals_cc(self):
        f = random_frame(np.random.default_rng(0))
        ac, cc = fit_pca_ac(f), fit_pca_cc(f)
        np.testing.assert_allclose(ac.sdev, cc.sdev, rtol=1e-10)
        np.testing.assert_allclose(ac.rotation, cc.rotation, atol=1e-10)
        assert ac.method is Method.AC and cc.method is Method.CC

    def test_fit_invariants(self):
        f = random_frame(np.random.default_rng(1), rate=0.1)
        fit = fit_pca_ac(f)
        assert np.all(np.diff(fit.sdev) <= 0) and np.all(fit.sdev >= 0)
        np.testing.assert_allclose(fit.rotation.T @ fit.rotation, np.eye(4), atol=1e-10)
        recon = fit.rotation @ np.diag(fit.sdev ** 2) @ fit.rotation.T
        assert np.max(np.abs(recon - fit.matrix)) < 1e-8 * np.max(np.abs(fit.matrix))

    def test_scaled_trace(self):
        f = random_frame(np.random.default_rng(2), p=5)
        fit = fit_pca_ac(f, scale=True)
        assert np.sum(fit.sdev ** 2) == pytest.approx(5, abs=1e-8)
        np.testing.assert_allclose(
            fit.sdev ** 2, np.linalg.eigvalsh(np.corrcoef(f.values, rowvar=False))[::-1], atol=1e-10)

    def test_cc_with_missing_row_matches_filtered_oracle(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(30, 3))
        pres = np.ones_like(x, bool)
        pres[7, 2] = False
        fit = fit_pca_cc(NumericFrame(x, pres))
        keep = np.delete(x, 7, axis=0)
        c = np.cov(keep, rowvar=False)
        w, v = np.linalg.eigh(c)
        np.testing.assert_allclose(fit.sdev, np.sqrt(w[::-1]), rtol=1e-10)
        recon = fit.rotation @ np.diag(fit.sdev ** 2) @ fit.rotation.T
        np.testing.assert_allclose(recon, c, atol=1e-10)

    def test_single_column(self):
        x = np.array([1.0, 4.0, 2.0, 8.0])
        fit = fit_pca_cc(NumericFrame(x))
        assert fit.sdev[0] == pytest.approx(np.std(x, ddof=1))

    def test_cc_too_few_rows(self):
        f = NumericFrame(np.ones((3, 3)) + np.eye(3), [[1, 1, 0], [1, 1, 1], [1, 1, 1]])
        with pytest.raises(DataError, match="complete rows"):
            fit_pca_cc(f)

    def test_negative_eigenvalue(self, adversarial):
        for scale in (False, True):
            with pytest.raises(NegativeEigenvalueError, match="at least one negative eigenvalue"):
                fit_pca_ac(adversarial, scale=scale)

    def test_tiny_negative_clamped(self):
        m = np.diag([2.0, 1.0, -1e-14])
        fit = pca_from_matrix(m, scaled=False, method=Method.AC, col_names=("a", "b", "c"))
        assert fit.sdev[-1] == 0.0
        assert fit.diagnostics["clamped_negative_eigenvalues"] == 1
