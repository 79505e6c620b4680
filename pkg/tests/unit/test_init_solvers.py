import unittest

import numpy as np
import pytest
from parameterized import parameterized
from scipy import optimize

from absnet_lab.engines.empirical import sample_dataset
from absnet_lab.engines.init_solvers import (
    fit_norms,
    moment_matrix,
    nnls,
    norm_fitting_problem,
    principal_angle,
    random_init,
    streamed_moment_matrix,
    subspace_init,
    top_eigenvectors,
)
from absnet_lab.engines.net_core import StudentNetwork, TeacherNetwork, random_teacher
from absnet_lab.engines.population import population_loss, population_moment_matrix
from absnet_lab.errors import DomainError, NotPSDError

TEACHER = TeacherNetwork(np.array([[1.0, 0.0, 0.0], [0.5, 1.5, 0.0]]))


class TestNNLS(unittest.TestCase):
    """Nonnegative least squares test class."""

    def test_identity(self):
        result = nnls(np.eye(2), [1.0, -1.0])
        np.testing.assert_allclose(result.z, [1.0, 0.0])
        self.assertEqual(result.active_set, (0,))
        self.assertAlmostEqual(result.objective, -0.5)

    @parameterized.expand([(0,), (1,), (2,), (3,)])
    def test_matches_scipy(self, seed):
        rng = np.random.default_rng(seed)
        design, labels = rng.standard_normal((12, 5)), rng.standard_normal(12)
        expected, _ = optimize.nnls(design, labels)
        result = nnls(design.T @ design, design.T @ labels)
        np.testing.assert_allclose(result.z, expected, atol=1e-8)
        self.assertLessEqual(result.kkt_violation(design.T @ design, design.T @ labels), 1e-8)

    def test_not_psd(self):
        with pytest.raises(NotPSDError):
            nnls(np.array([[1.0, 0.0], [0.0, -1.0]]), [1.0, 1.0])

    def test_not_symmetric(self):
        with pytest.raises(NotPSDError):
            nnls(np.array([[1.0, 1.0], [0.0, 1.0]]), [1.0, 1.0])

    def test_not_square(self):
        with pytest.raises(DomainError):
            nnls(np.ones((2, 3)), [1.0, 1.0])

    def test_all_negative_target(self):
        result = nnls(np.eye(3), [-1.0, -2.0, -0.5])
        np.testing.assert_array_equal(result.z, 0.0)
        self.assertEqual(result.active_set, ())


class TestNormFitting(unittest.TestCase):
    """Norm fitting test class."""

    def test_teacher_directions_recover_teacher(self):
        student, result = fit_norms(TEACHER, TEACHER.directions)
        np.testing.assert_allclose(result.z, TEACHER.norms, atol=1e-8)
        self.assertLess(population_loss(TEACHER, student), 1e-12)

    def test_fit_never_beats_zero_loss_bound(self):
        student = random_init(TEACHER, 8, seed=1)
        self.assertEqual(student.m, 8)
        zero = StudentNetwork(np.zeros((1, 3)))
        self.assertLess(population_loss(TEACHER, student), population_loss(TEACHER, zero))

    def test_sampled_gram_is_close_to_exact(self):
        directions = np.random.default_rng(2).standard_normal((4, 3))
        exact_gram, exact_target = norm_fitting_problem(TEACHER, directions)
        gram, target = norm_fitting_problem(TEACHER, directions, "sampled", 200_000, seed=3)
        np.testing.assert_allclose(gram, exact_gram, rtol=0.05, atol=0.05)
        np.testing.assert_allclose(target, exact_target, rtol=0.05, atol=0.05)

    def test_unknown_gram_mode(self):
        with pytest.raises(DomainError):
            norm_fitting_problem(TEACHER, np.eye(3), "other")

    def test_needs_neurons(self):
        with pytest.raises(DomainError):
            random_init(TEACHER, 0, seed=0)


class TestSubspace(unittest.TestCase):
    """Subspace initialization test class."""

    def test_top_eigenvectors_by_magnitude(self):
        basis = top_eigenvectors(np.diag([3.0, -5.0, 1.0]), 2)
        np.testing.assert_allclose(basis, [[0.0, 1.0], [1.0, 0.0], [0.0, 0.0]])

    def test_top_eigenvectors_rank_check(self):
        with pytest.raises(DomainError):
            top_eigenvectors(np.eye(2), 3)

    def test_moment_matrix_is_close_to_population(self):
        moments = moment_matrix(sample_dataset(TEACHER, 200_000, seed=4))
        self.assertEqual(moments.N, 200_000)
        np.testing.assert_allclose(moments.M_hat, moments.M_hat.T)
        np.testing.assert_allclose(moments.M_hat, population_moment_matrix(TEACHER), atol=0.1)

    def test_streamed_moment_matrix(self):
        single = streamed_moment_matrix(TEACHER, 100_000, seed=7)
        threaded = streamed_moment_matrix(TEACHER, 100_000, seed=7, threads=3)
        np.testing.assert_allclose(single.M_hat, threaded.M_hat, rtol=0.0, atol=1e-12)
        np.testing.assert_allclose(single.M_hat, population_moment_matrix(TEACHER), atol=0.1)

    def test_population_moments_span_teacher(self):
        basis = top_eigenvectors(population_moment_matrix(TEACHER), 2)
        self.assertLess(principal_angle(basis, TEACHER), 1e-8)

    def test_subspace_init_stays_in_teacher_span(self):
        student = subspace_init(
            TEACHER, 6, 2, n=10, seed=5, moments=population_moment_matrix(TEACHER)
        )
        self.assertEqual(student.m, 6)
        np.testing.assert_allclose(student.neurons[:, 2], 0.0, atol=1e-10)

    def test_sampled_subspace_is_close(self):
        student = subspace_init(TEACHER, 6, 2, n=100_000, seed=6)
        self.assertLess(np.abs(student.neurons[:, 2]).max(), 0.2 * np.abs(student.neurons).max())

    def test_centered_moment_matrix_is_close_to_population(self):
        moments = moment_matrix(sample_dataset(TEACHER, 200_000, seed=4), centered=True)
        np.testing.assert_allclose(moments.M_hat, moments.M_hat.T)
        np.testing.assert_allclose(moments.M_hat, population_moment_matrix(TEACHER), atol=0.1)

    def test_centering_reduces_the_error(self):
        population = population_moment_matrix(TEACHER)
        plain, centered = [], []
        for seed in range(7):
            data = sample_dataset(TEACHER, 20_000, seed=seed)
            plain.append(np.linalg.norm(moment_matrix(data).M_hat - population, 2))
            centered.append(
                np.linalg.norm(moment_matrix(data, centered=True).M_hat - population, 2)
            )
        self.assertLess(np.median(centered), np.median(plain))

    def test_streamed_centered_matches_population(self):
        moments = streamed_moment_matrix(TEACHER, 100_000, seed=7, centered=True)
        np.testing.assert_allclose(moments.M_hat, population_moment_matrix(TEACHER), atol=0.1)

    @parameterized.expand([(False,), (True,)])
    def test_single_sample(self, centered):
        streamed = streamed_moment_matrix(TEACHER, 1, seed=8, centered=centered)
        direct = moment_matrix(sample_dataset(TEACHER, 1, seed=8), centered=centered)
        self.assertEqual(streamed.N, 1)
        np.testing.assert_allclose(streamed.M_hat, direct.M_hat)

    @parameterized.expand([(False,), (True,)])
    def test_subspace_init_from_one_sample(self, centered):
        student = subspace_init(TEACHER, 4, 2, n=1, seed=0, centered=centered)
        self.assertEqual(student.m, 4)


@pytest.mark.slow
def test_subspace_init_beats_random_init():
    wins = 0
    for seed in range(10):
        teacher = random_teacher(10, 2, 0.5, 1.0, 1.0, seed=seed)
        subspace = subspace_init(teacher, 100, 2, n=100_000, seed=seed)
        baseline = random_init(teacher, 100, seed=seed)
        wins += population_loss(teacher, subspace) < population_loss(teacher, baseline)
    assert wins >= 8


@pytest.mark.slow
def test_random_init_improves_with_width():
    def median_loss(m):
        losses = [population_loss(TEACHER, random_init(TEACHER, m, seed)) for seed in range(20)]
        return np.median(losses)

    assert median_loss(40) <= median_loss(10)


@pytest.mark.slow
def test_moment_error_decays_as_inverse_square_root():
    population = population_moment_matrix(TEACHER)
    sizes = np.array([1_000, 10_000, 100_000, 1_000_000])
    errors = [
        np.median(
            [
                np.linalg.norm(streamed_moment_matrix(TEACHER, n, seed).M_hat - population, 2)
                for seed in range(5)
            ]
        )
        for n in sizes
    ]
    slope = np.polyfit(np.log10(sizes), np.log10(errors), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.15)
