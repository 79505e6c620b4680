import unittest
from unittest.mock import patch

import numpy as np
import pytest

from absnet_lab.engines import empirical
from absnet_lab.engines.empirical import (
    empirical_gradient,
    empirical_loss,
    gradient_deviation_scan,
    iter_batches,
    load_dataset_csv,
    sample_dataset,
    sampled_loss_and_gradient,
    save_dataset_csv,
)
from absnet_lab.engines.net_core import StudentNetwork, TeacherNetwork, exact_copy
from absnet_lab.errors import DomainError

TEACHER = TeacherNetwork(np.array([[1.0, 0.0], [0.5, 1.0]]))
STUDENT = StudentNetwork(np.array([[0.9, 0.2], [0.1, 1.1], [-0.3, 0.4]]))


class TestDataset(unittest.TestCase):
    """Dataset test class."""

    def test_labels_come_from_teacher(self):
        data = sample_dataset(TEACHER, 100, seed=0)
        self.assertEqual((data.n, data.d), (100, 2))
        np.testing.assert_allclose(data.labels, TEACHER.output(data.inputs))

    def test_seeded(self):
        first = sample_dataset(TEACHER, 50, seed=[1, 2])
        second = sample_dataset(TEACHER, 50, seed=[1, 2])
        np.testing.assert_array_equal(first.inputs, second.inputs)

    def test_batches_stream_the_same_samples(self):
        data = sample_dataset(TEACHER, 25, seed=3, chunk_size=10)
        streamed = np.vstack([chunk.inputs for chunk in iter_batches(TEACHER, 25, 3, 10)])
        np.testing.assert_array_equal(data.inputs, streamed)

    def test_empty_dataset(self):
        with pytest.raises(DomainError):
            sample_dataset(TEACHER, 0, seed=0)


class TestEmpiricalLoss(unittest.TestCase):
    """Empirical loss and gradient test class."""

    def test_exact_copy(self):
        data = sample_dataset(TEACHER, 200, seed=4)
        self.assertLess(empirical_loss(exact_copy(TEACHER), data), 1e-20)

    def test_loss_by_hand(self):
        data = sample_dataset(TEACHER, 30, seed=5)
        expected = 0.5 * np.mean((STUDENT.output(data.inputs) - data.labels) ** 2)
        self.assertAlmostEqual(empirical_loss(STUDENT, data), expected, places=12)

    def test_gradient_matches_finite_differences(self):
        data = sample_dataset(TEACHER, 50, seed=6)
        gradient = empirical_gradient(STUDENT, data)
        step = 1e-6
        numeric = np.zeros_like(gradient)
        for j in range(STUDENT.m):
            for k in range(STUDENT.d):
                shift = np.zeros_like(STUDENT.neurons)
                shift[j, k] = step
                plus = empirical_loss(StudentNetwork(STUDENT.neurons + shift), data)
                minus = empirical_loss(StudentNetwork(STUDENT.neurons - shift), data)
                numeric[j, k] = (plus - minus) / (2 * step)
        np.testing.assert_allclose(gradient, numeric, rtol=1e-5, atol=1e-8)

    def test_dimension_mismatch(self):
        data = sample_dataset(TEACHER, 10, seed=0)
        with pytest.raises(DomainError):
            empirical_loss(StudentNetwork(np.ones((1, 3))), data)

    def test_sampled_matches_materialized(self):
        data = sample_dataset(TEACHER, 40, seed=7)
        loss, gradient = sampled_loss_and_gradient(TEACHER, STUDENT, 40, seed=7)
        self.assertAlmostEqual(loss, empirical_loss(STUDENT, data), places=12)
        np.testing.assert_allclose(gradient, empirical_gradient(STUDENT, data))

    @patch.object(empirical, "STREAM_THRESHOLD", 10)
    def test_streaming_matches_materialized(self):
        data = sample_dataset(TEACHER, 100, seed=8, chunk_size=16)
        loss, gradient = sampled_loss_and_gradient(TEACHER, STUDENT, 100, 8, chunk_size=16)
        self.assertAlmostEqual(loss, empirical_loss(STUDENT, data), places=12)
        np.testing.assert_allclose(gradient, empirical_gradient(STUDENT, data), atol=1e-12)


class TestDeviationScan(unittest.TestCase):
    """Gradient concentration test class."""

    def test_slope_is_near_minus_one_half(self):
        scan = gradient_deviation_scan(TEACHER, STUDENT, [100, 1000, 10_000], repeats=5)
        self.assertEqual(len(scan.medians), 3)
        self.assertGreater(scan.medians[0], scan.medians[-1])
        self.assertTrue(-0.8 <= scan.slope <= -0.2)


def test_dataset_csv(tmp_path):
    data = sample_dataset(TEACHER, 20, seed=9)
    path = str(tmp_path / "data.csv")
    save_dataset_csv(data, path)
    loaded = load_dataset_csv(path)
    np.testing.assert_array_equal(loaded.inputs, data.inputs)
    np.testing.assert_array_equal(loaded.labels, data.labels)


def test_dataset_csv_bad_header(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_dataset_csv(str(path))
