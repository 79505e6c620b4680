import unittest

import numpy as np
import pytest

from absnet_lab.config import TrainConfig
from absnet_lab.engines.net_core import (
    StudentNetwork,
    TeacherNetwork,
    exact_copy,
    perturbed_teacher,
)
from absnet_lab.engines.population import population_loss
from absnet_lab.errors import DomainError
from absnet_lab.trainer import (
    TerminalReason,
    direction_changes,
    gd_step,
    lazy_objective,
    resolve_eta,
    save_trajectory_csv,
    sgd_step,
    train,
)

TEACHER = TeacherNetwork(np.array([[1.0, 0.0], [0.0, 1.5]]))


class TestSteps(unittest.TestCase):
    """Single step test class."""

    def test_auto_eta(self):
        cfg = TrainConfig(eta_constant=0.03)
        self.assertAlmostEqual(resolve_eta(TEACHER, cfg), 0.03 / (2 * 1.5))

    def test_explicit_eta_wins(self):
        self.assertEqual(resolve_eta(TEACHER, TrainConfig(eta=0.2)), 0.2)

    def test_gd_step_keeps_exact_copy(self):
        student = exact_copy(TEACHER)
        np.testing.assert_allclose(gd_step(TEACHER, student, 0.1).neurons, student.neurons)

    def test_gd_step_decreases_loss(self):
        student = perturbed_teacher(TEACHER, 4, 0.2, seed=0)
        after = gd_step(TEACHER, student, 0.01)
        self.assertLess(population_loss(TEACHER, after), population_loss(TEACHER, student))

    def test_non_positive_eta(self):
        with pytest.raises(DomainError):
            gd_step(TEACHER, exact_copy(TEACHER), 0.0)

    def test_sgd_step_is_seeded(self):
        student = perturbed_teacher(TEACHER, 4, 0.2, seed=1)
        first = sgd_step(TEACHER, student, 0.01, 500, seed=[3, 0])
        second = sgd_step(TEACHER, student, 0.01, 500, seed=[3, 0])
        np.testing.assert_array_equal(first.neurons, second.neurons)


class TestTrain(unittest.TestCase):
    """Training loop test class."""

    def test_reaches_target_from_perturbed_teacher(self):
        student = perturbed_teacher(TEACHER, 2, 0.05, seed=2)
        cfg = TrainConfig(eta=0.05, eta_rule="fixed", target_loss=1e-8, max_steps=20_000)
        trajectory = train(TEACHER, student, cfg)
        self.assertEqual(trajectory.terminal, TerminalReason.TARGET_REACHED)
        self.assertLessEqual(trajectory.final_loss, 1e-8)
        self.assertEqual(trajectory.monotonicity_violations(), 0)

    def test_target_at_start(self):
        trajectory = train(TEACHER, exact_copy(TEACHER), TrainConfig(target_loss=1e-10))
        self.assertEqual(trajectory.terminal, TerminalReason.TARGET_REACHED)
        self.assertEqual(len(trajectory.snapshots), 1)
        self.assertEqual(trajectory.snapshots[0].step, 0)

    def test_alignment_keeps_training_past_the_loss_target(self):
        student = perturbed_teacher(TEACHER, 4, 0.02, seed=5)
        loose = TrainConfig(target_loss=1.0, max_steps=5)
        self.assertEqual(train(TEACHER, student, loose).terminal, TerminalReason.TARGET_REACHED)
        strict = TrainConfig(target_loss=1.0, max_steps=5, align_tolerance=1e-6)
        trajectory = train(TEACHER, student, strict)
        self.assertEqual(trajectory.terminal, TerminalReason.STEP_CAP)
        self.assertEqual(trajectory.snapshots[-1].step, 5)

    def test_aligned_copy_stops_at_once(self):
        cfg = TrainConfig(target_loss=1e-10, align_tolerance=1e-3)
        trajectory = train(TEACHER, exact_copy(TEACHER), cfg)
        self.assertEqual(trajectory.terminal, TerminalReason.TARGET_REACHED)
        self.assertEqual(len(trajectory.snapshots), 1)

    def test_step_cap(self):
        student = perturbed_teacher(TEACHER, 4, 0.3, seed=3)
        trajectory = train(TEACHER, student, TrainConfig(max_steps=3, target_loss=0.0))
        self.assertEqual(trajectory.terminal, TerminalReason.STEP_CAP)
        np.testing.assert_array_equal(trajectory.steps, [0.0, 3.0])
        self.assertIsNone(trajectory.snapshots[0].neurons)

    def test_records_neurons(self):
        student = perturbed_teacher(TEACHER, 4, 0.3, seed=4)
        cfg = TrainConfig(max_steps=5, target_loss=0.0, record_every=2)
        trajectory = train(TEACHER, student, cfg)
        np.testing.assert_array_equal(trajectory.steps, [0.0, 2.0, 4.0, 5.0])
        np.testing.assert_array_equal(trajectory.snapshots[0].neurons, student.neurons)
        np.testing.assert_array_equal(trajectory.snapshots[-1].neurons, trajectory.final.neurons)

    def test_divergence_is_terminal(self):
        student = perturbed_teacher(TEACHER, 4, 0.3, seed=5)
        cfg = TrainConfig(eta=100.0, eta_rule="fixed", max_steps=100, target_loss=0.0)
        trajectory = train(TEACHER, student, cfg)
        self.assertEqual(trajectory.terminal, TerminalReason.DIVERGENCE)

    def test_sgd_is_reproducible(self):
        student = perturbed_teacher(TEACHER, 4, 0.2, seed=6)
        cfg = TrainConfig(mode="sgd", batch=256, max_steps=5, target_loss=0.0, seed=7)
        first, second = train(TEACHER, student, cfg), train(TEACHER, student, cfg)
        self.assertEqual(first.mode, "SGD")
        np.testing.assert_array_equal(first.final.neurons, second.final.neurons)

    def test_lazy_needs_gd(self):
        cfg = TrainConfig(mode="SGD", lazy_scale=10.0, max_steps=1)
        with pytest.raises(DomainError):
            train(TEACHER, exact_copy(TEACHER), cfg)

    def test_lazy_objective_at_reference(self):
        reference = StudentNetwork(np.random.default_rng(8).standard_normal((5, 2)))
        loss, _ = lazy_objective(TEACHER, reference, 10.0)(reference)
        empty = StudentNetwork(np.zeros((1, 2)))
        expected = population_loss(TEACHER, empty) / 100.0
        self.assertAlmostEqual(loss / expected, 1.0, places=8)


class TestTrajectory(unittest.TestCase):
    """Trajectory helper test class."""

    def test_direction_changes_of_resting_run(self):
        trajectory = train(TEACHER, exact_copy(TEACHER), TrainConfig(target_loss=1e-10))
        changes = direction_changes(trajectory)
        np.testing.assert_array_equal(changes.net, 0.0)
        np.testing.assert_array_equal(changes.path, 0.0)

    def test_path_is_at_least_net(self):
        student = perturbed_teacher(TEACHER, 4, 0.3, seed=9)
        cfg = TrainConfig(
            eta=0.05, eta_rule="fixed", max_steps=50, target_loss=0.0, record_every=5
        )
        changes = direction_changes(train(TEACHER, student, cfg))
        self.assertTrue(np.all(changes.path >= changes.net - 1e-12))


def test_save_trajectory_csv(tmp_path):
    student = perturbed_teacher(TEACHER, 3, 0.3, seed=10)
    trajectory = train(TEACHER, student, TrainConfig(max_steps=4, target_loss=0.0, record_every=2))
    path = tmp_path / "trajectory.csv"
    save_trajectory_csv(trajectory, str(path))
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header == "step,loss,grad_norm,neuron,w_0,w_1"
    table = np.loadtxt(path, delimiter=",", skiprows=1)
    assert table.shape == (3 * 3, 6)
    np.testing.assert_array_equal(table[-3:, 4:], trajectory.final.neurons)


def test_save_trajectory_csv_without_neurons(tmp_path):
    student = perturbed_teacher(TEACHER, 3, 0.3, seed=11)
    trajectory = train(TEACHER, student, TrainConfig(max_steps=2, target_loss=0.0))
    path = tmp_path / "trajectory.csv"
    save_trajectory_csv(trajectory, str(path))
    assert path.read_text(encoding="utf-8").splitlines()[0] == "step,loss,grad_norm"
