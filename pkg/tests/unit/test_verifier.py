import math
import unittest
from unittest.mock import Mock, patch

import numpy as np
import pytest

from absnet_lab import verifier
from absnet_lab.config import VerifierConfig
from absnet_lab.core import CheckReport, Status
from absnet_lab.engines.init_solvers import nnls
from absnet_lab.engines.net_core import StudentNetwork, TeacherNetwork, exact_copy
from absnet_lab.engines.population import population_loss
from absnet_lab.errors import DomainError
from absnet_lab.trainer import Snapshot, TerminalReason, Trajectory
from absnet_lab.verifier import (
    build_suite,
    convergence_check,
    descent_correlation_check,
    g_smoothness_check,
    gradient_check,
    hermite_degree,
    hermite_test_function_value,
    identities_check,
    init_check,
    landscape_teacher,
    lojasiewicz_check,
    low_loss_states,
    neighbor_and_mass_check,
    nnls_brute_force,
    owen_h_grid_check,
    regime_check,
    relu_counterexample_network,
    run_suite,
    sgd_convergence_check,
    slab_correlation_value,
    suite_failed,
    z_threshold,
)

CFG = VerifierConfig(mc_samples=200_000, g_smoothness_pairs=300, states=4)


class TestThresholds(unittest.TestCase):
    """Threshold helper test class."""

    def test_z_threshold_floor(self):
        self.assertEqual(z_threshold(1), 4.0)

    def test_z_threshold_grows_with_family(self):
        self.assertGreater(z_threshold(1_000_000), z_threshold(1000))
        self.assertGreater(z_threshold(1_000_000), 4.0)

    def test_hermite_degree(self):
        self.assertEqual(hermite_degree(math.pi / 2, 1e-3), 40)

    def test_slab_correlation_small_tau(self):
        expected = 0.1**3 / (6.0 * math.sqrt(2.0 * math.pi))
        self.assertAlmostEqual(slab_correlation_value(0.1) / expected, 1.0, delta=0.02)


class TestExactChecks(unittest.TestCase):
    """Deterministic check test class."""

    def test_owen_h_grid(self):
        report = owen_h_grid_check()
        self.assertEqual(report.status, Status.PASS)
        self.assertEqual(report.measured["max_boundary"], 0.0)

    def test_identities(self):
        report = identities_check(CFG, count=5)
        self.assertEqual(report.status, Status.PASS, report.measured)
        self.assertEqual(report.measured["identity_gap"], 0.0)

    def test_gradient_check(self):
        self.assertEqual(gradient_check(CFG, count=3).status, Status.PASS)

    def test_g_smoothness(self):
        report = g_smoothness_check(CFG)
        self.assertEqual(report.status, Status.PASS)
        self.assertLessEqual(report.measured["max_ratio"], 1.0 + math.sqrt(3.0))
        self.assertGreaterEqual(
            report.measured["max_frobenius_ratio"], report.measured["max_ratio"]
        )

    def test_nnls_brute_force(self):
        rng = np.random.default_rng(0)
        factor = rng.standard_normal((4, 4))
        gram, target = factor.T @ factor, rng.standard_normal(4)
        self.assertAlmostEqual(nnls_brute_force(gram, target), nnls(gram, target).objective)

    def test_hermite_value_of_exact_copy(self):
        teacher = TeacherNetwork(np.array([[1.0, 0.0], [0.6, 0.8]]))
        value = hermite_test_function_value(teacher, exact_copy(teacher), 8)
        self.assertAlmostEqual(value, 0.0, places=12)

    def test_relu_counterexample_fits_under_abs(self):
        teacher, student = relu_counterexample_network()
        self.assertEqual((teacher.r, student.m), (3, 3))
        self.assertLess(population_loss(teacher, student), 1e-12)

    def test_lojasiewicz_excludes_high_loss(self):
        teacher = TeacherNetwork(np.array([[1.0, 0.0]]))
        report = lojasiewicz_check(teacher, [StudentNetwork(np.array([[0.0, 1.0]]))], CFG)
        self.assertEqual(report.status, Status.PASS)
        self.assertEqual(report.measured["excluded"], 1.0)

    def test_neighbor_and_mass_on_exact_copy(self):
        teacher = landscape_teacher(CFG)
        report = neighbor_and_mass_check(teacher, [exact_copy(teacher)], CFG)
        self.assertEqual(report.status, Status.PASS)
        self.assertEqual(report.measured["min_count"], 1.0)


class TestDescentStates(unittest.TestCase):
    """Low-loss state sweep test class."""

    def test_default_sweep_size(self):
        cfg = VerifierConfig()
        states = low_loss_states(landscape_teacher(cfg), cfg)
        self.assertEqual(len(states), cfg.states + 1)
        self.assertGreaterEqual(cfg.states, verifier.DESCENT_MIN_STATES)

    def test_default_sweep_evaluates_enough_states(self):
        cfg = VerifierConfig()
        teacher = landscape_teacher(cfg)
        report = descent_correlation_check(
            teacher, low_loss_states(teacher, cfg), cfg, min_states=verifier.DESCENT_MIN_STATES
        )
        self.assertEqual(report.status, Status.PASS, report.measured)
        self.assertGreaterEqual(report.measured["evaluated"], 60.0)

    def test_too_few_states_fail(self):
        teacher = landscape_teacher(CFG)
        report = descent_correlation_check(
            teacher, low_loss_states(teacher, CFG), CFG, min_states=60
        )
        self.assertEqual(report.status, Status.FAIL)
        self.assertEqual(report.details, "fewer than 60 states")


def _trajectory(initial, final, terminal=TerminalReason.TARGET_REACHED, loss=1e-9):
    snapshots = (Snapshot(step=0, loss=1e-6, grad_norm=1e-3), Snapshot(10, loss, 1e-5))
    return Trajectory(snapshots, terminal, eta=0.01, mode="GD", initial=initial, final=final)


def _rotated(student, index, angle):
    neurons = student.neurons.copy()
    x, y = neurons[index]
    cos, sin = math.cos(angle), math.sin(angle)
    neurons[index] = [cos * x - sin * y, sin * x + cos * y]
    return StudentNetwork(neurons)


class TestRegime(unittest.TestCase):
    """Lazy and local regime test class."""

    def _run(self, final_angle):
        def fake_train(teacher, student, cfg):
            if cfg.lazy_scale is not None:
                return _trajectory(student, student)
            return _trajectory(student, _rotated(exact_copy(teacher), 0, final_angle))

        with patch.object(verifier, "train", side_effect=fake_train) as mock_train:
            report = regime_check(CFG)
        local_cfg = mock_train.call_args_list[1].args[2]
        self.assertEqual(local_cfg.align_tolerance, verifier.ALIGNMENT_TOLERANCE)
        return report

    def test_aligned_local_run_passes(self):
        report = self._run(0.0)
        self.assertEqual(report.status, Status.PASS, report.measured)
        self.assertLessEqual(report.measured["final_max_heavy_angle"], 1e-9)

    def test_misaligned_heavy_student_fails(self):
        report = self._run(0.05)
        self.assertEqual(report.status, Status.FAIL)
        self.assertAlmostEqual(report.measured["final_max_heavy_angle"], 0.05, places=9)


class TestConvergence(unittest.TestCase):
    """Deterministic and stochastic convergence test class."""

    def test_gd_runs_converge_and_align(self):
        report = convergence_check(VerifierConfig(convergence_seeds=2), m=3)
        self.assertEqual(report.status, Status.PASS, report.measured)
        self.assertEqual(report.measured["successes"], 2.0)
        self.assertEqual(report.measured["monotonicity_violations"], 0.0)
        self.assertLessEqual(report.measured["max_final_loss"], 1e-8)
        self.assertLessEqual(report.measured["max_initial_loss"], 1e-3)
        self.assertLessEqual(report.measured["max_rate_ratio"], 1.0)

    def test_step_cap_fails(self):
        cfg = VerifierConfig(convergence_seeds=1, convergence_steps=10)
        report = convergence_check(cfg, m=3, scale=0.05)
        self.assertEqual(report.status, Status.FAIL)
        self.assertEqual(report.measured["successes"], 0.0)

    @patch.object(verifier, "max_heavy_angle", return_value=0.01)
    def test_unaligned_final_state_fails(self, _):
        report = convergence_check(VerifierConfig(convergence_seeds=1), m=3)
        self.assertEqual(report.status, Status.FAIL)
        self.assertEqual(report.measured["max_heavy_angle"], 0.01)

    def _sgd(self, reached):
        terminals = [TerminalReason.TARGET_REACHED] * reached
        terminals += [TerminalReason.STEP_CAP] * (10 - reached)
        student = StudentNetwork(np.eye(2))
        runs = [_trajectory(student, student, terminal, 5e-4) for terminal in terminals]
        with patch.object(verifier, "train", side_effect=runs) as mock_train:
            report = sgd_convergence_check(VerifierConfig(sgd_seeds=10))
        train_cfg = mock_train.call_args.args[2]
        self.assertEqual((train_cfg.mode, train_cfg.batch), ("SGD", 4096))
        self.assertEqual(train_cfg.target_loss, 1e-3)
        self.assertEqual(mock_train.call_count, 10)
        return report

    def test_sgd_passes_with_eight_of_ten(self):
        report = self._sgd(8)
        self.assertEqual(report.status, Status.PASS)
        self.assertEqual(report.measured["required"], 8.0)

    def test_sgd_fails_with_seven_of_ten(self):
        self.assertEqual(self._sgd(7).status, Status.FAIL)


@pytest.mark.slow
def test_init_check_at_default_sample_size():
    report = init_check(VerifierConfig())
    assert report.measured["subspace_samples"] == 100_000
    assert report.status == Status.PASS, report.measured


def test_test_function_suite():
    report = verifier.test_function_suite_check(CFG)
    assert report.status == Status.PASS, report.measured
    assert report.measured["contrast_correlation"] == 0.0
    assert report.measured["tau"] == pytest.approx(0.2 * math.pi / 2)


class TestSuites(unittest.TestCase):
    """Suite assembly test class."""

    def test_unknown_suite(self):
        with pytest.raises(DomainError):
            build_suite("everything", CFG)

    def test_all_concatenates_suites(self):
        names = [check.name for check in build_suite("all", CFG)]
        self.assertEqual(len(names), len(set(names)))
        expected = sum(len(build_suite(name, CFG)) for name in verifier.SUITES)
        self.assertEqual(len(names), expected)
        self.assertIn("owen_h_grid", names)
        self.assertIn("gradient_unbiasedness", names)

    @patch.object(verifier, "build_suite")
    def test_run_suite_runs_every_check(self, mock_build_suite):
        checks = [Mock(), Mock()]
        mock_build_suite.return_value = checks
        reports = run_suite("kernels", CFG)
        self.assertEqual(reports, [check.run.return_value for check in checks])

    def test_suite_failed(self):
        passed = CheckReport(name="a", status=Status.PASS)
        inconclusive = CheckReport(name="b", status=Status.INCONCLUSIVE)
        failed = CheckReport(name="c", status=Status.FAIL)
        self.assertFalse(suite_failed([passed, inconclusive]))
        self.assertTrue(suite_failed([passed, failed]))
        self.assertFalse(suite_failed([]))
