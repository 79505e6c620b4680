"""Numerical checks of the landscape, kernel and initialization properties.

Every check returns a ``CheckReport`` whose status is a pure function of the
values it records in ``measured`` and of the thresholds in ``VerifierConfig``.
Fitted constants are frozen in the config; a check fails only when a measured
constant exceeds ``regression_factor`` times its frozen value.
"""

import itertools
import math
from logging import getLogger
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from .config import TrainConfig, VerifierConfig
from .core import Check, CheckReport, Status, verdict
from .engines.empirical import (
    gradient_deviation_scan,
    sample_dataset,
    sampled_loss_and_gradient,
)
from .engines.gauss_kernels import (
    abs_pair_expectation,
    abs_pair_gradient,
    hermite_abs_coeffs,
    hermite_series,
    hermite_value,
    owen_h,
    sign_cov_bilinear,
    sign_cov_block,
    signed_angle,
    slab_probability,
    slab_test_value,
)
from .engines.init_solvers import (
    moment_matrix,
    nnls,
    principal_angle,
    random_init,
    subspace_init,
    top_eigenvectors,
)
from .engines.mc_oracle import estimate, estimate_vector
from .engines.net_core import (
    Matrix,
    StudentNetwork,
    TeacherNetwork,
    Vector,
    angle_up_to_sign,
    delta_max,
    exact_copy,
    max_heavy_angle,
    optimal_linear_beta,
    partition_students,
    perturbed_teacher,
    random_teacher,
    relu_linear_residual,
    relu_output,
    separation,
    warmup_network,
)
from .engines.population import (
    build_M,
    descent_direction,
    gradient_inner,
    neuron_jacobian_apply,
    population_gradient,
    population_loss,
    residual_stats,
)
from .errors import CoverageError, DomainError
from .trainer import TerminalReason, Trajectory, direction_changes, train

logger = getLogger(__name__)

SUITES = ("kernels", "landscape", "claims", "init", "sampling")
# Family-wise false alarm rate of the Monte Carlo comparisons inside one check.
FAMILY_LEVEL = 1e-3
MIN_Z = 4.0
WARMUP_DELTAS = (0.2, 0.1, 0.05, 0.025)
SMOOTHNESS_RADII = (1e-3, 1e-2, 1e-1, 1.0)
HERMITE_DEGREE = 40
HERMITE_L2_TOLERANCE = 0.03
HERMITE_MC_DEGREE = 6
IDENTITY_TOLERANCE = 1e-8
FD_STEP = 1e-5
FD_TOLERANCE = 1e-5
G_SMOOTHNESS = 1.0 + math.sqrt(3.0)
OWEN_GRID = tuple(0.02 * k for k in range(1, 11))
OWEN_SLACK = 1e-9
AVERAGE_CLOSENESS_SLOPE = 3.0 / 8.0 - 0.05
CONCENTRATION_SLOPE = -0.5
CONCENTRATION_TOLERANCE = 0.1
LAZY_DIRECTION_CHANGE = 0.1
ALIGNMENT_TOLERANCE = 1e-3
DESCENT_MIN_STATES = 60
# Low-loss states are perturbed teachers over this geometric range of scales.
STATE_SCALES = (1e-4, 5e-3)
# Perturbation of the low-loss runs: copies start well inside ALIGNMENT_TOLERANCE.
ACCEPTANCE_SCALE = 3e-4
ACCEPTANCE_M = 20
CONVERGENCE_TARGET = 1e-8
INITIAL_LOSS_CEILING = 1e-3
CONVERGENCE_RECORD_EVERY = 100
SGD_BATCH = 4096
SGD_TARGET = 1e-3
SGD_START_SCALE = 0.1
SGD_SUCCESS_FRACTION = 0.8
RELU_MIN_ANGLE = math.radians(59.0)
RELU_ABS_LOSS = 0.1
NEIGHBOR_FLOOR = 1e-9
TEST_FUNCTION_C1 = 0.2


def z_threshold(comparisons: int, level: float = FAMILY_LEVEL) -> float:
    """Two-sided Bonferroni z threshold for a family of comparisons, at least 4."""
    return max(MIN_Z, float(norm.isf(level / (2.0 * max(comparisons, 1)))))


def _loss_and_gradient(teacher: TeacherNetwork, student: StudentNetwork) -> Tuple[float, Matrix]:
    return population_loss(teacher, student), population_gradient(teacher, student)


# ---------------------------------------------------------------------------
# State families


def landscape_teacher(cfg: VerifierConfig) -> TeacherNetwork:
    """Teacher of the landscape suite: d = 2, r = 3, separation 0.5, norms in [1, 2]."""
    return random_teacher(2, 3, 0.5, 1.0, 2.0, seed=cfg.seed)


def low_loss_states(teacher: TeacherNetwork, cfg: VerifierConfig) -> List[StudentNetwork]:
    """The exact copy, then cfg.states perturbed teachers over a geometric sweep of scales."""
    states = [exact_copy(teacher)]
    for index, scale in enumerate(np.geomspace(*STATE_SCALES, cfg.states)):
        states.append(perturbed_teacher(teacher, 2 * teacher.r, float(scale), cfg.seed + index))
    return states


def warmup_states(
    deltas: Sequence[float] = WARMUP_DELTAS[:3],
) -> List[Tuple[TeacherNetwork, StudentNetwork]]:
    """Warm-up teacher and student pairs for the given angles."""
    return [warmup_network(delta) for delta in deltas]


def _below(
    teacher: TeacherNetwork, states: Sequence[StudentNetwork], threshold: float
) -> List[Tuple[StudentNetwork, float, Matrix]]:
    kept = []
    for student in states:
        loss, gradient = _loss_and_gradient(teacher, student)
        if loss <= threshold:
            kept.append((student, loss, gradient))
    return kept


# ---------------------------------------------------------------------------
# Landscape checks


def lojasiewicz_check(
    teacher: TeacherNetwork,
    states: Sequence[StudentNetwork],
    cfg: VerifierConfig,
    name: str = "lojasiewicz",
) -> CheckReport:
    """min ||grad L||_F / L over low-loss states against the configured floor.

    States with zero loss are skipped.
    """
    kept = _below(teacher, states, cfg.low_loss)
    ratios = [float(np.linalg.norm(grad)) / loss for _, loss, grad in kept if loss > 0.0]
    skipped = len(kept) - len(ratios)
    measured = {
        "states": float(len(kept)),
        "skipped": float(skipped),
        "excluded": float(len(states) - len(kept)),
        "kappa_floor": cfg.kappa_floor,
    }
    if not ratios:
        return CheckReport(name, Status.PASS, measured, "no state with positive loss")
    measured["min_ratio"] = min(ratios)
    return CheckReport(name, verdict(min(ratios) >= cfg.kappa_floor), measured)


def descent_correlation_check(
    teacher: TeacherNetwork,
    states: Sequence[StudentNetwork],
    cfg: VerifierConfig,
    name: str = "descent_correlation",
    min_states: int = 0,
) -> CheckReport:
    """<grad L, g> >= L on every low-loss state; uncovered teachers make it inconclusive.

    Fewer than ``min_states`` states with a computed inner product fail the check.
    """
    kept = _below(teacher, states, cfg.low_loss)
    violations, uncovered, ratios = 0, 0, []
    for student, loss, gradient in kept:
        if loss == 0.0:
            continue
        partition = partition_students(teacher, student)
        try:
            direction = descent_direction(
                teacher, student, partition, loss, cfg.delta_max_constant
            )
        except CoverageError:
            uncovered += 1
            continue
        inner = gradient_inner(gradient, direction)
        ratios.append(inner / loss)
        if inner < loss:
            violations += 1
    measured = {
        "states": float(len(kept)),
        "evaluated": float(len(ratios)),
        "violations": float(violations),
        "uncovered": float(uncovered),
    }
    if ratios:
        measured["min_ratio"] = min(ratios)
    if violations:
        return CheckReport(name, Status.FAIL, measured)
    if len(ratios) < min_states:
        return CheckReport(name, Status.FAIL, measured, f"fewer than {min_states} states")
    if uncovered:
        return CheckReport(name, Status.INCONCLUSIVE, measured, "delta_max excludes a teacher")
    return CheckReport(name, Status.PASS, measured)


def smoothness_check(
    teacher: TeacherNetwork,
    states: Sequence[StudentNetwork],
    cfg: VerifierConfig,
    radii: Sequence[float] = SMOOTHNESS_RADII,
) -> CheckReport:
    """Fit C in L(W+U) - L(W) - <grad L, U> <= C (sqrt(L) |U|^1.5 + |U|^2 + |U|^4)."""
    rng = np.random.default_rng([cfg.seed, 3])
    fitted = 0.0
    for student in states:
        loss, gradient = _loss_and_gradient(teacher, student)
        direction = rng.standard_normal(student.neurons.shape)
        direction /= np.linalg.norm(direction)
        for radius in radii:
            step = radius * direction
            moved = population_loss(teacher, StudentNetwork(student.neurons + step))
            excess = moved - loss - gradient_inner(gradient, step)
            scale = math.sqrt(loss) * radius**1.5 + radius**2 + radius**4
            fitted = max(fitted, excess / scale)
    limit = cfg.regression_factor * cfg.smoothness_constant
    measured = {"fitted_constant": fitted, "limit": limit, "states": float(len(states))}
    return CheckReport("smoothness", verdict(fitted <= limit), measured)


def lipschitz_check(
    teacher: TeacherNetwork, states: Sequence[StudentNetwork], cfg: VerifierConfig
) -> CheckReport:
    """||grad L||_F^2 <= 8 L sum ||w_j||^2 exactly, and ||grad L||^2 / (r^3 w_max^3) bounded.

    States with L above r^2 w_max^2 are excluded. The normalized mass
    sum ||w_j||^2 / (r w_max) is reported as ``sum_norm``.
    """
    w_max = separation(teacher).w_max
    r = teacher.r
    ratio, mass, violations, used = 0.0, 0.0, 0, 0
    for student in states:
        loss, gradient = _loss_and_gradient(teacher, student)
        if loss > (r * w_max) ** 2:
            continue
        used += 1
        grad_sq = float(np.sum(gradient**2))
        total_mass = float(np.sum(student.norms**2))
        if grad_sq > 8.0 * loss * total_mass * (1.0 + 1e-9) + 1e-300:
            violations += 1
        ratio = max(ratio, grad_sq / (r * w_max) ** 3)
        mass = max(mass, total_mass / (r * w_max))
    limit = cfg.regression_factor * cfg.lipschitz_constant
    measured = {
        "states": float(used),
        "violations": float(violations),
        "max_ratio": ratio,
        "sum_norm": mass,
        "limit": limit,
    }
    return CheckReport("lipschitz", verdict(violations == 0 and ratio <= limit), measured)


def neighbor_and_mass_check(
    teacher: TeacherNetwork,
    states: Sequence[StudentNetwork],
    cfg: VerifierConfig,
    name: str = "neighbor_and_mass",
) -> CheckReport:
    """Every teacher has a student within delta_max(L) carrying mass >= ||w_i*|| / 2."""
    kept = _below(teacher, states, cfg.low_loss)
    min_count, min_mass, failures = math.inf, math.inf, 0
    for student, loss, _ in kept:
        radius = NEIGHBOR_FLOOR
        if loss > 0.0:
            radius = max(delta_max(loss, teacher, cfg.delta_max_constant), NEIGHBOR_FLOOR)
        partition = partition_students(teacher, student)
        norms_sq = student.norms**2
        for i in range(teacher.r):
            members = partition.members_within(i, radius)
            mass = float(norms_sq[members].sum()) / teacher.norms[i]
            min_count = min(min_count, float(members.size))
            min_mass = min(min_mass, mass)
            if members.size < 1 or mass < 0.5:
                failures += 1
    measured = {"states": float(len(kept)), "failures": float(failures)}
    if kept:
        measured.update(min_count=min_count, min_mass_ratio=min_mass)
    return CheckReport(name, verdict(failures == 0), measured)


def r2_and_weighted_angle_check(
    teacher: TeacherNetwork,
    states: Sequence[StudentNetwork],
    cfg: VerifierConfig,
    name: str = "r2_and_weighted_angle",
) -> CheckReport:
    """Fit ||R2||^2 / L^(3/4) and sum ||w_j||^2 delta_j^2 / L^(1/2) across low-loss states."""
    kept = _below(teacher, states, cfg.low_loss)
    r2_fit, angle_fit, used = 0.0, 0.0, 0
    for student, loss, _ in kept:
        if loss == 0.0:
            continue
        used += 1
        partition = partition_students(teacher, student)
        stats = residual_stats(teacher, student, partition)
        weighted = float(np.sum(student.norms**2 * partition.angles**2))
        r2_fit = max(r2_fit, stats.r2_norm_sq / loss**0.75)
        angle_fit = max(angle_fit, weighted / math.sqrt(loss))
    r2_limit = cfg.regression_factor * cfg.r2_constant
    angle_limit = cfg.regression_factor * cfg.weighted_angle_constant
    measured = {
        "states": float(used),
        "r2_constant": r2_fit,
        "weighted_angle_constant": angle_fit,
        "r2_limit": r2_limit,
        "weighted_angle_limit": angle_limit,
    }
    return CheckReport(name, verdict(r2_fit <= r2_limit and angle_fit <= angle_limit), measured)


def slab_correlation_value(tau: float) -> float:
    """E[(|x_1| - g(tau))^2 ; |x_1| <= tau] for x_1 ~ N(0, 1)."""
    mass = slab_probability(tau).exact
    second = mass - 2.0 * tau * math.exp(-(tau**2) / 2.0) / math.sqrt(2.0 * math.pi)
    return second - slab_test_value(tau) ** 2 * mass


def test_function_correlation(
    teacher: TeacherNetwork,
    student: StudentNetwork,
    tau: float,
    index: int,
    n: int,
    seed: int,
) -> Tuple[float, float]:
    """MC estimate of <|w*^T x| - ||w*|| g(tau), f* - f> on the slab of teacher ``index``.

    Returns the estimate and its standard error, both divided by ||w*||^2.
    """
    neuron = teacher.neurons[index]
    weight = float(np.linalg.norm(neuron))
    level = slab_test_value(tau)

    def integrand(inputs: Matrix) -> Vector:
        projection = np.abs(inputs @ neuron) / weight
        inside = projection <= tau
        residual = teacher.output(inputs) - student.output(inputs)
        return np.where(inside, weight * (projection - level) * residual, 0.0)

    result = estimate(integrand, teacher.d, n, seed)
    return result.mean / weight**2, result.std_err / weight**2


def test_function_check(
    teacher: TeacherNetwork,
    student: StudentNetwork,
    cfg: VerifierConfig,
    tau: Optional[float] = None,
    index: int = 0,
) -> CheckReport:
    """Slab test function correlation for a teacher no student is close to.

    With delta the angle from teacher ``index`` to its nearest student, tau
    defaults to c1 w_min delta / (r w_max).
    """
    nonzero = np.flatnonzero(student.norms > 0.0)
    nearest = min(
        (angle_up_to_sign(student.neurons[j], teacher.neurons[index]) for j in nonzero),
        default=math.pi / 2,
    )
    _, w_min, w_max = separation(teacher)
    if tau is None:
        tau = TEST_FUNCTION_C1 * w_min * nearest / (teacher.r * w_max)
    value, std_err = test_function_correlation(
        teacher, student, tau, index, cfg.mc_samples, cfg.seed
    )
    floor = cfg.test_function_constant / cfg.regression_factor
    measured = {
        "tau": tau,
        "nearest_angle": nearest,
        "correlation": value,
        "std_err": std_err,
        "fitted_constant": value / tau**3 if tau > 0.0 else 0.0,
        "floor": floor,
        "g_tau": slab_test_value(tau),
    }
    passed = tau > 0.0 and value / tau**3 >= floor
    return CheckReport("test_function", verdict(passed), measured)


def test_function_suite_check(cfg: VerifierConfig) -> CheckReport:
    """Orthogonal-student construction, its closed form, g(0.1) and the matching contrast."""
    teacher = TeacherNetwork(np.array([[1.0, 0.0]]))
    orthogonal = StudentNetwork(np.array([[0.0, 1.0]]))
    report = test_function_check(teacher, orthogonal, cfg)
    tau = report.measured["tau"]
    exact = slab_correlation_value(tau)
    std_err = max(report.measured["std_err"], 1e-300)
    deviation = abs(report.measured["correlation"] - exact) / std_err
    contrast, _ = test_function_correlation(
        teacher, exact_copy(teacher), tau, 0, cfg.mc_samples, cfg.seed
    )
    g_gap = abs(slab_test_value(0.1) - 0.05)
    report.measured.update(
        exact_correlation=exact,
        deviation=deviation,
        contrast_correlation=contrast,
        g_gap=g_gap,
    )
    passed = (
        report.passed and deviation <= z_threshold(1) and contrast == 0.0 and g_gap <= 1e-3
    )
    report.status = verdict(passed)
    return report


def hermite_test_function_value(
    teacher: TeacherNetwork, student: StudentNetwork, degree: int
) -> float:
    """<h, f - f*> in closed form for h(x) = sqrt(pi/2) - sum_k h_l(w_bar_k*^T x) / sigma_l.

    Only sigma_0 and the cosine powers rho^l enter, since E[h_l(a^T x) |b^T x|]
    = sigma_l rho^l for unit a, b.
    """
    sigma_0 = float(hermite_abs_coeffs(0).coeffs[0])
    directions = teacher.directions

    def pairing(units: Matrix) -> Vector:
        norms = np.linalg.norm(units, axis=1)
        bars = np.divide(units, norms[:, None], out=np.zeros_like(units), where=norms[:, None] > 0)
        powers = (bars @ directions.T) ** degree
        return norms * (math.sqrt(math.pi / 2) * sigma_0 - powers.sum(axis=1))

    return math.fsum(pairing(student.effective())) - math.fsum(pairing(teacher.neurons))


def hermite_degree(delta: float, eps: float) -> int:
    """l = 2 max(ceil(log(1/eps) / log(1/cos(delta/2))), 1)."""
    return 2 * max(math.ceil(math.log(1.0 / eps) / -math.log(math.cos(delta / 2.0))), 1)


def hermite_test_function_check(
    teacher: TeacherNetwork,
    student: StudentNetwork,
    eps: float,
    cfg: VerifierConfig,
    name: str = "hermite_test_function",
) -> CheckReport:
    """Closed-form <h, R> against 1/4 sum ||w_j||^2 sin^2 delta_j - (r-1) eps sum ||w_j||^2.

    The closed form is cross-checked by Monte Carlo at degree min(l, 6).
    """
    delta = separation(teacher).delta
    degree = hermite_degree(delta, eps)
    value = hermite_test_function_value(teacher, student, degree)
    partition = partition_students(teacher, student)
    masses = student.norms**2
    bound = 0.25 * float(np.sum(masses * np.sin(partition.angles) ** 2)) - (
        teacher.r - 1
    ) * eps * float(masses.sum())
    mc_degree = min(degree, HERMITE_MC_DEGREE)
    sigma = hermite_abs_coeffs(mc_degree).coeffs
    directions = teacher.directions

    def integrand(inputs: Matrix) -> Vector:
        projections = inputs @ directions.T
        harmonics = hermite_value(mc_degree, projections).sum(axis=1)
        test = math.sqrt(math.pi / 2) - harmonics / sigma[-1]
        return test * (student.output(inputs) - teacher.output(inputs))

    mc = estimate(integrand, teacher.d, cfg.mc_samples, cfg.seed, threads=cfg.threads)
    analytic = hermite_test_function_value(teacher, student, mc_degree)
    deviation = mc.deviation(analytic)
    measured = {
        "degree": float(degree),
        "value": value,
        "bound": bound,
        "mc_degree": float(mc_degree),
        "mc_value": mc.mean,
        "mc_analytic": analytic,
        "deviation": deviation,
    }
    passed = value >= bound - 1e-12 and deviation <= z_threshold(1)
    return CheckReport(name, verdict(passed), measured)


def average_closeness_check(
    teacher: TeacherNetwork, trajectory: Trajectory, name: str = "average_closeness"
) -> CheckReport:
    """Slope of log max_i ||v_i|| against log L over the final decade of the loss."""
    points = []
    for snapshot in trajectory.snapshots:
        if snapshot.neurons is None or snapshot.loss <= 0.0:
            continue
        student = StudentNetwork(snapshot.neurons)
        stats = residual_stats(teacher, student, partition_students(teacher, student))
        points.append((snapshot.loss, float(np.linalg.norm(stats.gaps, axis=1).max())))
    if not points:
        return CheckReport(name, Status.INCONCLUSIVE, {}, "no recorded state with positive loss")
    final_loss = points[-1][0]
    window = [(loss, gap) for loss, gap in points if loss <= 10.0 * final_loss]
    measured = {"points": float(len(window)), "final_loss": final_loss}
    if all(gap == 0.0 for _, gap in window):
        return CheckReport(name, Status.PASS, measured, "degenerate: v = 0")
    window = [(loss, gap) for loss, gap in window if gap > 0.0]
    if len(window) < 2 or len({loss for loss, _ in window}) < 2:
        return CheckReport(name, Status.INCONCLUSIVE, measured, "fewer than two points")
    losses, gaps = zip(*window)
    slope = float(np.polyfit(np.log(losses), np.log(gaps), 1)[0])
    measured["slope"] = slope
    return CheckReport(name, verdict(slope >= AVERAGE_CLOSENESS_SLOPE), measured)


def convergence_rate_check(
    trajectory: Trajectory, name: str = "convergence_rate"
) -> CheckReport:
    """sup_t t L(W_t) <= 8 / (eta kappa^2) with kappa the run's smallest ||grad L|| / L."""
    positive = [s for s in trajectory.snapshots if s.loss > 0.0]
    violations = trajectory.monotonicity_violations() if trajectory.mode == "GD" else 0
    measured = {"monotonicity_violations": float(violations), "eta": trajectory.eta}
    if not positive:
        return CheckReport(name, verdict(violations == 0), measured, "zero loss throughout")
    kappa = min(s.grad_norm / s.loss for s in positive)
    sup_rate = max(s.step * s.loss for s in positive)
    bound = 8.0 / (trajectory.eta * kappa**2) if kappa > 0.0 else math.inf
    measured.update(kappa_hat=kappa, sup_t_loss=sup_rate, bound=bound)
    return CheckReport(name, verdict(violations == 0 and sup_rate <= bound), measured)


def trajectory_fixture(teacher: TeacherNetwork, cfg: VerifierConfig) -> Trajectory:
    """GD from an over-parameterized perturbed teacher, recorded every 10 steps."""
    student = perturbed_teacher(teacher, 2 * teacher.r, 0.03, cfg.seed)
    train_cfg = TrainConfig(
        max_steps=cfg.regime_steps, target_loss=1e-10, record_every=10, seed=cfg.seed
    )
    return train(teacher, student, train_cfg)


def acceptance_teacher(seed: int) -> TeacherNetwork:
    """Teacher of the convergence runs: d = 2, r = 3, separation 0.5, unit norms."""
    return random_teacher(2, 3, 0.5, 1.0, 1.0, seed=seed)


def _acceptance_train_config(cfg: VerifierConfig) -> TrainConfig:
    return TrainConfig(
        target_loss=CONVERGENCE_TARGET,
        max_steps=cfg.convergence_steps,
        record_every=CONVERGENCE_RECORD_EVERY,
        align_tolerance=ALIGNMENT_TOLERANCE,
    )


def convergence_check(
    cfg: VerifierConfig,
    m: int = ACCEPTANCE_M,
    scale: float = ACCEPTANCE_SCALE,
    name: str = "convergence",
) -> CheckReport:
    """GD at eta = 0.01 / (r w_max) from a low-loss perturbed teacher, over several seeds.

    Every run must start at L <= 1e-3 and decrease monotonically. It must stop at
    L <= 1e-8 with every heavy student within 1e-3 rad of a teacher, inside the
    step cap and with sup_t t L bounded. ||grad L|| / L stays above the floor
    on every recorded state with L <= low_loss.
    """
    train_cfg = _acceptance_train_config(cfg)
    successes, violations = 0, 0
    initial_max, final_max, angle_max, steps_max, rate_max = 0.0, 0.0, 0.0, 0.0, 0.0
    ratio_min = math.inf
    for index in range(cfg.convergence_seeds):
        seed = cfg.seed + index
        teacher = acceptance_teacher(seed)
        trajectory = train(teacher, perturbed_teacher(teacher, m, scale, seed), train_cfg)
        rate = convergence_rate_check(trajectory)
        angle = max_heavy_angle(teacher, trajectory.final)
        initial = trajectory.snapshots[0].loss
        ratios = [
            s.grad_norm / s.loss for s in trajectory.snapshots if 0.0 < s.loss <= cfg.low_loss
        ]
        ratio_min = min([ratio_min, *ratios])
        violations += trajectory.monotonicity_violations()
        initial_max = max(initial_max, initial)
        final_max = max(final_max, trajectory.final_loss)
        angle_max = max(angle_max, angle)
        steps_max = max(steps_max, float(trajectory.snapshots[-1].step))
        if "bound" in rate.measured:
            rate_max = max(rate_max, rate.measured["sup_t_loss"] / rate.measured["bound"])
        succeeded = (
            trajectory.terminal == TerminalReason.TARGET_REACHED
            and angle <= ALIGNMENT_TOLERANCE
            and initial <= INITIAL_LOSS_CEILING
            and rate.passed
        )
        successes += int(succeeded)
        logger.info(
            "Convergence seed %d: %s after %d steps, loss %.3g, angle %.3g.",
            seed,
            trajectory.terminal.value,
            trajectory.snapshots[-1].step,
            trajectory.final_loss,
            angle,
        )
    measured = {
        "seeds": float(cfg.convergence_seeds),
        "successes": float(successes),
        "monotonicity_violations": float(violations),
        "max_initial_loss": initial_max,
        "max_final_loss": final_max,
        "max_heavy_angle": angle_max,
        "max_steps": steps_max,
        "max_rate_ratio": rate_max,
    }
    if math.isfinite(ratio_min):
        measured["min_lojasiewicz_ratio"] = ratio_min
    passed = successes == cfg.convergence_seeds and ratio_min >= cfg.kappa_floor
    return CheckReport(name, verdict(passed), measured)


def sgd_convergence_check(
    cfg: VerifierConfig,
    m: int = ACCEPTANCE_M,
    scale: float = SGD_START_SCALE,
    name: str = "sgd_convergence",
) -> CheckReport:
    """SGD on fresh batches of 4096 samples reaches L <= 1e-3 in at least 80% of the seeds.

    Runs share the convergence setup but start from a larger perturbation, so
    that the initial loss sits above the target.
    """
    successes, initial_min, final_losses = 0, math.inf, []
    for index in range(cfg.sgd_seeds):
        seed = cfg.seed + index
        teacher = acceptance_teacher(seed)
        train_cfg = TrainConfig(
            mode="SGD",
            batch=SGD_BATCH,
            target_loss=SGD_TARGET,
            max_steps=cfg.sgd_steps,
            seed=seed,
        )
        trajectory = train(teacher, perturbed_teacher(teacher, m, scale, seed), train_cfg)
        successes += int(trajectory.terminal == TerminalReason.TARGET_REACHED)
        initial_min = min(initial_min, trajectory.snapshots[0].loss)
        final_losses.append(trajectory.final_loss)
    required = math.ceil(SGD_SUCCESS_FRACTION * cfg.sgd_seeds)
    measured = {
        "seeds": float(cfg.sgd_seeds),
        "successes": float(successes),
        "required": float(required),
        "min_initial_loss": initial_min,
        "median_final_loss": float(np.median(final_losses)),
    }
    passed = successes >= required
    return CheckReport(name, verdict(passed), measured)


# ---------------------------------------------------------------------------
# Claims


def warmup_cubic_check(cfg: VerifierConfig) -> CheckReport:
    """L(delta) / delta^3 stays within a factor 2 and R1 vanishes on the warm-up family."""
    ratios, r1_max = [], 0.0
    for delta in WARMUP_DELTAS:
        teacher, student = warmup_network(delta)
        stats = residual_stats(teacher, student, partition_students(teacher, student))
        ratios.append(stats.loss / delta**3)
        r1_max = max(r1_max, stats.r1_norm_sq)
    teacher, student = warmup_network(WARMUP_DELTAS[0])

    def half_square(inputs: Matrix) -> Vector:
        return 0.5 * (student.output(inputs) - teacher.output(inputs)) ** 2

    mc = estimate(half_square, 2, cfg.mc_samples, cfg.seed, threads=cfg.threads)
    deviation = mc.deviation(population_loss(teacher, student))
    spread = max(ratios) / min(ratios)
    measured: Dict[str, float] = {
        f"ratio_{delta:g}": ratio for delta, ratio in zip(WARMUP_DELTAS, ratios)
    }
    measured.update(
        spread=spread,
        limit_constant=2.0 / (3.0 * math.pi),
        extrapolated=ratios[-1],
        r1_max=r1_max,
        mc_deviation=deviation,
    )
    passed = spread <= 2.0 and r1_max <= 1e-15 and deviation <= z_threshold(1)
    return CheckReport("warmup_cubic", verdict(passed), measured)


def relu_counterexample_network() -> Tuple[TeacherNetwork, StudentNetwork]:
    """Three unit teachers at 0, 120 and 240 degrees and students equal to their negatives."""
    angles = np.radians([0.0, 120.0, 240.0])
    teachers = np.column_stack([np.cos(angles), np.sin(angles)])
    return TeacherNetwork(teachers), StudentNetwork(-teachers)


def relu_counterexample_check(cfg: VerifierConfig) -> CheckReport:
    """Zero ReLU loss with every student direction at least 59 degrees from every teacher.

    Under the absolute value the same weights fit exactly, so the contrast
    reported is the absolute-value student against the ReLU teacher.
    """
    teacher, student = relu_counterexample_network()
    effective = student.effective()

    def relu_loss(inputs: Matrix) -> Vector:
        return 0.5 * (relu_output(effective, inputs) - relu_output(teacher.neurons, inputs)) ** 2

    def mixed_loss(inputs: Matrix) -> Vector:
        return 0.5 * (student.output(inputs) - relu_output(teacher.neurons, inputs)) ** 2

    relu = estimate(relu_loss, 2, cfg.mc_samples, cfg.seed, threads=cfg.threads)
    mixed = estimate(mixed_loss, 2, cfg.mc_samples, cfg.seed, threads=cfg.threads)
    min_angle = min(
        signed_angle(s, t) for s, t in itertools.product(student.neurons, teacher.neurons)
    )
    measured = {
        "relu_loss": relu.mean,
        "relu_std_err": relu.std_err,
        "min_angle_deg": math.degrees(min_angle),
        "abs_student_relu_teacher_loss": mixed.mean,
        "abs_loss": population_loss(teacher, student),
    }
    passed = (
        relu.mean <= max(MIN_Z * relu.std_err, 1e-12)
        and min_angle >= RELU_MIN_ANGLE
        and mixed.mean - MIN_Z * mixed.std_err > RELU_ABS_LOSS
    )
    return CheckReport("relu_counterexample", verdict(passed), measured)


def relu_reduction_check(
    teacher: TeacherNetwork, student: StudentNetwork, cfg: VerifierConfig
) -> CheckReport:
    """ReLU loss equals L_abs / 4 + ||beta||^2 / 2, and L_abs / 4 once beta is added.

    Also checks f*_relu(x) - beta*^T x = f*(x) / 2 pointwise.
    """
    effective = student.effective()
    beta = optimal_linear_beta(teacher, student)
    abs_loss = population_loss(teacher, student)

    def plain(inputs: Matrix) -> Vector:
        return 0.5 * (relu_output(effective, inputs) - relu_output(teacher.neurons, inputs)) ** 2

    def corrected(inputs: Matrix) -> Vector:
        gap = relu_output(effective, inputs) + inputs @ beta - relu_output(teacher.neurons, inputs)
        return 0.5 * gap**2

    plain_mc = estimate(plain, teacher.d, cfg.mc_samples, cfg.seed, threads=cfg.threads)
    corrected_mc = estimate(
        corrected, teacher.d, cfg.mc_samples, cfg.seed + 1, threads=cfg.threads
    )
    inputs = sample_dataset(teacher, 1000, [cfg.seed, 7]).inputs
    pointwise = float(
        np.abs(relu_linear_residual(teacher, inputs) - 0.5 * teacher.output(inputs)).max()
    )
    plain_dev = plain_mc.deviation(abs_loss / 4.0 + 0.5 * float(beta @ beta))
    corrected_dev = corrected_mc.deviation(abs_loss / 4.0)
    measured = {
        "abs_loss": abs_loss,
        "beta_norm_sq": float(beta @ beta),
        "plain_deviation": plain_dev,
        "corrected_deviation": corrected_dev,
        "pointwise_error": pointwise,
    }
    limit = z_threshold(2)
    passed = plain_dev <= limit and corrected_dev <= limit and pointwise <= 1e-10
    return CheckReport("relu_reduction", verdict(passed), measured)


def regime_check(cfg: VerifierConfig) -> CheckReport:
    """Lazy training barely turns neurons; low-loss GD aligns every heavy neuron to a teacher."""
    teacher = landscape_teacher(cfg)
    rng = np.random.default_rng([cfg.seed, 11])
    gaussian = StudentNetwork(rng.standard_normal((20, teacher.d)) / math.sqrt(teacher.d))
    lazy = train(
        teacher,
        gaussian,
        TrainConfig(max_steps=cfg.regime_steps, target_loss=0.0, lazy_scale=cfg.lazy_scale),
    )
    lazy_change = float(direction_changes(lazy).net.max())
    start = perturbed_teacher(teacher, ACCEPTANCE_M, ACCEPTANCE_SCALE, cfg.seed)
    local = train(teacher, start, _acceptance_train_config(cfg))
    after = max_heavy_angle(teacher, local.final)
    measured = {
        "lazy_max_direction_change": lazy_change,
        "lazy_loss_ratio": lazy.final_loss / lazy.snapshots[0].loss,
        "initial_max_heavy_angle": max_heavy_angle(teacher, local.initial),
        "final_max_heavy_angle": after,
        "alignment_tolerance": ALIGNMENT_TOLERANCE,
        "local_final_loss": local.final_loss,
        "local_steps": float(local.snapshots[-1].step),
    }
    passed = lazy_change <= LAZY_DIRECTION_CHANGE and after <= ALIGNMENT_TOLERANCE
    return CheckReport("regime", verdict(passed), measured)


# ---------------------------------------------------------------------------
# Kernel checks


def _random_pair(rng: np.random.Generator, d: int) -> Tuple[Vector, Vector]:
    u = rng.standard_normal(d)
    v = rng.standard_normal(d)
    if rng.random() < 0.2:
        v = u + 1e-3 * v
    return u, v


def kernel_exactness_check(
    cfg: VerifierConfig, pairs: int = 50, dims: Sequence[int] = (2, 5, 20)
) -> CheckReport:
    """K, G, Scov bilinear forms and trace against Monte Carlo on random pairs."""
    rng = np.random.default_rng([cfg.seed, 1])
    deviations: List[float] = []
    for d in dims:
        for index in range(pairs):
            u, v = _random_pair(rng, d)
            left = rng.standard_normal((5, d))
            right = rng.standard_normal((5, d))

            def integrand(inputs: Matrix, u=u, v=v, left=left, right=right) -> Matrix:
                pu, pv = inputs @ u, inputs @ v
                signs = np.sign(pu) * np.sign(pv)
                forms = (inputs @ left.T) * (inputs @ right.T) * signs[:, None]
                return np.column_stack(
                    [
                        np.abs(pu) * np.abs(pv),
                        (np.sign(pu) * np.abs(pv))[:, None] * inputs,
                        forms,
                        (inputs**2).sum(axis=1) * signs,
                    ]
                )

            exact = np.concatenate(
                [
                    [abs_pair_expectation(u, v)],
                    abs_pair_gradient(u, v),
                    [sign_cov_bilinear(u, v, a, b) for a, b in zip(left, right)],
                    [float(np.trace(sign_cov_block(u, v)))],
                ]
            )
            seed = cfg.seed + 1000 * d + index
            mc = estimate_vector(integrand, d, cfg.mc_samples, seed, threads=cfg.threads)
            deviations.extend(mc.deviation(exact).tolist())
    limit = z_threshold(len(deviations))
    worst = max(deviations)
    measured = {"comparisons": float(len(deviations)), "max_deviation": worst, "limit": limit}
    return CheckReport("kernel_exactness", verdict(worst <= limit), measured)


def hermite_layer_check(cfg: VerifierConfig) -> CheckReport:
    """Low-order coefficients, truncation error of |x| and E[h_m(x) h_n(y)] = rho^n delta_mn."""
    coeffs = hermite_abs_coeffs(HERMITE_DEGREE).coeffs
    formulas = [
        math.sqrt(2.0 / math.pi),
        math.sqrt(1.0 / math.pi),
        -math.sqrt(2.0 / math.pi) / math.sqrt(24.0),
    ]
    coefficient_error = max(abs(coeffs[2 * k] - value) for k, value in enumerate(formulas))
    l2_error = math.sqrt(max(1.0 - math.fsum(coeffs**2), 0.0))
    grid = np.linspace(-3.0, 3.0, 2001)
    sup_error = float(np.abs(hermite_series(coeffs, grid) - np.abs(grid)).max())
    rho = 0.6
    orders = range(5)

    def products(inputs: Matrix) -> Matrix:
        x = inputs[:, 0]
        y = rho * x + math.sqrt(1.0 - rho**2) * inputs[:, 1]
        return np.column_stack(
            [hermite_value(m, x) * hermite_value(n, y) for m in orders for n in orders]
        )

    mc = estimate_vector(products, 2, cfg.mc_samples, cfg.seed, threads=cfg.threads)
    expected = [rho**n if m == n else 0.0 for m in orders for n in orders]
    deviation = float(mc.deviation(expected).max())
    measured = {
        "coefficient_error": coefficient_error,
        "l2_truncation_error": l2_error,
        "sup_error": sup_error,
        "orthogonality_deviation": deviation,
    }
    passed = (
        coefficient_error <= 1e-12
        and l2_error <= HERMITE_L2_TOLERANCE
        and deviation <= z_threshold(len(expected))
    )
    return CheckReport("hermite_layer", verdict(passed), measured)


def owen_h_grid_check() -> CheckReport:
    """h(tau, phi) <= 0 on the grid tau, phi in (0, 0.2], and h(0, phi) = 0."""
    worst = max(owen_h(tau, phi) for tau in OWEN_GRID for phi in OWEN_GRID)
    boundary = max(abs(owen_h(0.0, phi)) for phi in OWEN_GRID)
    measured = {"max_h": worst, "max_boundary": boundary}
    passed = worst <= OWEN_SLACK and boundary <= OWEN_SLACK
    return CheckReport("owen_h_grid", verdict(passed), measured)


def _random_states(
    cfg: VerifierConfig, count: int
) -> List[Tuple[TeacherNetwork, StudentNetwork]]:
    rng = np.random.default_rng([cfg.seed, 5])
    states = []
    for index in range(count):
        d = int(rng.integers(2, 11))
        r = int(rng.integers(1, 5))
        m = int(rng.integers(1, 21))
        teacher = TeacherNetwork(rng.standard_normal((r, d)))
        student = StudentNetwork(rng.standard_normal((m, d)) / math.sqrt(d))
        states.append((teacher, student))
        logger.debug("Random state %d: d=%d, r=%d, m=%d", index, d, r, m)
    return states


def identities_check(cfg: VerifierConfig, count: int = 30) -> CheckReport:
    """||R1||^2 = v^T M v, ||R||^2 = 2L, M = I for r = 1 and lambda_min for orthogonal pairs."""
    worst = 0.0
    for teacher, student in _random_states(cfg, count):
        partition = partition_students(teacher, student)
        stats = residual_stats(teacher, student, partition)
        quadratic = float(stats.gaps.ravel() @ build_M(teacher).M @ stats.gaps.ravel())
        scale = max(abs(quadratic), 1e-300)
        worst = max(worst, abs(stats.r1_norm_sq - quadratic) / scale)
        total = max(2.0 * stats.loss, 1e-300)
        worst = max(worst, abs(stats.residual_norm_sq - 2.0 * stats.loss) / total)
    single = build_M(TeacherNetwork(np.array([[0.6, 0.8, 0.0]]))).M
    identity_gap = float(np.abs(single - np.eye(3)).max())
    orthogonal = build_M(TeacherNetwork(np.eye(2))).min_eigenvalue
    eigen_gap = abs(orthogonal - (1.0 - 2.0 / math.pi))
    measured = {
        "max_relative_error": worst,
        "identity_gap": identity_gap,
        "orthogonal_eigen_gap": eigen_gap,
    }
    passed = worst <= IDENTITY_TOLERANCE and identity_gap == 0.0 and eigen_gap <= 1e-8
    return CheckReport("identities", verdict(passed), measured)


def gradient_check(cfg: VerifierConfig, count: int = 20) -> CheckReport:
    """Analytic population gradient against central finite differences."""
    worst = 0.0
    for teacher, student in _random_states(cfg, count):
        analytic = population_gradient(teacher, student)
        numeric = np.zeros_like(analytic)
        for index in np.ndindex(*analytic.shape):
            shift = np.zeros_like(analytic)
            shift[index] = FD_STEP
            forward = population_loss(teacher, StudentNetwork(student.neurons + shift))
            backward = population_loss(teacher, StudentNetwork(student.neurons - shift))
            numeric[index] = (forward - backward) / (2.0 * FD_STEP)
        scale = max(float(np.linalg.norm(analytic)), 1e-12)
        worst = max(worst, float(np.linalg.norm(numeric - analytic)) / scale)
    measured = {"max_relative_error": worst, "tolerance": FD_TOLERANCE}
    return CheckReport("gradient_check", verdict(worst <= FD_TOLERANCE), measured)


def _jacobian(w: Vector) -> Matrix:
    return neuron_jacobian_apply(np.repeat(w[None, :], w.shape[0], axis=0), np.eye(w.shape[0])).T


def g_smoothness_check(cfg: VerifierConfig) -> CheckReport:
    """Operator-norm Lipschitz constant of the Jacobian ||w||(I + w_bar w_bar^T) of ||w|| w.

    A third of the pairs sit near zero and a third are nearly collinear.
    """
    rng = np.random.default_rng([cfg.seed, 9])
    violations, worst, worst_frobenius = 0, 0.0, 0.0
    for index in range(cfg.g_smoothness_pairs):
        d = int(rng.integers(1, 11))
        w = rng.standard_normal(d)
        u = rng.standard_normal(d)
        kind = index % 3
        if kind == 1:
            w *= 1e-6
        elif kind == 2:
            u = 1e-3 * float(rng.standard_normal()) * w + 1e-9 * u
        if index % 97 == 0:
            w = np.zeros(d)
        step = float(np.linalg.norm(u))
        if step == 0.0:
            continue
        difference = _jacobian(w + u) - _jacobian(w)
        ratio = float(np.linalg.norm(difference, 2)) / step
        worst = max(worst, ratio)
        worst_frobenius = max(worst_frobenius, float(np.linalg.norm(difference)) / step)
        if ratio > G_SMOOTHNESS * (1.0 + 1e-12):
            violations += 1
    measured = {
        "pairs": float(cfg.g_smoothness_pairs),
        "violations": float(violations),
        "max_ratio": worst,
        "max_frobenius_ratio": worst_frobenius,
    }
    return CheckReport("g_smoothness", verdict(violations == 0), measured)


# ---------------------------------------------------------------------------
# Initialization checks


def nnls_brute_force(gram: Matrix, target: Vector) -> float:
    """Smallest objective over all supports with a nonnegative unconstrained solution."""
    m = target.shape[0]
    best = 0.0
    for support in itertools.product([False, True], repeat=m):
        mask = np.array(support)
        if not mask.any():
            continue
        z = np.zeros(m)
        z[mask] = np.linalg.lstsq(gram[np.ix_(mask, mask)], target[mask], rcond=None)[0]
        if (z >= 0.0).all():
            best = min(best, float(0.5 * z @ gram @ z - target @ z))
    return best


def init_check(cfg: VerifierConfig) -> CheckReport:
    """NNLS against brute force, random init at d = 2 and subspace recovery at d = 20.

    The subspace is recovered from the label-centered moment matrix; the angle
    of the plain estimator on the same samples is reported alongside.
    """
    rng = np.random.default_rng([cfg.seed, 13])
    nnls_gap = 0.0
    for _ in range(100):
        factor = rng.standard_normal((5, 5))
        gram = factor.T @ factor
        target = rng.standard_normal(5)
        result = nnls(gram, target)
        nnls_gap = max(nnls_gap, abs(result.objective - nnls_brute_force(gram, target)))
    successes = 0
    seeds = 20
    for seed in range(seeds):
        teacher = random_teacher(2, 3, 0.5, 1.0, 1.0, seed=cfg.seed + seed)
        student = random_init(teacher, 200, cfg.seed + seed)
        successes += int(population_loss(teacher, student) <= 1e-2)
    teacher = TeacherNetwork(np.eye(20)[:3])
    data = sample_dataset(teacher, cfg.subspace_samples, [cfg.seed, 0])
    moments = moment_matrix(data, centered=True).M_hat
    angle = principal_angle(top_eigenvectors(moments, 3), teacher)
    plain = principal_angle(top_eigenvectors(moment_matrix(data).M_hat, 3), teacher)
    subspace_student = subspace_init(
        teacher, 50, 3, cfg.subspace_samples, cfg.seed, moments=moments
    )
    measured = {
        "nnls_max_gap": nnls_gap,
        "random_init_successes": float(successes),
        "principal_angle": angle,
        "plain_principal_angle": plain,
        "subspace_samples": float(cfg.subspace_samples),
        "subspace_init_loss": population_loss(teacher, subspace_student),
    }
    passed = nnls_gap <= 1e-9 and successes >= 18 and angle <= 0.05
    return CheckReport("init", verdict(passed), measured)


# ---------------------------------------------------------------------------
# Sampling checks


def sample_concentration_check(
    teacher: TeacherNetwork,
    student: StudentNetwork,
    cfg: VerifierConfig,
    name: str = "sample_concentration",
) -> CheckReport:
    """Log-log slope of the median gradient deviation against N is -1/2."""
    scan = gradient_deviation_scan(teacher, student, cfg.concentration_sizes, seed=cfg.seed)
    measured: Dict[str, float] = {
        f"median_{size}": median for size, median in zip(scan.sizes, scan.medians)
    }
    if max(scan.medians) == 0.0:
        return CheckReport(name, Status.PASS, measured, "degenerate: zero deviation")
    if math.isnan(scan.slope):
        return CheckReport(name, Status.INCONCLUSIVE, measured, "some median is zero")
    measured["slope"] = scan.slope
    passed = abs(scan.slope - CONCENTRATION_SLOPE) <= CONCENTRATION_TOLERANCE
    return CheckReport(name, verdict(passed), measured)


def gradient_unbiasedness_check(
    teacher: TeacherNetwork,
    student: StudentNetwork,
    cfg: VerifierConfig,
    datasets: int = 50,
    n: int = 1000,
) -> CheckReport:
    """The empirical gradient averaged over independent datasets matches the population one."""
    samples = np.stack(
        [
            sampled_loss_and_gradient(teacher, student, n, [cfg.seed, 17, index])[1].ravel()
            for index in range(datasets)
        ]
    )
    mean = samples.mean(axis=0)
    std_err = samples.std(axis=0, ddof=1) / math.sqrt(datasets)
    gap = np.abs(mean - population_gradient(teacher, student).ravel())
    scaled = np.divide(gap, std_err, out=np.zeros_like(gap), where=std_err > 0.0)
    scaled[(std_err == 0.0) & (gap > 1e-12)] = math.inf
    worst = float(scaled.max())
    limit = z_threshold(int(gap.size))
    measured = {"max_deviation": worst, "limit": limit, "datasets": float(datasets)}
    return CheckReport("gradient_unbiasedness", verdict(worst <= limit), measured)


# ---------------------------------------------------------------------------
# Suites


def _landscape_checks(cfg: VerifierConfig) -> List[Check]:
    teacher = landscape_teacher(cfg)
    states = low_loss_states(teacher, cfg)
    warmups = warmup_states()
    trajectory_cache: Dict[str, Trajectory] = {}

    def trajectory() -> Trajectory:
        if "run" not in trajectory_cache:
            trajectory_cache["run"] = trajectory_fixture(teacher, cfg)
        return trajectory_cache["run"]

    def on_warmups(func: Callable[..., CheckReport], name: str) -> CheckReport:
        reports = [func(t, [s], cfg, name=name) for t, s in warmups]
        order = [Status.PASS, Status.INCONCLUSIVE, Status.FAIL]
        return max(reports, key=lambda report: order.index(report.status))

    warmup_teacher, warmup_student = warmups[0]
    perturbed = states[-1]
    return [
        Check("lojasiewicz", lambda: lojasiewicz_check(teacher, states, cfg)),
        Check(
            "lojasiewicz_warmup",
            lambda: on_warmups(lojasiewicz_check, "lojasiewicz_warmup"),
        ),
        Check(
            "descent_correlation",
            lambda: descent_correlation_check(
                teacher, states, cfg, min_states=DESCENT_MIN_STATES
            ),
        ),
        Check(
            "descent_correlation_warmup",
            lambda: on_warmups(descent_correlation_check, "descent_correlation_warmup"),
        ),
        Check("smoothness", lambda: smoothness_check(teacher, states, cfg)),
        Check("lipschitz", lambda: lipschitz_check(teacher, states, cfg)),
        Check("neighbor_and_mass", lambda: neighbor_and_mass_check(teacher, states, cfg)),
        Check(
            "r2_and_weighted_angle",
            lambda: r2_and_weighted_angle_check(teacher, states, cfg),
        ),
        Check("test_function", lambda: test_function_suite_check(cfg)),
        Check(
            "hermite_test_function",
            lambda: hermite_test_function_check(teacher, perturbed, 1e-3, cfg),
        ),
        Check(
            "hermite_test_function_warmup",
            lambda: hermite_test_function_check(
                warmup_teacher, warmup_student, 1e-3, cfg, name="hermite_test_function_warmup"
            ),
        ),
        Check("average_closeness", lambda: average_closeness_check(teacher, trajectory())),
        Check("convergence_rate", lambda: convergence_rate_check(trajectory())),
        Check("convergence", lambda: convergence_check(cfg)),
    ]


def build_suite(name: str, cfg: VerifierConfig) -> List[Check]:
    """Checks of one suite; ``all`` concatenates every suite.

    Raises:
        DomainError: unknown suite name.
    """
    if name == "all":
        return [check for suite in SUITES for check in build_suite(suite, cfg)]
    if name == "kernels":
        return [
            Check("kernel_exactness", lambda: kernel_exactness_check(cfg)),
            Check("hermite_layer", lambda: hermite_layer_check(cfg)),
            Check("owen_h_grid", owen_h_grid_check),
            Check("identities", lambda: identities_check(cfg)),
            Check("gradient_check", lambda: gradient_check(cfg)),
            Check("g_smoothness", lambda: g_smoothness_check(cfg)),
        ]
    if name == "landscape":
        return _landscape_checks(cfg)
    if name == "claims":
        teacher = landscape_teacher(cfg)
        student = perturbed_teacher(teacher, 2 * teacher.r, 0.1, cfg.seed)
        return [
            Check("warmup_cubic", lambda: warmup_cubic_check(cfg)),
            Check("relu_counterexample", lambda: relu_counterexample_check(cfg)),
            Check("relu_reduction", lambda: relu_reduction_check(teacher, student, cfg)),
            Check("regime", lambda: regime_check(cfg)),
        ]
    if name == "init":
        return [Check("init", lambda: init_check(cfg))]
    if name == "sampling":
        teacher = landscape_teacher(cfg)
        student = perturbed_teacher(teacher, 2 * teacher.r, 0.1, cfg.seed)
        return [
            Check(
                "sample_concentration",
                lambda: sample_concentration_check(teacher, student, cfg),
            ),
            Check(
                "gradient_unbiasedness",
                lambda: gradient_unbiasedness_check(teacher, student, cfg),
            ),
            Check("sgd_convergence", lambda: sgd_convergence_check(cfg)),
        ]
    msg = f"Unknown suite {name!r}; expected one of {SUITES + ('all',)}."
    logger.error(msg)
    raise DomainError(msg)


def run_suite(name: str, cfg: VerifierConfig) -> List[CheckReport]:
    """Run every check of a suite in order."""
    checks = build_suite(name, cfg)
    logger.info("Running suite %s with %d checks.", name, len(checks))
    return [check.run() for check in checks]


def suite_failed(reports: Sequence[CheckReport]) -> bool:
    """True when some report failed; inconclusive reports are allowed."""
    return any(report.status == Status.FAIL for report in reports)

