"""Gradient descent on the population loss and mini-batch SGD on fresh samples."""

import math
from dataclasses import dataclass
from enum import Enum
from logging import getLogger
from typing import Callable, List, Optional, Tuple

import numpy as np

from .config import TrainConfig
from .engines.empirical import sampled_loss_and_gradient
from .engines.gauss_kernels import signed_angle
from .engines.mc_oracle import SeedLike
from .engines.net_core import (
    Matrix,
    StudentNetwork,
    TeacherNetwork,
    Vector,
    max_heavy_angle,
    separation,
)
from .engines.population import (
    mixture_gradient,
    mixture_loss,
    population_gradient,
    population_loss,
)
from .errors import DivergenceError, DomainError

logger = getLogger(__name__)

# Full neuron arrays are kept in snapshots only up to this many entries.
SNAPSHOT_ENTRY_LIMIT = 10_000
MONOTONE_SLACK = 1e-12

Objective = Callable[[StudentNetwork], Tuple[float, Matrix]]


class TerminalReason(str, Enum):
    """Why a training run stopped."""

    TARGET_REACHED = "target_reached"
    STEP_CAP = "step_cap"
    DIVERGENCE = "divergence"


@dataclass(frozen=True)
class Snapshot:
    """Loss and gradient norm at one step, with the neurons when recorded."""

    step: int
    loss: float
    grad_norm: float
    neurons: Optional[Matrix] = None


@dataclass(frozen=True)
class Trajectory:
    """Immutable record of a training run."""

    snapshots: Tuple[Snapshot, ...]
    terminal: TerminalReason
    eta: float
    mode: str
    initial: StudentNetwork
    final: StudentNetwork

    @property
    def steps(self) -> Vector:
        return np.array([snapshot.step for snapshot in self.snapshots], dtype=np.float64)

    @property
    def losses(self) -> Vector:
        return np.array([snapshot.loss for snapshot in self.snapshots])

    @property
    def final_loss(self) -> float:
        return self.snapshots[-1].loss

    def monotonicity_violations(self, slack: float = MONOTONE_SLACK) -> int:
        """Number of recorded loss increases larger than ``slack``."""
        return int(np.count_nonzero(np.diff(self.losses) > slack))


@dataclass(frozen=True)
class DirectionChanges:
    """Per-neuron angle between initial and final directions, and along the path."""

    net: Vector
    path: Vector


def resolve_eta(teacher: TeacherNetwork, cfg: TrainConfig) -> float:
    """Fixed eta, or c / (r w_max) under the auto rule (an explicit eta wins)."""
    if cfg.eta is not None:
        return float(cfg.eta)
    return cfg.eta_constant / (teacher.r * separation(teacher).w_max)


def _check_eta(eta: float) -> None:
    if not eta > 0.0:
        msg = f"Step size must be positive, got {eta}."
        logger.error(msg)
        raise DomainError(msg)


def _apply(student: StudentNetwork, gradient: Matrix, eta: float) -> StudentNetwork:
    if not np.all(np.isfinite(gradient)):
        msg = "Gradient is not finite."
        logger.error(msg)
        raise DivergenceError(msg)
    return StudentNetwork(student.neurons - eta * gradient)


def gd_step(teacher: TeacherNetwork, student: StudentNetwork, eta: float) -> StudentNetwork:
    """One simultaneous population gradient step on every neuron.

    Raises:
        DivergenceError: the gradient is not finite.
    """
    _check_eta(eta)
    return _apply(student, population_gradient(teacher, student), eta)


def sgd_step(
    teacher: TeacherNetwork, student: StudentNetwork, eta: float, n: int, seed: SeedLike
) -> StudentNetwork:
    """One step along the empirical gradient of a fresh (teacher, n, seed) dataset."""
    _check_eta(eta)
    _, gradient = sampled_loss_and_gradient(teacher, student, n, seed)
    return _apply(student, gradient, eta)


def lazy_objective(
    teacher: TeacherNetwork, reference: StudentNetwork, scale: float
) -> Objective:
    """1/2 E[(f_W - f_W0 - f*/scale)^2] with W0 = reference.

    Since scale * f_W = f_{sqrt(scale) W}, this is training from a large
    initialization with the initial output subtracted.
    """
    anchor = np.vstack([reference.effective(), teacher.neurons / scale])
    signs = -np.ones(anchor.shape[0])

    def objective(student: StudentNetwork) -> Tuple[float, Matrix]:
        units = np.vstack([student.effective(), anchor])
        coefficients = np.concatenate([np.ones(student.m), signs])
        return mixture_loss(units, coefficients), mixture_gradient(
            student.neurons, units, coefficients
        )

    return objective


def population_objective(teacher: TeacherNetwork) -> Objective:
    """Exact population loss and gradient."""

    def objective(student: StudentNetwork) -> Tuple[float, Matrix]:
        return population_loss(teacher, student), population_gradient(teacher, student)

    return objective


def _aligned(teacher: TeacherNetwork, student: StudentNetwork, cfg: TrainConfig) -> bool:
    if cfg.align_tolerance is None:
        return True
    return max_heavy_angle(teacher, student) <= cfg.align_tolerance


def _keeps_neurons(cfg: TrainConfig, student: StudentNetwork) -> bool:
    return cfg.record_every > 0 and student.d * student.m <= SNAPSHOT_ENTRY_LIMIT


def train(teacher: TeacherNetwork, student: StudentNetwork, cfg: TrainConfig) -> Trajectory:
    """Run GD or SGD until the target loss, the step cap or divergence.

    Every step first records (when due) and tests the stopping rules on the
    current state, then moves. The first and last states are always recorded.
    With ``align_tolerance`` set, the target also needs every heavy student
    within that angle of its nearest teacher.

    Args:
        teacher: the labeling network.
        student: the initial student.
        cfg: training settings.

    Returns:
        The trajectory; divergence is a terminal reason, not an exception.
    """
    eta = resolve_eta(teacher, cfg)
    _check_eta(eta)
    if cfg.lazy_scale is not None:
        if cfg.mode != "GD":
            msg = "The lazy objective is only available in GD mode."
            logger.error(msg)
            raise DomainError(msg)
        objective = lazy_objective(teacher, student, cfg.lazy_scale)
    else:
        objective = population_objective(teacher)
    keep = _keeps_neurons(cfg, student)
    logger.info(
        "Training %s: m=%d, d=%d, eta=%.6g, target=%.3g.", cfg.mode, student.m, student.d, eta,
        cfg.target_loss,
    )
    snapshots: List[Snapshot] = []
    current = student
    initial_loss = math.nan
    step = 0
    while True:
        loss, gradient = objective(current)
        if step == 0:
            initial_loss = loss
        grad_norm = float(np.linalg.norm(gradient))
        terminal: Optional[TerminalReason] = None
        if loss <= cfg.target_loss and _aligned(teacher, current, cfg):
            terminal = TerminalReason.TARGET_REACHED
        elif not (math.isfinite(loss) and math.isfinite(grad_norm)) or (
            loss > cfg.divergence_factor * initial_loss
        ):
            terminal = TerminalReason.DIVERGENCE
        elif step >= cfg.max_steps:
            terminal = TerminalReason.STEP_CAP
        if step == 0 or terminal is not None or (
            cfg.record_every > 0 and step % cfg.record_every == 0
        ):
            snapshots.append(
                Snapshot(
                    step=step,
                    loss=loss,
                    grad_norm=grad_norm,
                    neurons=current.neurons if keep else None,
                )
            )
            logger.debug("step %d: loss %.6g, grad %.6g", step, loss, grad_norm)
        if terminal is not None:
            break
        if cfg.mode == "SGD":
            _, gradient = sampled_loss_and_gradient(teacher, current, cfg.batch, [cfg.seed, step])
        current = _apply(current, gradient, eta)
        step += 1
    logger.info("Training stopped at step %d (%s), loss %.6g.", step, terminal.value, loss)
    return Trajectory(
        snapshots=tuple(snapshots),
        terminal=terminal,
        eta=eta,
        mode=cfg.mode,
        initial=student,
        final=current,
    )


def _angles(before: Matrix, after: Matrix) -> Vector:
    changes = np.zeros(before.shape[0])
    for j, (old, new) in enumerate(zip(before, after)):
        if np.linalg.norm(old) > 0.0 and np.linalg.norm(new) > 0.0:
            changes[j] = signed_angle(old, new)
    return changes


def direction_changes(trajectory: Trajectory) -> DirectionChanges:
    """Angles moved by every neuron direction, net and summed over recorded states.

    Neurons that are zero at either end of a segment contribute 0 for it.
    """
    path_states = [trajectory.initial.neurons]
    path_states += [s.neurons for s in trajectory.snapshots[1:-1] if s.neurons is not None]
    path_states.append(trajectory.final.neurons)
    path = np.zeros(trajectory.initial.m)
    for before, after in zip(path_states[:-1], path_states[1:]):
        path += _angles(before, after)
    return DirectionChanges(
        net=_angles(trajectory.initial.neurons, trajectory.final.neurons), path=path
    )


def save_trajectory_csv(trajectory: Trajectory, path: str) -> None:
    """Write step,loss,grad_norm rows, expanded per neuron when neurons were recorded."""
    with_neurons = all(snapshot.neurons is not None for snapshot in trajectory.snapshots)
    d = trajectory.initial.d
    columns = ["step", "loss", "grad_norm"]
    rows = []
    if with_neurons:
        columns += ["neuron"] + [f"w_{index}" for index in range(d)]
        for snapshot in trajectory.snapshots:
            for j, neuron in enumerate(snapshot.neurons):  # type: ignore[arg-type]
                rows.append([snapshot.step, snapshot.loss, snapshot.grad_norm, j, *neuron])
    else:
        rows = [[s.step, s.loss, s.grad_norm] for s in trajectory.snapshots]
    np.savetxt(
        path,
        np.array(rows, dtype=np.float64).reshape(-1, len(columns)),
        delimiter=",",
        header=",".join(columns),
        comments="",
        fmt="%.17g",
    )
    logger.info("Wrote trajectory with %d snapshots to %s.", len(trajectory.snapshots), path)
