"""Network representations, angle geometry and student partitioning."""

import math
from dataclasses import dataclass
from logging import getLogger
from typing import List, NamedTuple, Tuple

import numpy as np
import numpy.typing as npt

from ..errors import DomainError, InvalidTeacherError

logger = getLogger(__name__)

Vector = npt.NDArray[np.float64]
Matrix = npt.NDArray[np.float64]

# Angles closer than this to the minimum are treated as ties.
TIE_TOLERANCE = 1e-12
MAX_TEACHER_ATTEMPTS = 100000
# Students at or below this norm are inert and ignored by alignment measures.
HEAVY_NORM = 1e-4


def _as_matrix(neurons: npt.ArrayLike, name: str) -> Matrix:
    array = np.array(neurons, dtype=np.float64, ndmin=2)
    if array.ndim != 2 or array.shape[0] < 1 or array.shape[1] < 1:
        msg = f"{name} neurons must form a non-empty (count, d) array, got {array.shape}."
        logger.error(msg)
        raise DomainError(msg)
    if not np.all(np.isfinite(array)):
        msg = f"{name} neurons must be finite."
        logger.error(msg)
        raise DomainError(msg)
    array.setflags(write=False)
    return array


class Separation(NamedTuple):
    """Separation angle and norm bounds of a teacher network."""

    delta: float
    w_min: float
    w_max: float


@dataclass(frozen=True)
class TeacherNetwork:
    """Ground-truth network f*(x) = sum_i |w_i*^T x|."""

    neurons: Matrix

    def __post_init__(self) -> None:
        """Validate and freeze the neuron array."""
        neurons = _as_matrix(self.neurons, "Teacher")
        if np.any(np.linalg.norm(neurons, axis=1) == 0.0):
            msg = "Teacher neurons must be nonzero."
            logger.error(msg)
            raise InvalidTeacherError(msg)
        object.__setattr__(self, "neurons", neurons)

    @property
    def r(self) -> int:
        return int(self.neurons.shape[0])

    @property
    def d(self) -> int:
        return int(self.neurons.shape[1])

    @property
    def norms(self) -> Vector:
        return np.linalg.norm(self.neurons, axis=1)

    @property
    def directions(self) -> Matrix:
        return self.neurons / self.norms[:, None]

    def output(self, inputs: Matrix) -> Vector:
        """Evaluate the teacher on a batch of inputs of shape (N, d)."""
        return abs_output(self.neurons, inputs)


@dataclass(frozen=True)
class StudentNetwork:
    """Trainable network f(x) = sum_j ||w_j|| |w_j^T x|."""

    neurons: Matrix

    def __post_init__(self) -> None:
        """Validate and freeze the neuron array."""
        object.__setattr__(self, "neurons", _as_matrix(self.neurons, "Student"))

    @property
    def m(self) -> int:
        return int(self.neurons.shape[0])

    @property
    def d(self) -> int:
        return int(self.neurons.shape[1])

    @property
    def norms(self) -> Vector:
        return np.linalg.norm(self.neurons, axis=1)

    def effective(self) -> Matrix:
        """Return the effective output neurons ||w_j|| w_j as rows."""
        return self.norms[:, None] * self.neurons

    def output(self, inputs: Matrix) -> Vector:
        """Evaluate the student on a batch of inputs of shape (N, d)."""
        return abs_output(self.effective(), inputs)


@dataclass(frozen=True)
class NeuronPartition:
    """Assignment of every student neuron to its closest teacher neuron."""

    assignment: npt.NDArray[np.int64]
    angles: Vector
    sign_flips: npt.NDArray[np.int64]
    r: int

    def members(self, teacher: int) -> npt.NDArray[np.int64]:
        """Return the student indices of the set T_i."""
        return np.flatnonzero(self.assignment == teacher)

    def members_within(self, teacher: int, delta: float) -> npt.NDArray[np.int64]:
        """Return the student indices of T_i(delta)."""
        return np.flatnonzero((self.assignment == teacher) & (self.angles <= delta))


def abs_output(units: Matrix, inputs: Matrix) -> Vector:
    """Sum of absolute-value units: sum_j |u_j^T x| for each row x."""
    return np.abs(np.asarray(inputs) @ np.asarray(units).T).sum(axis=1)


def relu_output(units: Matrix, inputs: Matrix) -> Vector:
    """Sum of ReLU units: sum_j max(u_j^T x, 0) for each row x."""
    return np.maximum(np.asarray(inputs) @ np.asarray(units).T, 0.0).sum(axis=1)


def angle_up_to_sign(u: npt.ArrayLike, v: npt.ArrayLike) -> float:
    """Angle between the lines spanned by u and v, in [0, pi/2]."""
    u_arr = np.asarray(u, dtype=np.float64)
    v_arr = np.asarray(v, dtype=np.float64)
    norm_u = float(np.linalg.norm(u_arr))
    norm_v = float(np.linalg.norm(v_arr))
    if norm_u == 0.0 or norm_v == 0.0:
        msg = "Angle is undefined for a zero vector."
        logger.error(msg)
        raise DomainError(msg)
    return float(_line_angles(v_arr[None, :] / norm_v, u_arr / norm_u)[0])


def _line_angles(directions: Matrix, unit: Vector) -> Vector:
    """Angles up to sign between a unit vector and each unit row, accurate near 0."""
    inner = directions @ unit
    perpendicular = np.linalg.norm(unit[None, :] - inner[:, None] * directions, axis=1)
    return np.arctan2(perpendicular, np.abs(inner))


def effective_neuron(w: npt.ArrayLike) -> Vector:
    """Return ||w|| w."""
    w_arr = np.asarray(w, dtype=np.float64)
    return float(np.linalg.norm(w_arr)) * w_arr


def separation(teacher: TeacherNetwork) -> Separation:
    """Measure the separation and norm bounds of a teacher network."""
    norms = teacher.norms
    delta = math.pi / 2
    for i in range(teacher.r):
        for j in range(i + 1, teacher.r):
            delta = min(delta, angle_up_to_sign(teacher.neurons[i], teacher.neurons[j]))
    return Separation(delta=delta, w_min=float(norms.min()), w_max=float(norms.max()))


def partition_students(teacher: TeacherNetwork, student: StudentNetwork) -> NeuronPartition:
    """Assign each student to the teacher at the smallest angle (ties to the lowest index)."""
    if teacher.d != student.d:
        msg = f"Dimension mismatch: teacher d={teacher.d}, student d={student.d}."
        logger.error(msg)
        raise DomainError(msg)
    norms = student.norms
    assignment = np.zeros(student.m, dtype=np.int64)
    angles = np.zeros(student.m, dtype=np.float64)
    flips = np.ones(student.m, dtype=np.int64)
    directions = teacher.directions
    for j in np.flatnonzero(norms > 0.0):
        inner = directions @ student.neurons[j] / norms[j]
        candidate = _line_angles(directions, student.neurons[j] / norms[j])
        best = int(np.flatnonzero(candidate <= candidate.min() + TIE_TOLERANCE)[0])
        assignment[j] = best
        angles[j] = candidate[best]
        flips[j] = 1 if inner[best] >= 0.0 else -1
    return NeuronPartition(assignment=assignment, angles=angles, sign_flips=flips, r=teacher.r)


def max_heavy_angle(
    teacher: TeacherNetwork, student: StudentNetwork, heavy_norm: float = HEAVY_NORM
) -> float:
    """Largest angle between a student heavier than heavy_norm and its nearest teacher.

    Returns 0 when no student is heavy.
    """
    heavy = student.norms > heavy_norm
    if not heavy.any():
        return 0.0
    return float(partition_students(teacher, student).angles[heavy].max())


def canonicalize(student: StudentNetwork, partition: NeuronPartition) -> StudentNetwork:
    """Flip students so that each has a nonnegative inner product with its teacher."""
    return StudentNetwork(student.neurons * partition.sign_flips[:, None])


def delta_max(eps: float, teacher: TeacherNetwork, constant: float = 1.0) -> float:
    """Angle radius within which every teacher must have a student at loss eps."""
    if eps <= 0.0 or constant <= 0.0:
        msg = f"delta_max needs eps > 0 and C > 0, got eps={eps}, C={constant}."
        logger.error(msg)
        raise DomainError(msg)
    _, w_min, w_max = separation(teacher)
    value = constant * teacher.r * w_max * w_min ** (-5.0 / 3.0) * eps ** (1.0 / 3.0)
    return min(value, math.pi / 2)


def optimal_linear_beta(teacher: TeacherNetwork, student: StudentNetwork) -> Vector:
    """Best linear term for the ReLU student: 1/2 sum w_i* - 1/2 sum ||w_j|| w_j."""
    return 0.5 * teacher.neurons.sum(axis=0) - 0.5 * student.effective().sum(axis=0)


def random_teacher(
    d: int,
    r: int,
    delta_min: float,
    w_min: float,
    w_max: float,
    seed: int,
) -> TeacherNetwork:
    """Draw r random directions pairwise separated by delta_min (rejection sampling)."""
    if not 0.0 < w_min <= w_max:
        msg = f"Need 0 < w_min <= w_max, got w_min={w_min}, w_max={w_max}."
        logger.error(msg)
        raise InvalidTeacherError(msg)
    if not 0.0 <= delta_min <= math.pi / 2:
        msg = f"delta_min must lie in [0, pi/2], got {delta_min}."
        logger.error(msg)
        raise InvalidTeacherError(msg)
    rng = np.random.default_rng(seed)
    accepted: List[Vector] = []
    for _ in range(MAX_TEACHER_ATTEMPTS):
        candidate = rng.standard_normal(d)
        norm = float(np.linalg.norm(candidate))
        if norm == 0.0:
            continue
        candidate /= norm
        if all(angle_up_to_sign(candidate, other) >= delta_min for other in accepted):
            accepted.append(candidate)
            if len(accepted) == r:
                norms = rng.uniform(w_min, w_max, size=r)
                return TeacherNetwork(np.array(accepted) * norms[:, None])
    msg = f"Could not place {r} directions in d={d} with separation {delta_min}."
    logger.error(msg)
    raise InvalidTeacherError(msg)


def exact_copy(teacher: TeacherNetwork) -> StudentNetwork:
    """Student with one neuron per teacher and zero residual."""
    return StudentNetwork(np.sqrt(teacher.norms)[:, None] * teacher.directions)


def perturbed_teacher(
    teacher: TeacherNetwork, m: int, scale: float, seed: int
) -> StudentNetwork:
    """Student j copies teacher j mod r with its mass split among the copies, plus noise."""
    rng = np.random.default_rng(seed)
    owners = np.arange(m) % teacher.r
    counts = np.bincount(owners, minlength=teacher.r)
    neurons = np.empty((m, teacher.d))
    for j, owner in enumerate(owners):
        base = math.sqrt(teacher.norms[owner] / counts[owner]) * teacher.directions[owner]
        noise = rng.standard_normal(teacher.d) / math.sqrt(teacher.d)
        neurons[j] = base + scale * float(np.linalg.norm(base)) * noise
    return StudentNetwork(neurons)


def warmup_network(delta: float) -> Tuple[TeacherNetwork, StudentNetwork]:
    """One unit teacher along e1 and two students at angles +-delta whose average matches it."""
    norm = 1.0 / math.sqrt(2.0 * math.cos(delta))
    students = norm * np.array(
        [[math.cos(delta), math.sin(delta)], [math.cos(delta), -math.sin(delta)]]
    )
    return TeacherNetwork(np.array([[1.0, 0.0]])), StudentNetwork(students)


def relu_linear_residual(teacher: TeacherNetwork, inputs: Matrix) -> Vector:
    """f*_relu(x) - beta*^T x with beta* = 1/2 sum w_i*; equals f*(x) / 2 for every x."""
    beta = 0.5 * teacher.neurons.sum(axis=0)
    return relu_output(teacher.neurons, inputs) - np.asarray(inputs) @ beta
