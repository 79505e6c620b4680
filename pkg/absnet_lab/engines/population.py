"""Exact population loss, gradient and residual decomposition."""

import math
from dataclasses import dataclass
from logging import getLogger

import numpy as np
import numpy.typing as npt
from cachetools import LRUCache, cached
from cachetools.keys import hashkey

from ..errors import CoverageError
from .gauss_kernels import (
    kernel_matrix,
    mixture_kernel_gradient,
    sign_cov_bilinear_matrix,
    sign_cov_block,
)
from .net_core import (
    Matrix,
    NeuronPartition,
    StudentNetwork,
    TeacherNetwork,
    Vector,
    delta_max,
)

logger = getLogger(__name__)


@dataclass(frozen=True)
class ResidualStats:
    """Decomposition R = R1 + R2 of the residual f - f* around the average neurons."""

    loss: float
    avg_neurons: Matrix
    gaps: Matrix
    r1_norm_sq: float
    r2_norm_sq: float
    cross_term: float

    @property
    def residual_norm_sq(self) -> float:
        return self.r1_norm_sq + 2.0 * self.cross_term + self.r2_norm_sq


@dataclass(frozen=True)
class HessianSurrogate:
    """Block matrix M with blocks E[x x^T sgn(w_i*^T x) sgn(w_j*^T x)]."""

    M: Matrix
    min_eigenvalue: float


@dataclass(frozen=True)
class ResidualParts:
    """Pointwise residual R and its parts R1, R2 on a batch of inputs."""

    total: Vector
    r1: Vector
    r2: Vector


def _mixture(teacher: TeacherNetwork, student: StudentNetwork) -> tuple:
    units = np.vstack([student.effective(), teacher.neurons])
    coefficients = np.concatenate([np.ones(student.m), -np.ones(teacher.r)])
    return units, coefficients


def mixture_loss(units: Matrix, coefficients: Vector) -> float:
    """Half the second moment of sum_q c_q |u_q^T x|, clamped at zero."""
    gram = kernel_matrix(units, units)
    weighted = coefficients[:, None] * gram * coefficients[None, :]
    return max(0.5 * math.fsum(weighted.ravel()), 0.0)


def neuron_jacobian_apply(neurons: Matrix, vectors: Matrix) -> Matrix:
    """Apply the Jacobian ||w||(I + w_bar w_bar^T) of w -> ||w|| w row by row."""
    norms = np.linalg.norm(neurons, axis=1)
    directions = np.divide(
        neurons, norms[:, None], out=np.zeros_like(neurons), where=norms[:, None] > 0.0
    )
    along = (directions * vectors).sum(axis=1)
    return norms[:, None] * vectors + neurons * along[:, None]


def mixture_gradient(neurons: Matrix, units: Matrix, coefficients: Vector) -> Matrix:
    """Gradient in each neuron w_j of the mixture loss.

    Neuron j must enter the mixture as the unit ||w_j|| w_j with coefficient 1.
    """
    effective = np.linalg.norm(neurons, axis=1)[:, None] * neurons
    raw = mixture_kernel_gradient(effective, units, coefficients)
    return neuron_jacobian_apply(neurons, raw)


def population_loss(teacher: TeacherNetwork, student: StudentNetwork) -> float:
    """L(W) = 1/2 E[(f(x) - f*(x))^2] in closed form."""
    return mixture_loss(*_mixture(teacher, student))


def population_gradient(teacher: TeacherNetwork, student: StudentNetwork) -> Matrix:
    """Rows are the gradients of L in each student neuron; zero neurons get zero."""
    units, coefficients = _mixture(teacher, student)
    return mixture_gradient(student.neurons, units, coefficients)


def _teacher_key(teacher: TeacherNetwork) -> tuple:
    return hashkey(teacher.neurons.shape, teacher.neurons.tobytes())


@cached(cache=LRUCache(maxsize=32), key=_teacher_key)
def build_M(teacher: TeacherNetwork) -> HessianSurrogate:  # pylint: disable=C0103
    """Assemble M from sign covariance blocks and take its smallest eigenvalue."""
    d, r = teacher.d, teacher.r
    matrix = np.zeros((d * r, d * r))
    for i in range(r):
        for j in range(i, r):
            block = sign_cov_block(teacher.neurons[i], teacher.neurons[j])
            matrix[i * d : (i + 1) * d, j * d : (j + 1) * d] = block
            matrix[j * d : (j + 1) * d, i * d : (i + 1) * d] = block.T
    matrix = 0.5 * (matrix + matrix.T)
    matrix.setflags(write=False)
    min_eigenvalue = float(np.linalg.eigvalsh(matrix)[0])
    logger.debug("Built M for r=%d, d=%d: lambda_min=%.6g", r, d, min_eigenvalue)
    return HessianSurrogate(M=matrix, min_eigenvalue=min_eigenvalue)


def average_neurons(
    teacher: TeacherNetwork, student: StudentNetwork, partition: NeuronPartition
) -> Matrix:
    """w_hat_i = sum over T_i of the sign-flipped effective neurons."""
    effective = student.effective() * partition.sign_flips[:, None]
    averages = np.zeros((teacher.r, teacher.d))
    np.add.at(averages, partition.assignment, effective)
    return averages


def _expectation(signs_a: Matrix, left: Matrix, signs_b: Matrix, right: Matrix) -> float:
    return math.fsum(sign_cov_bilinear_matrix(signs_a, left, signs_b, right).ravel())


def residual_stats(
    teacher: TeacherNetwork, student: StudentNetwork, partition: NeuronPartition
) -> ResidualStats:
    """Exact second moments of R1 = sum_i sgn(w_i*^T x) v_i^T x and R2 = R - R1.

    R2 is sum_i sum_{j in T_i} (sgn(a_j^T x) - sgn(w_i*^T x)) a_j^T x with a_j the
    flipped effective neurons, so every moment is a sum of sign covariance bilinear forms.
    """
    avg = average_neurons(teacher, student, partition)
    gaps = avg - teacher.neurons
    effective = student.effective() * partition.sign_flips[:, None]
    effective = effective[np.linalg.norm(effective, axis=1) > 0.0]
    r2_signs = np.vstack([effective, teacher.neurons])
    r2_vectors = np.vstack([effective, -avg])
    r1_norm_sq = _expectation(teacher.neurons, gaps, teacher.neurons, gaps)
    cross_term = _expectation(teacher.neurons, gaps, r2_signs, r2_vectors)
    r2_norm_sq = _expectation(r2_signs, r2_vectors, r2_signs, r2_vectors)
    return ResidualStats(
        loss=population_loss(teacher, student),
        avg_neurons=avg,
        gaps=gaps,
        r1_norm_sq=r1_norm_sq,
        r2_norm_sq=r2_norm_sq,
        cross_term=cross_term,
    )


def residual_parts(
    teacher: TeacherNetwork,
    student: StudentNetwork,
    partition: NeuronPartition,
    inputs: Matrix,
) -> ResidualParts:
    """Evaluate R, R1 and R2 pointwise on a batch of inputs."""
    total = student.output(inputs) - teacher.output(inputs)
    gaps = average_neurons(teacher, student, partition) - teacher.neurons
    r1 = (np.sign(inputs @ teacher.neurons.T) * (inputs @ gaps.T)).sum(axis=1)
    return ResidualParts(total=total, r1=r1, r2=total - r1)


def descent_weights(
    teacher: TeacherNetwork,
    student: StudentNetwork,
    partition: NeuronPartition,
    eps: float,
    constant: float = 1.0,
) -> Vector:
    """q_j = ||w_j|| / sum_{T_i(delta_max)} ||w_k||^2 inside T_i(delta_max), else 0."""
    radius = delta_max(eps, teacher, constant)
    norms = student.norms
    weights = np.zeros(student.m)
    for i in range(teacher.r):
        members = partition.members_within(i, radius)
        members = members[norms[members] > 0.0]
        if members.size == 0:
            msg = f"Teacher {i} has no student within delta_max={radius:.6g}."
            logger.warning(msg)
            raise CoverageError(msg, teacher=i)
        weights[members] = norms[members] / math.fsum(norms[members] ** 2)
    return weights


def descent_direction(
    teacher: TeacherNetwork,
    student: StudentNetwork,
    partition: NeuronPartition,
    eps: float,
    constant: float = 1.0,
) -> Matrix:
    """g_j = (I - w_bar w_bar^T / 2)(w_j - q_j sgn(w_j^T w_i*) w_i*), with i the teacher of j.

    Raises:
        CoverageError: some teacher has no student within delta_max(eps).
    """
    weights = descent_weights(teacher, student, partition, eps, constant)
    targets = teacher.neurons[partition.assignment] * partition.sign_flips[:, None]
    shifted = student.neurons - weights[:, None] * targets
    norms = student.norms
    directions = np.divide(
        student.neurons,
        norms[:, None],
        out=np.zeros_like(student.neurons),
        where=norms[:, None] > 0.0,
    )
    along = (directions * shifted).sum(axis=1)
    result = shifted - 0.5 * directions * along[:, None]
    result[norms == 0.0] = 0.0
    return result


def population_moment_matrix(teacher: TeacherNetwork) -> Matrix:
    """E[f*(x)(x x^T - I)] = sqrt(2/pi) sum_i ||w_i*|| w_bar_i* w_bar_i*^T."""
    scaled = teacher.neurons / np.sqrt(teacher.norms)[:, None]
    return math.sqrt(2.0 / math.pi) * scaled.T @ scaled


def gradient_inner(gradient: npt.ArrayLike, direction: npt.ArrayLike) -> float:
    """Frobenius inner product of two per-neuron vector families."""
    return math.fsum((np.asarray(gradient) * np.asarray(direction)).ravel())
