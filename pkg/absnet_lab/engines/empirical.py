"""Finite-sample datasets, empirical loss and gradient, and gradient concentration."""

import math
from dataclasses import dataclass
from logging import getLogger
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DomainError
from .mc_oracle import DEFAULT_CHUNK_SIZE, SeedLike, sample_chunks
from .net_core import Matrix, StudentNetwork, TeacherNetwork, Vector
from .population import neuron_jacobian_apply, population_gradient

logger = getLogger(__name__)

# Above this many samples, loss and gradient are accumulated chunk by chunk.
STREAM_THRESHOLD = 10_000_000


@dataclass(frozen=True)
class Dataset:
    """Inputs x_k with labels y_k = sum_i |w_i*^T x_k|."""

    inputs: Matrix
    labels: Vector
    seed: Optional[SeedLike] = None

    @property
    def n(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def d(self) -> int:
        return int(self.inputs.shape[1])


@dataclass(frozen=True)
class DeviationScan:
    """Median gradient deviation per sample size and the fitted log-log slope."""

    sizes: List[int]
    medians: List[float]
    slope: float


def _check_size(n: int) -> None:
    if n < 1:
        msg = f"Dataset size must be at least 1, got {n}."
        logger.error(msg)
        raise DomainError(msg)


def iter_batches(
    teacher: TeacherNetwork, n: int, seed: SeedLike, chunk_size: int = DEFAULT_CHUNK_SIZE
) -> Iterator[Dataset]:
    """Stream the dataset of (teacher, n, seed) in chunks without materializing it."""
    _check_size(n)
    for _, inputs in sample_chunks(teacher.d, n, seed, chunk_size):
        yield Dataset(inputs=inputs, labels=teacher.output(inputs), seed=seed)


def sample_dataset(
    teacher: TeacherNetwork, n: int, seed: SeedLike, chunk_size: int = DEFAULT_CHUNK_SIZE
) -> Dataset:
    """Draw n i.i.d. standard normal inputs and label them with the teacher."""
    chunks = list(iter_batches(teacher, n, seed, chunk_size))
    return Dataset(
        inputs=np.vstack([chunk.inputs for chunk in chunks]),
        labels=np.concatenate([chunk.labels for chunk in chunks]),
        seed=seed,
    )


def _check_dims(student: StudentNetwork, data: Dataset) -> None:
    if student.d != data.d:
        msg = f"Dimension mismatch: student d={student.d}, dataset d={data.d}."
        logger.error(msg)
        raise DomainError(msg)


def _sums(student: StudentNetwork, data: Dataset) -> Tuple[float, Matrix]:
    """Sum of squared residuals and the raw (pre-Jacobian) gradient sums."""
    _check_dims(student, data)
    effective = student.effective()
    projections = data.inputs @ effective.T
    residual = np.abs(projections).sum(axis=1) - data.labels
    raw = (residual[:, None] * np.sign(projections)).T @ data.inputs
    return math.fsum(residual**2), raw


def empirical_loss(student: StudentNetwork, data: Dataset) -> float:
    """(1 / 2N) sum_k (f(x_k) - y_k)^2."""
    squares, _ = _sums(student, data)
    return squares / (2.0 * data.n)


def empirical_gradient(student: StudentNetwork, data: Dataset) -> Matrix:
    """(1/N) sum_k R(x_k) ||w_j|| (I + w_bar_j w_bar_j^T) x_k sgn(w_j^T x_k) per neuron."""
    _, raw = _sums(student, data)
    return neuron_jacobian_apply(student.neurons, raw / data.n)


def sampled_loss_and_gradient(
    teacher: TeacherNetwork,
    student: StudentNetwork,
    n: int,
    seed: SeedLike,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> Tuple[float, Matrix]:
    """Empirical loss and gradient on the (teacher, n, seed) dataset.

    Datasets up to STREAM_THRESHOLD samples are materialized; larger ones are
    regenerated chunk by chunk from the seed.
    """
    if n <= STREAM_THRESHOLD:
        data = sample_dataset(teacher, n, seed, chunk_size)
        squares, raw = _sums(student, data)
    else:
        squares_parts: List[float] = []
        raw = np.zeros((student.m, student.d))
        for chunk in iter_batches(teacher, n, seed, chunk_size):
            chunk_squares, chunk_raw = _sums(student, chunk)
            squares_parts.append(chunk_squares)
            raw += chunk_raw
        squares = math.fsum(squares_parts)
    return squares / (2.0 * n), neuron_jacobian_apply(student.neurons, raw / n)


def save_dataset_csv(data: Dataset, path: str) -> None:
    """Write the dataset with header x_0..x_{d-1},y."""
    header = ",".join([f"x_{index}" for index in range(data.d)] + ["y"])
    np.savetxt(
        path,
        np.column_stack([data.inputs, data.labels]),
        delimiter=",",
        header=header,
        comments="",
        fmt="%.17g",
    )
    logger.info("Wrote %d samples to %s.", data.n, path)


def load_dataset_csv(path: str) -> Dataset:
    """Read a dataset written by save_dataset_csv."""
    with open(path, "r", encoding="utf-8") as stream:
        header = stream.readline().strip().split(",")
        if not header or header[-1] != "y" or any(
            name != f"x_{index}" for index, name in enumerate(header[:-1])
        ):
            msg = f"Unexpected dataset header in {path}: {header}."
            logger.error(msg)
            raise ValueError(msg)
        table = np.loadtxt(stream, delimiter=",", ndmin=2)
    return Dataset(inputs=table[:, :-1], labels=table[:, -1])


def gradient_deviation_scan(
    teacher: TeacherNetwork,
    student: StudentNetwork,
    sizes: Sequence[int],
    repeats: int = 5,
    seed: int = 0,
) -> DeviationScan:
    """Median ||grad L_hat - grad L||_F per sample size, with the log-log slope.

    The slope is NaN when some median is zero (for example at an exact copy).
    """
    exact = population_gradient(teacher, student)
    medians = []
    for index, size in enumerate(sizes):
        deviations = [
            float(
                np.linalg.norm(
                    sampled_loss_and_gradient(teacher, student, size, [seed, index, repeat])[1]
                    - exact
                )
            )
            for repeat in range(repeats)
        ]
        medians.append(float(np.median(deviations)))
        logger.debug("N=%d: median gradient deviation %.6g", size, medians[-1])
    if len(sizes) < 2 or min(medians) <= 0.0:
        slope = math.nan
    else:
        slope = float(np.polyfit(np.log(sizes), np.log(medians), 1)[0])
    return DeviationScan(sizes=list(sizes), medians=medians, slope=slope)
