"""Seeded Monte Carlo estimation of expectations over x ~ N(0, I_d).

Samples are drawn in fixed-size chunks. Chunk k uses the k-th child of
``SeedSequence(seed)``, so the sample stream depends only on (seed, n, d, chunk_size)
and a threaded reduction combines the chunk moments in chunk order. Moments are merged
with the pairwise (Chan) update of Welford's recurrence.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from logging import getLogger
from typing import Callable, Iterator, List, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt

from ..errors import DomainError, EstimatorError
from .net_core import Matrix, Vector

logger = getLogger(__name__)

DEFAULT_SAMPLES = 1_000_000
DEFAULT_CHUNK_SIZE = 65536

Integrand = Callable[[Matrix], npt.ArrayLike]
SeedLike = Union[int, Sequence[int]]


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo mean with its standard error."""

    mean: float
    std_err: float
    n_samples: int
    seed: int

    def deviation(self, value: float) -> float:
        """Distance from ``value`` in standard errors (inf when the error is zero)."""
        gap = abs(self.mean - value)
        if self.std_err == 0.0:
            return 0.0 if gap == 0.0 else math.inf
        return gap / self.std_err


@dataclass(frozen=True)
class MCVectorEstimate:
    """Componentwise Monte Carlo means of a vector-valued integrand."""

    mean: Vector
    std_err: Vector
    n_samples: int
    seed: int

    def deviation(self, value: npt.ArrayLike) -> Vector:
        """Componentwise distance from ``value`` in standard errors."""
        gap = np.abs(self.mean - np.asarray(value, dtype=np.float64))
        scaled = np.divide(gap, self.std_err, out=np.zeros_like(gap), where=self.std_err > 0.0)
        scaled[(self.std_err == 0.0) & (gap > 0.0)] = np.inf
        return scaled


@dataclass
class _Moments:
    count: int
    mean: Vector
    m2: Vector

    def merge(self, other: "_Moments") -> "_Moments":
        if self.count == 0:
            return other
        total = self.count + other.count
        delta = other.mean - self.mean
        return _Moments(
            count=total,
            mean=self.mean + delta * (other.count / total),
            m2=self.m2 + other.m2 + delta**2 * (self.count * other.count / total),
        )


def chunk_plan(
    n: int, seed: SeedLike, chunk_size: int = DEFAULT_CHUNK_SIZE
) -> List[Tuple[int, int, np.random.SeedSequence]]:
    """Return (offset, size, seed sequence) for every chunk of an n-sample stream."""
    sizes = [chunk_size] * (n // chunk_size)
    if n % chunk_size:
        sizes.append(n % chunk_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    offsets = np.cumsum([0] + sizes[:-1])
    return [(int(offset), size, child) for offset, size, child in zip(offsets, sizes, children)]


def sample_chunks(
    d: int, n: int, seed: SeedLike, chunk_size: int = DEFAULT_CHUNK_SIZE
) -> Iterator[Tuple[int, Matrix]]:
    """Yield (offset, inputs) chunks of the standard normal stream for (seed, n, d)."""
    for offset, size, child in chunk_plan(n, seed, chunk_size):
        yield offset, np.random.default_rng(child).standard_normal((size, d))


def _as_rows(values: npt.ArrayLike, size: int) -> Matrix:
    """Shape integrand output as (size, k); scalars and constants are broadcast."""
    array = np.asarray(values, dtype=np.float64)
    if array.ndim == 0:
        return np.full((size, 1), float(array))
    if array.shape[0] != size:
        return np.broadcast_to(array.reshape(1, -1), (size, array.size))
    return array.reshape(size, -1)


def _chunk_moments(
    func: Integrand, d: int, offset: int, size: int, child: np.random.SeedSequence
) -> _Moments:
    inputs = np.random.default_rng(child).standard_normal((size, d))
    values = _as_rows(func(inputs), size)
    finite = np.isfinite(values).all(axis=1)
    if not finite.all():
        index = offset + int(np.flatnonzero(~finite)[0])
        msg = f"Integrand returned a non-finite value at sample {index}."
        logger.error(msg)
        raise EstimatorError(msg, sample_index=index)
    mean = values.mean(axis=0)
    return _Moments(count=size, mean=mean, m2=((values - mean) ** 2).sum(axis=0))


def _reduce(
    func: Integrand, d: int, n: int, seed: int, chunk_size: int, threads: int
) -> _Moments:
    if n < 2:
        msg = f"Monte Carlo estimation needs n >= 2, got {n}."
        logger.error(msg)
        raise DomainError(msg)
    plan = chunk_plan(n, seed, chunk_size)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda item: _chunk_moments(func, d, *item), plan))
    else:
        parts = [_chunk_moments(func, d, *item) for item in plan]
    total = _Moments(count=0, mean=np.zeros(0), m2=np.zeros(0))
    for part in parts:
        total = total.merge(part)
    logger.debug("Reduced %d samples in %d chunks (seed=%d).", n, len(plan), seed)
    return total


def estimate_vector(
    func: Integrand,
    d: int,
    n: int = DEFAULT_SAMPLES,
    seed: int = 0,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
) -> MCVectorEstimate:
    """Estimate E[f(x)] for an integrand mapping (n, d) inputs to (n, k) values."""
    moments = _reduce(func, d, n, seed, chunk_size, threads)
    variance = moments.m2 / (n - 1)
    return MCVectorEstimate(
        mean=moments.mean, std_err=np.sqrt(variance / n), n_samples=n, seed=seed
    )


def estimate(
    func: Integrand,
    d: int,
    n: int = DEFAULT_SAMPLES,
    seed: int = 0,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
) -> MCEstimate:
    """Estimate E[f(x)] for a scalar integrand evaluated on (n, d) input batches.

    Args:
        func: vectorized integrand returning one value per input row.
        d: input dimension.
        n: number of samples, at least 2.
        seed: root seed of the sample stream.
        chunk_size: samples per chunk; part of the reproducibility key.
        threads: worker threads for the chunk reduction.

    Returns:
        The sample mean and standard error.

    Raises:
        EstimatorError: the integrand produced a non-finite value.
    """
    result = estimate_vector(func, d, n, seed, chunk_size, threads)
    return MCEstimate(
        mean=float(result.mean[0]), std_err=float(result.std_err[0]), n_samples=n, seed=seed
    )


def estimate_paired(
    func: Integrand,
    other: Integrand,
    d: int,
    n: int = DEFAULT_SAMPLES,
    seed: int = 0,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
) -> MCEstimate:
    """Estimate E[f(x) - g(x)] with both integrands evaluated on the same samples."""

    def difference(inputs: Matrix) -> Vector:
        return np.asarray(func(inputs), dtype=np.float64) - np.asarray(
            other(inputs), dtype=np.float64
        )

    return estimate(difference, d, n, seed, chunk_size, threads)
