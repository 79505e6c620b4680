"""Random and subspace initialization with exact nonnegative least squares norm fitting."""

from dataclasses import dataclass
from logging import getLogger
from typing import Optional, Tuple

import numpy as np
import numpy.typing as npt
from scipy import linalg

from ..errors import ConvergenceError, DomainError, EigenSolverError, NotPSDError
from .empirical import Dataset, sample_dataset
from .gauss_kernels import kernel_matrix
from .mc_oracle import estimate_vector
from .net_core import Matrix, StudentNetwork, TeacherNetwork, Vector

logger = getLogger(__name__)

PSD_TOLERANCE = 1e-8
KKT_TOLERANCE = 1e-8
# Coefficients at or below this are treated as zero by the active-set iteration.
NNLS_EPSILON = 1e-12
ITERATION_FACTOR = 10
DEFAULT_GRAM_SAMPLES = 100_000
MOMENT_CHUNK_SIZE = 8192


@dataclass(frozen=True)
class NNLSResult:
    """Minimizer of 1/2 z^T G z - b^T z over z >= 0."""

    z: Vector
    objective: float
    active_set: Tuple[int, ...]

    def kkt_violation(self, gram: Matrix, target: Vector) -> float:
        """Largest violation of the optimality conditions at z."""
        gradient = gram @ self.z - target
        positive = self.z > 0.0
        violations = [0.0]
        if positive.any():
            violations.append(float(np.abs(gradient[positive]).max()))
        if (~positive).any():
            violations.append(float(max(-gradient[~positive].min(), 0.0)))
        return max(violations)


@dataclass(frozen=True)
class MomentMatrix:
    """Symmetrized empirical moment matrix (1/N) sum_k y_k (x_k x_k^T - I)."""

    M_hat: Matrix
    N: int


def _check_psd(gram: Matrix) -> None:
    if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        msg = f"Gram matrix must be square, got shape {gram.shape}."
        logger.error(msg)
        raise DomainError(msg)
    if np.abs(gram - gram.T).max(initial=0.0) > PSD_TOLERANCE:
        msg = "Gram matrix is not symmetric."
        logger.error(msg)
        raise NotPSDError(msg)
    smallest = float(np.linalg.eigvalsh(gram)[0]) if gram.size else 0.0
    if smallest < -PSD_TOLERANCE:
        msg = f"Gram matrix is not PSD: smallest eigenvalue {smallest:.3g}."
        logger.error(msg)
        raise NotPSDError(msg)


def _passive_solve(gram: Matrix, target: Vector, passive: npt.NDArray[np.bool_]) -> Vector:
    solution = np.zeros_like(target)
    if passive.any():
        solution[passive] = np.linalg.lstsq(
            gram[np.ix_(passive, passive)], target[passive], rcond=None
        )[0]
    return solution


def nnls(gram: npt.ArrayLike, target: npt.ArrayLike) -> NNLSResult:
    """Lawson-Hanson active-set NNLS in Gram form (the fast variant of Bro and De Jong).

    Args:
        gram: symmetric PSD matrix G.
        target: vector b.

    Returns:
        The minimizer z >= 0 of 1/2 z^T G z - b^T z.

    Raises:
        NotPSDError: G is not symmetric PSD within tolerance.
        ConvergenceError: the iteration cap 10 m was exceeded.
    """
    gram = np.asarray(gram, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    _check_psd(gram)
    m = target.shape[0]
    cap = ITERATION_FACTOR * max(m, 1)
    passive = np.zeros(m, dtype=bool)
    z = np.zeros(m)
    dual = target.copy()
    iterations = 0
    while not passive.all() and dual[~passive].max() > NNLS_EPSILON:
        iterations += 1
        if iterations > cap:
            residual = float(dual[~passive].max())
            msg = f"NNLS did not converge in {cap} iterations (dual residual {residual:.3g})."
            logger.error(msg)
            raise ConvergenceError(msg, residual=residual)
        candidates = np.flatnonzero(~passive)
        passive[candidates[int(np.argmax(dual[candidates]))]] = True
        trial = _passive_solve(gram, target, passive)
        while passive.any() and (trial[passive] <= NNLS_EPSILON).any():
            iterations += 1
            blocked = passive & (trial <= NNLS_EPSILON)
            step = np.divide(
                z[blocked],
                z[blocked] - trial[blocked],
                out=np.zeros(int(blocked.sum())),
                where=(z[blocked] - trial[blocked]) > 0.0,
            )
            z = z + float(step.min()) * (trial - z)
            passive &= z > NNLS_EPSILON
            trial = _passive_solve(gram, target, passive)
        z = np.where(passive, trial, 0.0)
        dual = target - gram @ z
    result = NNLSResult(
        z=z,
        objective=float(0.5 * z @ gram @ z - target @ z),
        active_set=tuple(int(index) for index in np.flatnonzero(z > 0.0)),
    )
    violation = result.kkt_violation(gram, target)
    if violation > KKT_TOLERANCE * max(1.0, float(np.abs(target).max(initial=0.0))):
        logger.warning("NNLS KKT violation %.3g after %d iterations.", violation, iterations)
    logger.debug("NNLS solved m=%d in %d iterations.", m, iterations)
    return result


def norm_fitting_problem(
    teacher: TeacherNetwork,
    directions: Matrix,
    gram: str = "exact",
    gram_samples: int = DEFAULT_GRAM_SAMPLES,
    seed: int = 0,
) -> Tuple[Matrix, Vector]:
    """Gram matrix G_ij = E|w_i^T x||w_j^T x| and b_i = E[|w_i^T x| f*(x)].

    With gram="sampled" both are replaced by averages over a seeded dataset.
    """
    if gram == "exact":
        return (
            kernel_matrix(directions, directions),
            kernel_matrix(directions, teacher.neurons).sum(axis=1),
        )
    if gram == "sampled":
        data = sample_dataset(teacher, gram_samples, seed)
        features = np.abs(data.inputs @ directions.T)
        gram_matrix = features.T @ features / data.n
        return 0.5 * (gram_matrix + gram_matrix.T), features.T @ data.labels / data.n
    msg = f"Unknown Gram mode {gram!r}; expected 'exact' or 'sampled'."
    logger.error(msg)
    raise DomainError(msg)


def fit_norms(
    teacher: TeacherNetwork,
    directions: npt.ArrayLike,
    gram: str = "exact",
    gram_samples: int = DEFAULT_GRAM_SAMPLES,
    seed: int = 0,
) -> Tuple[StudentNetwork, NNLSResult]:
    """Solve the NNLS over output weights and rescale w_i' = sqrt(z_i / ||w_i||) w_i."""
    directions = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    gram_matrix, target = norm_fitting_problem(teacher, directions, gram, gram_samples, seed)
    result = nnls(gram_matrix, target)
    norms = np.linalg.norm(directions, axis=1)
    scale = np.sqrt(np.divide(result.z, norms, out=np.zeros_like(norms), where=norms > 0.0))
    return StudentNetwork(scale[:, None] * directions), result


def random_init(
    teacher: TeacherNetwork,
    m: int,
    seed: int,
    gram: str = "exact",
    gram_samples: int = DEFAULT_GRAM_SAMPLES,
) -> StudentNetwork:
    """Draw m standard normal directions and fit their norms by NNLS."""
    if m < 1:
        msg = f"Need at least one student neuron, got m={m}."
        logger.error(msg)
        raise DomainError(msg)
    directions = np.random.default_rng(seed).standard_normal((m, teacher.d))
    student, result = fit_norms(teacher, directions, gram, gram_samples, seed)
    logger.info("Random init: %d of %d neurons kept.", len(result.active_set), m)
    return student


def moment_matrix(data: Dataset, centered: bool = False) -> MomentMatrix:
    """M_hat = (1/N) sum_k y_k (x_k x_k^T - I), symmetrized.

    With ``centered`` the labels are centered first, giving
    (1/N) sum_k (y_k - y_bar) x_k x_k^T: the same expectation with a smaller variance.
    """
    if data.n < 1:
        msg = "Moment matrix needs at least one sample."
        logger.error(msg)
        raise DomainError(msg)
    weighted = (data.inputs * data.labels[:, None]).T @ data.inputs / data.n
    spread = data.inputs.T @ data.inputs / data.n if centered else np.eye(data.d)
    matrix = weighted - float(data.labels.mean()) * spread
    return MomentMatrix(M_hat=0.5 * (matrix + matrix.T), N=data.n)


def streamed_moment_matrix(
    teacher: TeacherNetwork, n: int, seed: int, threads: int = 1, centered: bool = False
) -> MomentMatrix:
    """M_hat over n teacher-labelled samples reduced chunk by chunk, never materializing them.

    A single sample has no chunked reduction and is materialized instead.
    """
    if n < 2:
        return moment_matrix(sample_dataset(teacher, n, seed), centered)
    d = teacher.d

    def integrand(inputs: Matrix) -> Matrix:
        labels = teacher.output(inputs)
        outer = (inputs[:, :, None] * inputs[:, None, :]).reshape(inputs.shape[0], d * d)
        return np.column_stack([labels[:, None] * outer, labels, outer])

    mean = estimate_vector(integrand, d, n, seed, MOMENT_CHUNK_SIZE, threads).mean
    weighted, label_mean = mean[: d * d].reshape(d, d), mean[d * d]
    spread = mean[d * d + 1 :].reshape(d, d) if centered else np.eye(d)
    matrix = weighted - label_mean * spread
    return MomentMatrix(M_hat=0.5 * (matrix + matrix.T), N=n)


def top_eigenvectors(matrix: npt.ArrayLike, r: int) -> Matrix:
    """Orthonormal top-r eigenvectors by eigenvalue magnitude, as columns.

    Columns are ordered by descending magnitude and signed so that their first
    nonzero component is positive.
    """
    symmetric = np.asarray(matrix, dtype=np.float64)
    symmetric = 0.5 * (symmetric + symmetric.T)
    if not 1 <= r <= symmetric.shape[0]:
        msg = f"Need 1 <= r <= d, got r={r} for d={symmetric.shape[0]}."
        logger.error(msg)
        raise DomainError(msg)
    try:
        values, vectors = np.linalg.eigh(symmetric)
    except np.linalg.LinAlgError as err:
        msg = f"Symmetric eigensolver failed: {err}"
        logger.error(msg)
        raise EigenSolverError(msg) from err
    order = np.argsort(-np.abs(values), kind="stable")[:r]
    top = vectors[:, order]
    for column in range(r):
        nonzero = np.flatnonzero(np.abs(top[:, column]) > NNLS_EPSILON)
        if nonzero.size and top[nonzero[0], column] < 0.0:
            top[:, column] *= -1.0
    return top


def subspace_init(
    teacher: TeacherNetwork,
    m: int,
    r: int,
    n: int,
    seed: int,
    gram: str = "exact",
    gram_samples: int = DEFAULT_GRAM_SAMPLES,
    moments: Optional[Matrix] = None,
    threads: int = 1,
    centered: bool = False,
) -> StudentNetwork:
    """Draw m neurons from N(0, Q Q^T) with Q the top-r eigenvectors of M_hat, then fit norms.

    Args:
        teacher: labels come from this network.
        m: number of student neurons.
        r: number of teacher neurons, assumed known.
        n: samples used for M_hat.
        seed: root seed of the data and the directions.
        gram: "exact" or "sampled" norm fitting.
        gram_samples: samples of the sampled Gram matrix.
        moments: use this matrix instead of an empirical M_hat.
        threads: worker threads of the streamed M_hat reduction.
        centered: center the labels of M_hat.

    Returns:
        The initialized student network.
    """
    if m < 1 or n < 1:
        msg = f"Need m >= 1 and N >= 1, got m={m}, N={n}."
        logger.error(msg)
        raise DomainError(msg)
    if moments is None:
        moments = streamed_moment_matrix(teacher, n, seed, threads, centered).M_hat
    basis = top_eigenvectors(moments, r)
    coordinates = np.random.default_rng([seed, 1]).standard_normal((m, r))
    student, result = fit_norms(teacher, coordinates @ basis.T, gram, gram_samples, seed)
    logger.info("Subspace init: %d of %d neurons kept.", len(result.active_set), m)
    return student


def principal_angle(basis: npt.ArrayLike, teacher: TeacherNetwork) -> float:
    """Largest principal angle between span(basis columns) and the teacher span."""
    return float(np.max(linalg.subspace_angles(np.asarray(basis), teacher.neurons.T)))
