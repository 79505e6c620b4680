"""Closed-form expectations over standard Gaussian inputs.

Every closed form below is derived in the plane spanned by its two arguments. With
theta in [0, pi] the signed angle between them:

    K(u, v)    = E[|u^T x| |v^T x|]
               = |u||v| (2/pi) (sin(theta) + (pi/2 - theta) cos(theta))
    G(u; v)    = E[sgn(u^T x) |v^T x| x]
               = |v| (2/pi) (sin(theta) u_bar + (pi/2 - theta) v_bar)
    Scov(a, b) = E[x x^T sgn(a^T x) sgn(b^T x)]
               = (1 - 2 theta/pi) I
                 + (2/pi) sin(theta) cos(theta) (e1 e1^T - e2 e2^T)
                 + (2/pi) sin(theta)^2 (e1 e2^T + e2 e1^T)

where (e1, e2) is the in-plane orthonormal frame with e1 = a_bar and
b_bar = cos(theta) e1 + sin(theta) e2. G is the gradient of K in its first argument and
Scov is the mixed second derivative of K.

Angles are taken as theta = 2 atan2(|a_bar - b_bar|, |a_bar + b_bar|), which keeps full
relative accuracy for nearly collinear pairs.
"""

import math
from dataclasses import dataclass
from logging import getLogger
from typing import NamedTuple, Tuple

import numpy as np
import numpy.typing as npt
from cachetools.func import lru_cache
from scipy import integrate, special

from ..errors import DomainError
from .net_core import Matrix, Vector

logger = getLogger(__name__)

TWO_OVER_PI = 2.0 / math.pi
# Pairs with sin(theta) below this are treated as collinear.
COLLINEAR_TOLERANCE = 1e-12
OWEN_T_TOLERANCE = 1e-10
# Upper bound on the entries of one (rows, Q, d) block of pairwise differences.
PAIR_BLOCK_ENTRIES = 4_000_000


class SlabProbability(NamedTuple):
    """P(|alpha^T x| <= delta) for a unit alpha, with its elementary bounds."""

    exact: float
    lower: float
    upper: float


@dataclass(frozen=True)
class HermiteCoefficients:
    """Coefficients of |x| in the normalized probabilists' Hermite basis."""

    coeffs: Vector

    @property
    def degree(self) -> int:
        return int(self.coeffs.shape[0]) - 1


class PlaneFrame(NamedTuple):
    """Orthonormal in-plane frame of a pair of directions."""

    e1: Vector
    e2: Vector
    theta: float


class PairAngles(NamedTuple):
    """Signed angles between two families of rows, with the row norms and directions."""

    theta: Matrix
    norms_a: Vector
    norms_b: Vector
    bar_a: Matrix
    bar_b: Matrix


def _nonzero(vector: npt.ArrayLike, name: str) -> Tuple[Vector, float]:
    array = np.asarray(vector, dtype=np.float64)
    norm = float(np.linalg.norm(array))
    if norm == 0.0:
        msg = f"{name} must be a nonzero vector."
        logger.error(msg)
        raise DomainError(msg)
    return array, norm


def _check_dims(u: Vector, v: Vector) -> None:
    if u.shape != v.shape:
        msg = f"Dimension mismatch: {u.shape} vs {v.shape}."
        logger.error(msg)
        raise DomainError(msg)


def _directions(rows: Matrix) -> Tuple[Vector, Matrix]:
    norms = np.linalg.norm(rows, axis=1)
    bars = np.divide(rows, norms[:, None], out=np.zeros_like(rows), where=norms[:, None] > 0.0)
    return norms, bars


def pair_angles(units_a: npt.ArrayLike, units_b: npt.ArrayLike) -> PairAngles:
    """Signed angles between all row pairs; pairs involving a zero row get pi/2."""
    units_a = np.atleast_2d(np.asarray(units_a, dtype=np.float64))
    units_b = np.atleast_2d(np.asarray(units_b, dtype=np.float64))
    if units_a.shape[1] != units_b.shape[1]:
        msg = f"Dimension mismatch: {units_a.shape[1]} vs {units_b.shape[1]}."
        logger.error(msg)
        raise DomainError(msg)
    norms_a, bar_a = _directions(units_a)
    norms_b, bar_b = _directions(units_b)
    theta = np.empty((bar_a.shape[0], bar_b.shape[0]))
    step = max(1, PAIR_BLOCK_ENTRIES // max(1, bar_b.size))
    for start in range(0, bar_a.shape[0], step):
        block = bar_a[start : start + step, None, :]
        difference = np.linalg.norm(block - bar_b[None, :, :], axis=2)
        total = np.linalg.norm(block + bar_b[None, :, :], axis=2)
        theta[start : start + step] = 2.0 * np.arctan2(difference, total)
    theta[(norms_a == 0.0)[:, None] | (norms_b == 0.0)[None, :]] = math.pi / 2
    return PairAngles(theta=theta, norms_a=norms_a, norms_b=norms_b, bar_a=bar_a, bar_b=bar_b)


def abs_kernel_profile(theta: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """K between unit vectors as a function of their signed angle."""
    theta = np.asarray(theta, dtype=np.float64)
    return TWO_OVER_PI * (np.sin(theta) + (math.pi / 2 - theta) * np.cos(theta))


def kernel_matrix(units_a: npt.ArrayLike, units_b: npt.ArrayLike) -> Matrix:
    """Matrix of K(a_i, b_j) over all row pairs."""
    angles = pair_angles(units_a, units_b)
    return np.outer(angles.norms_a, angles.norms_b) * abs_kernel_profile(angles.theta)


def abs_pair_expectation(u: npt.ArrayLike, v: npt.ArrayLike) -> float:
    """E[|u^T x| |v^T x|] for x ~ N(0, I)."""
    u_arr = np.asarray(u, dtype=np.float64)
    v_arr = np.asarray(v, dtype=np.float64)
    _check_dims(u_arr, v_arr)
    return float(kernel_matrix(u_arr[None, :], v_arr[None, :])[0, 0])


def abs_pair_gradient(u: npt.ArrayLike, v: npt.ArrayLike) -> Vector:
    """G(u; v) = E[sgn(u^T x) |v^T x| x], the gradient of K(u, v) in u."""
    u_arr, _ = _nonzero(u, "u")
    v_arr = np.asarray(v, dtype=np.float64)
    _check_dims(u_arr, v_arr)
    return mixture_kernel_gradient(u_arr[None, :], v_arr[None, :], np.ones(1))[0]


def mixture_kernel_gradient(units: Matrix, others: Matrix, coefficients: Vector) -> Matrix:
    """Rows sum_i c_i G(a_j; u_i) for every nonzero row a_j of units (zero rows give 0)."""
    others = np.atleast_2d(np.asarray(others, dtype=np.float64))
    angles = pair_angles(units, others)
    radial = (np.sin(angles.theta) * (coefficients * angles.norms_b)[None, :]).sum(axis=1)
    angular = ((math.pi / 2 - angles.theta) * coefficients[None, :]) @ others
    result = TWO_OVER_PI * (radial[:, None] * angles.bar_a + angular)
    result[angles.norms_a == 0.0] = 0.0
    return result


def plane_frame(a: npt.ArrayLike, b: npt.ArrayLike) -> PlaneFrame:
    """Frame (e1, e2) with e1 = a_bar and b_bar = cos(theta) e1 + sin(theta) e2.

    For collinear pairs e2 is zero and theta is snapped to 0 or pi.
    """
    a_arr, _ = _nonzero(a, "a")
    b_arr, _ = _nonzero(b, "b")
    _check_dims(a_arr, b_arr)
    angles = pair_angles(a_arr, b_arr)
    theta = float(angles.theta[0, 0])
    e1, b_bar = angles.bar_a[0], angles.bar_b[0]
    if math.sin(theta) < COLLINEAR_TOLERANCE:
        return PlaneFrame(e1=e1, e2=np.zeros_like(e1), theta=0.0 if theta < 1.0 else math.pi)
    perpendicular = b_bar - float(e1 @ b_bar) * e1
    return PlaneFrame(e1=e1, e2=perpendicular / float(np.linalg.norm(perpendicular)), theta=theta)


def sign_cov_block(a: npt.ArrayLike, b: npt.ArrayLike) -> Matrix:
    """Scov(a, b) = E[x x^T sgn(a^T x) sgn(b^T x)]."""
    e1, e2, theta = plane_frame(a, b)
    sin, cos = math.sin(theta), math.cos(theta)
    if not e2.any():
        sin = 0.0
    block = TWO_OVER_PI * sin * cos * (np.outer(e1, e1) - np.outer(e2, e2))
    block += TWO_OVER_PI * sin * sin * (np.outer(e1, e2) + np.outer(e2, e1))
    block += (1.0 - theta / (math.pi / 2)) * np.eye(e1.shape[0])
    return block


def sign_cov_bilinear(
    a: npt.ArrayLike, b: npt.ArrayLike, left: npt.ArrayLike, right: npt.ArrayLike
) -> float:
    """left^T Scov(a, b) right without forming the d x d block."""
    e1, e2, theta = plane_frame(a, b)
    left_arr = np.asarray(left, dtype=np.float64)
    right_arr = np.asarray(right, dtype=np.float64)
    sin, cos = math.sin(theta), math.cos(theta)
    if not e2.any():
        sin = 0.0
    l1, l2 = float(left_arr @ e1), float(left_arr @ e2)
    r1, r2 = float(right_arr @ e1), float(right_arr @ e2)
    in_plane = sin * cos * (l1 * r1 - l2 * r2) + sin * sin * (l1 * r2 + l2 * r1)
    return (1.0 - theta / (math.pi / 2)) * float(left_arr @ right_arr) + TWO_OVER_PI * in_plane


def sign_cov_bilinear_matrix(
    signs_a: Matrix, left: Matrix, signs_b: Matrix, right: Matrix
) -> Matrix:
    """Matrix of left_p^T Scov(a_p, b_q) right_q over all row pairs (p, q).

    Zero sign rows contribute zero rows or columns.
    """
    angles = pair_angles(signs_a, signs_b)
    sin = np.sin(angles.theta)
    collinear = sin < COLLINEAR_TOLERANCE
    theta = np.where(collinear, np.where(angles.theta < 1.0, 0.0, math.pi), angles.theta)
    sin = np.where(collinear, 0.0, sin)
    cos = np.where(collinear, np.where(theta == 0.0, 1.0, -1.0), np.cos(theta))
    # Projections on e1 = a_bar and on sin(theta) e2 = b_bar - cos(theta) a_bar.
    left_a = (left * angles.bar_a).sum(axis=1)[:, None]
    right_a = angles.bar_a @ right.T
    left_perp = left @ angles.bar_b.T - cos * left_a
    right_perp = (right * angles.bar_b).sum(axis=1)[None, :] - cos * right_a
    safe_sin = np.where(collinear, 1.0, sin)
    in_plane = np.where(
        collinear, 0.0, cos * (sin * left_a * right_a - left_perp * right_perp / safe_sin)
    )
    in_plane = in_plane + sin * (left_a * right_perp + left_perp * right_a)
    value = (1.0 - theta / (math.pi / 2)) * (left @ right.T) + TWO_OVER_PI * in_plane
    value[(angles.norms_a == 0.0)[:, None] | (angles.norms_b == 0.0)[None, :]] = 0.0
    return value


def signed_angle(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    """Angle in [0, pi] between a and b (sign-sensitive)."""
    a_arr, _ = _nonzero(a, "a")
    b_arr, _ = _nonzero(b, "b")
    _check_dims(a_arr, b_arr)
    return float(pair_angles(a_arr, b_arr).theta[0, 0])


def mismatch_probability(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    """P(sgn(a^T x) != sgn(b^T x))."""
    return signed_angle(a, b) / math.pi


def mismatch_second_moment(beta: npt.ArrayLike, w: npt.ArrayLike) -> float:
    """E[(beta^T x)^2 I{sgn(beta^T x) != sgn(w^T x)}]."""
    phi = signed_angle(beta, w)
    norm_sq = float(np.sum(np.asarray(beta, dtype=np.float64) ** 2))
    return norm_sq / math.pi * (phi - math.sin(phi) * math.cos(phi))


def slab_probability(delta: float) -> SlabProbability:
    """P(|alpha^T x| <= delta) for unit alpha, with the sqrt(2/pi)-type bounds."""
    if delta < 0.0:
        msg = f"Slab half-width must be nonnegative, got {delta}."
        logger.error(msg)
        raise DomainError(msg)
    upper = math.sqrt(2.0 / math.pi) * delta
    return SlabProbability(
        exact=float(special.erf(delta / math.sqrt(2.0))),
        lower=upper * math.exp(-(delta**2) / 2.0),
        upper=upper,
    )


def hermite_value(k: int, x: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Normalized probabilists' Hermite polynomial h_k = He_k / sqrt(k!)."""
    if k < 0:
        msg = f"Hermite index must be nonnegative, got {k}."
        logger.error(msg)
        raise DomainError(msg)
    x_arr = np.asarray(x, dtype=np.float64)
    previous, current = np.zeros_like(x_arr), np.ones_like(x_arr)
    for n in range(k):
        previous, current = current, (x_arr * current - math.sqrt(n) * previous) / math.sqrt(
            n + 1
        )
    return current


def hermite_series(coeffs: npt.ArrayLike, x: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Evaluate sum_k c_k h_k(x)."""
    coeffs_arr = np.asarray(coeffs, dtype=np.float64)
    x_arr = np.asarray(x, dtype=np.float64)
    previous, current = np.zeros_like(x_arr), np.ones_like(x_arr)
    total = coeffs_arr[0] * current
    for n in range(1, coeffs_arr.shape[0]):
        previous, current = current, (x_arr * current - math.sqrt(n - 1) * previous) / math.sqrt(
            n
        )
        total = total + coeffs_arr[n] * current
    return total


def hermite_abs_coefficient(k: int) -> float:
    """k-th coefficient of |x| in the h_k basis; log-space for large k."""
    if k < 0:
        msg = f"Hermite index must be nonnegative, got {k}."
        logger.error(msg)
        raise DomainError(msg)
    if k % 2 == 1:
        return 0.0
    if k == 0:
        return math.sqrt(2.0 / math.pi)
    if k == 2:
        return math.sqrt(1.0 / math.pi)
    odd = k - 3
    # log((k-3)!!) for odd k-3
    log_double_factorial = (
        special.gammaln(odd + 1)
        - (odd - 1) / 2 * math.log(2.0)
        - special.gammaln((odd + 1) / 2)
    )
    log_magnitude = 0.5 * (math.log(2.0 / math.pi) - special.gammaln(k + 1)) + log_double_factorial
    sign = -1.0 if (k // 2 - 1) % 2 else 1.0
    return sign * math.exp(log_magnitude)


@lru_cache(maxsize=64)
def hermite_abs_coeffs(max_index: int) -> HermiteCoefficients:
    """Coefficients sigma_0..sigma_L of |x|."""
    if max_index < 0:
        msg = f"Maximum Hermite index must be nonnegative, got {max_index}."
        logger.error(msg)
        raise DomainError(msg)
    coeffs = np.array([hermite_abs_coefficient(k) for k in range(max_index + 1)])
    coeffs.setflags(write=False)
    return HermiteCoefficients(coeffs=coeffs)


def owen_t(x: float, a: float) -> float:
    """Owen's T function by adaptive quadrature of its defining integral."""

    def integrand(t: float) -> float:
        return math.exp(-(x**2) * (1.0 + t**2) / 2.0) / (1.0 + t**2)

    if a == 0.0:
        return 0.0
    value, _ = integrate.quad(
        integrand, 0.0, a, epsabs=OWEN_T_TOLERANCE, epsrel=OWEN_T_TOLERANCE, limit=200
    )
    return value / (2.0 * math.pi)


def owen_h(tau: float, phi: float) -> float:
    """Slab function h(tau, phi).

    h = 4 T(tau, cot phi) - 1 + 2 phi / pi + tau / sqrt(2 pi) erf(tau cot phi / sqrt 2).
    """
    cot = math.cos(phi) / math.sin(phi)
    return (
        4.0 * owen_t(tau, cot)
        - 1.0
        + 2.0 * phi / math.pi
        + tau / math.sqrt(2.0 * math.pi) * float(special.erf(tau * cot / math.sqrt(2.0)))
    )


def slab_test_value(tau: float) -> float:
    """g(tau) = E[|x_1| ; |x_1| <= tau] / P(|x_1| <= tau), the slab mean of |x_1|."""
    if tau < 0.0:
        msg = f"Slab half-width must be nonnegative, got {tau}."
        logger.error(msg)
        raise DomainError(msg)
    if tau == 0.0:
        return 0.0
    return (
        math.sqrt(2.0 / math.pi)
        * -math.expm1(-(tau**2) / 2.0)
        / float(special.erf(tau / math.sqrt(2.0)))
    )
