"""Stable softmax / log-softmax, derivatives, and spectral bounds of the Jacobian.

Notation: ``psi_i(u) = -log softmax(u)_i``; ``sigma_(1)`` and ``sigma_(D)``
are the smallest and largest coordinates of ``softmax(u)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import NumericError, ValidationError


def _check(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape[-1] < 2:
        raise ValidationError("softmax needs D >= 2")
    if not np.all(np.isfinite(u)):
        raise ValidationError("softmax input must be finite")
    return u


def softmax(u) -> np.ndarray:
    """Softmax along the last axis, max-shifted."""
    u = _check(u)
    z = np.exp(u - u.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def _softmax_unchecked(u: np.ndarray) -> np.ndarray:
    z = np.exp(u - u.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def log_softmax_loss(i: int, u) -> float:
    """``psi_i(u) = logsumexp(u) - u_i``."""
    u = _check(u)
    return float(logsumexp(u) - u[i])


def grad_psi(i: int, u) -> np.ndarray:
    g = softmax(u)
    g[i] -= 1.0
    return g


def jacobian_softmax(u) -> np.ndarray:
    """``Diag(sigma) - sigma sigma^T``; also the Hessian of every ``psi_i``."""
    s = softmax(u)
    return np.diag(s) - np.outer(s, s)


def orthonormal_complement_of_ones(D: int) -> np.ndarray:
    """``D x (D-1)`` matrix with orthonormal columns spanning the zero-sum subspace."""
    ones = np.ones((D, 1)) / math.sqrt(D)
    q, _ = np.linalg.qr(np.hstack([ones, np.eye(D)[:, : D - 1]]))
    return q[:, 1:]


@dataclass(frozen=True)
class SpectrumReport:
    lambda_min_exact: float
    lambda_max_exact: float
    lower_env: float
    upper_env: float
    kernel_value: float

    @property
    def sandwich_holds(self) -> bool:
        return (self.lower_env <= self.lambda_min_exact
                <= self.lambda_max_exact <= self.upper_env)


def spectrum_report(u) -> SpectrumReport:
    """Exact extreme eigenvalues of the Jacobian on the zero-sum subspace.

    The ones direction is deflated first so the structural zero eigenvalue
    is never taken for ``lambda_min``.
    """
    s = softmax(u)
    D = s.shape[0]
    J = np.diag(s) - np.outer(s, s)
    B = orthonormal_complement_of_ones(D)
    try:
        eig = np.linalg.eigvalsh(B.T @ J @ B)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    ones = np.ones(D) / math.sqrt(D)
    return SpectrumReport(
        lambda_min_exact=float(eig[0]),
        lambda_max_exact=float(eig[-1]),
        lower_env=float(D * s.min() ** 2),
        upper_env=float(D * s.max() ** 2),
        kernel_value=float(ones @ J @ ones),
    )


@dataclass(frozen=True)
class SoftmaxExtrema:
    min_value: float
    max_value: float
    argmin_point: np.ndarray
    argmax_point: np.ndarray


def softmax_extrema(D: int, rho: float) -> SoftmaxExtrema:
    """Closed-form extremes of ``sigma_i`` over the zero-sum ball of radius ``rho``.

    The minimum of ``sigma_1`` is attained at
    ``(-sqrt((D-1)/D) rho, rho/sqrt(D(D-1)), ..., rho/sqrt(D(D-1)))`` and the
    maximum at the negated point.
    """
    if D < 2:
        raise ValidationError("softmax extrema need D >= 2")
    if rho < 0:
        raise ValidationError("radius must be non-negative")
    k = math.sqrt(D / (D - 1))
    min_value = 1.0 / (1.0 + (D - 1) * math.exp(k * rho))
    max_value = 1.0 / (1.0 + (D - 1) * math.exp(-k * rho))
    argmin = np.full(D, rho / math.sqrt(D * (D - 1)))
    argmin[0] = -math.sqrt((D - 1) / D) * rho
    return SoftmaxExtrema(min_value, max_value, argmin, -argmin)


@dataclass(frozen=True)
class LipschitzConstants:
    softmax_lip: float
    jacobian_lip: float


def lipschitz_constants(rho: float, D: int) -> LipschitzConstants:
    """Local Lipschitz constants of softmax and its Jacobian on the zero-sum ball of radius ``rho``."""
    if D < 2 or rho < 0:
        raise ValidationError("need D >= 2 and rho >= 0")
    k = math.sqrt(D / (D - 1))
    return LipschitzConstants(
        softmax_lip=D / (D - 1) ** 2 * math.exp(2 * k * rho),
        jacobian_lip=2 * D ** 2 / (D - 1) ** 3 * math.exp(3 * k * rho),
    )


def quadratic_form_pairs(u, v) -> float:
    """``sum_{j<k} sigma_j sigma_k (v_k - v_j)^2``, equal to ``v^T J(u) v``."""
    s = softmax(u)
    v = np.asarray(v, dtype=float)
    diff = v[None, :] - v[:, None]
    return float(0.5 * np.sum(np.outer(s, s) * diff ** 2))
