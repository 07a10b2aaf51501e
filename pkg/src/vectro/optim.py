"""Unconstrained smooth minimization for small dense problems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import ConvergenceError, NumericError


@dataclass(frozen=True)
class MinimizeResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    iterations: int


def gradient_descent(fun_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
                     x0: np.ndarray, tol: float = 1e-8, max_iter: int = 100_000,
                     c1: float = 1e-4, shrink: float = 0.5) -> MinimizeResult:
    """Gradient descent with Armijo backtracking.

    The trial step of each line search is the Barzilai-Borwein step from the
    previous iterate; the Armijo test then guarantees monotone decrease.
    Stops when ``||grad|| <= tol``.
    """
    x = np.array(x0, dtype=float)
    f, g = fun_and_grad(x)
    gnorm = float(np.linalg.norm(g))
    step = 1.0
    for it in range(max_iter):
        if gnorm <= tol:
            return MinimizeResult(x, f, gnorm, it)
        t = step
        while True:
            x_new = x - t * g
            f_new, g_new = fun_and_grad(x_new)
            if f_new <= f - c1 * t * gnorm ** 2:
                break
            # below roundoff in f the Armijo test is noise; fall back to the gradient norm
            if (t * gnorm ** 2 < 1e-13 * max(1.0, abs(f))
                    and np.linalg.norm(g_new) < gnorm and f_new <= f + 1e-14 * max(1.0, abs(f))):
                break
            t *= shrink
            if t < 1e-20:
                raise ConvergenceError("line search failed", best=x, grad_norm=gnorm,
                                       iterations=it)
        s = x_new - x
        yv = g_new - g
        sy = float(s @ yv)
        step = float(s @ s) / sy if sy > 0 else t * 2.0
        x, f, g = x_new, f_new, g_new
        gnorm = float(np.linalg.norm(g))
    if gnorm <= tol:
        return MinimizeResult(x, f, gnorm, max_iter)
    raise ConvergenceError(f"no convergence after {max_iter} iterations "
                           f"(||grad|| = {gnorm:.3e})", best=x, grad_norm=gnorm,
                           iterations=max_iter)


def spd_solve(H: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``H v = b`` for symmetric positive-definite ``H`` by Cholesky.

    One retry with ``1e-12`` added to the diagonal before giving up.
    """
    try:
        return cho_solve(cho_factor(H, lower=True), b)
    except LinAlgError:
        pass
    try:
        return cho_solve(cho_factor(H + 1e-12 * np.eye(H.shape[0]), lower=True), b)
    except LinAlgError as exc:
        raise NumericError("matrix is not positive definite") from exc


def newton(fun: Callable, grad: Callable, hess: Callable, x0: np.ndarray,
           tol: float = 1e-8, max_iter: int = 50) -> MinimizeResult:
    """Damped Newton with Armijo backtracking on a strongly convex objective."""
    x = np.array(x0, dtype=float)
    f = fun(x)
    g = grad(x)
    gnorm = float(np.linalg.norm(g))
    for it in range(max_iter):
        if gnorm <= tol:
            return MinimizeResult(x, f, gnorm, it)
        p = -spd_solve(hess(x), g)
        t = 1.0
        slope = float(g @ p)
        if -slope < 1e-13 * max(1.0, abs(f)):
            # predicted decrease is below roundoff in f; Armijo can't tell steps apart
            t = 0.0
        while t > 1e-12:
            x_new = x + t * p
            f_new = fun(x_new)
            if f_new <= f + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            # close to optimum the decrease drowns in roundoff; take the full step
            x_new = x + p
            f_new = fun(x_new)
        x, f = x_new, f_new
        g = grad(x)
        gnorm = float(np.linalg.norm(g))
    if gnorm <= tol:
        return MinimizeResult(x, f, gnorm, max_iter)
    raise ConvergenceError(f"Newton did not converge (||grad|| = {gnorm:.3e})", best=x,
                           grad_norm=gnorm, iterations=max_iter)
