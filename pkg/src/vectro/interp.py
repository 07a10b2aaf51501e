"""Linear interpolation between the inference problems of two documents.

``Psi(mu, q) = (1 - mu) F(q) + mu G(q) + (alpha/2)||q||^2`` where ``F`` and
``G`` are the data terms of ``x`` and of its perturbation ``x~``. The
minimizer ``q(mu)`` follows ``q' = -(H + alpha I)^{-1} d_mu grad Psi``.
Only the affected positions (target or context changed) depend on ``mu``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, TrajectoryError, ValidationError
from .optim import gradient_descent, newton, spd_solve
from .pv import PvModel, SoftmaxSumObjective, doc_terms, infer
from .softmax import _softmax_unchecked
from .text import Document


def affected_positions(model: PvModel, x: Document, xt: Document) -> np.ndarray:
    """Valid positions whose target or context token changed."""
    if x.T != xt.T:
        raise ValidationError("documents must have equal length")
    terms = doc_terms(model, x)
    pos = terms.positions
    diff = x.token_ids != xt.token_ids
    if model.kind == "pvdbow":
        return pos[diff[pos]]
    nu = model.config.nu
    # a window [t - nu, t + nu] touches a changed position
    csum = np.concatenate([[0], np.cumsum(diff)])
    hit = csum[pos + nu + 1] - csum[pos - nu] > 0
    return pos[hit]


@dataclass
class InterpProblem:
    model: PvModel
    x: Document
    xt: Document
    alpha: float | None = None
    affected: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.alpha is None:
            self.alpha = self.model.config.alpha
        if not self.alpha > 0:
            raise ValidationError("alpha must be > 0")
        self.affected = affected_positions(self.model, self.x, self.xt)
        self._F = doc_terms(self.model, self.x)
        self._G = doc_terms(self.model, self.xt)
        pos = self._F.positions
        self._mask = np.isin(pos, self.affected)
        self._T = self.x.T
        D = self.model.config.D
        R = self.model.R
        tF, tG = self._F.targets, self._G.targets
        m = self._mask
        self._c_common = np.bincount(tF[~m], minlength=D).astype(float)
        self._c_F = np.bincount(tF[m], minlength=D).astype(float)
        self._c_G = np.bincount(tG[m], minlength=D).astype(float)
        if self.model.kind == "pvdbow":
            self._pi_common = self._F.pis
            self._w_common = self._F.weights
            self._pi_F = self._pi_G = np.zeros((0, D))
            self._off_common = self._off_F = self._off_G = 0.0
        else:
            idx = np.arange(pos.size)
            self._pi_common = self._F.pis[~m]
            self._w_common = np.ones(int((~m).sum()))
            self._pi_F = self._F.pis[m]
            self._pi_G = self._G.pis[m]
            self._off_common = self._F.pis[idx[~m], tF[~m]].sum()
            self._off_F = self._F.pis[idx[m], tF[m]].sum()
            self._off_G = self._G.pis[idx[m], tG[m]].sum()
        self._R = R

    @property
    def T(self) -> int:
        return self._T

    @property
    def n_affected(self) -> int:
        return int(self.affected.size)

    def objective(self, mu: float) -> SoftmaxSumObjective:
        """``Psi(mu, .)`` including the ``alpha`` term."""
        if not 0.0 <= mu <= 1.0:
            raise ValidationError(f"mu={mu} outside [0, 1]")
        nF, nG = self._pi_F.shape[0], self._pi_G.shape[0]
        pis = np.vstack([self._pi_common, self._pi_F, self._pi_G])
        weights = np.concatenate([self._w_common, np.full(nF, 1.0 - mu), np.full(nG, mu)])
        counts = self._c_common + (1.0 - mu) * self._c_F + mu * self._c_G
        offset = self._off_common + (1.0 - mu) * self._off_F + mu * self._off_G
        return SoftmaxSumObjective(self._R, pis, weights, counts, offset, self._T, self.alpha)

    def dmu_grad(self, q) -> np.ndarray:
        """``d/dmu grad Psi``; independent of ``mu``."""
        q = np.asarray(q, dtype=float)
        acc = self._c_F - self._c_G
        if self.model.kind != "pvdbow" and self._pi_F.shape[0]:
            Rq = self._R @ q
            acc = acc - (_softmax_unchecked(self._pi_F + Rq).sum(axis=0)
                         - _softmax_unchecked(self._pi_G + Rq).sum(axis=0))
        return self._R.T @ acc / self._T


def psi_lin_grad(problem: InterpProblem, mu: float, q) -> np.ndarray:
    """``grad Psi(mu, q) + alpha q``."""
    return problem.objective(mu).grad(np.asarray(q, dtype=float))


def psi_lin_hessian(problem: InterpProblem, mu: float, q) -> np.ndarray:
    """Hessian of the data part; callers add ``alpha I``."""
    return problem.objective(mu).hessian(np.asarray(q, dtype=float), include_alpha=False)


def dmu_grad(problem: InterpProblem, q) -> np.ndarray:
    return problem.dmu_grad(q)


def phi_lin(problem: InterpProblem, mu: float, q) -> np.ndarray:
    """Velocity field ``-(H + alpha I)^{-1} d_mu grad Psi`` via Cholesky."""
    q = np.asarray(q, dtype=float)
    H = problem.objective(mu).hessian(q, include_alpha=True)
    return -spd_solve(H, problem.dmu_grad(q))


def minimize_at(problem: InterpProblem, mu: float, q_init=None, tol: float = 1e-8):
    """Direct minimization of ``Psi(mu, .)`` (first-order, independent of the ODE)."""
    obj = problem.objective(mu)
    q0 = np.zeros(problem.model.config.d) if q_init is None else q_init
    return gradient_descent(obj.value_and_grad, q0, tol=tol)


@dataclass(frozen=True)
class Trajectory:
    mu_grid: np.ndarray
    q_points: np.ndarray
    residuals: np.ndarray
    endpoint_gap: float = float("nan")

    @property
    def displacements(self) -> np.ndarray:
        return np.linalg.norm(self.q_points - self.q_points[0], axis=1)

    @property
    def sup_displacement(self) -> float:
        return float(self.displacements.max())

    @property
    def q_norms(self) -> np.ndarray:
        return np.linalg.norm(self.q_points, axis=1)


def sup_displacement(traj: Trajectory) -> float:
    return traj.sup_displacement


def _polish(problem: InterpProblem, mu: float, q: np.ndarray, tol: float) -> np.ndarray:
    obj = problem.objective(mu)
    try:
        return newton(obj.value, obj.grad, obj.hessian, q, tol=tol, max_iter=20).x
    except ConvergenceError as exc:
        return exc.best


def trace(problem: InterpProblem, steps: int = 64, polish: bool = True, tol: float = 1e-8,
          fail_residual: float = 1e-4, q_start=None, compare_endpoint: bool = True) -> Trajectory:
    """Integrate ``q' = phi_lin(mu, q)`` from ``q(0) = infer(x)`` with RK4.

    With ``polish`` each grid point is pulled back onto ``grad Psi = 0`` by
    Newton steps. A residual above ``fail_residual`` raises
    :class:`TrajectoryError`.
    """
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    if q_start is None:
        q = infer(problem.model, problem.x, alpha=problem.alpha, tol=tol).q
    else:
        q = np.asarray(q_start, dtype=float)
    if polish:
        q = _polish(problem, 0.0, q, tol)
    grid = np.linspace(0.0, 1.0, steps + 1)
    points = [q.copy()]
    res = [float(np.linalg.norm(psi_lin_grad(problem, 0.0, q)))]
    for a, b in zip(grid[:-1], grid[1:]):
        h = b - a
        k1 = phi_lin(problem, a, q)
        k2 = phi_lin(problem, a + h / 2, q + h / 2 * k1)
        k3 = phi_lin(problem, a + h / 2, q + h / 2 * k2)
        k4 = phi_lin(problem, b, q + h * k3)
        q = q + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if polish:
            q = _polish(problem, b, q, tol)
        r = float(np.linalg.norm(psi_lin_grad(problem, b, q)))
        if not np.isfinite(r) or (polish and r > fail_residual):
            raise TrajectoryError(f"trajectory validation failed at mu={b:.4f} (residual {r:.3e})")
        points.append(q.copy())
        res.append(r)
    gap = float("nan")
    if compare_endpoint:
        q1 = infer(problem.model, problem.xt, alpha=problem.alpha, tol=tol).q
        gap = float(np.linalg.norm(q - q1))
    return Trajectory(grid, np.array(points), np.array(res), gap)
