"""Paragraph Vector models (PVDM-mean, PVDM-concat, PVDBOW).

Logits at position ``t`` are ``y_t = R (P h_t + q) = pi_t + R q``. For
PVDBOW there is no ``P`` and ``pi_t = 0``. Positions are 0-based; a PVDM
position ``t`` is used only when its whole window ``t-nu .. t+nu`` fits and
``t <= T - nu - 2`` (the last full-context position is dropped, as in the
original training sum). PVDBOW predicts every token of the document.
"""

from __future__ import annotations

import logging
import math
import struct
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .errors import (BadMagicError, DimensionMismatchError, NumericError,
                     TruncatedFileError, UnsupportedVersionError, ValidationError)
from .optim import MinimizeResult, gradient_descent
from .softmax import _softmax_unchecked
from .text import Corpus, Document

log = logging.getLogger(__name__)

KINDS = ("pvdm-mean", "pvdm-concat", "pvdbow")
_KIND_CODE = {k: i for i, k in enumerate(KINDS)}


@dataclass(frozen=True)
class PvConfig:
    kind: str
    D: int
    d: int
    nu: int = 2
    alpha: float = 0.1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if self.D < 2 or self.d < 1:
            raise ValidationError("need D >= 2 and d >= 1")
        if self.nu < 1:
            raise ValidationError("context half-width nu must be >= 1")
        if not self.alpha > 0:
            raise ValidationError("alpha must be > 0")
        if self.d >= self.D:
            warnings.warn(f"embedding dimension d={self.d} is not below D={self.D}", stacklevel=3)

    @property
    def p_cols(self) -> int:
        return {"pvdm-mean": self.D, "pvdm-concat": 2 * self.nu * self.D, "pvdbow": 0}[self.kind]

    @property
    def min_length(self) -> int:
        return 2 * self.nu + 2 if self.kind != "pvdbow" else 1


@dataclass(frozen=True, eq=False)
class PvModel:
    config: PvConfig
    P: np.ndarray | None
    R: np.ndarray
    Q: np.ndarray
    loss_history: tuple = field(default=(), repr=False)

    def __post_init__(self):
        cfg = self.config
        if cfg.kind == "pvdbow":
            if self.P is not None:
                raise DimensionMismatchError("PVDBOW has no projection matrix")
        elif self.P is None or self.P.shape != (cfg.d, cfg.p_cols):
            raise DimensionMismatchError(f"P must be {cfg.d}x{cfg.p_cols}")
        if self.R.shape != (cfg.D, cfg.d):
            raise DimensionMismatchError(f"R must be {cfg.D}x{cfg.d}")
        if self.Q.ndim != 2 or self.Q.shape[0] != cfg.d:
            raise DimensionMismatchError(f"Q must have {cfg.d} rows")

    @property
    def kind(self) -> str:
        return self.config.kind

    @cached_property
    def singular_values_R(self) -> np.ndarray:
        return np.linalg.svd(self.R, compute_uv=False)

    @property
    def sigma_max_R(self) -> float:
        return float(self.singular_values_R[0])

    @property
    def sigma_min_R(self) -> float:
        return float(self.singular_values_R[-1])

    def with_alpha(self, alpha: float) -> "PvModel":
        cfg = PvConfig(self.config.kind, self.config.D, self.config.d, self.config.nu, alpha)
        return PvModel(cfg, self.P, self.R, self.Q, self.loss_history)


# ---------------------------------------------------------------- contexts

def valid_positions(config: PvConfig, T: int) -> np.ndarray:
    if config.kind == "pvdbow":
        return np.arange(T)
    return np.arange(config.nu, T - config.nu - 1)


@dataclass(frozen=True)
class Context:
    positions: np.ndarray
    tokens: np.ndarray


def context(x: Document, t: int, nu: int) -> Context:
    """Window ``t-nu .. t-1, t+1 .. t+nu`` around 0-based position ``t``."""
    if t - nu < 0 or t + nu >= x.T:
        raise ValidationError(f"context out of range: position {t} with nu={nu} and T={x.T}")
    pos = np.concatenate([np.arange(t - nu, t), np.arange(t + 1, t + nu + 1)])
    return Context(pos, x.token_ids[pos])


def _context_matrix(ids: np.ndarray, positions: np.ndarray, nu: int) -> np.ndarray:
    offs = np.concatenate([np.arange(-nu, 0), np.arange(1, nu + 1)])
    return ids[positions[:, None] + offs[None, :]]


def _p_columns(kind: str, ctx: np.ndarray, D: int) -> np.ndarray:
    """Column indices of ``P`` selected by each context (rows of ``ctx``)."""
    if kind == "pvdm-concat":
        return ctx + D * np.arange(ctx.shape[-1])
    return ctx


def hidden(model: PvModel, x: Document, t: int) -> np.ndarray:
    cfg = model.config
    if cfg.kind == "pvdbow":
        if not 0 <= t < x.T:
            raise ValidationError(f"context out of range: position {t} with T={x.T}")
        return np.zeros(0)
    c = context(x, t, cfg.nu).tokens
    h = np.zeros(cfg.p_cols)
    if cfg.kind == "pvdm-mean":
        np.add.at(h, c, 1.0 / (2 * cfg.nu))
    else:
        h[_p_columns(cfg.kind, c, cfg.D)] = 1.0
    return h


def projected_context(model: PvModel, x: Document, t: int) -> np.ndarray:
    """``pi_t = R P h_t``."""
    if model.kind == "pvdbow":
        hidden(model, x, t)
        return np.zeros(model.config.D)
    return model.R @ (model.P @ hidden(model, x, t))


def logits(model: PvModel, x: Document, t: int, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (model.config.d,):
        raise DimensionMismatchError(f"q must have length {model.config.d}")
    return projected_context(model, x, t) + model.R @ q


def _batch_Ph(model: PvModel, ids: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """``P h_t`` for every position, shape ``(n, d)``."""
    cfg = model.config
    ctx = _context_matrix(ids, positions, cfg.nu)
    cols = _p_columns(cfg.kind, ctx, cfg.D)
    Ph = model.P.T[cols].sum(axis=1)
    if cfg.kind == "pvdm-mean":
        Ph /= 2 * cfg.nu
    return Ph


# ---------------------------------------------------------------- objective

@dataclass(frozen=True)
class DocTerms:
    """Per-document data of the inference sum.

    ``pis`` holds one row per position (``pi_t``) with ``weights`` 1; for
    PVDBOW all rows coincide and are collapsed to a single zero row whose
    weight is the number of positions.
    """

    T: int
    positions: np.ndarray
    targets: np.ndarray
    pis: np.ndarray
    weights: np.ndarray


def doc_terms(model: PvModel, x: Document) -> DocTerms:
    cfg = model.config
    if x.T < cfg.min_length:
        raise ValidationError(f"document of length {x.T} is shorter than {cfg.min_length}")
    x.validate(cfg.D)
    pos = valid_positions(cfg, x.T)
    targets = x.token_ids[pos]
    if cfg.kind == "pvdbow":
        pis = np.zeros((1, cfg.D))
        weights = np.array([float(pos.size)])
    else:
        pis = _batch_Ph(model, x.token_ids, pos) @ model.R.T
        weights = np.ones(pos.size)
    return DocTerms(x.T, pos, targets, pis, weights)


class SoftmaxSumObjective:
    """``(1/T) [sum_r w_r lse(pi_r + R q) - sum_j c_j (R q)_j] - const + (alpha/2)||q||^2``.

    Every objective of the inference and interpolation problems has this
    form: rows ``pi_r`` with weights ``w_r`` and target counts ``c``.
    """

    def __init__(self, R, pis, weights, counts, target_offset: float, T: int, alpha: float):
        self.R = R
        self.pis = pis
        self.weights = np.asarray(weights, dtype=float)
        self.counts = np.asarray(counts, dtype=float)
        self.target_offset = float(target_offset)
        self.T = T
        self.alpha = alpha
        self._Rc = R.T @ self.counts

    @classmethod
    def from_terms(cls, R, terms: DocTerms, alpha: float) -> "SoftmaxSumObjective":
        D = R.shape[0]
        counts = np.bincount(terms.targets, minlength=D)
        if terms.pis.shape[0] == terms.targets.shape[0]:
            offset = terms.pis[np.arange(terms.targets.size), terms.targets].sum()
        else:
            offset = 0.0
        return cls(R, terms.pis, terms.weights, counts, offset, terms.T, alpha)

    def _y(self, q):
        return self.pis + self.R @ q

    def value(self, q) -> float:
        y = self._y(q)
        lse = logsumexp(y, axis=1)
        rq = self.R @ q
        f = (self.weights @ lse - self.counts @ rq - self.target_offset) / self.T
        return float(f + 0.5 * self.alpha * (q @ q))

    def grad(self, q) -> np.ndarray:
        s = _softmax_unchecked(self._y(q))
        return self.R.T @ (self.weights @ s) / self.T - self._Rc / self.T + self.alpha * q

    def value_and_grad(self, q):
        y = self._y(q)
        lse = logsumexp(y, axis=1)
        s = np.exp(y - lse[:, None])
        rq = self.R @ q
        f = (self.weights @ lse - self.counts @ rq - self.target_offset) / self.T
        g = self.R.T @ (self.weights @ s) / self.T - self._Rc / self.T + self.alpha * q
        return float(f + 0.5 * self.alpha * (q @ q)), g

    def hessian(self, q, include_alpha: bool = True) -> np.ndarray:
        """``R^T (1/T sum_r w_r (Diag(s_r) - s_r s_r^T)) R`` (+ ``alpha I``)."""
        s = _softmax_unchecked(self._y(q))
        sR = s @ self.R
        diag = self.weights @ s
        H = (self.R.T * diag) @ self.R - (sR.T * self.weights) @ sR
        H /= self.T
        H = 0.5 * (H + H.T)
        if include_alpha:
            H += self.alpha * np.eye(H.shape[0])
        return H


def objective(model: PvModel, x: Document, alpha: float | None = None) -> SoftmaxSumObjective:
    a = model.config.alpha if alpha is None else alpha
    if not a > 0:
        raise ValidationError("alpha must be > 0")
    return SoftmaxSumObjective.from_terms(model.R, doc_terms(model, x), a)


@dataclass(frozen=True)
class InferenceResult:
    q: np.ndarray
    objective: float
    grad_norm: float
    iterations: int


def infer(model: PvModel, x: Document, q_init=None, alpha: float | None = None,
          tol: float = 1e-8, max_iter: int = 100_000) -> InferenceResult:
    """Embedding of ``x``: the minimizer of ``F(q) + (alpha/2)||q||^2``."""
    obj = objective(model, x, alpha)
    q0 = np.zeros(model.config.d) if q_init is None else np.asarray(q_init, dtype=float)
    res: MinimizeResult = gradient_descent(obj.value_and_grad, q0, tol=tol, max_iter=max_iter)
    return InferenceResult(res.x, res.fun, res.grad_norm, res.iterations)


# ---------------------------------------------------------------- model-level bounds

def pi_bound(model: PvModel) -> float:
    """``2 nu sigma_max(R) max_i ||P[:, i]||``; zero for PVDBOW.

    Valid with or without the ``1/(2 nu)`` averaging factor of PVDM-mean.
    """
    if model.kind == "pvdbow":
        return 0.0
    col = float(np.linalg.norm(model.P, axis=0).max())
    return 2 * model.config.nu * model.sigma_max_R * col


def q0_norm_bound(model: PvModel, alpha: float | None = None) -> float:
    a = model.config.alpha if alpha is None else alpha
    if not a > 0:
        raise ValidationError("alpha must be > 0")
    return math.sqrt(2) * model.sigma_max_R / a


def hessian_eigen_lower_bound(model: PvModel, q_norm: float) -> float:
    """``exp(-2 sqrt2 Pi) sigma_min(R)^2 exp(-2 sqrt2 sigma_max(R) ||q||) / D``."""
    r2 = 2 * math.sqrt(2)
    return (math.exp(-r2 * pi_bound(model)) * model.sigma_min_R ** 2
            * math.exp(-r2 * model.sigma_max_R * q_norm) / model.config.D)


def normalize_R(model: PvModel) -> PvModel:
    """Subtract the mean row of ``R`` so every column sums to zero.

    Softmax outputs are unchanged since each logit vector moves along ``1``.
    """
    R = model.R - model.R.mean(axis=0, keepdims=True)
    return PvModel(model.config, model.P, R, model.Q, model.loss_history)


# ---------------------------------------------------------------- training

@dataclass
class TermGradients:
    """Gradient of one term ``psi_target(R (P h + q))`` in compact form.

    ``dR = outer(g, z)``, ``dq = gz`` and ``dP[:, cols] += col_scale * gz``.
    """

    loss: float
    g: np.ndarray
    z: np.ndarray
    gz: np.ndarray
    cols: np.ndarray
    col_scale: float


def term_gradients(kind: str, P, R, q, ctx_tokens, target: int, nu: int) -> TermGradients:
    D = R.shape[0]
    if kind == "pvdbow":
        cols = np.zeros(0, dtype=np.int64)
        scale = 0.0
        z = q
    else:
        cols = _p_columns(kind, np.asarray(ctx_tokens), D)
        scale = 1.0 / (2 * nu) if kind == "pvdm-mean" else 1.0
        z = P[:, cols].sum(axis=1) * scale + q
    y = R @ z
    m = y.max()
    e = np.exp(y - m)
    se = e.sum()
    loss = float(math.log(se) + m - y[target])
    g = e / se
    g[target] -= 1.0
    gz = R.T @ g
    return TermGradients(loss, g, z, gz, cols, scale)


def dense_term_gradients(kind: str, P, R, q, ctx_tokens, target: int, nu: int):
    """Full ``(loss, dP, dR, dq)``; used to check :func:`term_gradients`."""
    tg = term_gradients(kind, P, R, q, ctx_tokens, target, nu)
    dP = None
    if P is not None:
        dP = np.zeros_like(P)
        np.add.at(dP.T, tg.cols, tg.col_scale * tg.gz)
    return tg.loss, dP, np.outer(tg.g, tg.z), tg.gz


def corpus_loss(model: PvModel, Q: np.ndarray | None = None, corpus: Corpus | None = None,
                docs=None) -> float:
    """Mean over documents of ``(1/T_i) sum_t psi(pi_t + R q_i)`` (no alpha term)."""
    Q = model.Q if Q is None else Q
    docs = list(corpus) if docs is None else docs
    total = 0.0
    for i, x in docs:
        obj = SoftmaxSumObjective.from_terms(model.R, doc_terms(model, x), 1.0)
        q = Q[:, i]
        total += obj.value(q) - 0.5 * (q @ q)
    return float(total / len(docs))


def _init_params(config: PvConfig, n_docs: int, rng: np.random.Generator):
    lim = 0.5 / config.d
    P = None
    if config.kind != "pvdbow":
        P = rng.uniform(-lim, lim, size=(config.d, config.p_cols))
    R = rng.uniform(-lim, lim, size=(config.D, config.d))
    Qt = np.zeros((n_docs, config.d))
    return P, R, Qt


def train(corpus: Corpus, config: PvConfig, seed=0, epochs: int = 10, lr: float = 0.05,
          min_lr_ratio: float = 1e-4, normalize: bool = True) -> PvModel:
    """Plain SGD over (epoch, document, position), learning rate decaying linearly.

    Documents too short for a single valid position are skipped (their
    column of ``Q`` stays zero). ``loss_history[k]`` is the corpus loss
    after ``k`` epochs.
    """
    if config.D != corpus.dictionary.size:
        raise DimensionMismatchError(f"config D={config.D} but dictionary has {corpus.dictionary.size}")
    if epochs < 0:
        raise ValidationError("epochs must be >= 0")
    rng = np.random.default_rng(seed)
    P, R, Qt = _init_params(config, len(corpus), rng)

    usable = []
    for i, x in enumerate(corpus):
        if x.T < config.min_length:
            warnings.warn(f"document {i} of length {x.T} skipped (needs {config.min_length})",
                          stacklevel=2)
        else:
            usable.append((i, x))
    if not usable:
        raise ValidationError("all documents are too short to train on")

    plan = []
    for i, x in usable:
        pos = valid_positions(config, x.T)
        ctx = (_context_matrix(x.token_ids, pos, config.nu) if config.kind != "pvdbow"
               else np.zeros((pos.size, 0), dtype=np.int64))
        plan.append((i, x.token_ids[pos], ctx))
    steps_per_epoch = sum(t.size for _, t, _ in plan)
    total_steps = max(1, epochs * steps_per_epoch)
    floor = lr * min_lr_ratio

    def snapshot():
        return PvModel(config, None if P is None else P.copy(), R.copy(), Qt.T.copy())

    history = [corpus_loss(snapshot(), docs=usable)]
    step = 0
    kind, nu = config.kind, config.nu
    for epoch in range(epochs):
        for i, targets, ctx in plan:
            q = Qt[i]
            for k in range(targets.size):
                eta = max(floor, lr * (1.0 - step / total_steps)) if lr > 0 else 0.0
                step += 1
                tg = term_gradients(kind, P, R, q, ctx[k], int(targets[k]), nu)
                R -= eta * np.outer(tg.g, tg.z)
                q -= eta * tg.gz
                if P is not None:
                    np.subtract.at(P.T, tg.cols, eta * tg.col_scale * tg.gz)
        loss = corpus_loss(snapshot(), docs=usable)
        history.append(loss)
        log.info("epoch %d loss %.6f", epoch + 1, loss)
        if not math.isfinite(loss):
            raise NumericError(f"training diverged at epoch {epoch + 1}")

    model = PvModel(config, P, R, np.ascontiguousarray(Qt.T), tuple(history))
    if normalize:
        model = normalize_R(model)
        smin = model.sigma_min_R
        if not smin > 1e-12 * max(model.sigma_max_R, 1e-300):
            raise NumericError(f"R is rank deficient (sigma_min = {smin:.3e})")
    return model


# ---------------------------------------------------------------- persistence

MAGIC = b"PVEC"
VERSION = 1
_HEADER = struct.Struct("<4sIBQQId")
_DIMS = struct.Struct("<QQ")


def save(model: PvModel, path) -> None:
    cfg = model.config
    chunks = [_HEADER.pack(MAGIC, VERSION, _KIND_CODE[cfg.kind], cfg.D, cfg.d, cfg.nu, cfg.alpha)]
    mats = ([model.P] if model.P is not None else []) + [model.R, model.Q]
    for m in mats:
        m = np.ascontiguousarray(m, dtype="<f8")
        chunks.append(_DIMS.pack(*m.shape))
        chunks.append(m.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load(path) -> PvModel:
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError("bad magic: not a PVEC model file")
    if len(data) < _HEADER.size:
        raise TruncatedFileError("truncated header")
    _, version, code, D, d, nu, alpha = _HEADER.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported model version {version}")
    if code >= len(KINDS):
        raise BadMagicError(f"unknown model kind code {code}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            cfg = PvConfig(KINDS[code], D, d, nu, alpha)
        except ValidationError as exc:
            raise DimensionMismatchError(f"invalid header: {exc}") from None
    off = _HEADER.size

    def read_matrix(expected_rows, expected_cols):
        nonlocal off
        if len(data) < off + _DIMS.size:
            raise TruncatedFileError("truncated matrix header")
        rows, cols = _DIMS.unpack_from(data, off)
        off += _DIMS.size
        if rows != expected_rows or (expected_cols is not None and cols != expected_cols):
            raise DimensionMismatchError(
                f"dimension mismatch: matrix {rows}x{cols}, header implies "
                f"{expected_rows}x{expected_cols if expected_cols is not None else '*'}")
        nbytes = rows * cols * 8
        if len(data) < off + nbytes:
            raise TruncatedFileError("truncated matrix data")
        m = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=off).reshape(rows, cols)
        off += nbytes
        return m.astype(float)

    P = read_matrix(d, cfg.p_cols) if cfg.kind != "pvdbow" else None
    R = read_matrix(D, d)
    Q = read_matrix(d, None)
    if off != len(data):
        raise DimensionMismatchError(f"dimension mismatch: {len(data) - off} trailing bytes")
    return PvModel(cfg, P, R, Q)
