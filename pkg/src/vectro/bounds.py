"""Closed-form constants for the Paragraph Vector robustness bound.

The admissibility threshold is doubly exponential in ``sigma_max(R)/alpha``;
it is evaluated in log space, with mpmath taking over once the inner
exponential leaves the float64 range.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Collection

import mpmath
import numpy as np

from .errors import NumericError, ValidationError
from .pv import PvModel, infer, pi_bound, q0_norm_bound
from .text import Document

SQRT2 = math.sqrt(2.0)
DEFAULT_ELL = 3.0


def _exp_or_inf(z: float) -> float:
    try:
        return math.exp(z)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class LipschitzProfile:
    Gamma_m1: float
    Gamma_0: float
    Gamma_1: float
    Gamma_2: float
    gamma_m1: float
    gamma_0: float
    gamma_1: float
    gamma_2: float


def _sigmas(model: PvModel) -> tuple[float, float]:
    smax, smin = model.sigma_max_R, model.sigma_min_R
    # same relative cutoff as the post-training check
    if not smin > 1e-12 * max(smax, 1e-300):
        raise NumericError(f"rank-deficient R: sigma_min(R) = {smin:.3e}")
    return smax, smin


def lipschitz_profile(model: PvModel, ratio: float, ell: float = DEFAULT_ELL) -> LipschitzProfile:
    """Local Lipschitz envelopes of the interpolated objective.

    ``ratio`` is ``|S|/T``; the perturbation-dependent constants are
    proportional to ``ell * nu * ratio``.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ValidationError("ratio |S|/T must lie in [0, 1]")
    smax, smin = _sigmas(model)
    Pi = pi_bound(model)
    D, nu = model.config.D, model.config.nu
    r2 = 2 * SQRT2
    return LipschitzProfile(
        Gamma_m1=D * _exp_or_inf(r2 * Pi) / smin ** 2,
        Gamma_0=4 * ell * nu * smax * ratio,
        Gamma_1=8 * _exp_or_inf(6 * SQRT2 * Pi) * smax ** 3 / (D - 1),
        Gamma_2=4 * ell * nu * Pi * _exp_or_inf(4 * SQRT2 * Pi) * smax ** 2 * ratio / (D - 1),
        gamma_m1=r2 * smax,
        gamma_0=0.0,
        gamma_1=3 * SQRT2 * smax,
        gamma_2=r2 * smax,
    )


@dataclass(frozen=True)
class Doc2VecConstants:
    A: float
    B: float
    C: float


def doc2vec_constants(model: PvModel, ell: float = DEFAULT_ELL) -> Doc2VecConstants:
    smax, smin = _sigmas(model)
    Pi = pi_bound(model)
    D, nu = model.config.D, model.config.nu
    kappa2 = smax ** 2 / smin ** 2
    A = 4 * ell * nu * D * _exp_or_inf(2 * SQRT2 * Pi) * smax / smin ** 2
    B = 64 * ell * nu * D * kappa2 * _exp_or_inf(10 * SQRT2 * Pi) * (kappa2 + Pi / (D - 1))
    return Doc2VecConstants(A, B, 5 * SQRT2 * smax)


@dataclass(frozen=True)
class AdmissibleRatio:
    """Largest admissible ``|S|/T``.

    ``value`` is the float64 result and is 0 when it underflows; ``log_value``
    keeps the exact natural log (an mpmath number) in every regime.
    """

    value: float
    log_value: mpmath.mpf

    @property
    def vacuous(self) -> bool:
        return self.value == 0.0

    @property
    def log10_text(self) -> str:
        return mpmath.nstr(self.log_value / mpmath.log(10), 8)

    def admits(self, ratio: float) -> bool:
        if ratio <= 0:
            return True
        return mpmath.log(ratio) <= self.log_value

    def __float__(self) -> float:
        return self.value


def admissible_ratio(model: PvModel, alpha: float | None = None,
                     ell: float = DEFAULT_ELL) -> AdmissibleRatio:
    a = model.config.alpha if alpha is None else alpha
    if not a > 0:
        raise ValidationError("alpha must be > 0")
    k = doc2vec_constants(model, ell)
    smax = model.sigma_max_R
    inner = mpmath.mpf(k.C) * SQRT2 * smax / a
    log_value = -mpmath.log(2 * k.B) - 2 * (mpmath.mpf(k.A) * k.C + 1) * mpmath.exp(inner)
    value = float(mpmath.exp(log_value)) if log_value > -800 else 0.0
    return AdmissibleRatio(value, log_value)


@dataclass(frozen=True)
class DocBoundReport:
    Pi: float
    sigma_min_R: float
    sigma_max_R: float
    A: float
    B: float
    C: float
    admissible_ratio: float
    log10_admissible_ratio: str
    vacuous: bool
    ratio_actual: float
    admissible: bool
    q0_norm: float
    q0_norm_worst: float
    L: float
    bound: float
    L_worst: float
    bound_worst: float
    ell: float
    alpha: float
    s_size: int
    T: int

    @property
    def status(self) -> str:
        if self.admissible:
            return "admissible"
        return "envelope vacuous" if self.vacuous else "not admissible"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["status"] = self.status
        return {k: (repr(v) if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in out.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def doc2vec_bound(model: PvModel, x: Document, S: int | Collection[int],
                  alpha: float | None = None, ell: float = DEFAULT_ELL,
                  q0_norm: float | None = None) -> DocBoundReport:
    """Evaluate ``2 A exp(C ||q0||) |S|/T`` for ``x`` and a perturbation of size ``|S|``.

    ``||q0||`` is measured by inference unless given; the report also
    carries the variant using the a-priori bound ``sqrt(2) sigma_max / alpha``.
    """
    a = model.config.alpha if alpha is None else alpha
    s = S if isinstance(S, int) else len(S)
    if s < 0 or s > x.T:
        raise ValidationError(f"|S|={s} outside [0, T={x.T}]")
    k = doc2vec_constants(model, ell)
    adm = admissible_ratio(model, a, ell)
    if q0_norm is None:
        q0_norm = float(np.linalg.norm(infer(model, x, alpha=a).q))
    q0_worst = q0_norm_bound(model, a)
    ratio = s / x.T
    L = 2 * k.A * _exp_or_inf(k.C * q0_norm)
    L_worst = 2 * k.A * _exp_or_inf(k.C * q0_worst)
    return DocBoundReport(
        Pi=pi_bound(model), sigma_min_R=model.sigma_min_R, sigma_max_R=model.sigma_max_R,
        A=k.A, B=k.B, C=k.C,
        admissible_ratio=adm.value, log10_admissible_ratio=adm.log10_text,
        vacuous=adm.vacuous, ratio_actual=ratio, admissible=adm.admits(ratio),
        q0_norm=q0_norm, q0_norm_worst=q0_worst,
        L=L, bound=L * ratio if s else 0.0,
        L_worst=L_worst, bound_worst=L_worst * ratio if s else 0.0,
        ell=ell, alpha=a, s_size=s, T=x.T,
    )


# ---------------------------------------------------------------- Gronwall envelope

@dataclass(frozen=True)
class GronwallParams:
    a: float
    b: float
    c: float
    q0_norm: float = 0.0

    @classmethod
    def from_profile(cls, p: LipschitzProfile, q0_norm: float) -> "GronwallParams":
        return cls(
            a=p.Gamma_m1 * p.Gamma_0,
            b=2 * p.Gamma_m1 * (p.Gamma_0 * p.Gamma_m1 * p.Gamma_1 + p.Gamma_2),
            c=max(p.gamma_m1 + p.gamma_0 + p.gamma_1, p.gamma_2),
            q0_norm=q0_norm,
        )

    def condition_holds(self) -> bool:
        """``2b < exp(-2c(||q0|| + a exp(c ||q0||)))``; always true when ``c = 0``."""
        if self.c == 0:
            return True
        expo = -2 * self.c * (self.q0_norm + self.a * _exp_or_inf(self.c * self.q0_norm))
        return 2 * self.b < (math.exp(expo) if expo > -745 else 0.0)


@dataclass(frozen=True)
class Envelope:
    value: float
    applicable: bool

    def __float__(self) -> float:
        return self.value


def gronwall_envelope(params: GronwallParams, mu: float) -> Envelope:
    """``2 mu a exp(c ||q0||)`` if ``c > 0``, ``mu a exp(b)`` if ``c = 0``."""
    if not 0.0 <= mu <= 1.0:
        raise ValidationError(f"mu={mu} outside [0, 1]")
    if params.c == 0:
        return Envelope(mu * params.a * math.exp(params.b), True)
    return Envelope(2 * mu * params.a * _exp_or_inf(params.c * params.q0_norm),
                    params.condition_holds())


@dataclass(frozen=True)
class ConstantsConsistency:
    a_over_A_ratio: float
    b_over_B_ratio: float
    c_minus_C: float


def constants_consistency(model: PvModel, ratio: float, ell: float = DEFAULT_ELL) -> ConstantsConsistency:
    """Compare the generic Gronwall parameters with ``A``, ``B``, ``C``.

    Expected: ``a = A ratio`` and ``c = C`` exactly. The ``b`` term is
    ``<= B ratio`` up to a factor ``D/(D-1)`` in its first summand.
    """
    if not ratio > 0:
        raise ValidationError("consistency check needs ratio > 0")
    g = GronwallParams.from_profile(lipschitz_profile(model, ratio, ell), 0.0)
    k = doc2vec_constants(model, ell)
    return ConstantsConsistency(g.a / (k.A * ratio), g.b / (k.B * ratio), g.c - k.C)
