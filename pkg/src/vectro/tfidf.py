"""TF-IDF transform and its Hamming-robustness bounds.

Two scales appear in the bounds. ``tfidf`` returns frequencies ``m_j / T``
times IDF. The normalized-TF-IDF bound and the cosine lower bound are stated on
the multiplicity scale ``m_j * v_j``, which is ``T`` times the frequency
vector; :func:`multiplicity_norm` gives that norm.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .text import Corpus, Document


@dataclass(frozen=True)
class IdfTable:
    """Inverse document frequencies over a dictionary.

    ``v[j] = log(N / df[j])``. Tokens never seen get ``+inf`` and tokens present
    in every document get ``0``; both are unusable for scoring.
    """

    v: np.ndarray
    df: np.ndarray
    corpus_size: int
    smooth: bool = False

    @property
    def D(self) -> int:
        return self.v.shape[0]

    @property
    def usable(self) -> np.ndarray:
        return np.isfinite(self.v) & (self.v > 0)

    @property
    def idf_max(self) -> float:
        finite = self.v[np.isfinite(self.v)]
        return float(finite.max()) if finite.size else math.nan

    def save_csv(self, path, tokens=None) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["token", "df", "idf"])
            for j in range(self.D):
                w.writerow([tokens[j] if tokens is not None else j + 1,
                            int(self.df[j]), repr(float(self.v[j]))])


def fit_idf(corpus: Corpus, smooth: bool = False) -> IdfTable:
    """Document frequencies over ``corpus``.

    ``smooth=True`` switches to ``log((1 + N) / (1 + df)) + 1`` for
    comparison runs against smoothed implementations.
    """
    D = corpus.dictionary.size
    N = len(corpus)
    df = np.zeros(D, dtype=np.int64)
    for doc in corpus:
        df[np.unique(doc.token_ids)] += 1
    if smooth:
        v = np.log((1.0 + N) / (1.0 + df)) + 1.0
    else:
        with np.errstate(divide="ignore"):
            v = np.log(N / df.astype(float))
    v.setflags(write=False)
    df.setflags(write=False)
    return IdfTable(v, df, N, smooth)


def multiplicities(x: Document, D: int) -> np.ndarray:
    return np.bincount(x.token_ids, minlength=D)


def _check_usable(x: Document, idf: IdfTable) -> None:
    present = np.unique(x.token_ids)
    v = idf.v[present]
    if np.any(v == 0):
        raise ValidationError("zero IDF violates v_j > 0 assumption")
    if not np.all(np.isfinite(v)):
        raise ValidationError("token with zero document frequency has no finite IDF")


def tfidf(x: Document, idf: IdfTable) -> np.ndarray:
    """Non-normalized TF-IDF: component j is ``(m_j / T) * v_j``."""
    if x.T < 1:
        raise ValidationError("TF-IDF of an empty document is undefined")
    _check_usable(x, idf)
    out = np.zeros(idf.D)
    m = multiplicities(x, idf.D)
    nz = m > 0
    out[nz] = m[nz] / x.T * idf.v[nz]
    return out


def normalized_tfidf(x: Document, idf: IdfTable) -> np.ndarray:
    phi = tfidf(x, idf)
    norm = np.linalg.norm(phi)
    if norm == 0:
        raise ValidationError("cannot normalize a zero TF-IDF vector")
    return phi / norm


def multiplicity_norm(x: Document, idf: IdfTable) -> float:
    """``|| (m_j v_j)_j ||``, i.e. ``T * ||tfidf(x)||``."""
    return float(x.T * np.linalg.norm(tfidf(x, idf)))


def to_sparse_lines(vec: np.ndarray) -> str:
    """``index:value`` lines, 1-based index, non-zero entries only."""
    nz = np.flatnonzero(vec)
    return "".join(f"{j + 1}:{float(vec[j])!r}\n" for j in nz)


def from_sparse_lines(text: str, D: int) -> np.ndarray:
    out = np.zeros(D)
    for line in text.splitlines():
        if line.strip():
            j, val = line.split(":")
            out[int(j) - 1] = float(val)
    return out


@dataclass(frozen=True)
class TfidfBoundInputs:
    m_max: int
    idf_max: float
    idf_min: float
    D_local: int
    T: int


def bound_inputs(x: Document, idf: IdfTable) -> TfidfBoundInputs:
    """Statistics of the base document ``x`` (never of its perturbation)."""
    _check_usable(x, idf)
    m = multiplicities(x, idf.D)
    present = np.flatnonzero(m)
    return TfidfBoundInputs(
        m_max=int(m.max()),
        idf_max=idf.idf_max,
        idf_min=float(idf.v[present].min()),
        D_local=int(present.size),
        T=x.T,
    )


@dataclass(frozen=True)
class TaggedBound:
    """A bound value together with whether its hypothesis held."""

    value: float
    precondition_ok: bool

    def __float__(self) -> float:
        return self.value


def tfidf_bound(inputs: TfidfBoundInputs, s: int) -> float:
    return 4.0 * inputs.m_max * inputs.idf_max * s / inputs.T


def precondition_threshold(inputs: TfidfBoundInputs, norm_x: float) -> float:
    """Largest ``|S|`` allowed by the normalized-TF-IDF and cosine results."""
    return norm_x / (4.0 * inputs.m_max * inputs.idf_max)


def normalized_tfidf_bound(inputs: TfidfBoundInputs, s: int, norm_x: float) -> TaggedBound:
    """``4 sqrt(m_max idf_max) D(x)^{1/4} idf_min^{-1/2} sqrt(|S|/T)``.

    ``norm_x`` is on the multiplicity scale (see :func:`multiplicity_norm`).
    The value is always computed; ``precondition_ok`` is False when
    ``|S|`` exceeds :func:`precondition_threshold`.
    """
    value = (4.0 * math.sqrt(inputs.m_max * inputs.idf_max) * inputs.D_local ** 0.25
             / math.sqrt(inputs.idf_min) * math.sqrt(s / inputs.T))
    return TaggedBound(value, s <= precondition_threshold(inputs, norm_x))


def cosine_lower_bound(inputs: TfidfBoundInputs, s: int, norm_x: float) -> TaggedBound:
    value = 1.0 - 8.0 * inputs.m_max * inputs.idf_max * s / norm_x
    return TaggedBound(value, s <= precondition_threshold(inputs, norm_x))


@dataclass(frozen=True)
class NormLowerBound:
    frequency: float
    multiplicity: float


def tfidf_norm_lower_bound(inputs: TfidfBoundInputs) -> NormLowerBound:
    """Lower bound on ``||tfidf(x)||`` (frequency scale) and on its multiplicity-scale twin."""
    freq = inputs.idf_min / math.sqrt(inputs.D_local)
    return NormLowerBound(freq, inputs.T * freq)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
