"""Perturbation sweeps, slope fits and reports.

A sweep varies either the document length ``T`` (fixed number of
replacements) or the number of replacements ``|S|`` (fixed ``T``), and for
each grid point records the largest embedding displacement seen over random
perturbations next to the matching closed-form bound. Every repetition
draws from its own generator seeded by ``(seed, grid index, repetition
index)``, so results do not depend on the number of worker threads.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import bounds, concat, pv, tfidf
from .errors import NumericError, ValidationError
from .text import Corpus, Document, PerturbationSpec, perturb, prefix

VECTORIZERS = ("concat", "tfidf", "tfidf-normalized", "pv")
MODES = ("length", "count")
CSV_COLUMNS = ("vectorizer", "mode", "T", "s_size", "sup_diff", "bound", "precond_ok", "seed")


@dataclass(frozen=True)
class SweepConfig:
    vectorizer: str
    mode: str
    grid: tuple[int, ...]
    k_replacements: int = 5
    T: int | None = None
    repetitions: int = 50
    seed: int = 0
    alpha: float | None = None
    ell: float = bounds.DEFAULT_ELL
    embed_dim: int = 16
    smooth_idf: bool = False

    def __post_init__(self):
        if self.vectorizer not in VECTORIZERS:
            raise ValidationError(f"unknown vectorizer {self.vectorizer!r}")
        if self.mode not in MODES:
            raise ValidationError(f"unknown sweep mode {self.mode!r}")
        grid = tuple(int(g) for g in self.grid)
        object.__setattr__(self, "grid", grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("sweep grid must be non-empty and strictly increasing")
        if grid[0] < (1 if self.mode == "length" else 0):
            raise ValidationError("grid values must be positive")
        if self.repetitions < 1:
            raise ValidationError("repetitions must be >= 1")

    @property
    def tag(self) -> str:
        return self.vectorizer


@dataclass(frozen=True)
class SweepRecord:
    vectorizer: str
    mode: str
    T: int
    s_size: int
    sup_diff: float
    bound: float
    precond_ok: bool
    seed: int


class _Embedder:
    """Vectorizer state shared by all repetitions of a sweep (read-only)."""

    def __init__(self, cfg: SweepConfig, corpus: Corpus, model: pv.PvModel | None, T_max: int):
        self.cfg = cfg
        self.D = corpus.dictionary.size
        self.model = model
        self.replacement_pool = np.arange(self.D)
        if cfg.vectorizer == "concat":
            table = concat.TokenEmbeddingTable.random_dense(self.D, cfg.embed_dim, cfg.seed)
            self.concat_cfg = concat.ConcatConfig(table, concat.PositionalEmbedding.one_hot(T_max))
        elif cfg.vectorizer.startswith("tfidf"):
            self.idf = tfidf.fit_idf(corpus, smooth=cfg.smooth_idf)
            # replacements must keep the transform defined
            self.replacement_pool = np.flatnonzero(self.idf.usable)
        else:
            if model is None:
                raise ValidationError("a trained model is required for pv sweeps")
            if model.config.D != self.D:
                raise ValidationError("model and corpus dictionaries differ in size")
            self.alpha = model.config.alpha if cfg.alpha is None else cfg.alpha

    def positions(self, T: int) -> np.ndarray:
        if self.cfg.vectorizer == "pv":
            return pv.valid_positions(self.model.config, T)
        return np.arange(T)

    def embed(self, x: Document, warm=None) -> np.ndarray:
        v = self.cfg.vectorizer
        if v == "concat":
            return concat.vectorize(self.concat_cfg, x)
        if v == "tfidf":
            return tfidf.tfidf(x, self.idf)
        if v == "tfidf-normalized":
            return tfidf.normalized_tfidf(x, self.idf)
        return pv.infer(self.model, x, q_init=warm, alpha=self.alpha).q

    def bound(self, x: Document, base_vec: np.ndarray, s: int) -> tuple[float, bool]:
        v = self.cfg.vectorizer
        if v == "concat":
            return concat.concat_bound(self.concat_cfg, s), True
        if v.startswith("tfidf"):
            inputs = tfidf.bound_inputs(x, self.idf)
            if v == "tfidf":
                return tfidf.tfidf_bound(inputs, s), True
            tb = tfidf.normalized_tfidf_bound(inputs, s, tfidf.multiplicity_norm(x, self.idf))
            return tb.value, tb.precondition_ok
        rep = bounds.doc2vec_bound(self.model, x, s, alpha=self.alpha, ell=self.cfg.ell,
                                   q0_norm=float(np.linalg.norm(base_vec)))
        return rep.bound, rep.admissible


def _base_document(cfg: SweepConfig, corpus: Corpus, need: int) -> Document:
    for doc in corpus:
        if doc.T >= need:
            return doc
    raise ValidationError(f"no document of length >= {need} for grid point {need}")


def _repetition(emb: _Embedder, x: Document, base_vec, s: int, positions, rng) -> float:
    if s == 0:
        return 0.0
    idx = np.sort(rng.choice(positions, size=s, replace=False))
    rep = emb.replacement_pool[rng.integers(0, emb.replacement_pool.size, size=s)]
    xt = perturb(x, PerturbationSpec(tuple(idx.tolist()), tuple(rep.tolist())))
    return float(np.linalg.norm(emb.embed(xt, warm=base_vec) - base_vec))


def run_sweep(cfg: SweepConfig, corpus: Corpus, model: pv.PvModel | None = None,
              threads: int = 1) -> list[SweepRecord]:
    """Maximum displacement over ``cfg.repetitions`` random perturbations per grid point."""
    if cfg.mode == "length":
        T_max = cfg.grid[-1]
        points = [(T, cfg.k_replacements) for T in cfg.grid]
        long_doc = _base_document(cfg, corpus, T_max)
        bases = {T: prefix(long_doc, T) for T in cfg.grid}
    else:
        T = cfg.T if cfg.T is not None else _base_document(cfg, corpus, 1).T
        T_max = T
        points = [(T, s) for s in cfg.grid]
        bases = {T: prefix(_base_document(cfg, corpus, T), T)}

    emb = _Embedder(cfg, corpus, model, T_max)
    prepared = {}
    for gi, (T, s) in enumerate(points):
        x = bases[T]
        positions = emb.positions(T)
        if s > positions.size:
            raise ValidationError(f"grid point T={T}, |S|={s}: only {positions.size} "
                                  "eligible positions")
        if T not in prepared:
            prepared[T] = emb.embed(x)
        prepared[(gi, "bound")] = emb.bound(x, prepared[T], s)

    tasks = [(gi, ri) for gi in range(len(points)) for ri in range(cfg.repetitions)]

    def work(task):
        gi, ri = task
        T, s = points[gi]
        rng = np.random.default_rng([cfg.seed, gi, ri])
        return _repetition(emb, bases[T], prepared[T], s, emb.positions(T), rng)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            diffs = list(pool.map(work, tasks))
    else:
        diffs = [work(t) for t in tasks]

    out = []
    for gi, (T, s) in enumerate(points):
        chunk = diffs[gi * cfg.repetitions:(gi + 1) * cfg.repetitions]
        bound, ok = prepared[(gi, "bound")]
        out.append(SweepRecord(cfg.tag, cfg.mode, T, s, max(chunk), float(bound), bool(ok),
                               cfg.seed))
    return out


# ---------------------------------------------------------------- fitting

@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    n: int


def fit_loglog_slope(records, x_field: str = "T", y_field: str = "sup_diff") -> SlopeFit:
    """Least squares line through ``(log x, log y)``.

    Non-positive points are dropped with a warning. ``r2`` is reported as
    0 when ``y`` is constant (nothing to explain).
    """
    xs, ys = [], []
    for r in records:
        x = r[x_field] if isinstance(r, dict) else getattr(r, x_field)
        y = r[y_field] if isinstance(r, dict) else getattr(r, y_field)
        xs.append(float(x))
        ys.append(float(y))
    xs, ys = np.array(xs), np.array(ys)
    keep = (xs > 0) & (ys > 0) & np.isfinite(xs) & np.isfinite(ys)
    if not keep.all():
        warnings.warn(f"dropped {int((~keep).sum())} non-positive points from log-log fit",
                      stacklevel=2)
    lx, ly = np.log(xs[keep]), np.log(ys[keep])
    if lx.size < 3:
        raise ValidationError("need at least 3 positive points for a log-log fit")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 0.0 if ss_tot == 0 else 1.0 - float((resid ** 2).sum()) / ss_tot
    return SlopeFit(float(slope), float(intercept), r2, int(lx.size))


# ---------------------------------------------------------------- reports

@dataclass(frozen=True)
class SvdReport:
    singular_values: np.ndarray
    sigma_min: float
    sigma_max: float
    full_rank: bool


def svd_report(model_or_R, rel_tol: float = 1e-10) -> SvdReport:
    R = model_or_R.R if isinstance(model_or_R, pv.PvModel) else np.asarray(model_or_R, float)
    try:
        sv = np.linalg.svd(R, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD failed: {exc}") from exc
    return SvdReport(sv, float(sv[-1]), float(sv[0]), bool(sv[-1] > rel_tol * sv[0]))


@dataclass(frozen=True)
class Q0Row:
    T: int
    q0_norm: float
    q0_max: float
    bound: float
    n_docs: int


def q0_report(model: pv.PvModel, corpus: Corpus, T_grid: Sequence[int],
              alpha: float | None = None, max_docs: int | None = None) -> list[Q0Row]:
    """Mean and max ``||q0||`` over document prefixes of each length, with the a-priori bound."""
    a = model.config.alpha if alpha is None else alpha
    bound = pv.q0_norm_bound(model, a)
    rows = []
    for T in T_grid:
        docs = [d for d in corpus if d.T >= T][:max_docs]
        if not docs:
            raise ValidationError(f"no document of length >= {T}")
        norms = [float(np.linalg.norm(pv.infer(model, prefix(d, T), alpha=a).q)) for d in docs]
        rows.append(Q0Row(int(T), float(np.mean(norms)), float(max(norms)), bound, len(docs)))
    return rows


# ---------------------------------------------------------------- emission

def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows, columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        d = r if isinstance(r, dict) else asdict(r)
        w.writerow([_cell(d[c]) for c in columns])
    return buf.getvalue()


def emit(records: Sequence[SweepRecord], path, fmt: str = "csv") -> None:
    if fmt == "csv":
        text = rows_to_csv(records, CSV_COLUMNS)
    elif fmt == "json":
        text = json.dumps([{c: getattr(r, c) for c in CSV_COLUMNS} for r in records],
                          indent=2) + "\n"
    else:
        raise ValidationError(f"unknown output format {fmt!r}")
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _parse_bool(s: str) -> bool:
    return s == "true"


def load_records(path) -> list[SweepRecord]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        return [SweepRecord(**d) for d in json.loads(text)]
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for row in reader:
        out.append(SweepRecord(
            vectorizer=row["vectorizer"], mode=row["mode"], T=int(row["T"]),
            s_size=int(row["s_size"]), sup_diff=float(row["sup_diff"]),
            bound=float(row["bound"]), precond_ok=_parse_bool(row["precond_ok"]),
            seed=int(row["seed"])))
    return out
