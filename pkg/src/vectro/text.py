"""Documents, dictionaries, Hamming geometry and corpus ingestion.

Token ids and positions are 0-based everywhere in the library. Reports and
the command line use 1-based positions.
"""

from __future__ import annotations

import os
import re
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

_PUNCT = re.compile("[" + re.escape(string.punctuation) + "]")


def tokenize(text: str) -> list[str]:
    """Lowercase, strip ASCII punctuation and split on whitespace."""
    return _PUNCT.sub("", text.lower()).split()


def _frozen_ids(ids) -> np.ndarray:
    arr = np.array(ids, dtype=np.int64).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Document:
    """A finite sequence of dictionary indices."""

    token_ids: np.ndarray

    def __init__(self, token_ids: Iterable[int]):
        object.__setattr__(self, "token_ids", _frozen_ids(list(token_ids)))

    @property
    def T(self) -> int:
        return int(self.token_ids.shape[0])

    def __len__(self) -> int:
        return self.T

    def __getitem__(self, t):
        return self.token_ids[t]

    def __iter__(self):
        return iter(self.token_ids.tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Document):
            return NotImplemented
        return np.array_equal(self.token_ids, other.token_ids)

    def __hash__(self) -> int:
        return hash(self.token_ids.tobytes())

    def __repr__(self) -> str:
        return f"Document({self.token_ids.tolist()})"

    def validate(self, vocab_size: int) -> None:
        if self.T and (self.token_ids.min() < 0 or self.token_ids.max() >= vocab_size):
            raise ValidationError(f"token id outside dictionary of size {vocab_size}")


@dataclass(frozen=True)
class Dictionary:
    """Ordered set of distinct token strings; index = position in ``tokens``."""

    tokens: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tokens = tuple(self.tokens)
        object.__setattr__(self, "tokens", tokens)
        index = {tok: i for i, tok in enumerate(tokens)}
        if len(index) != len(tokens):
            raise ValidationError("duplicate token strings in dictionary")
        if any(not tok for tok in tokens):
            raise ValidationError("tokens must be non-empty strings")
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        return len(self.tokens)

    D = size

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def lookup(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise ValidationError(f"out-of-dictionary token {token!r}") from None

    def encode(self, tokens: Sequence[str]) -> Document:
        return Document(self.lookup(tok) for tok in tokens)

    def decode(self, doc: Document) -> list[str]:
        return [self.tokens[i] for i in doc]

    def save(self, path) -> None:
        """Newline-separated tokens; line number (1-based) is the index."""
        Path(path).write_text("\n".join(self.tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Dictionary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(tuple(line for line in lines if line))


@dataclass(frozen=True)
class Corpus:
    docs: tuple[Document, ...]
    dictionary: Dictionary
    source: str = "files"

    def __post_init__(self):
        docs = tuple(self.docs)
        if not docs:
            raise ValidationError("empty corpus")
        for doc in docs:
            doc.validate(self.dictionary.size)
        object.__setattr__(self, "docs", docs)

    def __len__(self) -> int:
        return len(self.docs)

    def __iter__(self):
        return iter(self.docs)

    def __getitem__(self, i) -> Document:
        return self.docs[i]


def build_dictionary(raw_docs: Sequence[Sequence[str]]) -> tuple[Dictionary, Corpus]:
    """Index tokens in first-occurrence order and encode every document."""
    if not raw_docs:
        raise ValidationError("empty corpus")
    index: dict[str, int] = {}
    for doc in raw_docs:
        for tok in doc:
            if not tok:
                raise ValidationError("tokens must be non-empty strings")
            index.setdefault(tok, len(index))
    dictionary = Dictionary(tuple(index))
    docs = tuple(dictionary.encode(doc) for doc in raw_docs)
    return dictionary, Corpus(docs, dictionary, source="files")


def hamming(x: Document, y: Document) -> int:
    if x.T != y.T:
        raise ValidationError("documents must have equal length")
    return int(np.count_nonzero(x.token_ids != y.token_ids))


@dataclass(frozen=True)
class PerturbationSpec:
    """Positions to alter and how to pick their new tokens.

    Either ``replacements`` (one token id per position) is given, or the
    replacement tokens are drawn uniformly from ``range(vocab_size)`` with
    ``seed``. A random draw may reproduce the original token.
    """

    indices: tuple[int, ...]
    replacements: tuple[int, ...] | None = None
    vocab_size: int | None = None
    seed: int | Sequence[int] | None = None

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValidationError("perturbation indices must be strictly increasing")
        if self.replacements is not None:
            rep = tuple(int(j) for j in self.replacements)
            object.__setattr__(self, "replacements", rep)
            if len(rep) != len(idx):
                raise ValidationError("need exactly one replacement per perturbed index")
        elif self.vocab_size is None or self.vocab_size < 1:
            raise ValidationError("random replacement needs a positive vocab_size")

    @property
    def size(self) -> int:
        return len(self.indices)

    def replacement_ids(self) -> np.ndarray:
        if self.replacements is not None:
            return np.asarray(self.replacements, dtype=np.int64)
        rng = np.random.default_rng(self.seed)
        return rng.integers(0, self.vocab_size, size=len(self.indices))


def perturb(x: Document, spec: PerturbationSpec) -> Document:
    """Return an element of the S-close set of ``x`` described by ``spec``."""
    if spec.indices and (spec.indices[0] < 0 or spec.indices[-1] >= x.T):
        raise ValidationError(f"perturbation index out of range for T={x.T}")
    ids = x.token_ids.copy()
    ids[list(spec.indices)] = spec.replacement_ids()
    return Document(ids)


def random_perturbation(x: Document, k: int, vocab_size: int, rng: np.random.Generator,
                        positions: Sequence[int] | None = None) -> tuple[Document, PerturbationSpec]:
    """Replace ``k`` positions drawn without replacement, tokens uniform over the dictionary."""
    pool = np.arange(x.T) if positions is None else np.asarray(positions)
    if k > len(pool):
        raise ValidationError(f"cannot perturb {k} positions out of {len(pool)}")
    idx = np.sort(rng.choice(pool, size=k, replace=False))
    rep = rng.integers(0, vocab_size, size=k)
    spec = PerturbationSpec(tuple(idx.tolist()), tuple(rep.tolist()))
    return perturb(x, spec), spec


def prefix(x: Document, t: int) -> Document:
    if not 1 <= t <= x.T:
        raise ValidationError(f"prefix length {t} outside [1, {x.T}]")
    return Document(x.token_ids[:t])


def synth_corpus(D: int, n_docs: int, len_range: tuple[int, int], zipf_s: float,
                 seed) -> Corpus:
    """Documents of i.i.d. tokens drawn from a Zipf law truncated to ``D`` ranks.

    Token ``j`` has probability proportional to ``(j + 1) ** -zipf_s``;
    ``zipf_s = 0`` is the uniform draw. Lengths are uniform on ``len_range``
    (inclusive).
    """
    lo, hi = len_range
    if D < 2 or n_docs < 1 or zipf_s < 0 or lo < 1 or hi < lo:
        raise ValidationError("invalid synthetic corpus parameters")
    rng = np.random.default_rng(seed)
    weights = np.arange(1, D + 1, dtype=float) ** -zipf_s
    probs = weights / weights.sum()
    lengths = rng.integers(lo, hi + 1, size=n_docs)
    docs = tuple(Document(rng.choice(D, size=n, p=probs)) for n in lengths)
    width = len(str(D))
    dictionary = Dictionary(tuple(f"w{j:0{width}d}" for j in range(D)))
    return Corpus(docs, dictionary, source="synthetic")


def read_raw_documents(path) -> list[list[str]]:
    """Directory of ``.txt`` files (one document each) or a file with one document per line."""
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix == ".txt")
        texts = [p.read_text(encoding="utf-8") for p in files]
    elif path.is_file():
        texts = path.read_text(encoding="utf-8").splitlines()
    else:
        raise ValidationError(f"no such corpus: {path}")
    docs = [tokenize(t) for t in texts]
    docs = [d for d in docs if d]
    if not docs:
        raise ValidationError("empty corpus")
    return docs


def load_corpus(path, dictionary: Dictionary | None = None) -> Corpus:
    """Read a corpus from disk; a given dictionary makes unknown tokens an error."""
    raw = read_raw_documents(path)
    if dictionary is None:
        return build_dictionary(raw)[1]
    return Corpus(tuple(dictionary.encode(d) for d in raw), dictionary, source="files")


def write_corpus(corpus: Corpus, path) -> None:
    """Inverse of :func:`load_corpus` (one document per line, or per file for a directory)."""
    path = Path(path)
    lines = [" ".join(corpus.dictionary.decode(doc)) for doc in corpus]
    if path.is_dir() or str(path).endswith(os.sep):
        path.mkdir(parents=True, exist_ok=True)
        width = len(str(len(lines)))
        for i, line in enumerate(lines):
            (path / f"doc{i:0{width}d}.txt").write_text(line + "\n", encoding="utf-8")
    else:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
