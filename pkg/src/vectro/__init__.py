"""Text vectorizers and tools to measure their robustness to token replacements."""

from .errors import (ConvergenceError, ModelFormatError, NumericError, TrajectoryError,
                     ValidationError, VectroError)
from .text import (Corpus, Dictionary, Document, PerturbationSpec, build_dictionary, hamming,
                   load_corpus, perturb, random_perturbation, synth_corpus, tokenize)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "ModelFormatError", "NumericError", "TrajectoryError",
    "ValidationError", "VectroError", "Corpus", "Dictionary", "Document", "PerturbationSpec",
    "build_dictionary", "hamming", "load_corpus", "perturb", "random_perturbation",
    "synth_corpus", "tokenize",
]
