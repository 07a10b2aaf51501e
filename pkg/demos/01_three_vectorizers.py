"""
Three ways to embed a sentence, and how far a two-word edit moves each
=====================================================================

Run with ``python3 demos/01_three_vectorizers.py``.
"""

import numpy as np

from vectro import concat, pv, tfidf
from vectro.text import PerturbationSpec, build_dictionary, hamming, perturb, tokenize

raw = [tokenize(s) for s in [
    "the quick brown fox jumps over the lazy dog",
    "the slow blue fox sleeps under the old tree",
    "a quick dog and a lazy fox meet by the tree",
    "the brown dog jumps over the blue fence",
]]
dictionary, corpus = build_dictionary(raw)
x = dictionary.encode(tokenize("the quick brown fox jumps over the lazy dog"))

# replace positions 1 and 2 (0-based): "quick brown" -> "slow blue"
spec = PerturbationSpec((1, 2), tuple(dictionary.lookup(t) for t in ("slow", "blue")))
xt = perturb(x, spec)
print("x  =", " ".join(dictionary.decode(x)))
print("x~ =", " ".join(dictionary.decode(xt)))
print("Hamming distance:", hamming(x, xt))

# concatenation of one-hot token and position blocks
cfg = concat.ConcatConfig(concat.TokenEmbeddingTable.one_hot(dictionary.size),
                          concat.PositionalEmbedding.one_hot(12))
gap = np.linalg.norm(concat.vectorize(cfg, x) - concat.vectorize(cfg, xt))
bound = concat.concat_bound(cfg, spec.indices)
print(f"\nconcat:   |phi(x) - phi(x~)| = {gap:.4f}   bound {bound:.4f}")

# TF-IDF with a smoothed table, so tokens present in every document stay usable
idf = tfidf.fit_idf(corpus, smooth=True)
inp = tfidf.bound_inputs(x, idf)
gap = np.linalg.norm(tfidf.tfidf(x, idf) - tfidf.tfidf(xt, idf))
print(f"tf-idf:   |phi(x) - phi(x~)| = {gap:.4f}   bound {tfidf.tfidf_bound(inp, 2):.4f}")

# a tiny Paragraph Vector model; the corpus is far too small to be meaningful,
# the point is only the mechanics of training and inference
model = pv.train(corpus, pv.PvConfig("pvdbow", dictionary.size, 4, nu=1, alpha=0.1),
                 seed=0, epochs=30)
q, qt = pv.infer(model, x).q, pv.infer(model, xt).q
print(f"pvdbow:   |q(x) - q(x~)|     = {np.linalg.norm(q - qt):.4f}"
      f"   |q(x)| = {np.linalg.norm(q):.4f} <= {pv.q0_norm_bound(model):.4f}")
