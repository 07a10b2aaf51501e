"""
Displacement against document length
====================================

Five random replacements in prefixes of growing length. Normalised TF-IDF
shrinks roughly like T^(-1/2) and Paragraph Vector like T^(-1). The CSV it
writes can be drawn with ``python3 docs/plot_sweep.py sweep.csv``.
"""

import sys

from vectro import harness, pv
from vectro.text import synth_corpus

out = sys.argv[1] if len(sys.argv) > 1 else "sweep.csv"
corpus = synth_corpus(D=300, n_docs=80, len_range=(50, 600), zipf_s=0.0, seed=2)
model = pv.train(corpus, pv.PvConfig("pvdbow", 300, 16, nu=2, alpha=0.1), seed=2, epochs=3)

grid = (50, 100, 200, 400)
records = []
for vec in ("tfidf-normalized", "pv"):
    cfg = harness.SweepConfig(vec, "length", grid, k_replacements=5, repetitions=10, seed=0)
    recs = harness.run_sweep(cfg, corpus, model if vec == "pv" else None)
    fit = harness.fit_loglog_slope(recs)
    print(f"{vec:>17}: slope {fit.slope:+.3f} (r2 {fit.r2:.3f})")
    records += recs

harness.emit(records, out)
print("wrote", out)
