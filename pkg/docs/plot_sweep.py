"""Log-log plot of a sweep CSV: observed displacement and bound per vectorizer.

Usage: python3 docs/plot_sweep.py sweep.csv [out.png]
Needs matplotlib, which the package itself does not depend on.
"""

import sys
from collections import defaultdict

import matplotlib.pyplot as plt

from vectro.harness import load_records

records = load_records(sys.argv[1])
series = defaultdict(list)
for r in records:
    series[(r.vectorizer, r.mode)].append(r)

fig, ax = plt.subplots(figsize=(6, 4))
for (vec, mode), recs in sorted(series.items()):
    xs = [r.T if mode == "length" else r.s_size for r in recs]
    line, = ax.loglog(xs, [r.sup_diff for r in recs], "o-", label=f"{vec} observed")
    ax.loglog(xs, [r.bound for r in recs], "--", color=line.get_color(), label=f"{vec} bound")
ax.set_xlabel("T" if records and records[0].mode == "length" else "|S|")
ax.set_ylabel("max displacement")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(sys.argv[2] if len(sys.argv) > 2 else "sweep.png", dpi=120)
