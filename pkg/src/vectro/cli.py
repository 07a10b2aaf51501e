"""``vectro`` command line.

Exit codes: 0 success, 1 usage error, 2 validation failure (bad input,
violated bound or unmet precondition), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bounds, harness, interp, pv, softmax
from .errors import ModelFormatError, NumericError, ValidationError, VectroError
from .text import (Dictionary, PerturbationSpec, load_corpus, perturb, random_perturbation,
                   synth_corpus, tokenize, write_corpus)

log = logging.getLogger("vectro")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _output(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _int_list(s: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in s.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}")


def _vocab_path(model_path) -> Path:
    return Path(str(model_path) + ".vocab")


def _load_model(path) -> tuple[pv.PvModel, Dictionary]:
    model = pv.load(path)
    vp = _vocab_path(path)
    if not vp.exists():
        raise ValidationError(f"missing dictionary file {vp}")
    dictionary = Dictionary.load(vp)
    if dictionary.size != model.config.D:
        raise ModelFormatError(f"dictionary size {dictionary.size} != model D={model.config.D}")
    return model, dictionary


def _read_doc(path, dictionary: Dictionary):
    text = Path(path).read_text(encoding="utf-8")
    return dictionary.encode(tokenize(text))


# ---------------------------------------------------------------- subcommands

def cmd_synth_corpus(args) -> int:
    corpus = synth_corpus(args.D, args.docs, (args.min_len, args.max_len), args.zipf, args.seed)
    if not args.out:
        raise ValidationError("synth-corpus needs --out (file or directory ending in /)")
    write_corpus(corpus, args.out)
    return 0


def cmd_train_pv(args) -> int:
    corpus = load_corpus(args.corpus)
    cfg = pv.PvConfig(args.kind, corpus.dictionary.size, args.dim, args.window, args.alpha)
    model = pv.train(corpus, cfg, seed=args.seed, epochs=args.epochs, lr=args.lr)
    if not args.out:
        raise ValidationError("train-pv needs --out")
    pv.save(model, args.out)
    corpus.dictionary.save(_vocab_path(args.out))
    log.info("sigma_min(R) = %.6g, final loss %.6f", model.sigma_min_R, model.loss_history[-1])
    return 0


def cmd_embed(args) -> int:
    model, dictionary = _load_model(args.model)
    x = _read_doc(args.doc, dictionary)
    res = pv.infer(model, x, alpha=args.alpha)
    _output(args, "".join(f"{float(v)!r}\n" for v in res.q))
    return 0


def cmd_sweep(args) -> int:
    model = None
    if args.vectorizer == "pv":
        if not args.model:
            raise ValidationError("pv sweeps need --model")
        model, dictionary = _load_model(args.model)
        corpus = load_corpus(args.corpus, dictionary)
    else:
        corpus = load_corpus(args.corpus)
    cfg = harness.SweepConfig(args.vectorizer, args.mode, args.grid, k_replacements=args.k,
                              T=args.T, repetitions=args.repetitions, seed=args.seed,
                              alpha=args.alpha, ell=args.ell, smooth_idf=args.smooth_idf)
    records = harness.run_sweep(cfg, corpus, model, threads=args.threads)
    if args.out:
        harness.emit(records, args.out, args.format)
    else:
        sys.stdout.write(harness.rows_to_csv(records, harness.CSV_COLUMNS))
    bad = [r for r in records if r.precond_ok and r.sup_diff > r.bound]
    if bad:
        print(f"bound violated at {len(bad)} grid point(s)", file=sys.stderr)
        return 2
    return 0


def _parse_perturb(spec: str, dictionary: Dictionary, T: int) -> PerturbationSpec:
    pairs = []
    for item in spec.split(","):
        pos, _, tok = item.partition(":")
        if not tok:
            raise ValidationError(f"perturbation item {item!r} is not POS:TOKEN")
        p = int(pos)
        if not 1 <= p <= T:
            raise ValidationError(f"position {p} outside [1, {T}]")
        pairs.append((p - 1, dictionary.lookup(tok)))
    pairs.sort()
    return PerturbationSpec(tuple(p for p, _ in pairs), tuple(j for _, j in pairs))


def cmd_ode_trace(args) -> int:
    model, dictionary = _load_model(args.model)
    x = _read_doc(args.doc, dictionary)
    xt = perturb(x, _parse_perturb(args.perturb, dictionary, x.T))
    problem = interp.InterpProblem(model, x, xt, args.alpha)
    traj = interp.trace(problem, steps=args.steps)
    rows = [{"mu": float(m), "q_norm": float(n), "displacement": float(d), "residual": float(r)}
            for m, n, d, r in zip(traj.mu_grid, traj.q_norms, traj.displacements, traj.residuals)]
    _output(args, harness.rows_to_csv(rows, ("mu", "q_norm", "displacement", "residual")))
    log.info("sup displacement %.6g, endpoint gap %.3g", traj.sup_displacement, traj.endpoint_gap)
    return 0


def cmd_verify_bounds(args) -> int:
    model, dictionary = _load_model(args.model)
    x = _read_doc(args.doc, dictionary)
    alpha = model.config.alpha if args.alpha is None else args.alpha
    rep = bounds.doc2vec_bound(model, x, args.s_size, alpha=alpha, ell=args.ell)
    out = rep.to_dict()
    if args.worst_case_q0:
        out["L"], out["bound"] = out["L_worst"], out["bound_worst"]
        out["q0_source"] = "a-priori bound"
    else:
        out["q0_source"] = "measured"
    sup = 0.0
    if args.s_size:
        rng = np.random.default_rng(args.seed)
        xt, _ = random_perturbation(x, args.s_size, model.config.D, rng,
                                    positions=pv.valid_positions(model.config, x.T))
        sup = interp.trace(interp.InterpProblem(model, x, xt, alpha)).sup_displacement
    out["observed_sup_displacement"] = sup
    bound = float(out["bound"]) if not isinstance(out["bound"], str) else float("inf")
    out["bound_holds"] = sup <= bound
    _output(args, json.dumps(out, indent=2) + "\n")
    if not rep.admissible:
        print(f"precondition failed: {rep.status} (log10 admissible ratio "
              f"{rep.log10_admissible_ratio})", file=sys.stderr)
        return 2
    if not out["bound_holds"]:
        print("bound violated", file=sys.stderr)
        return 2
    return 0


def cmd_softmax_extrema(args) -> int:
    ex = softmax.softmax_extrema(args.D, args.rho)
    lip = softmax.lipschitz_constants(args.rho, args.D)
    out = {"D": args.D, "rho": args.rho, "min_value": ex.min_value, "max_value": ex.max_value,
           "argmin": ex.argmin_point.tolist(), "argmax": ex.argmax_point.tolist(),
           "softmax_lipschitz": lip.softmax_lip, "jacobian_lipschitz": lip.jacobian_lip}
    _output(args, json.dumps(out, indent=2) + "\n")
    return 0


def cmd_svd_report(args) -> int:
    model, _ = _load_model(args.model)
    rep = harness.svd_report(model)
    rows = [{"index": i + 1, "singular_value": float(v)} for i, v in enumerate(rep.singular_values)]
    _output(args, harness.rows_to_csv(rows, ("index", "singular_value")))
    if not rep.full_rank:
        print(f"sigma_min(R) = {rep.sigma_min:.3e}: R is rank deficient", file=sys.stderr)
        return 2
    print(f"sigma_min(R) = {rep.sigma_min:.6g} > 0", file=sys.stderr)
    return 0


def cmd_q0_report(args) -> int:
    model, dictionary = _load_model(args.model)
    corpus = load_corpus(args.corpus, dictionary)
    rows = harness.q0_report(model, corpus, args.T_grid, alpha=args.alpha, max_docs=args.max_docs)
    _output(args, harness.rows_to_csv(rows, ("T", "q0_norm", "q0_max", "bound", "n_docs")))
    if any(r.q0_max > r.bound for r in rows):
        print("q0 norm exceeds its bound", file=sys.stderr)
        return 2
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = _Parser(prog="vectro", description="Text vectorizers and Hamming-robustness experiments")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("-v", "--verbose", action="store_true", default=False)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth-corpus", parents=[common], help="write a synthetic Zipf corpus")
    s.add_argument("--D", type=int, default=500)
    s.add_argument("--docs", type=int, default=200)
    s.add_argument("--min-len", type=int, default=50)
    s.add_argument("--max-len", type=int, default=800)
    s.add_argument("--zipf", type=float, default=0.0)
    s.set_defaults(func=cmd_synth_corpus)

    s = sub.add_parser("train-pv", parents=[common], help="train a Paragraph Vector model")
    s.add_argument("--corpus", required=True)
    s.add_argument("--kind", choices=pv.KINDS, default="pvdm-mean")
    s.add_argument("--dim", type=int, default=16)
    s.add_argument("--window", type=int, default=2)
    s.add_argument("--alpha", type=float, default=0.1)
    s.add_argument("--epochs", type=int, default=10)
    s.add_argument("--lr", type=float, default=0.05)
    s.set_defaults(func=cmd_train_pv)

    s = sub.add_parser("embed", parents=[common], help="infer the embedding of one document")
    s.add_argument("--model", required=True)
    s.add_argument("--doc", required=True)
    s.add_argument("--alpha", type=float, default=None)
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("sweep", parents=[common], help="length or count perturbation sweep")
    s.add_argument("--corpus", required=True)
    s.add_argument("--vectorizer", choices=harness.VECTORIZERS, required=True)
    s.add_argument("--mode", choices=harness.MODES, default="length")
    s.add_argument("--grid", type=_int_list, required=True)
    s.add_argument("--k", type=int, default=5, help="replacements per repetition (length mode)")
    s.add_argument("--T", type=int, default=None, help="document length (count mode)")
    s.add_argument("--repetitions", type=int, default=50)
    s.add_argument("--model", default=None)
    s.add_argument("--alpha", type=float, default=None)
    s.add_argument("--ell", type=float, default=bounds.DEFAULT_ELL)
    s.add_argument("--smooth-idf", action="store_true", help="use log((1 + N)/(1 + df)) + 1 weights")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("verify-bounds", parents=[common], help="evaluate the PV robustness bound")
    s.add_argument("--model", required=True)
    s.add_argument("--doc", required=True)
    s.add_argument("--s-size", type=int, required=True)
    s.add_argument("--alpha", type=float, default=None)
    s.add_argument("--ell", type=float, default=bounds.DEFAULT_ELL)
    s.add_argument("--worst-case-q0", action="store_true")
    s.set_defaults(func=cmd_verify_bounds)

    s = sub.add_parser("ode-trace", parents=[common], help="trace the interpolation path")
    s.add_argument("--model", required=True)
    s.add_argument("--doc", required=True)
    s.add_argument("--perturb", required=True, help='1-based "POS:TOKEN,..." replacements')
    s.add_argument("--alpha", type=float, default=None)
    s.add_argument("--steps", type=int, default=64)
    s.set_defaults(func=cmd_ode_trace)

    s = sub.add_parser("softmax-extrema", parents=[common], help="closed-form softmax extremes")
    s.add_argument("--D", type=int, required=True)
    s.add_argument("--rho", type=float, required=True)
    s.set_defaults(func=cmd_softmax_extrema)

    s = sub.add_parser("svd-report", parents=[common], help="singular values of R")
    s.add_argument("--model", required=True)
    s.set_defaults(func=cmd_svd_report)

    s = sub.add_parser("q0-report", parents=[common], help="embedding norms against their bound")
    s.add_argument("--model", required=True)
    s.add_argument("--corpus", required=True)
    s.add_argument("--T-grid", dest="T_grid", type=_int_list, required=True)
    s.add_argument("--alpha", type=float, default=None)
    s.add_argument("--max-docs", type=int, default=None)
    s.set_defaults(func=cmd_q0_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except VectroError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
