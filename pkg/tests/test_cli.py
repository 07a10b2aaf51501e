import json
import shutil
import subprocess

import pytest

from vectro import cli, pv


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run("synth-corpus", "--D", 25, "--docs", 15, "--min-len", 30, "--max-len", 60,
               "--seed", 4, "--out", d / "corpus.txt") == 0
    assert run("train-pv", "--corpus", d / "corpus.txt", "--kind", "pvdbow", "--dim", 4,
               "--window", 1, "--epochs", 2, "--out", d / "model.pv") == 0
    first = (d / "corpus.txt").read_text().splitlines()[0]
    (d / "doc.txt").write_text(first + "\n")
    return d


def test_synth_corpus_is_deterministic(tmp_path):
    for name in ("a.txt", "b.txt"):
        assert run("synth-corpus", "--D", 10, "--docs", 3, "--min-len", 5, "--max-len", 9,
                   "--seed", 1, "--out", tmp_path / name) == 0
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    assert len((tmp_path / "a.txt").read_text().splitlines()) == 3


def test_train_writes_model_and_vocab(workspace):
    m = pv.load(workspace / "model.pv")
    assert m.kind == "pvdbow" and m.config.d == 4
    assert (workspace / "model.pv.vocab").exists()


def test_embed(workspace, capsys):
    assert run("embed", "--model", workspace / "model.pv", "--doc", workspace / "doc.txt") == 0
    lines = capsys.readouterr().out.split()
    assert len(lines) == 4 and all(float(v) == float(v) for v in lines)


def test_sweep_output(workspace, capsys):
    assert run("sweep", "--corpus", workspace / "corpus.txt", "--vectorizer", "concat",
               "--mode", "count", "--grid", "0,1,2", "--T", 20, "--repetitions", 3) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "vectorizer,mode,T,s_size,sup_diff,bound,precond_ok,seed"
    assert len(out) == 4


def test_sweep_thread_count_is_invisible(workspace):
    outs = []
    for threads in (1, 8):
        path = workspace / f"sweep{threads}.csv"
        assert run("--threads", threads, "sweep", "--corpus", workspace / "corpus.txt",
                   "--vectorizer", "pv", "--model", workspace / "model.pv", "--mode", "length",
                   "--grid", "20,30", "--k", 2, "--repetitions", 4, "--seed", 3,
                   "--out", path) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_verify_bounds_reports_vacuous_envelope(workspace, capsys):
    code = run("verify-bounds", "--model", workspace / "model.pv", "--doc", workspace / "doc.txt",
               "--s-size", 2, "--out", workspace / "vb.json")
    assert code == 2
    assert "precondition failed: envelope vacuous" in capsys.readouterr().err
    rep = json.loads((workspace / "vb.json").read_text())
    assert rep["status"] == "envelope vacuous" and rep["q0_source"] == "measured"
    assert rep["observed_sup_displacement"] > 0 and rep["bound_holds"]
    run("verify-bounds", "--model", workspace / "model.pv", "--doc", workspace / "doc.txt",
        "--s-size", 2, "--worst-case-q0", "--out", workspace / "vbw.json")
    worst = json.loads((workspace / "vbw.json").read_text())
    assert worst["q0_source"] == "a-priori bound" and worst["bound"] == worst["bound_worst"]


def test_ode_trace(workspace):
    doc = (workspace / "doc.txt").read_text().split()
    new = "tok0" if doc[1] != "tok0" else "tok1"
    vocab = (workspace / "model.pv.vocab").read_text().split()
    if new not in vocab:
        new = next(t for t in vocab if t != doc[1])
    out = workspace / "traj.csv"
    assert run("ode-trace", "--model", workspace / "model.pv", "--doc", workspace / "doc.txt",
               "--perturb", f"2:{new}", "--steps", 8, "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "mu,q_norm,displacement,residual"
    assert len(lines) == 10
    assert float(lines[1].split(",")[2]) == 0.0
    assert run("ode-trace", "--model", workspace / "model.pv", "--doc", workspace / "doc.txt",
               "--perturb", f"999:{new}") == 2
    assert run("ode-trace", "--model", workspace / "model.pv", "--doc", workspace / "doc.txt",
               "--perturb", "2:notaword") == 2


def test_softmax_extrema(capsys):
    assert run("softmax-extrema", "--D", 2, "--rho", 1.0) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["min_value"] == pytest.approx(1 / (1 + 2.718281828459045 ** 2 ** 0.5))
    assert run("softmax-extrema", "--D", 1, "--rho", 1.0) == 2


def test_svd_and_q0_reports(workspace, capsys):
    assert run("svd-report", "--model", workspace / "model.pv") == 0
    assert capsys.readouterr().out.splitlines()[0] == "index,singular_value"
    assert run("q0-report", "--model", workspace / "model.pv", "--corpus",
               workspace / "corpus.txt", "--T-grid", "10,20", "--max-docs", 4) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[0] == "T,q0_norm,q0_max,bound,n_docs" and len(rows) == 3


def test_exit_codes(workspace, tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        run("no-such-command")
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        run("sweep", "--vectorizer", "tfidf")
    assert e.value.code == 1
    bad = tmp_path / "bad.pv"
    bad.write_bytes(b"NOPE" + (workspace / "model.pv").read_bytes()[4:])
    shutil.copy(workspace / "model.pv.vocab", tmp_path / "bad.pv.vocab")
    assert run("svd-report", "--model", bad) == 2
    assert "bad magic" in capsys.readouterr().err
    assert run("embed", "--model", tmp_path / "missing.pv", "--doc", workspace / "doc.txt") == 2


def test_console_script_installed():
    exe = shutil.which("vectro")
    if exe is None:
        pytest.skip("console script not on PATH")
    res = subprocess.run([exe, "softmax-extrema", "--D", "3", "--rho", "0.5"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["D"] == 3
