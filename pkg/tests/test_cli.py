import json

import numpy as np
import pytest

from quadnc import cli, nn
from quadnc.sampler import read_batch


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_simulate_writes_batch(tmp_path):
    out = tmp_path / "ev.txt"
    assert run("simulate", "--family", "fock", "--n", 2, "--count", 300, "--seed", 5, "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("phi=0 seed=5 family=fock")
    assert lines[1].startswith("# config: ")
    b = read_batch(out)
    assert len(b) == 300 and b.spec.n == 2 and b.spec.eta == 0.6


def test_simulate_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        run("simulate", "--family", "fock", "--count", 0, "--out", tmp_path / "x")
    assert e.value.code == 2
    with pytest.raises(SystemExit):
        run("simulate", "--family", "unicorn", "--out", tmp_path / "x")
    assert "coherent" in capsys.readouterr().err


def test_simulate_bad_parameters(tmp_path, capsys):
    assert run("simulate", "--family", "fock", "--n", 1, "--eta", 1.5, "--out", tmp_path / "x") == 1
    assert "error" in capsys.readouterr().err


def test_seed_precedence(tmp_path, monkeypatch):
    base = ["simulate", "--family", "coherent", "--count", 10, "--out"]
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 7}))
    assert cli.parse_args([str(a) for a in base + [tmp_path / "a"]]).seed == 0
    assert cli.parse_args([str(a) for a in base + [tmp_path / "a", "--config", cfg]]).seed == 7
    monkeypatch.setenv("QUADNC_SEED", "11")
    assert cli.parse_args([str(a) for a in base + [tmp_path / "a", "--config", cfg]]).seed == 11
    assert cli.parse_args([str(a) for a in base + [tmp_path / "a", "--config", cfg, "--seed", 3]]).seed == 3


def test_config_from_previous_output(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    run("simulate", "--family", "spacs", "--alpha", 1.5, "--count", 200, "--seed", 9, "--out", a)
    run("simulate", "--config", a, "--out", b)
    np.testing.assert_array_equal(read_batch(a).values, read_batch(b).values)
    assert read_batch(b).spec.family.value == "spacs"


def test_featurize(tmp_path, capsys):
    ev = tmp_path / "ev.txt"
    run("simulate", "--family", "thermal", "--nbar", 1, "--count", 1000, "--out", ev)
    assert run("featurize", "--events", ev) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# config: ")
    row = lines[2].split(",")
    assert len(row) == 162 and row[-2:] == ["1000", "0"]
    out = tmp_path / "f.csv"
    assert run("featurize", "--events", ev, "--subsample", 100, "--out", out) == 0
    assert out.read_text().splitlines()[2].split(",")[-2] == "100"


@pytest.fixture(scope="module")
def tiny_model(tmp_path_factory):
    d = tmp_path_factory.mktemp("model")
    out = d / "m.json"
    code = run("train", "--out", out, "--vectors-per-family", 20, "--events", 400, "--max-epochs", 3,
               "--save-corpus", d / "corpus.csv")
    assert code == 0
    return d, out


def test_train_outputs(tiny_model):
    d, out = tiny_model
    m = nn.load(out)
    assert m.metadata["run_config"]["vectors_per_family"] == 20
    assert len(m.metadata["corpus_families"]) == 6
    log = (d / "m.json.log").read_text().splitlines()
    assert log[0] == "epoch,train_loss,val_loss,val_accuracy,best_val_loss"
    assert log[-1].startswith("# best_epoch=")
    assert (d / "corpus.csv").read_text().startswith("# config: ")


def test_train_from_corpus_matches(tiny_model, tmp_path):
    d, out = tiny_model
    again = tmp_path / "m2.json"
    assert run("train", "--out", again, "--corpus", d / "corpus.csv", "--max-epochs", 3,
               "--vectors-per-family", 20, "--events", 400) == 0
    x = np.random.default_rng(0).random((5, 160))
    np.testing.assert_array_equal(nn.forward(nn.load(again), x), nn.forward(nn.load(out), x))


def test_train_ablation_flags(tmp_path):
    out = tmp_path / "m.json"
    assert run("train", "--out", out, "--vectors-per-family", 20, "--events", 300, "--max-epochs", 1,
               "--ablate-spacs", "--phase-averaged") == 0
    fams = nn.load(out).metadata["corpus_families"]
    assert "spacs" not in fams and "phase-averaged" in fams and "mixture" not in fams


def test_predict(tiny_model, tmp_path, capsys):
    _, model = tiny_model
    ev = tmp_path / "ev.txt"
    run("simulate", "--family", "fock", "--n", 1, "--count", 2000, "--out", ev)
    capsys.readouterr()
    csv = tmp_path / "p.csv"
    assert run("predict", "--model", model, "--events", ev, "--csv", csv) == 0
    out = capsys.readouterr().out
    assert out.startswith("r=") and "nonclassical=" in out and "events=2000" in out
    assert csv.read_text().splitlines()[1].startswith("r,threshold")
    assert run("predict", "--model", model, "--events", ev, "--threshold", 1.5) == 1
    assert run("predict", "--model", tmp_path / "missing.json", "--events", ev) == 1


def test_predict_external_file(tiny_model, tmp_path, capsys):
    _, model = tiny_model
    ev = tmp_path / "raw.dat"
    ev.write_text("\n".join("%.6f" % v for v in np.random.default_rng(1).normal(0, 0.5, 500)))
    assert run("predict", "--model", model, "--events", ev) == 0
    assert "events=500" in capsys.readouterr().out


def test_sweep_and_rerun_from_csv(tiny_model, tmp_path):
    _, model = tiny_model
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("sweep", "cat", "--model", model, "--out", a, "--alphas", "0.5,2", "--events", 300, "--seeds", 2) == 0
    assert run("sweep", "cat", "--model", model, "--out", b, "--config", a) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 2 + 4


def test_sweep_sample_size_defaults(tiny_model, tmp_path):
    _, model = tiny_model
    out = tmp_path / "s.csv"
    assert run("sweep", "sample-size", "--model", model, "--out", out, "--events", 1000, "--sizes", "100,1000") == 0
    rows = out.read_text().splitlines()[2:]
    assert len(rows) == 4
    assert rows[0].split(",")[-2] == "10"


def test_sweep_phase(tiny_model, tmp_path):
    _, model = tiny_model
    out = tmp_path / "p.csv"
    assert run("sweep", "phase-squeezed", "--model", model, "--out", out, "--nbins", 5, "--events", 300,
               "--seeds", 1) == 0
    assert len(out.read_text().splitlines()) == 7


def test_simulate_needs_family(tmp_path):
    with pytest.raises(SystemExit) as e:
        run("simulate", "--out", tmp_path / "x")
    assert e.value.code == 2


def test_explicit_flag_beats_config(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    run("simulate", "--family", "spacs", "--alpha", 1.5, "--count", 50, "--seed", 9, "--out", a)
    run("simulate", "--config", a, "--alpha", 0.5, "--out", b)
    spec = read_batch(b).spec
    assert spec.family.value == "spacs" and spec.alpha == 0.5


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    cfg.write_text("nothing here\n")
    assert run("simulate", "--family", "coherent", "--config", cfg, "--out", tmp_path / "x") == 2
