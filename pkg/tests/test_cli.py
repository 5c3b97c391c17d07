import csv
import io
import json

import pytest

from syncst.cli import main
from syncst.corpus import CorpusConfig, generate, write_corpus
from syncst.trace import SessionTrace
from syncst.validate import validate_file


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    write_corpus(generate(CorpusConfig(n_utts=3, tokens_range=(3, 5), seed=1)), out)
    return out


def test_gen_corpus(tmp_path, capsys):
    assert main(["gen-corpus", "--out", str(tmp_path), "--n-utts", "2", "--tokens-range", "3,4"]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert len(manifest["utterances"]) == 2
    assert manifest["config"]["tokens_range"] == [3, 4]


def test_simulate_writes_valid_traces(corpus_dir, tmp_path):
    out = tmp_path / "traces"
    code = main(["simulate", "--corpus", str(corpus_dir), "--k", "3", "--policy", "lcp",
                 "--chunk-frames", "48", "--out", str(out)])
    assert code == 0
    paths = sorted(out.glob("*.jsonl"))
    assert len(paths) == 3
    for p in paths:
        assert validate_file(p) == []


def test_simulate_to_stdout_without_corpus(capsys):
    assert main(["simulate", "--k", "inf"]) == 0
    lines = capsys.readouterr().out.splitlines()
    tr = SessionTrace.from_lines(lines)
    assert tr.header["config"]["k"] == "inf"


def test_evaluate_report(corpus_dir, tmp_path, capsys):
    out = tmp_path / "traces"
    main(["simulate", "--corpus", str(corpus_dir), "--out", str(out)])
    capsys.readouterr()
    assert main(["evaluate", str(out), "--corpus", str(corpus_dir)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["n_sessions"] == 3
    assert set(report) == {"al_ms", "ap", "ca_al_ms", "bleu", "token_accuracy", "n_sessions"}


def test_sweep_csv(corpus_dir, tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--corpus", str(corpus_dir), "--k", "1,3,5,7", "--policy", "lcp,sh",
                 "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 8
    assert list(rows[0]) == ["policy", "k", "w", "al_ms", "ca_al_ms", "ap", "bleu"]
    assert {(r["policy"], r["k"]) for r in rows} == {(p, k) for p in ("lcp", "sh") for k in "1357"}
    assert all(len(r["al_ms"].split(".")[1]) == 6 for r in rows)


def test_oracle_check(capsys):
    assert main(["oracle-check", "--suite", "policy"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["suite"] == "policy_laws" and res["passed"]


@pytest.mark.parametrize("argv", [
    ["simulate", "--frobnicate"], ["simulate", "--policy", "best"], ["sweep", "--k", "one"],
    ["simulate", "--chunk-frames", "50"], ["evaluate", "nowhere", "--corpus", "nowhere"], [],
    ["gen-corpus", "--out", "x", "--vocab-size", "1"]])
def test_usage_errors_exit_2(argv, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_unknown_flag_lists_subcommand_flags(capsys):
    main(["simulate", "--frobnicate"])
    err = capsys.readouterr().err
    assert "--chunk-frames" in err and "frobnicate" in err


def test_config_file_defaults_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"k": 1, "policy": "lcp", "chunk-frames": 32}))
    assert main(["simulate", "--config", str(cfg)]) == 0
    header = json.loads(capsys.readouterr().out.splitlines()[0])
    assert (header["config"]["k"], header["config"]["policy"], header["config"]["w"]) == (1, "lcp", 32)
    assert main(["simulate", "--config", str(cfg), "--k", "4"]) == 0
    header = json.loads(capsys.readouterr().out.splitlines()[0])
    assert header["config"]["k"] == 4 and header["config"]["policy"] == "lcp"


def test_config_file_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"speed": 11}))
    assert main(["simulate", "--config", str(cfg)]) == 2
    assert "valid keys" in capsys.readouterr().err
