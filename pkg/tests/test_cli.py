import json
import shutil
from pathlib import Path

import pytest

from lemmatag.cli import main
from lemmatag.conllu import parse_document, read_document
from lemmatag.model import load_model

from .helpers import write_sidecar

FIXTURES = Path(__file__).parent / "fixtures"
FAST = ["--epochs", "3", "--dim", "65536"]


@pytest.fixture(scope="module")
def dum_model(tmp_path_factory):
    out = tmp_path_factory.mktemp("m") / "dum.model"
    assert main(["train", str(FIXTURES / "dum_haec.json"), "--out", str(out), "--dim", "4096"]) == 0
    return out


@pytest.fixture(scope="module")
def latin_model(tmp_path_factory):
    out = tmp_path_factory.mktemp("m") / "latin.model"
    assert main(["train", str(FIXTURES / "latin.json"), "--out", str(out), *FAST]) == 0
    return out


def test_rules_top_one(capsys):
    assert main(["rules", str(FIXTURES / "latin.json"), "--top", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "rule\tfrequency\texamples"
    assert len(lines) == 2
    rule, freq, examples = lines[1].split("\t")
    assert "↓0;d¦" in rule
    assert int(freq) > 0 and 1 <= len(examples.split(", ")) <= 5


def test_rules_counts_match_recount(capsys, latin_ts):
    from collections import Counter

    from lemmatag.rules import encode_rule, format_rule

    counts = Counter(format_rule(encode_rule(t.form, t.lemma)) for t in latin_ts.words() if t.lemma)
    main(["rules", str(FIXTURES / "latin.json"), "--top", "3"])
    rows = [ln.split("\t") for ln in capsys.readouterr().out.splitlines()[1:]]
    assert [(r, int(f)) for r, f, _ in rows] == counts.most_common(3)


def test_rules_top_zero(capsys):
    assert main(["rules", str(FIXTURES / "latin.json"), "--top", "0"]) == 0
    assert capsys.readouterr().out == "rule\tfrequency\texamples\n"


def test_rules_bad_path(capsys, tmp_path):
    assert main(["rules", str(tmp_path / "nope.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        main(["rules", str(FIXTURES / "latin.json"), "--bogus"])
    assert e.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_train_missing_out(capsys):
    with pytest.raises(SystemExit) as e:
        main(["train", str(FIXTURES / "latin.json")])
    assert e.value.code == 1


def test_train_bad_hyperparameter(capsys, tmp_path):
    assert main(["train", str(FIXTURES / "latin.json"), "--out", str(tmp_path / "m"), "--epochs", "0"]) == 1


def test_train_is_byte_identical(tmp_path, latin_model):
    again = tmp_path / "again.model"
    assert main(["train", str(FIXTURES / "latin.json"), "--out", str(again), *FAST]) == 0
    assert again.read_bytes() == latin_model.read_bytes()


def test_train_logs_epochs_to_stderr(capsys, tmp_path):
    main(["train", str(FIXTURES / "dum_haec.json"), "--out", str(tmp_path / "m"), "--epochs", "2", "--dim", "512"])
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "epoch 2" in captured.err


def test_train_merged_granularity(tmp_path):
    out = tmp_path / "merged.model"
    assert main(["train", str(FIXTURES / "latin.json"), "--out", str(out), "--granularity", "merged",
                 "--epochs", "1", "--dim", "4096"]) == 0
    params = load_model(out)
    assert params.sources.num_known == 1
    assert {params.sources.resolve_name(n) for n in ("caesar", "ud-ittb", "Tacitus", None, "other")} == {0}


def test_predict_reproduces_listing(capsys, dum_model):
    assert main(["predict", str(dum_model), str(FIXTURES / "dum_haec.conllu"), "--source", "Caesar"]) == 0
    out = capsys.readouterr().out
    assert out == (FIXTURES / "dum_haec_gold.conllu").read_text(encoding="utf-8")
    rows = [ln.split("\t") for ln in out.splitlines() if ln and not ln.startswith("#")]
    assert (rows[0][2], rows[0][3]) == ("dum", "SCONJ")
    assert (rows[4][2], rows[4][3]) == ("gero", "VERB")
    assert (rows[5][2], rows[5][3]) == ("Gaius", "PROPN")


def test_predict_unknown_source(capsys, dum_model):
    assert main(["predict", str(dum_model), str(FIXTURES / "dum_haec.conllu"), "--source", "Livius"]) == 0
    assert len(parse_document(capsys.readouterr().out).sentences) == 1


def test_predict_passes_other_columns_through(capsys, latin_model):
    src = (FIXTURES / "multiword.conllu").read_text(encoding="utf-8")
    assert main(["predict", str(latin_model), str(FIXTURES / "multiword.conllu")]) == 0
    out = capsys.readouterr().out
    a, b = src.splitlines(), out.splitlines()
    assert len(a) == len(b)
    for x, y in zip(a, b):
        if not x or x.startswith("#") or not x.split("\t")[0].isdigit():
            assert x == y
        else:
            cx, cy = x.split("\t"), y.split("\t")
            assert cx[:2] + cx[4:] == cy[:2] + cy[4:]


def test_predict_stdin(capsys, monkeypatch, dum_model):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO((FIXTURES / "dum_haec.conllu").read_text()))
    assert main(["predict", str(dum_model), "-", "--source", "Caesar"]) == 0
    assert "\tgero\tVERB\t" in capsys.readouterr().out


def test_predict_bad_model(capsys, tmp_path):
    bad = tmp_path / "bad.model"
    bad.write_bytes(b"not a model")
    assert main(["predict", str(bad), str(FIXTURES / "dum_haec.conllu")]) == 2


def test_eval_gold_equals_system(capsys):
    gold = str(FIXTURES / "dum_haec_gold.conllu")
    assert main(["eval", gold, "--system", gold, "--format", "tsv"]) == 0
    rows = [ln.split("\t") for ln in capsys.readouterr().out.splitlines()[1:]]
    assert all(r[4:] == ["100.00", "100.00"] for r in rows)


def test_eval_three_groups(capsys, tmp_path, latin_model):
    files = [str(FIXTURES / f"test-{g}.conllu") for g in ("classical", "cross-genre", "cross-time")]
    args = ["eval", str(latin_model), *files, "--group", "classical", "--group", "cross-genre",
            "--group", "cross-time", "--tsv", str(tmp_path / "r.tsv")]
    assert main(args) == 0
    table = capsys.readouterr().out.splitlines()
    assert [c.strip() for c in table[0].split("|")] == ["", "classical", "cross-genre", "cross-time"]
    assert table[2].startswith("Lemmatization") and table[3].startswith("Tagging")
    assert len((tmp_path / "r.tsv").read_text().splitlines()) == 1 + 3 + 3


def test_predict_output_feeds_eval(capsys, tmp_path, latin_model):
    gold = FIXTURES / "test-cross-genre.conllu"
    main(["predict", str(latin_model), str(gold)])
    pred = tmp_path / "pred.conllu"
    pred.write_text(capsys.readouterr().out, encoding="utf-8")
    assert main(["eval", str(gold), "--system", str(pred), "--format", "tsv"]) == 0
    by_cli = capsys.readouterr().out.splitlines()[1].split("\t")[4:]
    assert main(["eval", str(latin_model), str(gold), "--format", "tsv"]) == 0
    assert capsys.readouterr().out.splitlines()[1].split("\t")[4:] == by_cli


def test_eval_no_scorable_tokens(capsys):
    blank = str(FIXTURES / "dum_haec.conllu")
    assert main(["eval", blank, "--system", blank]) == 2


def test_eval_needs_model_or_system(capsys):
    assert main(["eval", str(FIXTURES / "dum_haec_gold.conllu")]) == 2
    assert main(["eval", str(FIXTURES / "dum_haec_gold.conllu"), "--system", "a", "--system", "b"]) == 1


def test_ablate_empty_runs(capsys, tmp_path):
    run_file = tmp_path / "runs.json"
    run_file.write_text(json.dumps({"runs": []}))
    assert main(["ablate", str(run_file)]) == 1


def _vectors_run_file(tmp_path: Path) -> Path:
    for name in ("caesar.conllu", "ud-ittb.conllu", "test-classical.conllu"):
        shutil.copy(FIXTURES / name, tmp_path / name)
    (tmp_path / "corpus.json").write_text(json.dumps({"corpora": [
        {"name": "caesar", "path": "caesar.conllu", "group": "primary", "author": "Caesar"},
        {"name": "ittb", "path": "ud-ittb.conllu", "group": "secondary"}]}))
    write_sidecar(tmp_path / "train.vec", [read_document(tmp_path / "caesar.conllu"),
                                           read_document(tmp_path / "ud-ittb.conllu")])
    write_sidecar(tmp_path / "test.vec", [read_document(tmp_path / "test-classical.conllu")])
    hp = {"epochs": 2, "dim": 65536, "seed": 3}
    test = [{"path": "test-classical.conllu", "group": "classical", "source": "Caesar", "vectors": "test.vec"}]
    runs = []
    for g in ("per-author-per-treebank", "merged"):
        runs.append({"name": f"{g}", "corpus_config": "corpus.json", "granularity": g, "hyperparams": hp,
                     "tests": test})
        runs.append({"name": f"{g}+vec", "corpus_config": "corpus.json", "granularity": g, "hyperparams": hp,
                     "external_vectors": "train.vec", "tests": test})
    path = tmp_path / "runs.json"
    path.write_text(json.dumps({"runs": runs}))
    return path


def test_ablate_vectors_summary_and_rerun(capsys, tmp_path):
    run_file = _vectors_run_file(tmp_path)
    assert main(["ablate", str(run_file)]) == 0
    out = capsys.readouterr().out
    first = run_file.with_suffix(".tsv").read_bytes()
    assert "Mean improvement with external vectors (pp)" in out
    summary = out.split("Mean improvement with external vectors (pp)\n")[1].splitlines()[-1]
    deltas = [c.strip() for c in summary.split("|")[1:]]
    assert len(deltas) == 2
    assert all(len(d) >= 6 and d[0] in "+-" and d[-4] == "." for d in deltas)
    assert main(["ablate", str(run_file), "--out", str(tmp_path / "second.tsv")]) == 0
    assert (tmp_path / "second.tsv").read_bytes() == first


def test_ablate_failed_run_exit_2(capsys, tmp_path):
    run_file = tmp_path / "runs.json"
    run_file.write_text(json.dumps({"runs": [
        {"name": "ok", "corpus_config": str(FIXTURES / "dum_haec.json"), "hyperparams": {"epochs": 1, "dim": 512},
         "tests": [{"path": str(FIXTURES / "dum_haec_gold.conllu"), "group": "classical"}]},
        {"name": "bad", "corpus_config": "missing.json",
         "tests": [{"path": str(FIXTURES / "dum_haec_gold.conllu"), "group": "classical"}]}]}))
    assert main(["ablate", str(run_file)]) == 2
    tsv = run_file.with_suffix(".tsv").read_text().splitlines()
    assert tsv[1].split("\t")[3] == "ok" and tsv[2].split("\t")[3].startswith("failed")
