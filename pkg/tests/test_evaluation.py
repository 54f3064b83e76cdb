from pathlib import Path

import pytest

from lemmatag.conllu import Document, Sentence, parse_document, read_document, serialize_document
from lemmatag.evaluation import (
    EvalError, EvalReport, FileScore, annotate, evaluate, report_table, report_tsv, score_documents,
)
from lemmatag.training import baseline_most_frequent

from .helpers import naive_recount

FIXTURES = Path(__file__).parent / "fixtures"
GOLD = read_document(FIXTURES / "dum_haec_gold.conllu")


def _edit(doc, k, lemma=None, upos=None):
    s = doc.sentences[0]
    tokens = list(s.tokens)
    t = tokens[k]
    tokens[k] = t.with_annotation(lemma if lemma is not None else t.lemma, upos if upos is not None else t.upos)
    return Document((Sentence(s.comments, tuple(tokens)),))


def test_identical_is_100():
    f = score_documents(GOLD, GOLD)
    assert (f.lemma_accuracy, f.upos_accuracy) == (100.0, 100.0)


def test_one_wrong_lemma_of_seven():
    f = score_documents(_edit(GOLD, 4, lemma="geruntur"), GOLD)
    assert f"{f.lemma_accuracy:.2f}" == "85.71"
    assert f.upos_accuracy == 100.0


def test_case_insensitive_flag():
    system = _edit(GOLD, 5, lemma="gaius")
    assert score_documents(system, GOLD).lemma_correct == 6
    assert score_documents(system, GOLD, case_insensitive=True).lemma_correct == 7


def test_missing_prediction_is_wrong():
    blank = parse_document((FIXTURES / "dum_haec.conllu").read_text())
    f = score_documents(blank, GOLD)
    assert f.lemma_correct == 0 and f.lemma_total == 7


def test_only_annotated_gold_tokens_count():
    gold = _edit(GOLD, 0, lemma=None, upos=None)
    s = gold.sentences[0]
    tokens = list(s.tokens)
    tokens[1] = tokens[1].with_annotation(None, "DET")
    gold = Document((Sentence(s.comments, tuple(tokens)),))
    f = score_documents(GOLD, gold)
    assert f.lemma_total == 6 and f.upos_total == 7 and f.token_count == 7


def test_no_scorable_tokens():
    blank = parse_document((FIXTURES / "dum_haec.conllu").read_text())
    with pytest.raises(EvalError):
        score_documents(blank, blank)


def test_mismatched_words():
    other = parse_document("1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n\n")
    with pytest.raises(EvalError):
        score_documents(other, GOLD)


def test_ranges_and_empty_nodes_are_ignored():
    gold = read_document(FIXTURES / "multiword.conllu")
    f = score_documents(gold, gold)
    assert f.token_count == 7 and f.lemma_total == 7


@pytest.mark.parametrize("name", ["test-classical", "test-cross-genre", "test-cross-time"])
def test_scores_agree_with_naive_recount(latin_ts, name):
    gold_text = (FIXTURES / f"{name}.conllu").read_text()
    base = baseline_most_frequent(latin_ts)
    system = annotate(base, parse_document(gold_text))
    system_text = serialize_document(system)
    f = evaluate(base, parse_document(gold_text))
    for ci in (False, True):
        f = score_documents(system, parse_document(gold_text), case_insensitive=ci)
        lem, pos = naive_recount(system_text, gold_text, ci)
        assert f.lemma_accuracy == pytest.approx(lem, abs=1e-12)
        assert f.upos_accuracy == pytest.approx(pos, abs=1e-12)


def test_group_layout():
    report = EvalReport([
        FileScore("a.conllu", "classical", 9, 10, 10, 10, 10),
        FileScore("b.conllu", "cross-genre", 8, 10, 9, 10, 10),
        FileScore("c.conllu", "cross-time", 7, 10, 6, 10, 10),
        FileScore("d.conllu", "classical", 10, 10, 10, 10, 10),
    ])
    assert report.groups() == ["classical", "cross-genre", "cross-time"]
    assert report.group_score("classical").lemma_accuracy == 95.0
    table = report_table(report).splitlines()
    assert table[0].split("|")[1:] == [" classical ", " cross-genre ", " cross-time"]
    assert "95.00" in table[2] and "80.00" in table[2] and "70.00" in table[2]
    tsv = report_tsv(report).splitlines()
    assert tsv[0] == "scope\tname\tgroup\ttokens\tlemma\tupos"
    assert "group\tcross-time\tcross-time\t10\t70.00\t60.00" in tsv
