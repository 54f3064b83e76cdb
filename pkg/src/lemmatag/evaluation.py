"""Token-level lemma and UPOS accuracy, reported per file and per test group."""

from __future__ import annotations

from dataclasses import dataclass, field

from .conllu import Document
from .training import predict


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class FileScore:
    name: str
    group: str | None
    lemma_correct: int
    lemma_total: int
    upos_correct: int
    upos_total: int
    token_count: int

    @property
    def lemma_accuracy(self) -> float | None:
        return 100.0 * self.lemma_correct / self.lemma_total if self.lemma_total else None

    @property
    def upos_accuracy(self) -> float | None:
        return 100.0 * self.upos_correct / self.upos_total if self.upos_total else None


@dataclass
class EvalReport:
    per_file: list[FileScore] = field(default_factory=list)

    def groups(self) -> list[str]:
        seen: list[str] = []
        for f in self.per_file:
            g = f.group if f.group is not None else f.name
            if g not in seen:
                seen.append(g)
        return seen

    def group_score(self, group: str) -> FileScore:
        """Micro-averaged score over every file of ``group``."""
        files = [f for f in self.per_file if (f.group if f.group is not None else f.name) == group]
        if not files:
            raise KeyError(group)
        return FileScore(group, group, *(sum(getattr(f, k) for f in files) for k in
                                         ("lemma_correct", "lemma_total", "upos_correct", "upos_total",
                                          "token_count")))


def _same(a: str | None, b: str, case_insensitive: bool) -> bool:
    if a is None:
        return False
    return a.lower() == b.lower() if case_insensitive else a == b


def score_documents(system: Document, gold: Document, name: str = "", group: str | None = None,
                    case_insensitive: bool = False) -> FileScore:
    """Compare ``system`` against ``gold`` word by word.

    Only words with a gold value count towards each metric; a missing
    system value is an error. Range tokens and empty nodes are ignored.
    """
    if len(system.sentences) != len(gold.sentences):
        raise EvalError(f"{name}: {len(system.sentences)} system sentences vs {len(gold.sentences)} gold")
    lc = lt = uc = ut = n = 0
    for k, (s, g) in enumerate(zip(system.sentences, gold.sentences), start=1):
        sw, gw = s.words, g.words
        if [t.form for t in sw] != [t.form for t in gw]:
            raise EvalError(f"{name}: sentence {k} words differ between system and gold")
        for st, gt in zip(sw, gw):
            n += 1
            if gt.lemma is not None:
                lt += 1
                lc += _same(st.lemma, gt.lemma, case_insensitive)
            if gt.upos is not None:
                ut += 1
                uc += st.upos == gt.upos
    if lt == 0 and ut == 0:
        raise EvalError(f"{name}: no scorable tokens")
    return FileScore(name, group, lc, lt, uc, ut, n)


def annotate(model, doc: Document, source_id: int = 0, vectors=None) -> Document:
    """Fill LEMMA and UPOS of every syntactic word using ``model``."""
    from .conllu import Sentence

    vectors = vectors if vectors is not None else [None] * len(doc.sentences)
    out = []
    for sentence, ext in zip(doc.sentences, vectors):
        preds = iter(predict(model, sentence, source_id, ext))
        tokens = []
        for t in sentence.tokens:
            if t.is_word:
                p = next(preds)
                t = t.with_annotation(p.lemma, p.upos)
            tokens.append(t)
        out.append(Sentence(sentence.comments, tuple(tokens)))
    return Document(tuple(out))


def evaluate(model, gold: Document, source_id: int = 0, vectors=None, name: str = "",
             group: str | None = None, case_insensitive: bool = False) -> FileScore:
    """Predict ``gold``'s forms with ``model`` (trained or baseline) and score them."""
    return score_documents(annotate(model, gold, source_id, vectors), gold, name, group, case_insensitive)


def fmt_acc(x: float | None) -> str:
    return "-" if x is None else f"{x:.2f}"


def report_tsv(report: EvalReport) -> str:
    lines = ["scope\tname\tgroup\ttokens\tlemma\tupos"]
    for f in report.per_file:
        lines.append(f"file\t{f.name}\t{f.group or '-'}\t{f.token_count}\t"
                     f"{fmt_acc(f.lemma_accuracy)}\t{fmt_acc(f.upos_accuracy)}")
    for g in report.groups():
        s = report.group_score(g)
        lines.append(f"group\t{g}\t{g}\t{s.token_count}\t{fmt_acc(s.lemma_accuracy)}\t{fmt_acc(s.upos_accuracy)}")
    return "\n".join(lines) + "\n"


def align_table(rows: list[list[str]]) -> str:
    """Plain-text table; first column left-aligned, the rest right-aligned."""
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    out = []
    for k, r in enumerate(rows):
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        out.append(" | ".join(cells).rstrip())
        if k == 0:
            out.append("-+-".join("-" * w for w in widths))
    return "\n".join(out) + "\n"


def report_table(report: EvalReport) -> str:
    """Groups as columns, one row per task."""
    groups = report.groups()
    scores = [report.group_score(g) for g in groups]
    rows = [["", *groups],
            ["Lemmatization", *(fmt_acc(s.lemma_accuracy) for s in scores)],
            ["Tagging", *(fmt_acc(s.upos_accuracy) for s in scores)],
            ["Tokens", *(str(s.token_count) for s in scores)]]
    return align_table(rows)
