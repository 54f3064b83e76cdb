"""CoNLL-U reading and writing.

Only FORM, LEMMA and UPOS are interpreted. Every other column and every
comment line is carried through verbatim so that ``serialize_document``
reproduces its input byte for byte.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path

_RANGE_ID = re.compile(r"^[1-9][0-9]*-[1-9][0-9]*$")
_EMPTY_ID = re.compile(r"^(0|[1-9][0-9]*)\.[1-9][0-9]*$")
_WORD_ID = re.compile(r"^[1-9][0-9]*$")


class ConlluError(ValueError):
    """Malformed CoNLL-U input; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Token:
    id: str
    form: str
    lemma: str | None = None
    upos: str | None = None
    # XPOS, FEATS, HEAD, DEPREL, DEPS, MISC
    rest: tuple[str, ...] = ("_",) * 6

    @property
    def is_word(self) -> bool:
        """True for syntactic words (integer ids); ranges and empty nodes are not annotated."""
        return _WORD_ID.match(self.id) is not None

    def with_annotation(self, lemma: str | None, upos: str | None) -> Token:
        return replace(self, lemma=lemma, upos=upos)

    def to_line(self) -> str:
        return "\t".join((self.id, self.form, self.lemma or "_", self.upos or "_", *self.rest))


@dataclass(frozen=True)
class Sentence:
    comments: tuple[str, ...] = ()
    tokens: tuple[Token, ...] = ()

    @property
    def words(self) -> tuple[Token, ...]:
        return tuple(t for t in self.tokens if t.is_word)


@dataclass(frozen=True)
class Document:
    sentences: tuple[Sentence, ...] = field(default_factory=tuple)

    def words(self):
        for sentence in self.sentences:
            yield from sentence.words


def _parse_token(line: str, lineno: int) -> Token:
    cols = line.split("\t")
    if len(cols) != 10:
        raise ConlluError(f"expected 10 tab-separated columns, found {len(cols)}", lineno)
    tid, form, lemma, upos = cols[:4]
    if not (_WORD_ID.match(tid) or _RANGE_ID.match(tid) or _EMPTY_ID.match(tid)):
        raise ConlluError(f"invalid token id {tid!r}", lineno)
    if form == "":
        raise ConlluError("empty FORM", lineno)
    return Token(
        id=tid,
        form=form,
        lemma=None if lemma == "_" else lemma,
        upos=None if upos == "_" else upos,
        rest=tuple(cols[4:]),
    )


def _check_ids(tokens: list[Token], linenos: list[int]) -> None:
    expected = 1
    for token, lineno in zip(tokens, linenos):
        if token.is_word:
            if int(token.id) != expected:
                raise ConlluError(f"token id {token.id} out of sequence, expected {expected}", lineno)
            expected += 1
        elif "-" in token.id:
            start, end = (int(x) for x in token.id.split("-"))
            if start != expected or end < start:
                raise ConlluError(f"range id {token.id} does not start at word {expected}", lineno)
        else:
            major = int(token.id.split(".")[0])
            if major != expected - 1:
                raise ConlluError(f"empty node {token.id} misplaced", lineno)


def parse_document(text: str) -> Document:
    """Parse CoNLL-U text.

    A missing final blank line is tolerated; every other deviation from the
    10-column layout raises ``ConlluError`` with the offending line number.
    """
    sentences = []
    comments: list[str] = []
    tokens: list[Token] = []
    linenos: list[int] = []

    def flush():
        if comments or tokens:
            _check_ids(tokens, linenos)
            sentences.append(Sentence(tuple(comments), tuple(tokens)))
        comments.clear()
        tokens.clear()
        linenos.clear()

    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for lineno, line in enumerate(lines, start=1):
        if line == "":
            flush()
        elif line.startswith("#"):
            if tokens:
                raise ConlluError("comment line inside a sentence", lineno)
            comments.append(line)
        else:
            tokens.append(_parse_token(line, lineno))
            linenos.append(lineno)
    flush()
    return Document(tuple(sentences))


def serialize_document(doc: Document) -> str:
    out = []
    for sentence in doc.sentences:
        out.extend(sentence.comments)
        out.extend(token.to_line() for token in sentence.tokens)
        out.append("")
    return "".join(line + "\n" for line in out)


def read_document(path: str | Path) -> Document:
    data = Path(path).read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        prefix = data[: e.start]
        raise ConlluError(f"{path}: invalid UTF-8", prefix.count(b"\n") + 1) from e
    try:
        return parse_document(text)
    except ConlluError as e:
        raise ConlluError(f"{path}: {e.args[0]}") from e


def write_document(doc: Document, path: str | Path) -> None:
    Path(path).write_text(serialize_document(doc), encoding="utf-8")
