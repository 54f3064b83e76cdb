"""Multi-corpus loading, source ids, rule inventory and train/dev splits."""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .conllu import ConlluError, Document, Sentence, read_document
from .rules import RuleError, encode_rule, format_rule, parse_rule, LemmaRule


class CorpusError(ValueError):
    pass


class Granularity(str, Enum):
    PER_AUTHOR_PER_TREEBANK = "per-author-per-treebank"
    SINGLE_PRIMARY_PER_TREEBANK = "single-primary-per-treebank"
    SINGLE_PRIMARY_SINGLE_SECONDARY = "single-primary-single-secondary"
    MERGED = "merged"


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    path: str
    group: str = "primary"
    author: str | None = None
    vectors: str | None = None


@dataclass(frozen=True)
class SourceMap:
    entries: tuple[CorpusEntry, ...]
    granularity: Granularity = Granularity.PER_AUTHOR_PER_TREEBANK

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise CorpusError("corpus names must be unique")
        for e in self.entries:
            if e.group not in ("primary", "secondary"):
                raise CorpusError(f"corpus {e.name}: group must be 'primary' or 'secondary'")

    def with_granularity(self, granularity: Granularity | str) -> SourceMap:
        return replace(self, granularity=Granularity(granularity))

    def _author_key(self, entry: CorpusEntry) -> str:
        return entry.author if entry.author is not None else entry.name

    def source_keys(self) -> list[str]:
        """Distinct source keys in id order (excluding the reserved unknown id)."""
        g = self.granularity
        if g is Granularity.MERGED:
            return ["*"]
        keys: list[str] = []
        primary = [e for e in self.entries if e.group == "primary"]
        secondary = [e for e in self.entries if e.group == "secondary"]
        if g is Granularity.PER_AUTHOR_PER_TREEBANK:
            for e in primary:
                key = "author:" + self._author_key(e)
                if key not in keys:
                    keys.append(key)
        elif primary:
            keys.append("primary")
        if g is Granularity.SINGLE_PRIMARY_SINGLE_SECONDARY:
            if secondary:
                keys.append("secondary")
        else:
            keys.extend("corpus:" + e.name for e in secondary)
        return keys

    @property
    def num_known(self) -> int:
        return len(self.source_keys())

    @property
    def unknown_id(self) -> int:
        # merged mode has nothing to distinguish, so unknown text shares id 0
        return 0 if self.granularity is Granularity.MERGED else self.num_known

    @property
    def num_ids(self) -> int:
        """Width of the one-hot source block, including the reserved unknown id."""
        return self.num_known + 1

    def entry(self, name: str) -> CorpusEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise CorpusError(f"unknown corpus {name!r}")

    def resolve(self, corpus_name: str | None, author: str | None = None) -> int:
        """Source id of a corpus (and optionally an author within the primary group).

        ``corpus_name=None`` requests the reserved unknown id.
        """
        if corpus_name is None:
            return self.unknown_id
        e = self.entry(corpus_name)
        g = self.granularity
        keys = self.source_keys()
        if g is Granularity.MERGED:
            return 0
        if e.group == "secondary":
            key = "secondary" if g is Granularity.SINGLE_PRIMARY_SINGLE_SECONDARY else "corpus:" + e.name
            return keys.index(key)
        if g is Granularity.PER_AUTHOR_PER_TREEBANK:
            key = "author:" + (author if author is not None else self._author_key(e))
            return keys.index(key) if key in keys else self.unknown_id
        return keys.index("primary")

    def resolve_name(self, name: str | None) -> int:
        """Resolve a user-supplied source name: a corpus name, then a primary author, else unknown."""
        if name is None:
            return self.unknown_id
        if any(e.name == name for e in self.entries):
            return self.resolve(name)
        for e in self.entries:
            if e.group == "primary" and e.author == name:
                return self.resolve(e.name, name)
        return self.unknown_id

    def primary_ids(self) -> frozenset[int]:
        return frozenset(self.resolve(e.name) for e in self.entries if e.group == "primary")

    def to_json(self) -> dict:
        return {
            "granularity": self.granularity.value,
            "corpora": [
                {k: v for k, v in (("name", e.name), ("path", e.path), ("group", e.group),
                                   ("author", e.author), ("vectors", e.vectors)) if v is not None}
                for e in self.entries
            ],
        }

    @classmethod
    def from_json(cls, data: dict, base: Path | None = None) -> SourceMap:
        try:
            granularity = Granularity(data.get("granularity", Granularity.PER_AUTHOR_PER_TREEBANK.value))
        except ValueError:
            raise CorpusError(f"unknown granularity {data.get('granularity')!r}") from None
        entries = []
        for item in data.get("corpora", []):
            try:
                path, vectors = item["path"], item.get("vectors")
                if base is not None:
                    path = str(base / path)
                    vectors = str(base / vectors) if vectors else None
                entries.append(CorpusEntry(item["name"], path, item.get("group", "primary"),
                                           item.get("author"), vectors))
            except (KeyError, TypeError):
                raise CorpusError(f"malformed corpus entry {item!r}") from None
        return cls(tuple(entries), granularity)


def load_source_map(path: str | Path) -> SourceMap:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise CorpusError(f"cannot read corpus config {path}: {e}") from e
    return SourceMap.from_json(data, path.parent)


@dataclass
class RuleInventory:
    rules: list[tuple[str, int]]
    examples: dict[str, list[tuple[str, str]]] = field(default_factory=dict)

    def __post_init__(self):
        self.index = {rule: i for i, (rule, _) in enumerate(self.rules)}
        self._parsed = [parse_rule(r) for r, _ in self.rules]

    def __len__(self):
        return len(self.rules)

    def __contains__(self, rule: str):
        return rule in self.index

    def rule(self, class_id: int) -> LemmaRule:
        return self._parsed[class_id]

    @property
    def total(self) -> int:
        return sum(f for _, f in self.rules)


def build_rule_inventory(pairs, allow_copy: bool = False, max_examples: int = 5) -> RuleInventory:
    """Count lemma rules over ``(form, lemma)`` pairs, most frequent first.

    Ties keep first-occurrence order. Each rule remembers its most frequent
    example pairs.
    """
    counts: Counter[str] = Counter()
    pair_counts: dict[str, Counter] = {}
    for form, lemma in pairs:
        rule = format_rule(encode_rule(form, lemma, allow_copy))
        counts[rule] += 1
        pair_counts.setdefault(rule, Counter())[(form, lemma)] += 1
    # Counter preserves insertion order and sorted() is stable
    ordered = sorted(counts.items(), key=lambda kv: -kv[1])
    examples = {r: [p for p, _ in sorted(pair_counts[r].items(), key=lambda kv: -kv[1])[:max_examples]]
                for r, _ in ordered}
    return RuleInventory(ordered, examples)


def top_rules(inv: RuleInventory, k: int) -> list[tuple[str, int, list[tuple[str, str]]]]:
    return [(r, f, inv.examples.get(r, [])) for r, f in inv.rules[:max(k, 0)]]


@dataclass(frozen=True)
class LabeledSentence:
    sentence: Sentence
    source_id: int
    vectors: np.ndarray | None = None  # [words x width]


@dataclass(frozen=True)
class TrainingSet:
    sentences: tuple[LabeledSentence, ...]
    upos_labels: tuple[str, ...]
    inventory: RuleInventory
    sources: SourceMap
    allow_copy: bool = False

    @property
    def vector_width(self) -> int:
        for s in self.sentences:
            if s.vectors is not None:
                return s.vectors.shape[1]
        return 0

    def words(self):
        for item in self.sentences:
            yield from item.sentence.words


def lemma_pairs(sentences):
    """Usable (form, lemma) pairs: syntactic words with a gold lemma."""
    for s in sentences:
        for t in s.words:
            if t.lemma is not None and t.form:
                yield t.form, t.lemma


def make_training_set(items, sources: SourceMap, allow_copy: bool = False,
                      upos_labels: tuple[str, ...] | None = None) -> TrainingSet:
    items = tuple(items)
    try:
        inventory = build_rule_inventory(lemma_pairs(i.sentence for i in items), allow_copy)
    except RuleError as e:
        raise CorpusError(str(e)) from e
    if upos_labels is None:
        upos_labels = tuple(sorted({t.upos for i in items for t in i.sentence.words if t.upos is not None}))
    return TrainingSet(items, upos_labels, inventory, sources, allow_copy)


def load_corpora(config: SourceMap, allow_copy: bool = False, vectors: str | Path | None = None) -> TrainingSet:
    """Load every corpus of ``config``.

    External vectors come either from per-corpus ``vectors`` entries or from
    one sidecar file (``vectors``) covering all corpora in config order.
    """
    from .vectors import VectorError, align_blocks, read_vector_blocks, read_vectors, _distribute

    if not config.entries:
        raise CorpusError("empty corpus set")
    declared = {e.vectors is not None for e in config.entries}
    if len(declared) > 1:
        raise CorpusError("either every corpus or none must declare external vectors")
    if vectors is not None and True in declared:
        raise CorpusError("vectors given both in the corpus config and as a sidecar file")
    docs = []
    for e in config.entries:
        try:
            docs.append(read_document(e.path))
        except OSError as err:
            raise CorpusError(f"cannot read corpus {e.name} ({e.path}): {err}") from err
        except ConlluError as err:
            raise CorpusError(f"cannot parse corpus {e.name}: {err}") from err
    try:
        if vectors is not None:
            _, blocks = read_vector_blocks(vectors)
            all_sentences = [s for d in docs for s in d.sentences]
            flat = _distribute(align_blocks(blocks, all_sentences, str(vectors)), all_sentences)
            per_doc, pos = [], 0
            for d in docs:
                per_doc.append(flat[pos:pos + len(d.sentences)])
                pos += len(d.sentences)
        elif True in declared:
            per_doc = [read_vectors(e.vectors, d) for e, d in zip(config.entries, docs)]
        else:
            per_doc = [[None] * len(d.sentences) for d in docs]
    except (OSError, VectorError) as err:
        raise CorpusError(f"external vectors: {err}") from err
    items = []
    for e, doc, vecs in zip(config.entries, docs, per_doc):
        sid = config.resolve(e.name)
        items.extend(LabeledSentence(s, sid, v) for s, v in zip(doc.sentences, vecs))
    return make_training_set(items, config, allow_copy)


def split(ts: TrainingSet, dev_fraction: float, seed: int) -> tuple[TrainingSet, TrainingSet]:
    """Sentence-level split stratified by source id, deterministic in ``seed``."""
    if not 0 <= dev_fraction < 1:
        raise ValueError("dev_fraction must be in [0, 1)")
    by_source: dict[int, list[int]] = {}
    for i, item in enumerate(ts.sentences):
        by_source.setdefault(item.source_id, []).append(i)
    rng = random.Random(seed)
    dev_idx: set[int] = set()
    for sid in sorted(by_source):
        idx = by_source[sid]
        k = int(len(idx) * dev_fraction)
        if dev_fraction > 0 and k == 0 and len(idx) >= 2:
            k = 1
        dev_idx.update(rng.sample(idx, k))
    train = [s for i, s in enumerate(ts.sentences) if i not in dev_idx]
    dev = [s for i, s in enumerate(ts.sentences) if i in dev_idx]
    return (make_training_set(train, ts.sources, ts.allow_copy, ts.upos_labels),
            make_training_set(dev, ts.sources, ts.allow_copy, ts.upos_labels))


def document_items(doc: Document, source_id: int, vectors=None) -> list[LabeledSentence]:
    vectors = vectors if vectors is not None else [None] * len(doc.sentences)
    return [LabeledSentence(s, source_id, v) for s, v in zip(doc.sentences, vectors)]
