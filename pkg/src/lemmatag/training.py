"""SGD training of the joint classifier and the most-frequent baseline."""

from __future__ import annotations

import logging
import random
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .conllu import Sentence
from .corpus import Granularity, LabeledSentence, TrainingSet, split
from .model import FeatureConfig, HeadWeights, ModelParams, Prediction, TEMPLATES, _features, predict_sentence
from .rules import IDENTITY_RULE, apply_rule, encode_rule, format_rule, lower, parse_rule

log = logging.getLogger(__name__)

# share of primary sentences replayed under the reserved unknown source id
UNKNOWN_REPLAY = 0.05


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    epochs: int = 10
    learning_rate: float = 0.1
    seed: int = 42
    dev_fraction: float = 0.1
    dim: int = 1 << 20
    window: int = 2
    allow_copy: bool = False
    templates: tuple[str, ...] = TEMPLATES

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 <= self.dev_fraction < 1:
            raise ValueError("dev_fraction must be in [0, 1)")

    @classmethod
    def from_json(cls, d: dict) -> Hyperparams:
        d = dict(d)
        if "templates" in d:
            d["templates"] = tuple(d["templates"])
        if "lr" in d:
            d["learning_rate"] = d.pop("lr")
        return cls(**d)


@dataclass
class EpochLog:
    epoch: int
    loss: float
    dev_lemma: float | None
    dev_upos: float | None


@dataclass
class TrainResult:
    params: ModelParams
    history: list[EpochLog] = field(default_factory=list)
    best_epoch: int = 0


class _Example:
    __slots__ = ("ids", "rows", "source", "dense", "upos", "rule")

    def __init__(self, ids, source, dense, upos, rule):
        self.ids, self.source, self.dense, self.upos, self.rule = ids, source, dense, upos, rule
        self.rows = None


def _examples(items, config, upos_index, rule_index, allow_copy):
    for item in items:
        words = item.sentence.words
        forms = [t.form for t in words]
        for i, t in enumerate(words):
            dense = None if item.vectors is None else item.vectors[i]
            fv = _features(forms, i, item.source_id, dense, config)
            u = upos_index.get(t.upos, -1) if t.upos is not None else -1
            r = -1
            if t.lemma is not None:
                r = rule_index.get(format_rule(encode_rule(t.form, t.lemma, allow_copy)), -1)
            if u >= 0 or r >= 0:
                yield _Example(fv.sparse, fv.source_id, fv.dense, u, r)


def _replay(ts: TrainingSet, seed: int) -> list[LabeledSentence]:
    sources = ts.sources
    if sources.granularity is Granularity.MERGED:
        return []
    primary = sources.primary_ids()
    pool = [s for s in ts.sentences if s.source_id in primary]
    k = int(len(pool) * UNKNOWN_REPLAY)
    if not pool or k == 0:
        return []
    rng = random.Random(f"replay-{seed}")
    picked = sorted(rng.sample(range(len(pool)), k))
    return [LabeledSentence(pool[i].sentence, sources.unknown_id, pool[i].vectors) for i in picked]


def _sgd_step(w: HeadWeights, ex: _Example, label: int, lr: float) -> float:
    rows = ex.rows
    s = w.sparse[rows].sum(axis=0) + w.source[ex.source]
    if ex.dense is not None:
        s += ex.dense @ w.dense
    s -= s.max()
    p = np.exp(s)
    z = p.sum()
    p /= z
    loss = float(np.log(z) - s[label])
    p[label] -= 1.0
    g = lr * p
    w.sparse[rows] -= g
    w.source[ex.source] -= g
    if ex.dense is not None:
        w.dense[:] -= np.outer(ex.dense, g)
    return loss


def _freeze(config, ts, feature_ids, upos, rule) -> ModelParams:
    return ModelParams(config, ts.upos_labels, ts.inventory, ts.sources, feature_ids.copy(),
                       HeadWeights(*(a.copy() for a in upos)), HeadWeights(*(a.copy() for a in rule)))


def train(ts: TrainingSet, hp: Hyperparams = Hyperparams()) -> TrainResult:
    """Train both heads with per-token SGD on the summed softmax losses.

    A dev split is held out with ``hp.dev_fraction``; the epoch with the best
    dev lemma accuracy is returned (ties go to the later epoch, and without
    a dev set the last epoch wins).
    """
    if not ts.sentences or not any(True for _ in ts.words()):
        raise TrainingError("empty training data")
    train_ts, dev_ts = split(ts, hp.dev_fraction, hp.seed)
    if len(train_ts.inventory) == 0 and not train_ts.upos_labels:
        raise TrainingError("training data has neither lemmas nor UPOS tags")

    config = FeatureConfig(hp.dim, hp.window, tuple(hp.templates), hp.allow_copy, ts.vector_width)
    upos_index = {u: i for i, u in enumerate(train_ts.upos_labels)}
    items = list(train_ts.sentences) + _replay(train_ts, hp.seed)
    examples = list(_examples(items, config, upos_index, train_ts.inventory.index, hp.allow_copy))
    if not examples:
        raise TrainingError("no usable training tokens")

    feature_ids = np.unique(np.concatenate([ex.ids for ex in examples]))
    for ex in examples:
        ex.rows = np.searchsorted(feature_ids, ex.ids)

    n_src, width = ts.sources.num_ids, config.vector_width
    n_upos, n_rules = len(train_ts.upos_labels), len(train_ts.inventory)
    upos = HeadWeights(np.zeros((len(feature_ids), n_upos)), np.zeros((width, n_upos)), np.zeros((n_src, n_upos)))
    rule = HeadWeights(np.zeros((len(feature_ids), n_rules)), np.zeros((width, n_rules)), np.zeros((n_src, n_rules)))

    rng = random.Random(hp.seed)
    order = list(range(len(examples)))
    total_steps = hp.epochs * len(examples)
    step = 0
    result = TrainResult(params=None)
    best = None
    for epoch in range(1, hp.epochs + 1):
        rng.shuffle(order)
        loss = 0.0
        for k in order:
            ex = examples[k]
            lr = hp.learning_rate * (1.0 - step / total_steps)
            step += 1
            if ex.upos >= 0:
                loss += _sgd_step(upos, ex, ex.upos, lr)
            if ex.rule >= 0:
                loss += _sgd_step(rule, ex, ex.rule, lr)
        params = _freeze(config, train_ts, feature_ids, upos, rule)
        dev_lemma = dev_upos = None
        if dev_ts.sentences:
            lem, pos = _score_items(params, dev_ts.sentences)
            dev_lemma, dev_upos = lem.percent, pos.percent
        entry = EpochLog(epoch, loss / len(examples), dev_lemma, dev_upos)
        result.history.append(entry)
        log.info("epoch %d loss %.4f dev lemma %s upos %s", epoch, entry.loss,
                 "-" if dev_lemma is None else f"{dev_lemma:.2f}",
                 "-" if dev_upos is None else f"{dev_upos:.2f}")
        key = -1.0 if dev_lemma is None else dev_lemma
        if best is None or key >= best:
            best = key
            result.params, result.best_epoch = params, epoch
    return result


class _Count:
    def __init__(self):
        self.correct = self.total = 0

    @property
    def percent(self):
        return 100.0 * self.correct / self.total if self.total else None


def _score_items(model, items) -> tuple[_Count, _Count]:
    lem, pos = _Count(), _Count()
    for item in items:
        preds = predict(model, item.sentence, item.source_id, item.vectors)
        for t, p in zip(item.sentence.words, preds):
            if t.lemma is not None:
                lem.total += 1
                lem.correct += p.lemma == t.lemma
            if t.upos is not None:
                pos.total += 1
                pos.correct += p.upos == t.upos
    return lem, pos


@dataclass(frozen=True)
class BaselineModel:
    """Per lowercased form: the most frequent rule and tag seen in training."""

    rules: dict[str, str]
    tags: dict[str, str]
    default_tag: str | None


def baseline_most_frequent(ts: TrainingSet) -> BaselineModel:
    if not ts.sentences:
        raise TrainingError("empty training data")
    rule_counts: dict[str, Counter] = {}
    tag_counts: dict[str, Counter] = {}
    all_tags: Counter = Counter()
    for t in ts.words():
        key = lower(t.form)
        if t.lemma is not None:
            r = format_rule(encode_rule(t.form, t.lemma, ts.allow_copy))
            rule_counts.setdefault(key, Counter())[r] += 1
        if t.upos is not None:
            tag_counts.setdefault(key, Counter())[t.upos] += 1
            all_tags[t.upos] += 1
    index = ts.inventory.index
    rules = {f: min(c, key=lambda r: (-c[r], index.get(r, len(index)))) for f, c in rule_counts.items()}
    labels = {u: i for i, u in enumerate(ts.upos_labels)}
    tags = {f: min(c, key=lambda u: (-c[u], labels.get(u, len(labels)))) for f, c in tag_counts.items()}
    default = min(all_tags, key=lambda u: (-all_tags[u], labels.get(u, len(labels)))) if all_tags else None
    return BaselineModel(rules, tags, default)


def predict_baseline(model: BaselineModel, sentence: Sentence) -> list[Prediction]:
    out = []
    for t in sentence.words:
        key = lower(t.form)
        rule = parse_rule(model.rules.get(key, IDENTITY_RULE))
        out.append(Prediction(model.tags.get(key, model.default_tag), rule, apply_rule(rule, t.form), 1.0, 1.0))
    return out


def predict(model, sentence: Sentence, source_id: int = 0, ext=None) -> list[Prediction]:
    """Predict with either a trained ``ModelParams`` or a ``BaselineModel``."""
    if isinstance(model, BaselineModel):
        return predict_baseline(model, sentence)
    return predict_sentence(model, sentence, source_id, ext)
