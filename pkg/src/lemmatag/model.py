"""Joint two-head linear classifier over hashed token features.

Both heads (UPOS and lemma rule) score the same feature vector: hashed
sparse templates, an optional dense external vector, and a one-hot source
block. Weights are kept only for hashed ids seen in training; every other
id has an implicit zero row.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .conllu import Sentence
from .corpus import RuleInventory, SourceMap
from .rules import IDENTITY_RULE, LemmaRule, apply_rule, consumed, lower, parse_rule
from .rules import Absolute

MAGIC = b"LEMMA-ENGINE/1\n"
BOS, EOS = "<s>", "</s>"
TEMPLATES = ("bias", "form", "affix", "shape", "context", "trigram")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureConfig:
    dim: int = 1 << 20
    window: int = 2
    templates: tuple[str, ...] = TEMPLATES
    allow_copy: bool = False
    vector_width: int = 0

    def to_json(self):
        return {"dim": self.dim, "window": self.window, "templates": list(self.templates),
                "allow_copy": self.allow_copy, "vector_width": self.vector_width}

    @classmethod
    def from_json(cls, d):
        return cls(d["dim"], d["window"], tuple(d["templates"]), d["allow_copy"], d["vector_width"])


class FeatureVector(NamedTuple):
    sparse: np.ndarray  # sorted unique hashed ids
    source_id: int
    dense: np.ndarray | None = None


def word_shape(form: str) -> str:
    out = []
    run = 0
    for c in form:
        k = "X" if c.isupper() else "x" if c.isalpha() else "d" if c.isdigit() else c
        run = run + 1 if out and out[-1] == k else 1
        if run <= 3:
            out.append(k)
    return "".join(out)


def feature_strings(forms: list[str], i: int, config: FeatureConfig) -> list[str]:
    """Template strings for word ``i`` of a sentence given as its list of forms."""
    form = forms[i]
    w = lower(form)
    t = config.templates
    feats = []
    if "bias" in t:
        feats.append("b")
    if "form" in t:
        feats.append("w=" + w)
    if "affix" in t:
        for k in range(1, min(4, len(w)) + 1):
            feats.append(f"p{k}={w[:k]}")
            feats.append(f"s{k}={w[-k:]}")
    if "shape" in t:
        feats.append("shape=" + word_shape(form))
    if "context" in t:
        for off in range(-config.window, config.window + 1):
            if off == 0:
                continue
            j = i + off
            ctx = BOS if j < 0 else EOS if j >= len(forms) else lower(forms[j])
            feats.append(f"w{off:+d}={ctx}")
    if "trigram" in t:
        for k in range(len(w) - 2):
            feats.append("c3=" + w[k:k + 3])
    return feats


def hash_feature(s: str, dim: int) -> int:
    return zlib.crc32(s.encode("utf-8")) % dim


def extract_features(sentence: Sentence, index: int, source_id: int,
                     ext: np.ndarray | None = None, config: FeatureConfig = FeatureConfig()) -> FeatureVector:
    """Features of the ``index``-th syntactic word of ``sentence``."""
    forms = [t.form for t in sentence.words]
    return _features(forms, index, source_id, ext, config)


def _features(forms, index, source_id, ext, config):
    ids = np.unique(np.fromiter((hash_feature(f, config.dim) for f in feature_strings(forms, index, config)),
                                dtype=np.int64))
    if ext is not None:
        ext = np.asarray(ext, dtype=np.float64)
        if ext.shape != (config.vector_width,):
            raise ModelError(f"external vector width {ext.shape[-1] if ext.ndim else 0} "
                             f"does not match model width {config.vector_width}")
    elif config.vector_width:
        raise ModelError(f"model expects external vectors of width {config.vector_width}")
    return FeatureVector(ids, source_id, ext)


class HeadWeights(NamedTuple):
    sparse: np.ndarray  # [n_features x n_labels]
    dense: np.ndarray   # [vector_width x n_labels]
    source: np.ndarray  # [n_sources x n_labels]


@dataclass(frozen=True, eq=False)
class ModelParams:
    config: FeatureConfig
    upos_labels: tuple[str, ...]
    inventory: RuleInventory
    sources: SourceMap
    feature_ids: np.ndarray
    upos: HeadWeights
    rule: HeadWeights
    consumed: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for a in (self.feature_ids, *self.upos, *self.rule):
            a.flags.writeable = False
        n = [0 if isinstance(r.edit, Absolute) else consumed(r.edit.prefix) + consumed(r.edit.suffix)
             for r in (self.inventory.rule(i) for i in range(len(self.inventory)))]
        object.__setattr__(self, "consumed", np.array(n, dtype=np.int64))

    def __eq__(self, other):
        if not isinstance(other, ModelParams):
            return NotImplemented
        return (self.config == other.config and self.upos_labels == other.upos_labels
                and self.inventory.rules == other.inventory.rules
                and self.inventory.examples == other.inventory.examples
                and self.sources == other.sources
                and np.array_equal(self.feature_ids, other.feature_ids)
                and all(np.array_equal(a, b) for a, b in zip(self.upos, other.upos))
                and all(np.array_equal(a, b) for a, b in zip(self.rule, other.rule)))

    def rows(self, ids: np.ndarray) -> np.ndarray:
        """Weight rows of the hashed ids seen in training; unseen ids are dropped."""
        n = len(self.feature_ids)
        if n == 0:
            return np.empty(0, dtype=np.int64)
        pos = np.searchsorted(self.feature_ids, ids)
        hit = pos < n
        hit[hit] = self.feature_ids[pos[hit]] == ids[hit]
        return pos[hit]

    def scores(self, fv: FeatureVector) -> tuple[np.ndarray, np.ndarray]:
        """Raw scores of both heads for one feature vector."""
        if not 0 <= fv.source_id < self.sources.num_ids:
            raise ModelError(f"source id {fv.source_id} out of range")
        rows = self.rows(fv.sparse)
        out = []
        for head in (self.upos, self.rule):
            s = head.sparse[rows].sum(axis=0) + head.source[fv.source_id]
            if fv.dense is not None:
                s = s + fv.dense @ head.dense
            out.append(s)
        return out[0], out[1]


@dataclass(frozen=True)
class Prediction:
    upos: str | None
    rule: LemmaRule
    lemma: str
    upos_score: float
    rule_score: float


def _softmax(x):
    e = np.exp(x - x.max())
    return e / e.sum()


def predict_sentence(params: ModelParams, sentence: Sentence, source_id: int,
                     ext: np.ndarray | None = None) -> list[Prediction]:
    """One prediction per syntactic word; ranges and empty nodes are skipped."""
    forms = [t.form for t in sentence.words]
    if ext is not None and len(ext) != len(forms):
        raise ModelError(f"{len(ext)} external vectors for {len(forms)} words")
    preds = []
    for i, form in enumerate(forms):
        fv = _features(forms, i, source_id, None if ext is None else ext[i], params.config)
        upos_s, rule_s = params.scores(fv)
        if len(upos_s):
            u = int(np.argmax(upos_s))
            upos, upos_score = params.upos_labels[u], float(_softmax(upos_s)[u])
        else:
            upos, upos_score = None, 0.0
        applicable = params.consumed <= len(lower(form))
        if applicable.any():
            masked = np.where(applicable, rule_s, -np.inf)
            r = int(np.argmax(masked))
            rule, rule_score = params.inventory.rule(r), float(_softmax(masked)[r])
        else:
            rule, rule_score = parse_rule(IDENTITY_RULE), 0.0
        preds.append(Prediction(upos, rule, apply_rule(rule, form), upos_score, rule_score))
    return preds


# -- model file ---------------------------------------------------------------

def _arrays(params: ModelParams):
    yield "feature_ids", params.feature_ids
    for head in ("upos", "rule"):
        w = getattr(params, head)
        for part in HeadWeights._fields:
            yield f"{head}.{part}", getattr(w, part)


def save_model(params: ModelParams, path: str | Path) -> None:
    """Write ``params`` as magic line, JSON header line, then raw little-endian arrays."""
    blobs, layout = [], []
    for name, a in _arrays(params):
        dtype = "<i8" if a.dtype.kind == "i" else "<f8"
        b = np.ascontiguousarray(a, dtype=dtype).tobytes()
        layout.append({"name": name, "dtype": dtype, "shape": list(a.shape), "nbytes": len(b)})
        blobs.append(b)
    header = {
        "config": params.config.to_json(),
        "hashing": "crc32 of the UTF-8 template string modulo dim; collisions are shared",
        "upos_labels": list(params.upos_labels),
        "rules": [[r, f] for r, f in params.inventory.rules],
        "examples": {r: [list(p) for p in ex] for r, ex in params.inventory.examples.items()},
        "sources": params.sources.to_json(),
        "arrays": layout,
    }
    head = json.dumps(header, ensure_ascii=False, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(head)))
        f.write(head)
        for b in blobs:
            f.write(b)


def load_model(path: str | Path) -> ModelParams:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise ModelError(f"{path}: not a LEMMA-ENGINE/1 model file")
    try:
        pos = len(MAGIC)
        (n,) = struct.unpack_from("<Q", data, pos)
        pos += 8
        header = json.loads(data[pos:pos + n].decode("utf-8"))
        pos += n
        arrays = {}
        for spec in header["arrays"]:
            end = pos + spec["nbytes"]
            if end > len(data):
                raise ModelError(f"{path}: truncated model file")
            arrays[spec["name"]] = np.frombuffer(data[pos:end], dtype=spec["dtype"]).reshape(spec["shape"]).copy()
            pos = end
        if pos != len(data):
            raise ModelError(f"{path}: trailing bytes in model file")
        inventory = RuleInventory([(r, f) for r, f in header["rules"]],
                                  {r: [tuple(p) for p in ex] for r, ex in header["examples"].items()})
        return ModelParams(
            config=FeatureConfig.from_json(header["config"]),
            upos_labels=tuple(header["upos_labels"]),
            inventory=inventory,
            sources=SourceMap.from_json(header["sources"]),
            feature_ids=arrays["feature_ids"].astype(np.int64),
            upos=HeadWeights(*(arrays[f"upos.{p}"] for p in HeadWeights._fields)),
            rule=HeadWeights(*(arrays[f"rule.{p}"] for p in HeadWeights._fields)),
        )
    except ModelError:
        raise
    except (struct.error, KeyError, ValueError, TypeError) as e:
        raise ModelError(f"{path}: corrupt model file ({e})") from e
