import json
import zlib
from pathlib import Path

from lemmatag.conllu import read_document
from lemmatag.vectors import write_vectors

import numpy as np


def form_vector(form: str, width: int = 4) -> list[float]:
    """Deterministic stand-in for a pretrained embedding of ``form``."""
    h = zlib.crc32(form.lower()[-3:].encode("utf-8"))
    return [((h >> (8 * k)) & 0xFF) / 255.0 for k in range(width)]


def write_sidecar(path: Path, docs, width: int = 4) -> Path:
    blocks = []
    for doc in docs:
        for s in doc.sentences:
            if s.words:
                blocks.append(np.array([form_vector(t.form, width) for t in s.words]))
    write_vectors(path, width, blocks)
    return path


def corpus_docs(config_path: Path):
    cfg = json.loads(Path(config_path).read_text())
    return [read_document(Path(config_path).parent / c["path"]) for c in cfg["corpora"]]


def naive_recount(system_text: str, gold_text: str, case_insensitive: bool = False):
    """Count exact matches over raw word lines without the package's parser."""
    def rows(text):
        out = []
        for ln in text.splitlines():
            if ln and not ln.startswith("#"):
                cols = ln.split("\t")
                if cols[0].isdigit():
                    out.append(cols)
        return out

    lc = lt = uc = ut = 0
    for s, g in zip(rows(system_text), rows(gold_text), strict=True):
        if g[2] != "_":
            lt += 1
            a, b = (s[2].lower(), g[2].lower()) if case_insensitive else (s[2], g[2])
            lc += s[2] != "_" and a == b
        if g[3] != "_":
            ut += 1
            uc += s[3] == g[3]
    return 100.0 * lc / lt, 100.0 * uc / ut
