"""Sidecar files of externally computed per-token vectors.

Line 1 declares the width. Then one line of TAB-separated reals per
syntactic word in document order, and a blank line after every sentence.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class VectorError(ValueError):
    pass


def read_vector_blocks(path: str | Path) -> tuple[int, list[np.ndarray]]:
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    try:
        width = int(lines[0].strip())
    except (ValueError, IndexError):
        raise VectorError(f"{path}: line 1 must declare the vector width") from None
    if width <= 0:
        raise VectorError(f"{path}: width must be positive")
    blocks, rows = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if line.strip() == "":
            if rows:
                blocks.append(np.array(rows, dtype=np.float64))
                rows = []
            continue
        try:
            row = [float(x) for x in line.split("\t")]
        except ValueError:
            raise VectorError(f"{path}: line {lineno}: not a list of reals") from None
        if len(row) != width:
            raise VectorError(f"{path}: line {lineno}: expected {width} values, found {len(row)}")
        rows.append(row)
    if rows:
        blocks.append(np.array(rows, dtype=np.float64))
    return width, blocks


def align_blocks(blocks: list[np.ndarray], sentences, source: str = "vectors") -> list[np.ndarray]:
    """Check that blocks match the sentences' word counts one to one."""
    sentences = [s for s in sentences if s.words]
    if len(blocks) != len(sentences):
        raise VectorError(f"{source}: {len(blocks)} vector blocks for {len(sentences)} sentences")
    for i, (block, s) in enumerate(zip(blocks, sentences)):
        if block.shape[0] != len(s.words):
            raise VectorError(f"{source}: sentence {i + 1} has {len(s.words)} words "
                              f"but {block.shape[0]} vectors")
    return blocks


def read_vectors(path: str | Path, doc) -> list[np.ndarray | None]:
    """Per-sentence vector matrices for ``doc`` (``None`` for sentences without words)."""
    _, blocks = read_vector_blocks(path)
    return _distribute(align_blocks(blocks, doc.sentences, str(path)), doc.sentences)


def _distribute(blocks, sentences):
    it = iter(blocks)
    return [next(it) if s.words else None for s in sentences]


def write_vectors(path: str | Path, width: int, per_sentence) -> None:
    out = [str(width)]
    for block in per_sentence:
        if block is None or len(block) == 0:
            continue
        out.extend("\t".join(repr(float(x)) for x in row) for row in block)
        out.append("")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
