"""Lemma rules: a casing script plus an edit script.

A rule turns a word form into its lemma. Casing is handled separately from
editing: the form is lowercased, an edit script rewrites the prefix and the
suffix around the longest substring shared with the lowercased lemma, and
the casing script then restores the lemma's capitals.

Rule strings look like ``↓0;d¦-+u+s`` (suo -> suus) or ``↑0¦↓1;d¦``
(Caesar -> Caesar); a form with nothing in common with its lemma gets an
absolute script such as ``↓0;ais`` (eum -> is).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

UPPER = "↑"
LOWER = "↓"
SEP = "¦"
COPY = "→"

IDENTITY_RULE = "↓0;d¦"


class RuleError(ValueError):
    """Raised for unparseable rule strings and unencodable pairs."""


class NotApplicable(ValueError):
    """The rule cannot be applied to the given form."""


# Case mapping is restricted to characters that map one-to-one and back,
# so lowercasing followed by the casing script is always lossless.
def _lower_char(c: str) -> str:
    lo = c.lower()
    if len(lo) == 1 and lo != c and lo.upper() == c:
        return lo
    return c


def _upper_char(c: str) -> str:
    up = c.upper()
    if len(up) == 1 and up != c and up.lower() == c:
        return up
    return c


def lower(s: str) -> str:
    return "".join(map(_lower_char, s))


def upper(s: str) -> str:
    return "".join(map(_upper_char, s))


def is_upper(c: str) -> bool:
    return _lower_char(c) != c


@dataclass(frozen=True)
class Delete:
    def __str__(self):
        return "-"


@dataclass(frozen=True)
class Insert:
    ch: str

    def __str__(self):
        return "+" + self.ch


@dataclass(frozen=True)
class Copy:
    def __str__(self):
        return COPY


EditOp = Union[Delete, Insert, Copy]


@dataclass(frozen=True)
class CasingScript:
    # (is_upper, index); negative index counts from the end
    segments: tuple[tuple[bool, int], ...]

    def __str__(self):
        return SEP.join(f"{UPPER if up else LOWER}{i}" for up, i in self.segments)


@dataclass(frozen=True)
class Absolute:
    lemma: str

    def __str__(self):
        return "a" + self.lemma


@dataclass(frozen=True)
class Delta:
    prefix: tuple[EditOp, ...]
    suffix: tuple[EditOp, ...]

    def __str__(self):
        return "d" + "".join(map(str, self.prefix)) + SEP + "".join(map(str, self.suffix))


EditScript = Union[Absolute, Delta]


@dataclass(frozen=True)
class LemmaRule:
    casing: CasingScript
    edit: EditScript

    def __str__(self):
        return f"{self.casing};{self.edit}"


def extract_casing(lemma: str) -> CasingScript:
    segments = []
    previous = None
    half = len(lemma) // 2
    for i, c in enumerate(lemma):
        case = is_upper(c)
        if case != previous:
            segments.append((case, i if i <= half else i - len(lemma)))
            previous = case
    return CasingScript(tuple(segments))


def apply_casing(script: CasingScript, s: str) -> str:
    n = len(s)
    for up, index in script.segments:
        pos = index + n if index < 0 else index
        pos = min(max(pos, 0), n)
        s = s[:pos] + (upper(s[pos:]) if up else lower(s[pos:]))
    return s


def longest_common_root(form: str, lemma: str) -> tuple[int, int, int] | None:
    """Longest common substring as ``(form_start, lemma_start, length)``.

    Ties go to the smallest lemma start, then the smallest form start.
    """
    best = None
    best_len = 0
    # run[j] = length of the common run ending at form[i - 1] and lemma[j - 1]
    prev = [0] * (len(lemma) + 1)
    for i in range(1, len(form) + 1):
        cur = [0] * (len(lemma) + 1)
        fc = form[i - 1]
        for j in range(1, len(lemma) + 1):
            if fc == lemma[j - 1]:
                k = prev[j - 1] + 1
                cur[j] = k
                cand = (j - k, i - k)
                if k > best_len or (k == best_len and cand < best):
                    best_len, best = k, cand
        prev = cur
    if best is None:
        return None
    lemma_start, form_start = best
    return form_start, lemma_start, best_len


def min_edit_script(source: str, target: str, allow_copy: bool = False) -> list[EditOp]:
    if not allow_copy:
        return [Delete()] * len(source) + [Insert(c) for c in target]

    n, m = len(source), len(target)
    # cost[i][j]: cheapest script turning source[i:] into target[j:]
    cost = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n, -1, -1):
        for j in range(m, -1, -1):
            if i == n:
                cost[i][j] = m - j
            elif j == m:
                cost[i][j] = n - i
            else:
                best = min(cost[i + 1][j], cost[i][j + 1]) + 1
                if source[i] == target[j]:
                    best = min(best, cost[i + 1][j + 1])
                cost[i][j] = best

    ops: list[EditOp] = []
    i = j = 0
    while i < n or j < m:
        here = cost[i][j]
        if i < n and cost[i + 1][j] + 1 == here:
            ops.append(Delete())
            i += 1
        elif i < n and j < m and source[i] == target[j] and cost[i + 1][j + 1] == here:
            ops.append(Copy())
            i += 1
            j += 1
        else:
            ops.append(Insert(target[j]))
            j += 1
    return ops


def encode_rule(form: str, lemma: str, allow_copy: bool = False) -> LemmaRule:
    if not form or not lemma:
        raise RuleError(f"cannot encode empty form or lemma: {form!r} -> {lemma!r}")
    casing = extract_casing(lemma)
    f, l = lower(form), lower(lemma)
    root = longest_common_root(f, l)
    if root is None:
        return LemmaRule(casing, Absolute(l))
    fs, ls, n = root
    return LemmaRule(
        casing,
        Delta(
            tuple(min_edit_script(f[:fs], l[:ls], allow_copy)),
            tuple(min_edit_script(f[fs + n:], l[ls + n:], allow_copy)),
        ),
    )


def consumed(ops) -> int:
    """Number of form characters a region's ops read."""
    return sum(1 for op in ops if not isinstance(op, Insert))


def _run_ops(ops, chars: str) -> str:
    out = []
    pos = 0
    for op in ops:
        if isinstance(op, Insert):
            out.append(op.ch)
        elif isinstance(op, Copy):
            out.append(chars[pos])
            pos += 1
        else:
            pos += 1
    return "".join(out)


def is_applicable(rule: LemmaRule, form: str) -> bool:
    try:
        apply_rule(rule, form)
    except NotApplicable:
        return False
    return True


def apply_rule(rule: LemmaRule, form: str) -> str:
    edit = rule.edit
    if isinstance(edit, Absolute):
        if not form:
            raise NotApplicable("empty form")
        return apply_casing(rule.casing, edit.lemma)
    f = lower(form)
    cp, cs = consumed(edit.prefix), consumed(edit.suffix)
    if cp + cs > len(f):
        raise NotApplicable(f"rule {rule} consumes {cp + cs} characters of {form!r}")
    body = _run_ops(edit.prefix, f[:cp]) + f[cp:len(f) - cs] + _run_ops(edit.suffix, f[len(f) - cs:])
    return apply_casing(rule.casing, body)


def format_rule(rule: LemmaRule) -> str:
    return str(rule)


def _parse_casing(s: str) -> CasingScript:
    if s == "":
        return CasingScript(())
    segments = []
    for part in s.split(SEP):
        if len(part) < 2 or part[0] not in (UPPER, LOWER):
            raise RuleError(f"bad casing segment {part!r}")
        try:
            index = int(part[1:])
        except ValueError:
            raise RuleError(f"bad casing index in {part!r}") from None
        if str(index) != part[1:]:
            raise RuleError(f"non-canonical casing index in {part!r}")
        segments.append((part[0] == UPPER, index))
    return CasingScript(tuple(segments))


def _parse_ops(s: str, start: int, stop_at_sep: bool) -> tuple[tuple[EditOp, ...], int]:
    ops: list[EditOp] = []
    i = start
    while i < len(s):
        c = s[i]
        if c == "-":
            ops.append(Delete())
        elif c == COPY:
            ops.append(Copy())
        elif c == "+":
            if i + 1 >= len(s):
                raise RuleError(f"dangling '+' in {s!r}")
            i += 1
            ops.append(Insert(s[i]))
        elif c == SEP and stop_at_sep:
            return tuple(ops), i
        else:
            raise RuleError(f"unexpected {c!r} in edit script {s!r}")
        i += 1
    return tuple(ops), i


def parse_rule(s: str) -> LemmaRule:
    casing_part, sep, edit_part = s.partition(";")
    if not sep:
        raise RuleError(f"missing ';' in rule {s!r}")
    casing = _parse_casing(casing_part)
    if edit_part.startswith("a"):
        if len(edit_part) < 2:
            raise RuleError(f"empty absolute lemma in {s!r}")
        return LemmaRule(casing, Absolute(edit_part[1:]))
    if not edit_part.startswith("d"):
        raise RuleError(f"unknown edit marker in {s!r}")
    prefix, i = _parse_ops(edit_part, 1, stop_at_sep=True)
    if i >= len(edit_part):
        raise RuleError(f"missing '{SEP}' in delta script {s!r}")
    suffix, _ = _parse_ops(edit_part, i + 1, stop_at_sep=False)
    return LemmaRule(casing, Delta(prefix, suffix))
