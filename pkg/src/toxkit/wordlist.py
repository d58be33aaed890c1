"""Lexical toxicity detection over per-language toxic wordlists.

Wordlist file format: UTF-8, one entry per line, ``#`` comment lines,
optional first directive line ``!match: token`` or ``!match: substring``.
Entries are Unicode case-folded at load.

Token matching case-folds the text, splits on Unicode whitespace and
strips leading/trailing punctuation and symbol characters from each
token (internal apostrophes/hyphens survive). Multi-word entries match
consecutive token runs. Substring matching counts every occurrence,
overlapping included.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, field

from .errors import FormatError, ValidationError

MATCH_MODES = ("token", "substring")


@dataclass(frozen=True)
class WordList:
    lang: str
    entries: frozenset[str]
    match_mode: str = "token"

    def __post_init__(self):
        if self.match_mode not in MATCH_MODES:
            raise ValidationError(f"unknown match mode {self.match_mode!r}")
        if not self.entries:
            raise ValidationError(f"wordlist for {self.lang!r} is empty")
        if any(not e for e in self.entries):
            raise ValidationError("wordlist entries must be nonempty")


@dataclass(frozen=True)
class LexicalDetection:
    utterance_id: str
    matched_tokens: tuple[str, ...]

    @property
    def is_toxic(self) -> bool:
        return len(self.matched_tokens) > 0


def load_wordlist(path, lang: str | None = None) -> WordList:
    """Load a ``<lang>.txt`` wordlist file."""
    import os

    if lang is None:
        lang = os.path.splitext(os.path.basename(str(path)))[0]
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    match_mode = "token"
    entries = set()
    for i, raw in enumerate(lines):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("!"):
            if i > 0 or not line.startswith("!match:"):
                raise FormatError(f"{path}: malformed directive {line!r}")
            mode = line[len("!match:") :].strip()
            if mode not in MATCH_MODES:
                raise FormatError(f"{path}: unknown match mode {mode!r}")
            match_mode = mode
            continue
        entries.add(line.casefold())
    if not entries:
        raise FormatError(f"{path}: no entries after removing comments/blanks")
    return WordList(lang=lang, entries=frozenset(entries), match_mode=match_mode)


def _strip_edge_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start])[0] in "PS":
        start += 1
    while end > start and unicodedata.category(token[end - 1])[0] in "PS":
        end -= 1
    return token[start:end]


def tokenize(text: str) -> list[str]:
    """Case-fold, split on Unicode whitespace, strip edge punctuation."""
    tokens = [_strip_edge_punct(t) for t in text.casefold().split()]
    return [t for t in tokens if t]


def detect(text: str, wordlist: WordList, utterance_id: str = "") -> LexicalDetection:
    """Match a wordlist against one text; pure and deterministic."""
    matched: list[str] = []
    if wordlist.match_mode == "substring":
        folded = text.casefold()
        for entry in sorted(wordlist.entries):
            n = sum(
                1
                for i in range(len(folded) - len(entry) + 1)
                if folded[i : i + len(entry)] == entry
            )
            matched.extend([entry] * n)
    else:
        tokens = tokenize(text)
        for entry in sorted(wordlist.entries):
            parts = entry.split()
            if len(parts) == 1:
                matched.extend([entry] * tokens.count(entry))
            else:
                for i in range(len(tokens) - len(parts) + 1):
                    if tokens[i : i + len(parts)] == parts:
                        matched.append(entry)
    return LexicalDetection(utterance_id=utterance_id, matched_tokens=tuple(matched))


def detection_score(detection: LexicalDetection) -> float:
    """Two-point score so threshold/AUC machinery applies uniformly."""
    return 1.0 if detection.is_toxic else 0.0


@dataclass(frozen=True)
class TokenStats:
    token: str
    output_count: int
    true_positive_count: int
    precision: float
    recall_share: float  # TP over all toxic items, multi-counted


@dataclass(frozen=True)
class TokenReport:
    tokens: tuple[TokenStats, ...]
    total_toxic: int
    deduplicated_recall_share: float  # toxic items hit by any token, counted once
    raw_recall_share_sum: float = field(default=0.0)

    def by_precision(self) -> list[TokenStats]:
        return sorted(self.tokens, key=lambda t: (-t.precision, t.token))

    def by_output(self) -> list[TokenStats]:
        return sorted(self.tokens, key=lambda t: (-t.output_count, t.token))


def token_report(detections, labels: dict[str, bool]) -> TokenReport:
    """Per-token precision/output analysis against human verdicts.

    ``labels`` maps utterance_id to a toxic/not-toxic verdict and must
    cover every detection.
    """
    output = Counter()
    tp = Counter()
    toxic_hits: dict[str, set[str]] = {}
    for det in detections:
        if det.utterance_id not in labels:
            raise ValidationError(f"no label for utterance {det.utterance_id!r}")
        toxic = labels[det.utterance_id]
        for token in det.matched_tokens:
            output[token] += 1
            if toxic:
                tp[token] += 1
                toxic_hits.setdefault(token, set()).add(det.utterance_id)
    total_toxic = sum(1 for v in labels.values() if v)
    stats = []
    for token in sorted(output):
        out_n = output[token]
        tp_n = tp[token]
        stats.append(
            TokenStats(
                token=token,
                output_count=out_n,
                true_positive_count=tp_n,
                precision=tp_n / out_n,
                recall_share=tp_n / total_toxic if total_toxic else 0.0,
            )
        )
    union = set().union(*toxic_hits.values()) if toxic_hits else set()
    return TokenReport(
        tokens=tuple(stats),
        total_toxic=total_toxic,
        deduplicated_recall_share=len(union) / total_toxic if total_toxic else 0.0,
        raw_recall_share_sum=sum(s.recall_share for s in stats),
    )
