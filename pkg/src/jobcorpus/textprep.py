"""Posting preparation: cleaning, segmentation, stop words, duplicate removal.

Postings arrive as raw title/description pairs.  Before anything downstream
sees them they are normalized (boilerplate sentences dropped), segmented into
tokens (whitespace splitting for alphabetic text, overlapping character
bigrams for CJK runs), filtered against a stop list, checked for garbled
content, and de-duplicated by character-shingle Jaccard similarity.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .errors import ConfigError, LoadError

# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class RawPosting:
    """A posting exactly as ingested: opaque id, title, free-text body."""

    id: str
    title: str
    body: str


@dataclass(frozen=True)
class Document:
    """A cleaned posting plus its ordered token list."""

    id: str
    title: str
    body: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class DroppedPosting:
    id: str
    reason: str  # "garbled" or "duplicate"
    witness: str | None = None  # kept near-duplicate, when reason == "duplicate"


# ---------------------------------------------------------------------------
# Cleaning

_EMAIL_RE = re.compile(r"[\w.+-]+@[\w-]+\.[\w.-]+")
_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_WHITESPACE_RE = re.compile(r"\s+")
# Sentence pieces end at a terminator (ASCII or CJK) or a line break.
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?;。！？；\n])")


@dataclass(frozen=True)
class CleaningRules:
    """Sentence-level drop rules applied by :func:`normalize`.

    A sentence matching any pattern is removed whole; emails and URLs are
    always treated as boilerplate markers.
    """

    drop_patterns: tuple[re.Pattern, ...] = ()

    @staticmethod
    def default(extra_patterns: Iterable[str] = ()) -> "CleaningRules":
        compiled = [_EMAIL_RE, _URL_RE]
        for pat in extra_patterns:
            try:
                compiled.append(re.compile(pat))
            except re.error as exc:
                raise ConfigError(f"bad cleaning pattern {pat!r}: {exc}")
        return CleaningRules(drop_patterns=tuple(compiled))


def normalize(raw: RawPosting, rules: CleaningRules | None = None) -> RawPosting:
    """Drop boilerplate sentences from the body; collapse whitespace.

    The title is left untouched.  The operation is idempotent: surviving
    sentences contain no rule matches, so a second pass is a no-op.
    """
    if rules is None:
        rules = CleaningRules.default()
    pieces = _SENTENCE_SPLIT_RE.split(raw.body)
    kept = [
        piece
        for piece in pieces
        if piece.strip() and not any(p.search(piece) for p in rules.drop_patterns)
    ]
    body = _WHITESPACE_RE.sub(" ", "".join(kept)).strip()
    return RawPosting(id=raw.id, title=raw.title, body=body)


# ---------------------------------------------------------------------------
# Segmentation

# Han ideographs (URO + extension A).  Segmented as overlapping bigrams.
_CJK_CLASS = "一-鿿㐀-䶿"
_TOKEN_RUN_RE = re.compile(rf"([{_CJK_CLASS}]+)|([^\W_{_CJK_CLASS}]+)")

Segmenter = Callable[[str], list[str]]


def segment_default(text: str) -> list[str]:
    """Lowercased word tokens; CJK runs become overlapping character bigrams."""
    out: list[str] = []
    for match in _TOKEN_RUN_RE.finditer(text):
        cjk, word = match.group(1), match.group(2)
        if word is not None:
            out.append(word.lower())
        elif len(cjk) == 1:
            out.append(cjk)
        else:
            out.extend(cjk[i : i + 2] for i in range(len(cjk) - 1))
    return out


def segment_whitespace(text: str) -> list[str]:
    """Plain whitespace splitting, for corpora tokenized upstream."""
    return text.split()


_SEGMENTERS: dict[str, Segmenter] = {
    "default": segment_default,
    "whitespace": segment_whitespace,
}


def register_segmenter(name: str, fn: Segmenter) -> None:
    _SEGMENTERS[name] = fn


def tokenize(text: str, segmenter: str = "default") -> list[str]:
    if segmenter == "pretokenized":
        raise ConfigError("the pretokenized segmenter needs per-record token lists")
    try:
        fn = _SEGMENTERS[segmenter]
    except KeyError:
        raise ConfigError(f"unknown segmenter {segmenter!r}") from None
    return fn(text)


def filter_stopwords(tokens: Sequence[str], stops: frozenset[str]) -> list[str]:
    return [t for t in tokens if t not in stops]


def load_stoplist(path) -> frozenset[str]:
    """One token per line; blank lines and leading/trailing space ignored."""
    entries = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            token = line.strip()
            if token:
                entries.add(token)
    return frozenset(entries)


# ---------------------------------------------------------------------------
# Garbled content

def nonletter_ratio(text: str) -> float:
    """Fraction of non-whitespace characters that are not letters."""
    chars = [c for c in text if not c.isspace()]
    if not chars:
        return 1.0
    return sum(1 for c in chars if not c.isalpha()) / len(chars)


# ---------------------------------------------------------------------------
# Near-duplicate removal

def shingles(text: str, k: int = 4) -> frozenset[str]:
    """Character k-grams over the whitespace-collapsed text."""
    s = _WHITESPACE_RE.sub(" ", text.strip())
    if not s:
        return frozenset()
    if len(s) <= k:
        return frozenset((s,))
    return frozenset(s[i : i + k] for i in range(len(s) - k + 1))


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    inter = len(a & b)
    return inter / (len(a) + len(b) - inter)


def dedup(
    docs: Sequence[Document], threshold: float = 0.9
) -> tuple[list[Document], list[tuple[Document, str]]]:
    """Drop near-duplicate bodies, keeping the lexicographically smallest id.

    Documents are examined in ascending id order; one is dropped when some
    already-kept document's body has shingle-Jaccard similarity at or above
    the threshold, so every dropped document has a kept witness and no two
    kept documents are near-duplicates of each other.

    Returns (kept, dropped) where dropped pairs each document with its
    witness id.  Kept documents retain their input order.
    """
    if not (0.0 < threshold <= 1.0):
        raise ConfigError(f"dedup threshold must be in (0, 1], got {threshold}")
    sets = {d.id: shingles(d.body) for d in docs}
    by_shingle: dict[str, list[str]] = defaultdict(list)
    kept_ids: set[str] = set()
    empty_kept: str | None = None  # empty shingle sets never share the index
    dropped_by_id: dict[str, str] = {}
    for doc in sorted(docs, key=lambda d: d.id):
        mine = sets[doc.id]
        witness = None
        if not mine:
            if empty_kept is not None:
                witness = empty_kept
        else:
            candidates: set[str] = set()
            for sh in mine:
                candidates.update(by_shingle.get(sh, ()))
            for other in sorted(candidates):
                if jaccard(mine, sets[other]) >= threshold:
                    witness = other
                    break
        if witness is None:
            kept_ids.add(doc.id)
            if mine:
                for sh in mine:
                    by_shingle[sh].append(doc.id)
            elif empty_kept is None:
                empty_kept = doc.id
        else:
            dropped_by_id[doc.id] = witness
    kept = [d for d in docs if d.id in kept_ids]
    dropped = [(d, dropped_by_id[d.id]) for d in docs if d.id in dropped_by_id]
    return kept, dropped


# ---------------------------------------------------------------------------
# End-to-end preparation


@dataclass(frozen=True)
class Preprocessor:
    """The shared cleaning/segmentation/stop-word path.

    Taxonomy descriptions run through :meth:`token_stream` as well, so
    documents and category descriptions share one vocabulary convention.
    """

    rules: CleaningRules = field(default_factory=CleaningRules.default)
    stops: frozenset[str] = frozenset()
    segmenter: str = "default"
    include_title: bool = True

    def token_stream(self, text: str) -> list[str]:
        return filter_stopwords(tokenize(text, self.segmenter), self.stops)

    def document(self, raw: RawPosting, tokens: Sequence[str] | None = None) -> Document:
        cleaned = normalize(raw, self.rules)
        if tokens is not None:
            toks = filter_stopwords(list(tokens), self.stops)
        else:
            text = self.text_of(cleaned)
            toks = filter_stopwords(tokenize(text, self.segmenter), self.stops)
        return Document(id=cleaned.id, title=cleaned.title, body=cleaned.body, tokens=tuple(toks))

    def text_of(self, posting: RawPosting) -> str:
        if self.include_title and posting.title:
            return f"{posting.title} {posting.body}" if posting.body else posting.title
        return posting.body


@dataclass
class IngestResult:
    kept: list[Document]
    dropped: list[DroppedPosting]


def ingest_postings(
    raws: Sequence[RawPosting],
    prep: Preprocessor,
    *,
    dedup_threshold: float = 0.9,
    max_nonletter: float = 0.5,
    pretokenized: dict[str, Sequence[str]] | None = None,
) -> IngestResult:
    """Run the full preparation path over an ingest batch.

    Garbled postings (empty token list, or non-letter ratio above the bound)
    and near-duplicates are dropped with a reason; everything else comes back
    as a ready Document.  Duplicate ids in one batch are a load error.
    """
    seen: set[str] = set()
    for raw in raws:
        if not raw.id:
            raise LoadError("posting with empty id")
        if raw.id in seen:
            raise LoadError(f"duplicate posting id {raw.id!r} in ingest batch")
        seen.add(raw.id)

    survivors: list[Document] = []
    dropped: list[DroppedPosting] = []
    for raw in raws:
        tokens = pretokenized.get(raw.id) if pretokenized is not None else None
        if prep.segmenter == "pretokenized" and tokens is None:
            raise LoadError(f"posting {raw.id!r} lacks a token list", path=None)
        doc = prep.document(raw, tokens=tokens)
        if not doc.tokens or nonletter_ratio(prep.text_of(doc)) > max_nonletter:
            dropped.append(DroppedPosting(id=raw.id, reason="garbled"))
            continue
        survivors.append(doc)
    kept, dup_pairs = dedup(survivors, threshold=dedup_threshold)
    for doc, witness in dup_pairs:
        dropped.append(DroppedPosting(id=doc.id, reason="duplicate", witness=witness))
    return IngestResult(kept=kept, dropped=dropped)
