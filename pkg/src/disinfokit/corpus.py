"""Tweet corpora: loading, filtering, rule-based labeling, and splitting.

A corpus is an immutable sequence of tweets and is the single input
every downstream stage consumes. Interchange formats are JSONL (one
object per line, field names matching :class:`Tweet`) and CSV with the
fixed column set ``id,text,author,retweeters,hashtags,timestamp,label``
where ``retweeters`` and ``hashtags`` are ';'-joined. Other flat CSV
layouts adapt through a column map (source name -> expected name).
Output is JSONL only. Lines starting with '#' are skipped on load so
that pipeline artifacts can carry a reproducibility header.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .tokens import contains_terms

GENUINE = 0
FAKE = 1

_FIELDS = ("id", "text", "author", "retweeters", "hashtags", "timestamp", "label")


class CorpusError(Exception):
    """Raised for unreadable files, malformed records, and duplicate ids."""


@dataclass(frozen=True)
class Tweet:
    """One message: identity, body, author, amplification and label data."""

    id: str
    text: str
    author: str = ""
    retweeters: tuple[str, ...] = ()
    hashtags: tuple[str, ...] = ()
    timestamp: int = 0
    label: Optional[int] = None

    def __post_init__(self):
        if not self.id:
            raise CorpusError("tweet id must be nonempty")
        if self.timestamp < 0:
            raise CorpusError(f"tweet {self.id}: negative timestamp")
        if any(not u for u in self.retweeters):
            raise CorpusError(f"tweet {self.id}: empty retweeter username")
        if self.label not in (None, GENUINE, FAKE):
            raise CorpusError(f"tweet {self.id}: label must be 0, 1 or null")


@dataclass(frozen=True)
class LabelRule:
    """Assign `label` to tweets matched by tweet id, author, or hashtag."""

    kind: str  # by-tweet-id | by-author | by-hashtag
    value: str
    label: int

    KINDS = ("by-tweet-id", "by-author", "by-hashtag")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise CorpusError(f"unknown label rule kind {self.kind!r}")
        if not self.value:
            raise CorpusError("label rule value must be nonempty")
        if self.label not in (GENUINE, FAKE):
            raise CorpusError("label rule label must be 0 or 1")

    def matches(self, tweet: Tweet) -> bool:
        if self.kind == "by-tweet-id":
            return tweet.id == self.value
        if self.kind == "by-author":
            return tweet.author == self.value
        return self.value.lower() in tweet.hashtags


@dataclass(frozen=True)
class CorpusFilter:
    """Keep tweets with enough retweets, inside a date range, matching terms.

    `required_terms` uses conjunctive whole-word matching (all terms
    must appear); `date_range` bounds are inclusive epoch seconds.
    """

    min_retweets: int = 0
    date_range: Optional[tuple[int, int]] = None
    required_terms: Optional[frozenset[str]] = None

    def __post_init__(self):
        if self.min_retweets < 0:
            raise CorpusError("min_retweets must be nonnegative")
        if self.date_range is not None and self.date_range[0] > self.date_range[1]:
            raise CorpusError("date_range start must not exceed end")

    def keeps(self, tweet: Tweet) -> bool:
        if len(tweet.retweeters) < self.min_retweets:
            return False
        if self.date_range is not None:
            start, end = self.date_range
            if not (start <= tweet.timestamp <= end):
                return False
        if self.required_terms:
            return contains_terms(tweet.text, self.required_terms)
        return True


class Corpus(Sequence[Tweet]):
    """Immutable tweet sequence with unique ids, in load order."""

    def __init__(self, tweets: Iterable[Tweet]):
        self._tweets = tuple(tweets)
        seen: set[str] = set()
        for t in self._tweets:
            if t.id in seen:
                raise CorpusError(f"duplicate tweet id {t.id!r}")
            seen.add(t.id)

    def __len__(self) -> int:
        return len(self._tweets)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Corpus(self._tweets[i])
        return self._tweets[i]

    def __iter__(self) -> Iterator[Tweet]:
        return iter(self._tweets)

    def __eq__(self, other) -> bool:
        return isinstance(other, Corpus) and self._tweets == other._tweets

    def __repr__(self) -> str:
        return f"Corpus({len(self._tweets)} tweets)"


def _tweet_from_record(rec: Mapping, where: str) -> Tweet:
    if "id" not in rec or "text" not in rec:
        raise CorpusError(f"{where}: record must carry at least id and text")
    try:
        return Tweet(
            id=str(rec["id"]),
            text=str(rec["text"]),
            author=str(rec.get("author") or ""),
            retweeters=tuple(str(u) for u in (rec.get("retweeters") or ())),
            hashtags=tuple(str(h).lower() for h in (rec.get("hashtags") or ())),
            timestamp=int(rec.get("timestamp") or 0),
            label=None if rec.get("label") in (None, "") else int(rec["label"]),
        )
    except (TypeError, ValueError) as exc:
        raise CorpusError(f"{where}: malformed record ({exc})") from None


def _split_joined(cell: str) -> tuple[str, ...]:
    return tuple(part for part in cell.split(";") if part) if cell else ()


def load_corpus(path, format: str = "jsonl", column_map: Optional[Mapping[str, str]] = None) -> Corpus:
    """Parse a JSONL or CSV corpus file.

    `column_map` renames CSV source columns to the expected schema
    (e.g. ``{"title": "text"}`` for Kaggle-style exports). Records
    missing optional fields get empty defaults; duplicate ids and
    malformed records raise :class:`CorpusError` with the offending
    line number.
    """
    if format not in ("jsonl", "csv"):
        raise CorpusError(f"unknown corpus format {format!r}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CorpusError(f"cannot read corpus file {path}: {exc}") from None

    tweets: list[Tweet] = []
    if format == "jsonl":
        for lineno, line in enumerate(raw.splitlines(), start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise CorpusError(f"line {lineno}: record is not an object")
            tweets.append(_tweet_from_record(rec, f"line {lineno}"))
    else:
        body = "\n".join(l for l in raw.splitlines() if not l.startswith("#"))
        reader = csv.DictReader(io.StringIO(body))
        for lineno, row in enumerate(reader, start=2):
            if column_map:
                row = {column_map.get(k, k): v for k, v in row.items()}
            rec = dict(row)
            rec["retweeters"] = _split_joined(row.get("retweeters") or "")
            rec["hashtags"] = _split_joined(row.get("hashtags") or "")
            tweets.append(_tweet_from_record(rec, f"line {lineno}"))

    return Corpus(tweets)


def tweet_to_record(tweet: Tweet) -> dict:
    return {
        "id": tweet.id,
        "text": tweet.text,
        "author": tweet.author,
        "retweeters": list(tweet.retweeters),
        "hashtags": list(tweet.hashtags),
        "timestamp": tweet.timestamp,
        "label": tweet.label,
    }


def save_corpus(corpus: Corpus, path, header: Optional[str] = None) -> None:
    """Write JSONL, optionally preceded by a '#' comment header line."""
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(f"# {header}\n")
        for tweet in corpus:
            fh.write(json.dumps(tweet_to_record(tweet), ensure_ascii=False))
            fh.write("\n")


def apply_filter(corpus: Corpus, flt: CorpusFilter) -> Corpus:
    """Keep exactly the tweets passing the filter, preserving order."""
    return Corpus(t for t in corpus if flt.keeps(t))


def apply_labels(corpus: Corpus, rules: Sequence[LabelRule]) -> Corpus:
    """Label tweets by matching rules; the last matching rule wins.

    Tweets matched by no rule keep their existing label (possibly none).
    """
    out = []
    for tweet in corpus:
        label = tweet.label
        for rule in rules:
            if rule.matches(tweet):
                label = rule.label
        out.append(tweet if label == tweet.label else replace(tweet, label=label))
    return Corpus(out)


def split(corpus: Corpus, valid_fraction: float, seed: int) -> tuple[Corpus, Corpus]:
    """Deterministic stratified train/validation split.

    The validation part holds round(valid_fraction * N) tweets with
    per-label proportions within one tweet of the global fraction.
    Membership is a pure function of (corpus, fraction, seed); both
    outputs preserve corpus order.
    """
    if not 0.0 <= valid_fraction <= 1.0:
        raise CorpusError("valid_fraction must be in [0, 1]")
    unlabeled = [t.id for t in corpus if t.label is None]
    if unlabeled:
        raise CorpusError(f"cannot split: unlabeled tweet(s) present, e.g. {unlabeled[0]!r}")

    n = len(corpus)
    n_valid = int(np.floor(valid_fraction * n + 0.5))
    by_label: dict[int, list[int]] = {}
    for idx, tweet in enumerate(corpus):
        by_label.setdefault(tweet.label, []).append(idx)

    # per-label quota: floor of the proportional share, remainders assigned
    # by largest fractional part (ties to the smaller label) so the total
    # is exactly n_valid and each label stays within +-1 of proportional
    shares = {lab: valid_fraction * len(ids) for lab, ids in by_label.items()}
    quota = {lab: int(np.floor(s)) for lab, s in shares.items()}
    leftover = n_valid - sum(quota.values())
    order = sorted(by_label, key=lambda lab: (-(shares[lab] - quota[lab]), lab))
    for lab in order[: max(leftover, 0)]:
        quota[lab] += 1

    rng = np.random.default_rng(seed)
    valid_idx: set[int] = set()
    for lab in sorted(by_label):
        ids = by_label[lab]
        perm = rng.permutation(len(ids))
        valid_idx.update(ids[i] for i in perm[: quota[lab]])

    train = Corpus(t for i, t in enumerate(corpus) if i not in valid_idx)
    valid = Corpus(t for i, t in enumerate(corpus) if i in valid_idx)
    return train, valid
