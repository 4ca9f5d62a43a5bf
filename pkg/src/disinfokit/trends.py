"""Time series of tweet counts for thematic keyword queries.

A thematic field is a conjunction of whole-word terms ("ukraine nazi"
matches tweets containing both words). Series are binned by hour or
day in UTC, span the whole corpus date range, and materialize
zero-count bins so the range is contiguous.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable

from .corpus import Corpus
from .tokens import contains_terms

_BIN_SECONDS = {"hour": 3600, "day": 86400}


class TrendsError(Exception):
    pass


@dataclass(frozen=True)
class TimeSeries:
    bin_width: str  # hour | day
    bins: tuple[tuple[int, int], ...]  # (bin_start_epoch_utc, count)

    def total(self) -> int:
        return sum(c for _, c in self.bins)


def thematic_match(text: str, terms) -> bool:
    """True iff every term occurs as a case-insensitive whole word."""
    terms = set(terms)
    if not terms:
        raise TrendsError("term set must be nonempty")
    return contains_terms(text, terms)


def count_series(corpus: Corpus, terms, bin_width: str = "day") -> TimeSeries:
    """Count thematically matching tweets per time bin over the corpus range.

    Bin starts are aligned to the bin width; a tweet falls in bin b when
    its timestamp lies in [b, b + width). The sum over bins equals the
    number of matching tweets exactly.
    """
    if bin_width not in _BIN_SECONDS:
        raise TrendsError(f"unknown bin width {bin_width!r}")
    if len(corpus) == 0:
        raise TrendsError("cannot bin an empty corpus")
    terms = set(terms)
    if not terms:
        raise TrendsError("term set must be nonempty")

    width = _BIN_SECONDS[bin_width]
    align = lambda ts: ts - ts % width
    lo = align(min(t.timestamp for t in corpus))
    hi = align(max(t.timestamp for t in corpus))

    counts: dict[int, int] = {b: 0 for b in range(lo, hi + width, width)}
    for tweet in corpus:
        if contains_terms(tweet.text, terms):
            counts[align(tweet.timestamp)] += 1
    return TimeSeries(bin_width=bin_width, bins=tuple(sorted(counts.items())))


def series_to_csv(series: TimeSeries, header: str | None = None) -> str:
    """Render as CSV (bin_start_iso8601,count) for external plotting."""
    lines = []
    if header is not None:
        lines.append(f"# {header}")
    lines.append("bin_start_iso8601,count")
    for start, count in series.bins:
        iso = datetime.fromtimestamp(start, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        lines.append(f"{iso},{count}")
    return "\n".join(lines) + "\n"
