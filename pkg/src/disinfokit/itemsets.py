"""Frequent keyword itemsets, association rules, and the semantic graph.

Tweets become transactions of deduplicated lowercase keywords; an
FP-growth miner (prefix tree plus conditional pattern bases) finds all
itemsets at or above a support count threshold, rules are derived from
the stored supports, and frequent pairs induce a weighted co-occurrence
graph over the frequent single keywords.

Everything here is deterministic: items are kept in lexicographic
order, results are sorted by (size, items), and supports are exact
occurrence counts.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional, Sequence

from .corpus import Corpus
from .tokens import tokenize


class ItemsetError(Exception):
    pass


@dataclass(frozen=True)
class Transaction:
    tweet_id: str
    items: tuple[str, ...]  # sorted, deduplicated


@dataclass(frozen=True)
class FrequentItemset:
    items: tuple[str, ...]  # sorted
    support: int
    support_ratio: float


@dataclass(frozen=True)
class AssociationRule:
    antecedent: tuple[str, ...]
    consequent: tuple[str, ...]
    support_ratio: float
    confidence: float
    lift: float


@dataclass(frozen=True)
class SemanticGraph:
    """Nodes are frequent keywords; an edge exists iff the pair is frequent."""

    nodes: tuple[tuple[str, int], ...]  # (token, support)
    edges: tuple[tuple[str, str, float], ...]  # (a, b, pair support_ratio), a < b


def to_transactions(corpus: Corpus, stopwords: Iterable[str] = (), min_token_len: int = 1) -> list[Transaction]:
    """Tokenize each tweet into a sorted deduplicated keyword set.

    Stopwords and tokens shorter than `min_token_len` are dropped.
    """
    stop = {w.lower() for w in stopwords}
    out = []
    for tweet in corpus:
        items = {
            tok for tok in tokenize(tweet.text)
            if len(tok) >= min_token_len and tok not in stop
        }
        out.append(Transaction(tweet_id=tweet.id, items=tuple(sorted(items))))
    return out


class _FPNode:
    __slots__ = ("item", "count", "parent", "children")

    def __init__(self, item: Optional[str], parent: Optional["_FPNode"]):
        self.item = item
        self.count = 0
        self.parent = parent
        self.children: dict[str, _FPNode] = {}


class _FPTree:
    """Prefix tree over support-ordered transactions, with per-item node lists."""

    def __init__(self):
        self.root = _FPNode(None, None)
        self.nodes: dict[str, list[_FPNode]] = {}

    def insert(self, items: Sequence[str], count: int) -> None:
        node = self.root
        for item in items:
            child = node.children.get(item)
            if child is None:
                child = _FPNode(item, node)
                node.children[item] = child
                self.nodes.setdefault(item, []).append(child)
            child.count += count
            node = child

    def prefix_paths(self, item: str) -> list[tuple[list[str], int]]:
        paths = []
        for node in self.nodes.get(item, ()):
            path = []
            parent = node.parent
            while parent is not None and parent.item is not None:
                path.append(parent.item)
                parent = parent.parent
            path.reverse()
            paths.append((path, node.count))
        return paths


def _build_tree(weighted: Iterable[tuple[Sequence[str], int]], counts: Counter, min_support: int) -> _FPTree:
    # order items by descending support, lexicographic tiebreak, for maximal
    # prefix sharing and a deterministic tree
    rank = {item: (-c, item) for item, c in counts.items() if c >= min_support}
    tree = _FPTree()
    for items, weight in weighted:
        kept = sorted((i for i in items if i in rank), key=rank.__getitem__)
        if kept:
            tree.insert(kept, weight)
    return tree


def _mine(tree: _FPTree, counts: Counter, min_support: int, suffix: tuple[str, ...],
          max_len: int, out: dict[tuple[str, ...], int]) -> None:
    # visit header items from least to most frequent (standard bottom-up)
    order = sorted(counts, key=lambda i: (counts[i], i))
    for item in order:
        if counts[item] < min_support:
            continue
        found = tuple(sorted(suffix + (item,)))
        out[found] = counts[item]
        if len(found) >= max_len:
            continue
        base = tree.prefix_paths(item)
        cond_counts: Counter = Counter()
        for path, weight in base:
            for p in path:
                cond_counts[p] += weight
        cond_counts = Counter({i: c for i, c in cond_counts.items() if c >= min_support})
        if cond_counts:
            cond_tree = _build_tree(base, cond_counts, min_support)
            _mine(cond_tree, cond_counts, min_support, found, max_len, out)


def mine_frequent(transactions: Sequence[Transaction], min_support_count: int, max_len: int = 4) -> list[FrequentItemset]:
    """FP-growth over the transactions.

    Returns exactly the itemsets of size <= max_len whose occurrence
    count is >= min_support_count, with exact supports, sorted by
    (size, items).
    """
    if min_support_count < 1:
        raise ItemsetError("min_support_count must be >= 1")
    if max_len < 1:
        raise ItemsetError("max_len must be >= 1")
    n = len(transactions)
    counts: Counter = Counter()
    for tx in transactions:
        counts.update(tx.items)

    tree = _build_tree(((tx.items, 1) for tx in transactions), counts, min_support_count)
    mined: dict[tuple[str, ...], int] = {}
    _mine(tree, counts, min_support_count, (), max_len, mined)

    result = [
        FrequentItemset(items=items, support=sup, support_ratio=sup / n)
        for items, sup in mined.items()
    ]
    result.sort(key=lambda fi: (len(fi.items), fi.items))
    return result


def derive_rules(frequent: Sequence[FrequentItemset], min_confidence: float) -> list[AssociationRule]:
    """All rules A -> C with A+C frequent and confidence >= min_confidence.

    Confidence and lift come exactly from the stored supports; the
    frequent set must be downward-closed or the missing subset is
    reported.
    """
    if not 0.0 <= min_confidence <= 1.0:
        raise ItemsetError("min_confidence must be in [0, 1]")
    support = {fi.items: fi.support for fi in frequent}
    ratio = {fi.items: fi.support_ratio for fi in frequent}

    def lookup(items: tuple[str, ...]) -> int:
        try:
            return support[items]
        except KeyError:
            raise ItemsetError(
                f"frequent set is not downward-closed: missing support for {items}"
            ) from None

    rules = []
    for fi in frequent:
        if len(fi.items) < 2:
            continue
        whole = lookup(fi.items)
        for r in range(1, len(fi.items)):
            for ante in combinations(fi.items, r):
                cons = tuple(x for x in fi.items if x not in ante)
                confidence = whole / lookup(ante)
                if confidence >= min_confidence:
                    lookup(cons)  # closure check before using the ratio
                    rules.append(AssociationRule(
                        antecedent=ante,
                        consequent=cons,
                        support_ratio=fi.support_ratio,
                        confidence=confidence,
                        lift=confidence / ratio[cons],
                    ))
    rules.sort(key=lambda r: (r.antecedent, r.consequent))
    return rules


def semantic_graph(frequent: Sequence[FrequentItemset], n_transactions: int) -> SemanticGraph:
    """Graph with a node per frequent keyword and an edge per frequent pair.

    Edge weight is the pair's support ratio; requires that `frequent`
    includes sizes 1 and 2 (downward closure guarantees node supports).
    """
    nodes = tuple((fi.items[0], fi.support) for fi in frequent if len(fi.items) == 1)
    edges = tuple(
        (fi.items[0], fi.items[1], fi.support / n_transactions)
        for fi in frequent
        if len(fi.items) == 2
    )
    return SemanticGraph(nodes=nodes, edges=edges)


def itemsets_to_csv(frequent: Sequence[FrequentItemset], header: str | None = None) -> str:
    lines = []
    if header is not None:
        lines.append(f"# {header}")
    lines.append("items,support,support_ratio")
    for fi in frequent:
        lines.append(f"{';'.join(fi.items)},{fi.support},{fi.support_ratio!r}")
    return "\n".join(lines) + "\n"


def rules_to_csv(rules: Sequence[AssociationRule], header: str | None = None) -> str:
    lines = []
    if header is not None:
        lines.append(f"# {header}")
    lines.append("antecedent,consequent,support_ratio,confidence,lift")
    for r in rules:
        lines.append(
            f"{';'.join(r.antecedent)},{';'.join(r.consequent)},"
            f"{r.support_ratio!r},{r.confidence!r},{r.lift!r}"
        )
    return "\n".join(lines) + "\n"
