"""User-connection graph analytics: communities, centralities, layout.

The graph is undirected and weighted: one edge per author-retweeter
relation, weight accumulating repeated retweets. On top of it this
module provides

* random-walk community detection (Pons-Latapy agglomeration of
  short-walk probability profiles, dendrogram cut at max modularity),
* PageRank by damped power iteration,
* hub/authority scores by alternating power iteration,
* betweenness by Brandes' algorithm in exact rational arithmetic,
* a force-directed 2D layout with linear cooling, and
* per-community isolation ratios that flag communities whose edge
  weight rarely leaves the community.

All algorithms are deterministic: vertices are processed in sorted
order and agglomerative ties break on the smallest community-id pair.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus


class GraphError(Exception):
    pass


class UserGraph:
    """Weighted undirected graph in neighbor-list form, no self-loops."""

    def __init__(self):
        self.adj: dict[str, dict[str, float]] = {}

    def add_vertex(self, v: str) -> None:
        self.adj.setdefault(v, {})

    def add_edge(self, u: str, v: str, weight: float = 1.0) -> None:
        if u == v:
            return  # self-retweets carry no connection information
        self.add_vertex(u)
        self.add_vertex(v)
        self.adj[u][v] = self.adj[u].get(v, 0.0) + weight
        self.adj[v][u] = self.adj[v].get(u, 0.0) + weight

    @property
    def vertices(self) -> list[str]:
        return sorted(self.adj)

    def edges(self) -> list[tuple[str, str, float]]:
        """Each undirected edge once, as (u, v, weight) with u < v, sorted."""
        out = []
        for u, nbrs in self.adj.items():
            for v, w in nbrs.items():
                if u < v:
                    out.append((u, v, w))
        out.sort()
        return out

    def degree(self, v: str) -> float:
        return sum(self.adj[v].values())

    def total_weight(self) -> float:
        return sum(w for _, _, w in self.edges())

    def __len__(self) -> int:
        return len(self.adj)

    def components(self) -> list[list[str]]:
        seen: set[str] = set()
        comps = []
        for start in self.vertices:
            if start in seen:
                continue
            comp = []
            stack = [start]
            seen.add(start)
            while stack:
                u = stack.pop()
                comp.append(u)
                for v in self.adj[u]:
                    if v not in seen:
                        seen.add(v)
                        stack.append(v)
            comps.append(sorted(comp))
        return comps


@dataclass(frozen=True)
class Partition:
    community_of: dict[str, int]
    communities: dict[int, frozenset[str]]
    modularity: float


@dataclass(frozen=True)
class CommunityIsolation:
    community: int
    size: int
    internal_edges: float
    external_edges: float
    isolation: float


def build_user_graph(corpus: Corpus, co_retweeters: bool = False) -> UserGraph:
    """One edge per author-retweeter relation, weights accumulating repeats.

    Authors without retweeters become isolated vertices. With
    `co_retweeters` enabled, users retweeting the same tweet are also
    connected pairwise (off by default).
    """
    g = UserGraph()
    for tweet in corpus:
        if tweet.author:
            g.add_vertex(tweet.author)
        for user in tweet.retweeters:
            g.add_vertex(user)
            if tweet.author:
                g.add_edge(tweet.author, user, 1.0)
        if co_retweeters:
            unique = sorted(set(tweet.retweeters))
            for i, u in enumerate(unique):
                for v in unique[i + 1:]:
                    g.add_edge(u, v, 1.0)
    return g


def modularity(graph: UserGraph, community_of: dict[str, int]) -> float:
    """Newman modularity of a partition on the weighted graph."""
    m = graph.total_weight()
    if m == 0:
        return 0.0
    internal: dict[int, float] = {}
    degree: dict[int, float] = {}
    for v in graph.adj:
        c = community_of[v]
        degree[c] = degree.get(c, 0.0) + graph.degree(v)
    for u, v, w in graph.edges():
        if community_of[u] == community_of[v]:
            c = community_of[u]
            internal[c] = internal.get(c, 0.0) + w
    return sum(
        internal.get(c, 0.0) / m - (degree[c] / (2.0 * m)) ** 2
        for c in degree
    )


def _walktrap_component(graph: UserGraph, comp: list[str], walk_steps: int,
                        m_total: float) -> list[tuple[float, list[set[str]]]]:
    """Agglomerate one connected component; return (modularity contribution,
    communities) per dendrogram level, singletons first."""
    n = len(comp)
    index = {v: i for i, v in enumerate(comp)}
    adj = np.zeros((n, n))
    for u in comp:
        for v, w in graph.adj[u].items():
            adj[index[u], index[v]] = w
    strength = adj.sum(axis=1)

    if n == 1:
        d = float(strength[0])
        contrib = -((d / (2.0 * m_total)) ** 2) if m_total > 0 else 0.0
        return [(contrib, [set(comp)])]

    # t-step transition probability profiles, rows normalized by strength
    trans = adj / strength[:, None]
    profile = np.linalg.matrix_power(trans, walk_steps)
    inv_strength = 1.0 / strength

    def contribution(members_degree: float, internal: float) -> float:
        return internal / m_total - (members_degree / (2.0 * m_total)) ** 2

    # community state, indexed by community id
    members: dict[int, set[int]] = {i: {i} for i in range(n)}
    prof: dict[int, np.ndarray] = {i: profile[i].copy() for i in range(n)}
    degree_of: dict[int, float] = {i: float(strength[i]) for i in range(n)}
    internal_of: dict[int, float] = {i: 0.0 for i in range(n)}
    neighbors: dict[int, set[int]] = {i: set() for i in range(n)}
    active: set[int] = set(range(n))

    def key(a: int, b: int) -> tuple[int, int]:
        return (a, b) if a < b else (b, a)

    def ward_distance(a: int, b: int) -> float:
        diff = prof[a] - prof[b]
        r2 = float(np.dot(diff * diff, inv_strength))
        na, nb = len(members[a]), len(members[b])
        return na * nb / (na + nb) / n * r2

    heap: list[tuple[float, int, int]] = []
    dist: dict[tuple[int, int], float] = {}
    wsum: dict[tuple[int, int], float] = {}  # edge weight between communities
    for i in range(n):
        for j in range(i + 1, n):
            if adj[i, j] > 0:
                d = ward_distance(i, j)
                dist[(i, j)] = d
                wsum[(i, j)] = float(adj[i, j])
                heapq.heappush(heap, (d, i, j))
                neighbors[i].add(j)
                neighbors[j].add(i)

    levels = [(
        sum(contribution(degree_of[c], internal_of[c]) for c in active),
        [set(comp[i] for i in members[c]) for c in sorted(active)],
    )]

    next_id = n
    while len(active) > 1:
        while True:
            d, a, b = heapq.heappop(heap)
            if a in active and b in active:
                break
        c = next_id
        next_id += 1

        na, nb = len(members[a]), len(members[b])
        members[c] = members[a] | members[b]
        prof[c] = (na * prof[a] + nb * prof[b]) / (na + nb)
        degree_of[c] = degree_of[a] + degree_of[b]
        internal_of[c] = internal_of[a] + internal_of[b] + wsum[key(a, b)]
        neighbors[c] = (neighbors[a] | neighbors[b]) - {a, b}
        active.discard(a)
        active.discard(b)
        active.add(c)

        for x in sorted(neighbors[c]):
            neighbors[x].discard(a)
            neighbors[x].discard(b)
            neighbors[x].add(c)
            wsum[key(x, c)] = wsum.get(key(a, x), 0.0) + wsum.get(key(b, x), 0.0)
            if key(a, x) in dist and key(b, x) in dist:
                # merge update of the Ward distance from stored values
                nx = len(members[x])
                d_new = (
                    (na + nx) * dist[key(a, x)]
                    + (nb + nx) * dist[key(b, x)]
                    - nx * d
                ) / (na + nb + nx)
            else:
                d_new = ward_distance(c, x)
            dist[key(x, c)] = d_new
            heapq.heappush(heap, (d_new, x, c))

        levels.append((
            sum(contribution(degree_of[cc], internal_of[cc]) for cc in active),
            [set(comp[i] for i in members[cc]) for cc in sorted(active)],
        ))

    return levels


def walktrap(graph: UserGraph, walk_steps: int = 4) -> Partition:
    """Random-walk community detection, cut at maximum modularity.

    Vertices whose t-step walk probability profiles are close (Ward
    distance weighted by inverse vertex strength) are merged bottom-up,
    only across existing edges; each connected component is agglomerated
    independently and its dendrogram is cut where the component's
    modularity contribution peaks.
    """
    if walk_steps < 1:
        raise GraphError("walk_steps must be >= 1")
    if len(graph) == 0:
        raise GraphError("cannot partition an empty graph")

    m_total = graph.total_weight()
    chosen: list[set[str]] = []
    for comp in graph.components():
        if m_total == 0:
            chosen.append(set(comp))
            continue
        levels = _walktrap_component(graph, comp, walk_steps, m_total)
        best = max(range(len(levels)), key=lambda i: levels[i][0])
        chosen.extend(levels[best][1])

    chosen.sort(key=lambda c: min(c))
    community_of = {v: cid for cid, comm in enumerate(chosen) for v in comm}
    return Partition(
        community_of=community_of,
        communities={cid: frozenset(comm) for cid, comm in enumerate(chosen)},
        modularity=modularity(graph, community_of),
    )


def pagerank(graph: UserGraph, damping: float = 0.85, tol: float = 1e-10,
             max_iter: int = 10_000) -> dict[str, float]:
    """Damped power iteration on the weighted transition matrix.

    Vertices without edges redistribute their mass uniformly (the
    standard dangling-node convention), so scores always sum to 1.
    Stops when the L1 change drops below `tol`.
    """
    if not 0.0 < damping < 1.0:
        raise GraphError("damping must be in (0, 1)")
    verts = graph.vertices
    n = len(verts)
    if n == 0:
        raise GraphError("cannot rank an empty graph")
    index = {v: i for i, v in enumerate(verts)}

    trans = np.zeros((n, n))
    dangling = np.zeros(n, dtype=bool)
    for v in verts:
        i = index[v]
        deg = graph.degree(v)
        if deg == 0:
            dangling[i] = True
            continue
        for u, w in graph.adj[v].items():
            trans[i, index[u]] = w / deg

    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        dangling_mass = x[dangling].sum()
        x_new = (1.0 - damping) / n + damping * (x @ trans + dangling_mass / n)
        residual = float(np.abs(x_new - x).sum())
        x = x_new
        if residual < tol:
            return {v: float(x[index[v]]) for v in verts}
    raise GraphError(
        f"pagerank did not converge in {max_iter} iterations (residual {residual:.3e})"
    )


def hits(graph: UserGraph, tol: float = 1e-10, max_iter: int = 10_000
         ) -> tuple[dict[str, float], dict[str, float]]:
    """Alternating hub/authority power iteration with L2 normalization.

    Starts from the normalized strength vector, which keeps the
    iteration inside the dominant eigenspace of A*A^T even on bipartite
    graphs; on undirected graphs the two roles coincide, so hub and
    authority scores are identical.
    """
    verts = graph.vertices
    n = len(verts)
    if n == 0:
        raise GraphError("cannot score an empty graph")
    index = {v: i for i, v in enumerate(verts)}
    adj = np.zeros((n, n))
    for u in verts:
        for v, w in graph.adj[u].items():
            adj[index[u], index[v]] = w

    x = adj.sum(axis=1)
    norm = float(np.linalg.norm(x))
    x = x / norm if norm > 0 else np.full(n, 1.0 / np.sqrt(n))

    for _ in range(max_iter):
        auth = adj.T @ x
        norm = float(np.linalg.norm(auth))
        auth = auth / norm if norm > 0 else x
        hub = adj @ auth
        norm = float(np.linalg.norm(hub))
        hub = hub / norm if norm > 0 else auth
        delta = float(np.abs(hub - x).max())
        x = hub
        if delta < tol:
            scores = {v: float(x[index[v]]) for v in verts}
            return scores, dict(scores)
    raise GraphError(f"hits did not converge in {max_iter} iterations (delta {delta:.3e})")


def betweenness(graph: UserGraph) -> dict[str, float]:
    """Brandes betweenness over unweighted shortest paths, pairs counted once.

    Dependency accumulation runs in exact rational arithmetic so the
    scores equal brute-force path enumeration bit for bit.
    """
    verts = graph.vertices
    score: dict[str, Fraction] = {v: Fraction(0) for v in verts}
    for s in verts:
        stack: list[str] = []
        preds: dict[str, list[str]] = {v: [] for v in verts}
        sigma: dict[str, int] = {v: 0 for v in verts}
        dist: dict[str, int] = {v: -1 for v in verts}
        sigma[s] = 1
        dist[s] = 0
        queue = [s]
        head = 0
        while head < len(queue):
            u = queue[head]
            head += 1
            stack.append(u)
            for v in sorted(graph.adj[u]):
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
                if dist[v] == dist[u] + 1:
                    sigma[v] += sigma[u]
                    preds[v].append(u)
        delta: dict[str, Fraction] = {v: Fraction(0) for v in verts}
        for u in reversed(stack):
            for p in preds[u]:
                delta[p] += Fraction(sigma[p], sigma[u]) * (1 + delta[u])
            if u != s:
                score[u] += delta[u]
    return {v: float(score[v] / 2) for v in verts}


def layout_fr(graph: UserGraph, iterations: int = 100, area: float = 1.0,
              seed: int = 0) -> dict[str, tuple[float, float]]:
    """Force-directed layout: attractive d^2/k, repulsive k^2/d, linear cooling.

    Positions start at seeded uniform random points in the sqrt(area)
    square and stay clamped inside it; the result is bit-identical for
    a fixed seed. A single vertex sits at the box midpoint.
    """
    verts = graph.vertices
    pos = _layout_positions(verts, graph.edges(), iterations, area, seed)
    return {v: (float(pos[i, 0]), float(pos[i, 1])) for i, v in enumerate(verts)}


def _layout_positions(verts: Sequence[str], edges: Iterable[tuple[str, str, float]],
                      iterations: int, area: float, seed: int) -> np.ndarray:
    n = len(verts)
    if n == 0:
        return np.zeros((0, 2))
    side = float(np.sqrt(area))
    if n == 1:
        return np.array([[side / 2.0, side / 2.0]])
    index = {v: i for i, v in enumerate(verts)}
    edge_idx = np.array([[index[u], index[v]] for u, v, _ in edges], dtype=int).reshape(-1, 2)

    rng = np.random.default_rng(seed)
    pos = rng.uniform(0.0, side, size=(n, 2))
    k = np.sqrt(area / n)
    temperature = side / 10.0
    cooling = temperature / (iterations + 1)
    eps = 1e-12

    diag = np.arange(n)
    for _ in range(iterations):
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.maximum(np.sqrt((delta ** 2).sum(axis=2)), eps)
        repulse = (k * k / (dist * dist))[:, :, None] * delta
        repulse[diag, diag, :] = 0.0
        disp = repulse.sum(axis=1)

        if len(edge_idx):
            d = pos[edge_idx[:, 0]] - pos[edge_idx[:, 1]]
            dd = np.maximum(np.sqrt((d ** 2).sum(axis=1)), eps)
            pull = d * (dd / k)[:, None]
            np.add.at(disp, edge_idx[:, 0], -pull)
            np.add.at(disp, edge_idx[:, 1], pull)

        length = np.maximum(np.sqrt((disp ** 2).sum(axis=1)), eps)
        pos += disp / length[:, None] * np.minimum(length, temperature)[:, None]
        np.clip(pos, 0.0, side, out=pos)
        temperature -= cooling

    return pos


def isolation_metrics(graph: UserGraph, partition: Partition) -> list[CommunityIsolation]:
    """Exact internal/external weighted edge counts per community.

    Internal weight counts each within-community edge once; a crossing
    edge contributes its full weight to both endpoint communities'
    external counts. Isolation is external / (internal + external)
    (0 for communities with no edges at all). The report is sorted by
    ascending isolation, most isolated first.
    """
    missing = [v for v in graph.adj if v not in partition.community_of]
    if missing:
        raise GraphError(f"partition does not cover vertex {missing[0]!r}")
    internal: dict[int, float] = {c: 0.0 for c in partition.communities}
    external: dict[int, float] = {c: 0.0 for c in partition.communities}
    for u, v, w in graph.edges():
        cu, cv = partition.community_of[u], partition.community_of[v]
        if cu == cv:
            internal[cu] += w
        else:
            external[cu] += w
            external[cv] += w

    report = []
    for c, members in partition.communities.items():
        total = internal[c] + external[c]
        report.append(CommunityIsolation(
            community=c,
            size=len(members),
            internal_edges=internal[c],
            external_edges=external[c],
            isolation=external[c] / total if total > 0 else 0.0,
        ))
    report.sort(key=lambda r: (r.isolation, r.community))
    return report


def isolation_to_csv(report: Sequence[CommunityIsolation], header: str | None = None) -> str:
    lines = []
    if header is not None:
        lines.append(f"# {header}")
    lines.append("community,size,internal_edges,external_edges,isolation")
    for r in report:
        lines.append(
            f"{r.community},{r.size},{r.internal_edges!r},{r.external_edges!r},{r.isolation!r}"
        )
    return "\n".join(lines) + "\n"
