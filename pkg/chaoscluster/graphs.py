"""Exact enumeration of labeled graphs, trees and rooted forests.

Graphs on ``{1..k}`` are bit fields over the ``k(k-1)/2`` pair slots in
lexicographic pair order ``(1,2), (1,3), ..., (1,k), (2,3), ...``. The mask
value doubles as the enumeration index, so the stream of all graphs can be
cut into deterministic mask ranges and scanned in chunks.

Connected-graph scans are vectorized over whole mask ranges with numpy;
trees come from Prüfer decoding and rooted forests from the pivot recursion
``F_J(I) = union over L subset of I of {kappa - L} x F_{J - kappa + L}(I - L)``.
"""

from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass
from functools import cache
from typing import TYPE_CHECKING

import numpy as np

from .exceptions import GraphError, GuardError
from .types import (
    MAX_ENUMERATION_K,
    MAX_FOREST_VERTICES,
    MAX_GRAPH_VERTICES,
    MAX_TREE_K,
)

if TYPE_CHECKING:
    from collections.abc import Collection, Generator, Iterable

logger = logging.getLogger(__name__)

CHUNK_SIZE = 1 << 20
"""Number of masks processed per vectorized chunk (int)."""

MAX_CACHED_K = 7
"""Largest k whose connected masks are kept in memory (int)."""


@cache
def pair_slots(k: int) -> tuple[tuple[int, int], ...]:
    """Pairs ``(a, b)``, ``a < b``, of ``{1..k}`` in slot order."""
    return tuple(itertools.combinations(range(1, k + 1), 2))


@cache
def _slot_index(k: int) -> dict[tuple[int, int], int]:
    return {pair: s for s, pair in enumerate(pair_slots(k))}


def _pair(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class Graph:
    """Labeled undirected simple graph on ``{1..k}``.

    Attributes:
        k (int): Number of vertices.
        mask (int): Bit field over :func:`pair_slots`; bit ``s`` set means the
            ``s``-th pair is an edge.

    """

    k: int
    mask: int = 0

    def __post_init__(self) -> None:
        """Validate the vertex count and mask width."""
        if not 0 <= self.k <= MAX_GRAPH_VERTICES:
            msg = f"Graph supports at most {MAX_GRAPH_VERTICES} vertices, got {self.k}"
            raise GuardError(msg)
        if not 0 <= self.mask < (1 << len(pair_slots(self.k))):
            msg = f"mask {self.mask} out of range for k={self.k}"
            raise GraphError(msg)

    @classmethod
    def from_edges(cls, k: int, edges: Iterable[tuple[int, int]]) -> Graph:
        """Build a graph from 1-based edge pairs."""
        index = _slot_index(k)
        mask = 0
        for a, b in edges:
            if a == b:
                msg = f"loops are not allowed: ({a}, {b})"
                raise GraphError(msg)
            try:
                mask |= 1 << index[_pair(a, b)]
            except KeyError as e:
                msg = f"edge ({a}, {b}) outside vertex set 1..{k}"
                raise GraphError(msg) from e
        return cls(k, mask)

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Edges in slot order."""
        return [pair for s, pair in enumerate(pair_slots(self.k)) if self.mask >> s & 1]

    @property
    def n_edges(self) -> int:
        """Number of edges."""
        return self.mask.bit_count()

    def has_edge(self, a: int, b: int) -> bool:
        """O(1) edge test."""
        return bool(self.mask >> _slot_index(self.k)[_pair(a, b)] & 1)

    def adjacency(self) -> dict[int, list[int]]:
        """Adjacency lists keyed by vertex label."""
        adj: dict[int, list[int]] = {v: [] for v in range(1, self.k + 1)}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return adj

    def degree(self, v: int) -> int:
        """Degree of vertex ``v``."""
        return sum(1 for a, b in self.edges if v in (a, b))

    def is_tree(self) -> bool:
        """True iff the graph is connected with ``k - 1`` edges."""
        return self.k >= 1 and self.n_edges == self.k - 1 and is_connected(self)


@dataclass(frozen=True)
class RootedForest:
    """Forest on ``J u I`` whose every tree holds exactly one root from ``J``.

    Attributes:
        roots (frozenset[int]): Root labels ``J``.
        others (frozenset[int]): Non-root labels ``I``.
        edges (frozenset[tuple[int, int]]): Edges as sorted label pairs.

    """

    roots: frozenset[int]
    others: frozenset[int]
    edges: frozenset[tuple[int, int]]

    @property
    def labels(self) -> frozenset[int]:
        """All vertex labels."""
        return self.roots | self.others

    def as_graph(self) -> Graph:
        """View the forest as a :class:`Graph` when labels are ``1..k``."""
        return Graph.from_edges(len(self.labels), self.edges)


def _guard_enumeration(k: int, limit: int, what: str, count: float) -> None:
    if not 1 <= k <= limit:
        msg = f"{what} enumeration requires 1 <= k <= {limit}; k={k} would yield about {count:.3g} items"
        raise GuardError(msg)


def mask_chunks(k: int, chunk_size: int = CHUNK_SIZE) -> list[range]:
    """Split the mask space of ``G_k`` into consecutive deterministic ranges."""
    total = 1 << len(pair_slots(k))
    return [range(lo, min(lo + chunk_size, total)) for lo in range(0, total, chunk_size)]


def enumerate_graphs(k: int) -> Generator[Graph, None, None]:
    """Yield every graph on ``{1..k}`` once, in ascending mask order.

    Raises:
        GuardError: If ``k`` is outside ``1..MAX_ENUMERATION_K``.

    """
    _guard_enumeration(k, MAX_ENUMERATION_K, "graph", 2.0 ** (k * (k - 1) / 2))
    for mask in range(1 << len(pair_slots(k))):
        yield Graph(k, mask)


def is_connected(g: Graph) -> bool:
    """True iff every pair of vertices is joined by a path (``k <= 1`` is connected)."""
    if g.k <= 1:
        return True
    adj = g.adjacency()
    seen = {1}
    stack = [1]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.k


def connected_mask_filter(k: int, masks: np.ndarray) -> np.ndarray:
    """Boolean array marking which masks encode connected graphs.

    Reachability from vertex 1 is propagated ``k - 1`` times through the
    per-vertex adjacency bit rows, all masks at once.
    """
    masks = np.asarray(masks, dtype=np.uint64)
    if k <= 1:
        return np.ones(masks.shape, dtype=bool)
    one = np.uint64(1)
    adj = [np.zeros(masks.shape, dtype=np.uint64) for _ in range(k)]
    for s, (a, b) in enumerate(pair_slots(k)):
        bit = (masks >> np.uint64(s)) & one
        adj[a - 1] |= bit << np.uint64(b - 1)
        adj[b - 1] |= bit << np.uint64(a - 1)
    reach = np.ones(masks.shape, dtype=np.uint64)
    for _ in range(k - 1):
        nxt = reach.copy()
        for v in range(k):
            has_v = ((reach >> np.uint64(v)) & one).astype(bool)
            nxt |= np.where(has_v, adj[v], np.uint64(0))
        reach = nxt
    return reach == np.uint64((1 << k) - 1)


def connected_mask_chunks(k: int) -> Generator[np.ndarray, None, None]:
    """Stream the connected masks of ``G_k`` chunk by chunk, ascending."""
    _guard_enumeration(k, MAX_ENUMERATION_K, "connected graph", 2.0 ** (k * (k - 1) / 2))
    for chunk in mask_chunks(k):
        masks = np.arange(chunk.start, chunk.stop, dtype=np.uint64)
        yield masks[connected_mask_filter(k, masks)]


@cache
def connected_masks(k: int) -> np.ndarray:
    """Sorted array of the masks of all connected graphs on ``{1..k}``.

    Cached per ``k`` up to :data:`MAX_CACHED_K`; ``k = 8`` holds ~2.5e8 masks
    and must be streamed with :func:`connected_mask_chunks`.
    """
    if k > MAX_CACHED_K:
        msg = f"connected masks are cached only up to k={MAX_CACHED_K}; stream k={k} instead"
        raise GuardError(msg)
    out = np.concatenate(list(connected_mask_chunks(k)))
    out.setflags(write=False)
    logger.debug("connected graphs on %d vertices: %d", k, out.size)
    return out


def count_connected(k: int) -> int:
    """``|C_k|`` by a streamed scan of all masks."""
    return sum(int(chunk.size) for chunk in connected_mask_chunks(k))


def enumerate_connected(k: int) -> Generator[Graph, None, None]:
    """Yield every connected graph on ``{1..k}`` once, ascending by mask."""
    for chunk in connected_mask_chunks(k):
        for mask in chunk:
            yield Graph(k, int(mask))


def prufer_decode(seq: Collection[int], k: int) -> Graph:
    """Decode a Prüfer sequence over ``{1..k}`` (length ``k - 2``) into a tree."""
    if k == 1:
        return Graph(1)
    if len(seq) != k - 2:
        msg = f"Prüfer sequence for k={k} must have length {k - 2}, got {len(seq)}"
        raise GraphError(msg)
    degree = [1] * (k + 1)
    for v in seq:
        degree[v] += 1
    leaves = [v for v in range(1, k + 1) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, v))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    edges.append((heapq.heappop(leaves), heapq.heappop(leaves)))
    return Graph.from_edges(k, edges)


def prufer_encode(tree: Graph) -> tuple[int, ...]:
    """Encode a labeled tree as its Prüfer sequence.

    Raises:
        GraphError: If ``tree`` is not a tree.

    """
    if not tree.is_tree():
        msg = "Prüfer encoding requires a tree"
        raise GraphError(msg)
    adj = {v: set(ws) for v, ws in tree.adjacency().items()}
    leaves = [v for v, ws in adj.items() if len(ws) == 1]
    heapq.heapify(leaves)
    seq = []
    for _ in range(tree.k - 2):
        leaf = heapq.heappop(leaves)
        (parent,) = adj.pop(leaf)
        adj[parent].discard(leaf)
        seq.append(parent)
        if len(adj[parent]) == 1:
            heapq.heappush(leaves, parent)
    return tuple(seq)


def enumerate_trees(k: int) -> Generator[Graph, None, None]:
    """Yield every labeled tree on ``{1..k}`` in lexicographic Prüfer order.

    Raises:
        GuardError: If ``k`` is outside ``1..MAX_TREE_K``.

    """
    _guard_enumeration(k, MAX_TREE_K, "tree", float(k) ** max(k - 2, 0))
    if k <= 2:  # noqa: PLR2004
        yield Graph.from_edges(k, [(1, 2)] if k == 2 else [])  # noqa: PLR2004
        return
    for seq in itertools.product(range(1, k + 1), repeat=k - 2):
        yield prufer_decode(seq, k)


def _forests(
    roots: frozenset[int],
    others: frozenset[int],
) -> Generator[frozenset[tuple[int, int]], None, None]:
    if not roots:
        if not others:
            yield frozenset()
        return
    kappa = min(roots)
    rest = roots - {kappa}
    pool = sorted(others)
    for size in range(len(pool) + 1):
        for attached in itertools.combinations(pool, size):
            own = frozenset(_pair(kappa, a) for a in attached)
            for sub in _forests(rest | frozenset(attached), others - frozenset(attached)):
                yield own | sub


def enumerate_rooted_forests(
    roots: Iterable[int],
    others: Iterable[int],
) -> Generator[RootedForest, None, None]:
    """Yield every forest on ``J u I`` rooted in ``J`` exactly once.

    The smallest root is removed together with the set ``L`` of its
    neighbours, which become roots of the remaining forest; each forest
    corresponds to exactly one such decomposition.

    Raises:
        GraphError: If ``J`` is empty or ``J`` and ``I`` overlap.
        GuardError: If ``|J| + |I| > MAX_FOREST_VERTICES``.

    """
    j_set = frozenset(roots)
    i_set = frozenset(others)
    if not j_set:
        msg = "rooted forests need at least one root"
        raise GraphError(msg)
    if j_set & i_set:
        msg = f"root and non-root labels overlap: {sorted(j_set & i_set)}"
        raise GraphError(msg)
    size = len(j_set) + len(i_set)
    if size > MAX_FOREST_VERTICES:
        count = len(j_set) * size ** max(len(i_set) - 1, 0)
        msg = f"forest enumeration limited to {MAX_FOREST_VERTICES} vertices; {size} would yield {count} forests"
        raise GuardError(msg)
    for edges in _forests(j_set, i_set):
        yield RootedForest(roots=j_set, others=i_set, edges=edges)


def rooted_forest_count(n_roots: int, n_others: int) -> int:
    """Closed-form ``|F_J(I)| = j (j + i)^(i - 1)`` (1 when ``i = 0``)."""
    if n_others == 0:
        return 1
    return n_roots * (n_roots + n_others) ** (n_others - 1)


def is_rooted_forest(forest: RootedForest) -> bool:
    """Independent check: acyclic, and one root per connected component."""
    labels = forest.labels
    parent = {v: v for v in labels}

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in forest.edges:
        if a not in labels or b not in labels:
            return False
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    roots_per_component: dict[int, int] = {}
    for v in labels:
        roots_per_component.setdefault(find(v), 0)
        if v in forest.roots:
            roots_per_component[find(v)] += 1
    return all(n == 1 for n in roots_per_component.values())


def leaves(g: Graph | RootedForest, protected: Collection[int] = ()) -> list[int]:
    """Vertices of degree one not in ``protected``, ascending."""
    if isinstance(g, RootedForest):
        labels = sorted(g.labels)
        edges: Iterable[tuple[int, int]] = g.edges
    else:
        labels = list(range(1, g.k + 1))
        edges = g.edges
    degree = dict.fromkeys(labels, 0)
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    return [v for v in labels if degree[v] == 1 and v not in protected]


def cayley_count(k: int) -> int:
    """``k^(k-2)`` labeled trees (1 for ``k = 1``)."""
    return 1 if k == 1 else k ** (k - 2)


def graph_counts(k: int) -> dict[str, int]:
    """Audit counts ``|G_k|``, ``|C_k|`` and ``|T_k|`` next to Cayley's formula."""
    return {
        "k": k,
        "graphs": 1 << len(pair_slots(k)),
        "connected": count_connected(k),
        "trees": sum(1 for _ in enumerate_trees(k)),
        "cayley": cayley_count(k),
    }


def format_graph(g: Graph) -> str:
    """Dump format ``k:a-b,c-d``."""
    return f"{g.k}:" + ",".join(f"{a}-{b}" for a, b in g.edges)


def parse_graph(line: str) -> Graph:
    """Inverse of :func:`format_graph`."""
    head, _, body = line.strip().partition(":")
    try:
        k = int(head)
        edges = []
        for item in body.split(","):
            if item:
                a, b = item.split("-")
                edges.append((int(a), int(b)))
    except ValueError as e:
        msg = f"malformed graph line {line!r}"
        raise GraphError(msg) from e
    return Graph.from_edges(k, edges)
