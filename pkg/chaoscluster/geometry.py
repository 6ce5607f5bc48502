"""Cluster lengths: tree lengths, spanning trees and Steiner brackets.

The cluster length of ``x_1..x_j`` is the minimal total length of a tree
connecting the points, possibly through extra vertices. It is bracketed by

    max(mst / 2, diameter) <= L <= mst

and the upper end is tightened by optimizing the Steiner points of every
full Steiner topology (``(2j - 5)!!`` of them). Each topology is a convex
problem in the Steiner positions, solved by damped Weiszfeld iteration.
"""

from __future__ import annotations

import logging
import math
from functools import cache
from itertools import combinations
from typing import TYPE_CHECKING

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial.distance import pdist, squareform

from .exceptions import GraphError
from .types import LengthBracket, NZeroBounds

if TYPE_CHECKING:
    from collections.abc import Sequence

    from .graphs import Graph

logger = logging.getLogger(__name__)

BRACKET = "bracket"
OPTIMIZE = "optimize"
EXACT_SMALL = "exact_small"
EFFORTS = (BRACKET, OPTIMIZE, EXACT_SMALL)
"""Accepted ``effort`` values of :func:`steiner_length` (tuple[str, ...])."""

MAX_OPTIMIZE_J = 6
"""Largest point count whose full topologies are all optimized (int)."""

MAX_EXACT_J = 4
"""Largest point count for the ``exact_small`` solve (int)."""

WEISZFELD_TOL = 1e-10
"""Stop once no Steiner point moves farther than this (float)."""

WEISZFELD_MAX_ITER = 20_000
"""Iteration cap of one topology solve (int)."""

EDGE = "edge"
BALL_OVERLAP = "ball-overlap"
CONVENTIONS = (EDGE, BALL_OVERLAP)
"""Connection conventions for n0: spacing ``eps`` or ``2 eps`` (tuple[str, ...])."""


def _points(xs: np.ndarray) -> np.ndarray:
    pts = np.asarray(xs, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def tree_length(tree: Graph, xs: np.ndarray) -> float:
    """Total Euclidean length of ``tree`` drawn on ``xs`` (labels 1..j).

    Raises:
        GraphError: If ``tree`` is not a tree on ``len(xs)`` labels.

    """
    pts = _points(xs)
    if tree.k != pts.shape[0] or not tree.is_tree():
        msg = f"tree_length needs a tree on {pts.shape[0]} labels, got k={tree.k} with {tree.n_edges} edges"
        raise GraphError(msg)
    return math.fsum(float(np.linalg.norm(pts[a - 1] - pts[b - 1])) for a, b in tree.edges)


def _distance_matrix(pts: np.ndarray) -> np.ndarray:
    d = squareform(pdist(pts))
    # csgraph reads zeros as missing edges
    off = ~np.eye(d.shape[0], dtype=bool)
    d[off & (d == 0.0)] = np.finfo(float).tiny
    return d


def mst_edges(xs: np.ndarray) -> list[tuple[int, int, float]]:
    """Edges ``(a, b, length)`` of a minimum spanning tree, 0-based."""
    pts = _points(xs)
    if pts.shape[0] < 2:  # noqa: PLR2004
        return []
    tree = minimum_spanning_tree(_distance_matrix(pts)).tocoo()
    return [
        (int(a), int(b), float(np.linalg.norm(pts[a] - pts[b])))
        for a, b in zip(tree.row, tree.col, strict=True)
    ]


def mst_length(xs: np.ndarray) -> float:
    """Minimal tree length over trees on the points alone (0 for one point)."""
    return math.fsum(length for _, _, length in mst_edges(xs))


def diameter(xs: np.ndarray) -> float:
    """Largest pairwise distance."""
    pts = _points(xs)
    return float(pdist(pts).max()) if pts.shape[0] > 1 else 0.0


def enclosing_radius(xs: np.ndarray) -> float:
    """Radius of the smallest ball containing every point.

    The optimal ball is the circumscribed ball of at most ``d + 1`` of the
    points, so all such subsets are tried and the smallest covering one kept.
    """
    pts = _points(xs)
    j, dim = pts.shape
    if j == 1:
        return 0.0
    best = diameter(pts)
    for k in range(2, min(j, dim + 1) + 1):
        for subset in combinations(range(j), k):
            base = pts[subset[0]]
            spans = pts[list(subset[1:])] - base
            gram = 2.0 * spans @ spans.T
            if np.linalg.matrix_rank(gram) < k - 1:
                continue
            center = base + spans.T @ np.linalg.solve(gram, np.einsum("ij,ij->i", spans, spans))
            radius = float(np.linalg.norm(center - base))
            if radius < best and np.all(np.linalg.norm(pts - center, axis=1) <= radius * (1 + 1e-12) + 1e-15):
                best = radius
    return best


@cache
def full_steiner_topologies(j: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """All full Steiner topologies on ``j`` terminals.

    Terminals are ``0..j-1`` and Steiner points ``j..2j-3``. Each topology
    for ``t + 1`` terminals subdivides one edge of a ``t``-terminal topology
    with a new Steiner point attached to the new terminal.
    """
    if j < 2:  # noqa: PLR2004
        return ((),)
    if j == 2:  # noqa: PLR2004
        return (((0, 1),),)
    topologies: list[list[tuple[int, int]]] = [[(0, j), (1, j), (2, j)]]
    for t in range(3, j):
        s = j + t - 2
        grown = []
        for edges in topologies:
            for idx, (u, v) in enumerate(edges):
                rest = edges[:idx] + edges[idx + 1 :]
                grown.append([*rest, (u, s), (v, s), (t, s)])
        topologies = grown
    return tuple(tuple(sorted(edges)) for edges in topologies)


def solve_topology(
    xs: np.ndarray,
    edges: Sequence[tuple[int, int]],
    tol: float = WEISZFELD_TOL,
    max_iter: int = WEISZFELD_MAX_ITER,
) -> tuple[float, np.ndarray]:
    """Minimize the length of a fixed topology over its Steiner points.

    Each sweep moves every Steiner point towards the inverse-distance
    weighted mean of its neighbours (Weiszfeld). The step is halved whenever
    a sweep lengthens the tree.

    Returns:
        tuple[float, np.ndarray]: Tree length and Steiner positions.

    """
    pts = _points(xs)
    j, dim = pts.shape
    n_nodes = max((max(e) for e in edges), default=j - 1) + 1
    n_steiner = max(0, n_nodes - j)
    neighbours: list[list[int]] = [[] for _ in range(j + n_steiner)]
    for u, v in edges:
        neighbours[u].append(v)
        neighbours[v].append(u)
    pos = np.vstack([pts, np.repeat(pts.mean(axis=0, keepdims=True), n_steiner, axis=0)])
    for s in range(j, j + n_steiner):
        adjacent = [pts[v] for v in neighbours[s] if v < j]
        if adjacent:
            pos[s] = np.mean(adjacent, axis=0)
    # break exact coincidences with terminals deterministically
    pos[j:] += 1e-7 * (1.0 + np.arange(n_steiner * dim).reshape(n_steiner, dim))

    def length() -> float:
        return math.fsum(float(np.linalg.norm(pos[u] - pos[v])) for u, v in edges)

    current = length()
    relax = 1.0
    for it in range(max_iter):
        moved = 0.0
        for s in range(j, j + n_steiner):
            nbr = pos[neighbours[s]]
            dist = np.maximum(np.linalg.norm(nbr - pos[s], axis=1), 1e-15)
            target = (nbr / dist[:, None]).sum(axis=0) / (1.0 / dist).sum()
            step = relax * float(np.linalg.norm(target - pos[s]))
            pos[s] += relax * (target - pos[s])
            moved = max(moved, step)
        new = length()
        if new > current:
            relax = max(relax / 2.0, 1.0 / 64.0)
            logger.debug("Weiszfeld stall at iteration %d (%.3g > %.3g)", it, new, current)
        current = new
        if moved < tol:
            break
    return current, pos[j:].copy()


def _best_topology_length(pts: np.ndarray, tol: float) -> float:
    return min(solve_topology(pts, edges, tol=tol)[0] for edges in full_steiner_topologies(pts.shape[0]))


def steiner_length(xs: np.ndarray, effort: str = BRACKET) -> LengthBracket:
    """Rigorous bracket on the cluster length of ``xs``.

    Args:
        xs (np.ndarray): Points, shape ``(j, d)``.
        effort (str): ``bracket`` for ``[max(mst/2, diameter), mst]``,
            ``optimize`` to tighten the upper end over all full topologies
            (``j <= 6``), or ``exact_small`` for the full solve when
            ``j <= 4`` and ``d = 2``. Unsupported combinations fall back to
            ``bracket`` with a warning.

    Returns:
        LengthBracket: ``lower <= L <= upper`` with the method actually used.

    """
    if effort not in EFFORTS:
        msg = f"Unknown effort {effort!r}; expected one of {EFFORTS}"
        raise ValueError(msg)
    pts = _points(xs)
    j, dim = pts.shape
    mst = mst_length(pts)
    lower = min(mst, max(mst / 2.0, diameter(pts)))
    if j <= 2 or lower >= mst:  # noqa: PLR2004
        method = "exact-steiner" if effort == EXACT_SMALL else "mst-bracket"
        return LengthBracket(lower=mst, upper=mst, method=method)
    if effort == EXACT_SMALL:
        if j <= MAX_EXACT_J and dim == 2:  # noqa: PLR2004
            best = min(mst, _best_topology_length(pts, WEISZFELD_TOL))
            return LengthBracket(lower=best, upper=best, method="exact-steiner")
        logger.warning("exact_small unsupported for j=%d, d=%d; falling back to bracket", j, dim)
        effort = BRACKET
    if effort == OPTIMIZE:
        if j <= MAX_OPTIMIZE_J:
            best = min(mst, _best_topology_length(pts, 1e-8))
            return LengthBracket(lower=min(lower, best), upper=best, method="local-opt")
        logger.warning("optimize limited to j <= %d, got j=%d; falling back to bracket", MAX_OPTIMIZE_J, j)
    return LengthBracket(lower=lower, upper=mst, method="mst-bracket")


def n_zero_bounds(
    xs: np.ndarray,
    eps: float,
    convention: str = EDGE,
    effort: str = BRACKET,
) -> NZeroBounds:
    """Bounds on the number of extra points needed to connect ``xs`` at scale ``eps``.

    ``lower = max(0, ceil(L_lower / s) - j)`` and ``upper`` counts the points
    placed along minimum-spanning-tree edges so that consecutive gaps stay
    below ``s``, where ``s = eps`` (``edge``) or ``2 eps`` (``ball-overlap``).
    Points inside a single open ``eps``-ball need no extra points under
    either convention.
    """
    if eps <= 0:
        msg = f"eps must be positive, got {eps}"
        raise ValueError(msg)
    if convention not in CONVENTIONS:
        msg = f"Unknown convention {convention!r}; expected one of {CONVENTIONS}"
        raise ValueError(msg)
    pts = _points(xs)
    if enclosing_radius(pts) < eps:
        return NZeroBounds(lower=0, upper=0, convention=convention)
    spacing = eps if convention == EDGE else 2.0 * eps
    bracket = steiner_length(pts, effort)
    lower = max(0, math.ceil(bracket.lower / spacing - 1e-9) - pts.shape[0])
    upper = sum(math.floor(length / spacing + 1e-12) for _, _, length in mst_edges(pts))
    return NZeroBounds(lower=lower, upper=upper, convention=convention)
