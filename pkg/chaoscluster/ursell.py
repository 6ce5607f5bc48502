"""Ursell functions, tree and forest majorants, and the tree-graph inequality.

All evaluations run on an :class:`UrsellContext`, which fixes a point
configuration and precomputes its pairwise energies and Mayer functions.
Labels passed to the functions below are 0-based positions into that
configuration.

Three independent routes to ``u_k`` are provided:

* :func:`ursell_graph_sum` sums ``prod zeta`` over all connected graphs.
* :func:`generalized_ursell` runs the pivot recursion for ``u~_{J,I}``;
  with ``J = {j1}`` it equals ``u_{1+|I|}``.
* :func:`ursell_batch` inverts ``psi_S = sum_{T containing min S} u_T psi_{S-T}``
  over subsets, vectorized across a batch of configurations.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .exceptions import GraphError, GuardError
from .graphs import (
    MAX_CACHED_K,
    connected_mask_chunks,
    connected_masks,
    enumerate_rooted_forests,
    enumerate_trees,
    pair_slots,
)
from .potential import energy_matrix, random_configurations, zeta_matrix
from .types import (
    MAX_GENERALIZED_URSELL,
    MAX_TREE_K,
    MAX_URSELL_K,
    InequalityReport,
)

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from .potential import PairPotential
    from .types import ModelParams

logger = logging.getLogger(__name__)

FUZZ_CHUNK = 25
"""Fuzzing trials drawn from one seed child (int)."""


@dataclass(frozen=True)
class UrsellContext:
    """A point configuration with its cached pair quantities.

    Attributes:
        potential (PairPotential): Pair potential.
        params (ModelParams): Scale parameters.
        points (np.ndarray): Positions, shape ``(n, d)``.
        zeta (np.ndarray): Symmetric ``zeta^eps`` matrix, zero diagonal.
        energy (np.ndarray): Symmetric rescaled energy matrix, zero diagonal.

    """

    potential: PairPotential
    params: ModelParams
    points: np.ndarray
    zeta: np.ndarray = field(init=False, repr=False)
    energy: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        """Freeze the configuration and build the caches."""
        pts = np.array(self.points, dtype=float).reshape(-1, self.params.dim)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        z = zeta_matrix(self.potential, self.params, pts)
        e = energy_matrix(self.potential, self.params, pts)
        z.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "zeta", z)
        object.__setattr__(self, "energy", e)

    @property
    def n_points(self) -> int:
        """Size of the configuration."""
        return int(self.points.shape[0])

    @property
    def stability_factor(self) -> float:
        """``exp(2 beta B)``, the per-vertex factor of the majorants."""
        return math.exp(2.0 * self.params.beta * self.potential.declared_B)


def _labels(ctx: UrsellContext, labels: Iterable[int]) -> tuple[int, ...]:
    out = tuple(int(a) for a in labels)
    if len(set(out)) != len(out):
        msg = f"labels must be distinct, got {out}"
        raise GraphError(msg)
    if any(not 0 <= a < ctx.n_points for a in out):
        msg = f"labels {out} outside configuration of size {ctx.n_points}"
        raise GraphError(msg)
    return out


def _slot_weights(matrix: np.ndarray, labels: Sequence[int]) -> np.ndarray:
    k = len(labels)
    return np.array([matrix[labels[a - 1], labels[b - 1]] for a, b in pair_slots(k)])


def _masked_products(masks: np.ndarray, weights: np.ndarray) -> np.ndarray:
    prod = np.ones(masks.shape, dtype=float)
    for s, w in enumerate(weights):
        bit = ((masks >> np.uint64(s)) & np.uint64(1)).astype(bool)
        prod *= np.where(bit, w, 1.0)
    return prod


def ursell_graph_sum(ctx: UrsellContext, labels: Iterable[int]) -> float:
    """Connected-graph sum ``u_k = sum_{G in C_k} prod_{edges} zeta``.

    Args:
        ctx (UrsellContext): Configuration context.
        labels (Iterable[int]): Distinct configuration indices.

    Returns:
        float: 0 for the empty set, 1 for a singleton.

    Raises:
        GuardError: If more than :data:`MAX_URSELL_K` labels are given.

    """
    lab = _labels(ctx, labels)
    k = len(lab)
    if k == 0:
        return 0.0
    if k == 1:
        return 1.0
    if k > MAX_URSELL_K:
        msg = f"connected-graph sum limited to k <= {MAX_URSELL_K}, got k={k}"
        raise GuardError(msg)
    weights = _slot_weights(ctx.zeta, lab)
    if not weights.any():
        return 0.0
    if k <= MAX_CACHED_K:
        return math.fsum(_masked_products(connected_masks(k), weights))
    return math.fsum(float(_masked_products(chunk, weights).sum()) for chunk in connected_mask_chunks(k))


def _mask_of(labels: Iterable[int]) -> int:
    mask = 0
    for a in labels:
        mask |= 1 << a
    return mask


def _members(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def _submasks(mask: int) -> Iterable[int]:
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def _pivot_of(energy: np.ndarray, members: Sequence[int]) -> tuple[int, float]:
    best, best_w = members[0], -math.inf
    for kappa in members:
        w = math.fsum(energy[kappa, a] for a in members if a != kappa) if len(members) > 1 else 0.0
        if w > best_w:
            best, best_w = kappa, w
    return best, best_w


def pivot(ctx: UrsellContext, labels: Iterable[int]) -> int:
    """Label ``kappa`` maximizing ``W_kappa = sum_{a in J - kappa} phi((x_kappa - x_a) / eps)``.

    Ties go to the smallest label. By stability ``exp(-beta W_kappa) <= exp(2 beta B)``.
    """
    members = sorted(_labels(ctx, labels))
    if not members:
        msg = "pivot needs a nonempty label set"
        raise GraphError(msg)
    return _pivot_of(ctx.energy, members)[0]


def _check_j_i(ctx: UrsellContext, roots: Iterable[int], others: Iterable[int]) -> tuple[int, int]:
    j_lab = _labels(ctx, roots)
    i_lab = _labels(ctx, others)
    if set(j_lab) & set(i_lab):
        msg = f"J and I overlap: {sorted(set(j_lab) & set(i_lab))}"
        raise GraphError(msg)
    size = len(j_lab) + len(i_lab)
    if size > MAX_GENERALIZED_URSELL:
        msg = f"pivot recursion limited to |J| + |I| <= {MAX_GENERALIZED_URSELL}, got {size}"
        raise GuardError(msg)
    return _mask_of(j_lab), _mask_of(i_lab)


def generalized_ursell(ctx: UrsellContext, roots: Iterable[int], others: Iterable[int]) -> float:
    """Generalized Ursell function ``u~_{J,I}`` by the pivot recursion.

    ``u~_{J,I} = exp(-beta W_kappa) sum_{S subset I} prod_{a in S} zeta(x_a, x_kappa) u~_{J-kappa+S, I-S}``
    with ``u~_{empty,I} = [I empty]``. A branch with ``W_kappa = +inf`` is 0.
    """
    jm, im = _check_j_i(ctx, roots, others)
    beta = ctx.params.beta
    zeta = ctx.zeta
    memo: dict[tuple[int, int], float] = {}

    def rec(jm: int, im: int) -> float:
        if jm == 0:
            return 1.0 if im == 0 else 0.0
        key = (jm, im)
        if key in memo:
            return memo[key]
        kappa, w = _pivot_of(ctx.energy, _members(jm))
        if math.isinf(w):
            memo[key] = 0.0
            return 0.0
        rest = jm & ~(1 << kappa)
        terms = []
        for s in _submasks(im):
            weight = math.prod(zeta[a, kappa] for a in _members(s))
            if weight != 0.0:
                terms.append(weight * rec(rest | s, im & ~s))
        value = math.exp(-beta * w) * math.fsum(terms)
        memo[key] = value
        return value

    return rec(jm, im)


def forest_majorant(ctx: UrsellContext, roots: Iterable[int], others: Iterable[int]) -> float:
    """Majorant ``theta~_{J,I}`` by the same pivot recursion with ``|zeta|``.

    ``theta~_{J,I} = exp(2 beta B) sum_{L subset I} prod_{a in L} |zeta(x_a, x_kappa)| theta~_{J-kappa+L, I-L}``,
    which equals ``exp(2 (j + i) beta B)`` times the forest sum of ``prod |zeta|``.
    """
    jm, im = _check_j_i(ctx, roots, others)
    factor = ctx.stability_factor
    abs_zeta = np.abs(ctx.zeta)
    memo: dict[tuple[int, int], float] = {}

    def rec(jm: int, im: int) -> float:
        if jm == 0:
            return 1.0 if im == 0 else 0.0
        key = (jm, im)
        if key in memo:
            return memo[key]
        kappa, _ = _pivot_of(ctx.energy, _members(jm))
        rest = jm & ~(1 << kappa)
        terms = []
        for s in _submasks(im):
            weight = math.prod(abs_zeta[a, kappa] for a in _members(s))
            if weight != 0.0:
                terms.append(weight * rec(rest | s, im & ~s))
        value = factor * math.fsum(terms)
        memo[key] = value
        return value

    return rec(jm, im)


def forest_sum_enumerated(ctx: UrsellContext, roots: Iterable[int], others: Iterable[int]) -> float:
    """``exp(2 (j + i) beta B) sum_{F in F_J(I)} prod |zeta|`` by explicit enumeration."""
    j_lab = _labels(ctx, roots)
    i_lab = _labels(ctx, others)
    abs_zeta = np.abs(ctx.zeta)
    total = math.fsum(
        math.prod(abs_zeta[a, b] for a, b in forest.edges)
        for forest in enumerate_rooted_forests(j_lab, i_lab)
    )
    return ctx.stability_factor ** (len(j_lab) + len(i_lab)) * total


def tree_sum(ctx: UrsellContext, labels: Iterable[int]) -> float:
    """``sum_{T in T_k} prod_{edges} |zeta|`` by the matrix-tree theorem.

    The weighted Laplacian of ``|zeta|`` restricted to ``labels`` has every
    cofactor equal to the weighted tree count.
    """
    lab = list(_labels(ctx, labels))
    k = len(lab)
    if k == 0:
        return 0.0
    if k == 1:
        return 1.0
    a = np.abs(ctx.zeta[np.ix_(lab, lab)])
    laplacian = np.diag(a.sum(axis=1)) - a
    return max(0.0, float(np.linalg.det(laplacian[1:, 1:])))


def tree_sum_enumerated(ctx: UrsellContext, labels: Iterable[int]) -> float:
    """Tree sum by Prüfer enumeration; cross-check for :func:`tree_sum`."""
    lab = _labels(ctx, labels)
    k = len(lab)
    if k == 0:
        return 0.0
    abs_zeta = np.abs(ctx.zeta)
    return math.fsum(
        math.prod(abs_zeta[lab[a - 1], lab[b - 1]] for a, b in tree.edges) for tree in enumerate_trees(k)
    )


def tree_majorant(ctx: UrsellContext, labels: Iterable[int]) -> float:
    """Right-hand side ``exp(2 k beta B) sum_{T in T_k} prod |zeta|`` of the tree-graph inequality.

    Raises:
        GuardError: If more than :data:`MAX_TREE_K` labels are given.

    """
    lab = _labels(ctx, labels)
    k = len(lab)
    if k > MAX_TREE_K:
        msg = f"tree majorant limited to k <= {MAX_TREE_K}, got k={k}"
        raise GuardError(msg)
    return ctx.stability_factor**k * tree_sum(ctx, lab)


def verify_tree_graph(ctx: UrsellContext, labels: Iterable[int]) -> InequalityReport:
    """Report ``|u_k| <= tree_majorant``; a violation is returned, never raised."""
    lab = _labels(ctx, labels)
    return InequalityReport.compare(abs(ursell_graph_sum(ctx, lab)), tree_majorant(ctx, lab))


def verify_forest_bound(
    ctx: UrsellContext,
    roots: Iterable[int],
    others: Iterable[int],
) -> InequalityReport:
    """Report ``u~_{J,I} <= theta~_{J,I}`` (no absolute value on the left)."""
    return InequalityReport.compare(
        generalized_ursell(ctx, roots, others),
        forest_majorant(ctx, roots, others),
    )


def ursell_subsets(zeta_batch: np.ndarray) -> np.ndarray:
    """Ursell functions of every subset for a batch of configurations.

    Args:
        zeta_batch (np.ndarray): Mayer matrices, shape ``(N, k, k)``.

    Returns:
        np.ndarray: Shape ``(N, 2^k)``; column ``S`` holds ``u_S`` (``u_empty = 0``).

    """
    z = np.asarray(zeta_batch, dtype=float)
    if z.ndim == 2:  # noqa: PLR2004
        z = z[None]
    n, k = z.shape[0], z.shape[1]
    if k > MAX_URSELL_K:
        msg = f"batched Ursell evaluation limited to k <= {MAX_URSELL_K}, got k={k}"
        raise GuardError(msg)
    full = 1 << k
    psi = np.ones((n, full))
    for s in range(1, full):
        top = s.bit_length() - 1
        below = s ^ (1 << top)
        factor = np.ones(n)
        for a in _members(below):
            factor *= 1.0 + z[:, a, top]
        psi[:, s] = psi[:, below] * factor
    u = np.zeros((n, full))
    for s in range(1, full):
        low = s & -s
        rest = s ^ low
        acc = psi[:, s].copy()
        sub = (rest - 1) & rest if rest else 0
        while rest:
            t = low | sub
            acc -= u[:, t] * psi[:, s ^ t]
            if sub == 0:
                break
            sub = (sub - 1) & rest
        u[:, s] = acc
    return u


def ursell_batch(zeta_batch: np.ndarray) -> np.ndarray:
    """``u_k`` of the full label set for each configuration in a batch."""
    return ursell_subsets(zeta_batch)[:, -1]


@dataclass(frozen=True)
class FuzzSummary:
    """Aggregate of a tree-graph fuzzing campaign.

    Attributes:
        trials (int): Configurations checked.
        violations (int): Trials with ``lhs > rhs``.
        max_ratio (float): Largest observed ``lhs / rhs``.
        first_violation (np.ndarray | None): Configuration of the first violation.

    """

    trials: int
    violations: int
    max_ratio: float
    first_violation: np.ndarray | None = None


def _fuzz_task(
    potential: PairPotential,
    params: ModelParams,
    k: int,
    trials: int,
    seed: np.random.SeedSequence,
) -> FuzzSummary:
    rng = np.random.default_rng(seed)
    configs = random_configurations(potential, trials, k, params.dim, rng)
    violations = 0
    max_ratio = 0.0
    first = None
    for xs in configs:
        ctx = UrsellContext(potential, params, xs * params.eps)
        report = verify_tree_graph(ctx, range(k))
        if report.rhs > 0:
            max_ratio = max(max_ratio, report.lhs / report.rhs)
        if not report.holds:
            violations += 1
            if first is None:
                first = ctx.points
    return FuzzSummary(trials, violations, max_ratio, first)


def fuzz_tree_graph(  # noqa: PLR0913
    potential: PairPotential,
    params: ModelParams,
    k: int,
    trials: int,
    seed: int,
    workers: int | None = None,
) -> FuzzSummary:
    """Check the tree-graph inequality on ``trials`` random ``k``-point configurations.

    Trials are cut into chunks of :data:`FUZZ_CHUNK`, each drawing from its
    own ``SeedSequence`` child, so the summary depends on ``seed`` only and
    not on ``workers``.
    """
    n_chunks = max(1, math.ceil(trials / FUZZ_CHUNK))
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    shares = [min(FUZZ_CHUNK, trials - c * FUZZ_CHUNK) for c in range(n_chunks)]
    n_workers = max(1, min(workers or os.cpu_count() or 1, n_chunks))
    if n_workers == 1:
        parts = [_fuzz_task(potential, params, k, share, child) for share, child in zip(shares, children, strict=True)]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = [
                pool.submit(_fuzz_task, potential, params, k, share, child)
                for share, child in zip(shares, children, strict=True)
            ]
            parts = [f.result() for f in futures]
    first = next((p.first_violation for p in parts if p.first_violation is not None), None)
    summary = FuzzSummary(
        trials=sum(p.trials for p in parts),
        violations=sum(p.violations for p in parts),
        max_ratio=max(p.max_ratio for p in parts),
        first_violation=first,
    )
    logger.info(
        "tree-graph fuzz %s k=%d: %d trials, %d violations, max ratio %.4g",
        potential.kind,
        k,
        summary.trials,
        summary.violations,
        summary.max_ratio,
    )
    return summary
