"""Moment and cumulant algebra over set partitions.

Tables are dense over the ``2^j - 1`` nonempty subsets of ``{1..j}``; subset
``S`` is stored at index ``sum(1 << (i - 1) for i in S)``. Truncation uses the
rooted form of the partition recursion

    rho_S = sum over T subset of S containing min(S) of rho^T_T * rho_{S - T}

with ``rho_{empty} = 1``, which is equivalent to the sum over all
nontrivial partitions but touches each pair ``(T, S)`` once.

The finite-series pair :func:`rho_from_w` / :func:`w_from_rho` takes the
integrator as a parameter so this module stays exact and combinatorial.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Protocol

import numpy as np

from .exceptions import GuardError
from .types import MAX_TABLE_J, SeriesEstimate

if TYPE_CHECKING:
    from collections.abc import Callable, Generator, Iterable, Mapping, Sequence

logger = logging.getLogger(__name__)


class Integrator(Protocol):
    """Integrates a batched function of ``n`` free points over ``Lambda^n``."""

    dim: int

    def __call__(
        self,
        integrand: Callable[[np.ndarray], np.ndarray],
        n: int,
    ) -> tuple[float, float]:
        """Return ``(value, error)`` of the integral."""
        ...


def subset_mask(labels: Iterable[int]) -> int:
    """Bitmask of a set of 1-based labels."""
    mask = 0
    for i in labels:
        mask |= 1 << (i - 1)
    return mask


def mask_labels(mask: int) -> tuple[int, ...]:
    """1-based labels of a bitmask, ascending."""
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


def _guard_j(j: int) -> None:
    if not 0 <= j <= MAX_TABLE_J:
        msg = f"subset tables are limited to j <= {MAX_TABLE_J}; j={j} needs {2**j} entries"
        raise GuardError(msg)


@dataclass(frozen=True)
class SubsetTable:
    """Real values on every nonempty subset of ``{1..j}``.

    Attributes:
        j (int): Ground-set size.
        values (np.ndarray): Length ``2^j``; entry 0 (the empty set) is unused.

    """

    j: int
    values: np.ndarray

    def __post_init__(self) -> None:
        """Check completeness and freeze the storage."""
        _guard_j(self.j)
        vals = np.array(self.values, dtype=float)
        if vals.shape != (1 << self.j,):
            msg = f"table for j={self.j} needs {1 << self.j} entries, got {vals.shape}"
            raise ValueError(msg)
        vals[0] = 0.0
        if not np.all(np.isfinite(vals[1:])):
            msg = "subset table has missing (non-finite) entries"
            raise ValueError(msg)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, j: int, fn: Callable[[tuple[int, ...]], float]) -> SubsetTable:
        """Tabulate ``fn(labels)`` over all nonempty subsets."""
        _guard_j(j)
        vals = np.zeros(1 << j)
        for mask in range(1, 1 << j):
            vals[mask] = fn(mask_labels(mask))
        return cls(j, vals)

    @classmethod
    def from_mapping(cls, j: int, entries: Mapping[frozenset[int], float]) -> SubsetTable:
        """Build from a ``{frozenset(labels): value}`` mapping.

        Raises:
            ValueError: If a nonempty subset is missing.

        """
        _guard_j(j)
        vals = np.full(1 << j, np.nan)
        for labels, value in entries.items():
            vals[subset_mask(labels)] = value
        vals[0] = 0.0
        if np.isnan(vals).any():
            missing = [mask_labels(int(m)) for m in np.flatnonzero(np.isnan(vals))]
            msg = f"subset table is incomplete; missing {missing[:5]}"
            raise ValueError(msg)
        return cls(j, vals)

    @classmethod
    def product(cls, singletons: Sequence[float]) -> SubsetTable:
        """Factorized table ``rho_J = prod_{i in J} rho_i``."""
        return cls.from_function(len(singletons), lambda s: math.prod(singletons[i - 1] for i in s))

    def __getitem__(self, key: int | Iterable[int]) -> float:
        """Value at a bitmask or at a collection of 1-based labels."""
        mask = key if isinstance(key, int) else subset_mask(key)
        if not 0 < mask < (1 << self.j):
            msg = f"subset {key!r} is not a nonempty subset of 1..{self.j}"
            raise KeyError(msg)
        return float(self.values[mask])

    def to_json(self) -> str:
        """Serialize as a JSON object keyed by decimal bitmask strings."""
        return json.dumps({str(m): float(self.values[m]) for m in range(1, 1 << self.j)})

    @classmethod
    def from_json(cls, text: str) -> SubsetTable:
        """Inverse of :meth:`to_json`."""
        raw = json.loads(text)
        j = (len(raw) + 1).bit_length() - 1
        if (1 << j) - 1 != len(raw):
            msg = f"JSON table has {len(raw)} entries, not 2^j - 1"
            raise ValueError(msg)
        vals = np.full(1 << j, np.nan)
        for key, value in raw.items():
            vals[int(key)] = value
        vals[0] = 0.0
        return cls(j, vals)


@dataclass(frozen=True)
class SetPartition:
    """Partition of a ground set into blocks.

    Attributes:
        blocks (tuple[frozenset[int], ...]): Disjoint blocks. Empty blocks only
            appear in the ordered "possibly trivial" variant.

    """

    blocks: tuple[frozenset[int], ...]

    @property
    def ground(self) -> frozenset[int]:
        """Union of the blocks."""
        return frozenset().union(*self.blocks) if self.blocks else frozenset()

    def __len__(self) -> int:
        """Number of blocks."""
        return len(self.blocks)


def _restricted_growth_strings(n: int) -> Generator[list[int], None, None]:
    """Restricted growth strings of length ``n`` in lexicographic order."""
    if n == 0:
        yield []
        return
    a = [0] * n
    b = [1] * n  # b[i] = 1 + max(a[:i]) for i >= 1
    while True:
        yield a
        i = n - 1
        while i > 0 and a[i] == b[i]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        for t in range(i + 1, n):
            a[t] = 0
            b[t] = max(b[i], a[i] + 1)


def enumerate_partitions(
    ground: Iterable[int],
    allow_trivial_blocks: bool = False,  # noqa: FBT001, FBT002
    n_blocks: int | None = None,
) -> Generator[SetPartition, None, None]:
    """Yield every partition of ``ground`` once.

    Args:
        ground (Iterable[int]): Elements to partition.
        allow_trivial_blocks (bool): When True, yield ordered ``n_blocks``-tuples
            of possibly empty blocks (``n_blocks`` is then required).
        n_blocks (int | None): Restrict to partitions with exactly this many blocks.

    Raises:
        GuardError: If ``|ground| > MAX_TABLE_J``.

    """
    elements = sorted(ground)
    if len(elements) > MAX_TABLE_J:
        msg = f"partition enumeration limited to {MAX_TABLE_J} elements, got {len(elements)}"
        raise GuardError(msg)
    if allow_trivial_blocks:
        if n_blocks is None or n_blocks < 1:
            msg = "ordered partitions with empty blocks need n_blocks >= 1"
            raise ValueError(msg)
        for assignment in itertools.product(range(n_blocks), repeat=len(elements)):
            blocks = [set() for _ in range(n_blocks)]
            for e, blk in zip(elements, assignment, strict=True):
                blocks[blk].add(e)
            yield SetPartition(tuple(frozenset(b) for b in blocks))
        return
    for rgs in _restricted_growth_strings(len(elements)):
        k = (max(rgs) + 1) if rgs else 0
        if n_blocks is not None and k != n_blocks:
            continue
        blocks = [[] for _ in range(k)]
        for e, blk in zip(elements, rgs, strict=True):
            blocks[blk].append(e)
        yield SetPartition(tuple(frozenset(b) for b in blocks))


def bell_number(n: int) -> int:
    """Bell number by ``B_{n+1} = sum_k C(n, k) B_k``."""
    bell = [1]
    for m in range(n):
        bell.append(sum(math.comb(m, k) * bell[k] for k in range(m + 1)))
    return bell[n]


def _proper_submasks(mask: int) -> Generator[int, None, None]:
    sub = (mask - 1) & mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def truncate_values(values: np.ndarray) -> np.ndarray:
    """Vectorized truncation along the first axis.

    Args:
        values (np.ndarray): Moments, shape ``(2^j, ...)``; index 0 is ignored.
            Trailing axes are independent tables (bins, batches).

    Returns:
        np.ndarray: Cumulants with the same shape.

    """
    v = np.asarray(values, dtype=float)
    out = np.zeros_like(v)
    for s in range(1, v.shape[0]):
        low = s & -s
        rest = s ^ low
        acc = np.array(v[s], dtype=float)
        if rest:
            for u in _proper_submasks(rest):
                acc -= out[low | u] * v[rest ^ u]
        out[s] = acc
    return out


def untruncate_values(values: np.ndarray) -> np.ndarray:
    """Inverse of :func:`truncate_values`."""
    c = np.asarray(values, dtype=float)
    out = np.zeros_like(c)
    for s in range(1, c.shape[0]):
        low = s & -s
        rest = s ^ low
        acc = np.array(c[s], dtype=float)
        if rest:
            for u in _proper_submasks(rest):
                acc += c[low | u] * out[rest ^ u]
        out[s] = acc
    return out


def truncate(moments: SubsetTable) -> SubsetTable:
    """Cumulants ``rho^T`` of a complete moment table.

    Singletons are copied; every larger subset subtracts the products over
    its nontrivial partitions, organised by the block holding the minimum.
    """
    return SubsetTable(moments.j, truncate_values(moments.values))


def untruncate(cumulants: SubsetTable) -> SubsetTable:
    """Moments from cumulants; the exact inverse of :func:`truncate`."""
    return SubsetTable(cumulants.j, untruncate_values(cumulants.values))


def mobius_truncate(moments: SubsetTable) -> SubsetTable:
    """Cumulants by the closed form ``sum (-1)^(k-1) (k-1)! prod rho_block``.

    Independent of :func:`truncate`; exponential in ``j``, meant for checks.
    """
    v = moments.values

    def cumulant(labels: tuple[int, ...]) -> float:
        terms = []
        for part in enumerate_partitions(labels):
            k = len(part)
            sign = -1.0 if k % 2 == 0 else 1.0
            terms.append(
                sign * math.factorial(k - 1) * math.prod(v[subset_mask(b)] for b in part.blocks)
            )
        return math.fsum(terms)

    return SubsetTable.from_function(moments.j, cumulant)


def _series(
    densities: Sequence[Callable[[np.ndarray], np.ndarray]],
    anchors: np.ndarray,
    n_max: int,
    integrator: Integrator,
    sign: float,
) -> SeriesEstimate:
    pts = np.asarray(anchors, dtype=float).reshape(-1, integrator.dim)
    j = pts.shape[0]
    terms: list[float] = []
    errors: list[float] = []
    for n in range(n_max + 1):
        m = j + n
        if m >= len(densities):
            terms.append(0.0)
            errors.append(0.0)
            continue
        density = densities[m]
        coeff = sign**n / math.factorial(n)
        if n == 0:
            terms.append(float(density(pts[None, :, :])[0]))
            errors.append(0.0)
            continue

        def integrand(free: np.ndarray, density: Callable = density) -> np.ndarray:
            batch = np.concatenate([np.broadcast_to(pts, (free.shape[0], *pts.shape)), free], axis=1)
            return density(batch)

        value, err = integrator(integrand, n)
        terms.append(coeff * value)
        errors.append(abs(coeff) * err)
        logger.debug("series order %d: %.6g +- %.2g", n, coeff * value, abs(coeff) * err)
    return SeriesEstimate.from_terms(terms, errors, getattr(integrator, "samples", 0))


def rho_from_w(
    w_values: Sequence[Callable[[np.ndarray], np.ndarray]],
    anchors: np.ndarray,
    n_max: int,
    integrator: Integrator,
) -> SeriesEstimate:
    """Correlation function ``rho_j = sum_n (1/n!) int W_{j+n}``.

    Args:
        w_values (Sequence[Callable]): ``w_values[m]`` evaluates ``W_m`` on a
            batch of position configurations ``(N, m, d)``. Densities past the
            end of the sequence vanish (finite systems).
        anchors (np.ndarray): The ``j`` fixed points, shape ``(j, d)``.
        n_max (int): Last order kept.
        integrator (Integrator): Integrates over free positions in ``Lambda``.

    Returns:
        SeriesEstimate: Per-order terms with statistical and truncation errors.

    """
    return _series(w_values, anchors, n_max, integrator, 1.0)


def w_from_rho(
    rho_values: Sequence[Callable[[np.ndarray], np.ndarray]],
    anchors: np.ndarray,
    n_max: int,
    integrator: Integrator,
) -> SeriesEstimate:
    """Inverse formula ``W_j = sum_n ((-1)^n / n!) int rho_{j+n}``."""
    return _series(rho_values, anchors, n_max, integrator, -1.0)
