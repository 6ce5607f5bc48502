"""Data types and constants shared across the chaoscluster toolkit.

This module defines the size guards used by the exhaustive enumerations and
the small immutable records returned by the numerical operations. Types
that carry behaviour (potentials, graphs, subset tables, models) live next
to the operations that use them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_GRAPH_VERTICES = 16
"""Hard limit on the vertex count of a :class:`~chaoscluster.graphs.Graph` (int)."""

MAX_ENUMERATION_K = 8
"""Largest k for full enumeration of graphs and connected graphs (int)."""

MAX_TREE_K = 9
"""Largest k for Prüfer enumeration of labeled trees (int)."""

MAX_FOREST_VERTICES = 9
"""Largest ``|J| + |I|`` for rooted forest enumeration (int)."""

MAX_URSELL_K = 8
"""Largest cluster size for the connected-graph Ursell sum (int)."""

MAX_GENERALIZED_URSELL = 10
"""Largest ``|J| + |I|`` for the pivot recursions (int)."""

MAX_TABLE_J = 12
"""Largest ground-set size of a dense subset table (int)."""

MAX_SERIES_ORDER = 8
"""Largest ``j + n_max`` (or ``m_max``) accepted by the series evaluators (int)."""

TREE_GRAPH_SLACK = 1e-9
"""Relative slack allowed when comparing floating-point inequality sides (float)."""


@dataclass(frozen=True)
class ModelParams:
    """Scale parameters of the rescaled gas.

    Attributes:
        beta (float): Inverse temperature, strictly positive.
        eps (float): Interaction scale; the potential acts as ``phi(x / eps)``.
        dim (int): Spatial dimension ``d >= 1``.

    """

    beta: float
    eps: float
    dim: int

    def __post_init__(self) -> None:
        """Validate the parameters."""
        if self.beta <= 0 or self.eps <= 0:
            msg = f"beta and eps must be positive, got beta={self.beta}, eps={self.eps}"
            raise ValueError(msg)
        if self.dim < 1:
            msg = f"dim must be >= 1, got {self.dim}"
            raise ValueError(msg)

    @property
    def mu_eps(self) -> float:
        """Boltzmann-Grad activity ``eps^-(d-1)``, recomputed on every access."""
        return self.eps ** (-(self.dim - 1))

    def with_eps(self, eps: float) -> ModelParams:
        """Return a copy at a different interaction scale."""
        return ModelParams(beta=self.beta, eps=eps, dim=self.dim)


@dataclass(frozen=True)
class PhaseConfiguration:
    """Phase points ``z_i = (x_i, v_i)``.

    Attributes:
        positions (np.ndarray): Array of shape ``(j, d)``.
        velocities (np.ndarray | None): Array of shape ``(j, d)`` or None when
            the state carries no velocity factor.

    """

    positions: np.ndarray
    velocities: np.ndarray | None = None

    def __post_init__(self) -> None:
        """Normalise arrays to read-only float matrices."""
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float)).copy()
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        if self.velocities is not None:
            vel = np.atleast_2d(np.asarray(self.velocities, dtype=float)).copy()
            if vel.shape != pos.shape:
                msg = f"velocities shape {vel.shape} != positions shape {pos.shape}"
                raise ValueError(msg)
            vel.setflags(write=False)
            object.__setattr__(self, "velocities", vel)

    @property
    def j(self) -> int:
        """Number of phase points."""
        return int(self.positions.shape[0])

    @property
    def dim(self) -> int:
        """Spatial dimension."""
        return int(self.positions.shape[1])


@dataclass(frozen=True)
class SeriesEstimate:
    """Partial sum of a series evaluated term by term.

    Attributes:
        value (float): Sum of ``terms``.
        stat_error (float): One standard error of ``value``.
        n_max (int): Truncation order.
        terms (tuple[float, ...]): Per-order contributions.
        samples (int): Monte Carlo samples per order (0 for exact evaluations).
        term_errors (tuple[float, ...]): Per-order standard errors.
        truncation_error (float): Magnitude of the last retained term, a
            heuristic for the neglected tail.

    """

    value: float
    stat_error: float
    n_max: int
    terms: tuple[float, ...]
    samples: int = 0
    term_errors: tuple[float, ...] = field(default=())
    truncation_error: float = 0.0

    @classmethod
    def from_terms(
        cls,
        terms: list[float],
        errors: list[float],
        samples: int,
    ) -> SeriesEstimate:
        """Build an estimate whose value is the compensated sum of ``terms``."""
        value = math.fsum(terms)
        stat = math.sqrt(math.fsum(e * e for e in errors))
        return cls(
            value=value,
            stat_error=stat,
            n_max=len(terms) - 1,
            terms=tuple(terms),
            samples=samples,
            term_errors=tuple(errors),
            truncation_error=abs(terms[-1]) if terms else 0.0,
        )

    @classmethod
    def exact(cls, value: float) -> SeriesEstimate:
        """Single-term estimate without statistical error."""
        return cls(value=value, stat_error=0.0, n_max=0, terms=(value,))


@dataclass(frozen=True)
class LengthBracket:
    """Rigorous bracket ``lower <= L(x) <= upper`` on the cluster length.

    Attributes:
        lower (float): Lower bound.
        upper (float): Upper bound.
        method (str): ``exact-steiner``, ``mst-bracket`` or ``local-opt``.

    """

    lower: float
    upper: float
    method: str


@dataclass(frozen=True)
class NZeroBounds:
    """Bounds on the number of extra interaction-scale points.

    Attributes:
        lower (int): Lower bound from the cluster length.
        upper (int): Points needed when subdividing spanning-tree edges.
        convention (str): ``edge`` (spacing eps) or ``ball-overlap`` (spacing 2 eps).

    """

    lower: int
    upper: int
    convention: str


@dataclass(frozen=True)
class InequalityReport:
    """Both sides of an inequality ``lhs <= rhs``.

    Attributes:
        lhs (float): Left-hand side.
        rhs (float): Right-hand side.
        holds (bool): Whether ``lhs <= rhs`` within :data:`TREE_GRAPH_SLACK`.

    """

    lhs: float
    rhs: float
    holds: bool

    @classmethod
    def compare(cls, lhs: float, rhs: float, slack: float = TREE_GRAPH_SLACK) -> InequalityReport:
        """Compare two sides with relative floating-point slack."""
        holds = lhs <= rhs * (1.0 + slack)
        return cls(lhs=lhs, rhs=rhs, holds=bool(holds))
