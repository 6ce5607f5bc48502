"""Cluster-expansion series of a maximally chaotic state and the decay bound.

A maximally chaotic state (MCS) on a box ``Lambda`` has n-particle densities
proportional to ``mu^n / n! f^{(x) n} psi^eps_n``. This module evaluates

* the log-partition series ``log Z = mu sum_m mu^(m-1)/m! int u_m drho^m``,
* truncated correlations ``rho^T_j / mu^j = f^{(x) j} sum_n mu^n/n! int u_{j+n} drho^n``,
* correlations as a ratio of Boltzmann-factor series,
* cluster integrals of single trees,

and compares truncated correlations with the bound

    A^j f^{(x) j} j^(j-2) (eps/eps0)^((L/eps - j + 1)+) / (1 - eps/eps0).

Integrals over free points use importance sampling concentrated on the
support of the integrand. For ``u_{j+n}`` each sample picks a rooted forest
uniformly, places every free point uniformly in the interaction ball of its
forest parent, and is reweighted by the number of rooted spanning forests of
the resulting proximity graph (matrix-forest theorem). This proposal covers
every configuration on which ``u_{j+n}`` can be nonzero.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from collections import deque
from dataclasses import dataclass
from functools import cache
from typing import TYPE_CHECKING

import numpy as np
from scipy import special

from .exceptions import GraphError, GuardError, RegimeError
from .geometry import steiner_length
from .graphs import enumerate_rooted_forests, rooted_forest_count
from .potential import ball_volume, boltzmann_psi_batch, c_beta, zeta_tensor
from .types import MAX_SERIES_ORDER, ModelParams, SeriesEstimate
from .ursell import ursell_batch

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from .graphs import Graph
    from .potential import PairPotential
    from .types import PhaseConfiguration

logger = logging.getLogger(__name__)

UNIFORM = "uniform"
GAUSSIAN_BUMP = "gaussian-bump"
DENSITIES = (UNIFORM, GAUSSIAN_BUMP)
"""Supported spatial densities (tuple[str, ...])."""

NO_VELOCITY = "none"
MAXWELLIAN = "maxwellian"
VELOCITIES = (NO_VELOCITY, MAXWELLIAN)
"""Supported velocity factors (tuple[str, ...])."""

SAMPLE_BATCH = 20_000
"""Monte Carlo samples drawn per vectorized batch (int)."""

A_PRIME_GRID = 1e-3
"""Resolution of the ``A'`` search grid (float)."""

MAX_A_PRIME_GRID = 40
"""Largest ``j_max`` / ``n_max`` accepted by :func:`fit_A_prime` (int)."""


@dataclass(frozen=True)
class MCSModel:
    """A maximally chaotic state on an axis-aligned box anchored at the origin.

    Attributes:
        potential (PairPotential): Pair interaction.
        params (ModelParams): ``beta``, ``eps`` and ``dim``.
        box (tuple[float, ...]): Side lengths of ``Lambda``.
        density (str): ``uniform`` or ``gaussian-bump``.
        bump_center (tuple[float, ...]): Centre of the Gaussian bump.
        bump_width (float): Standard deviation of the Gaussian bump.
        velocity (str): ``none`` or ``maxwellian`` (at inverse temperature ``beta``).

    """

    potential: PairPotential
    params: ModelParams
    box: tuple[float, ...]
    density: str = UNIFORM
    bump_center: tuple[float, ...] = ()
    bump_width: float = 1.0
    velocity: str = NO_VELOCITY

    def __post_init__(self) -> None:
        """Validate the geometry and the density choice."""
        box = tuple(float(b) for b in self.box)
        if len(box) != self.params.dim or min(box) <= 0:
            msg = f"box {box} must have {self.params.dim} positive side lengths"
            raise ValueError(msg)
        object.__setattr__(self, "box", box)
        if self.density not in DENSITIES:
            msg = f"Unknown density {self.density!r}; expected one of {DENSITIES}"
            raise ValueError(msg)
        if self.velocity not in VELOCITIES:
            msg = f"Unknown velocity factor {self.velocity!r}; expected one of {VELOCITIES}"
            raise ValueError(msg)
        if self.density == GAUSSIAN_BUMP:
            center = tuple(float(c) for c in self.bump_center) or tuple(b / 2 for b in box)
            if len(center) != self.params.dim or self.bump_width <= 0:
                msg = f"gaussian-bump needs a {self.params.dim}-d centre and positive width"
                raise ValueError(msg)
            object.__setattr__(self, "bump_center", center)
        else:
            logger.warning("uniform density is discontinuous at the box boundary; outside the continuity hypothesis")

    @property
    def dim(self) -> int:
        """Spatial dimension."""
        return self.params.dim

    @property
    def mu(self) -> float:
        """Activity ``mu_eps``."""
        return self.params.mu_eps

    @property
    def volume(self) -> float:
        """``|Lambda|``."""
        return math.prod(self.box)

    @property
    def support_radius(self) -> float:
        """``eps * range``; ``zeta^eps`` vanishes at larger separations."""
        return self.params.eps * self.potential.interaction_range

    def with_eps(self, eps: float) -> MCSModel:
        """Copy at another interaction scale."""
        return dataclasses.replace(self, params=self.params.with_eps(eps))

    def _bump_norm(self) -> np.ndarray:
        c = np.asarray(self.bump_center)
        w = self.bump_width
        hi = special.ndtr((np.asarray(self.box) - c) / w)
        lo = special.ndtr(-c / w)
        return hi - lo

    def rho(self, x: np.ndarray) -> np.ndarray:
        """Spatial density at points ``x`` of shape ``(..., d)``; zero outside ``Lambda``."""
        pts = np.asarray(x, dtype=float)
        inside = np.all((pts >= 0.0) & (pts <= np.asarray(self.box)), axis=-1)
        if self.density == UNIFORM:
            return np.where(inside, 1.0 / self.volume, 0.0)
        c = np.asarray(self.bump_center)
        w = self.bump_width
        gauss = np.exp(-0.5 * ((pts - c) / w) ** 2) / (w * math.sqrt(2.0 * math.pi) * self._bump_norm())
        return np.where(inside, np.prod(gauss, axis=-1), 0.0)

    @property
    def rho_bar(self) -> float:
        """``sup rho``, attained at the box point nearest the bump centre."""
        if self.density == UNIFORM:
            return 1.0 / self.volume
        peak = np.clip(np.asarray(self.bump_center), 0.0, np.asarray(self.box))
        return float(self.rho(peak))

    def velocity_density(self, v: np.ndarray) -> np.ndarray:
        """Maxwellian ``(beta / 2 pi)^(d/2) exp(-beta |v|^2 / 2)``; 1 without a velocity factor."""
        vel = np.asarray(v, dtype=float)
        if self.velocity == NO_VELOCITY:
            return np.ones(vel.shape[:-1])
        beta = self.params.beta
        return (beta / (2.0 * math.pi)) ** (self.dim / 2) * np.exp(-0.5 * beta * np.sum(vel**2, axis=-1))

    def f(self, config: PhaseConfiguration) -> float:
        """``f^{(x) j}(z_j)``; velocities are marginalized when the configuration has none."""
        value = float(np.prod(self.rho(config.positions)))
        if self.velocity == MAXWELLIAN and config.velocities is not None:
            value *= float(np.prod(self.velocity_density(config.velocities)))
        return value

    def sample_positions(self, rng: np.random.Generator, size: tuple[int, ...]) -> np.ndarray:
        """Draw points distributed as ``rho``; shape ``(*size, d)``."""
        box = np.asarray(self.box)
        if self.density == UNIFORM:
            return rng.uniform(0.0, 1.0, size=(*size, self.dim)) * box
        c = np.asarray(self.bump_center)
        w = self.bump_width
        lo = special.ndtr(-c / w)
        hi = special.ndtr((box - c) / w)
        u = lo + (hi - lo) * rng.uniform(0.0, 1.0, size=(*size, self.dim))
        return np.clip(c + w * special.ndtri(u), 0.0, box)

    def sample_velocities(self, rng: np.random.Generator, size: tuple[int, ...]) -> np.ndarray:
        """Draw velocities from the velocity factor (zeros without one)."""
        if self.velocity == NO_VELOCITY:
            return np.zeros((*size, self.dim))
        return rng.normal(0.0, 1.0 / math.sqrt(self.params.beta), size=(*size, self.dim))

    def density_audit(self, resolution: int = 64) -> tuple[float, float]:
        """Midpoint-rule mass of ``rho`` and its maximum on the same grid."""
        axes = [(np.arange(resolution) + 0.5) * (b / resolution) for b in self.box]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        values = self.rho(grid)
        cell = self.volume / resolution**self.dim
        return float(values.sum() * cell), float(values.max())


def epsilon_zero(model: MCSModel) -> float:
    """Theorem radius ``1 / (2 rho_bar C_beta e^(2 beta B + 1))``; ``inf`` for the ideal gas."""
    p = model.potential
    cb = c_beta(p, model.params.beta, model.dim)
    if cb == 0.0:
        return math.inf
    return 1.0 / (2.0 * model.rho_bar * cb * math.exp(2.0 * model.params.beta * p.declared_B + 1.0))


def lemma_radius(model: MCSModel) -> float:
    """Convergence radius ``1 / (rho_bar C_beta e^(2 beta B + 1)) = 2 eps0`` of the series."""
    return 2.0 * epsilon_zero(model)


def _check_regime(model: MCSModel) -> None:
    radius = lemma_radius(model)
    if model.params.eps >= radius:
        logger.warning("eps=%g is not below the convergence radius %g; series may diverge", model.params.eps, radius)


def _generators(seed: int | np.random.SeedSequence, n: int) -> list[np.random.Generator]:
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in root.spawn(n)]


def _batches(samples: int) -> list[int]:
    full, rest = divmod(samples, SAMPLE_BATCH)
    return [SAMPLE_BATCH] * full + ([rest] if rest else [])


def _mean_and_error(weights: list[np.ndarray]) -> tuple[float, float]:
    w = np.concatenate(weights)
    if w.size == 0:
        return 0.0, 0.0
    mean = math.fsum(w) / w.size
    if w.size < 2:  # noqa: PLR2004
        return mean, 0.0
    return mean, float(np.std(w, ddof=1) / math.sqrt(w.size))


def _uniform_in_balls(rng: np.random.Generator, n: int, dim: int, radius: float) -> np.ndarray:
    g = rng.normal(size=(n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * (radius * rng.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / dim))


@cache
def _forest_plan(j: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Placement order and parents of every forest in ``F_{0..j-1}(j..j+n-1)``."""
    orders = []
    parents = []
    for forest in enumerate_rooted_forests(range(j), range(j, j + n)):
        adj: dict[int, list[int]] = {v: [] for v in range(j + n)}
        for a, b in forest.edges:
            adj[a].append(b)
            adj[b].append(a)
        queue = deque(range(j))
        seen = set(range(j))
        order, parent = [], []
        while queue:
            v = queue.popleft()
            for w in sorted(adj[v]):
                if w not in seen:
                    seen.add(w)
                    order.append(w)
                    parent.append(v)
                    queue.append(w)
        orders.append(order)
        parents.append(parent)
    order_arr = np.asarray(orders, dtype=np.intp).reshape(-1, n)
    parent_arr = np.asarray(parents, dtype=np.intp).reshape(-1, n)
    return order_arr, parent_arr


def _rooted_forest_counts(pts: np.ndarray, j: int, radius: float) -> np.ndarray:
    """Spanning forests rooted in the first ``j`` points of each proximity graph."""
    dist = np.linalg.norm(pts[:, :, None, :] - pts[:, None, :, :], axis=-1)
    adj = (dist < radius).astype(float)
    idx = np.arange(pts.shape[1])
    adj[:, idx, idx] = 0.0
    lap = -adj
    lap[:, idx, idx] = adj.sum(axis=2)
    return np.rint(np.linalg.det(lap[:, j:, j:]))


def ursell_weights(model: MCSModel, anchors: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Unbiased per-sample estimates of ``int u_{j+n}(x_j, y) rho^{(x) n}(y) dy``.

    Args:
        model (MCSModel): The state.
        anchors (np.ndarray): Anchors per sample, shape ``(N, j, d)``, ``j >= 1``.
        n (int): Number of free points.
        rng (np.random.Generator): Random source.

    Returns:
        np.ndarray: One weight per sample.

    """
    pts0 = np.asarray(anchors, dtype=float)
    size, j, dim = pts0.shape
    p, params = model.potential, model.params
    if n == 0:
        return ursell_batch(zeta_tensor(p, params, pts0))
    radius = model.support_radius
    order, parent = _forest_plan(j, n)
    pick = rng.integers(order.shape[0], size=size)
    pts = np.empty((size, j + n, dim))
    pts[:, :j] = pts0
    rows = np.arange(size)
    for t in range(n):
        v = order[pick, t]
        pts[rows, v] = pts[rows, parent[pick, t]] + _uniform_in_balls(rng, size, dim, radius)
    density = np.prod(model.rho(pts[:, j:]), axis=1)
    weights = np.zeros(size)
    live = density > 0.0
    if live.any():
        sub = pts[live]
        u = ursell_batch(zeta_tensor(p, params, sub))
        counts = np.maximum(_rooted_forest_counts(sub, j, radius), 1.0)
        proposal = rooted_forest_count(j, n) * ball_volume(dim, radius) ** n
        weights[live] = u * density[live] * proposal / counts
    return weights


def _guard_order(order: int, what: str) -> None:
    if order > MAX_SERIES_ORDER:
        msg = f"{what} limited to order {MAX_SERIES_ORDER}, got {order}"
        raise GuardError(msg)


def log_partition(
    model: MCSModel,
    m_max: int,
    samples: int,
    seed: int | np.random.SeedSequence = 0,
) -> SeriesEstimate:
    """Series ``log Z = mu sum_{m <= m_max} mu^(m-1)/m! int u_m drho^m``.

    The ``m = 1`` term is exactly ``mu``. For ``m >= 2`` the first point is
    uniform in ``Lambda`` (weight ``rho |Lambda|``) and the rest are anchored
    to it by :func:`ursell_weights`. ``terms[m - 1]`` holds order ``m``.

    Raises:
        GuardError: If ``m_max`` exceeds :data:`MAX_SERIES_ORDER`.

    """
    if m_max < 1:
        msg = f"m_max must be >= 1, got {m_max}"
        raise ValueError(msg)
    _guard_order(m_max, "log-partition series")
    _check_regime(model)
    mu = model.mu
    rngs = _generators(seed, m_max)
    terms = [mu]
    errors = [0.0]
    for m in range(2, m_max + 1):
        rng = rngs[m - 1]
        chunks = []
        for size in _batches(samples):
            x1 = rng.uniform(0.0, 1.0, size=(size, 1, model.dim)) * np.asarray(model.box)
            lead = model.rho(x1[:, 0]) * model.volume
            chunks.append(lead * ursell_weights(model, x1, m - 1, rng))
        mean, err = _mean_and_error(chunks)
        coeff = mu**m / math.factorial(m)
        terms.append(coeff * mean)
        errors.append(coeff * err)
        logger.debug("log Z order %d: %.6g +- %.2g", m, coeff * mean, coeff * err)
    est = SeriesEstimate.from_terms(terms, errors, samples)
    return dataclasses.replace(est, n_max=m_max)


def truncated_correlation(
    model: MCSModel,
    config: PhaseConfiguration,
    n_max: int,
    samples: int,
    seed: int | np.random.SeedSequence = 0,
) -> SeriesEstimate:
    """Series ``rho^T_j / mu^j = f^{(x) j} sum_{n <= n_max} mu^n/n! int u_{j+n} drho^n``.

    Raises:
        GuardError: If ``j + n_max`` exceeds :data:`MAX_SERIES_ORDER`.

    """
    j = config.j
    _guard_order(j + n_max, "truncated-correlation series")
    _check_regime(model)
    mu = model.mu
    fj = model.f(config)
    rngs = _generators(seed, n_max + 1)
    terms = []
    errors = []
    for n in range(n_max + 1):
        if fj == 0.0:
            terms.append(0.0)
            errors.append(0.0)
            continue
        if n == 0:
            terms.append(fj * float(ursell_weights(model, config.positions[None], 0, rngs[0])[0]))
            errors.append(0.0)
            continue
        chunks = []
        for size in _batches(samples):
            anchors = np.broadcast_to(config.positions, (size, j, model.dim))
            chunks.append(ursell_weights(model, anchors, n, rngs[n]))
        mean, err = _mean_and_error(chunks)
        coeff = fj * mu**n / math.factorial(n)
        terms.append(coeff * mean)
        errors.append(coeff * err)
        logger.debug("rho^T_%d order %d: %.6g +- %.2g", j, n, coeff * mean, coeff * err)
    return SeriesEstimate.from_terms(terms, errors, samples)


def _psi_series(
    model: MCSModel,
    anchors: np.ndarray,
    n_max: int,
    samples: int,
    rngs: Sequence[np.random.Generator],
) -> tuple[list[float], list[float]]:
    """Terms ``mu^n/n! int psi_{j+n}(x_j, y) drho^n`` for ``n = 0..n_max``."""
    p, params = model.potential, model.params
    j = anchors.shape[0]
    terms, errors = [], []
    for n in range(n_max + 1):
        coeff = model.mu**n / math.factorial(n)
        if n == 0 or (j + n < 2):  # noqa: PLR2004
            base = float(boltzmann_psi_batch(p, params, anchors[None])[0]) if j else 1.0
            terms.append(coeff * base)
            errors.append(0.0)
            continue
        chunks = []
        for size in _batches(samples):
            free = model.sample_positions(rngs[n], (size, n))
            batch = np.concatenate([np.broadcast_to(anchors, (size, j, model.dim)), free], axis=1)
            chunks.append(boltzmann_psi_batch(p, params, batch))
        mean, err = _mean_and_error(chunks)
        terms.append(coeff * mean)
        errors.append(coeff * err)
    return terms, errors


def partition_function(
    model: MCSModel,
    m_max: int,
    samples: int,
    seed: int | np.random.SeedSequence = 0,
) -> SeriesEstimate:
    """Finite-volume series ``Z = sum_{m <= m_max} mu^m/m! int psi_m drho^m``."""
    _guard_order(m_max, "partition-function series")
    terms, errors = _psi_series(model, np.zeros((0, model.dim)), m_max, samples, _generators(seed, m_max + 1))
    return SeriesEstimate.from_terms(terms, errors, samples)


def correlation(
    model: MCSModel,
    config: PhaseConfiguration,
    n_max: int,
    samples: int,
    seed: int | np.random.SeedSequence = 0,
) -> SeriesEstimate:
    """``rho_j / mu^j = f^{(x) j} / Z sum_{n <= n_max} mu^n/n! int psi_{j+n}(x_j, y) drho^n``.

    ``Z`` is truncated at the same order and estimated from an independent
    substream; its error enters ``stat_error`` by the delta method.
    """
    j = config.j
    _guard_order(j + n_max, "correlation series")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    num_seed, z_seed = root.spawn(2)
    z_est = partition_function(model, n_max, samples, z_seed)
    num_terms, num_errors = _psi_series(model, config.positions, n_max, samples, _generators(num_seed, n_max + 1))
    scale = model.f(config) / z_est.value
    est = SeriesEstimate.from_terms(
        [scale * t for t in num_terms],
        [abs(scale) * e for e in num_errors],
        samples,
    )
    rel_z = z_est.stat_error / z_est.value
    stat = math.hypot(est.stat_error, est.value * rel_z)
    return dataclasses.replace(est, stat_error=stat)


def _tree_hops(tree: Graph) -> dict[tuple[int, int], int]:
    adj = tree.adjacency()
    hops = {}
    for src in adj:
        dist = {src: 0}
        queue = deque([src])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        for dst, h in dist.items():
            hops[(src, dst)] = h
    return hops


def cluster_integral(
    model: MCSModel,
    anchors: np.ndarray,
    tree: Graph,
    samples: int,
    seed: int | np.random.SeedSequence = 0,
) -> SeriesEstimate:
    """Tree integral ``I_T = int prod_{edges} |zeta^eps| drho(x_{j+1})..drho(x_{j+n})``.

    Labels ``1..j`` sit at ``anchors``; labels ``j+1..j+n`` are free. Free
    vertices are placed in breadth-first order from label 1, each uniformly
    in the interaction ball of its tree parent, and weighted by
    ``rho * ball volume``. The result is exactly 0 when two anchors are
    farther apart than the tree path between them can reach.

    Raises:
        GraphError: If ``tree`` is not a tree on at least ``j`` labels.

    """
    pts0 = np.asarray(anchors, dtype=float).reshape(-1, model.dim)
    j = pts0.shape[0]
    if tree.k < j or not tree.is_tree():
        msg = f"cluster_integral needs a tree spanning labels 1..{max(tree.k, j)} including all {j} anchors"
        raise GraphError(msg)
    n = tree.k - j
    radius = model.support_radius
    hops = _tree_hops(tree)
    for a in range(1, j + 1):
        for b in range(a + 1, j + 1):
            if np.linalg.norm(pts0[a - 1] - pts0[b - 1]) >= hops[(a, b)] * radius:
                return SeriesEstimate.exact(0.0)
    p, params = model.potential, model.params
    if n == 0:
        z = np.abs(zeta_tensor(p, params, pts0[None])[0])
        return SeriesEstimate.exact(math.prod(z[a - 1, b - 1] for a, b in tree.edges))
    adj = tree.adjacency()
    order, parent = [], []
    seen = {1}
    queue = deque([1])
    while queue:
        v = queue.popleft()
        for w in sorted(adj[v]):
            if w not in seen:
                seen.add(w)
                queue.append(w)
                if w > j:
                    order.append(w - 1)
                    parent.append(v - 1)
    (rng,) = _generators(seed, 1)
    vol = ball_volume(model.dim, radius)
    edges = np.asarray(tree.edges) - 1
    chunks = []
    for size in _batches(samples):
        pts = np.empty((size, j + n, model.dim))
        pts[:, :j] = pts0
        for v, par in zip(order, parent, strict=True):
            pts[:, v] = pts[:, par] + _uniform_in_balls(rng, size, model.dim, radius)
        weight = np.prod(model.rho(pts[:, j:]), axis=1) * vol**n
        z = np.abs(zeta_tensor(p, params, pts))
        weight *= np.prod(z[:, edges[:, 0], edges[:, 1]], axis=1)
        chunks.append(weight)
    mean, err = _mean_and_error(chunks)
    return SeriesEstimate(value=mean, stat_error=err, n_max=n, terms=(mean,), samples=samples, term_errors=(err,))


def theorem_rhs(model: MCSModel, config: PhaseConfiguration, a_const: float, eps0: float) -> float:
    """Right-hand side ``A^j f j^(j-2) (eps/eps0)^((L/eps - j + 1)+) / (1 - eps/eps0)``.

    ``L`` is the lower end of the Steiner bracket, which only enlarges the
    bound.

    Raises:
        RegimeError: If ``eps >= eps0``.

    """
    eps = model.params.eps
    if eps >= eps0:
        msg = f"theorem bound needs eps < eps0, got eps={eps}, eps0={eps0}"
        raise RegimeError(msg)
    j = config.j
    length = steiner_length(config.positions).lower
    exponent = max(0.0, length / eps - j + 1)
    ratio = eps / eps0
    return a_const**j * model.f(config) * float(j) ** (j - 2) * ratio**exponent / (1.0 - ratio)


@dataclass(frozen=True)
class DecayBound:
    """Macroscopic-separation form of the decay bound.

    Attributes:
        value (float): Bound with ``L`` replaced by ``(j - 1) a``.
        min_separation (float): Smallest pairwise distance ``a``.
        a_prime (float): Rate ``a'`` in ``exp(-(j - 1) a' eps^-1 log eps^-1)``.

    """

    value: float
    min_separation: float
    a_prime: float


def decay_bound(model: MCSModel, config: PhaseConfiguration, a_const: float, eps0: float) -> DecayBound:
    """Bound for particles at mutual distance at least ``a``."""
    eps = model.params.eps
    if eps >= eps0:
        msg = f"decay bound needs eps < eps0, got eps={eps}, eps0={eps0}"
        raise RegimeError(msg)
    j = config.j
    pts = config.positions
    sep = min(
        (float(np.linalg.norm(pts[a] - pts[b])) for a in range(j) for b in range(a + 1, j)),
        default=0.0,
    )
    exponent = max(0.0, (j - 1) * sep / eps - j + 1)
    ratio = eps / eps0
    value = a_const**j * model.f(config) * float(j) ** (j - 2) * ratio**exponent / (1.0 - ratio)
    a_prime = 0.0
    if j > 1 and eps < 1.0:
        a_prime = exponent * math.log(1.0 / ratio) * eps / ((j - 1) * math.log(1.0 / eps))
    return DecayBound(value=value, min_separation=sep, a_prime=a_prime)


def fit_A_prime(j_max: int, n_max: int, grid: float = A_PRIME_GRID) -> float:  # noqa: N802
    """Smallest ``A'`` on a grid with ``(j+n)^(j+n-2) / n! <= j^(j-2) A'^j (2e)^n``.

    Checked for all ``1 <= j <= j_max``, ``0 <= n <= n_max`` in log space.
    """
    if not (1 <= j_max <= MAX_A_PRIME_GRID and 0 <= n_max <= MAX_A_PRIME_GRID):
        msg = f"fit_A_prime grid limited to {MAX_A_PRIME_GRID}x{MAX_A_PRIME_GRID}, got ({j_max}, {n_max})"
        raise GuardError(msg)
    log_2e = math.log(2.0) + 1.0
    worst = -math.inf
    for j in range(1, j_max + 1):
        for n in range(n_max + 1):
            m = j + n
            lhs = (m - 2) * math.log(m) - math.lgamma(n + 1)
            rhs = (j - 2) * math.log(j) + n * log_2e
            worst = max(worst, (lhs - rhs) / j)
    a_prime = math.exp(worst)
    return math.ceil(a_prime / grid - 1e-9) * grid


def theorem_constant_a(a_prime: float, beta: float, declared_b: float) -> float:
    """``A = A' e^(2 beta B) (1 + e^(2 beta B))``."""
    s = math.exp(2.0 * beta * declared_b)
    return a_prime * s * (1.0 + s)


@dataclass(frozen=True)
class TheoremRow:
    """Outcome of the decay bound for one configuration.

    Attributes:
        index (int): Position in the input list.
        j (int): Number of particles.
        length_lower (float): Lower end of the cluster-length bracket.
        value (float): Series estimate of ``rho^T_j / mu^j``.
        stat_error (float): Its standard error.
        lhs (float): ``|value| + 2 stat_error``.
        rhs (float): :func:`theorem_rhs`.
        holds (bool): ``lhs <= rhs``.

    """

    index: int
    j: int
    length_lower: float
    value: float
    stat_error: float
    lhs: float
    rhs: float
    holds: bool

    @property
    def margin(self) -> float:
        """``rhs - lhs``."""
        return self.rhs - self.lhs


def verify_theorem(  # noqa: PLR0913
    model: MCSModel,
    configs: Sequence[PhaseConfiguration],
    n_max: int,
    samples: int,
    seed: int | np.random.SeedSequence = 0,
    a_const: float | None = None,
    eps0: float | None = None,
) -> list[TheoremRow]:
    """Compare the conservative series estimate with the decay bound per configuration.

    ``A`` defaults to :func:`theorem_constant_a` applied to ``fit_A_prime(40, 40)``.
    """
    e0 = epsilon_zero(model) if eps0 is None else eps0
    if a_const is None:
        a_const = theorem_constant_a(
            fit_A_prime(MAX_A_PRIME_GRID, MAX_A_PRIME_GRID),
            model.params.beta,
            model.potential.declared_B,
        )
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rows = []
    for index, (config, child) in enumerate(zip(configs, root.spawn(len(configs)), strict=True)):
        est = truncated_correlation(model, config, n_max, samples, child)
        lhs = abs(est.value) + 2.0 * est.stat_error
        rhs = theorem_rhs(model, config, a_const, e0)
        row = TheoremRow(
            index=index,
            j=config.j,
            length_lower=steiner_length(config.positions).lower,
            value=est.value,
            stat_error=est.stat_error,
            lhs=lhs,
            rhs=rhs,
            holds=lhs <= rhs,
        )
        if not row.holds:
            logger.warning("bound violated for config %d: lhs=%.4g > rhs=%.4g", index, lhs, rhs)
        rows.append(row)
    return rows


class BoxMonteCarloIntegrator:
    """Plain Monte Carlo over ``Lambda^n`` with uniform points.

    Satisfies :class:`chaoscluster.cumulants.Integrator`.
    """

    def __init__(self, box: Sequence[float], samples: int, seed: int | np.random.SeedSequence = 0) -> None:
        """Initialize the integrator.

        Args:
            box (Sequence[float]): Side lengths of the box.
            samples (int): Samples per integral.
            seed (int | np.random.SeedSequence): Seed of the random stream.

        """
        self.box = np.asarray(box, dtype=float)
        self.dim = int(self.box.size)
        self.samples = samples
        (self._rng,) = _generators(seed, 1)

    def __call__(self, integrand: Callable[[np.ndarray], np.ndarray], n: int) -> tuple[float, float]:
        """Estimate ``int_{Lambda^n} integrand``."""
        vol = float(np.prod(self.box)) ** n
        chunks = []
        for size in _batches(self.samples):
            free = self._rng.uniform(0.0, 1.0, size=(size, n, self.dim)) * self.box
            chunks.append(np.asarray(integrand(free), dtype=float) * vol)
        return _mean_and_error(chunks)


def state_densities(model: MCSModel, n_particles_max: int, z_value: float) -> list[Callable[[np.ndarray], np.ndarray]]:
    """Position densities ``W_m = mu^m rho^{(x) m} psi_m / Z`` for ``m <= n_particles_max``.

    Velocities are integrated out. A finite system holds at most
    ``n_particles_max`` particles, so longer sequences are not needed.
    """
    p, params = model.potential, model.params

    def make(m: int) -> Callable[[np.ndarray], np.ndarray]:
        coeff = model.mu**m / z_value

        def density(batch: np.ndarray) -> np.ndarray:
            pts = np.asarray(batch, dtype=float)
            rho = np.prod(model.rho(pts), axis=1) if m else np.ones(pts.shape[0])
            return coeff * rho * boltzmann_psi_batch(p, params, pts)

        return density

    return [make(m) for m in range(n_particles_max + 1)]


def model_from_params(  # noqa: PLR0913
    potential: PairPotential,
    beta: float,
    eps: float,
    box: Sequence[float],
    density: str = UNIFORM,
    velocity: str = NO_VELOCITY,
) -> MCSModel:
    """Shorthand for the common uniform-density model."""
    return MCSModel(potential, ModelParams(beta=beta, eps=eps, dim=len(box)), tuple(box), density, velocity=velocity)
