"""Grand-canonical Metropolis sampler and exact tiny-system oracle.

The chain targets the MCS measure with densities
``(mu^n / n!) f^{(x) n}(z_n) psi^eps_n(x_n) / Z`` using three moves:

- insert: position uniform in ``Lambda``, velocity from the velocity factor,
  accepted with ``min(1, mu rho(x) |Lambda| e^(-beta dU) / (n + 1))``;
- delete: a uniformly chosen particle, with the inverse ratio;
- translate: a uniform step of half-width ``0.5 eps``, accepted with
  ``min(1, rho(x') / rho(x) e^(-beta dU))``.

Velocities never interact, so their proposal cancels in every ratio.
Local energies come from a cell list with cells of side ``eps * range``.

Empirical ``rho_j / mu^j`` tables are accumulated by counting ordered
``j``-tuples of distinct particles per bin, split into batches for batch-mean
error bars.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from scipy.spatial.distance import pdist

from .cumulants import rho_from_w, truncate_values
from .exceptions import ConfigError, GuardError, RegimeError
from .expansion import state_densities
from .types import SeriesEstimate

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from .expansion import MCSModel

logger = logging.getLogger(__name__)

MOVE_PROBABILITIES = (0.3, 0.3, 0.4)
"""Probabilities of insert, delete and translate moves (tuple[float, float, float])."""

STEP_FRACTION = 0.5
"""Translate half-width in units of ``eps`` (float)."""

BURN_IN_FRACTION = 0.1
"""Share of sweeps discarded before measuring (float)."""

N_BATCHES = 50
"""Number of batches for batch-mean errors (int)."""

ACCEPTANCE_WINDOW = 10_000
"""Moves per acceptance-rate window (int)."""

MIN_ACCEPTANCE = 1e-3
"""Acceptance rate below which a warning is logged (float)."""

CHECKPOINT_VERSION = 1
"""Format version written into checkpoint files (int)."""

MAX_ORACLE_PARTICLES = 4
"""Largest particle cap of the exact tiny-system oracle (int)."""

MAX_ORACLE_BOX = 4.0
"""Largest oracle box length in units of ``eps`` (float)."""


class CellList:
    """Uniform grid of cells holding particle indices.

    Cells have side at least ``cutoff``, so every particle within ``cutoff``
    of a point lies in the ``3^d`` cells around it.
    """

    def __init__(self, box: Sequence[float], cutoff: float) -> None:
        """Initialize an empty cell list.

        Args:
            box (Sequence[float]): Box side lengths.
            cutoff (float): Interaction cutoff.

        """
        self.box = np.asarray(box, dtype=float)
        self.shape = tuple(max(1, int(b // cutoff)) if cutoff > 0 else 1 for b in self.box)
        self.size = self.box / np.asarray(self.shape)
        self._cells: dict[tuple[int, ...], set[int]] = {}

    def cell_of(self, x: np.ndarray) -> tuple[int, ...]:
        """Cell index of a point inside the box."""
        idx = np.floor(np.asarray(x) / self.size).astype(int)
        return tuple(int(i) for i in np.clip(idx, 0, np.asarray(self.shape) - 1))

    def add(self, i: int, x: np.ndarray) -> None:
        """Register particle ``i`` at ``x``."""
        self._cells.setdefault(self.cell_of(x), set()).add(i)

    def remove(self, i: int, x: np.ndarray) -> None:
        """Forget particle ``i`` at ``x``."""
        cell = self.cell_of(x)
        self._cells[cell].discard(i)
        if not self._cells[cell]:
            del self._cells[cell]

    def neighbours(self, x: np.ndarray) -> list[int]:
        """Indices in the cells adjacent to ``x`` (including its own)."""
        centre = self.cell_of(x)
        out: list[int] = []
        for offset in itertools.product((-1, 0, 1), repeat=len(centre)):
            cell = tuple(c + o for c, o in zip(centre, offset, strict=True))
            if all(0 <= c < s for c, s in zip(cell, self.shape, strict=True)):
                out.extend(self._cells.get(cell, ()))
        return sorted(set(out))

    def __len__(self) -> int:
        """Number of registered particles."""
        return sum(len(s) for s in self._cells.values())


@dataclass
class EstimatorGrid:
    """Ordered ``j``-tuple counts per bin of ``Lambda^j``, split into batches.

    Attributes:
        j (int): Tuple size.
        bins (int): Bins per axis of ``Lambda``.
        box (tuple[float, ...]): Box side lengths.
        mu (float): Activity used to rescale estimates.
        counts (np.ndarray): Shape ``(N_BATCHES, cells^j)``.
        measurements (np.ndarray): Measurements per batch.

    """

    j: int
    bins: int
    box: tuple[float, ...]
    mu: float
    counts: np.ndarray = field(default=None)  # type: ignore[assignment]
    measurements: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        """Allocate empty counters."""
        if self.counts is None:
            self.counts = np.zeros((N_BATCHES, self.n_cells**self.j))
        if self.measurements is None:
            self.measurements = np.zeros(N_BATCHES)

    @property
    def n_cells(self) -> int:
        """Number of cells in ``Lambda``."""
        return self.bins ** len(self.box)

    @property
    def cell_volume(self) -> float:
        """Volume of one cell."""
        return math.prod(self.box) / self.n_cells

    @property
    def total_measurements(self) -> int:
        """Measurements over all batches."""
        return int(self.measurements.sum())

    def centres(self) -> np.ndarray:
        """Cell centres in flat cell order, shape ``(cells, d)``."""
        axes = [(np.arange(self.bins) + 0.5) * (b / self.bins) for b in self.box]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(self.box))

    def flat_cells(self, positions: np.ndarray) -> np.ndarray:
        """Flat cell index of each position."""
        idx = np.floor(positions / (np.asarray(self.box) / self.bins)).astype(int)
        idx = np.clip(idx, 0, self.bins - 1)
        return np.ravel_multi_index(tuple(idx.T), (self.bins,) * len(self.box))

    def record(self, positions: np.ndarray, batch: int) -> None:
        """Add every ordered ``j``-tuple of distinct particles to batch ``batch``."""
        self.measurements[batch] += 1
        n = positions.shape[0]
        if n < self.j:
            return
        cells = self.flat_cells(positions)
        tuples = np.asarray(list(itertools.permutations(range(n), self.j)), dtype=np.intp)
        flat = np.ravel_multi_index(tuple(cells[tuples].T), (self.n_cells,) * self.j)
        np.add.at(self.counts[batch], flat, 1.0)


def merge_grids(grids: Sequence[EstimatorGrid]) -> EstimatorGrid:
    """Merge grids of independent chains by summing batch counters.

    Raises:
        ConfigError: If the grids do not share ``j``, binning and box.

    """
    first = grids[0]
    for g in grids[1:]:
        if (g.j, g.bins, g.box) != (first.j, first.bins, first.box):
            msg = "cannot merge estimator grids with different j, bins or box"
            raise ConfigError(msg)
    return EstimatorGrid(
        j=first.j,
        bins=first.bins,
        box=first.box,
        mu=first.mu,
        counts=np.sum([g.counts for g in grids], axis=0),
        measurements=np.sum([g.measurements for g in grids], axis=0),
    )


@dataclass(frozen=True)
class GridEstimate:
    """Per-bin estimates of a rescaled ``j``-point function.

    Attributes:
        j (int): Order.
        values (np.ndarray): Shape ``(cells,) * j``; NaN marks empty bins.
        errors (np.ndarray): Batch-mean standard errors, same shape.

    """

    j: int
    values: np.ndarray
    errors: np.ndarray


def _batch_rho(grid: EstimatorGrid) -> np.ndarray:
    norm = grid.measurements[:, None] * grid.cell_volume**grid.j * grid.mu**grid.j
    with np.errstate(invalid="ignore", divide="ignore"):
        return grid.counts / norm


def estimate_rho(grid: EstimatorGrid) -> GridEstimate:
    """``rho_j / mu^j`` per bin with batch-mean errors; empty bins are NaN."""
    per_batch = _batch_rho(grid)
    used = grid.measurements > 0
    per_batch = per_batch[used]
    total = grid.counts[used].sum(axis=0)
    shape = (grid.n_cells,) * grid.j
    values = per_batch.mean(axis=0)
    errors = per_batch.std(axis=0, ddof=1) / math.sqrt(per_batch.shape[0]) if per_batch.shape[0] > 1 else 0 * values
    values = np.where(total > 0, values, np.nan)
    errors = np.where(total > 0, errors, np.nan)
    return GridEstimate(grid.j, values.reshape(shape), errors.reshape(shape))


def estimate_truncated(grids: dict[int, EstimatorGrid], j: int) -> GridEstimate:
    """``rho^T_j / mu^j`` per bin tuple from the grids of orders ``1..j`` of one run.

    The moment tables of every subset are assembled per batch and pushed
    through the cumulant recursion; errors come from the batch spread.

    Raises:
        ConfigError: If a grid of some order ``<= j`` is missing.

    """
    missing = [k for k in range(1, j + 1) if k not in grids]
    if missing:
        msg = f"estimate_truncated needs grids for orders {missing}"
        raise ConfigError(msg)
    cells = grids[1].n_cells
    shape = (cells,) * j
    idx = np.indices(shape)
    used = grids[j].measurements > 0
    moments_total = np.zeros((1 << j, *shape))
    moments_batch = np.zeros((1 << j, int(used.sum()), *shape))
    for mask in range(1, 1 << j):
        members = [i for i in range(j) if mask >> i & 1]
        k = len(members)
        grid = grids[k]
        est = estimate_rho(grid).values
        batches = _batch_rho(grid)[used].reshape(-1, *(cells,) * k)
        sel = tuple(idx[i] for i in members)
        moments_total[mask] = est[sel]
        moments_batch[mask] = batches[(slice(None), *sel)]
    values = truncate_values(moments_total)[-1]
    per_batch = truncate_values(moments_batch)[-1]
    n_b = per_batch.shape[0]
    errors = per_batch.std(axis=0, ddof=1) / math.sqrt(n_b) if n_b > 1 else np.zeros(shape)
    return GridEstimate(j, values, np.where(np.isnan(values), np.nan, errors))


@dataclass
class GCMCResult:
    """Output of one or more merged chains.

    Attributes:
        grids (dict[int, EstimatorGrid]): Estimator grids keyed by order.
        number_histogram (np.ndarray): Occupancy counts of the particle number.
        acceptance (dict[str, float]): Acceptance rate per move type.
        sweeps (int): Sweeps per chain.
        energy_drift (float): Largest relative energy-cache drift observed.

    """

    grids: dict[int, EstimatorGrid]
    number_histogram: np.ndarray
    acceptance: dict[str, float]
    sweeps: int
    energy_drift: float = 0.0

    @property
    def mean_number(self) -> float:
        """Mean particle number."""
        n = np.arange(self.number_histogram.size)
        return float((n * self.number_histogram).sum() / self.number_histogram.sum())

    @property
    def number_variance(self) -> float:
        """Variance of the particle number."""
        n = np.arange(self.number_histogram.size)
        mean = self.mean_number
        return float((((n - mean) ** 2) * self.number_histogram).sum() / self.number_histogram.sum())


class GrandCanonicalSampler:
    """Metropolis chain with insert, delete and translate moves.

    The cached energy is the unscaled-by-``beta`` sum of
    ``phi(|x_a - x_b| / eps)`` over all pairs.
    """

    def __init__(
        self,
        model: MCSModel,
        seed: int | np.random.SeedSequence = 0,
        n_particles_max: int | None = None,
    ) -> None:
        """Initialize an empty chain.

        Args:
            model (MCSModel): The target state.
            seed (int | np.random.SeedSequence): Seed of the chain's stream.
            n_particles_max (int | None): Optional cap on the particle number;
                insertions beyond it are rejected, which samples the state
                restricted to at most this many particles.

        """
        self.model = model
        self.rng = np.random.default_rng(seed)
        self.n_particles_max = n_particles_max
        self.positions = np.zeros((0, model.dim))
        self.velocities = np.zeros((0, model.dim))
        self.energy = 0.0
        self.cells = CellList(model.box, model.support_radius)
        self.sweeps_done = 0
        self.attempted = dict.fromkeys(("insert", "delete", "translate"), 0)
        self.accepted = dict.fromkeys(("insert", "delete", "translate"), 0)
        self._window = [0, 0]
        self._warned = False

    @property
    def n(self) -> int:
        """Current particle number."""
        return int(self.positions.shape[0])

    def pair_energy(self, x: np.ndarray, exclude: int | None = None) -> float:
        """Energy between a point and the particles near it, skipping ``exclude``.

        Returns ``inf`` on a hard-core overlap or an exact duplicate.
        """
        idx = [i for i in self.cells.neighbours(x) if i != exclude]
        if not idx:
            return 0.0
        r = np.linalg.norm(self.positions[idx] - x, axis=1)
        if np.any(r == 0.0):
            return math.inf
        e = np.asarray(self.model.potential.energy(r / self.model.params.eps))
        return math.inf if np.isinf(e).any() else math.fsum(e)

    def total_energy(self) -> float:
        """Energy recomputed from scratch."""
        if self.n < 2:  # noqa: PLR2004
            return 0.0
        e = np.asarray(self.model.potential.energy(pdist(self.positions) / self.model.params.eps))
        return math.inf if np.isinf(e).any() else math.fsum(e)

    def insertion_ratio(self, x: np.ndarray) -> float:
        """Acceptance ratio of inserting a particle at ``x``."""
        de = self.pair_energy(x)
        if math.isinf(de):
            return 0.0
        m = self.model
        rho = float(m.rho(x))
        return m.mu * rho * m.volume * math.exp(-m.params.beta * de) / (self.n + 1)

    def deletion_ratio(self, i: int) -> float:
        """Acceptance ratio of deleting particle ``i``."""
        m = self.model
        x = self.positions[i]
        de = self.pair_energy(x, exclude=i)
        rho = float(m.rho(x))
        return self.n * math.exp(m.params.beta * de) / (m.mu * rho * m.volume)

    def log_weight(self, positions: np.ndarray) -> float:
        """Log of ``mu^n / n! rho^{(x) n} psi_n`` for a position configuration."""
        m = self.model
        pts = np.asarray(positions, dtype=float).reshape(-1, m.dim)
        n = pts.shape[0]
        rho = m.rho(pts)
        if np.any(rho <= 0):
            return -math.inf
        energy = 0.0
        if n > 1:
            e = np.asarray(m.potential.energy(pdist(pts) / m.params.eps))
            if np.isinf(e).any():
                return -math.inf
            energy = math.fsum(e)
        return n * math.log(m.mu) - math.lgamma(n + 1) + math.fsum(np.log(rho)) - m.params.beta * energy

    def _insert(self, x: np.ndarray, v: np.ndarray, de: float) -> None:
        i = self.n
        self.positions = np.vstack([self.positions, x])
        self.velocities = np.vstack([self.velocities, v])
        self.cells.add(i, x)
        self.energy += de

    def _delete(self, i: int, de: float) -> None:
        last = self.n - 1
        self.cells.remove(i, self.positions[i])
        if i != last:
            self.cells.remove(last, self.positions[last])
            self.positions[i] = self.positions[last]
            self.velocities[i] = self.velocities[last]
            self.cells.add(i, self.positions[i])
        self.positions = self.positions[:last]
        self.velocities = self.velocities[:last]
        self.energy -= de

    def step(self) -> bool:
        """Attempt one move; return whether it was accepted."""
        m = self.model
        u = self.rng.uniform()
        p_ins, p_del, _ = MOVE_PROBABILITIES
        if u < p_ins:
            kind = "insert"
            x = self.rng.uniform(0.0, 1.0, size=m.dim) * np.asarray(m.box)
            v = m.sample_velocities(self.rng, ())
            at_cap = self.n_particles_max is not None and self.n >= self.n_particles_max
            ratio = 0.0 if at_cap else self.insertion_ratio(x)
            accept = ratio > 0 and self.rng.uniform() < ratio
            if accept:
                self._insert(x, v, self.pair_energy(x))
        elif u < p_ins + p_del:
            kind = "delete"
            if self.n == 0:
                accept = False
            else:
                i = int(self.rng.integers(self.n))
                ratio = self.deletion_ratio(i)
                accept = self.rng.uniform() < ratio
                if accept:
                    self._delete(i, self.pair_energy(self.positions[i], exclude=i))
        else:
            kind = "translate"
            if self.n == 0:
                accept = False
            else:
                i = int(self.rng.integers(self.n))
                old = self.positions[i].copy()
                step = STEP_FRACTION * m.params.eps
                new = old + self.rng.uniform(-step, step, size=m.dim)
                rho_new = float(m.rho(new))
                accept = False
                if rho_new > 0:
                    e_old = self.pair_energy(old, exclude=i)
                    e_new = self.pair_energy(new, exclude=i)
                    if not math.isinf(e_new):
                        ratio = rho_new / float(m.rho(old)) * math.exp(-m.params.beta * (e_new - e_old))
                        accept = self.rng.uniform() < ratio
                        if accept:
                            self.cells.remove(i, old)
                            self.positions[i] = new
                            self.cells.add(i, new)
                            self.energy += e_new - e_old
        self.attempted[kind] += 1
        self.accepted[kind] += int(accept)
        self._track_acceptance(accept)
        return accept

    def _track_acceptance(self, accept: bool) -> None:  # noqa: FBT001
        self._window[0] += 1
        self._window[1] += int(accept)
        if self._window[0] >= ACCEPTANCE_WINDOW:
            rate = self._window[1] / self._window[0]
            if rate < MIN_ACCEPTANCE and not self._warned:
                logger.warning("GCMC acceptance %.2g%% over %d moves; eps too large for the box?", 100 * rate, self._window[0])
                self._warned = True
            self._window = [0, 0]

    def sweep(self) -> None:
        """``max(1, n)`` moves."""
        for _ in range(max(1, self.n)):
            self.step()
        self.sweeps_done += 1

    def energy_drift(self) -> float:
        """Relative difference between the cached and the recomputed energy."""
        exact = self.total_energy()
        return abs(self.energy - exact) / max(1.0, abs(exact))

    def acceptance(self) -> dict[str, float]:
        """Acceptance rate per move type."""
        return {k: self.accepted[k] / self.attempted[k] if self.attempted[k] else 0.0 for k in self.attempted}

    def run(self, sweeps: int, j_max: int = 2, bins: int = 8) -> GCMCResult:
        """Burn in, then measure after every sweep.

        Args:
            sweeps (int): Total sweeps including burn-in.
            j_max (int): Highest tuple order to record.
            bins (int): Bins per axis.

        Returns:
            GCMCResult: Grids for orders ``1..j_max`` and number statistics.

        """
        m = self.model
        grids = {k: EstimatorGrid(k, bins, m.box, m.mu) for k in range(1, j_max + 1)}
        burn = int(BURN_IN_FRACTION * sweeps)
        production = max(1, sweeps - burn)
        hist = np.zeros(1)
        for s in range(sweeps):
            self.sweep()
            if s < burn:
                continue
            batch = min(N_BATCHES - 1, (s - burn) * N_BATCHES // production)
            for grid in grids.values():
                grid.record(self.positions, batch)
            if self.n >= hist.size:
                hist = np.pad(hist, (0, self.n + 1 - hist.size))
            hist[self.n] += 1
        drift = self.energy_drift()
        logger.info(
            "GCMC %d sweeps: <n>=%.4g, acceptance %s, energy drift %.2g",
            sweeps,
            float((np.arange(hist.size) * hist).sum() / max(hist.sum(), 1)),
            {k: round(v, 4) for k, v in self.acceptance().items()},
            drift,
        )
        return GCMCResult(grids, hist, self.acceptance(), sweeps, drift)


def _chain_task(  # noqa: PLR0913
    model: MCSModel,
    sweeps: int,
    seed: np.random.SeedSequence,
    j_max: int,
    bins: int,
    n_particles_max: int | None,
) -> GCMCResult:
    return GrandCanonicalSampler(model, seed, n_particles_max).run(sweeps, j_max, bins)


def gcmc_run(  # noqa: PLR0913
    model: MCSModel,
    sweeps: int,
    seed: int,
    j_max: int = 2,
    bins: int = 8,
    chains: int = 1,
    workers: int | None = None,
    n_particles_max: int | None = None,
) -> GCMCResult:
    """Run ``chains`` independent chains and merge their estimators.

    Each chain uses its own ``SeedSequence`` child; with a fixed seed the
    merged result is identical regardless of ``workers``.
    """
    children = np.random.SeedSequence(seed).spawn(chains)
    n_workers = max(1, min(workers or os.cpu_count() or 1, chains))
    if n_workers == 1:
        results = [_chain_task(model, sweeps, c, j_max, bins, n_particles_max) for c in children]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = [pool.submit(_chain_task, model, sweeps, c, j_max, bins, n_particles_max) for c in children]
            results = [f.result() for f in futures]
    size = max(r.number_histogram.size for r in results)
    hist = np.sum([np.pad(r.number_histogram, (0, size - r.number_histogram.size)) for r in results], axis=0)
    grids = {k: merge_grids([r.grids[k] for r in results]) for k in results[0].grids}
    acceptance = {k: float(np.mean([r.acceptance[k] for r in results])) for k in results[0].acceptance}
    drift = max(r.energy_drift for r in results)
    return GCMCResult(grids, hist, acceptance, sweeps, drift)


def save_checkpoint(sampler: GrandCanonicalSampler, path: Path) -> None:
    """Write the chain state, RNG cursor and sweep count as JSON."""
    payload = {
        "version": CHECKPOINT_VERSION,
        "positions": sampler.positions.tolist(),
        "velocities": sampler.velocities.tolist(),
        "energy": sampler.energy,
        "sweeps_done": sampler.sweeps_done,
        "n_particles_max": sampler.n_particles_max,
        "rng": sampler.rng.bit_generator.state,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_checkpoint(model: MCSModel, path: Path) -> GrandCanonicalSampler:
    """Restore a sampler written by :func:`save_checkpoint`.

    Raises:
        ConfigError: If the file is unreadable or has another version.

    """
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        msg = f"cannot read checkpoint {path}: {e}"
        raise ConfigError(msg) from e
    if payload.get("version") != CHECKPOINT_VERSION:
        msg = f"checkpoint version {payload.get('version')} != {CHECKPOINT_VERSION}"
        raise ConfigError(msg)
    sampler = GrandCanonicalSampler(model, 0, payload["n_particles_max"])
    sampler.rng.bit_generator.state = payload["rng"]
    pts = np.asarray(payload["positions"], dtype=float).reshape(-1, model.dim)
    sampler.positions = pts
    sampler.velocities = np.asarray(payload["velocities"], dtype=float).reshape(-1, model.dim)
    for i, x in enumerate(pts):
        sampler.cells.add(i, x)
    sampler.energy = float(payload["energy"])
    sampler.sweeps_done = int(payload["sweeps_done"])
    return sampler


def write_number_histogram(path: Path, histogram: np.ndarray) -> None:
    """CSV with columns ``n,count``."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "count"])
        writer.writerows([n, int(c)] for n, c in enumerate(histogram))


def write_grid_estimate(path: Path, estimate: GridEstimate, grid: EstimatorGrid) -> None:
    """CSV with one row per bin tuple: bin centres, value and error."""
    centres = grid.centres()
    dim = centres.shape[1]
    header = [f"x{a}_{c}" for a in range(1, estimate.j + 1) for c in range(dim)]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*header, "value", "error"])
        for cell in itertools.product(range(grid.n_cells), repeat=estimate.j):
            coords = [f"{v:.10g}" for c in cell for v in centres[c]]
            value = estimate.values[cell]
            error = estimate.errors[cell]
            writer.writerow([*coords, f"{value:.10g}", f"{error:.10g}"])


class QuadratureIntegrator:
    """Tensor midpoint rule over ``[0, L]^n`` in one dimension.

    The error estimate is the difference to the rule at half resolution.
    Satisfies :class:`chaoscluster.cumulants.Integrator`.
    """

    dim = 1
    samples = 0

    def __init__(self, length: float, resolution: int = 48, chunk: int = 1 << 18) -> None:
        """Initialize the rule.

        Args:
            length (float): Interval length ``L``.
            resolution (int): Nodes per axis (even).
            chunk (int): Nodes evaluated per vectorized call.

        """
        self.length = float(length)
        self.resolution = resolution + resolution % 2
        self.chunk = chunk

    def _rule(self, integrand: Callable[[np.ndarray], np.ndarray], n: int, res: int) -> float:
        h = self.length / res
        nodes = (np.arange(res) + 0.5) * h
        total = []
        count = res**n
        for start in range(0, count, self.chunk):
            flat = np.arange(start, min(start + self.chunk, count))
            idx = np.stack(np.unravel_index(flat, (res,) * n), axis=-1)
            pts = nodes[idx][:, :, None]
            total.append(float(np.asarray(integrand(pts)).sum()))
        return math.fsum(total) * h**n

    def __call__(self, integrand: Callable[[np.ndarray], np.ndarray], n: int) -> tuple[float, float]:
        """Integrate over ``[0, L]^n``."""
        fine = self._rule(integrand, n, self.resolution)
        coarse = self._rule(integrand, n, self.resolution // 2)
        return fine, abs(fine - coarse)


@dataclass(frozen=True)
class TinyOracle:
    """Exact finite-system correlations in one dimension.

    Attributes:
        model (MCSModel): The state.
        n_particles_max (int): Particle cap ``N_max``.
        partition (float): ``Z`` truncated at ``N_max``.
        partition_error (float): Quadrature error of ``Z``.
        integrator (QuadratureIntegrator): Rule used for every integral.

    """

    model: MCSModel
    n_particles_max: int
    partition: float
    partition_error: float
    integrator: QuadratureIntegrator

    def densities(self) -> list[Callable[[np.ndarray], np.ndarray]]:
        """``W_m`` for ``m <= N_max``."""
        return state_densities(self.model, self.n_particles_max, self.partition)

    def rho_scaled(self, anchors: np.ndarray) -> SeriesEstimate:
        """``rho_j / mu^j`` at ``anchors`` (shape ``(j, 1)``)."""
        pts = np.asarray(anchors, dtype=float).reshape(-1, 1)
        j = pts.shape[0]
        est = rho_from_w(self.densities(), pts, max(0, self.n_particles_max - j), self.integrator)
        scale = self.model.mu**j
        return SeriesEstimate.from_terms(
            [t / scale for t in est.terms],
            [e / scale for e in est.term_errors],
            0,
        )

    def truncated_scaled(self, x1: float, x2: float) -> tuple[float, float]:
        """``rho^T_2 / mu^2`` at ``(x1, x2)`` with a linearly propagated error."""
        r1 = self.rho_scaled(np.array([[x1]]))
        r2 = self.rho_scaled(np.array([[x2]]))
        r12 = self.rho_scaled(np.array([[x1], [x2]]))
        values = np.array([0.0, r1.value, r2.value, r12.value])
        value = float(truncate_values(values)[-1])
        err = math.sqrt(r12.stat_error**2 + (r1.value * r2.stat_error) ** 2 + (r2.value * r1.stat_error) ** 2)
        return value, err


def exact_tiny_oracle(model: MCSModel, n_particles_max: int, quadrature_res: int = 48) -> TinyOracle:
    """Build the exact oracle for a one-dimensional system of at most ``N_max`` particles.

    Raises:
        RegimeError: If ``d != 1`` or the box exceeds ``4 eps``.
        GuardError: If ``N_max > 4``.

    """
    if model.dim != 1:
        msg = f"the tiny-system oracle is one-dimensional, got d={model.dim}"
        raise RegimeError(msg)
    if model.box[0] > MAX_ORACLE_BOX * model.params.eps * (1 + 1e-12):
        msg = f"oracle box {model.box[0]} exceeds {MAX_ORACLE_BOX} eps"
        raise RegimeError(msg)
    if not 1 <= n_particles_max <= MAX_ORACLE_PARTICLES:
        msg = f"oracle limited to 1 <= N_max <= {MAX_ORACLE_PARTICLES}, got {n_particles_max}"
        raise GuardError(msg)
    integrator = QuadratureIntegrator(model.box[0], quadrature_res)
    unnormalized = state_densities(model, n_particles_max, 1.0)
    terms = [1.0]
    errors = [0.0]
    for m in range(1, n_particles_max + 1):
        value, err = integrator(unnormalized[m], m)
        coeff = 1.0 / math.factorial(m)
        terms.append(coeff * value)
        errors.append(coeff * err)
    z = math.fsum(terms)
    z_err = math.fsum(errors)
    logger.debug("tiny oracle Z=%.10g +- %.2g (N_max=%d)", z, z_err, n_particles_max)
    return TinyOracle(model, n_particles_max, z, z_err, integrator)
