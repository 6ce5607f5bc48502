"""Radial pair potentials, Mayer functions and Boltzmann factors.

This module provides :class:`PairPotential` together with the rescaled Mayer
function ``zeta^eps(x, y) = exp(-beta phi((x - y) / eps)) - 1``, the Boltzmann
factors ``psi^eps_n`` and the two structural constants of a potential: the
stability constant ``B`` (declared by the user, falsified by random search)
and the decay integral ``C_beta``.

Hard cores are represented by ``+inf`` energies. Every routine short-circuits
them (``zeta -> -1``, ``psi -> 0``) instead of evaluating ``exp(-inf)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from scipy import integrate, special
from scipy.spatial.distance import pdist, squareform

from .exceptions import ConfigError, QuadratureError

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping

    from .types import ModelParams

logger = logging.getLogger(__name__)

HARD_SPHERE = "hard-sphere"
SQUARE_WELL = "square-well"
TABULATED = "tabulated"
IDEAL = "ideal"
KINDS = (HARD_SPHERE, SQUARE_WELL, TABULATED, IDEAL)
"""Supported potential kinds (tuple[str, ...])."""

C_BETA_RTOL = 1e-6
"""Relative error bound required from the ``C_beta`` quadrature (float)."""


@dataclass(frozen=True)
class PairPotential:
    """Radial pair interaction with finite range.

    Attributes:
        kind (str): One of :data:`KINDS`.
        interaction_range (float): ``phi(r) = 0`` for ``r >= interaction_range``.
        declared_B (float): Stability constant supplied by the user.
        r0 (float): Hard-core radius (``phi = +inf`` for ``r < r0``).
        well_width (float): Width of the attractive well (square well only).
        depth (float): Well depth ``u > 0``; the well value is ``-u``.
        grid (tuple[float, ...]): Radii of a tabulated potential, ascending.
        values (tuple[float, ...]): Tabulated energies on ``grid``.

    """

    kind: str
    interaction_range: float
    declared_B: float = 0.0  # noqa: N815
    r0: float = 0.0
    well_width: float = 0.0
    depth: float = 0.0
    grid: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self) -> None:  # noqa: C901
        """Check the invariants of each potential kind."""
        if self.kind not in KINDS:
            msg = f"Unknown potential kind {self.kind!r}; expected one of {KINDS}"
            raise ValueError(msg)
        if not math.isfinite(self.interaction_range) or self.interaction_range <= 0:
            msg = f"interaction_range must be positive and finite, got {self.interaction_range}"
            raise ValueError(msg)
        if self.declared_B < 0:
            msg = f"declared_B must be nonnegative, got {self.declared_B}"
            raise ValueError(msg)
        if self.kind in (HARD_SPHERE, IDEAL) and self.declared_B != 0:
            msg = f"{self.kind} potentials are nonnegative and must declare B = 0"
            raise ValueError(msg)
        if self.kind == SQUARE_WELL and self.depth <= 0:
            msg = f"square-well depth must be positive, got {self.depth}"
            raise ValueError(msg)
        if self.kind == TABULATED:
            grid = np.asarray(self.grid, dtype=float)
            vals = np.asarray(self.values, dtype=float)
            if grid.size < 2 or grid.shape != vals.shape:
                msg = "tabulated potentials need at least two (radius, value) samples"
                raise ValueError(msg)
            if np.any(np.diff(grid) <= 0):
                msg = "tabulated radii must be strictly ascending"
                raise ValueError(msg)
            if not np.all(np.isfinite(vals)):
                msg = "tabulated values must be finite; use r0 for a hard core"
                raise ValueError(msg)
            if vals.min() >= 0 and self.declared_B != 0:
                msg = "nonnegative tabulated potentials must declare B = 0"
                raise ValueError(msg)

    @classmethod
    def hard_sphere(cls, r0: float = 0.5) -> PairPotential:
        """Hard core of radius ``r0``; the range equals the core."""
        return cls(kind=HARD_SPHERE, interaction_range=r0, r0=r0)

    @classmethod
    def square_well(
        cls,
        r0: float,
        well_width: float,
        depth: float,
        declared_B: float,  # noqa: N803
    ) -> PairPotential:
        """Hard core ``r0`` followed by a well ``-depth`` up to ``r0 + well_width``."""
        return cls(
            kind=SQUARE_WELL,
            interaction_range=r0 + well_width,
            declared_B=declared_B,
            r0=r0,
            well_width=well_width,
            depth=depth,
        )

    @classmethod
    def tabulated(
        cls,
        grid: Iterable[float],
        values: Iterable[float],
        interaction_range: float,
        declared_B: float = 0.0,  # noqa: N803
        r0: float = 0.0,
    ) -> PairPotential:
        """Linearly interpolated potential, clamped beyond its grid."""
        return cls(
            kind=TABULATED,
            interaction_range=interaction_range,
            declared_B=declared_B,
            r0=r0,
            grid=tuple(float(g) for g in grid),
            values=tuple(float(v) for v in values),
        )

    @classmethod
    def ideal(cls, interaction_range: float = 0.5) -> PairPotential:
        """The zero potential."""
        return cls(kind=IDEAL, interaction_range=interaction_range)

    @property
    def min_energy(self) -> float:
        """Lower bound of ``phi`` (``-B_2`` in the Mayer-function range)."""
        if self.kind == SQUARE_WELL:
            return -self.depth
        if self.kind == TABULATED:
            return min(0.0, min(self.values))
        return 0.0

    def breakpoints(self) -> list[float]:
        """Radii in ``[0, range]`` where ``phi`` may be discontinuous or kinked."""
        pts = {0.0, self.interaction_range}
        if 0 < self.r0 < self.interaction_range:
            pts.add(self.r0)
        if self.kind == TABULATED:
            pts.update(g for g in self.grid if 0 < g < self.interaction_range)
        return sorted(pts)

    def energy(self, r: np.ndarray | float) -> np.ndarray | float:
        """Evaluate ``phi`` at radius ``r`` (vectorized).

        Args:
            r (np.ndarray | float): Nonnegative radii in unscaled units.

        Returns:
            np.ndarray | float: Energies, ``+inf`` inside a hard core and ``0``
                at or beyond the interaction range.

        """
        radii = np.asarray(r, dtype=float)
        out = np.zeros_like(radii)
        inside = radii < self.interaction_range
        if self.kind == SQUARE_WELL:
            out = np.where(inside & (radii >= self.r0), -self.depth, out)
        elif self.kind == TABULATED:
            interp = np.interp(radii, self.grid, self.values)
            out = np.where(inside, interp, out)
        if self.r0 > 0:
            out = np.where(radii < self.r0, np.inf, out)
        if np.ndim(r) == 0:
            return float(out)
        return out


@dataclass(frozen=True)
class StabilityVerdict:
    """Outcome of a randomized stability falsification.

    Attributes:
        passed (bool): True when no configuration violated the bound.
        counterexample (np.ndarray | None): First violating configuration.
        energy (float): Energy of the counterexample (nan when passed).
        bound (float): ``-B * n`` for the counterexample (nan when passed).

    """

    passed: bool
    counterexample: np.ndarray | None = None
    energy: float = math.nan
    bound: float = math.nan


def evaluate(p: PairPotential, r: float) -> float:
    """Return ``phi(r)`` for a single radius."""
    if r < 0:
        msg = f"radius must be nonnegative, got {r}"
        raise ValueError(msg)
    return float(p.energy(r))


def _zeta_from_energy(energies: np.ndarray, beta: float) -> np.ndarray:
    with np.errstate(invalid="ignore", over="ignore"):
        return np.where(np.isinf(energies), -1.0, np.expm1(-beta * energies))


def mayer_zeta(p: PairPotential, m: ModelParams, xi: np.ndarray, xk: np.ndarray) -> float:
    """Rescaled Mayer function ``exp(-beta phi((xi - xk) / eps)) - 1``.

    Args:
        p (PairPotential): Pair potential.
        m (ModelParams): Scale parameters.
        xi (np.ndarray): First point in ``R^d``.
        xk (np.ndarray): Second point in ``R^d``.

    Returns:
        float: Value in ``[-1, exp(-beta min phi) - 1]``; exactly 0 when the
            separation is at least ``eps * range``.

    """
    r = float(np.linalg.norm(np.asarray(xi, dtype=float) - np.asarray(xk, dtype=float)))
    return float(_zeta_from_energy(np.asarray(p.energy(r / m.eps)), m.beta))


def energy_matrix(p: PairPotential, m: ModelParams, xs: np.ndarray) -> np.ndarray:
    """Pairwise rescaled energies ``phi(|x_a - x_b| / eps)`` with a zero diagonal."""
    pts = np.atleast_2d(np.asarray(xs, dtype=float))
    if pts.shape[0] < 2:
        return np.zeros((pts.shape[0], pts.shape[0]))
    e = squareform(p.energy(pdist(pts) / m.eps))
    np.fill_diagonal(e, 0.0)
    return e


def zeta_matrix(p: PairPotential, m: ModelParams, xs: np.ndarray) -> np.ndarray:
    """Symmetric matrix of ``zeta^eps`` over all pairs of ``xs`` (diagonal 0)."""
    pts = np.atleast_2d(np.asarray(xs, dtype=float))
    if pts.shape[0] < 2:
        return np.zeros((pts.shape[0], pts.shape[0]))
    z = squareform(_zeta_from_energy(np.asarray(p.energy(pdist(pts) / m.eps)), m.beta))
    np.fill_diagonal(z, 0.0)
    return z


def boltzmann_psi(p: PairPotential, m: ModelParams, xs: np.ndarray) -> float:
    """Boltzmann factor ``psi^eps_n`` of a configuration.

    Returns:
        float: ``prod_{a<b} exp(-beta phi((x_a - x_b)/eps))``; 1 for fewer than two
            points and exactly 0 as soon as two points overlap a hard core.

    """
    pts = np.atleast_2d(np.asarray(xs, dtype=float)) if len(xs) else np.zeros((0, m.dim))
    if pts.shape[0] < 2:
        return 1.0
    energies = np.asarray(p.energy(pdist(pts) / m.eps))
    if np.isinf(energies).any():
        return 0.0
    return math.exp(-m.beta * math.fsum(energies))


def _shell_area(dim: int) -> float:
    """Surface area of the unit sphere in ``R^dim`` (2 for dim = 1)."""
    return 2.0 * math.pi ** (dim / 2) / special.gamma(dim / 2)


def _radial_abs_zeta(p: PairPotential, beta: float, dim: int, scale: float) -> tuple[float, float]:
    """Integrate ``|zeta(x / scale)|`` over ``R^dim`` by radial reduction."""

    def integrand(r: float) -> float:
        e = p.energy(r / scale)
        z = 1.0 if math.isinf(e) else abs(math.expm1(-beta * e))
        return z * r ** (dim - 1)

    edges = [scale * b for b in p.breakpoints()]
    total = []
    errors = []
    for lo, hi in zip(edges[:-1], edges[1:], strict=True):
        val, err = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-11, limit=200)
        total.append(val)
        errors.append(err)
    shell = _shell_area(dim)
    return shell * math.fsum(total), shell * math.fsum(errors)


def c_beta(p: PairPotential, beta: float, dim: int) -> float:
    """Decay constant ``C_beta = int |exp(-beta phi(x)) - 1| dx`` over ``R^dim``.

    The radial integrand is split at every breakpoint of ``phi`` and each
    piece is integrated adaptively.

    Raises:
        QuadratureError: If the estimated relative error exceeds :data:`C_BETA_RTOL`.

    """
    value, err = _radial_abs_zeta(p, beta, dim, 1.0)
    logger.debug("C_beta(%s, beta=%g, d=%d) = %.12g +- %.2g", p.kind, beta, dim, value, err)
    if value > 0 and err > C_BETA_RTOL * value:
        msg = f"C_beta quadrature reached only relative error {err / value:.3g}"
        raise QuadratureError(msg)
    return value


def scaled_zeta_norm(p: PairPotential, m: ModelParams) -> float:
    """Integrate ``|zeta^eps(x, 0)|`` directly in unscaled coordinates.

    Equals ``eps^d * C_beta``; kept separate so the scaling identity can be
    checked against an independent quadrature.
    """
    value, err = _radial_abs_zeta(p, m.beta, m.dim, m.eps)
    if value > 0 and err > C_BETA_RTOL * value:
        msg = f"scaled zeta quadrature reached only relative error {err / value:.3g}"
        raise QuadratureError(msg)
    return value


def configuration_energy(p: PairPotential, xs: np.ndarray) -> float:
    """Unscaled energy ``sum_{i<k} phi(x_i - x_k)``."""
    pts = np.atleast_2d(np.asarray(xs, dtype=float))
    if pts.shape[0] < 2:
        return 0.0
    energies = np.asarray(p.energy(pdist(pts)))
    if np.isinf(energies).any():
        return math.inf
    return math.fsum(energies)


def check_stability(p: PairPotential, configs: Iterable[np.ndarray]) -> StabilityVerdict:
    """Search ``configs`` for a violation of ``U(x_1..x_n) >= -B n``.

    This is falsification, not proof: a pass only says no counterexample
    was among the supplied configurations.
    """
    for xs in configs:
        pts = np.atleast_2d(np.asarray(xs, dtype=float))
        energy = configuration_energy(p, pts)
        bound = -p.declared_B * pts.shape[0]
        if energy < bound:
            logger.info("stability counterexample: n=%d, U=%g < %g", pts.shape[0], energy, bound)
            return StabilityVerdict(passed=False, counterexample=pts, energy=energy, bound=bound)
    return StabilityVerdict(passed=True)


def random_configurations(
    p: PairPotential,
    n_configs: int,
    n_points: int,
    dim: int,
    rng: np.random.Generator,
) -> list[np.ndarray]:
    """Draw dense random configurations for stability falsification.

    Points are uniform in a cube whose side scales like ``range * n^(1/d)``,
    so most pairs sit inside the interaction range.
    """
    side = p.interaction_range * max(1.0, n_points ** (1.0 / dim))
    return [rng.uniform(0.0, side, size=(n_points, dim)) for _ in range(n_configs)]


def load_potential(block: Mapping[str, str], base_dir: Path | None = None) -> PairPotential:
    """Build a potential from a key-value block.

    Recognised keys are ``kind``, ``r0``, ``well_width``, ``depth``, ``B``
    (or ``b``), ``range`` and ``table_path``. ``table_path`` points to a
    two-column text file (radius, value) in ascending radius order.

    Raises:
        ConfigError: If a key is missing, malformed or the table is unreadable.

    """
    kind = block.get("kind", "").strip().lower()

    def num(key: str, default: float | None = None) -> float:
        raw = block.get(key, block.get(key.lower()))
        if raw is None or raw == "":
            if default is None:
                msg = f"potential kind {kind!r} requires key {key!r}"
                raise ConfigError(msg)
            return default
        try:
            return float(raw)
        except ValueError as e:
            msg = f"potential key {key!r} is not a number: {raw!r}"
            raise ConfigError(msg) from e

    declared_b = num("B", 0.0) if "B" in block else num("b", 0.0)
    try:
        if kind == HARD_SPHERE:
            return PairPotential.hard_sphere(num("r0", 0.5))
        if kind == SQUARE_WELL:
            return PairPotential.square_well(num("r0"), num("well_width"), num("depth"), declared_b)
        if kind == IDEAL:
            return PairPotential.ideal(num("range", 0.5))
        if kind == TABULATED:
            path = Path(block.get("table_path", ""))
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            if not path.is_file():
                msg = f"table_path {str(path)!r} does not exist"
                raise ConfigError(msg)
            table = np.loadtxt(path, ndmin=2)
            return PairPotential.tabulated(
                table[:, 0], table[:, 1], num("range"), declared_b, num("r0", 0.0)
            )
    except ValueError as e:
        raise ConfigError(str(e)) from e
    msg = f"Unknown potential kind {kind!r}; expected one of {KINDS}"
    raise ConfigError(msg)


def zeta_tensor(p: PairPotential, m: ModelParams, batch: np.ndarray) -> np.ndarray:
    """Mayer matrices of a batch of configurations.

    Args:
        p (PairPotential): Pair potential.
        m (ModelParams): Scale parameters.
        batch (np.ndarray): Positions, shape ``(N, k, d)``.

    Returns:
        np.ndarray: Shape ``(N, k, k)``, symmetric with zero diagonals.

    """
    pts = np.asarray(batch, dtype=float)
    r = np.linalg.norm(pts[:, :, None, :] - pts[:, None, :, :], axis=-1)
    z = _zeta_from_energy(np.asarray(p.energy(r / m.eps)), m.beta)
    idx = np.arange(pts.shape[1])
    z[:, idx, idx] = 0.0
    return z


def boltzmann_psi_batch(p: PairPotential, m: ModelParams, batch: np.ndarray) -> np.ndarray:
    """``psi^eps_k`` for each configuration of a ``(N, k, d)`` batch."""
    pts = np.asarray(batch, dtype=float)
    n, k = pts.shape[0], pts.shape[1]
    if k < 2:  # noqa: PLR2004
        return np.ones(n)
    a, b = np.triu_indices(k, 1)
    r = np.linalg.norm(pts[:, a, :] - pts[:, b, :], axis=-1)
    energies = np.asarray(p.energy(r / m.eps))
    return np.exp(-m.beta * energies.sum(axis=1))


def ball_volume(dim: int, radius: float) -> float:
    """Volume of a ``dim``-ball (length ``2 radius`` for ``dim = 1``)."""
    return math.pi ** (dim / 2) / special.gamma(dim / 2 + 1) * radius**dim
