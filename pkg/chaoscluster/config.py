"""Key-value experiment configuration.

Config files use ``KEY=value`` lines with ``#`` comments and are parsed by
:func:`dotenv.dotenv_values`. Keys are case-insensitive. A resolved config
serializes back to the same text with :meth:`ExperimentConfig.to_text`.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from io import StringIO
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from dotenv import dotenv_values

from .exceptions import ConfigError
from .expansion import DENSITIES, UNIFORM, VELOCITIES, MCSModel
from .geometry import CONVENTIONS, EDGE
from .potential import load_potential
from .types import ModelParams, PhaseConfiguration

if TYPE_CHECKING:
    from .potential import PairPotential

logger = logging.getLogger(__name__)

POTENTIAL_KEYS = frozenset({"kind", "r0", "well_width", "depth", "b", "range", "table_path"})
MODEL_KEYS = frozenset(
    {"beta", "eps", "eps_sweep", "dim", "box", "density", "bump_center", "bump_width", "velocity"}
)
EXPERIMENT_KEYS = frozenset(
    {
        "j",
        "anchors",
        "separations",
        "n_max",
        "m_max",
        "samples",
        "seed",
        "sweeps",
        "k",
        "j_max",
        "trials",
        "bins",
        "n_particles_max",
        "quadrature_res",
        "workers",
        "length_convention",
    }
)
KNOWN_KEYS = POTENTIAL_KEYS | MODEL_KEYS | EXPERIMENT_KEYS
"""Every key accepted in a config file (frozenset[str])."""

DEFAULTS: dict[str, str] = {
    "kind": "ideal",
    "beta": "1.0",
    "eps": "0.1",
    "density": UNIFORM,
    "velocity": "none",
    "j": "2",
    "n_max": "4",
    "m_max": "4",
    "samples": "20000",
    "seed": "0",
    "sweeps": "10000",
    "k": "6",
    "j_max": "2",
    "trials": "0",
    "bins": "8",
    "quadrature_res": "48",
    "length_convention": EDGE,
}
"""Values used when a key is absent (dict[str, str])."""


def _floats(raw: str, key: str) -> list[float]:
    try:
        return [float(v) for v in raw.replace(" ", "").split(",") if v]
    except ValueError as e:
        msg = f"config key {key!r} must be a comma list of numbers, got {raw!r}"
        raise ConfigError(msg) from e


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment configuration.

    Attributes:
        values (dict[str, str]): Raw values keyed by lower-case key.
        base_dir (Path | None): Directory relative paths are resolved against.

    """

    values: dict[str, str] = field(default_factory=dict)
    base_dir: Path | None = None

    def __post_init__(self) -> None:
        """Normalise keys and reject unknown ones."""
        values = {str(k).strip().lower(): str(v).strip() for k, v in self.values.items() if v is not None}
        unknown = sorted(set(values) - KNOWN_KEYS)
        if unknown:
            msg = f"Unknown config keys: {', '.join(unknown)}"
            raise ConfigError(msg)
        object.__setattr__(self, "values", values)

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        """Parse a key-value config file.

        Raises:
            ConfigError: If the file does not exist or has unknown keys.

        """
        p = Path(path)
        if not p.is_file():
            msg = f"config file {str(p)!r} does not exist"
            raise ConfigError(msg)
        raw = dotenv_values(p)
        missing = sorted(k for k, v in raw.items() if v is None)
        if missing:
            msg = f"config keys without a value: {', '.join(missing)}"
            raise ConfigError(msg)
        logger.debug("loaded %d keys from %s", len(raw), p)
        return cls(dict(raw), p.parent)  # type: ignore[arg-type]

    @classmethod
    def from_text(cls, text: str, base_dir: Path | None = None) -> ExperimentConfig:
        """Parse config text (the inverse of :meth:`to_text`)."""
        return cls(dict(dotenv_values(stream=StringIO(text))), base_dir)  # type: ignore[arg-type]

    def with_overrides(self, **overrides: object) -> ExperimentConfig:
        """Copy with ``overrides`` applied; ``None`` values are ignored."""
        values = dict(self.values)
        values.update({k: str(v) for k, v in overrides.items() if v is not None})
        return dataclasses.replace(self, values=values)

    def to_text(self) -> str:
        """Sorted ``key=value`` lines."""
        return "".join(f"{k}={self.values[k]}\n" for k in sorted(self.values))

    def resolved(self) -> dict[str, str]:
        """Explicit values over defaults."""
        return {**DEFAULTS, **self.values}

    def get(self, key: str) -> str | None:
        """Raw value of ``key`` or its default."""
        return self.values.get(key, DEFAULTS.get(key))

    def get_float(self, key: str, default: float | None = None) -> float:
        """Value of ``key`` as a float.

        Raises:
            ConfigError: If the key is absent without a default or malformed.

        """
        raw = self.get(key)
        if raw is None or raw == "":
            if default is None:
                msg = f"config key {key!r} is required"
                raise ConfigError(msg)
            return default
        try:
            return float(raw)
        except ValueError as e:
            msg = f"config key {key!r} must be a number, got {raw!r}"
            raise ConfigError(msg) from e

    def get_int(self, key: str, default: int | None = None) -> int:
        """Value of ``key`` as an int."""
        value = self.get_float(key, None if default is None else float(default))
        if value != int(value):
            msg = f"config key {key!r} must be an integer, got {value}"
            raise ConfigError(msg)
        return int(value)

    def get_optional_int(self, key: str) -> int | None:
        """Value of ``key`` as an int, or None when absent."""
        return None if self.get(key) in (None, "") else self.get_int(key)

    def get_floats(self, key: str) -> list[float]:
        """Comma list of floats; empty when absent."""
        raw = self.get(key)
        return _floats(raw, key) if raw else []

    def get_choice(self, key: str, choices: tuple[str, ...]) -> str:
        """Value of ``key`` restricted to ``choices``."""
        value = (self.get(key) or "").lower()
        if value not in choices:
            msg = f"config key {key!r} must be one of {choices}, got {value!r}"
            raise ConfigError(msg)
        return value

    @property
    def dim(self) -> int:
        """Spatial dimension from ``dim`` or the length of ``box``."""
        box = self.get_floats("box")
        if self.get("dim"):
            return self.get_int("dim")
        return len(box) or 1

    @property
    def box(self) -> tuple[float, ...]:
        """Box side lengths; a single value is repeated over every axis."""
        box = self.get_floats("box") or [1.0]
        dim = self.dim
        if len(box) == 1:
            box = box * dim
        if len(box) != dim:
            msg = f"box has {len(box)} sides but dim={dim}"
            raise ConfigError(msg)
        return tuple(box)

    @property
    def eps_values(self) -> list[float]:
        """``eps_sweep`` when given, else the single ``eps``."""
        return self.get_floats("eps_sweep") or [self.get_float("eps")]

    @property
    def length_convention(self) -> str:
        """Connection convention for n0 bounds."""
        return self.get_choice("length_convention", CONVENTIONS)

    def potential(self) -> PairPotential:
        """Build the pair potential from the potential keys."""
        block = {k: v for k, v in self.resolved().items() if k in POTENTIAL_KEYS}
        return load_potential(block, self.base_dir)

    def model(self, eps: float | None = None) -> MCSModel:
        """Build the MCS model, optionally at another ``eps``.

        Raises:
            ConfigError: If a model key is malformed.

        """
        beta = self.get_float("beta")
        scale = self.get_float("eps") if eps is None else eps
        try:
            return MCSModel(
                potential=self.potential(),
                params=ModelParams(beta=beta, eps=scale, dim=self.dim),
                box=self.box,
                density=self.get_choice("density", DENSITIES),
                bump_center=tuple(self.get_floats("bump_center")),
                bump_width=self.get_float("bump_width", 1.0),
                velocity=self.get_choice("velocity", VELOCITIES),
            )
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def anchors(self, eps: float | None = None) -> list[PhaseConfiguration]:
        """Anchor configurations.

        ``anchors`` lists configurations separated by ``|``, points by ``;``
        and coordinates by ``,``. Without it, each value in ``separations``
        (in units of ``eps``) gives ``j`` collinear points with that spacing,
        centred in the box along the first axis.

        Raises:
            ConfigError: If neither key is present or a point has the wrong dimension.

        """
        dim = self.dim
        raw = self.get("anchors")
        if raw:
            configs = []
            for block in raw.split("|"):
                pts = [_floats(p, "anchors") for p in block.split(";") if p.strip()]
                if not pts or any(len(p) != dim for p in pts):
                    msg = f"anchor configuration {block!r} must list {dim}-d points"
                    raise ConfigError(msg)
                configs.append(PhaseConfiguration(np.asarray(pts)))
            return configs
        separations = self.get_floats("separations")
        if not separations:
            msg = "config needs 'anchors' or 'separations'"
            raise ConfigError(msg)
        e = self.get_float("eps") if eps is None else eps
        j = self.get_int("j")
        box = np.asarray(self.box)
        configs = []
        for s in separations:
            offsets = (np.arange(j) - (j - 1) / 2.0) * s * e
            pts = np.tile(box / 2.0, (j, 1))
            pts[:, 0] += offsets
            configs.append(PhaseConfiguration(pts))
        return configs
