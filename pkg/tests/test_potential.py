"""Tests for chaoscluster.potential module."""

from __future__ import annotations

import math

import numpy as np
import pytest

from chaoscluster.exceptions import ConfigError
from chaoscluster.potential import (
    PairPotential,
    ball_volume,
    boltzmann_psi,
    boltzmann_psi_batch,
    c_beta,
    check_stability,
    evaluate,
    load_potential,
    mayer_zeta,
    random_configurations,
    scaled_zeta_norm,
    zeta_matrix,
    zeta_tensor,
)
from chaoscluster.types import ModelParams


class TestPairPotential:
    """Test PairPotential construction and evaluation."""

    def test_hard_sphere_core(self, hard_sphere: PairPotential) -> None:
        """Test the hard core is infinite and the outside is zero."""
        assert math.isinf(evaluate(hard_sphere, 0.3))
        assert evaluate(hard_sphere, 0.7) == 0.0

    def test_square_well_values(self, square_well: PairPotential) -> None:
        """Test the well value between core and range."""
        assert evaluate(square_well, 0.75) == -1.0
        assert evaluate(square_well, 1.0) == 0.0
        assert square_well.min_energy == -1.0

    def test_tabulated_interpolates(self) -> None:
        """Test linear interpolation of a tabulated potential."""
        p = PairPotential.tabulated([0.0, 0.5, 1.0], [2.0, -1.0, 0.0], 1.0, declared_B=1.0)
        assert evaluate(p, 0.25) == pytest.approx(0.5)
        assert evaluate(p, 1.5) == 0.0

    def test_rejects_negative_b(self) -> None:
        """Test a negative stability constant is rejected."""
        with pytest.raises(ValueError, match="declared_B"):
            PairPotential.square_well(0.5, 0.5, 1.0, declared_B=-1.0)

    def test_rejects_negative_radius(self, hard_sphere: PairPotential) -> None:
        """Test evaluate refuses negative radii."""
        with pytest.raises(ValueError, match="nonnegative"):
            evaluate(hard_sphere, -0.1)

    def test_breakpoints(self, square_well: PairPotential) -> None:
        """Test breakpoints include the core and the range."""
        assert square_well.breakpoints() == [0.0, 0.5, 1.0]


class TestMayerFunction:
    """Test zeta and psi."""

    def test_hard_core_gives_minus_one(self, hard_sphere: PairPotential, params_2d: ModelParams) -> None:
        """Test overlapping hard spheres give zeta = -1."""
        assert mayer_zeta(hard_sphere, params_2d, np.zeros(2), np.array([0.03, 0.0])) == -1.0

    def test_far_points_give_zero(self, square_well: PairPotential, params_2d: ModelParams) -> None:
        """Test separations beyond eps * range give exactly 0."""
        assert mayer_zeta(square_well, params_2d, np.zeros(2), np.array([1.0, 0.0])) == 0.0

    def test_well_value(self, square_well: PairPotential, params_2d: ModelParams) -> None:
        """Test zeta = e^(beta u) - 1 inside the well."""
        value = mayer_zeta(square_well, params_2d, np.zeros(2), np.array([0.075, 0.0]))
        assert value == pytest.approx(math.e - 1.0)

    def test_zeta_matrix_symmetric(self, square_well: PairPotential, params_2d: ModelParams, rng: np.random.Generator) -> None:
        """Test zeta_matrix is symmetric with a zero diagonal."""
        pts = rng.uniform(0, 0.2, size=(5, 2))
        z = zeta_matrix(square_well, params_2d, pts)
        assert np.allclose(z, z.T)
        assert np.all(np.diag(z) == 0.0)

    def test_zeta_tensor_matches_matrix(self, square_well: PairPotential, params_2d: ModelParams, rng: np.random.Generator) -> None:
        """Test the batched tensor agrees with per-configuration matrices."""
        batch = rng.uniform(0, 0.2, size=(4, 3, 2))
        tensor = zeta_tensor(square_well, params_2d, batch)
        for b in range(4):
            assert np.allclose(tensor[b], zeta_matrix(square_well, params_2d, batch[b]))

    def test_psi_trivial_sizes(self, hard_sphere: PairPotential, params_2d: ModelParams) -> None:
        """Test psi is 1 for zero or one point."""
        assert boltzmann_psi(hard_sphere, params_2d, np.zeros((0, 2))) == 1.0
        assert boltzmann_psi(hard_sphere, params_2d, np.zeros((1, 2))) == 1.0

    def test_psi_hard_overlap(self, hard_sphere: PairPotential, params_2d: ModelParams) -> None:
        """Test psi vanishes when two hard spheres overlap."""
        pts = np.array([[0.0, 0.0], [0.03, 0.0]])
        assert boltzmann_psi(hard_sphere, params_2d, pts) == 0.0

    def test_psi_ideal_gas(self, ideal: PairPotential, params_2d: ModelParams, rng: np.random.Generator) -> None:
        """Test psi is 1 for the zero potential."""
        assert boltzmann_psi(ideal, params_2d, rng.uniform(size=(6, 2))) == 1.0

    def test_psi_batch_matches_scalar(self, square_well: PairPotential, params_2d: ModelParams, rng: np.random.Generator) -> None:
        """Test the batched psi agrees with the scalar version."""
        batch = rng.uniform(0, 0.3, size=(6, 4, 2))
        expected = [boltzmann_psi(square_well, params_2d, b) for b in batch]
        assert np.allclose(boltzmann_psi_batch(square_well, params_2d, batch), expected)


class TestCBeta:
    """Test the decay constant."""

    def test_hard_disk(self, hard_sphere: PairPotential) -> None:
        """Test C_beta = pi/4 for hard disks of radius 1/2."""
        assert c_beta(hard_sphere, 1.0, 2) == pytest.approx(math.pi / 4, rel=1e-6)

    def test_hard_sphere_3d(self, hard_sphere: PairPotential) -> None:
        """Test C_beta = pi/6 for hard spheres of radius 1/2."""
        assert c_beta(hard_sphere, 1.0, 3) == pytest.approx(math.pi / 6, rel=1e-6)

    def test_square_well_1d(self) -> None:
        """Test the one-dimensional square-well closed form."""
        p = PairPotential.square_well(0.25, 0.25, 1.0, declared_B=1.0)
        expected = 2 * (0.25 + 0.25 * (math.e - 1))
        assert c_beta(p, 1.0, 1) == pytest.approx(expected, rel=1e-6)
        assert expected == pytest.approx(1.359141, abs=1e-6)

    def test_ideal_gas(self, ideal: PairPotential) -> None:
        """Test C_beta = 0 for the zero potential."""
        assert c_beta(ideal, 1.0, 2) == 0.0

    @pytest.mark.parametrize("eps", [0.5, 0.1, 0.01])
    def test_scaling_identity(self, square_well: PairPotential, eps: float) -> None:
        """Test int |zeta^eps| = eps^d C_beta."""
        params = ModelParams(1.0, eps, 2)
        direct = scaled_zeta_norm(square_well, params)
        assert direct == pytest.approx(eps**2 * c_beta(square_well, 1.0, 2), rel=1e-6)

    def test_ball_volume(self) -> None:
        """Test ball volumes in one and two dimensions."""
        assert ball_volume(1, 0.5) == pytest.approx(1.0)
        assert ball_volume(2, 1.0) == pytest.approx(math.pi)


class TestStability:
    """Test stability falsification."""

    def test_hard_spheres_pass(self, hard_sphere: PairPotential, rng: np.random.Generator) -> None:
        """Test nonnegative potentials pass with B = 0."""
        configs = random_configurations(hard_sphere, 50, 6, 2, rng)
        assert check_stability(hard_sphere, configs).passed

    def test_catastrophic_well_fails(self) -> None:
        """Test a pure well with B = 0 is falsified by a clump."""
        p = PairPotential.tabulated([0.0, 1.0], [-1.0, -1.0], 1.0, declared_B=0.0)
        clump = np.zeros((5, 2)) + np.linspace(0, 0.01, 5)[:, None]
        verdict = check_stability(p, [clump])
        assert not verdict.passed
        assert verdict.energy == pytest.approx(-10.0)
        assert verdict.bound == 0.0


class TestLoadPotential:
    """Test building potentials from config blocks."""

    def test_square_well_block(self) -> None:
        """Test a square-well block with an upper-case B key."""
        p = load_potential({"kind": "square-well", "r0": "0.3", "well_width": "0.2", "depth": "0.5", "B": "3"})
        assert p.interaction_range == pytest.approx(0.5)
        assert p.declared_B == 3.0

    def test_missing_key(self) -> None:
        """Test a missing required key raises ConfigError."""
        with pytest.raises(ConfigError, match="well_width"):
            load_potential({"kind": "square-well", "r0": "0.3", "depth": "0.5"})

    def test_unknown_kind(self) -> None:
        """Test an unknown kind raises ConfigError."""
        with pytest.raises(ConfigError, match="Unknown potential kind"):
            load_potential({"kind": "lennard-jones"})

    def test_tabulated_file(self, tmp_path) -> None:
        """Test a tabulated potential read relative to base_dir."""
        (tmp_path / "phi.txt").write_text("0.0 1.0\n0.5 0.5\n1.0 0.0\n", encoding="utf-8")
        p = load_potential({"kind": "tabulated", "range": "1.0", "table_path": "phi.txt"}, tmp_path)
        assert evaluate(p, 0.25) == pytest.approx(0.75)

    def test_missing_table(self, tmp_path) -> None:
        """Test a missing table file raises ConfigError."""
        with pytest.raises(ConfigError, match="does not exist"):
            load_potential({"kind": "tabulated", "range": "1.0", "table_path": "nope.txt"}, tmp_path)
