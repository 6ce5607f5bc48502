"""Tests for chaoscluster.ursell module."""

from __future__ import annotations

import math

import numpy as np
import pytest

from chaoscluster.cumulants import enumerate_partitions
from chaoscluster.exceptions import GraphError, GuardError
from chaoscluster.potential import PairPotential, boltzmann_psi, zeta_tensor
from chaoscluster.types import ModelParams
from chaoscluster.ursell import (
    UrsellContext,
    forest_majorant,
    forest_sum_enumerated,
    fuzz_tree_graph,
    generalized_ursell,
    pivot,
    tree_majorant,
    tree_sum,
    tree_sum_enumerated,
    ursell_batch,
    ursell_graph_sum,
    ursell_subsets,
    verify_forest_bound,
    verify_tree_graph,
)

PARAMS = ModelParams(beta=1.0, eps=0.1, dim=2)


def soft_potential() -> PairPotential:
    """Soft repulsion turning into a shallow well; stable with B = 1.5 for k <= 6."""
    return PairPotential.tabulated([0.0, 0.5, 1.0], [1.0, -0.5, 0.0], 1.0, declared_B=1.5)


def random_context(potential: PairPotential, k: int, rng: np.random.Generator) -> UrsellContext:
    """k points in a square of side eps so most pairs interact."""
    return UrsellContext(potential, PARAMS, rng.uniform(0.0, PARAMS.eps, size=(k, 2)))


def overlapping_triple() -> UrsellContext:
    """Three hard spheres pairwise inside the core."""
    pts = np.array([[0.0, 0.0], [0.02, 0.0], [0.01, 0.015]])
    return UrsellContext(PairPotential.hard_sphere(0.5), PARAMS, pts)


class TestUrsellContext:
    """Test the cached configuration context."""

    def test_zeta_cache(self) -> None:
        """Test the cache is symmetric, read-only and zero on the diagonal."""
        ctx = overlapping_triple()
        assert np.allclose(ctx.zeta, ctx.zeta.T)
        assert np.all(np.diag(ctx.zeta) == 0.0)
        with pytest.raises(ValueError, match="read-only"):
            ctx.zeta[0, 1] = 0.0

    def test_stability_factor(self) -> None:
        """Test exp(2 beta B)."""
        ctx = UrsellContext(soft_potential(), PARAMS, np.zeros((1, 2)))
        assert ctx.stability_factor == pytest.approx(math.exp(3.0))


class TestGraphSum:
    """Test the connected-graph sum."""

    def test_trivial_sizes(self) -> None:
        """Test u_0 = 0 and u_1 = 1."""
        ctx = overlapping_triple()
        assert ursell_graph_sum(ctx, []) == 0.0
        assert ursell_graph_sum(ctx, [2]) == 1.0

    def test_pair_is_zeta(self, rng: np.random.Generator) -> None:
        """Test u_2 = zeta_12."""
        ctx = random_context(soft_potential(), 2, rng)
        assert ursell_graph_sum(ctx, [0, 1]) == pytest.approx(ctx.zeta[0, 1])

    def test_triple_formula(self, rng: np.random.Generator) -> None:
        """Test u_3 against the explicit four-graph sum."""
        ctx = random_context(soft_potential(), 3, rng)
        z = ctx.zeta
        expected = z[0, 1] * z[0, 2] + z[0, 1] * z[1, 2] + z[0, 2] * z[1, 2] + z[0, 1] * z[0, 2] * z[1, 2]
        assert ursell_graph_sum(ctx, range(3)) == pytest.approx(expected)

    def test_hard_sphere_triple(self) -> None:
        """Test three overlapping hard spheres give u_3 = 2."""
        assert ursell_graph_sum(overlapping_triple(), range(3)) == pytest.approx(2.0)

    def test_ideal_gas_vanishes(self, ideal: PairPotential, rng: np.random.Generator) -> None:
        """Test u_k = 0 for the zero potential."""
        ctx = random_context(ideal, 4, rng)
        assert ursell_graph_sum(ctx, range(4)) == 0.0

    def test_label_validation(self) -> None:
        """Test duplicate or out-of-range labels raise GraphError."""
        ctx = overlapping_triple()
        with pytest.raises(GraphError, match="distinct"):
            ursell_graph_sum(ctx, [0, 0])
        with pytest.raises(GraphError, match="outside"):
            ursell_graph_sum(ctx, [0, 5])

    def test_guard(self, rng: np.random.Generator) -> None:
        """Test nine labels are refused."""
        ctx = random_context(soft_potential(), 9, rng)
        with pytest.raises(GuardError):
            ursell_graph_sum(ctx, range(9))


class TestBatchedUrsell:
    """Test the vectorized subset recursion."""

    @pytest.mark.parametrize("k", [2, 3, 4, 5])
    def test_matches_graph_sum(self, k: int, rng: np.random.Generator) -> None:
        """Test ursell_batch against the connected-graph sum."""
        p = soft_potential()
        batch = rng.uniform(0.0, PARAMS.eps, size=(5, k, 2))
        fast = ursell_batch(zeta_tensor(p, PARAMS, batch))
        slow = [ursell_graph_sum(UrsellContext(p, PARAMS, b), range(k)) for b in batch]
        assert np.allclose(fast, slow, rtol=1e-9, atol=1e-12)

    def test_psi_decomposition(self, rng: np.random.Generator) -> None:
        """Test psi_n = sum over partitions of products of u on the blocks."""
        p = soft_potential()
        pts = rng.uniform(0.0, PARAMS.eps, size=(5, 2))
        u = ursell_subsets(zeta_tensor(p, PARAMS, pts[None]))[0]
        total = math.fsum(
            math.prod(u[sum(1 << (a - 1) for a in block)] for block in part.blocks)
            for part in enumerate_partitions(range(1, 6))
        )
        assert total == pytest.approx(boltzmann_psi(p, PARAMS, pts), rel=1e-9)

    def test_empty_set_column(self, rng: np.random.Generator) -> None:
        """Test the empty-set column is 0."""
        batch = zeta_tensor(soft_potential(), PARAMS, rng.uniform(0.0, 0.1, size=(3, 3, 2)))
        assert np.all(ursell_subsets(batch)[:, 0] == 0.0)


class TestPivotRecursion:
    """Test generalized Ursell functions and their majorant."""

    def test_base_cases(self) -> None:
        """Test u~_{J,empty} = 1 for one root and u~_{empty,empty} = 1."""
        ctx = overlapping_triple()
        assert generalized_ursell(ctx, [0], []) == 1.0
        assert generalized_ursell(ctx, [], []) == 1.0
        assert generalized_ursell(ctx, [], [1]) == 0.0

    def test_single_step(self, rng: np.random.Generator) -> None:
        """Test u~_{{1},{2}} = zeta_12."""
        ctx = random_context(soft_potential(), 2, rng)
        assert generalized_ursell(ctx, [0], [1]) == pytest.approx(ctx.zeta[0, 1])

    @pytest.mark.parametrize("k", [2, 3, 4, 5, 6])
    def test_equals_graph_sum(self, k: int, rng: np.random.Generator) -> None:
        """Test u~_{{1},I} = u_{1+i} on soft configurations."""
        for _ in range(5):
            ctx = random_context(soft_potential(), k, rng)
            expected = ursell_graph_sum(ctx, range(k))
            assert generalized_ursell(ctx, [0], range(1, k)) == pytest.approx(expected, rel=1e-9, abs=1e-12)

    def test_psi_identity(self, rng: np.random.Generator) -> None:
        """Test psi_{J u I} = sum_{L subset I} psi_{I - L} u~_{J,L}."""
        p = soft_potential()
        ctx = random_context(p, 5, rng)
        roots, others = [0, 1], [2, 3, 4]
        terms = []
        for part in enumerate_partitions(others, allow_trivial_blocks=True, n_blocks=2):
            chosen, rest = sorted(part.blocks[0]), sorted(part.blocks[1])
            terms.append(boltzmann_psi(p, PARAMS, ctx.points[rest]) * generalized_ursell(ctx, roots, chosen))
        assert math.fsum(terms) == pytest.approx(boltzmann_psi(p, PARAMS, ctx.points), rel=1e-9)

    def test_pivot_choices(self, ideal: PairPotential) -> None:
        """Test ties go to the smallest label and a lone label is its own pivot."""
        ctx = UrsellContext(ideal, PARAMS, np.array([[0.0, 0.0], [0.01, 0.0], [0.02, 0.0]]))
        assert pivot(ctx, [2, 1]) == 1
        assert pivot(ctx, [2]) == 2

    def test_pivot_prefers_far_vertex(self, square_well: PairPotential) -> None:
        """Test a vertex outside the well has W = 0 and wins over bound ones."""
        pts = np.array([[0.0, 0.0], [0.07, 0.0], [1.0, 1.0]])
        ctx = UrsellContext(square_well, PARAMS, pts)
        assert pivot(ctx, [0, 1, 2]) == 2

    def test_hard_core_branch(self) -> None:
        """Test W = +inf short-circuits the branch to 0."""
        assert generalized_ursell(overlapping_triple(), [0, 1], []) == 0.0

    def test_overlap_rejected(self) -> None:
        """Test J and I must be disjoint."""
        with pytest.raises(GraphError, match="overlap"):
            generalized_ursell(overlapping_triple(), [0, 1], [1])

    def test_forest_majorant_base(self) -> None:
        """Test theta~_{{1},empty} = exp(2 beta B)."""
        ctx = UrsellContext(soft_potential(), PARAMS, np.zeros((1, 2)))
        assert forest_majorant(ctx, [0], []) == pytest.approx(math.exp(3.0))

    def test_forest_majorant_ideal(self, ideal: PairPotential, rng: np.random.Generator) -> None:
        """Test theta~ vanishes for the zero potential when I is nonempty."""
        ctx = random_context(ideal, 3, rng)
        assert forest_majorant(ctx, [0], [1, 2]) == 0.0

    def test_forest_majorant_hard_pair(self) -> None:
        """Test theta~_{{1},{2}} = 1 for overlapping hard spheres."""
        assert forest_majorant(overlapping_triple(), [0], [1]) == pytest.approx(1.0)

    @pytest.mark.parametrize(("roots", "others"), [([0], [1, 2, 3]), ([0, 1], [2, 3, 4]), ([0, 2, 4], [1, 3, 5])])
    def test_forest_majorant_matches_enumeration(self, roots: list[int], others: list[int], rng: np.random.Generator) -> None:
        """Test the recursion equals the explicit forest sum."""
        ctx = random_context(soft_potential(), 6, rng)
        assert forest_majorant(ctx, roots, others) == pytest.approx(
            forest_sum_enumerated(ctx, roots, others), rel=1e-9
        )

    def test_forest_bound_holds(self, rng: np.random.Generator) -> None:
        """Test u~ <= theta~ on random soft configurations."""
        for _ in range(20):
            ctx = random_context(soft_potential(), 5, rng)
            assert verify_forest_bound(ctx, [0, 1], [2, 3, 4]).holds


class TestTreeGraph:
    """Test tree sums and the tree-graph inequality."""

    def test_kirchhoff_matches_enumeration(self, rng: np.random.Generator) -> None:
        """Test the matrix-tree determinant against Prüfer enumeration."""
        ctx = random_context(soft_potential(), 6, rng)
        assert tree_sum(ctx, range(6)) == pytest.approx(tree_sum_enumerated(ctx, range(6)), rel=1e-9)

    def test_hard_sphere_triple(self) -> None:
        """Test |2| <= 3 for three overlapping hard spheres."""
        report = verify_tree_graph(overlapping_triple(), range(3))
        assert report.lhs == pytest.approx(2.0)
        assert report.rhs == pytest.approx(3.0)
        assert report.holds

    def test_pair_majorant(self, rng: np.random.Generator) -> None:
        """Test k = 2 gives exp(4 beta B) |zeta_12|."""
        ctx = random_context(soft_potential(), 2, rng)
        assert tree_majorant(ctx, [0, 1]) == pytest.approx(math.exp(6.0) * abs(ctx.zeta[0, 1]))

    def test_ideal_gas(self, ideal: PairPotential, rng: np.random.Generator) -> None:
        """Test 0 <= 0 for the zero potential."""
        report = verify_tree_graph(random_context(ideal, 3, rng), range(3))
        assert report.lhs == 0.0
        assert report.rhs == 0.0
        assert report.holds

    @pytest.mark.parametrize("k", [3, 5, 7])
    def test_random_soft_configs(self, k: int, rng: np.random.Generator) -> None:
        """Test the inequality on random soft configurations."""
        for _ in range(10):
            assert verify_tree_graph(random_context(soft_potential(), k, rng), range(k)).holds

    def test_majorant_guard(self, rng: np.random.Generator) -> None:
        """Test ten labels are refused."""
        with pytest.raises(GuardError):
            tree_majorant(random_context(soft_potential(), 10, rng), range(10))


class TestFuzzing:
    """Test the fuzzing campaign."""

    def test_square_well_campaign(self, square_well: PairPotential) -> None:
        """Test a small campaign finds no violation and is reproducible."""
        first = fuzz_tree_graph(square_well, PARAMS, 4, 30, seed=1, workers=1)
        again = fuzz_tree_graph(square_well, PARAMS, 4, 30, seed=1, workers=1)
        assert first.trials == 30
        assert first.violations == 0
        assert first.max_ratio == again.max_ratio

    def test_independent_of_workers(self, square_well: PairPotential) -> None:
        """Test one and two workers give the same summary for a fixed seed."""
        serial = fuzz_tree_graph(square_well, PARAMS, 4, 60, seed=3, workers=1)
        pooled = fuzz_tree_graph(square_well, PARAMS, 4, 60, seed=3, workers=2)
        assert pooled.trials == serial.trials == 60
        assert pooled.violations == serial.violations
        assert pooled.max_ratio == serial.max_ratio

    @pytest.mark.runslow
    def test_thousand_trials(self, square_well: PairPotential) -> None:
        """Test 10^3 square-well trials at k = 6 across workers."""
        summary = fuzz_tree_graph(square_well, PARAMS, 6, 1000, seed=2, workers=4)
        assert summary.violations == 0
        assert summary.max_ratio <= 1.0 + 1e-9
