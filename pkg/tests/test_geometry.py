"""Tests for chaoscluster.geometry module."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation

from chaoscluster.exceptions import GraphError
from chaoscluster.geometry import (
    BALL_OVERLAP,
    EDGE,
    EXACT_SMALL,
    OPTIMIZE,
    enclosing_radius,
    full_steiner_topologies,
    mst_length,
    n_zero_bounds,
    steiner_length,
    tree_length,
)
from chaoscluster.graphs import Graph, enumerate_trees

TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
COLLINEAR = np.array([[0.0], [1.0], [2.0]])


class TestTreeLength:
    """Test lengths of explicit trees."""

    def test_single_edge(self) -> None:
        """Test two points at distance 3."""
        assert tree_length(Graph.from_edges(2, [(1, 2)]), np.array([[0.0], [3.0]])) == 3.0

    def test_path_and_star(self) -> None:
        """Test the path 1-2-3 and the star at an endpoint on collinear points."""
        assert tree_length(Graph.from_edges(3, [(1, 2), (2, 3)]), COLLINEAR) == 2.0
        assert tree_length(Graph.from_edges(3, [(1, 2), (1, 3)]), COLLINEAR) == 3.0

    def test_rejects_non_tree(self) -> None:
        """Test a disconnected graph raises GraphError."""
        with pytest.raises(GraphError, match="needs a tree"):
            tree_length(Graph.from_edges(3, [(1, 2)]), COLLINEAR)


class TestMinimumSpanningTree:
    """Test MST lengths."""

    @pytest.mark.parametrize(
        ("xs", "expected"),
        [(COLLINEAR, 2.0), (TRIANGLE, 2.0), (np.array([[0.3, 0.4]]), 0.0)],
    )
    def test_examples(self, xs: np.ndarray, expected: float) -> None:
        """Test the collinear, equilateral and single-point cases."""
        assert mst_length(xs) == pytest.approx(expected)

    def test_matches_exhaustive_minimum(self, rng: np.random.Generator) -> None:
        """Test the MST equals the minimum over all Cayley trees."""
        for _ in range(5):
            xs = rng.uniform(size=(5, 2))
            best = min(tree_length(t, xs) for t in enumerate_trees(5))
            assert mst_length(xs) == pytest.approx(best, rel=1e-12)

    def test_duplicate_points(self) -> None:
        """Test coincident points add no length."""
        xs = np.vstack([TRIANGLE, TRIANGLE[:1]])
        assert mst_length(xs) == pytest.approx(2.0)


class TestSteinerLength:
    """Test the cluster-length bracket."""

    def test_two_points(self) -> None:
        """Test [1, 1] for two points at unit distance."""
        bracket = steiner_length(np.array([[0.0, 0.0], [1.0, 0.0]]))
        assert (bracket.lower, bracket.upper) == (1.0, 1.0)

    def test_collinear_is_exact(self) -> None:
        """Test the bracket closes on collinear points."""
        bracket = steiner_length(COLLINEAR)
        assert bracket.lower == bracket.upper == pytest.approx(2.0)

    def test_equilateral_exact(self) -> None:
        """Test sqrt(3) from the Fermat point."""
        bracket = steiner_length(TRIANGLE, EXACT_SMALL)
        assert bracket.method == "exact-steiner"
        assert bracket.upper == pytest.approx(math.sqrt(3), abs=1e-6)
        assert bracket.upper - bracket.lower <= 1e-6 * bracket.upper

    def test_equilateral_against_direct_minimization(self) -> None:
        """Test the topology solve against a generic minimizer of the star length."""
        res = minimize(
            lambda p: float(np.linalg.norm(TRIANGLE - p, axis=1).sum()),
            x0=np.array([0.1, 0.1]),
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-12},
        )
        assert steiner_length(TRIANGLE, EXACT_SMALL).upper == pytest.approx(res.fun, abs=1e-6)

    def test_unit_square(self) -> None:
        """Test 1 + sqrt(3) for the unit square."""
        assert steiner_length(SQUARE, EXACT_SMALL).upper == pytest.approx(1.0 + math.sqrt(3), rel=1e-6)

    def test_optimize_tightens(self) -> None:
        """Test optimize lowers the upper end below the MST."""
        bracket = steiner_length(SQUARE, OPTIMIZE)
        assert bracket.method == "local-opt"
        assert bracket.upper < mst_length(SQUARE)
        assert bracket.lower <= bracket.upper

    def test_exact_small_falls_back(self, rng: np.random.Generator) -> None:
        """Test exact_small on five points returns the plain bracket."""
        bracket = steiner_length(rng.uniform(size=(5, 2)), EXACT_SMALL)
        assert bracket.method == "mst-bracket"

    def test_unknown_effort(self) -> None:
        """Test an unknown effort raises ValueError."""
        with pytest.raises(ValueError, match="Unknown effort"):
            steiner_length(TRIANGLE, "heroic")

    def test_bracket_property(self, rng: np.random.Generator) -> None:
        """Test mst/2 <= lower <= upper <= mst on random configurations."""
        for _ in range(200):
            j = int(rng.integers(2, 7))
            xs = rng.uniform(size=(j, 2))
            mst = mst_length(xs)
            bracket = steiner_length(xs)
            assert mst / 2 - 1e-12 <= bracket.lower <= bracket.upper <= mst + 1e-12

    def test_rigid_motion_invariance(self, rng: np.random.Generator) -> None:
        """Test brackets are unchanged by rotations and translations."""
        xs = rng.uniform(size=(4, 3))
        moved = Rotation.from_euler("xyz", [0.3, -1.2, 2.0]).apply(xs) + np.array([3.0, -1.0, 2.0])
        a, b = steiner_length(xs), steiner_length(moved)
        assert a.lower == pytest.approx(b.lower, rel=1e-9)
        assert a.upper == pytest.approx(b.upper, rel=1e-9)

    def test_duplicate_never_increases(self, rng: np.random.Generator) -> None:
        """Test adding a duplicate point keeps both endpoints."""
        xs = rng.uniform(size=(4, 2))
        a, b = steiner_length(xs), steiner_length(np.vstack([xs, xs[2:3]]))
        assert b.lower <= a.lower + 1e-12
        assert b.upper <= a.upper + 1e-12

    @pytest.mark.parametrize(("j", "count"), [(2, 1), (3, 1), (4, 3), (5, 15), (6, 105)])
    def test_topology_counts(self, j: int, count: int) -> None:
        """Test (2j - 5)!! full topologies."""
        topologies = full_steiner_topologies(j)
        assert len(topologies) == count
        assert all(len(edges) == max(1, 2 * j - 3) for edges in topologies)


class TestEnclosingRadius:
    """Test the smallest enclosing ball."""

    @pytest.mark.parametrize(
        ("points", "radius"),
        [
            (np.array([[0.3, 0.4]]), 0.0),
            (COLLINEAR, 1.0),
            (TRIANGLE, 1 / math.sqrt(3)),
            (SQUARE, math.sqrt(2) / 2),
            (np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 0.1]]), 1.0),
        ],
    )
    def test_known_radii(self, points: np.ndarray, radius: float) -> None:
        """Test point sets with a known smallest ball."""
        assert enclosing_radius(points) == pytest.approx(radius)

    def test_repeated_points(self) -> None:
        """Test duplicates do not break the circumscribed-ball solve."""
        pts = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
        assert enclosing_radius(pts) == pytest.approx(0.5)


class TestNZeroBounds:
    """Test bounds on the connection count."""

    def test_two_points_ten_eps(self) -> None:
        """Test lower = 10 - 2 for two points 10 eps apart."""
        bounds = n_zero_bounds(np.array([[0.0], [1.0]]), 0.1)
        assert bounds.lower == 8
        assert bounds.upper >= bounds.lower
        assert bounds.convention == EDGE

    def test_single_ball(self) -> None:
        """Test points inside one eps-ball need nothing."""
        bounds = n_zero_bounds(np.array([[0.0, 0.0], [0.03, 0.0], [0.0, 0.04]]), 0.1)
        assert (bounds.lower, bounds.upper) == (0, 0)

    @pytest.mark.parametrize("convention", [EDGE, BALL_OVERLAP])
    @pytest.mark.parametrize(
        "points",
        [np.array([[-0.09, 0.0], [0.09, 0.0]]), TRIANGLE * 0.095 * math.sqrt(3)],
    )
    def test_single_ball_wider_than_eps(self, points: np.ndarray, convention: str) -> None:
        """Test points more than eps apart but inside one eps-ball need nothing."""
        assert mst_length(points) > 0.1
        bounds = n_zero_bounds(points, 0.1, convention)
        assert (bounds.lower, bounds.upper) == (0, 0)

    def test_collinear_three(self) -> None:
        """Test collinear 0, 5 eps, 10 eps gives lower = 7."""
        bounds = n_zero_bounds(np.array([[0.0], [0.5], [1.0]]), 0.1)
        assert bounds.lower == 7

    def test_ball_overlap_halves_length(self) -> None:
        """Test the 2 eps spacing convention."""
        bounds = n_zero_bounds(np.array([[0.0], [1.0]]), 0.1, BALL_OVERLAP)
        assert bounds.lower == 3
        assert bounds.upper == 5

    def test_chain_construction(self, rng: np.random.Generator) -> None:
        """Test an explicit chain of eps-edges never beats the lower bound."""
        eps = 0.05
        for _ in range(20):
            steps = rng.normal(size=(12, 2))
            steps *= (0.99 * eps) / np.linalg.norm(steps, axis=1, keepdims=True)
            chain = np.cumsum(np.vstack([np.zeros((1, 2)), steps]), axis=0)
            ends = chain[[0, -1]]
            extra = chain.shape[0] - 2
            assert extra >= n_zero_bounds(ends, eps).lower

    def test_rejects_bad_input(self) -> None:
        """Test non-positive eps and unknown conventions."""
        with pytest.raises(ValueError, match="eps"):
            n_zero_bounds(TRIANGLE, 0.0)
        with pytest.raises(ValueError, match="convention"):
            n_zero_bounds(TRIANGLE, 0.1, "touching")
