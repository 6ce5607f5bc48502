"""Cluster-expansion toolkit for maximally chaotic states.

This package provides numerical tools for the rescaled gas of particles
interacting through a pair potential ``phi(x / eps)`` at the Boltzmann-Grad
activity ``mu_eps = eps^-(d-1)``. It evaluates Ursell functions and their
tree-graph majorants, converts between correlation functions and truncated
correlations, brackets cluster lengths by Steiner trees, sums the cluster
expansion of truncated correlations by Monte Carlo and checks the
exponential decay bound against it. A grand-canonical sampler and an exact
one-dimensional oracle provide independent cross-checks.

Example:
    Tree-graph check for three hard spheres::

        import numpy as np
        from chaoscluster import ModelParams, PairPotential, UrsellContext
        from chaoscluster.ursell import verify_tree_graph

        params = ModelParams(beta=1.0, eps=0.1, dim=2)
        points = np.array([[0.0, 0.0], [0.06, 0.0], [0.12, 0.0]])
        ctx = UrsellContext(PairPotential.hard_sphere(), params, points)
        report = verify_tree_graph(ctx, range(3))
        assert report.holds

    Truncated correlation of a hard-rod gas::

        from chaoscluster import MCSModel, PhaseConfiguration
        from chaoscluster.expansion import truncated_correlation

        model = MCSModel(PairPotential.hard_sphere(), ModelParams(1.0, 0.05, 1), (1.0,))
        pair = PhaseConfiguration(np.array([[0.5], [0.52]]))
        estimate = truncated_correlation(model, pair, n_max=3, samples=20000, seed=0)
        print(estimate.value, estimate.stat_error)

Note:
    Experiments are usually driven through the ``chaoscluster`` command with
    a key-value config file; see :mod:`chaoscluster.cli`.

See Also:
    - `chaoscluster.ursell`: Ursell functions and tree-graph bounds
    - `chaoscluster.expansion`: series estimates and the decay bound
    - `chaoscluster.sampler`: grand-canonical Monte Carlo and the exact oracle

"""

__version__ = "0.1.0"
__title__ = "chaoscluster"
__description__ = "Cluster expansion and decay bounds for maximally chaotic states"

from chaoscluster.config import ExperimentConfig
from chaoscluster.cumulants import SubsetTable
from chaoscluster.exceptions import (
    ChaosClusterError,
    ConfigError,
    GraphError,
    GuardError,
    QuadratureError,
    RegimeError,
)
from chaoscluster.expansion import MCSModel
from chaoscluster.graphs import Graph
from chaoscluster.potential import PairPotential
from chaoscluster.types import (
    InequalityReport,
    LengthBracket,
    ModelParams,
    NZeroBounds,
    PhaseConfiguration,
    SeriesEstimate,
)
from chaoscluster.ursell import UrsellContext

__all__ = [
    "ChaosClusterError",
    "ConfigError",
    "ExperimentConfig",
    "Graph",
    "GraphError",
    "GuardError",
    "InequalityReport",
    "LengthBracket",
    "MCSModel",
    "ModelParams",
    "NZeroBounds",
    "PairPotential",
    "PhaseConfiguration",
    "QuadratureError",
    "RegimeError",
    "SeriesEstimate",
    "SubsetTable",
    "UrsellContext",
]
