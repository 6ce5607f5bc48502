"""Command-line entry point.

Every subcommand reads a key-value config, applies the ``--seed``,
``--samples`` and ``--eps`` overrides, writes ``<command>.csv`` and a JSON
manifest ``<command>.json`` into ``--out``, and exits with

- 0 on success,
- 2 on a configuration error,
- 3 on a guard, graph, quadrature or regime error,
- 4 when a verified inequality fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .cumulants import SubsetTable, bell_number, mobius_truncate, truncate
from .exceptions import ChaosClusterError, ConfigError
from .expansion import (
    MAX_A_PRIME_GRID,
    correlation,
    epsilon_zero,
    fit_A_prime,
    log_partition,
    theorem_constant_a,
    truncated_correlation,
    verify_theorem,
)
from .geometry import BALL_OVERLAP, EDGE, EFFORTS, mst_length, n_zero_bounds, steiner_length
from .graphs import graph_counts
from .potential import boltzmann_psi, c_beta
from .sampler import (
    MAX_ORACLE_BOX,
    MAX_ORACLE_PARTICLES,
    estimate_rho,
    estimate_truncated,
    exact_tiny_oracle,
    gcmc_run,
    write_grid_estimate,
    write_number_histogram,
)
from .types import MAX_URSELL_K
from .ursell import UrsellContext, fuzz_tree_graph, tree_majorant, tree_sum, ursell_graph_sum

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3
EXIT_VERIFY = 4

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class RunContext:
    """Resolved inputs and output location of one invocation."""

    def __init__(self, command: str, config: ExperimentConfig, args: argparse.Namespace) -> None:
        """Initialize from parsed arguments."""
        self.command = command
        self.config = config
        self.args = args
        self.out = Path(args.out)
        self.seed = config.get_int("seed")
        self.samples = config.get_int("samples")
        self.workers = args.workers or config.get_optional_int("workers") or os.cpu_count() or 1

    def write_csv(self, header: Sequence[str], rows: Sequence[Sequence[object]], name: str | None = None) -> Path:
        """Write ``rows`` under ``header`` to ``<out>/<name or command>.csv``."""
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / f"{name or self.command}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows([_cell(v) for v in row] for row in rows)
        logger.info("wrote %s (%d rows)", path, len(rows))
        return path

    def write_manifest(self, summary: dict[str, object]) -> Path:
        """Write the JSON manifest with the resolved config, seed and summary."""
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / f"{self.command}.json"
        manifest = {
            "command": self.command,
            "config": self.config.resolved(),
            "config_text": self.config.to_text(),
            "seed": self.seed,
            "summary": summary,
            "version": __version__,
        }
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
        return path


def _cell(value: object) -> object:
    if isinstance(value, bool | np.bool_):
        return str(bool(value)).lower()
    if isinstance(value, float | np.floating):
        return f"{float(value):.12g}"
    return value


def _json_default(value: object) -> object:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    msg = f"not JSON serializable: {type(value).__name__}"
    raise TypeError(msg)


def _finite(value: float) -> float | str:
    return value if math.isfinite(value) else str(value)


def cmd_counts(ctx: RunContext) -> int:
    """Enumeration audits for ``k = 1..K``."""
    k_max = ctx.args.k or ctx.config.get_int("k")
    rows = []
    for k in range(1, k_max + 1):
        c = graph_counts(k)
        rows.append([k, c["graphs"], c["connected"], c["trees"], c["cayley"], bell_number(k)])
    ctx.write_csv(["k", "graphs", "connected", "trees", "cayley", "partitions"], rows)
    ctx.write_manifest({"k_max": k_max, "trees_match_cayley": all(r[3] == r[4] for r in rows)})
    return EXIT_OK


def cmd_ursell(ctx: RunContext) -> int:
    """Ursell values of each anchor configuration with the tree-graph check."""
    model = ctx.config.model()
    rows = []
    failed = False
    for index, config in enumerate(ctx.config.anchors()):
        uctx = UrsellContext(model.potential, model.params, config.positions)
        labels = range(config.j)
        value = ursell_graph_sum(uctx, labels) if config.j <= MAX_URSELL_K else math.nan
        majorant = tree_majorant(uctx, labels)
        holds = bool(abs(value) <= majorant * (1.0 + 1e-9)) if math.isfinite(value) else True
        failed |= not holds
        rows.append([index, config.j, value, tree_sum(uctx, labels), majorant, holds])
    summary: dict[str, object] = {"configurations": len(rows), "violations": sum(not r[-1] for r in rows)}
    trials = ctx.config.get_int("trials")
    if trials > 0:
        fuzz = fuzz_tree_graph(
            model.potential, model.params, ctx.config.get_int("k"), trials, ctx.seed, ctx.workers
        )
        failed |= fuzz.violations > 0
        summary["fuzz"] = {
            "k": ctx.config.get_int("k"),
            "trials": fuzz.trials,
            "violations": fuzz.violations,
            "max_ratio": fuzz.max_ratio,
            "first_violation": fuzz.first_violation,
        }
    ctx.write_csv(["index", "k", "ursell", "tree_sum", "tree_majorant", "holds"], rows)
    ctx.write_manifest(summary)
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_cumulant(ctx: RunContext) -> int:
    """Truncate the Boltzmann-factor table of each anchor configuration two ways."""
    model = ctx.config.model()
    rows = []
    max_gap = 0.0
    for index, config in enumerate(ctx.config.anchors()):
        pts = config.positions
        rho = model.rho(pts)

        def moment(labels: tuple[int, ...], pts: np.ndarray = pts, rho: np.ndarray = rho) -> float:
            sel = [a - 1 for a in labels]
            return float(np.prod(rho[sel]) * boltzmann_psi(model.potential, model.params, pts[sel]))

        table = SubsetTable.from_function(config.j, moment)
        recursive = truncate(table)
        closed = mobius_truncate(table)
        for mask in range(1, 1 << config.j):
            gap = abs(recursive[mask] - closed[mask])
            max_gap = max(max_gap, gap)
            labels = " ".join(str(a + 1) for a in range(config.j) if mask >> a & 1)
            rows.append([index, mask, labels, table[mask], recursive[mask], closed[mask]])
    ctx.write_csv(["index", "mask", "labels", "moment", "truncated", "mobius"], rows)
    ctx.write_manifest({"max_method_gap": max_gap})
    return EXIT_OK


def cmd_length(ctx: RunContext) -> int:
    """Cluster-length brackets and n0 bounds of each anchor configuration."""
    effort = ctx.args.effort
    rows = []
    for eps in ctx.config.eps_values:
        for index, config in enumerate(ctx.config.anchors(eps)):
            bracket = steiner_length(config.positions, effort)
            edge = n_zero_bounds(config.positions, eps, EDGE, effort)
            ball = n_zero_bounds(config.positions, eps, BALL_OVERLAP, effort)
            rows.append(
                [
                    eps,
                    index,
                    config.j,
                    mst_length(config.positions),
                    bracket.lower,
                    bracket.upper,
                    bracket.method,
                    edge.lower,
                    edge.upper,
                    ball.lower,
                    ball.upper,
                ]
            )
    header = [
        "eps",
        "index",
        "j",
        "mst",
        "length_lower",
        "length_upper",
        "method",
        "n0_edge_lower",
        "n0_edge_upper",
        "n0_ball_lower",
        "n0_ball_upper",
    ]
    ctx.write_csv(header, rows)
    ctx.write_manifest({"effort": effort, "rows": len(rows)})
    return EXIT_OK


def cmd_series(ctx: RunContext) -> int:
    """``log Z``, ``rho_j / mu^j`` and ``rho^T_j / mu^j`` for each anchor."""
    cfg = ctx.config
    model = cfg.model()
    root = np.random.SeedSequence(ctx.seed)
    anchors = cfg.anchors()
    children = root.spawn(1 + 2 * len(anchors))
    n_max = cfg.get_int("n_max")
    rows = []
    log_z = log_partition(model, cfg.get_int("m_max"), ctx.samples, children[0])
    rows.append(["log_z", "", 0, log_z.value, log_z.stat_error, log_z.n_max, log_z.truncation_error])
    for index, config in enumerate(anchors):
        rho = correlation(model, config, n_max, ctx.samples, children[1 + 2 * index])
        trunc = truncated_correlation(model, config, n_max, ctx.samples, children[2 + 2 * index])
        for name, est in (("rho", rho), ("rho_truncated", trunc)):
            rows.append([name, index, config.j, est.value, est.stat_error, est.n_max, est.truncation_error])
    ctx.write_csv(["quantity", "index", "j", "value", "stat_error", "n_max", "truncation_error"], rows)
    ctx.write_manifest({"eps0": _finite(epsilon_zero(model)), "mu": model.mu, "samples": ctx.samples})
    return EXIT_OK


def cmd_verify_theorem(ctx: RunContext) -> int:
    """Sweep ``eps`` and compare ``|rho^T_j|`` with the decay bound."""
    cfg = ctx.config
    base = cfg.model()
    a_prime = fit_A_prime(MAX_A_PRIME_GRID, MAX_A_PRIME_GRID)
    a_const = theorem_constant_a(a_prime, base.params.beta, base.potential.declared_B)
    convention = cfg.length_convention
    children = np.random.SeedSequence(ctx.seed).spawn(len(cfg.eps_values))
    rows = []
    for eps, child in zip(cfg.eps_values, children, strict=True):
        model = base.with_eps(eps)
        eps0 = epsilon_zero(model)
        anchors = cfg.anchors(eps)
        results = verify_theorem(model, anchors, cfg.get_int("n_max"), ctx.samples, child, a_const, eps0)
        for r in results:
            n0 = n_zero_bounds(anchors[r.index].positions, eps, convention).lower
            rows.append([eps, r.index, r.j, r.length_lower, n0, r.value, r.stat_error, r.lhs, r.rhs, r.holds, r.margin])
    failures = sum(not r[9] for r in rows)
    header = ["eps", "index", "j", "length_lower", "n0_lower", "value", "stat_error", "lhs", "rhs", "holds", "margin"]
    ctx.write_csv(header, rows)
    ctx.write_manifest(
        {
            "a_prime": a_prime,
            "a": a_const,
            "c_beta": c_beta(base.potential, base.params.beta, base.dim),
            "eps0": _finite(epsilon_zero(base)),
            "failures": failures,
            "length_convention": convention,
            "rows": len(rows),
        }
    )
    return EXIT_VERIFY if failures else EXIT_OK


def cmd_gcmc(ctx: RunContext) -> int:
    """Run the sampler and, for tiny one-dimensional boxes, compare with the exact oracle."""
    cfg = ctx.config
    model = cfg.model()
    n_cap = cfg.get_optional_int("n_particles_max")
    j_max = cfg.get_int("j_max")
    result = gcmc_run(
        model,
        cfg.get_int("sweeps"),
        ctx.seed,
        j_max=j_max,
        bins=cfg.get_int("bins"),
        chains=ctx.args.chains,
        workers=ctx.workers,
        n_particles_max=n_cap,
    )
    rho1 = estimate_rho(result.grids[1])
    ctx.out.mkdir(parents=True, exist_ok=True)
    write_grid_estimate(ctx.out / "gcmc_rho1.csv", rho1, result.grids[1])
    if j_max >= 2:  # noqa: PLR2004
        write_grid_estimate(ctx.out / "gcmc_rho2_truncated.csv", estimate_truncated(result.grids, 2), result.grids[2])
    write_number_histogram(ctx.out / "gcmc_number.csv", result.number_histogram)
    summary: dict[str, object] = {
        "acceptance": result.acceptance,
        "energy_drift": result.energy_drift,
        "mean_number": result.mean_number,
        "number_variance": result.number_variance,
    }
    rows = []
    tiny = (
        model.dim == 1
        and n_cap is not None
        and n_cap <= MAX_ORACLE_PARTICLES
        and model.box[0] <= MAX_ORACLE_BOX * model.params.eps
    )
    if tiny:
        oracle = exact_tiny_oracle(model, n_cap, cfg.get_int("quadrature_res"))
        max_z = 0.0
        for cell, centre in enumerate(result.grids[1].centres()):
            exact = oracle.rho_scaled(centre[None, :])
            value, err = rho1.values[cell], rho1.errors[cell]
            z = abs(value - exact.value) / math.hypot(err, exact.stat_error) if err > 0 else 0.0
            max_z = max(max_z, z)
            rows.append([cell, float(centre[0]), value, err, exact.value])
        summary["cross_check_max_z"] = max_z
        summary["partition_function"] = oracle.partition
    ctx.write_csv(["cell", "x", "gcmc", "gcmc_error", "exact"], rows)
    ctx.write_manifest(summary)
    return EXIT_OK


def cmd_fit_a(ctx: RunContext) -> int:
    """Fit ``A'`` and derive ``A`` for the configured potential."""
    cfg = ctx.config
    j_max = cfg.get_int("j_max")
    n_max = cfg.get_int("n_max")
    a_prime = fit_A_prime(j_max, n_max)
    p = cfg.potential()
    beta = cfg.get_float("beta")
    a_const = theorem_constant_a(a_prime, beta, p.declared_B)
    ctx.write_csv(["j_max", "n_max", "a_prime", "beta", "B", "a"], [[j_max, n_max, a_prime, beta, p.declared_B, a_const]])
    ctx.write_manifest({"a_prime": a_prime, "a": a_const})
    return EXIT_OK


COMMANDS: dict[str, Callable[[RunContext], int]] = {
    "counts": cmd_counts,
    "ursell": cmd_ursell,
    "cumulant": cmd_cumulant,
    "length": cmd_length,
    "series": cmd_series,
    "verify-theorem": cmd_verify_theorem,
    "gcmc": cmd_gcmc,
    "fit-a": cmd_fit_a,
}


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per experiment."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="key-value config file")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--samples", type=int, default=None, help="override Monte Carlo samples per order")
    common.add_argument("--eps", type=float, default=None, help="override eps (clears eps_sweep)")
    common.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    common.add_argument("--workers", type=int, default=None, help="worker processes")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(prog="chaoscluster", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=(fn.__doc__ or "").splitlines()[0])
        if name == "counts":
            p.add_argument("--k", type=int, default=None, help="largest vertex count")
        if name == "gcmc":
            p.add_argument("--chains", type=int, default=1, help="independent chains merged into one estimate")
        if name == "length":
            p.add_argument("--effort", choices=EFFORTS, default="bracket")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run the subcommand and return its exit code.

    Raises:
        ChaosClusterError: Propagated from the subcommand.

    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, force=True)
    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    overrides: dict[str, object] = {"seed": args.seed, "samples": args.samples, "eps": args.eps}
    config = config.with_overrides(**overrides)
    if args.eps is not None and "eps_sweep" in config.values:
        values = {k: v for k, v in config.values.items() if k != "eps_sweep"}
        config = ExperimentConfig(values, config.base_dir)
    ctx = RunContext(args.command, config, args)
    logger.info("chaoscluster %s (seed=%d)", args.command, ctx.seed)
    return COMMANDS[args.command](ctx)


def main(argv: Sequence[str] | None = None) -> int:
    """Console entry point mapping toolkit errors to exit codes."""
    try:
        return run(argv)
    except ConfigError as e:
        logger.error("configuration error: %s", e)  # noqa: TRY400
        return EXIT_CONFIG
    except ChaosClusterError as e:
        logger.error("%s: %s", type(e).__name__, e)  # noqa: TRY400
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
