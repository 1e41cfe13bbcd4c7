"""Command line entry point: sample graphs, run convergence/stability
sweeps, build the evaluation table, validate model files.

Exit codes: 0 success, 2 config error, 3 precondition violation,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import analysis, linkpred
from .config import (
    parse_converge_config,
    parse_sample_config,
    parse_stability_config,
    parse_table_config,
    write_manifest,
)
from .errors import ConfigError, NumericalError, PreconditionError, SpecValidationError
from .mpnn import graphsage_mpnn
from .node_mpnn import gmpnn_node
from .pair_mpnn import fixed_psi_mpnn, learnable_psi_mpnn
from .sbm import (
    graph_stats,
    isomorphic_block_pairs,
    read_spec_file,
    sample_graph,
    validate_sbm,
    write_edge_list,
)
from .util import default_jobs, format_float, write_csv

log = logging.getLogger("graphon_mpnn")


def _sweep_mpnn(cfg, mode):
    if mode in ("node_mean", "node_sum"):
        dims = [1] + [cfg.feature_dim] * cfg.layers
        return graphsage_mpnn(dims, update_hidden=cfg.update_hidden,
                              seed=cfg.net_seed)
    if mode == "pair_fixed":
        return fixed_psi_mpnn(cfg.layers)
    if mode == "pair_net":
        return learnable_psi_mpnn(cfg.layers, hidden=cfg.update_hidden,
                                  seed=cfg.net_seed)
    raise ConfigError(f"unknown mode {mode!r}")


def cmd_sample(args) -> int:
    cfg, text = parse_sample_config(args.config)
    graph = sample_graph(cfg.spec, cfg.n, cfg.seed)
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_edge_list(graph, os.path.join(cfg.out_dir, "edges.txt"),
                    os.path.join(cfg.out_dir, "blocks.txt"))
    write_manifest(cfg.out_dir, text, {"subcommand": "sample"})
    print(f"wrote {cfg.out_dir}/edges.txt ({len(graph.edge_list())} edges)")
    return 0


def cmd_converge(args) -> int:
    cfg, text = parse_converge_config(args.config)
    jobs = args.jobs if args.jobs else cfg.jobs
    mpnn = _sweep_mpnn(cfg, cfg.mode)
    records = analysis.convergence_sweep(cfg.spec, mpnn, cfg.mode, cfg.n_list,
                                         cfg.seeds, p=cfg.p, jobs=jobs)
    os.makedirs(cfg.out_dir, exist_ok=True)
    rows = [[r.mode, r.n, r.seed, format_float(r.delta), format_float(r.bound)]
            for r in records]
    write_csv(os.path.join(cfg.out_dir, "deltas.csv"),
              ["mode", "n", "seed", "delta", "bound"], rows)

    fit = analysis.loglog_slope(records)
    with_bounds = [r for r in records if r.bound is not None]
    validity = (
        float(np.mean([r.delta <= r.bound for r in with_bounds]))
        if with_bounds else None
    )
    summary = {
        "mode": cfg.mode,
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "bound_validity_frequency": validity,
    }
    with open(os.path.join(cfg.out_dir, "slope_summary.jsonl"), "w") as fh:
        fh.write(json.dumps(summary, sort_keys=True) + "\n")
    write_manifest(cfg.out_dir, text, {"subcommand": "converge"})
    print(f"mode={cfg.mode} slope={fit.slope:.4f} r2={fit.r_squared:.4f}")
    return 0


def cmd_stability(args) -> int:
    cfg, text = parse_stability_config(args.config)
    iso = isomorphic_block_pairs(cfg.spec)
    if not iso:
        raise PreconditionError("the model has no matched block pair")
    dims = [1] + [cfg.feature_dim] * cfg.layers
    mpnn = graphsage_mpnn(dims, update_hidden=cfg.update_hidden, seed=cfg.net_seed)
    gap_rows = []
    summary_rows = []
    for n in cfg.n_list:
        for seed in cfg.seeds:
            graph = sample_graph(cfg.spec, n, seed)
            stats = graph_stats(graph)
            emb = gmpnn_node(graph, stats, mpnn, init="degree")
            result = analysis.iso_gap_stats(emb, graph, iso,
                                            sample_budget=cfg.sample_budget,
                                            seed=seed)
            for kind, gaps in (("iso", result.gaps_iso),
                               ("non_iso", result.gaps_non_iso)):
                for g in gaps:
                    gap_rows.append([n, seed, kind, format_float(g)])
            summary_rows.append([
                n, seed,
                format_float(result.median_iso),
                format_float(result.median_non_iso),
            ])
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_csv(os.path.join(cfg.out_dir, "gaps.csv"),
              ["n", "seed", "kind", "gap"], gap_rows)
    write_csv(os.path.join(cfg.out_dir, "gap_medians.csv"),
              ["n", "seed", "median_iso", "median_non_iso"], summary_rows)
    write_manifest(cfg.out_dir, text, {"subcommand": "stability"})
    print(f"wrote {cfg.out_dir}/gaps.csv ({len(gap_rows)} rows)")
    return 0


def cmd_table(args) -> int:
    cfg, text = parse_table_config(args.config)
    jobs = args.jobs if args.jobs else cfg.jobs
    run_cfg = linkpred.RunTableConfig(
        spec=cfg.spec,
        n_train=cfg.n_train,
        n_test_ood=cfg.n_test_ood,
        runs=cfg.runs,
        seed=cfg.seed,
        methods=cfg.methods,
        scenarios=cfg.scenarios,
        epochs_head=cfg.epochs_head,
        epochs_end_to_end=cfg.epochs_end_to_end,
        lr=cfg.lr,
        pair_layers=cfg.pair_layers,
        k_list=cfg.k_list,
        jobs=jobs,
    )
    report = linkpred.run_table(run_cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_csv(os.path.join(cfg.out_dir, "table.csv"),
              ["scenario", "method", "metric", "mean", "std", "runs"],
              report.csv_rows())
    table_text = report.format_table()
    with open(os.path.join(cfg.out_dir, "table.txt"), "w") as fh:
        fh.write(table_text + "\n")
    write_manifest(cfg.out_dir, text, {"subcommand": "table"})
    print(table_text)
    return 0


def cmd_validate_spec(args) -> int:
    spec = read_spec_file(args.spec)
    report = validate_sbm(spec)
    print(f"d_min = {report.d_min!r}")
    print(f"d_cmin = {report.d_cmin!r}")
    print(f"node_use_ok = {report.node_use_ok}")
    print(f"pair_use_ok = {report.pair_use_ok}")
    for v in report.violations:
        print(f"violation: {v}")
    iso = isomorphic_block_pairs(spec)
    print(f"isomorphic_block_pairs = {iso}")
    if not report.ok:
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphon-mpnn",
        description="Block-model sampling, message-passing convergence "
                    "sweeps, and link-prediction evaluation.",
    )
    parser.add_argument("--jobs", type=int, default=0,
                        help="worker cap (default: value from config, else 1)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample a graph and dump edge list")
    p.add_argument("config")
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("converge", help="discrete-vs-continuous gap sweep")
    p.add_argument("config")
    p.set_defaults(fn=cmd_converge)

    p = sub.add_parser("stability", help="matched-block embedding gap histograms")
    p.add_argument("config")
    p.set_defaults(fn=cmd_stability)

    p = sub.add_parser("table", help="link-prediction evaluation table")
    p.add_argument("config")
    p.set_defaults(fn=cmd_table)

    p = sub.add_parser("validate-spec", help="check a model file")
    p.add_argument("spec")
    p.set_defaults(fn=cmd_validate_spec)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (PreconditionError, SpecValidationError) as exc:
        print(f"precondition violation: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
