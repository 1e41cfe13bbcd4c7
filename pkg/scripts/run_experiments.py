#!/usr/bin/env python3
"""Run the full experiment set (or a subset) from the bundled configs.

    python scripts/run_experiments.py            # everything
    python scripts/run_experiments.py converge   # the four gap sweeps
    python scripts/run_experiments.py table      # the evaluation table

Outputs land under ./out/<run-name>/ relative to the working directory.
"""

import sys
from pathlib import Path

from graphon_mpnn.cli import main as cli_main

CONFIG_DIR = Path(__file__).resolve().parent / "configs"

RUNS = {
    "converge": [
        ("converge", "converge_node_mean.cfg"),
        ("converge", "converge_node_sum.cfg"),
        ("converge", "converge_pair_fixed.cfg"),
        ("converge", "converge_pair_net.cfg"),
    ],
    "stability": [("stability", "stability.cfg")],
    "table": [("table", "table_desk.cfg")],
    "sample": [("sample", "sample_example.cfg")],
}


def main(argv):
    groups = argv or ["converge", "stability", "table"]
    for group in groups:
        if group not in RUNS:
            print(f"unknown group {group!r}; choose from {sorted(RUNS)}")
            return 2
    for group in groups:
        for subcommand, config in RUNS[group]:
            path = CONFIG_DIR / config
            print(f"== {subcommand} {config}")
            code = cli_main([subcommand, str(path)])
            if code != 0:
                return code
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
