#!/usr/bin/env python3
"""High-rate receiver projection: per-loss optimized scan out to 45 dB;
writes projection_scan.csv.  The last positive-rate row marks the
maximum tolerable channel loss."""

import os
import sys

from qkdlab import cli

CONFIG = os.path.join(os.path.dirname(__file__), "..", "configs", "projection.conf")

if __name__ == "__main__":
    sys.exit(
        cli.main(
            [
                "--config", CONFIG,
                "scan", "--losses", "1:45:1",
                "--optimize", "--free-p-z",
                "--out", "projection_scan.csv",
            ]
        )
    )
