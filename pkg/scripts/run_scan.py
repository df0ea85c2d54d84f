#!/usr/bin/env python3
"""Key rate versus loss for the measured system; writes scan.csv."""

import os
import sys

from qkdlab import cli

CONFIG = os.path.join(os.path.dirname(__file__), "..", "configs", "reference_75km.conf")

if __name__ == "__main__":
    sys.exit(
        cli.main(["--config", CONFIG, "scan", "--losses", "1:30:1", "--out", "scan.csv"])
    )
