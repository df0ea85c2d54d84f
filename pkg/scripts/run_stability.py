#!/usr/bin/env python3
"""48-hour back-to-back stability run; writes stability.csv.

Pass --pulses-per-window to trade statistics for runtime (the default
window at full repetition rate is 2.5e8 pulses and takes a while).
"""

import os
import sys

from qkdlab import cli

CONFIG = os.path.join(os.path.dirname(__file__), "..", "configs", "back_to_back.conf")

if __name__ == "__main__":
    args = sys.argv[1:] or ["--pulses-per-window", "1000000"]
    sys.exit(cli.main(["--config", CONFIG, "stability", "--out", "stability.csv", *args]))
