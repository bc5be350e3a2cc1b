"""Sweep the minimum interaction duration and write plot-ready tables."""

import sys
import tempfile
from pathlib import Path

from _world import town

from pctree import Pipeline, RunConfig, run_sweep
from pctree.experiment import write_sweep

world, traj, _ = town(days=56)
reports = run_sweep(Pipeline(traj, world.store), "d_min", [600, 1200, 2400, 3600], RunConfig(), jobs=2)
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
for path in write_sweep(reports, out):
    print(f"== {path}")
    if path.suffix == ".dat":
        print(path.read_text())
