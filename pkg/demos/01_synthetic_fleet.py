"""
A synthetic second-life fleet
=============================

Generate eight cells in two groups, look at their capacity curves and write
the raw telemetry in the CSV layout the rest of the package ingests.
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from slsoh import synth
from slsoh.harness import load_dataset
from slsoh.io import ingest

fleet = synth.generate(synth.FleetSpec(seed=0))

# capacity rises for a while (the seasonal hump) and then fades
for cell in fleet.cells:
    q = cell.q_c20
    peak = int(np.argmax(q))
    print(
        f"{cell.cell_id} group {cell.group + 1}: q0 {q[0]:.2f} Ah, "
        f"peak {q[peak]:.2f} Ah at {cell.rpt_ah[peak]:.0f} Ah, end {q[-1]:.2f} Ah"
    )

# group mates share the shape of the normalised curve; the aging-charge
# trajectories of different groups are kept apart by an offset
a, b = fleet.cells[0], fleet.cells[1]
grid = np.linspace(0, 10_000, 5)
print("group 1 Q_age:", np.round(a.q_age_true(grid), 2))
print("group 2 Q_age:", np.round(b.q_age_true(grid), 2))

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
fleet.write(out)
print("telemetry written to", out)

# reading it back and segmenting recovers the labels from the stream itself
ds = load_dataset(ingest(out))
cell = ds["cell_01"]
print(f"cell_01: {len(cell.aging)} aging cycles, {len(cell.truth)} C/20 labels")
print("max label error vs generator:", np.max(np.abs(cell.truth.values - fleet["cell_01"].q_c20)))
