"""
Sensitivity to the learning rate
================================

The fusion weight of the clustering estimate grows as ``alpha * Ah`` until it
reaches one half. Sweep alpha over three ranges and watch the RMSE: zero
reproduces the pure regression, and every alpha that saturates from the first
cycle gives the same answer.
"""

from slsoh import synth
from slsoh.harness import PAPER_ALPHA_RANGES, alpha_sweep, load_dataset

ds = load_dataset(synth.generate(synth.FleetSpec(seed=0)).streams())
test_cell = "cell_03"

for name, alphas in PAPER_ALPHA_RANGES.items():
    print(f"range {name}")
    for alpha, rmse in alpha_sweep(ds, test_cell, alphas):
        print(f"  alpha={alpha:<10.3g} RMSE={rmse:.4f} Ah")
