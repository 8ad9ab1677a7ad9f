"""
Leave-one-out on a synthetic fleet
==================================

Hold out each cell in turn, train the offline elastic-net model and the
training set on the other seven, then replay the held-out cell online.
"""

from slsoh import synth
from slsoh.harness import leave_one_out, load_dataset
from slsoh.io import RunConfig

ds = load_dataset(synth.generate(synth.FleetSpec(seed=0)).streams())
table = leave_one_out(ds, RunConfig())

print(f"{'cell':<10}{'adaptive %':>12}{'ENR %':>10}")
for cid, adaptive, enr_only in table.rows():
    print(f"{cid:<10}{adaptive:>12.3f}{enr_only:>10.3f}")
print(f"{'mean':<10}{table.mean_rmspe_adaptive:>12.3f}{table.mean_rmspe_enr:>10.3f}")

# the clustering estimate never strays further from the truth than the
# spread between the training cells' normalised curves allows
for f in table.folds:
    print(f"{f.cell_id}: clustering sup error {f.ct_error:.3f} Ah <= bound {f.bibo:.3f} Ah")
