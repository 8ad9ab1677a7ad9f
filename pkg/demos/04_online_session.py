"""
Stepping an online session by hand
==================================

Feed one cell's aging cycles to a session and watch the classification
settle on a training cell while the fusion weight ramps up.
"""

from slsoh import synth
from slsoh.fusion import FusionConfig, Session
from slsoh.harness import build_training_set, load_dataset, train_offline
from slsoh.io import RunConfig

fleet = synth.generate(synth.FleetSpec(seed=1))
ds = load_dataset(fleet.streams())
test_id = "cell_05"
train = [ds[c] for c in sorted(ds) if c != test_id]

model = train_offline(train, RunConfig())
training = build_training_set(train)
session = Session(model, training, FusionConfig(learn_alpha=1e-4), q0_z=ds[test_id].q0)

lo, hi = training.span
for cycle in ds[test_id].aging:
    if cycle.ah_ch < lo:
        session.prime(cycle)  # only supplies the predecessor features
        continue
    if cycle.ah_ch > hi:
        break
    est = session.step(cycle)
    if len(session.log) % 25 == 1:
        nearest = training.cell_ids[est.s_n - 1]
        print(
            f"Ah {est.ah:8.0f}  q_rg {est.q_rg:6.2f}  q_ct {est.q_ct:6.2f}  "
            f"w2 {est.w2:.2f}  q_hat {est.q_hat:6.2f}  truth {ds[test_id].truth_at(est.ah):6.2f}  "
            f"nearest {nearest}"
        )

same_group = [c for c in training.cell_ids if fleet[c].group == fleet[test_id].group]
print("training cells in the generating group:", same_group)
