"""A complete black-box attack on a toy problem, in a few seconds.

The "victim" is a small network trained on Gaussian blobs. The attacker
only sees labels: it starts from a dozen unlabeled points, grows a
substitute by Jacobian-based augmentation, crafts FGSM examples on the
substitute and checks how many of them also fool the victim.

    python3 demos/01_synthetic_walkthrough.py
"""

import numpy as np

from blackbox_attack import (
    OracleHandle,
    SeededRng,
    SubstituteConfig,
    TrainingConfig,
    fgsm_batch,
    success_rate,
    synth_blobs,
    take_seed_set,
    train_sgd,
    train_substitute,
    transferability,
)
from blackbox_attack.models import mlp
from blackbox_attack.substitute import predicted_query_count

rng = SeededRng(0)
data = synth_blobs(classes=4, dims=20, per_class=300, spread=0.12, rng=rng.child(0))
# blobs come class by class, so shuffle before splitting
order = rng.child(1).permutation(len(data))
train, test = data.subset(order[:800]), data.subset(order[800:])

victim = train_sgd(mlp(20, 4, hidden=(32, 32)), train, TrainingConfig(epochs=20, learning_rate=0.05, rng=rng.child(2)))
print(f"victim test accuracy: {np.mean(victim.predict(test.inputs) == test.labels):.3f}")

# The attacker holds 16 unlabeled points and may only ask for labels.
oracle = OracleHandle.local(victim)
seeds, eval_set = take_seed_set(test, rng.child(3), n_total=16)
cfg = SubstituteConfig(arch=mlp(20, 4, hidden=(32,)), max_rho=4, tau=2,
                       inner_train=TrainingConfig(epochs=20, learning_rate=0.05), rng=rng.child(4))
run = train_substitute(oracle, seeds, cfg, holdout=eval_set.inputs)

print("\nrho  |S|   queries  agreement")
for r in run.history:
    print(f"{r.rho:>3}  {r.set_size:>4}  {r.cumulative_queries:>7}  {r.agreement:.3f}")
print(f"predicted n*2^rho = {predicted_query_count(16, 4)}; points clamped onto an existing one are not re-queried")

F = run.model
print("\neps   substitute fooled   victim fooled")
for eps in (0.05, 0.1, 0.2, 0.3):
    batch = fgsm_batch(F, eval_set.inputs, F.predict(eval_set.inputs), eps, source_labels=eval_set.labels)
    print(f"{eps:<5} {success_rate(F, batch):>17.3f}   {transferability(oracle.evaluation_view(), batch):>13.3f}")
print(f"\nattack ledger: {oracle.ledger.total_queries} label queries")
