"""The MNIST black-box attack at desk scale (roughly 10 minutes on one core).

1. Train the victim: architecture A on 20,000 MNIST training images.
2. The attacker takes 150 test images, drops their labels, and grows a
   substitute over 6 augmentation rounds (9,600 label queries), once with a
   fixed step and once with a periodic step (tau=3).
3. FGSM examples crafted on each substitute are sent to the victim.

Needs the MNIST IDX files in $MNIST_DIR or ~/data/mnist.

    python3 demos/03_mnist_blackbox.py [n_eval]
"""

import sys
import time

import numpy as np

from blackbox_attack import (
    OracleHandle,
    SeededRng,
    SubstituteConfig,
    TrainingConfig,
    fgsm_batch,
    load_mnist,
    take_seed_set,
    train_sgd,
    train_substitute,
    transferability,
)

n_eval = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
train, test = load_mnist("train").head(20000), load_mnist("test")

t = time.time()
victim = train_sgd("A", train, TrainingConfig(epochs=6, rng=SeededRng(1)))
print(f"victim: {np.mean(victim.predict(test.inputs) == test.labels):.2%} test accuracy ({time.time() - t:.0f}s)")

seeds, eval_set = take_seed_set(test, SeededRng(2), n_total=150)
X, y = eval_set.inputs[:n_eval], eval_set.labels[:n_eval]

for name, tau in (("fixed step", None), ("periodic step", 3)):
    oracle = OracleHandle.local(victim)
    t = time.time()
    run = train_substitute(oracle, seeds, SubstituteConfig(arch="A", tau=tau, rng=SeededRng(3)), holdout=X)
    F = run.model
    print(f"\n{name}: {oracle.ledger.total_queries} queries, {time.time() - t:.0f}s")
    print("  agreement by rho:", " ".join(f"{r.agreement:.3f}" for r in run.history))
    labels = F.predict(X)  # the attacker's own guess at each label
    for eps in (0.1, 0.2, 0.3, 0.4):
        batch = fgsm_batch(F, X, labels, eps, source_labels=y)
        print(f"  eps={eps}: victim misclassifies {transferability(oracle.evaluation_view(), batch):.1%}")
