"""White-box versus black-box FGSM against two defenses (about 25 minutes).

Three victims trained on 10,000 MNIST images: adversarially trained with
eps=0.15 and eps=0.3, and defensively distilled at T=100. For each we
compare FGSM crafted on the victim itself (white box) with FGSM crafted on
a substitute the attacker trained through label queries (black box).

    python3 demos/04_defenses.py
"""

import numpy as np

from blackbox_attack import (
    AdvTrainConfig,
    DistillConfig,
    OracleHandle,
    SeededRng,
    SubstituteConfig,
    TrainingConfig,
    adversarial_train,
    distill_train,
    evaluate_defense,
    load_mnist,
    take_seed_set,
    train_substitute,
)

train, test = load_mnist("train").head(10000), load_mnist("test")
seeds, eval_set = take_seed_set(test, SeededRng(2), n_total=150)
X, y = eval_set.inputs[:2000], eval_set.labels[:2000]
base = TrainingConfig(epochs=6, rng=SeededRng(1))

victims = {
    "adv-train eps=0.15": adversarial_train("A", train, AdvTrainConfig(0.15, base)),
    "adv-train eps=0.3": adversarial_train("A", train, AdvTrainConfig(0.3, base)),
    # a softmax at T=100 shrinks parameter gradients by 100x, so the step
    # grows and training runs longer, until most input gradients underflow
    "distilled T=100": distill_train("A", train, DistillConfig(100.0, TrainingConfig(epochs=12, learning_rate=0.3, rng=SeededRng(1)))),
}

print(f"{'victim':<20} {'eps':>4} {'white box':>10} {'black box':>10}")
for name, model in victims.items():
    oracle = OracleHandle.local(model)
    F = train_substitute(oracle, seeds, SubstituteConfig(arch="A", tau=3, rng=SeededRng(3))).model
    for r in evaluate_defense(model, F, X, y, [0.3, 0.4]):
        print(f"{name:<20} {r.eps:>4} {r.o_to_o:>10.1%} {r.s_to_o:>10.1%}")
