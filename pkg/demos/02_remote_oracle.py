"""Attacking a model behind an HTTP label service with a query budget.

A victim is served on localhost. The attacker talks to it only through
``OracleHandle.remote``; the service answers ``{"label": k}`` and returns
429 once its budget is spent. The attack stops cleanly when that happens
and keeps the substitute trained so far.

    python3 demos/02_remote_oracle.py
"""

import numpy as np

from blackbox_attack import (
    BudgetExhausted,
    OracleHandle,
    SeededRng,
    SubstituteConfig,
    TrainingConfig,
    serve,
    synth_blobs,
    take_seed_set,
    train_sgd,
    train_substitute,
)
from blackbox_attack.substitute import SubstituteBudgetExhausted

rng = SeededRng(1)
data = synth_blobs(classes=3, dims=10, per_class=200, spread=0.1, rng=rng.child(0))
victim = train_sgd("logistic_regression", data, TrainingConfig(epochs=20, learning_rate=0.1, rng=rng.child(1)))
seeds, eval_set = take_seed_set(data, rng.child(2), n_total=10)
cfg = SubstituteConfig(arch="LR", max_rho=5, inner_train=TrainingConfig(epochs=20, learning_rate=0.1))

with serve(victim, "127.0.0.1:0", budget=100) as service:
    print(f"oracle service at {service.url} (server-side budget 100)")
    oracle = OracleHandle.remote(service.url)
    try:
        run = train_substitute(oracle, seeds, cfg)
    except SubstituteBudgetExhausted as e:
        run = e.run
        print(f"budget hit while labelling the set for rho={len(run.history)}: {e}")
    print(f"server counted {service.total_queries} queries, client ledger {oracle.ledger.total_queries}")
    for r in run.history:
        print(f"  rho={r.rho} |S|={r.set_size} cumulative queries={r.cumulative_queries}")

    # Labels already fetched are cached on the client, so asking again is free.
    try:
        oracle.batch_query(seeds)
        print("re-asking for the seed labels cost nothing:", oracle.ledger.total_queries)
        oracle.query_label(np.full(10, 0.5))
    except BudgetExhausted:
        print("a genuinely new input is refused: the service budget is spent")

agree = np.mean(run.model.predict(eval_set.inputs) == victim.predict(eval_set.inputs))
print(f"substitute from {len(run.history)} completed epochs agrees with the victim on {agree:.1%} of held-out points")
