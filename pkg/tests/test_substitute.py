import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blackbox_attack.models import LogisticRegression, TrainingConfig, mlp, train_sgd
from blackbox_attack.ndcore import SeededRng
from blackbox_attack.oracle import BudgetExhausted, OracleHandle, fingerprint
from blackbox_attack.substitute import (
    SubstituteBudgetExhausted,
    SubstituteConfig,
    augment,
    dedupe,
    periodic_step,
    predicted_query_count,
    reservoir_select,
    train_substitute,
    union,
)

FAST = TrainingConfig(epochs=2, learning_rate=0.1)


@pytest.fixture
def oracle_model(blobs):
    return train_sgd("logistic_regression", blobs, TrainingConfig(epochs=20, learning_rate=0.1, rng=SeededRng(3)))


def seeds_from(blobs, n, seed=11):
    return blobs.inputs[SeededRng(seed).permutation(len(blobs))[:n]]


# -- arithmetic ----------------------------------------------------------------


def test_query_count_examples():
    assert predicted_query_count(100, 6) == 6400
    assert predicted_query_count(150, 6) == 9600
    assert predicted_query_count(100, 10, 3, 400, rs_enabled=True) == 3600
    assert predicted_query_count(100, 9, 3, 400, rs_enabled=True) == 3200
    assert predicted_query_count(100, 0) == 100


def test_query_count_rejects_bad_reservoir():
    with pytest.raises(ValueError):
        predicted_query_count(100, 3, 3, 400, rs_enabled=True)
    with pytest.raises(ValueError):
        predicted_query_count(100, 3, rs_enabled=True)


@given(st.floats(0.01, 1.0), st.integers(1, 6), st.integers(0, 40))
def test_periodic_step_sign(lam, tau, rho):
    s = periodic_step(lam, tau, rho)
    assert abs(s) == lam
    assert (s > 0) == ((rho // tau) % 2 == 0)


def test_periodic_step_sequence():
    assert [periodic_step(0.1, 3, r) for r in range(8)] == [0.1] * 3 + [-0.1] * 3 + [0.1] * 2
    assert periodic_step(0.1, None, 5) == 0.1
    with pytest.raises(ValueError):
        periodic_step(0.1, 0, 1)


# -- reservoir ----------------------------------------------------------------


@given(st.integers(1, 60), st.integers(1, 80), st.integers(0, 10_000))
def test_reservoir_is_sorted_distinct_subset(kappa, n, seed):
    idx = reservoir_select(np.zeros((n, 1)), kappa, SeededRng(seed))
    assert len(idx) == min(kappa, n)
    assert np.all(np.diff(idx) > 0)
    assert idx.min() >= 0 and idx.max() < n


def test_reservoir_inclusion_is_uniform():
    # every index should be kept with probability kappa / n
    n, kappa, trials = 10, 3, 6000
    hits = np.zeros(n)
    rng = SeededRng(5)
    for t in range(trials):
        hits[reservoir_select(np.zeros((n, 1)), kappa, rng.child(t))] += 1
    expected = trials * kappa / n
    chi2 = np.sum((hits - expected) ** 2 / expected)
    assert chi2 < 27.9  # 99.9% quantile with 9 dof


def test_reservoir_is_deterministic():
    a = reservoir_select(np.zeros((50, 1)), 7, SeededRng(9))
    b = reservoir_select(np.zeros((50, 1)), 7, SeededRng(9))
    assert np.array_equal(a, b)


# -- augmentation ---------------------------------------------------------------


def test_augment_steps_along_label_row():
    F = LogisticRegression.create(4, 3, SeededRng(0))
    S = np.full((2, 4), 0.5)
    S[1, 0] = 0.2
    labels = np.array([0, 2])
    out = augment(F, S, labels, 0.1)
    assert out.shape == (4, 4)
    assert np.array_equal(out[:2], S)
    for i in range(2):
        row = F.jacobian(S[i])[labels[i]]
        assert np.allclose(out[2 + i], np.clip(S[i] + 0.1 * np.where(row > 0, 1, np.where(row < 0, -1, 0)), 0, 1))


def test_augment_accepts_label_dict():
    F = LogisticRegression.create(4, 3, SeededRng(0))
    S = SeededRng(1).uniform(size=(3, 4))
    labels = [1, 0, 2]
    d = {fingerprint(x): l for x, l in zip(S, labels)}
    assert np.array_equal(augment(F, S, d, 0.1), augment(F, S, labels, 0.1))


def test_augment_drops_collisions():
    # points at the box corner with a step pushing outward map to themselves
    F = LogisticRegression.create(3, 2, SeededRng(0))
    S = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
    J = F.jacobian(S[0])
    out = augment(F, S, [0, 0], 0.5)
    assert len(out) == len(dedupe(out))
    assert len(out) <= 4
    if np.all(J[0] <= 0):
        assert len(out) < 4


def test_augment_subset_only_spawns_from_subset():
    F = LogisticRegression.create(4, 3, SeededRng(0))
    S = SeededRng(2).uniform(0.2, 0.8, size=(5, 4))
    out = augment(F, S, [0, 1, 2, 0, 1], 0.1, subset=[1, 3])
    assert len(out) == 7
    assert np.array_equal(augment(F, S, [0] * 5, 0.1, subset=[]), S)


def test_union_and_dedupe():
    S = np.array([[0.1, 0.2], [0.3, 0.4]])
    C = np.array([[0.1, 0.2], [0.5, 0.5], [0.5, 0.5]])
    assert np.array_equal(union(S, C), np.array([[0.1, 0.2], [0.3, 0.4], [0.5, 0.5]]))
    assert len(dedupe(np.vstack([S, S]))) == 2


# -- full loop ------------------------------------------------------------------


def test_vanilla_query_count_matches_formula(blobs, oracle_model):
    h = OracleHandle.local(oracle_model)
    seeds = seeds_from(blobs, 10)
    run = train_substitute(h, seeds, SubstituteConfig(arch="LR", max_rho=3, inner_train=FAST, rng=SeededRng(1)))
    sizes = [r.set_size for r in run.history]
    # continuous synthetic inputs do not collide
    assert sizes == [10, 20, 40, 80]
    assert h.ledger.total_queries == predicted_query_count(10, 3) == run.history[-1].cumulative_queries
    assert [r.new_queries for r in run.history] == [10, 10, 20, 40]
    assert h.ledger.per_epoch == [10, 10, 20, 40]


def test_reservoir_query_count_matches_formula(blobs, oracle_model):
    h = OracleHandle.local(oracle_model)
    seeds = seeds_from(blobs, 8)
    cfg = SubstituteConfig(arch="LR", max_rho=5, sigma=2, kappa=6, inner_train=FAST, rng=SeededRng(1))
    run = train_substitute(h, seeds, cfg)
    assert h.ledger.total_queries == predicted_query_count(8, 5, 2, 6, rs_enabled=True) == 50
    assert [r.set_size for r in run.history] == [8, 16, 32, 38, 44, 50]


def test_network_substitute_and_holdout(blobs, oracle_model):
    arch = mlp(blobs.dim, blobs.classes, hidden=(16,))
    h = OracleHandle.local(oracle_model)
    run = train_substitute(h, seeds_from(blobs, 9), SubstituteConfig(arch=arch, max_rho=2, inner_train=FAST),
                           holdout=blobs.inputs)
    assert all(0 <= r.agreement <= 1 for r in run.history)
    # holdout labels go to the evaluation ledger, not the attack ledger
    assert h.ledger.total_queries == 36
    assert run.model.arch.id == arch.id


def test_run_is_deterministic(blobs, oracle_model):
    def go():
        h = OracleHandle.local(oracle_model)
        cfg = SubstituteConfig(arch="LR", max_rho=2, tau=1, inner_train=FAST, rng=SeededRng(4))
        return train_substitute(h, seeds_from(blobs, 6), cfg)

    a, b = go(), go()
    assert np.array_equal(a.S, b.S)
    assert np.array_equal(a.model.W, b.model.W)


def test_budget_exhaustion_keeps_partial_run(blobs, oracle_model):
    h = OracleHandle.local(oracle_model, budget=30)
    with pytest.raises(SubstituteBudgetExhausted) as ei:
        train_substitute(h, seeds_from(blobs, 10), SubstituteConfig(arch="LR", max_rho=3, inner_train=FAST))
    run = ei.value.run
    assert isinstance(ei.value, BudgetExhausted)
    assert run.failed and len(run.history) == 2
    assert h.ledger.total_queries == 30


def test_config_validation():
    with pytest.raises(ValueError):
        SubstituteConfig(lam=0)
    with pytest.raises(ValueError):
        SubstituteConfig(tau=0)
    with pytest.raises(ValueError):
        SubstituteConfig(max_rho=3, sigma=3, kappa=10)
    cfg = SubstituteConfig(max_rho=10).with_reservoir()
    assert (cfg.sigma, cfg.kappa) == (3, 400)
    assert cfg.describe()["kappa"] == 400


def test_seeds_validated(oracle_model):
    h = OracleHandle.local(oracle_model)
    with pytest.raises(ValueError):
        train_substitute(h, np.zeros((0, 8)), SubstituteConfig(arch="LR"))
    with pytest.raises(ValueError):
        train_substitute(h, np.full((2, 8), 1.5), SubstituteConfig(arch="LR"))
